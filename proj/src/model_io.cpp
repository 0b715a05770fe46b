#include <bit>
#include <cstring>
#include <fstream>
#include <iterator>

#include <zlib.h>

#include "slp/symbolic.hpp"

namespace slp {

namespace {

constexpr std::array<std::uint8_t, 4> kMagic{'S', 'Y', 'L', 'P'};
constexpr std::uint32_t kVersion = 1;

class ByteWriter {
 public:
  template <typename T>
  void put(T value) {
    std::uint64_t bits;
    if constexpr (std::is_same_v<T, double>) {
      bits = std::bit_cast<std::uint64_t>(value);
    } else {
      bits = static_cast<std::uint64_t>(value);
    }
    for (std::size_t i = 0; i < sizeof(T); ++i) bytes.push_back(static_cast<std::uint8_t>(bits >> (8 * i)));
  }

  std::vector<std::uint8_t> bytes;
};

class ByteReader {
 public:
  ByteReader(const std::uint8_t* data, std::size_t size) : data_(data), size_(size) {}

  template <typename T>
  T get() {
    if (size_ - pos_ < sizeof(T)) throw FormatError("model file truncated");
    std::uint64_t bits = 0;
    for (std::size_t i = 0; i < sizeof(T); ++i) bits |= static_cast<std::uint64_t>(data_[pos_ + i]) << (8 * i);
    pos_ += sizeof(T);
    if constexpr (std::is_same_v<T, double>) {
      return std::bit_cast<double>(bits);
    } else {
      return static_cast<T>(bits);
    }
  }

  std::size_t remaining() const { return size_ - pos_; }

 private:
  const std::uint8_t* data_;
  std::size_t size_;
  std::size_t pos_ = 0;
};

std::uint32_t crc32_of(const std::uint8_t* data, std::size_t size) {
  uLong crc = crc32(0L, Z_NULL, 0);
  while (size > 0) {
    const auto chunk = static_cast<uInt>(std::min<std::size_t>(size, 1u << 30));
    crc = crc32(crc, data, chunk);
    data += chunk;
    size -= chunk;
  }
  return static_cast<std::uint32_t>(crc);
}

}  // namespace

std::vector<std::uint8_t> serialize_model(const SymbolicModel& model) {
  ByteWriter w;
  w.bytes.reserve(64 + model.L.entries.size() * 15 + model.Q.entries.size() * 20);
  for (auto c : kMagic) w.put<std::uint8_t>(c);
  w.put<std::uint32_t>(kVersion);
  w.put<std::uint32_t>(static_cast<std::uint32_t>(model.n()));
  w.put<std::uint64_t>(static_cast<std::uint64_t>(model.samples));
  w.put<std::uint32_t>(static_cast<std::uint32_t>(model.l()));
  w.put<std::uint64_t>(model.Q.pair_count());
  w.put<std::uint32_t>(static_cast<std::uint32_t>(model.retained));
  w.put<std::uint32_t>(static_cast<std::uint32_t>(model.spec.side));
  w.put<std::uint32_t>(static_cast<std::uint32_t>(model.spec.stride));
  for (int i = 0; i < 6; ++i) {
    w.put<double>(model.ranges.lo(i));
    w.put<double>(model.ranges.hi(i));
  }
  w.put<std::uint64_t>(model.seed);
  w.put<double>(model.tr_ppt);

  w.put<std::uint64_t>(model.L.entries.size());
  for (const auto& e : model.L.entries) {
    w.put<std::uint8_t>(e.a);
    w.put<std::uint16_t>(e.b);
    w.put<std::uint32_t>(e.d);
    w.put<double>(e.v);
  }
  w.put<std::uint64_t>(model.Q.entries.size());
  const auto l = static_cast<std::uint64_t>(model.l());
  for (const auto& e : model.Q.entries) {
    w.put<std::uint16_t>(e.b1);
    w.put<std::uint16_t>(e.b2);
    w.put<std::uint64_t>(QuadraticTensor::pair_index(e.d1, e.d2, l));
    w.put<double>(e.v);
  }
  w.put<std::uint32_t>(crc32_of(w.bytes.data(), w.bytes.size()));
  return std::move(w.bytes);
}

SymbolicModel deserialize_model(const std::vector<std::uint8_t>& bytes) {
  if (bytes.size() < kMagic.size() + 8) throw FormatError("model file truncated");
  if (!std::equal(kMagic.begin(), kMagic.end(), bytes.begin())) throw FormatError("bad magic, not a model file");
  const std::size_t body = bytes.size() - 4;
  ByteReader crc_reader(bytes.data() + body, 4);
  if (crc_reader.get<std::uint32_t>() != crc32_of(bytes.data(), body)) throw FormatError("checksum mismatch");

  ByteReader r(bytes.data() + kMagic.size(), body - kMagic.size());
  if (r.get<std::uint32_t>() != kVersion) throw FormatError("unsupported model version");
  SymbolicModel model;
  const auto n = r.get<std::uint32_t>();
  model.samples = static_cast<Eigen::Index>(r.get<std::uint64_t>());
  const auto l = r.get<std::uint32_t>();
  const auto q = r.get<std::uint64_t>();
  model.retained = static_cast<int>(r.get<std::uint32_t>());
  model.spec.side = static_cast<int>(r.get<std::uint32_t>());
  model.spec.stride = static_cast<int>(r.get<std::uint32_t>());
  for (int i = 0; i < 6; ++i) {
    model.ranges.lo(i) = r.get<double>();
    model.ranges.hi(i) = r.get<double>();
  }
  model.seed = r.get<std::uint64_t>();
  model.tr_ppt = r.get<double>();

  try {
    model.spec.validate();
    model.bbox = compute_bbox(model.spec, model.ranges);
  } catch (const std::invalid_argument& e) {
    throw FormatError(std::string("inconsistent header: ") + e.what());
  }
  if (static_cast<std::uint32_t>(model.spec.count()) != n || static_cast<std::uint32_t>(model.bbox.count()) != l ||
      q != static_cast<std::uint64_t>(l) * (l + 1) / 2) {
    throw FormatError("inconsistent header dimensions");
  }
  model.L.n = model.Q.n = n;
  model.L.l = model.Q.l = l;

  const auto nl = r.get<std::uint64_t>();
  if (nl > r.remaining() / 15) throw FormatError("model file truncated");
  model.L.entries.resize(nl);
  for (auto& e : model.L.entries) {
    e.a = r.get<std::uint8_t>();
    e.b = r.get<std::uint16_t>();
    e.d = r.get<std::uint32_t>();
    e.v = r.get<double>();
    if (e.a >= 6 || e.b >= n || e.d >= l) throw FormatError("L entry index out of range");
  }
  const auto nq = r.get<std::uint64_t>();
  if (nq > r.remaining() / 20) throw FormatError("model file truncated");
  model.Q.entries.resize(nq);
  for (auto& e : model.Q.entries) {
    e.b1 = r.get<std::uint16_t>();
    e.b2 = r.get<std::uint16_t>();
    const auto pe = r.get<std::uint64_t>();
    e.v = r.get<double>();
    if (e.b1 > e.b2 || e.b2 >= n || pe >= q) throw FormatError("Q entry index out of range");
    std::tie(e.d1, e.d2) = QuadraticTensor::pair_from_index(pe, l);
  }
  if (r.remaining() != 0) throw FormatError("trailing bytes in model file");
  if (model.retained > 0) {
    if (!model.spec.dense() || model.retained > model.spec.count()) throw FormatError("invalid DCT settings");
    model.dct = build_dct_mapping(model.spec.side, model.retained);
  }
  return model;
}

void save_model(const SymbolicModel& model, const std::filesystem::path& path) {
  const std::vector<std::uint8_t> bytes = serialize_model(model);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path.string());
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw IoError("write failed for " + path.string());
}

SymbolicModel load_model(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  const std::vector<std::uint8_t> bytes{std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
  return deserialize_model(bytes);
}

}  // namespace slp
