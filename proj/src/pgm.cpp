#include <cctype>
#include <cmath>
#include <fstream>
#include <iterator>
#include <string>
#include <vector>

#include "slp/imaging.hpp"

namespace slp {

namespace {

class HeaderReader {
 public:
  explicit HeaderReader(const std::vector<unsigned char>& bytes) : bytes_(bytes) {}

  long next_int() {
    skip_space_and_comments();
    if (pos_ >= bytes_.size() || !std::isdigit(bytes_[pos_])) throw ParseError("PGM header: expected integer");
    long v = 0;
    while (pos_ < bytes_.size() && std::isdigit(bytes_[pos_])) {
      v = v * 10 + (bytes_[pos_++] - '0');
      if (v > 1'000'000'000L) throw ParseError("PGM header: integer too large");
    }
    return v;
  }

  /// The raster starts after exactly one whitespace byte following maxval.
  std::size_t raster_start() {
    if (pos_ >= bytes_.size() || !std::isspace(bytes_[pos_])) throw ParseError("PGM header: missing separator");
    return pos_ + 1;
  }

  std::size_t pos_ = 2;

 private:
  void skip_space_and_comments() {
    while (pos_ < bytes_.size()) {
      if (std::isspace(bytes_[pos_])) {
        ++pos_;
      } else if (bytes_[pos_] == '#') {
        while (pos_ < bytes_.size() && bytes_[pos_] != '\n') ++pos_;
      } else {
        break;
      }
    }
  }

  const std::vector<unsigned char>& bytes_;
};

}  // namespace

Image load_pgm(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  const std::vector<unsigned char> bytes{std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
  if (bytes.size() < 2 || bytes[0] != 'P' || bytes[1] != '5') throw ParseError("not a binary PGM (P5) file");

  HeaderReader hdr(bytes);
  const long width = hdr.next_int();
  const long height = hdr.next_int();
  const long maxval = hdr.next_int();
  if (width <= 0 || height <= 0) throw ParseError("PGM: non-positive dimensions");
  if (maxval <= 0 || maxval > 65535) throw ParseError("PGM: maxval out of range");
  const std::size_t start = hdr.raster_start();
  const std::size_t bps = maxval > 255 ? 2 : 1;
  const std::size_t need = static_cast<std::size_t>(width) * static_cast<std::size_t>(height) * bps;
  if (bytes.size() - start < need) throw ParseError("PGM: truncated raster");

  Image::Storage data(height, width);
  const double scale = 1.0 / static_cast<double>(maxval);
  const unsigned char* p = bytes.data() + start;
  for (Eigen::Index i = 0; i < data.size(); ++i) {
    unsigned v = bps == 2 ? (unsigned(p[2 * i]) << 8) | p[2 * i + 1] : p[i];
    if (v > static_cast<unsigned>(maxval)) throw ParseError("PGM: sample exceeds maxval");
    data.data()[i] = v * scale;
  }
  return Image(std::move(data));
}

void save_pgm(const Image& img, const std::filesystem::path& path, int maxval) {
  if (maxval <= 0 || maxval > 65535) throw std::invalid_argument("PGM maxval must be in [1, 65535]");
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path.string());
  out << "P5\n" << img.width() << ' ' << img.height() << '\n' << maxval << '\n';
  std::vector<unsigned char> raster;
  raster.reserve(static_cast<std::size_t>(img.data().size()) * (maxval > 255 ? 2 : 1));
  for (Eigen::Index i = 0; i < img.data().size(); ++i) {
    const auto v = static_cast<unsigned>(std::lround(img.data().data()[i] * maxval));
    if (maxval > 255) raster.push_back(static_cast<unsigned char>(v >> 8));
    raster.push_back(static_cast<unsigned char>(v & 0xFF));
  }
  out.write(reinterpret_cast<const char*>(raster.data()), static_cast<std::streamsize>(raster.size()));
  if (!out) throw IoError("write failed for " + path.string());
}

}  // namespace slp
