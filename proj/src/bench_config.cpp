#include <algorithm>
#include <charconv>
#include <fstream>
#include <functional>
#include <sstream>

#include "slp/bench.hpp"
#include "slp/errors.hpp"

namespace slp {

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

template <typename T>
T parse_number(const std::string& key, const std::string& text) {
  T value{};
  const char* first = text.data();
  const char* last = text.data() + text.size();
  const auto [ptr, ec] = std::from_chars(first, last, value);
  if (ec != std::errc() || ptr != last) throw ConfigError("bad value for " + key + ": '" + text + "'");
  return value;
}

std::vector<MethodSpec> parse_methods(const std::string& text) {
  std::vector<MethodSpec> out;
  std::stringstream ss(text);
  std::string tok;
  while (std::getline(ss, tok, ',')) {
    tok = trim(tok);
    if (tok.empty()) continue;
    const MethodSpec spec = MethodSpec::parse(tok);
    if (std::find(out.begin(), out.end(), spec) == out.end()) out.push_back(spec);
  }
  if (out.empty()) throw ConfigError("methods: empty list");
  return out;
}

using Setter = std::function<void(BenchConfig&, const std::string&, const std::string&)>;

template <typename T, typename M>
Setter number(M BenchConfig::*field) {
  return [field](BenchConfig& c, const std::string& k, const std::string& v) {
    c.*field = static_cast<M>(parse_number<T>(k, v));
  };
}

const std::vector<std::pair<std::string, Setter>>& setters() {
  static const std::vector<std::pair<std::string, Setter>> table = {
      {"image", [](BenchConfig& c, const std::string&, const std::string& v) { c.image = v; }},
      {"texture_seed", number<std::uint64_t>(&BenchConfig::texture_seed)},
      {"side", number<int>(&BenchConfig::side)},
      {"stride", number<int>(&BenchConfig::stride)},
      {"m", number<long long>(&BenchConfig::m)},
      {"test_warps", number<int>(&BenchConfig::test_warps)},
      {"train_translation", number<double>(&BenchConfig::train_translation)},
      {"train_deformation", number<double>(&BenchConfig::train_deformation)},
      {"test_translation", number<double>(&BenchConfig::test_translation)},
      {"test_deformation", number<double>(&BenchConfig::test_deformation)},
      {"methods", [](BenchConfig& c, const std::string&, const std::string& v) { c.methods = parse_methods(v); }},
      {"train_seed", number<std::uint64_t>(&BenchConfig::train_seed)},
      {"test_seed", number<std::uint64_t>(&BenchConfig::test_seed)},
      {"energy_iterations", number<int>(&BenchConfig::energy_iterations)},
      {"energy_tol", number<double>(&BenchConfig::energy_tol)},
      {"lp_iterations", number<int>(&BenchConfig::lp_iterations)},
      {"max_corners", number<int>(&BenchConfig::max_corners)},
      {"min_score", number<double>(&BenchConfig::min_score)},
      {"noise_sigma", number<double>(&BenchConfig::noise_sigma)},
      {"threads", number<int>(&BenchConfig::threads)},
      {"timing_repeats", number<int>(&BenchConfig::timing_repeats)},
      {"output", [](BenchConfig& c, const std::string&, const std::string& v) { c.output = v; }},
  };
  return table;
}

}  // namespace

MethodSpec MethodSpec::parse(const std::string& tag) {
  static const std::pair<const char*, Kind> plain[] = {
      {"iclk", Kind::iclk}, {"esm", Kind::esm}, {"jd", Kind::jd}, {"hp", Kind::hp}, {"sym", Kind::sym}};
  for (const auto& [name, kind] : plain) {
    if (tag == name) return MethodSpec{kind, 0};
  }
  static const std::pair<const char*, Kind> reduced[] = {
      {"dct-", Kind::dct}, {"hpdct-", Kind::hpdct}, {"symdct-", Kind::symdct}};
  for (const auto& [prefix, kind] : reduced) {
    const std::string p = prefix;
    if (tag.rfind(p, 0) == 0) {
      const int r = parse_number<int>("methods", tag.substr(p.size()));
      if (r < 1) throw ConfigError("methods: retained count must be positive in '" + tag + "'");
      return MethodSpec{kind, r};
    }
  }
  throw ConfigError("unknown method '" + tag + "'");
}

std::string MethodSpec::name() const {
  switch (kind) {
    case Kind::iclk: return "iclk";
    case Kind::esm: return "esm";
    case Kind::jd: return "jd";
    case Kind::dct: return "dct-" + std::to_string(retained);
    case Kind::hp: return "hp";
    case Kind::hpdct: return "hpdct-" + std::to_string(retained);
    case Kind::sym: return "sym";
    case Kind::symdct: return "symdct-" + std::to_string(retained);
  }
  return "?";
}

BenchConfig::BenchConfig()
    : methods(parse_methods("iclk,esm,jd,dct-25,hp,hpdct-25,sym,symdct-25")) {}

void BenchConfig::validate() const {
  try {
    PatchSpec{side, stride}.validate();
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }
  if (m < 7) throw ConfigError("m must be at least 7");
  if (test_warps < 1) throw ConfigError("test_warps must be positive");
  if (train_translation < 0 || train_deformation < 0 || test_translation < 0 || test_deformation < 0) {
    throw ConfigError("warp ranges must be non-negative");
  }
  if (train_deformation >= 0.5 || test_deformation >= 0.5) throw ConfigError("deformation range must be < 0.5");
  if (!train_ranges().contains_ranges(test_ranges())) {
    throw ConfigError("test ranges must lie inside the training ranges");
  }
  if (methods.empty()) throw ConfigError("no methods configured");
  const int n = PatchSpec{side, stride}.count();
  for (const MethodSpec& ms : methods) {
    if (ms.uses_dct()) {
      if (stride != 1) throw ConfigError(ms.name() + " needs a dense patch (stride 1)");
      if (ms.retained > n) throw ConfigError(ms.name() + ": retained count exceeds patch size");
    }
  }
  if (energy_iterations < 1 || lp_iterations < 1) throw ConfigError("iteration counts must be positive");
  if (energy_tol < 0) throw ConfigError("energy_tol must be non-negative");
  if (max_corners < 1) throw ConfigError("max_corners must be positive");
  if (noise_sigma < 0) throw ConfigError("noise_sigma must be non-negative");
  if (threads < 0) throw ConfigError("threads must be non-negative");
  if (timing_repeats < 1) throw ConfigError("timing_repeats must be positive");
  if (image.empty()) throw ConfigError("image must be set");
}

const std::vector<std::string>& config_keys() {
  static const std::vector<std::string> keys = [] {
    std::vector<std::string> k;
    for (const auto& [name, _] : setters()) k.push_back(name);
    return k;
  }();
  return keys;
}

ConfigMap parse_config_text(const std::string& text) {
  ConfigMap map;
  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.resize(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw ConfigError("line " + std::to_string(lineno) + ": expected key = value");
    const std::string key = trim(line.substr(0, eq));
    if (key.empty()) throw ConfigError("line " + std::to_string(lineno) + ": empty key");
    map[key] = trim(line.substr(eq + 1));
  }
  return map;
}

ConfigMap parse_config_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot open config file " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_config_text(ss.str());
}

BenchConfig config_from_map(const ConfigMap& map) {
  BenchConfig config;
  for (const auto& [key, value] : map) {
    const auto& table = setters();
    const auto it = std::find_if(table.begin(), table.end(), [&](const auto& e) { return e.first == key; });
    if (it == table.end()) throw ConfigError("unknown config key '" + key + "'");
    it->second(config, key, value);
  }
  config.validate();
  return config;
}

}  // namespace slp
