#include "pmd/io.hpp"

#include <array>
#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

#include "pmd/detail/binary.hpp"

namespace pmd {

namespace detail {

std::vector<std::uint8_t> read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open " + path.string());
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void write_file(const std::filesystem::path& path, std::span<const std::uint8_t> bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("cannot write " + path.string());
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw Error("write failed for " + path.string());
}

}  // namespace detail

namespace io {

namespace {

constexpr std::string_view kDepthMagic = "PMDP";
constexpr std::uint32_t kDepthVersion = 1;

}  // namespace

std::vector<std::uint8_t> encode_depth(const DepthMap& z) {
  detail::ByteWriter w;
  w.reserve(17 + z.size() * 5);
  w.magic(kDepthMagic);
  w.u32(kDepthVersion);
  w.u32(static_cast<std::uint32_t>(z.height()));
  w.u32(static_cast<std::uint32_t>(z.width()));
  w.u8(z.has_validity() ? 1 : 0);
  for (double v : z.values()) w.f32(static_cast<float>(v));
  for (auto b : z.validity()) w.u8(b ? 1 : 0);
  return std::move(w).take();
}

DepthMap decode_depth(std::span<const std::uint8_t> bytes) {
  detail::ByteReader r(bytes);
  r.expect_magic(kDepthMagic, "depth file");
  const std::size_t version_at = r.offset();
  const std::uint32_t version = r.u32("version");
  if (version != kDepthVersion) {
    throw VersionError("unsupported depth file version " + std::to_string(version), version_at);
  }
  const std::size_t h = r.u32("height"), w = r.u32("width");
  const std::size_t flag_at = r.offset();
  const std::uint8_t flag = r.u8("mask flag");
  if (flag > 1) throw FormatError("mask flag must be 0 or 1", flag_at);
  const std::size_t n = h * w;
  r.need(n * 4 + (flag ? n : 0), "depth payload");
  std::vector<double> values(n);
  for (auto& v : values) {
    const std::size_t at = r.offset();
    v = r.f32("depth payload");
    if (!std::isfinite(v)) throw FormatError("non-finite depth value", at);
  }
  DepthMap z(h, w, std::move(values));
  if (flag) {
    std::vector<std::uint8_t> valid(n);
    for (auto& b : valid) {
      const std::size_t at = r.offset();
      b = r.u8("validity mask");
      if (b > 1) throw FormatError("validity mask bytes must be 0 or 1", at);
    }
    z.set_validity(std::move(valid));
  }
  if (r.remaining() != 0) throw FormatError("trailing bytes after depth payload", r.offset());
  return z;
}

void save_depth(const DepthMap& z, const std::filesystem::path& path) { detail::write_file(path, encode_depth(z)); }

DepthMap load_depth(const std::filesystem::path& path) { return decode_depth(detail::read_file(path)); }

BinaryMask mask_from_depth(const DepthMap& z) {
  BinaryMask m(z.height(), z.width());
  for (std::size_t y = 0; y < z.height(); ++y) {
    for (std::size_t x = 0; x < z.width(); ++x) m.set(y, x, z(y, x) != 0.0);
  }
  return m;
}

DepthMap depth_from_mask(const BinaryMask& m) {
  DepthMap z(m.height(), m.width());
  for (std::size_t i = 0; i < m.size(); ++i) z[i] = m[i] ? 1.0 : 0.0;
  return z;
}

namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

std::vector<std::string_view> split_csv(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  for (std::size_t i = 0; i <= line.size(); ++i) {
    if (i == line.size() || line[i] == ',') {
      out.push_back(trim(line.substr(start, i - start)));
      start = i + 1;
    }
  }
  return out;
}

template <class T>
T parse_number(std::string_view s, std::size_t offset, const char* what) {
  T v{};
  auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc{} || p != s.data() + s.size()) throw FormatError(std::string("bad ") + what, offset);
  return v;
}

// Calls f(line, offset) for each non-empty line after the header.
template <class F>
void for_each_row(const std::string& text, std::string_view header, F&& f) {
  std::size_t pos = 0;
  bool first = true;
  while (pos <= text.size()) {
    std::size_t end = text.find('\n', pos);
    if (end == std::string::npos) end = text.size();
    const std::string_view line = trim(std::string_view(text).substr(pos, end - pos));
    if (first) {
      if (line != header) throw FormatError("expected header \"" + std::string(header) + "\"", pos);
      first = false;
    } else if (!line.empty()) {
      f(line, pos);
    }
    if (end == text.size()) break;
    pos = end + 1;
  }
  if (first) throw FormatError("missing header \"" + std::string(header) + "\"", 0);
}

}  // namespace

SparseMeasurements parse_measurements(const std::string& text, std::size_t height, std::size_t width,
                                      MeasurementPattern pattern) {
  std::vector<Measurement> pts;
  for_each_row(text, "row,col,depth", [&](std::string_view line, std::size_t at) {
    const auto f = split_csv(line);
    if (f.size() != 3) throw FormatError("expected 3 fields", at);
    pts.push_back({parse_number<std::size_t>(f[0], at, "row"), parse_number<std::size_t>(f[1], at, "col"),
                   parse_number<double>(f[2], at, "depth")});
  });
  return SparseMeasurements(height, width, std::move(pts), pattern);
}

SparseMeasurements load_measurements(const std::filesystem::path& path, std::size_t height, std::size_t width,
                                     MeasurementPattern pattern) {
  return parse_measurements(read_text(path), height, width, pattern);
}

std::string format_measurements(const SparseMeasurements& m) {
  std::ostringstream out;
  out.precision(9);
  out << "row,col,depth\n";
  for (const auto& p : m.points()) out << p.row << ',' << p.col << ',' << p.depth << '\n';
  return out.str();
}

std::string format_points(const std::vector<Pixel>& points) {
  std::ostringstream out;
  out << "row,col\n";
  for (const auto& p : points) out << p.row << ',' << p.col << '\n';
  return out.str();
}

char ordinal_symbol(Ordinal o) {
  switch (o) {
    case Ordinal::a_closer: return '<';
    case Ordinal::equal: return '=';
    case Ordinal::b_closer: return '>';
  }
  return '?';
}

std::vector<Ordinal> parse_ordinals(const std::string& text) {
  std::vector<Ordinal> out;
  for_each_row(text, "relation", [&](std::string_view line, std::size_t at) {
    if (line == "<") out.push_back(Ordinal::a_closer);
    else if (line == "=") out.push_back(Ordinal::equal);
    else if (line == ">") out.push_back(Ordinal::b_closer);
    else throw FormatError("relation must be one of < = >", at);
  });
  return out;
}

std::string format_ordinals(const std::vector<Ordinal>& v) {
  std::string out = "relation\n";
  for (auto o : v) {
    out += ordinal_symbol(o);
    out += '\n';
  }
  return out;
}

namespace {

template <class F>
auto guarded(const char* what, F&& f) {
  try {
    return f();
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("invalid ") + what + ": " + e.what());
  }
}

}  // namespace

SceneSpec scene_from_json(const nlohmann::json& j) {
  return guarded("scene spec", [&] {
    SceneSpec s;
    s.height = j.at("height").get<std::size_t>();
    s.width = j.at("width").get<std::size_t>();
    if (j.contains("depth_range")) {
      const auto r = j.at("depth_range").get<std::array<double, 2>>();
      s.min_depth = r[0];
      s.max_depth = r[1];
    }
    s.seed = j.value("seed", std::uint64_t{0});
    if (j.contains("layout")) {
      for (const auto& p : j.at("layout")) {
        PlanarRect r;
        r.top = p.value("top", std::size_t{0});
        r.left = p.value("left", std::size_t{0});
        r.height = p.at("height").get<std::size_t>();
        r.width = p.at("width").get<std::size_t>();
        r.depth = p.at("depth").get<double>();
        r.tilt_x = p.value("tilt_x", 0.0);
        r.tilt_y = p.value("tilt_y", 0.0);
        s.layout.push_back(r);
      }
    } else if (j.contains("random_planes")) {
      const SceneSpec gen = random_scene(s.height, s.width, s.seed, j.at("random_planes").get<std::size_t>(),
                                         s.min_depth, s.max_depth);
      s.layout = gen.layout;
    }
    return s;
  });
}

nlohmann::json to_json(const SceneSpec& s) {
  nlohmann::json layout = nlohmann::json::array();
  for (const auto& r : s.layout) {
    layout.push_back({{"top", r.top},
                      {"left", r.left},
                      {"height", r.height},
                      {"width", r.width},
                      {"depth", r.depth},
                      {"tilt_x", r.tilt_x},
                      {"tilt_y", r.tilt_y}});
  }
  return {{"height", s.height},
          {"width", s.width},
          {"depth_range", {s.min_depth, s.max_depth}},
          {"seed", s.seed},
          {"layout", layout}};
}

SamplerConfig sampler_from_json(const nlohmann::json& j) {
  return guarded("sampler config", [&] {
    SamplerConfig c;
    if (j.contains("preset")) {
      const auto p = j.at("preset").get<std::string>();
      if (p == "ambiguous") c = SamplerConfig::ambiguous();
      else if (p == "noiseless") c = SamplerConfig::noiseless();
      else if (p != "default") throw ConfigError("unknown sampler preset \"" + p + "\"");
    }
    c.noise_sigma = j.value("noise_sigma", c.noise_sigma);
    c.offset_sigma = j.value("offset_sigma", c.offset_sigma);
    c.tilt_sigma = j.value("tilt_sigma", c.tilt_sigma);
    c.ambiguity_probability = j.value("ambiguity_probability", c.ambiguity_probability);
    c.ambiguity_scale_mean = j.value("ambiguity_scale_mean", c.ambiguity_scale_mean);
    c.ambiguity_scale_sigma = j.value("ambiguity_scale_sigma", c.ambiguity_scale_sigma);
    c.ambiguity_positive_fraction = j.value("ambiguity_positive_fraction", c.ambiguity_positive_fraction);
    c.ambiguity_regions = j.value("ambiguity_regions", c.ambiguity_regions);
    c.region_radius = j.value("region_radius", c.region_radius);
    c.region_probability = j.value("region_probability", c.region_probability);
    c.min_depth = j.value("min_depth", c.min_depth);
    c.seed = j.value("seed", c.seed);
    c.validate();
    return c;
  });
}

nlohmann::json to_json(const SamplerConfig& c) {
  return {{"noise_sigma", c.noise_sigma},
          {"offset_sigma", c.offset_sigma},
          {"tilt_sigma", c.tilt_sigma},
          {"ambiguity_probability", c.ambiguity_probability},
          {"ambiguity_scale_mean", c.ambiguity_scale_mean},
          {"ambiguity_scale_sigma", c.ambiguity_scale_sigma},
          {"ambiguity_positive_fraction", c.ambiguity_positive_fraction},
          {"ambiguity_regions", c.ambiguity_regions},
          {"region_radius", c.region_radius},
          {"region_probability", c.region_probability},
          {"min_depth", c.min_depth},
          {"seed", c.seed}};
}

SolverDocument solver_from_json(const nlohmann::json& j) {
  return guarded("solver options", [&] {
    SolverDocument d;
    d.options.step_size = j.value("gamma", d.options.step_size);
    d.options.gradient_steps = j.value("steps", d.options.gradient_steps);
    d.options.max_iterations = j.value("max_iters", d.options.max_iterations);
    d.lambda = j.value("lambda", d.lambda);
    if (j.contains("ramp") && !j.at("ramp").is_null()) {
      const auto& r = j.at("ramp");
      d.ramp = LambdaRamp{r.at("start").get<double>(), r.at("end").get<double>(),
                          r.value("iters", d.options.max_iterations / 2)};
    }
    if (j.contains("mode")) {
      const auto m = j.at("mode").get<std::string>();
      if (m == "nn") d.mode = SpreadMode::nearest_neighbor;
      else if (m == "bilinear") d.mode = SpreadMode::bilinear_grid;
      else if (m == "adjoint") d.mode = SpreadMode::exact_adjoint;
      else throw ConfigError("unknown spreading mode \"" + m + "\"");
    }
    d.options.validate(true);
    return d;
  });
}

nlohmann::json to_json(const SolverDocument& d) {
  nlohmann::json j{{"gamma", d.options.step_size},
                   {"steps", d.options.gradient_steps},
                   {"max_iters", d.options.max_iterations},
                   {"lambda", d.lambda}};
  if (d.ramp) j["ramp"] = {{"start", d.ramp->start}, {"end", d.ramp->end}, {"iters", d.ramp->iterations}};
  if (d.mode) {
    j["mode"] = *d.mode == SpreadMode::nearest_neighbor ? "nn"
                : *d.mode == SpreadMode::bilinear_grid  ? "bilinear"
                                                        : "adjoint";
  }
  return j;
}

std::string read_text(const std::filesystem::path& path) {
  const auto bytes = detail::read_file(path);
  return {bytes.begin(), bytes.end()};
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  detail::write_file(path, std::span(reinterpret_cast<const std::uint8_t*>(text.data()), text.size()));
}

nlohmann::json read_json(const std::filesystem::path& path) {
  const std::string text = read_text(path);
  try {
    return nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw FormatError("invalid JSON in " + path.string(), e.byte > 0 ? e.byte - 1 : 0);
  }
}

namespace {
constexpr char kB64[] = "ABCDEFGHIJKLMNOPQRSTUVWXYZabcdefghijklmnopqrstuvwxyz0123456789+/";
}

std::string base64_encode(std::span<const std::uint8_t> bytes) {
  std::string out;
  out.reserve((bytes.size() + 2) / 3 * 4);
  std::size_t i = 0;
  for (; i + 2 < bytes.size(); i += 3) {
    const std::uint32_t v = (bytes[i] << 16) | (bytes[i + 1] << 8) | bytes[i + 2];
    for (int s = 18; s >= 0; s -= 6) out += kB64[(v >> s) & 63];
  }
  if (const std::size_t rest = bytes.size() - i; rest > 0) {
    std::uint32_t v = bytes[i] << 16;
    if (rest == 2) v |= bytes[i + 1] << 8;
    out += kB64[(v >> 18) & 63];
    out += kB64[(v >> 12) & 63];
    out += rest == 2 ? kB64[(v >> 6) & 63] : '=';
    out += '=';
  }
  return out;
}

std::vector<std::uint8_t> base64_decode(const std::string& text) {
  std::array<int, 256> lut;
  lut.fill(-1);
  for (int k = 0; k < 64; ++k) lut[static_cast<unsigned char>(kB64[k])] = k;
  std::vector<std::uint8_t> out;
  std::uint32_t acc = 0;
  int bits = 0;
  for (std::size_t i = 0; i < text.size(); ++i) {
    const char c = text[i];
    if (c == '=') break;
    const int v = lut[static_cast<unsigned char>(c)];
    if (v < 0) throw FormatError("invalid base64 character", i);
    acc = (acc << 6) | static_cast<std::uint32_t>(v);
    bits += 6;
    if (bits >= 8) {
      bits -= 8;
      out.push_back(static_cast<std::uint8_t>((acc >> bits) & 0xff));
    }
  }
  return out;
}

}  // namespace io
}  // namespace pmd
