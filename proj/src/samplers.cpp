#include "pmd/samplers.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "pmd/detail/binary.hpp"
#include "pmd/rng.hpp"

namespace pmd {

namespace {

constexpr std::string_view kSampleMagic = "PMDS";
constexpr std::uint32_t kSampleVersion = 1;
// Patch index reserved for the scene-level region stream.
constexpr std::uint64_t kRegionStream = ~std::uint64_t{0};

bool in_ambiguous_region(const PatchGrid& grid, std::size_t patch, const SamplerConfig& cfg) {
  if (cfg.ambiguity_regions == 0) return false;
  const double half = (static_cast<double>(grid.patch_size()) - 1.0) / 2.0;
  const double cy = static_cast<double>(grid.top(patch)) + half, cx = static_cast<double>(grid.left(patch)) + half;
  KeyedStream rng({cfg.seed, kRegionStream, 0});
  for (std::size_t r = 0; r < cfg.ambiguity_regions; ++r) {
    const double ry = rng.uniform() * static_cast<double>(grid.height());
    const double rx = rng.uniform() * static_cast<double>(grid.width());
    if ((cy - ry) * (cy - ry) + (cx - rx) * (cx - rx) <= cfg.region_radius * cfg.region_radius) return true;
  }
  return false;
}

}  // namespace

SampleSet::SampleSet(PatchGrid grid, std::size_t samples_per_patch, std::vector<float> data)
    : grid_(grid), s_(samples_per_patch), data_(std::move(data)) {
  if (s_ < 1) throw InvariantError("sample set needs at least one sample per patch");
  const std::size_t expected = grid_.patch_count() * s_ * grid_.patch_area();
  if (data_.size() != expected) {
    throw InvariantError("sample payload has " + std::to_string(data_.size()) + " values, expected " +
                         std::to_string(expected));
  }
  for (std::size_t i = 0; i < data_.size(); ++i) {
    if (!std::isfinite(data_[i]) || data_[i] <= 0.0f) {
      throw InvariantError("sample value " + std::to_string(i) + " is not finite and positive");
    }
  }
}

SceneSpec random_scene(std::size_t height, std::size_t width, std::uint64_t seed, std::size_t planes,
                       double min_depth, double max_depth) {
  SceneSpec spec;
  spec.height = height;
  spec.width = width;
  spec.min_depth = min_depth;
  spec.max_depth = max_depth;
  spec.seed = seed;

  KeyedStream rng({seed, 0x5ce7eULL});
  const double span = max_depth - min_depth;
  const double h = static_cast<double>(height), w = static_cast<double>(width);

  // Back wall receding towards the top of the image, like a floor-to-wall view.
  PlanarRect wall;
  wall.height = height;
  wall.width = width;
  wall.depth = min_depth + span * (0.75 + 0.2 * rng.uniform());
  wall.tilt_x = (rng.uniform() - 0.5) * 0.2 * span / w;
  wall.tilt_y = -(0.2 + 0.3 * rng.uniform()) * span / h;
  spec.layout.push_back(wall);

  for (std::size_t p = 0; p < planes; ++p) {
    PlanarRect r;
    r.height = std::max<std::size_t>(2, static_cast<std::size_t>(h * (0.15 + 0.35 * rng.uniform())));
    r.width = std::max<std::size_t>(2, static_cast<std::size_t>(w * (0.15 + 0.35 * rng.uniform())));
    r.height = std::min(r.height, height);
    r.width = std::min(r.width, width);
    r.top = static_cast<std::size_t>(rng.uniform() * static_cast<double>(height - r.height + 1));
    r.left = static_cast<std::size_t>(rng.uniform() * static_cast<double>(width - r.width + 1));
    r.top = std::min(r.top, height - r.height);
    r.left = std::min(r.left, width - r.width);
    r.depth = min_depth + span * (0.05 + 0.6 * rng.uniform());
    r.tilt_x = (rng.uniform() - 0.5) * 0.3 * span / w;
    r.tilt_y = (rng.uniform() - 0.5) * 0.3 * span / h;
    spec.layout.push_back(r);
  }
  return spec;
}

DepthMap render_scene(const SceneSpec& spec) {
  if (spec.layout.empty()) throw ConfigError("scene layout is empty");
  if (spec.height == 0 || spec.width == 0) throw ConfigError("scene has zero size");
  if (!(spec.min_depth > 0.0) || !(spec.max_depth >= spec.min_depth)) {
    throw ConfigError("scene depth range must satisfy 0 < min <= max");
  }
  DepthMap z(spec.height, spec.width, spec.max_depth);
  for (const auto& r : spec.layout) {
    const std::size_t r_end = std::min(r.top + r.height, spec.height);
    const std::size_t c_end = std::min(r.left + r.width, spec.width);
    for (std::size_t y = r.top; y < r_end; ++y) {
      for (std::size_t x = r.left; x < c_end; ++x) {
        z(y, x) = r.depth + r.tilt_x * static_cast<double>(x - r.left) +
                  r.tilt_y * static_cast<double>(y - r.top);
      }
    }
  }
  for (auto& v : z.values()) {
    v = static_cast<double>(static_cast<float>(std::clamp(v, spec.min_depth, spec.max_depth)));
    // Rounding can step just outside the range.
    if (v < spec.min_depth) v = std::nextafter(static_cast<float>(spec.min_depth), INFINITY);
    if (v > spec.max_depth) v = std::nextafter(static_cast<float>(spec.max_depth), 0.0f);
  }
  return z;
}

void SamplerConfig::validate() const {
  if (!(noise_sigma >= 0.0) || !(offset_sigma >= 0.0) || !(tilt_sigma >= 0.0)) {
    throw ConfigError("sampler noise scales must be >= 0");
  }
  if (!(ambiguity_probability >= 0.0 && ambiguity_probability <= 1.0)) {
    throw ConfigError("ambiguity probability must lie in [0, 1]");
  }
  if (!(ambiguity_positive_fraction >= 0.0 && ambiguity_positive_fraction <= 1.0)) {
    throw ConfigError("ambiguity positive fraction must lie in [0, 1]");
  }
  if (!(ambiguity_scale_sigma >= 0.0)) throw ConfigError("ambiguity scale sigma must be >= 0");
  if (!(region_probability >= 0.0 && region_probability <= 1.0)) {
    throw ConfigError("region probability must lie in [0, 1]");
  }
  if (!(region_radius >= 0.0)) throw ConfigError("region radius must be >= 0");
  if (!(min_depth > 0.0)) throw ConfigError("sampler min depth must be > 0");
}

SamplerConfig SamplerConfig::noiseless(std::uint64_t seed) {
  SamplerConfig c;
  c.noise_sigma = 0.0;
  c.offset_sigma = 0.0;
  c.tilt_sigma = 0.0;
  c.ambiguity_probability = 0.0;
  c.seed = seed;
  return c;
}

SamplerConfig SamplerConfig::ambiguous(std::uint64_t seed) {
  SamplerConfig c;
  c.noise_sigma = 0.01;
  c.offset_sigma = 0.03;
  c.tilt_sigma = 0.002;
  c.ambiguity_probability = 0.1;
  c.ambiguity_scale_mean = 0.15;
  c.ambiguity_scale_sigma = 0.03;
  c.ambiguity_positive_fraction = 1.0;
  c.ambiguity_regions = 3;
  c.region_radius = 8.0;
  c.region_probability = 0.6;
  c.seed = seed;
  return c;
}

std::vector<float> synthesize_patch_sample(const DepthMap& gt, const PatchGrid& grid, std::size_t patch,
                                           std::size_t sample, const SamplerConfig& cfg) {
  const std::size_t k = grid.patch_size(), t = grid.top(patch), l = grid.left(patch);
  KeyedStream rng({cfg.seed, patch, sample});

  double mean_depth = 0.0;
  for (std::size_t ky = 0; ky < k; ++ky) {
    for (std::size_t kx = 0; kx < k; ++kx) mean_depth += gt(t + ky, l + kx);
  }
  mean_depth /= static_cast<double>(k * k);

  const double p_amb = in_ambiguous_region(grid, patch, cfg) ? cfg.region_probability : cfg.ambiguity_probability;
  double offset = cfg.offset_sigma * rng.normal();
  const double tilt_x = cfg.tilt_sigma * rng.normal();
  const double tilt_y = cfg.tilt_sigma * rng.normal();
  // Always consume the ambiguity draws so the noise stream does not depend on p_amb.
  const double u_amb = rng.uniform();
  const double u_sign = rng.uniform();
  const double scale = cfg.ambiguity_scale_mean + cfg.ambiguity_scale_sigma * rng.normal();
  if (u_amb < p_amb) {
    const double sign = u_sign < cfg.ambiguity_positive_fraction ? 1.0 : -1.0;
    offset += sign * scale * mean_depth;
  }

  const double centre = (static_cast<double>(k) - 1.0) / 2.0;
  std::vector<float> out(k * k);
  for (std::size_t ky = 0; ky < k; ++ky) {
    for (std::size_t kx = 0; kx < k; ++kx) {
      const double plane = offset + tilt_x * (static_cast<double>(kx) - centre) +
                           tilt_y * (static_cast<double>(ky) - centre);
      const double v = gt(t + ky, l + kx) + plane + cfg.noise_sigma * rng.normal();
      out[ky * k + kx] = static_cast<float>(std::max(v, cfg.min_depth));
    }
  }
  return out;
}

SampleSet synthesize_samples(const DepthMap& gt, const PatchGrid& grid, std::size_t samples_per_patch,
                             const SamplerConfig& cfg) {
  if (samples_per_patch < 1) throw ConfigError("samples per patch must be >= 1");
  if (!grid.matches(gt)) throw AlignmentError("ground truth does not match patch grid");
  cfg.validate();
  const std::size_t n = grid.patch_count(), area = grid.patch_area();
  std::vector<float> data(n * samples_per_patch * area);
  const auto total = static_cast<std::ptrdiff_t>(n * samples_per_patch);
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t j = 0; j < total; ++j) {
    const auto idx = static_cast<std::size_t>(j);
    const auto x = synthesize_patch_sample(gt, grid, idx / samples_per_patch, idx % samples_per_patch, cfg);
    std::copy(x.begin(), x.end(), data.begin() + static_cast<std::ptrdiff_t>(idx * area));
  }
  return SampleSet(grid, samples_per_patch, std::move(data));
}

std::vector<std::uint8_t> encode_samples(const SampleSet& samples) {
  const auto& g = samples.grid();
  detail::ByteWriter w;
  w.reserve(28 + samples.data().size() * 4);
  w.magic(kSampleMagic);
  for (std::size_t v : {std::size_t{kSampleVersion}, g.height(), g.width(), g.patch_size(), g.stride(),
                        samples.samples_per_patch()}) {
    w.u32(static_cast<std::uint32_t>(v));
  }
  for (float v : samples.data()) w.f32(v);
  return std::move(w).take();
}

SampleSet decode_samples(std::span<const std::uint8_t> bytes) {
  detail::ByteReader r(bytes);
  r.expect_magic(kSampleMagic, "sample file");
  const std::size_t version_at = r.offset();
  const std::uint32_t version = r.u32("version");
  if (version != kSampleVersion) {
    throw VersionError("unsupported sample file version " + std::to_string(version), version_at);
  }
  const std::uint32_t h = r.u32("height"), w = r.u32("width"), k = r.u32("patch size"),
                      s = r.u32("stride"), count = r.u32("samples per patch");
  PatchGrid grid;
  try {
    grid = make_patch_grid(h, w, k, s);
  } catch (const Error& e) {
    throw InvariantError(std::string("sample file header: ") + e.what());
  }
  if (count < 1) throw InvariantError("sample file header: samples per patch must be >= 1");
  const std::size_t n = grid.patch_count() * count * grid.patch_area();
  r.need(n * 4, "sample payload");
  std::vector<float> data(n);
  for (auto& v : data) v = r.f32("sample payload");
  if (r.remaining() != 0) {
    throw FormatError("trailing bytes after sample payload", r.offset());
  }
  return SampleSet(grid, count, std::move(data));
}

void save_samples(const SampleSet& samples, const std::filesystem::path& path) {
  detail::write_file(path, encode_samples(samples));
}

SampleSet load_samples(const std::filesystem::path& path) { return decode_samples(detail::read_file(path)); }

}  // namespace pmd
