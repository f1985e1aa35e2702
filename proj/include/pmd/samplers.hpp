#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "pmd/core.hpp"

namespace pmd {

/// S depth hypotheses for every patch of a grid, stored as 32-bit reals in
/// [patch row][patch col][sample][ky][kx] order (the on-disk order).
class SampleSet {
 public:
  SampleSet() = default;
  /// Throws InvariantError when S < 1, the payload size is wrong, or a value is
  /// not finite and positive.
  SampleSet(PatchGrid grid, std::size_t samples_per_patch, std::vector<float> data);

  const PatchGrid& grid() const noexcept { return grid_; }
  std::size_t samples_per_patch() const noexcept { return s_; }
  std::size_t patch_count() const noexcept { return grid_.patch_count(); }

  std::span<const float> sample(std::size_t patch, std::size_t s) const noexcept {
    const std::size_t area = grid_.patch_area();
    return {data_.data() + (patch * s_ + s) * area, area};
  }
  std::span<const float> patch_samples(std::size_t patch) const noexcept {
    const std::size_t block = s_ * grid_.patch_area();
    return {data_.data() + patch * block, block};
  }
  std::span<const float> data() const noexcept { return data_; }

  friend bool operator==(const SampleSet&, const SampleSet&) = default;

 private:
  PatchGrid grid_;
  std::size_t s_ = 0;
  std::vector<float> data_;
};

/// Axis-aligned planar rectangle: depth(r, c) = depth + tilt_x * (c - left) + tilt_y * (r - top).
struct PlanarRect {
  std::size_t top = 0;
  std::size_t left = 0;
  std::size_t height = 0;
  std::size_t width = 0;
  double depth = 1.0;
  double tilt_x = 0.0;
  double tilt_y = 0.0;

  friend bool operator==(const PlanarRect&, const PlanarRect&) = default;
};

/// Piecewise-planar synthetic scene. Later rectangles paint over earlier ones;
/// pixels no rectangle covers sit at the far end of the depth range.
struct SceneSpec {
  std::size_t height = 0;
  std::size_t width = 0;
  std::vector<PlanarRect> layout;
  double min_depth = 0.5;
  double max_depth = 10.0;
  std::uint64_t seed = 0;

  friend bool operator==(const SceneSpec&, const SceneSpec&) = default;
};

/// A random indoor-like layout: a tilted back wall plus `planes` random boxes.
SceneSpec random_scene(std::size_t height, std::size_t width, std::uint64_t seed,
                       std::size_t planes = 6, double min_depth = 1.0, double max_depth = 6.0);

/// Deterministic render clamped to the declared depth range. Values are rounded
/// to 32-bit precision so that the depth file round-trip is lossless.
DepthMap render_scene(const SceneSpec& spec);

/// Controls how strongly the synthetic samples of a patch disagree.
///
/// Each sample is crop(gt) plus a plane perturbation (offset and tilt) plus
/// i.i.d. pixel noise. With probability `ambiguity_probability` the sample also
/// gets a coherent displacement whose magnitude is a fraction of the patch's
/// mean depth, drawn from N(ambiguity_scale_mean, ambiguity_scale_sigma), and
/// whose sign is positive with probability `ambiguity_positive_fraction`.
///
/// With `ambiguity_regions` > 0, patches whose centre lies within
/// `region_radius` pixels of one of that many seeded region centres use
/// `region_probability` instead, which localizes the ambiguity.
struct SamplerConfig {
  double noise_sigma = 0.01;
  double offset_sigma = 0.03;
  double tilt_sigma = 0.002;
  double ambiguity_probability = 0.0;
  double ambiguity_scale_mean = 0.15;
  double ambiguity_scale_sigma = 0.03;
  double ambiguity_positive_fraction = 1.0;
  std::size_t ambiguity_regions = 0;
  double region_radius = 8.0;
  double region_probability = 0.6;
  double min_depth = 0.05;
  std::uint64_t seed = 0;

  /// Throws ConfigError when a field is out of range.
  void validate() const;

  /// Every sample equals the ground-truth crop.
  static SamplerConfig noiseless(std::uint64_t seed = 0);
  /// Localized scale ambiguity: inside three regions most samples are pushed
  /// 15% farther away, coherently per patch; elsewhere few are.
  static SamplerConfig ambiguous(std::uint64_t seed = 0);

  friend bool operator==(const SamplerConfig&, const SamplerConfig&) = default;
};

/// One sample of one patch, generated from the (seed, patch, sample) stream only.
std::vector<float> synthesize_patch_sample(const DepthMap& gt, const PatchGrid& grid,
                                           std::size_t patch, std::size_t sample,
                                           const SamplerConfig& cfg);

SampleSet synthesize_samples(const DepthMap& gt, const PatchGrid& grid, std::size_t samples_per_patch,
                             const SamplerConfig& cfg);

/// "PMDS" container: magic, little-endian u32 [version=1, H, W, K, s, S], then f32 payload.
void save_samples(const SampleSet& samples, const std::filesystem::path& path);
SampleSet load_samples(const std::filesystem::path& path);

std::vector<std::uint8_t> encode_samples(const SampleSet& samples);
SampleSet decode_samples(std::span<const std::uint8_t> bytes);

}  // namespace pmd
