#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "pmd/core.hpp"
#include "pmd/samplers.hpp"

namespace pmd {

/// Gaussian kernel bandwidth of the patch density estimate, in meters.
struct DensityParams {
  double bandwidth = 1.0;

  void validate() const;
};

/// Stable log(sum_j exp(v_j)).
double log_sum_exp(std::span<const double> v);

/// (1/S) sum_s exp(-|z - x_s|^2 / 2h^2), evaluated relative to the largest term.
double patch_potential(std::span<const double> z_patch, std::span<const float> patch_samples,
                       std::size_t samples_per_patch, const DensityParams& params = {});

/// Unnormalized log density: sum_i log sum_s exp(-|crop_i(Z) - x_i^s|^2 / 2h^2).
double log_density(const DepthMap& z, const SampleSet& samples, const DensityParams& params = {});

/// Max-approximation of log_density: sum_i max_s (-|crop_i(Z) - x_i^s|^2 / 2h^2).
double log_density_maxapprox(const DepthMap& z, const SampleSet& samples,
                             const DensityParams& params = {});

/// Per-pixel mean over all (patch, sample) contributions covering the pixel.
DepthMap mean_depth(const SampleSet& samples);

/// Per-pixel population variance over all covering (patch, sample) contributions,
/// in squared meters. Only the ordering of values is used downstream.
DepthMap variance_map(const SampleSet& samples);

/// Samples of each patch ordered by RMS error against the ground-truth crop
/// (ascending, ties by sample index), along with those errors.
struct PatchRanking {
  std::vector<std::uint32_t> order;  // [patch][rank] -> sample index
  std::vector<double> rms;           // [patch][rank] -> rms of that sample
  std::size_t samples_per_patch = 0;
};
PatchRanking rank_samples(const SampleSet& samples, const DepthMap& gt);

/// Overlap-average of the rank-r sample of every patch: r = 0 is the oracle,
/// r = S-1 the adversary.
DepthMap rank_composite(const SampleSet& samples, const DepthMap& gt, std::size_t rank);
DepthMap rank_composite(const SampleSet& samples, const PatchRanking& ranking, std::size_t rank);

}  // namespace pmd
