#include "pmd/density.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>

#include "pmd/kernels.hpp"

namespace pmd {

void DensityParams::validate() const {
  if (!(bandwidth > 0.0) || !std::isfinite(bandwidth)) throw ConfigError("bandwidth must be > 0");
}

double log_sum_exp(std::span<const double> v) {
  if (v.empty()) return -std::numeric_limits<double>::infinity();
  const double top = *std::max_element(v.begin(), v.end());
  if (!std::isfinite(top)) return top;
  double sum = 0.0;
  for (double x : v) sum += std::exp(x - top);
  return top + std::log(sum);
}

double patch_potential(std::span<const double> z_patch, std::span<const float> patch_samples,
                       std::size_t samples_per_patch, const DensityParams& params) {
  params.validate();
  if (samples_per_patch == 0 || patch_samples.empty()) throw ConfigError("patch has no samples");
  const std::size_t area = z_patch.size();
  if (patch_samples.size() != samples_per_patch * area) {
    throw AlignmentError("patch samples do not match patch size");
  }
  const double scale = 1.0 / (2.0 * params.bandwidth * params.bandwidth);
  std::vector<double> e(samples_per_patch);
  for (std::size_t s = 0; s < samples_per_patch; ++s) {
    double d2 = 0.0;
    for (std::size_t o = 0; o < area; ++o) {
      const double d = z_patch[o] - patch_samples[s * area + o];
      d2 += d * d;
    }
    e[s] = -d2 * scale;
  }
  return std::exp(log_sum_exp(e) - std::log(static_cast<double>(samples_per_patch)));
}

namespace {

// Per-patch exponents -d2/2h^2, [patch][sample].
std::vector<double> exponents(const DepthMap& z, const SampleSet& samples, const DensityParams& params) {
  params.validate();
  if (!samples.grid().matches(z)) throw AlignmentError("depth map does not match sample grid");
  auto e = kernels::patch_distances(z, samples);
  const double scale = 1.0 / (2.0 * params.bandwidth * params.bandwidth);
  for (auto& v : e) v *= -scale;
  return e;
}

}  // namespace

double log_density(const DepthMap& z, const SampleSet& samples, const DensityParams& params) {
  const auto e = exponents(z, samples, params);
  const std::size_t count = samples.samples_per_patch();
  double total = 0.0;
  for (std::size_t p = 0; p < samples.patch_count(); ++p) {
    total += log_sum_exp(std::span<const double>(e).subspan(p * count, count));
  }
  return total;
}

double log_density_maxapprox(const DepthMap& z, const SampleSet& samples, const DensityParams& params) {
  const auto e = exponents(z, samples, params);
  const std::size_t count = samples.samples_per_patch();
  double total = 0.0;
  for (std::size_t p = 0; p < samples.patch_count(); ++p) {
    const auto first = e.begin() + static_cast<std::ptrdiff_t>(p * count);
    total += *std::max_element(first, first + static_cast<std::ptrdiff_t>(count));
  }
  return total;
}

DepthMap mean_depth(const SampleSet& samples) { return kernels::mean_depth(samples); }

DepthMap variance_map(const SampleSet& samples) { return kernels::variance_map(samples); }

PatchRanking rank_samples(const SampleSet& samples, const DepthMap& gt) {
  const auto& grid = samples.grid();
  if (!grid.matches(gt)) throw AlignmentError("ground truth does not match sample grid");
  const std::size_t n = grid.patch_count(), count = samples.samples_per_patch();
  const auto d2 = kernels::patch_distances(gt, samples);
  const double area = static_cast<double>(grid.patch_area());
  PatchRanking out;
  out.samples_per_patch = count;
  out.order.resize(n * count);
  out.rms.resize(n * count);
  const auto total = static_cast<std::ptrdiff_t>(n);
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t pp = 0; pp < total; ++pp) {
    const auto p = static_cast<std::size_t>(pp);
    auto first = out.order.begin() + static_cast<std::ptrdiff_t>(p * count);
    std::iota(first, first + static_cast<std::ptrdiff_t>(count), 0u);
    std::stable_sort(first, first + static_cast<std::ptrdiff_t>(count),
                     [&](std::uint32_t a, std::uint32_t b) { return d2[p * count + a] < d2[p * count + b]; });
    for (std::size_t r = 0; r < count; ++r) {
      out.rms[p * count + r] = std::sqrt(d2[p * count + out.order[p * count + r]] / area);
    }
  }
  return out;
}

DepthMap rank_composite(const SampleSet& samples, const PatchRanking& ranking, std::size_t rank) {
  const std::size_t count = samples.samples_per_patch();
  if (rank >= count) {
    throw IndexError("rank " + std::to_string(rank) + " out of range for " + std::to_string(count) +
                     " samples");
  }
  Selection sel;
  sel.index.resize(samples.patch_count());
  for (std::size_t p = 0; p < sel.size(); ++p) sel.index[p] = ranking.order[p * count + rank];
  return kernels::average_selected(samples, sel);
}

DepthMap rank_composite(const SampleSet& samples, const DepthMap& gt, std::size_t rank) {
  if (rank >= samples.samples_per_patch()) throw IndexError("rank out of range");
  return rank_composite(samples, rank_samples(samples, gt), rank);
}

}  // namespace pmd
