#pragma once

// OpenMP data-parallel kernels shared by density and solver. Every kernel writes
// disjoint outputs (one pixel or one patch per iteration) and reduces in a fixed
// order, so results do not depend on the thread count. Plain loop references for
// testing and benchmarking live in pmd/serial.hpp.

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "pmd/core.hpp"
#include "pmd/samplers.hpp"

namespace pmd {

/// Per-patch selected sample index.
struct Selection {
  std::vector<std::uint32_t> index;

  std::size_t size() const noexcept { return index.size(); }
  friend bool operator==(const Selection&, const Selection&) = default;
};

/// Per-patch, per-sample additive costs, row-major [patch][sample].
struct PatchCostTable {
  std::size_t patches = 0;
  std::size_t samples = 0;
  std::vector<double> values;

  double operator()(std::size_t patch, std::size_t s) const { return values[patch * samples + s]; }
};

namespace kernels {

/// For every pixel, visit each covering (patch, offset-in-patch) pair in
/// increasing patch order and reduce with `f(pixel, patch, offset)`.
template <class PerPixel>
void for_each_pixel(const PatchGrid& grid, PerPixel&& f) {
  const auto h = static_cast<std::ptrdiff_t>(grid.height());
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t yy = 0; yy < h; ++yy) {
    const auto y = static_cast<std::size_t>(yy);
    for (std::size_t x = 0; x < grid.width(); ++x) f(y, x);
  }
}

/// Calls `visit(patch, offset)` for every patch covering pixel (y, x), in patch order.
template <class Visit>
inline void covering_patches(const PatchGrid& grid, std::size_t y, std::size_t x, Visit&& visit) {
  const auto rs = grid.covering_rows(y);
  const auto cs = grid.covering_cols(x);
  const std::size_t k = grid.patch_size(), s = grid.stride(), cols = grid.cols();
  for (std::size_t r = rs.first; r < rs.last; ++r) {
    const std::size_t ky = y - r * s;
    for (std::size_t c = cs.first; c < cs.last; ++c) {
      visit(r * cols + c, ky * k + (x - c * s));
    }
  }
}

/// Overlap-average of one K x K value per patch; `value(patch, offset)` supplies it.
template <class PatchValue>
DepthMap gather_average(const PatchGrid& grid, PatchValue&& value) {
  DepthMap out(grid.height(), grid.width());
  for_each_pixel(grid, [&](std::size_t y, std::size_t x) {
    double sum = 0.0;
    std::size_t n = 0;
    covering_patches(grid, y, x, [&](std::size_t p, std::size_t o) {
      sum += value(p, o);
      ++n;
    });
    out(y, x) = sum / static_cast<double>(n);
  });
  return out;
}

/// Overlap-average of the selected sample of every patch.
DepthMap average_selected(const SampleSet& samples, const Selection& sel);

/// Per-pixel mean over every covering (patch, sample) contribution.
DepthMap mean_depth(const SampleSet& samples);

/// Per-pixel population variance over every covering (patch, sample) contribution.
DepthMap variance_map(const SampleSet& samples);

/// Squared L2 distance from crop_i(Z) to every sample of every patch, [patch][sample].
std::vector<double> patch_distances(const DepthMap& z, const SampleSet& samples);

/// argmin_s |crop_i(Z) - x_i^s|^2 + table(i, s); ties go to the lowest index.
Selection select_samples(const DepthMap& z, const SampleSet& samples, const PatchCostTable* table);

/// sum_i |crop_i(Z) - x_i|^2 for the selected samples, summed in patch order.
double selection_residual(const DepthMap& z, const SampleSet& samples, const Selection& sel);

}  // namespace kernels
}  // namespace pmd
