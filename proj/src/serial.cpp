#include "pmd/serial.hpp"

#include <limits>

namespace pmd::serial {

namespace {

// Accumulate `value(p, ky, kx)` of every patch into per-pixel sums.
template <class PatchValue>
DepthMap scatter_average(const PatchGrid& grid, std::size_t weight, PatchValue&& value) {
  const std::size_t k = grid.patch_size();
  std::vector<double> sum(grid.height() * grid.width(), 0.0);
  std::vector<std::size_t> n(sum.size(), 0);
  for (std::size_t p = 0; p < grid.patch_count(); ++p) {
    const std::size_t t = grid.top(p), l = grid.left(p);
    for (std::size_t ky = 0; ky < k; ++ky) {
      for (std::size_t kx = 0; kx < k; ++kx) {
        const std::size_t pix = (t + ky) * grid.width() + l + kx;
        sum[pix] += value(p, ky * k + kx);
        n[pix] += weight;
      }
    }
  }
  DepthMap out(grid.height(), grid.width());
  for (std::size_t i = 0; i < sum.size(); ++i) out[i] = sum[i] / static_cast<double>(n[i]);
  return out;
}

}  // namespace

DepthMap overlap_average(std::span<const double> patches, const PatchGrid& grid) {
  const std::size_t area = grid.patch_area();
  if (patches.size() != grid.patch_count() * area) throw AlignmentError("patch value count mismatch");
  return scatter_average(grid, 1, [&](std::size_t p, std::size_t o) { return patches[p * area + o]; });
}

DepthMap average_selected(const SampleSet& samples, const Selection& sel) {
  if (sel.size() != samples.patch_count()) throw AlignmentError("selection size mismatch");
  return scatter_average(samples.grid(), 1, [&](std::size_t p, std::size_t o) {
    return static_cast<double>(samples.sample(p, sel.index.at(p))[o]);
  });
}

DepthMap mean_depth(const SampleSet& samples) {
  const std::size_t count = samples.samples_per_patch();
  return scatter_average(samples.grid(), count, [&](std::size_t p, std::size_t o) {
    double s = 0.0;
    for (std::size_t j = 0; j < count; ++j) s += samples.sample(p, j)[o];
    return s;
  });
}

DepthMap variance_map(const SampleSet& samples) {
  const auto mean = serial::mean_depth(samples);
  const auto& grid = samples.grid();
  const std::size_t count = samples.samples_per_patch(), k = grid.patch_size();
  std::vector<double> sq(mean.size(), 0.0);
  std::vector<std::size_t> n(mean.size(), 0);
  for (std::size_t p = 0; p < grid.patch_count(); ++p) {
    for (std::size_t j = 0; j < count; ++j) {
      const auto x = samples.sample(p, j);
      for (std::size_t ky = 0; ky < k; ++ky) {
        for (std::size_t kx = 0; kx < k; ++kx) {
          const std::size_t pix = (grid.top(p) + ky) * grid.width() + grid.left(p) + kx;
          const double d = x[ky * k + kx] - mean[pix];
          sq[pix] += d * d;
          ++n[pix];
        }
      }
    }
  }
  DepthMap out(grid.height(), grid.width());
  for (std::size_t i = 0; i < sq.size(); ++i) out[i] = sq[i] / static_cast<double>(n[i]);
  return out;
}

Selection select_samples(const DepthMap& z, const SampleSet& samples, const PatchCostTable* table) {
  const auto& grid = samples.grid();
  Selection sel;
  sel.index.resize(grid.patch_count());
  for (std::size_t p = 0; p < grid.patch_count(); ++p) {
    const auto c = crop(z, grid, p);
    double best = std::numeric_limits<double>::infinity();
    for (std::size_t s = 0; s < samples.samples_per_patch(); ++s) {
      const auto x = samples.sample(p, s);
      double d2 = 0.0;
      for (std::size_t o = 0; o < c.size(); ++o) d2 += (c[o] - x[o]) * (c[o] - x[o]);
      const double v = d2 + (table ? (*table)(p, s) : 0.0);
      if (v < best) {
        best = v;
        sel.index[p] = static_cast<std::uint32_t>(s);
      }
    }
  }
  return sel;
}

}  // namespace pmd::serial
