#include "pmd/kernels.hpp"

#include <limits>
#include <string>

namespace pmd {

DepthMap overlap_average(std::span<const double> patches, const PatchGrid& grid) {
  const std::size_t area = grid.patch_area();
  if (patches.size() != grid.patch_count() * area) {
    throw AlignmentError("overlap_average expects " + std::to_string(grid.patch_count() * area) +
                         " patch values, got " + std::to_string(patches.size()));
  }
  return kernels::gather_average(grid, [&](std::size_t p, std::size_t o) { return patches[p * area + o]; });
}

namespace kernels {

namespace {

void check_selection(const SampleSet& samples, const Selection& sel) {
  if (sel.size() != samples.patch_count()) {
    throw AlignmentError("selection has " + std::to_string(sel.size()) + " entries for " +
                         std::to_string(samples.patch_count()) + " patches");
  }
  for (auto s : sel.index) {
    if (s >= samples.samples_per_patch()) throw IndexError("selected sample index out of range");
  }
}

}  // namespace

DepthMap average_selected(const SampleSet& samples, const Selection& sel) {
  check_selection(samples, sel);
  return gather_average(samples.grid(), [&](std::size_t p, std::size_t o) {
    return static_cast<double>(samples.sample(p, sel.index[p])[o]);
  });
}

DepthMap mean_depth(const SampleSet& samples) {
  const std::size_t count = samples.samples_per_patch(), area = samples.grid().patch_area();
  return gather_average(samples.grid(), [&](std::size_t p, std::size_t o) {
    const auto block = samples.patch_samples(p);
    double sum = 0.0;
    for (std::size_t s = 0; s < count; ++s) sum += block[s * area + o];
    return sum / static_cast<double>(count);
  });
}

DepthMap variance_map(const SampleSet& samples) {
  const auto& grid = samples.grid();
  const std::size_t count = samples.samples_per_patch(), area = grid.patch_area();
  DepthMap out(grid.height(), grid.width());
  for_each_pixel(grid, [&](std::size_t y, std::size_t x) {
    double sum = 0.0;
    std::size_t n = 0;
    covering_patches(grid, y, x, [&](std::size_t p, std::size_t o) {
      const auto block = samples.patch_samples(p);
      for (std::size_t s = 0; s < count; ++s) sum += block[s * area + o];
      n += count;
    });
    const double mean = sum / static_cast<double>(n);
    double sq = 0.0;
    covering_patches(grid, y, x, [&](std::size_t p, std::size_t o) {
      const auto block = samples.patch_samples(p);
      for (std::size_t s = 0; s < count; ++s) {
        const double d = block[s * area + o] - mean;
        sq += d * d;
      }
    });
    out(y, x) = sq / static_cast<double>(n);
  });
  return out;
}

std::vector<double> patch_distances(const DepthMap& z, const SampleSet& samples) {
  const auto& grid = samples.grid();
  if (!grid.matches(z)) throw AlignmentError("depth map does not match sample grid");
  const std::size_t n = grid.patch_count(), count = samples.samples_per_patch(), k = grid.patch_size();
  std::vector<double> out(n * count);
  const auto total = static_cast<std::ptrdiff_t>(n);
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t pp = 0; pp < total; ++pp) {
    const auto p = static_cast<std::size_t>(pp);
    const std::size_t t = grid.top(p), l = grid.left(p);
    for (std::size_t s = 0; s < count; ++s) {
      const auto x = samples.sample(p, s);
      double d2 = 0.0;
      for (std::size_t ky = 0; ky < k; ++ky) {
        const double* row = &z.values()[(t + ky) * z.width() + l];
        const float* xs = x.data() + ky * k;
        for (std::size_t kx = 0; kx < k; ++kx) {
          const double d = row[kx] - xs[kx];
          d2 += d * d;
        }
      }
      out[p * count + s] = d2;
    }
  }
  return out;
}

Selection select_samples(const DepthMap& z, const SampleSet& samples, const PatchCostTable* table) {
  const std::size_t n = samples.patch_count(), count = samples.samples_per_patch();
  if (table && (table->patches != n || table->samples != count)) {
    throw AlignmentError("patch cost table shape does not match sample set");
  }
  const auto d2 = patch_distances(z, samples);
  Selection sel;
  sel.index.resize(n);
  const auto total = static_cast<std::ptrdiff_t>(n);
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t pp = 0; pp < total; ++pp) {
    const auto p = static_cast<std::size_t>(pp);
    double best = std::numeric_limits<double>::infinity();
    std::uint32_t arg = 0;
    for (std::size_t s = 0; s < count; ++s) {
      const double v = d2[p * count + s] + (table ? (*table)(p, s) : 0.0);
      if (v < best) {
        best = v;
        arg = static_cast<std::uint32_t>(s);
      }
    }
    sel.index[p] = arg;
  }
  return sel;
}

double selection_residual(const DepthMap& z, const SampleSet& samples, const Selection& sel) {
  check_selection(samples, sel);
  const auto& grid = samples.grid();
  if (!grid.matches(z)) throw AlignmentError("depth map does not match sample grid");
  const std::size_t n = grid.patch_count(), k = grid.patch_size();
  std::vector<double> terms(n);
  const auto total = static_cast<std::ptrdiff_t>(n);
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t pp = 0; pp < total; ++pp) {
    const auto p = static_cast<std::size_t>(pp);
    const std::size_t t = grid.top(p), l = grid.left(p);
    const auto x = samples.sample(p, sel.index[p]);
    double d2 = 0.0;
    for (std::size_t ky = 0; ky < k; ++ky) {
      for (std::size_t kx = 0; kx < k; ++kx) {
        const double d = z(t + ky, l + kx) - x[ky * k + kx];
        d2 += d * d;
      }
    }
    terms[p] = d2;
  }
  double sum = 0.0;
  for (double v : terms) sum += v;
  return sum;
}

}  // namespace kernels
}  // namespace pmd
