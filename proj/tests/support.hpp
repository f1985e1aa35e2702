#pragma once

// Brute-force references and fixtures shared by the unit and acceptance tests.
// The references are written from the definitions with plain loops over
// (pixel, patch, sample) triples and long double accumulation; they do not use
// any kernel from the library.

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <random>
#include <string>
#include <vector>

#include "pmd/core.hpp"
#include "pmd/samplers.hpp"

namespace pmd::test {

inline bool covers(const PatchGrid& g, std::size_t patch, std::size_t y, std::size_t x) {
  const std::size_t t = (patch / g.cols()) * g.stride();
  const std::size_t l = (patch % g.cols()) * g.stride();
  return y >= t && y < t + g.patch_size() && x >= l && x < l + g.patch_size();
}

inline std::size_t offset_in(const PatchGrid& g, std::size_t patch, std::size_t y, std::size_t x) {
  const std::size_t t = (patch / g.cols()) * g.stride();
  const std::size_t l = (patch % g.cols()) * g.stride();
  return (y - t) * g.patch_size() + (x - l);
}

/// Per-pixel mean of value(patch, offset) over covering patches.
template <class Value>
DepthMap brute_average(const PatchGrid& g, Value&& value) {
  DepthMap out(g.height(), g.width());
  for (std::size_t y = 0; y < g.height(); ++y) {
    for (std::size_t x = 0; x < g.width(); ++x) {
      long double sum = 0;
      std::size_t n = 0;
      for (std::size_t p = 0; p < g.patch_count(); ++p) {
        if (!covers(g, p, y, x)) continue;
        sum += value(p, offset_in(g, p, y, x));
        ++n;
      }
      out(y, x) = static_cast<double>(sum / n);
    }
  }
  return out;
}

inline DepthMap brute_selected_average(const SampleSet& s, const std::vector<std::uint32_t>& sel) {
  return brute_average(s.grid(), [&](std::size_t p, std::size_t o) { return s.sample(p, sel[p])[o]; });
}

inline DepthMap brute_mean(const SampleSet& s) {
  const auto& g = s.grid();
  DepthMap out(g.height(), g.width());
  for (std::size_t y = 0; y < g.height(); ++y) {
    for (std::size_t x = 0; x < g.width(); ++x) {
      long double sum = 0;
      std::size_t n = 0;
      for (std::size_t p = 0; p < g.patch_count(); ++p) {
        if (!covers(g, p, y, x)) continue;
        for (std::size_t k = 0; k < s.samples_per_patch(); ++k) {
          sum += s.sample(p, k)[offset_in(g, p, y, x)];
          ++n;
        }
      }
      out(y, x) = static_cast<double>(sum / n);
    }
  }
  return out;
}

inline DepthMap brute_variance(const SampleSet& s) {
  const auto& g = s.grid();
  const DepthMap mu = brute_mean(s);
  DepthMap out(g.height(), g.width());
  for (std::size_t y = 0; y < g.height(); ++y) {
    for (std::size_t x = 0; x < g.width(); ++x) {
      long double sum = 0;
      std::size_t n = 0;
      for (std::size_t p = 0; p < g.patch_count(); ++p) {
        if (!covers(g, p, y, x)) continue;
        for (std::size_t k = 0; k < s.samples_per_patch(); ++k) {
          const long double d = s.sample(p, k)[offset_in(g, p, y, x)] - mu(y, x);
          sum += d * d;
          ++n;
        }
      }
      out(y, x) = static_cast<double>(sum / n);
    }
  }
  return out;
}

inline long double brute_patch_distance(const DepthMap& z, const SampleSet& s, std::size_t p, std::size_t k) {
  const auto& g = s.grid();
  const std::size_t t = (p / g.cols()) * g.stride(), l = (p % g.cols()) * g.stride();
  long double d = 0;
  for (std::size_t a = 0; a < g.patch_size(); ++a) {
    for (std::size_t b = 0; b < g.patch_size(); ++b) {
      const long double e = z(t + a, l + b) - s.sample(p, k)[a * g.patch_size() + b];
      d += e * e;
    }
  }
  return d;
}

inline double brute_log_density(const DepthMap& z, const SampleSet& s, double h) {
  long double total = 0;
  for (std::size_t p = 0; p < s.grid().patch_count(); ++p) {
    long double sum = 0;
    for (std::size_t k = 0; k < s.samples_per_patch(); ++k) {
      sum += std::exp(-brute_patch_distance(z, s, p, k) / (2.0L * h * h));
    }
    total += std::log(sum);
  }
  return static_cast<double>(total);
}

/// Zero-cost objective of a selection: residual at its overlap-average.
inline double brute_selection_objective(const SampleSet& s, const std::vector<std::uint32_t>& sel) {
  const DepthMap z = brute_selected_average(s, sel);
  long double total = 0;
  for (std::size_t p = 0; p < s.grid().patch_count(); ++p) total += brute_patch_distance(z, s, p, sel[p]);
  return static_cast<double>(total);
}

/// Every assignment in lexicographic order, for S^P small enough to enumerate.
template <class Visit>
void for_each_assignment(std::size_t patches, std::size_t samples, Visit&& visit) {
  std::vector<std::uint32_t> sel(patches, 0);
  for (;;) {
    visit(sel);
    std::size_t i = 0;
    while (i < patches && ++sel[i] == samples) sel[i++] = 0;
    if (i == patches) return;
  }
}

/// Random samples directly from a uniform distribution, for solver instances
/// that should not look like any scene.
inline SampleSet random_samples(const PatchGrid& g, std::size_t samples, std::uint64_t seed, double lo = 1.0,
                                double hi = 3.0) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<float> u(static_cast<float>(lo), static_cast<float>(hi));
  std::vector<float> data(g.patch_count() * samples * g.patch_area());
  for (auto& v : data) v = u(rng);
  return {g, samples, std::move(data)};
}

inline DepthMap random_depth(std::size_t h, std::size_t w, std::uint64_t seed, double lo = 1.0, double hi = 3.0) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(lo, hi);
  DepthMap z(h, w);
  for (std::size_t y = 0; y < h; ++y)
    for (std::size_t x = 0; x < w; ++x) z(y, x) = u(rng);
  return z;
}

/// Fresh empty directory under the system temp path.
inline std::filesystem::path scratch_dir(const std::string& name) {
  const auto dir = std::filesystem::temp_directory_path() / ("pmd_test_" + name);
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

}  // namespace pmd::test
