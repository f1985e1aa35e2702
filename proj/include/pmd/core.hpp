#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "pmd/error.hpp"

namespace pmd {

/// Dense per-pixel depth in meters, row-major, with an optional validity mask.
///
/// An empty validity mask means every pixel is valid. Pixels marked invalid are
/// ignored by the error metrics; they typically stand for sensor holes in ground
/// truth. The same container also carries variance maps and masks when they are
/// written to disk, so positivity is checked separately (`require_positive`).
class DepthMap {
 public:
  DepthMap() = default;
  DepthMap(std::size_t height, std::size_t width, double fill = 0.0);
  DepthMap(std::size_t height, std::size_t width, std::vector<double> values);

  std::size_t height() const noexcept { return height_; }
  std::size_t width() const noexcept { return width_; }
  std::size_t size() const noexcept { return values_.size(); }

  double operator()(std::size_t row, std::size_t col) const { return values_[row * width_ + col]; }
  double& operator()(std::size_t row, std::size_t col) { return values_[row * width_ + col]; }
  double operator[](std::size_t i) const { return values_[i]; }
  double& operator[](std::size_t i) { return values_[i]; }

  std::span<const double> values() const noexcept { return values_; }
  std::span<double> values() noexcept { return values_; }

  bool has_validity() const noexcept { return !valid_.empty(); }
  bool valid(std::size_t i) const { return valid_.empty() || valid_[i] != 0; }
  std::span<const std::uint8_t> validity() const noexcept { return valid_; }
  /// Attach a validity mask (1 = valid). An empty vector clears it.
  void set_validity(std::vector<std::uint8_t> valid);

  /// Throws InvariantError on non-finite values.
  void require_finite() const;
  /// Throws InvariantError unless every valid pixel is finite and > 0.
  void require_positive() const;

  bool same_shape(const DepthMap& other) const noexcept {
    return height_ == other.height_ && width_ == other.width_;
  }

  friend bool operator==(const DepthMap&, const DepthMap&) = default;

 private:
  std::size_t height_ = 0;
  std::size_t width_ = 0;
  std::vector<double> values_;
  std::vector<std::uint8_t> valid_;
};

class BinaryMask {
 public:
  BinaryMask() = default;
  BinaryMask(std::size_t height, std::size_t width, bool fill = false);

  std::size_t height() const noexcept { return height_; }
  std::size_t width() const noexcept { return width_; }
  std::size_t size() const noexcept { return bits_.size(); }

  bool operator()(std::size_t row, std::size_t col) const { return bits_[row * width_ + col] != 0; }
  bool operator[](std::size_t i) const { return bits_[i] != 0; }
  void set(std::size_t row, std::size_t col, bool on = true) { bits_[row * width_ + col] = on ? 1 : 0; }

  /// Set every pixel of the rectangle [row, row+h) x [col, col+w).
  void fill_rect(std::size_t row, std::size_t col, std::size_t h, std::size_t w);

  std::size_t count() const noexcept;
  bool empty() const noexcept { return count() == 0; }
  bool same_shape(const DepthMap& z) const noexcept {
    return height_ == z.height() && width_ == z.width();
  }
  std::span<const std::uint8_t> bits() const noexcept { return bits_; }

  friend bool operator==(const BinaryMask&, const BinaryMask&) = default;

 private:
  std::size_t height_ = 0;
  std::size_t width_ = 0;
  std::vector<std::uint8_t> bits_;
};

struct Measurement {
  std::size_t row = 0;
  std::size_t col = 0;
  double depth = 0.0;

  friend bool operator==(const Measurement&, const Measurement&) = default;
};

enum class MeasurementPattern { random_points, regular_grid };

/// Depth values observed at isolated pixels of an image of known size.
class SparseMeasurements {
 public:
  SparseMeasurements() = default;
  /// Validates bounds, positivity and uniqueness. A regular-grid pattern must
  /// form a complete axis-aligned lattice.
  SparseMeasurements(std::size_t height, std::size_t width, std::vector<Measurement> points,
                     MeasurementPattern pattern = MeasurementPattern::random_points);

  std::size_t height() const noexcept { return height_; }
  std::size_t width() const noexcept { return width_; }
  std::size_t size() const noexcept { return points_.size(); }
  bool empty() const noexcept { return points_.empty(); }
  MeasurementPattern pattern() const noexcept { return pattern_; }
  const std::vector<Measurement>& points() const noexcept { return points_; }
  const Measurement& operator[](std::size_t i) const { return points_[i]; }

  /// True when the points are exactly the cross product of their distinct rows and columns.
  bool is_complete_lattice() const;

 private:
  std::size_t height_ = 0;
  std::size_t width_ = 0;
  std::vector<Measurement> points_;
  MeasurementPattern pattern_ = MeasurementPattern::random_points;
};

/// Sample a depth map at every measured location.
SparseMeasurements sample_at(const DepthMap& z, std::span<const Measurement> where,
                             MeasurementPattern pattern = MeasurementPattern::random_points);

/// Geometry of overlapping K x K patches laid out at a fixed stride.
///
/// Patch i sits at patch-row i / cols and patch-column i % cols; its top-left
/// pixel is (row * stride, col * stride).
class PatchGrid {
 public:
  PatchGrid() = default;

  std::size_t height() const noexcept { return height_; }
  std::size_t width() const noexcept { return width_; }
  std::size_t patch_size() const noexcept { return k_; }
  std::size_t stride() const noexcept { return stride_; }
  std::size_t rows() const noexcept { return rows_; }
  std::size_t cols() const noexcept { return cols_; }
  std::size_t patch_count() const noexcept { return rows_ * cols_; }
  std::size_t patch_area() const noexcept { return k_ * k_; }

  std::size_t top(std::size_t patch) const noexcept { return (patch / cols_) * stride_; }
  std::size_t left(std::size_t patch) const noexcept { return (patch % cols_) * stride_; }

  /// Half-open range of patch rows (or columns) whose window covers pixel coordinate `y`
  /// along an axis of `count` patches.
  struct Span {
    std::size_t first;
    std::size_t last;
  };
  Span covering_rows(std::size_t y) const noexcept { return covering(y, rows_); }
  Span covering_cols(std::size_t x) const noexcept { return covering(x, cols_); }

  /// Number of patches covering each pixel.
  std::vector<std::size_t> coverage() const;

  bool contains(std::size_t patch, std::size_t row, std::size_t col) const noexcept {
    const std::size_t t = top(patch), l = left(patch);
    return row >= t && row < t + k_ && col >= l && col < l + k_;
  }

  bool matches(const DepthMap& z) const noexcept { return z.height() == height_ && z.width() == width_; }

  friend bool operator==(const PatchGrid&, const PatchGrid&) = default;
  friend PatchGrid make_patch_grid(std::size_t, std::size_t, std::size_t, std::size_t);

 private:
  Span covering(std::size_t y, std::size_t count) const noexcept;

  std::size_t height_ = 0;
  std::size_t width_ = 0;
  std::size_t k_ = 0;
  std::size_t stride_ = 0;
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
};

/// Throws ConfigError on bad sizes and AlignmentError when (height-K) or (width-K)
/// is not a multiple of the stride.
PatchGrid make_patch_grid(std::size_t height, std::size_t width, std::size_t patch_size,
                          std::size_t stride);

/// The K x K window of patch i, row-major.
std::vector<double> crop(const DepthMap& z, const PatchGrid& grid, std::size_t patch);

/// Every patch crop, concatenated in patch order (patch_count * K * K values).
std::vector<double> crop_all(const DepthMap& z, const PatchGrid& grid);

/// Per-pixel uniform mean of all patch values covering the pixel. `patches` holds
/// patch_count * K * K values in patch order. This is the least-squares solution
/// of sum_i |crop_i(Z) - x_i|^2.
DepthMap overlap_average(std::span<const double> patches, const PatchGrid& grid);

}  // namespace pmd
