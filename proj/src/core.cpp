#include "pmd/core.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <string>
#include <utility>

namespace pmd {

DepthMap::DepthMap(std::size_t height, std::size_t width, double fill)
    : height_(height), width_(width), values_(height * width, fill) {}

DepthMap::DepthMap(std::size_t height, std::size_t width, std::vector<double> values)
    : height_(height), width_(width), values_(std::move(values)) {
  if (values_.size() != height * width) {
    throw AlignmentError("depth map payload has " + std::to_string(values_.size()) +
                         " values, expected " + std::to_string(height * width));
  }
}

void DepthMap::set_validity(std::vector<std::uint8_t> valid) {
  if (!valid.empty() && valid.size() != values_.size()) {
    throw AlignmentError("validity mask size does not match depth map");
  }
  valid_ = std::move(valid);
}

void DepthMap::require_finite() const {
  for (std::size_t i = 0; i < values_.size(); ++i) {
    if (!std::isfinite(values_[i])) {
      throw InvariantError("non-finite depth at pixel " + std::to_string(i));
    }
  }
}

void DepthMap::require_positive() const {
  for (std::size_t i = 0; i < values_.size(); ++i) {
    if (valid(i) && !(std::isfinite(values_[i]) && values_[i] > 0.0)) {
      throw InvariantError("depth must be finite and positive at pixel " + std::to_string(i));
    }
  }
}

BinaryMask::BinaryMask(std::size_t height, std::size_t width, bool fill)
    : height_(height), width_(width), bits_(height * width, fill ? 1 : 0) {}

void BinaryMask::fill_rect(std::size_t row, std::size_t col, std::size_t h, std::size_t w) {
  const std::size_t r_end = std::min(row + h, height_);
  const std::size_t c_end = std::min(col + w, width_);
  for (std::size_t r = row; r < r_end; ++r) {
    for (std::size_t c = col; c < c_end; ++c) bits_[r * width_ + c] = 1;
  }
}

std::size_t BinaryMask::count() const noexcept {
  return static_cast<std::size_t>(std::count(bits_.begin(), bits_.end(), std::uint8_t{1}));
}

SparseMeasurements::SparseMeasurements(std::size_t height, std::size_t width,
                                       std::vector<Measurement> points, MeasurementPattern pattern)
    : height_(height), width_(width), points_(std::move(points)), pattern_(pattern) {
  std::set<std::pair<std::size_t, std::size_t>> seen;
  for (std::size_t i = 0; i < points_.size(); ++i) {
    const auto& p = points_[i];
    if (p.row >= height_ || p.col >= width_) {
      throw InvariantError("measurement " + std::to_string(i) + " at (" + std::to_string(p.row) +
                           "," + std::to_string(p.col) + ") is out of bounds");
    }
    if (!std::isfinite(p.depth) || p.depth <= 0.0) {
      throw InvariantError("measurement " + std::to_string(i) + " has non-positive depth");
    }
    if (!seen.emplace(p.row, p.col).second) {
      throw InvariantError("duplicate measurement at (" + std::to_string(p.row) + "," +
                           std::to_string(p.col) + ")");
    }
  }
  if (pattern_ == MeasurementPattern::regular_grid && !is_complete_lattice()) {
    throw InvariantError("regular-grid measurements do not form a complete lattice");
  }
}

bool SparseMeasurements::is_complete_lattice() const {
  if (points_.empty()) return false;
  std::set<std::size_t> rows, cols;
  for (const auto& p : points_) {
    rows.insert(p.row);
    cols.insert(p.col);
  }
  // Points are unique, so the count check is sufficient.
  return rows.size() * cols.size() == points_.size();
}

SparseMeasurements sample_at(const DepthMap& z, std::span<const Measurement> where,
                             MeasurementPattern pattern) {
  std::vector<Measurement> pts;
  pts.reserve(where.size());
  for (const auto& m : where) pts.push_back({m.row, m.col, z(m.row, m.col)});
  return SparseMeasurements(z.height(), z.width(), std::move(pts), pattern);
}

PatchGrid make_patch_grid(std::size_t height, std::size_t width, std::size_t patch_size,
                          std::size_t stride) {
  if (patch_size < 1) throw ConfigError("patch size must be >= 1");
  if (stride < 1 || stride > patch_size) throw ConfigError("stride must lie in [1, patch size]");
  if (patch_size > height || patch_size > width) {
    throw ConfigError("patch size " + std::to_string(patch_size) + " exceeds image " +
                      std::to_string(height) + "x" + std::to_string(width));
  }
  if ((height - patch_size) % stride != 0) {
    throw AlignmentError("height " + std::to_string(height) + " is misaligned with patch size " +
                         std::to_string(patch_size) + " and stride " + std::to_string(stride));
  }
  if ((width - patch_size) % stride != 0) {
    throw AlignmentError("width " + std::to_string(width) + " is misaligned with patch size " +
                         std::to_string(patch_size) + " and stride " + std::to_string(stride));
  }
  PatchGrid g;
  g.height_ = height;
  g.width_ = width;
  g.k_ = patch_size;
  g.stride_ = stride;
  g.rows_ = (height - patch_size) / stride + 1;
  g.cols_ = (width - patch_size) / stride + 1;
  return g;
}

PatchGrid::Span PatchGrid::covering(std::size_t y, std::size_t count) const noexcept {
  // Patch r covers y iff r*s <= y < r*s + K.
  const std::size_t first = y + 1 > k_ ? (y + 1 - k_ + stride_ - 1) / stride_ : 0;
  const std::size_t last = std::min(y / stride_, count - 1) + 1;
  return {first, last};
}

std::vector<std::size_t> PatchGrid::coverage() const {
  std::vector<std::size_t> out(height_ * width_);
  for (std::size_t y = 0; y < height_; ++y) {
    const auto rs = covering_rows(y);
    for (std::size_t x = 0; x < width_; ++x) {
      const auto cs = covering_cols(x);
      out[y * width_ + x] = (rs.last - rs.first) * (cs.last - cs.first);
    }
  }
  return out;
}

std::vector<double> crop(const DepthMap& z, const PatchGrid& grid, std::size_t patch) {
  if (!grid.matches(z)) throw AlignmentError("depth map does not match patch grid");
  if (patch >= grid.patch_count()) {
    throw IndexError("patch index " + std::to_string(patch) + " out of range (" +
                     std::to_string(grid.patch_count()) + " patches)");
  }
  const std::size_t k = grid.patch_size(), t = grid.top(patch), l = grid.left(patch);
  std::vector<double> out(k * k);
  for (std::size_t ky = 0; ky < k; ++ky) {
    for (std::size_t kx = 0; kx < k; ++kx) out[ky * k + kx] = z(t + ky, l + kx);
  }
  return out;
}

std::vector<double> crop_all(const DepthMap& z, const PatchGrid& grid) {
  if (!grid.matches(z)) throw AlignmentError("depth map does not match patch grid");
  const std::size_t n = grid.patch_count(), area = grid.patch_area();
  std::vector<double> out(n * area);
  for (std::size_t i = 0; i < n; ++i) {
    const auto c = crop(z, grid, i);
    std::copy(c.begin(), c.end(), out.begin() + static_cast<std::ptrdiff_t>(i * area));
  }
  return out;
}

}  // namespace pmd
