#pragma once

#include <cstddef>
#include <memory>
#include <optional>
#include <span>
#include <vector>

#include "pmd/core.hpp"
#include "pmd/kernels.hpp"
#include "pmd/samplers.hpp"

namespace pmd {

/// Additive cost on the sample chosen for one patch, at unit weight.
class PatchCost {
 public:
  virtual ~PatchCost() = default;
  virtual double evaluate(const PatchGrid& grid, std::size_t patch, std::span<const float> sample) const = 0;
};

/// Cost on the whole depth map, at unit weight, with the pseudo-gradient used by
/// the global update.
class GlobalCost {
 public:
  virtual ~GlobalCost() = default;
  virtual double value(const DepthMap& z) const = 0;
  virtual DepthMap pseudo_gradient(const DepthMap& z) const = 0;
};

/// Linear ramp of the cost weight from `start` to `end` over the first
/// `iterations` outer iterations, then constant at `end`.
struct LambdaRamp {
  double start = 5.0;
  double end = 10.0;
  std::size_t iterations = 25;
};

/// External information C(Z): an optional per-patch part, an optional global
/// part, and the weight applied to both.
struct CostModel {
  std::shared_ptr<const PatchCost> patch;
  std::shared_ptr<const GlobalCost> global;
  double lambda = 1.0;
  std::optional<LambdaRamp> ramp;

  /// Effective weight at outer iteration `iteration` (0-based).
  double weight_at(std::size_t iteration) const;
  bool has_patch() const noexcept { return static_cast<bool>(patch); }
  bool has_global() const noexcept { return static_cast<bool>(global); }
  void validate() const;
};

struct SolverOptions {
  std::size_t max_iterations = 50;
  double step_size = 0.5;  // gamma
  std::size_t gradient_steps = 5;

  void validate(bool has_global_cost) const;
};

struct SolveReport {
  DepthMap depth;
  Selection selection;
  std::size_t iterations = 0;
  /// Objective after every half-step: selection, then global update, repeated.
  std::vector<double> trace;
  bool converged = false;
};

/// table(i, s) = lambda * C_i(x_i^s). Throws ConfigError without a per-patch cost.
PatchCostTable precompute_patch_costs(const CostModel& cost, const SampleSet& samples);

/// Per-patch argmin of |crop_i(Z) - x|^2 + table(i, x); ties to the lowest sample index.
Selection select_samples(const DepthMap& z, const SampleSet& samples, const PatchCostTable* table = nullptr);

/// Overlap-average of the selection, then `gradient_steps` steps of
/// Z <- Z - gamma * weight * grad C^G(Z) when a global cost is present.
DepthMap update_global(const Selection& sel, const SampleSet& samples, const CostModel& cost,
                       const SolverOptions& opts, std::size_t iteration = 0);

/// sum_i |crop_i(Z) - x_i|^2 + sum_i table(i, x_i) + weight * C^G(Z).
double objective(const DepthMap& z, const SampleSet& samples, const Selection& sel,
                 const PatchCostTable* table, const CostModel& cost, std::size_t iteration = 0);

/// Alternating MAP inference initialised at the mean depth. Stops when the
/// selection repeats (with the weight no longer ramping) or after max_iterations
/// global updates.
SolveReport map_infer(const SampleSet& samples, const CostModel& cost, const SolverOptions& opts = {});

/// Same loop, initialised at the overlap-average of `initial`.
SolveReport map_infer_from(const SampleSet& samples, const CostModel& cost, const SolverOptions& opts,
                           const Selection& initial);

// Cost constructions ---------------------------------------------------------

/// Per-patch cost that is identically zero.
CostModel make_zero_cost();

enum class SpreadMode { nearest_neighbor, bilinear_grid, exact_adjoint };

/// Sparse measurement cost |Z(measured) - F|^2 and its spreading pseudo-gradient.
///
/// The pseudo-gradient is the residual spread back over the image, without the
/// factor two of the true gradient:
///  - nearest_neighbor: every pixel takes the residual of its nearest
///    measurement (Euclidean; ties to the lowest measurement index);
///  - bilinear_grid: bilinear interpolation of the residual lattice, constant
///    beyond the lattice hull;
///  - exact_adjoint: the residual at measured pixels, zero elsewhere.
class SparseCost : public GlobalCost {
 public:
  SparseCost(SparseMeasurements measurements, SpreadMode mode);

  double value(const DepthMap& z) const override;
  DepthMap pseudo_gradient(const DepthMap& z) const override;

  /// z(measured) - F, per measurement.
  std::vector<double> residuals(const DepthMap& z) const;
  const SparseMeasurements& measurements() const noexcept { return f_; }
  SpreadMode mode() const noexcept { return mode_; }
  /// Nearest measurement index per pixel (nearest_neighbor mode only).
  const std::vector<std::uint32_t>& nearest() const noexcept { return nearest_; }

 private:
  void check(const DepthMap& z) const;

  SparseMeasurements f_;
  SpreadMode mode_;
  std::vector<std::uint32_t> nearest_;
  // Bilinear lattice: sorted rows/cols and measurement index per lattice node.
  std::vector<std::size_t> lattice_rows_;
  std::vector<std::size_t> lattice_cols_;
  std::vector<std::uint32_t> lattice_index_;
};

/// Throws ConfigError on an empty measurement set or a bilinear_grid mode with a
/// non-lattice pattern.
CostModel make_sparse_cost(const SparseMeasurements& measurements, SpreadMode mode, double lambda = 1.0);

/// C_i(x) = lambda * |crop_i(W) o (x - crop_i(F))|^2, evaluated on samples.
CostModel make_uncrop_cost(const DepthMap& dense, const BinaryMask& mask, double lambda = 150.0);

/// C_i(x) = -(lambda / m) sum_m' |crop_i(W^m') o (crop_i(Z^m') - x)|^2. Without
/// masks the elementwise weight is dropped entirely.
CostModel make_diversity_cost(std::vector<DepthMap> previous, std::vector<BinaryMask> masks, double lambda = 10.0);

}  // namespace pmd
