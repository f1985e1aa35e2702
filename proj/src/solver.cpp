#include "pmd/solver.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "pmd/density.hpp"

namespace pmd {

double CostModel::weight_at(std::size_t iteration) const {
  if (!ramp) return lambda;
  if (ramp->iterations == 0 || iteration >= ramp->iterations) return ramp->end;
  const double f = static_cast<double>(iteration) / static_cast<double>(ramp->iterations);
  return ramp->start + (ramp->end - ramp->start) * f;
}

void CostModel::validate() const {
  if (!(lambda >= 0.0) || !std::isfinite(lambda)) throw ConfigError("cost weight must be >= 0");
  if (ramp && (!(ramp->start >= 0.0) || !(ramp->end >= 0.0))) {
    throw ConfigError("cost weight ramp must stay >= 0");
  }
}

void SolverOptions::validate(bool has_global_cost) const {
  if (max_iterations < 1) throw ConfigError("max iterations must be >= 1");
  if (has_global_cost && !(step_size > 0.0)) throw ConfigError("step size must be > 0 with a global cost");
}

namespace {

PatchCostTable unit_patch_costs(const PatchCost& cost, const SampleSet& samples) {
  const auto& grid = samples.grid();
  PatchCostTable table;
  table.patches = grid.patch_count();
  table.samples = samples.samples_per_patch();
  table.values.resize(table.patches * table.samples);
  const auto total = static_cast<std::ptrdiff_t>(table.patches);
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t pp = 0; pp < total; ++pp) {
    const auto p = static_cast<std::size_t>(pp);
    for (std::size_t s = 0; s < table.samples; ++s) {
      table.values[p * table.samples + s] = cost.evaluate(grid, p, samples.sample(p, s));
    }
  }
  return table;
}

PatchCostTable scaled(const PatchCostTable& unit, double weight) {
  PatchCostTable t = unit;
  for (auto& v : t.values) v *= weight;
  return t;
}

}  // namespace

PatchCostTable precompute_patch_costs(const CostModel& cost, const SampleSet& samples) {
  if (!cost.has_patch()) throw ConfigError("cost model has no per-patch capability");
  cost.validate();
  return scaled(unit_patch_costs(*cost.patch, samples), cost.lambda);
}

Selection select_samples(const DepthMap& z, const SampleSet& samples, const PatchCostTable* table) {
  return kernels::select_samples(z, samples, table);
}

DepthMap update_global(const Selection& sel, const SampleSet& samples, const CostModel& cost,
                       const SolverOptions& opts, std::size_t iteration) {
  DepthMap z = kernels::average_selected(samples, sel);
  if (!cost.has_global()) return z;
  const double step = opts.step_size * cost.weight_at(iteration);
  for (std::size_t k = 0; k < opts.gradient_steps; ++k) {
    const DepthMap g = cost.global->pseudo_gradient(z);
    for (std::size_t i = 0; i < z.size(); ++i) z[i] -= step * g[i];
  }
  return z;
}

double objective(const DepthMap& z, const SampleSet& samples, const Selection& sel, const PatchCostTable* table,
                 const CostModel& cost, std::size_t iteration) {
  double total = kernels::selection_residual(z, samples, sel);
  if (table) {
    double patch_terms = 0.0;
    for (std::size_t p = 0; p < sel.size(); ++p) patch_terms += (*table)(p, sel.index[p]);
    total += patch_terms;
  }
  if (cost.has_global()) total += cost.weight_at(iteration) * cost.global->value(z);
  return total;
}

namespace {

SolveReport run(const SampleSet& samples, const CostModel& cost, const SolverOptions& opts, DepthMap z) {
  cost.validate();
  opts.validate(cost.has_global());

  std::optional<PatchCostTable> unit;
  if (cost.has_patch()) unit = unit_patch_costs(*cost.patch, samples);

  SolveReport report;
  std::optional<Selection> previous;
  for (std::size_t t = 0;; ++t) {
    const double weight = cost.weight_at(t);
    std::optional<PatchCostTable> table;
    if (unit) table = scaled(*unit, weight);
    const PatchCostTable* tp = table ? &*table : nullptr;

    Selection sel = kernels::select_samples(z, samples, tp);
    report.trace.push_back(objective(z, samples, sel, tp, cost, t));

    // A repeated selection is a fixed point only once the weight has stopped changing.
    if (previous && sel == *previous && weight == cost.weight_at(t - 1)) {
      report.converged = true;
      report.selection = std::move(sel);
      break;
    }
    if (report.iterations == opts.max_iterations) {
      report.selection = std::move(sel);
      break;
    }
    z = update_global(sel, samples, cost, opts, t);
    report.trace.push_back(objective(z, samples, sel, tp, cost, t));
    ++report.iterations;
    previous = std::move(sel);
  }
  report.depth = std::move(z);
  return report;
}

}  // namespace

SolveReport map_infer(const SampleSet& samples, const CostModel& cost, const SolverOptions& opts) {
  return run(samples, cost, opts, kernels::mean_depth(samples));
}

SolveReport map_infer_from(const SampleSet& samples, const CostModel& cost, const SolverOptions& opts,
                           const Selection& initial) {
  return run(samples, cost, opts, kernels::average_selected(samples, initial));
}

// Costs ----------------------------------------------------------------------

namespace {

class ZeroCost final : public PatchCost {
 public:
  double evaluate(const PatchGrid&, std::size_t, std::span<const float>) const override { return 0.0; }
};

class UncropCost final : public PatchCost {
 public:
  UncropCost(DepthMap dense, BinaryMask mask) : f_(std::move(dense)), w_(std::move(mask)) {}

  double evaluate(const PatchGrid& grid, std::size_t patch, std::span<const float> x) const override {
    check(grid);
    const std::size_t k = grid.patch_size(), t = grid.top(patch), l = grid.left(patch);
    double sum = 0.0;
    for (std::size_t ky = 0; ky < k; ++ky) {
      for (std::size_t kx = 0; kx < k; ++kx) {
        if (!w_(t + ky, l + kx)) continue;
        const double d = x[ky * k + kx] - f_(t + ky, l + kx);
        sum += d * d;
      }
    }
    return sum;
  }

 private:
  void check(const PatchGrid& grid) const {
    if (!grid.matches(f_)) throw AlignmentError("un-crop measurements do not match the patch grid");
  }

  DepthMap f_;
  BinaryMask w_;
};

class DiversityCost final : public PatchCost {
 public:
  DiversityCost(std::vector<DepthMap> previous, std::vector<BinaryMask> masks)
      : prev_(std::move(previous)), masks_(std::move(masks)) {}

  double evaluate(const PatchGrid& grid, std::size_t patch, std::span<const float> x) const override {
    const std::size_t k = grid.patch_size(), t = grid.top(patch), l = grid.left(patch);
    double total = 0.0;
    for (std::size_t m = 0; m < prev_.size(); ++m) {
      const DepthMap& z = prev_[m];
      if (!grid.matches(z)) throw AlignmentError("previous estimate does not match the patch grid");
      double sum = 0.0;
      for (std::size_t ky = 0; ky < k; ++ky) {
        for (std::size_t kx = 0; kx < k; ++kx) {
          double d = z(t + ky, l + kx) - x[ky * k + kx];
          if (!masks_.empty()) d *= masks_[m](t + ky, l + kx) ? 1.0 : 0.0;
          sum += d * d;
        }
      }
      total += sum;
    }
    return -total / static_cast<double>(prev_.size());
  }

 private:
  std::vector<DepthMap> prev_;
  std::vector<BinaryMask> masks_;
};

}  // namespace

CostModel make_zero_cost() {
  CostModel c;
  c.patch = std::make_shared<ZeroCost>();
  c.lambda = 1.0;
  return c;
}

SparseCost::SparseCost(SparseMeasurements measurements, SpreadMode mode)
    : f_(std::move(measurements)), mode_(mode) {
  if (f_.empty()) throw ConfigError("sparse cost needs at least one measurement");
  const std::size_t h = f_.height(), w = f_.width();
  if (mode_ == SpreadMode::nearest_neighbor) {
    nearest_.resize(h * w);
    const auto total = static_cast<std::ptrdiff_t>(h * w);
#pragma omp parallel for schedule(static)
    for (std::ptrdiff_t ii = 0; ii < total; ++ii) {
      const auto i = static_cast<std::size_t>(ii);
      const auto y = static_cast<long long>(i / w), x = static_cast<long long>(i % w);
      long long best = std::numeric_limits<long long>::max();
      std::uint32_t arg = 0;
      for (std::size_t m = 0; m < f_.size(); ++m) {
        const long long dy = static_cast<long long>(f_[m].row) - y;
        const long long dx = static_cast<long long>(f_[m].col) - x;
        const long long d2 = dy * dy + dx * dx;
        if (d2 < best) {
          best = d2;
          arg = static_cast<std::uint32_t>(m);
        }
      }
      nearest_[i] = arg;
    }
  } else if (mode_ == SpreadMode::bilinear_grid) {
    if (f_.pattern() != MeasurementPattern::regular_grid || !f_.is_complete_lattice()) {
      throw ConfigError("bilinear-grid spreading requires regular-grid measurements");
    }
    for (const auto& p : f_.points()) {
      lattice_rows_.push_back(p.row);
      lattice_cols_.push_back(p.col);
    }
    for (auto* v : {&lattice_rows_, &lattice_cols_}) {
      std::sort(v->begin(), v->end());
      v->erase(std::unique(v->begin(), v->end()), v->end());
    }
    lattice_index_.resize(lattice_rows_.size() * lattice_cols_.size());
    for (std::size_t m = 0; m < f_.size(); ++m) {
      const auto a = static_cast<std::size_t>(
          std::lower_bound(lattice_rows_.begin(), lattice_rows_.end(), f_[m].row) - lattice_rows_.begin());
      const auto b = static_cast<std::size_t>(
          std::lower_bound(lattice_cols_.begin(), lattice_cols_.end(), f_[m].col) - lattice_cols_.begin());
      lattice_index_[a * lattice_cols_.size() + b] = static_cast<std::uint32_t>(m);
    }
  }
}

void SparseCost::check(const DepthMap& z) const {
  if (z.height() != f_.height() || z.width() != f_.width()) {
    throw AlignmentError("depth map does not match measurement image size");
  }
}

std::vector<double> SparseCost::residuals(const DepthMap& z) const {
  check(z);
  std::vector<double> r(f_.size());
  for (std::size_t m = 0; m < f_.size(); ++m) r[m] = z(f_[m].row, f_[m].col) - f_[m].depth;
  return r;
}

double SparseCost::value(const DepthMap& z) const {
  double sum = 0.0;
  for (double r : residuals(z)) sum += r * r;
  return sum;
}

namespace {

// Bracketing lattice nodes and the weight of the upper one, clamped at the ends.
struct Bracket {
  std::size_t lo;
  std::size_t hi;
  double t;
};

Bracket bracket(const std::vector<std::size_t>& nodes, std::size_t y) {
  if (y <= nodes.front()) return {0, 0, 0.0};
  if (y >= nodes.back()) return {nodes.size() - 1, nodes.size() - 1, 0.0};
  const auto hi = static_cast<std::size_t>(std::upper_bound(nodes.begin(), nodes.end(), y) - nodes.begin());
  const std::size_t lo = hi - 1;
  const double t = static_cast<double>(y - nodes[lo]) / static_cast<double>(nodes[hi] - nodes[lo]);
  return {lo, hi, t};
}

}  // namespace

DepthMap SparseCost::pseudo_gradient(const DepthMap& z) const {
  const auto r = residuals(z);
  DepthMap g(z.height(), z.width(), 0.0);
  switch (mode_) {
    case SpreadMode::exact_adjoint:
      for (std::size_t m = 0; m < f_.size(); ++m) g(f_[m].row, f_[m].col) = r[m];
      break;
    case SpreadMode::nearest_neighbor:
      for (std::size_t i = 0; i < g.size(); ++i) g[i] = r[nearest_[i]];
      break;
    case SpreadMode::bilinear_grid: {
      const std::size_t nc = lattice_cols_.size();
      for (std::size_t y = 0; y < g.height(); ++y) {
        const Bracket by = bracket(lattice_rows_, y);
        for (std::size_t x = 0; x < g.width(); ++x) {
          const Bracket bx = bracket(lattice_cols_, x);
          const double r00 = r[lattice_index_[by.lo * nc + bx.lo]];
          const double r01 = r[lattice_index_[by.lo * nc + bx.hi]];
          const double r10 = r[lattice_index_[by.hi * nc + bx.lo]];
          const double r11 = r[lattice_index_[by.hi * nc + bx.hi]];
          const double top = r00 + bx.t * (r01 - r00);
          const double bottom = r10 + bx.t * (r11 - r10);
          g(y, x) = top + by.t * (bottom - top);
        }
      }
      break;
    }
  }
  return g;
}

CostModel make_sparse_cost(const SparseMeasurements& measurements, SpreadMode mode, double lambda) {
  CostModel c;
  c.global = std::make_shared<SparseCost>(measurements, mode);
  c.lambda = lambda;
  c.validate();
  return c;
}

CostModel make_uncrop_cost(const DepthMap& dense, const BinaryMask& mask, double lambda) {
  if (dense.height() != mask.height() || dense.width() != mask.width()) {
    throw AlignmentError("un-crop mask does not match measurement map");
  }
  for (std::size_t i = 0; i < dense.size(); ++i) {
    if (mask[i] && !std::isfinite(dense[i])) throw InvariantError("un-crop measurement not finite inside mask");
  }
  CostModel c;
  c.patch = std::make_shared<UncropCost>(dense, mask);
  c.lambda = lambda;
  c.validate();
  return c;
}

CostModel make_diversity_cost(std::vector<DepthMap> previous, std::vector<BinaryMask> masks, double lambda) {
  if (previous.empty()) throw ConfigError("diversity cost needs at least one previous estimate");
  if (!masks.empty() && masks.size() != previous.size()) {
    throw ConfigError("diversity cost has " + std::to_string(masks.size()) + " masks for " +
                      std::to_string(previous.size()) + " estimates");
  }
  for (std::size_t m = 0; m < masks.size(); ++m) {
    if (!masks[m].same_shape(previous[m])) throw AlignmentError("diversity mask does not match its estimate");
  }
  CostModel c;
  c.patch = std::make_shared<DiversityCost>(std::move(previous), std::move(masks));
  c.lambda = lambda;
  c.validate();
  return c;
}

}  // namespace pmd
