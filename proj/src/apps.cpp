#include "pmd/apps.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "pmd/density.hpp"
#include "pmd/rng.hpp"

namespace pmd {

SolveReport complete_sparse(const SampleSet& samples, const SparseMeasurements& measurements,
                            const SolverOptions& opts, double lambda) {
  const auto& grid = samples.grid();
  if (!measurements.empty() && (measurements.height() != grid.height() || measurements.width() != grid.width())) {
    throw AlignmentError("measurements do not match the sample grid");
  }
  if (measurements.empty()) return map_infer(samples, make_zero_cost(), opts);
  const SpreadMode mode = measurements.pattern() == MeasurementPattern::regular_grid ? SpreadMode::bilinear_grid
                                                                                      : SpreadMode::nearest_neighbor;
  return map_infer(samples, make_sparse_cost(measurements, mode, lambda), opts);
}

SolveReport uncrop(const SampleSet& samples, const DepthMap& dense, const BinaryMask& mask,
                   const SolverOptions& opts, double lambda) {
  if (mask.empty()) throw ConfigError("un-crop mask selects no pixels");
  if (!samples.grid().matches(dense)) throw AlignmentError("un-crop measurements do not match the sample grid");
  return map_infer(samples, make_uncrop_cost(dense, mask, lambda), opts);
}

BinaryMask line_mask(std::size_t height, std::size_t width, std::optional<std::size_t> row) {
  const std::size_t r = row.value_or(height / 2);
  if (r >= height) throw ConfigError("line row out of range");
  BinaryMask m(height, width);
  m.fill_rect(r, 0, 1, width);
  return m;
}

// User guidance ---------------------------------------------------------------

bool ModeSet::annotated() const noexcept {
  return std::any_of(masks.begin(), masks.end(), [](const BinaryMask& m) { return !m.empty(); });
}

ModeSet start_modes(const SampleSet& samples) {
  ModeSet set;
  set.modes.push_back(mean_depth(samples));
  set.masks.emplace_back(samples.grid().height(), samples.grid().width());
  set.provenance.push_back({ModeKind::mean, 0.0, 0});
  return set;
}

void next_mode(const SampleSet& samples, ModeSet& modes, const ModeOptions& opts) {
  if (modes.size() == 0) throw ConfigError("mode set has no initial estimate");
  std::vector<BinaryMask> masks;
  if (modes.annotated()) masks = modes.masks;
  CostModel cost = make_diversity_cost(modes.modes, std::move(masks), opts.lambda);
  if (opts.ramp) cost.ramp = LambdaRamp{opts.lambda / 2.0, opts.lambda, opts.solver.max_iterations / 2};
  auto report = map_infer(samples, cost, opts.solver);
  const std::size_t previous = modes.size();
  modes.modes.push_back(std::move(report.depth));
  modes.masks.emplace_back(samples.grid().height(), samples.grid().width());
  modes.provenance.push_back({ModeKind::diverse, opts.lambda, previous});
}

ModeSet generate_modes(const SampleSet& samples, std::size_t count, const ModeOptions& opts,
                       const std::vector<BinaryMask>& masks) {
  if (count < 1) throw ConfigError("mode count must be >= 1");
  ModeSet set = start_modes(samples);
  auto attach = [&](std::size_t m) {
    if (m >= masks.size()) return;
    if (masks[m].height() != samples.grid().height() || masks[m].width() != samples.grid().width()) {
      throw AlignmentError("annotation mask " + std::to_string(m) + " does not match the image");
    }
    set.masks[m] = masks[m];
  };
  attach(0);
  while (set.size() < count) {
    next_mode(samples, set, opts);
    attach(set.size() - 1);
  }
  return set;
}

std::size_t simulate_selection(const ModeSet& modes, const DepthMap& gt, std::size_t prefix) {
  if (modes.size() == 0 || prefix == 0) throw ConfigError("no modes to select from");
  prefix = std::min(prefix, modes.size());
  std::size_t best = 0;
  double best_rms = rms_error(modes.modes[0], gt);
  for (std::size_t m = 1; m < prefix; ++m) {
    const double r = rms_error(modes.modes[m], gt);
    if (r < best_rms) {
      best_rms = r;
      best = m;
    }
  }
  return best;
}

std::size_t simulate_selection(const ModeSet& modes, const DepthMap& gt) {
  return simulate_selection(modes, gt, modes.size());
}

double overlap_fraction(const Window& a, const Window& b) {
  const auto lo_r = std::max(a.row, b.row), hi_r = std::min(a.row + a.size, b.row + b.size);
  const auto lo_c = std::max(a.col, b.col), hi_c = std::min(a.col + a.size, b.col + b.size);
  if (hi_r <= lo_r || hi_c <= lo_c || a.size == 0) return 0.0;
  return static_cast<double>((hi_r - lo_r) * (hi_c - lo_c)) / static_cast<double>(a.size * a.size);
}

Annotation simulate_annotation(const DepthMap& z, const DepthMap& gt, const AnnotationOptions& opts,
                               const std::vector<Window>& prior) {
  if (!z.same_shape(gt)) throw AlignmentError("estimate and ground truth differ in shape");
  const std::size_t h = z.height(), w = z.width(), size = opts.window;
  if (size < 1 || size > std::min(h, w)) throw ConfigError("annotation window must fit inside the image");

  // Summed-area table of squared error over valid pixels.
  std::vector<double> sat((h + 1) * (w + 1), 0.0);
  for (std::size_t y = 0; y < h; ++y) {
    double row = 0.0;
    for (std::size_t x = 0; x < w; ++x) {
      const std::size_t i = y * w + x;
      if (gt.valid(i) && gt[i] > 0.0) row += (z[i] - gt[i]) * (z[i] - gt[i]);
      sat[(y + 1) * (w + 1) + x + 1] = sat[y * (w + 1) + x + 1] + row;
    }
  }
  auto score = [&](std::size_t r, std::size_t c) {
    const std::size_t r1 = r + size, c1 = c + size;
    return sat[r1 * (w + 1) + c1] - sat[r * (w + 1) + c1] - sat[r1 * (w + 1) + c] + sat[r * (w + 1) + c];
  };

  Annotation out;
  out.mask = BinaryMask(h, w);
  out.requested = opts.count;
  std::vector<Window> taken = prior;
  for (std::size_t k = 0; k < opts.count; ++k) {
    double best = -1.0;
    std::optional<Window> pick;
    for (std::size_t r = 0; r + size <= h; ++r) {
      for (std::size_t c = 0; c + size <= w; ++c) {
        const double s = score(r, c);
        if (!(s > best)) continue;
        const Window cand{r, c, size};
        const bool clash = std::any_of(taken.begin(), taken.end(), [&](const Window& t) {
          return overlap_fraction(cand, t) > opts.max_overlap;
        });
        if (clash) continue;
        best = s;
        pick = cand;
      }
    }
    if (!pick) break;
    taken.push_back(*pick);
    out.windows.push_back(*pick);
    out.mask.fill_rect(pick->row, pick->col, size, size);
  }
  return out;
}

ModeSet annotation_loop(const SampleSet& samples, const DepthMap& gt, std::size_t count, const ModeOptions& opts,
                        const AnnotationOptions& annotate) {
  if (count < 1) throw ConfigError("mode count must be >= 1");
  ModeSet set = start_modes(samples);
  std::vector<Window> marked;
  while (set.size() < count) {
    const std::size_t m = set.size() - 1;
    Annotation a = simulate_annotation(set.modes[m], gt, annotate, marked);
    marked.insert(marked.end(), a.windows.begin(), a.windows.end());
    set.masks[m] = std::move(a.mask);
    next_mode(samples, set, opts);
  }
  return set;
}

// Other inference tasks ----------------------------------------------------------

std::vector<Pixel> guided_points(const DepthMap& variance, std::size_t budget, double min_distance) {
  if (budget < 1) throw ConfigError("measurement budget must be >= 1");
  const std::size_t h = variance.height(), w = variance.width(), n = variance.size();
  budget = std::min(budget, n);

  // Decreasing variance, ties in row-major order.
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return variance[a] > variance[b]; });

  auto is_peak = [&](std::size_t i) {
    const auto y = static_cast<long long>(i / w), x = static_cast<long long>(i % w);
    for (long long dy = -1; dy <= 1; ++dy) {
      for (long long dx = -1; dx <= 1; ++dx) {
        if (dy == 0 && dx == 0) continue;
        const long long yy = y + dy, xx = x + dx;
        if (yy < 0 || xx < 0 || yy >= static_cast<long long>(h) || xx >= static_cast<long long>(w)) continue;
        if (!(variance[i] > variance[static_cast<std::size_t>(yy) * w + static_cast<std::size_t>(xx)])) return false;
      }
    }
    return true;
  };

  std::vector<Pixel> chosen;
  std::vector<std::uint8_t> taken(n, 0);
  auto far_enough = [&](std::size_t i, double d) {
    const double y = static_cast<double>(i / w), x = static_cast<double>(i % w);
    const double d2 = d * d;
    return std::all_of(chosen.begin(), chosen.end(), [&](const Pixel& p) {
      const double dy = static_cast<double>(p.row) - y, dx = static_cast<double>(p.col) - x;
      return dy * dy + dx * dx >= d2;
    });
  };
  auto sweep = [&](bool peaks_only, double d) {
    for (std::size_t i : order) {
      if (chosen.size() == budget) return;
      if (taken[i] || (peaks_only && !is_peak(i)) || !far_enough(i, d)) continue;
      taken[i] = 1;
      chosen.push_back({i / w, i % w});
    }
  };

  sweep(true, min_distance);
  for (double d = min_distance; chosen.size() < budget; d -= 1.0) {
    sweep(false, std::max(d, 0.0));
    if (d <= 0.0) break;
  }
  return chosen;
}

std::vector<Pixel> random_points(std::size_t height, std::size_t width, std::size_t budget, std::uint64_t seed) {
  const std::size_t n = height * width;
  budget = std::min(budget, n);
  std::vector<std::size_t> idx(n);
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  KeyedStream rng({seed, 0x7a2d0ULL});
  for (std::size_t k = 0; k < budget; ++k) {
    const std::size_t j = k + static_cast<std::size_t>(rng.next() % (n - k));
    std::swap(idx[k], idx[j]);
  }
  std::vector<Pixel> out;
  out.reserve(budget);
  for (std::size_t k = 0; k < budget; ++k) out.push_back({idx[k] / width, idx[k] % width});
  return out;
}

Ordinal classify_pair(double depth_a, double depth_b, double tau) {
  const double hi = std::max(depth_a, depth_b), lo = std::min(depth_a, depth_b);
  if (hi / lo < 1.0 + tau) return Ordinal::equal;
  return depth_a < depth_b ? Ordinal::a_closer : Ordinal::b_closer;
}

namespace {

void tally(OrdinalVerdict& v, Ordinal o) {
  switch (o) {
    case Ordinal::a_closer: ++v.a_closer; break;
    case Ordinal::equal: ++v.equal; break;
    case Ordinal::b_closer: ++v.b_closer; break;
  }
  ++v.pairs;
}

Ordinal majority(const OrdinalVerdict& v) {
  const std::size_t top = std::max({v.a_closer, v.equal, v.b_closer});
  if (v.equal == top) return Ordinal::equal;
  if (v.a_closer == top) return Ordinal::a_closer;
  return Ordinal::b_closer;
}

}  // namespace

OrdinalVerdict ordinal_vote(const SampleSet& samples, Pixel a, Pixel b, double tau) {
  const auto& grid = samples.grid();
  if (a == b) throw ConfigError("ordinal query needs two distinct points");
  if (a.row >= grid.height() || a.col >= grid.width() || b.row >= grid.height() || b.col >= grid.width()) {
    throw IndexError("ordinal query point out of bounds");
  }
  const auto ra = grid.covering_rows(a.row), rb = grid.covering_rows(b.row);
  const auto ca = grid.covering_cols(a.col), cb = grid.covering_cols(b.col);
  const std::size_t r0 = std::max(ra.first, rb.first), r1 = std::min(ra.last, rb.last);
  const std::size_t c0 = std::max(ca.first, cb.first), c1 = std::min(ca.last, cb.last);
  if (r0 >= r1 || c0 >= c1) {
    throw CoverageError("points are too far apart to share a " + std::to_string(grid.patch_size()) + "x" +
                        std::to_string(grid.patch_size()) + " patch");
  }
  const std::size_t k = grid.patch_size();
  OrdinalVerdict v;
  for (std::size_t r = r0; r < r1; ++r) {
    for (std::size_t c = c0; c < c1; ++c) {
      const std::size_t p = r * grid.cols() + c;
      const std::size_t oa = (a.row - grid.top(p)) * k + (a.col - grid.left(p));
      const std::size_t ob = (b.row - grid.top(p)) * k + (b.col - grid.left(p));
      for (std::size_t s = 0; s < samples.samples_per_patch(); ++s) {
        const auto x = samples.sample(p, s);
        tally(v, classify_pair(x[oa], x[ob], tau));
      }
    }
  }
  v.relation = majority(v);
  return v;
}

OrdinalVerdict ordinal_from_map(const DepthMap& z, Pixel a, Pixel b, double tau) {
  if (a.row >= z.height() || a.col >= z.width() || b.row >= z.height() || b.col >= z.width()) {
    throw IndexError("ordinal query point out of bounds");
  }
  OrdinalVerdict v;
  tally(v, classify_pair(z(a.row, a.col), z(b.row, b.col), tau));
  v.relation = majority(v);
  return v;
}

}  // namespace pmd
