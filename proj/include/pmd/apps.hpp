#pragma once

#include <cstddef>
#include <optional>
#include <vector>

#include "pmd/core.hpp"
#include "pmd/metrics.hpp"
#include "pmd/samplers.hpp"
#include "pmd/solver.hpp"

namespace pmd {

struct Pixel {
  std::size_t row = 0;
  std::size_t col = 0;

  friend bool operator==(const Pixel&, const Pixel&) = default;
};

// Depth completion ------------------------------------------------------------

/// MAP completion from sparse measurements: nearest-neighbor spreading for
/// random points, bilinear spreading for a regular lattice. With no
/// measurements this is pure MAP refinement of the mean.
SolveReport complete_sparse(const SampleSet& samples, const SparseMeasurements& measurements,
                            const SolverOptions& opts = {}, double lambda = 1.0);

/// MAP completion from dense measurements `dense` inside `mask`.
SolveReport uncrop(const SampleSet& samples, const DepthMap& dense, const BinaryMask& mask,
                   const SolverOptions& opts = {}, double lambda = 150.0);

/// One-pixel-tall horizontal line; defaults to the centre row.
BinaryMask line_mask(std::size_t height, std::size_t width, std::optional<std::size_t> row = std::nullopt);

// User guidance -------------------------------------------------------------

enum class ModeKind { mean, diverse };

struct ModeProvenance {
  ModeKind kind = ModeKind::mean;
  double lambda = 0.0;
  std::size_t previous = 0;  // number of earlier modes repelled from
};

/// Diverse estimates Z^1..Z^M. Z^1 is always the mean. masks[m] marks the
/// regions of mode m annotated as wrong (all-zero when not annotated).
struct ModeSet {
  std::vector<DepthMap> modes;
  std::vector<BinaryMask> masks;
  std::vector<ModeProvenance> provenance;

  std::size_t size() const noexcept { return modes.size(); }
  bool annotated() const noexcept;
};

struct ModeOptions {
  double lambda = 10.0;
  /// Ramp the weight from lambda/2 to lambda over the first half of the iterations.
  bool ramp = true;
  SolverOptions solver;
};

/// A ModeSet holding only the mean estimate.
ModeSet start_modes(const SampleSet& samples);

/// Append Z^{m+1}, repelled from every earlier mode. Uses the annotation-masked
/// cost as soon as any mode carries a non-empty mask.
void next_mode(const SampleSet& samples, ModeSet& modes, const ModeOptions& opts = {});

/// M modes; `masks` (possibly shorter than M) are attached to the first modes
/// before the modes after them are generated.
ModeSet generate_modes(const SampleSet& samples, std::size_t count, const ModeOptions& opts = {},
                       const std::vector<BinaryMask>& masks = {});

/// Index of the mode with the lowest rms against gt; ties to the lowest index.
std::size_t simulate_selection(const ModeSet& modes, const DepthMap& gt);

/// Same, restricted to the first `prefix` modes.
std::size_t simulate_selection(const ModeSet& modes, const DepthMap& gt, std::size_t prefix);

struct Window {
  std::size_t row = 0;
  std::size_t col = 0;
  std::size_t size = 0;

  friend bool operator==(const Window&, const Window&) = default;
};

/// Fraction of `a`'s area covered by `b`.
double overlap_fraction(const Window& a, const Window& b);

struct AnnotationOptions {
  std::size_t window = 50;
  double max_overlap = 0.5;
  std::size_t count = 1;
};

struct Annotation {
  BinaryMask mask;
  std::vector<Window> windows;  // windows chosen this round
  std::size_t requested = 0;
};

/// Greedy choice of the square windows with the largest summed squared error
/// against gt, skipping any candidate overlapping a previously chosen window
/// (this round or `prior`) by more than max_overlap. Scan order is row-major and
/// the first maximal window wins.
Annotation simulate_annotation(const DepthMap& z, const DepthMap& gt, const AnnotationOptions& opts = {},
                               const std::vector<Window>& prior = {});

/// Simulated selection-with-annotation: generate a mode, annotate it against gt,
/// generate the next mode with the accumulated masks, until M modes exist.
ModeSet annotation_loop(const SampleSet& samples, const DepthMap& gt, std::size_t count,
                        const ModeOptions& opts = {}, const AnnotationOptions& annotate = {});

// Other inference tasks ------------------------------------------------------

/// Measurement locations at 8-neighbourhood strict local maxima of the variance
/// map, by decreasing variance and at least `min_distance` apart. When maxima
/// run out the remaining pixels are used in decreasing-variance order, then the
/// spacing is relaxed one pixel at a time.
std::vector<Pixel> guided_points(const DepthMap& variance, std::size_t budget, double min_distance);

/// `budget` distinct pixels drawn uniformly at random.
std::vector<Pixel> random_points(std::size_t height, std::size_t width, std::size_t budget, std::uint64_t seed);

struct OrdinalVerdict {
  Ordinal relation = Ordinal::equal;
  std::size_t a_closer = 0;
  std::size_t equal = 0;
  std::size_t b_closer = 0;
  std::size_t pairs = 0;  // covering (patch, sample) pairs
};

/// Equal when max/min < 1 + tau, otherwise the nearer point.
Ordinal classify_pair(double depth_a, double depth_b, double tau);

/// Majority vote over every (patch, sample) containing both points. Ties favour
/// equal, then A-closer. Throws CoverageError when no patch holds both.
OrdinalVerdict ordinal_vote(const SampleSet& samples, Pixel a, Pixel b, double tau);

/// Single comparison of Z(a) and Z(b).
OrdinalVerdict ordinal_from_map(const DepthMap& z, Pixel a, Pixel b, double tau);

}  // namespace pmd
