#include <set>

#include "doctest.h"
#include "pmd/apps.hpp"
#include "pmd/density.hpp"
#include "support.hpp"

using namespace pmd;

namespace {

SampleSet scene_samples(std::size_t n, std::size_t s, std::uint64_t seed, DepthMap* gt_out = nullptr) {
  const DepthMap gt = render_scene(random_scene(n, n, seed));
  if (gt_out) *gt_out = gt;
  return synthesize_samples(gt, make_patch_grid(n, n, 5, 2), s, SamplerConfig::ambiguous(seed));
}

double sq_dist(const DepthMap& a, const DepthMap& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += (a[i] - b[i]) * (a[i] - b[i]);
  return s;
}

}  // namespace

TEST_CASE("line mask") {
  const BinaryMask m = line_mask(5, 7);
  CHECK(m.count() == 7);
  for (std::size_t x = 0; x < 7; ++x) CHECK(m(2, x));
  CHECK(line_mask(5, 7, 0)(0, 3));
  CHECK_THROWS_AS(line_mask(5, 7, 5), ConfigError);
}

TEST_CASE("complete_sparse with exact measurements") {
  DepthMap gt;
  const SampleSet s = scene_samples(21, 6, 4, &gt);
  std::vector<Measurement> pts;
  for (std::size_t y = 0; y < 21; y += 5)
    for (std::size_t x = 0; x < 21; x += 5) pts.push_back({y, x, 0.0});
  const auto f = sample_at(gt, pts, MeasurementPattern::regular_grid);
  const SolveReport r = complete_sparse(s, f);
  CHECK(sq_dist(r.depth, gt) <= sq_dist(mean_depth(s), gt));

  const SolveReport pure = complete_sparse(s, SparseMeasurements(21, 21, {}));
  CHECK(pure.converged);
}

TEST_CASE("uncrop") {
  DepthMap gt;
  const SampleSet s = scene_samples(17, 6, 2, &gt);
  const SolveReport r = uncrop(s, gt, line_mask(17, 17));
  CHECK(sq_dist(r.depth, gt) <= sq_dist(mean_depth(s), gt));
  CHECK_THROWS_AS(uncrop(s, gt, BinaryMask(17, 17)), ConfigError);
  CHECK_THROWS_AS(uncrop(s, DepthMap(16, 17, 1.0), line_mask(17, 17)), AlignmentError);
}

TEST_CASE("modes: lambda 0 repeats the MAP estimate") {
  const SampleSet s = scene_samples(13, 5, 3);
  ModeOptions o;
  o.lambda = 0.0;
  o.ramp = false;
  const ModeSet m = generate_modes(s, 3, o);
  REQUIRE(m.size() == 3);
  CHECK(m.modes[0] == mean_depth(s));
  CHECK(m.modes[1] == m.modes[2]);
  CHECK(m.provenance[0].kind == ModeKind::mean);
  CHECK(m.provenance[2].kind == ModeKind::diverse);
  CHECK(m.provenance[2].previous == 2);
}

TEST_CASE("modes: diversity moves later modes away") {
  const SampleSet s = scene_samples(17, 8, 5);
  const ModeSet plain = generate_modes(s, 2, ModeOptions{0.0, false, {}});
  const ModeSet diverse = generate_modes(s, 2, ModeOptions{10.0, true, {}});
  CHECK(sq_dist(diverse.modes[1], diverse.modes[0]) >= sq_dist(plain.modes[1], plain.modes[0]));
}

TEST_CASE("modes: all-ones masks equal the unmasked cost") {
  const SampleSet s = scene_samples(13, 5, 6);
  BinaryMask ones(13, 13);
  ones.fill_rect(0, 0, 13, 13);
  const ModeSet a = generate_modes(s, 3);
  const ModeSet b = generate_modes(s, 3, {}, {ones, ones});
  for (std::size_t m = 0; m < 3; ++m) CHECK(a.modes[m] == b.modes[m]);
  CHECK_FALSE(a.annotated());
  CHECK(b.annotated());
}

TEST_CASE("simulate_selection") {
  ModeSet m;
  const DepthMap gt(2, 2, 2.0);
  m.modes = {DepthMap(2, 2, 3.0), DepthMap(2, 2, 1.0), DepthMap(2, 2, 2.5), DepthMap(2, 2, 1.5)};
  CHECK(simulate_selection(m, gt) == 2);  // ties 2 and 3 go to the lower index
  CHECK(simulate_selection(m, gt, 2) == 0);
  CHECK(simulate_selection(m, gt, 1) == 0);
  CHECK_THROWS_AS(simulate_selection(m, gt, 0), ConfigError);
}

TEST_CASE("overlap fraction") {
  CHECK(overlap_fraction({0, 0, 4}, {0, 0, 4}) == 1.0);
  CHECK(overlap_fraction({0, 0, 4}, {2, 2, 4}) == 0.25);
  CHECK(overlap_fraction({0, 0, 4}, {4, 0, 4}) == 0.0);
}

TEST_CASE("simulated annotation picks the worst windows") {
  const DepthMap gt(20, 20, 2.0);
  DepthMap z = gt;
  for (std::size_t y = 10; y < 14; ++y)
    for (std::size_t x = 3; x < 7; ++x) z(y, x) = 3.0;
  const Annotation a = simulate_annotation(z, gt, {4, 0.5, 1});
  REQUIRE(a.windows.size() == 1);
  CHECK(a.windows[0] == Window{10, 3, 4});
  CHECK(a.mask.count() == 16);
  CHECK(a.mask(10, 3));

  // A second window must not overlap the first by more than half.
  const Annotation b = simulate_annotation(z, gt, {4, 0.5, 2});
  REQUIRE(b.windows.size() == 2);
  CHECK(overlap_fraction(b.windows[1], b.windows[0]) <= 0.5);

  // With the only bad region already marked the scan falls back to the first
  // admissible window.
  const Annotation c = simulate_annotation(z, gt, {4, 0.0, 1}, {Window{10, 3, 4}});
  REQUIRE(c.windows.size() == 1);
  CHECK(overlap_fraction(c.windows[0], Window{10, 3, 4}) == 0.0);

  CHECK_THROWS_AS(simulate_annotation(z, gt, {21, 0.5, 1}), ConfigError);
}

TEST_CASE("annotation loop attaches masks to every mode but the last") {
  DepthMap gt;
  const SampleSet s = scene_samples(17, 5, 7, &gt);
  const ModeSet m = annotation_loop(s, gt, 3, {}, {5, 0.5, 1});
  REQUIRE(m.size() == 3);
  CHECK(m.masks[0].count() == 25);
  CHECK(m.masks[1].count() == 25);
  CHECK(m.masks[2].empty());
}

TEST_CASE("guided points") {
  DepthMap v(9, 9, 0.0);
  v(2, 2) = 5.0;
  v(6, 6) = 4.0;
  v(2, 3) = 4.5;  // neighbour of the top peak, not a peak itself
  const auto two = guided_points(v, 2, 3.0);
  CHECK(two == std::vector<Pixel>{{2, 2}, {6, 6}});

  // Past the peaks, the remaining pixels by decreasing variance.
  const auto three = guided_points(v, 3, 0.0);
  CHECK(three == std::vector<Pixel>{{2, 2}, {6, 6}, {2, 3}});

  for (std::size_t budget : {1u, 10u, 40u, 81u}) {
    const auto pts = guided_points(test::random_depth(9, 9, budget), budget, 2.0);
    CHECK(pts.size() == budget);
    std::set<std::pair<std::size_t, std::size_t>> unique;
    for (const auto& p : pts) unique.insert({p.row, p.col});
    CHECK(unique.size() == budget);
  }
  CHECK(guided_points(v, 500, 2.0).size() == 81);
  CHECK_THROWS_AS(guided_points(v, 0, 2.0), ConfigError);
}

TEST_CASE("random points are distinct and seeded") {
  const auto a = random_points(10, 10, 30, 1), b = random_points(10, 10, 30, 1);
  CHECK(a == b);
  CHECK_FALSE(a == random_points(10, 10, 30, 2));
  std::set<std::pair<std::size_t, std::size_t>> unique;
  for (const auto& p : a) unique.insert({p.row, p.col});
  CHECK(unique.size() == 30);
}

TEST_CASE("ordinal classification") {
  CHECK(classify_pair(1.0, 1.01, 0.02) == Ordinal::equal);
  CHECK(classify_pair(1.0, 1.5, 0.02) == Ordinal::a_closer);
  CHECK(classify_pair(2.0, 1.0, 0.02) == Ordinal::b_closer);
  CHECK(classify_pair(1.0, 1.02, 0.02) == Ordinal::a_closer);
}

TEST_CASE("ordinal vote") {
  const auto g = make_patch_grid(2, 3, 2, 1);
  // Two patches, two samples each; a=(0,1) and b=(1,1) lie in both.
  std::vector<float> data{
      1, 2, 1, 3,  // patch 0 sample 0: a=2 b=3  -> a closer
      1, 3, 1, 2,  // patch 0 sample 1: a=3 b=2  -> b closer
      5, 1, 5, 1,  // patch 1 sample 0: a=5 b=5  -> equal
      2, 1, 4, 1,  // patch 1 sample 1: a=2 b=4  -> a closer
  };
  const SampleSet s(g, 2, data);
  const OrdinalVerdict v = ordinal_vote(s, {0, 1}, {1, 1}, 0.02);
  CHECK(v.pairs == 4);
  CHECK(v.a_closer == 2);
  CHECK(v.b_closer == 1);
  CHECK(v.equal == 1);
  CHECK(v.relation == Ordinal::a_closer);

  CHECK_THROWS_AS(ordinal_vote(s, {0, 0}, {0, 2}, 0.02), CoverageError);
  CHECK_THROWS_AS(ordinal_vote(s, {0, 1}, {0, 1}, 0.02), ConfigError);
  CHECK_THROWS_AS(ordinal_vote(s, {0, 1}, {2, 1}, 0.02), IndexError);

  const OrdinalVerdict m = ordinal_from_map(DepthMap(2, 3, 1.0), {0, 0}, {1, 2}, 0.02);
  CHECK(m.relation == Ordinal::equal);
}
