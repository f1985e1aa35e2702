#include "doctest.h"
#include "pmd/core.hpp"
#include "pmd/kernels.hpp"
#include "pmd/serial.hpp"
#include "support.hpp"

using namespace pmd;

TEST_CASE("patch grid geometry") {
  const auto big = make_patch_grid(257, 353, 33, 4);
  CHECK(big.rows() == 57);
  CHECK(big.cols() == 81);

  const auto small = make_patch_grid(5, 5, 3, 2);
  CHECK(small.rows() == 2);
  CHECK(small.cols() == 2);

  CHECK_THROWS_AS(make_patch_grid(6, 5, 3, 2), AlignmentError);
  CHECK_THROWS_WITH_AS(make_patch_grid(5, 6, 3, 2), doctest::Contains("width"), AlignmentError);
  CHECK_THROWS_AS(make_patch_grid(5, 5, 0, 1), ConfigError);
  CHECK_THROWS_AS(make_patch_grid(5, 5, 3, 0), ConfigError);
  CHECK_THROWS_AS(make_patch_grid(2, 5, 3, 1), ConfigError);
}

TEST_CASE("covering spans match brute force containment") {
  for (const auto& g : {make_patch_grid(9, 11, 3, 2), make_patch_grid(8, 8, 4, 1), make_patch_grid(7, 7, 7, 3)}) {
    for (std::size_t y = 0; y < g.height(); ++y) {
      for (std::size_t x = 0; x < g.width(); ++x) {
        std::size_t expected = 0;
        for (std::size_t p = 0; p < g.patch_count(); ++p) expected += test::covers(g, p, y, x);
        const auto r = g.covering_rows(y), c = g.covering_cols(x);
        CHECK((r.last - r.first) * (c.last - c.first) == expected);
        CHECK(g.coverage()[y * g.width() + x] == expected);
      }
    }
  }
}

TEST_CASE("crop") {
  const DepthMap z(3, 3, std::vector<double>{1, 2, 3, 4, 5, 6, 7, 8, 9});
  const auto g = make_patch_grid(3, 3, 2, 1);
  CHECK(crop(z, g, 0) == std::vector<double>{1, 2, 4, 5});
  CHECK(crop(z, g, 3) == std::vector<double>{5, 6, 8, 9});
  CHECK(crop(z, g, g.patch_count() - 1) == std::vector<double>{5, 6, 8, 9});
  CHECK_THROWS_AS(crop(z, g, 4), IndexError);
  CHECK_THROWS_AS(crop(DepthMap(4, 3), g, 0), AlignmentError);
}

TEST_CASE("overlap average examples") {
  const auto g = make_patch_grid(2, 3, 2, 1);
  const std::vector<double> patches{1, 2, 3, 4, 10, 20, 30, 40};
  const DepthMap z = overlap_average(patches, g);
  CHECK(z == DepthMap(2, 3, std::vector<double>{1, 6, 20, 3, 17, 40}));

  const auto whole = make_patch_grid(3, 3, 3, 1);
  const std::vector<double> one{9, 8, 7, 6, 5, 4, 3, 2, 1};
  CHECK(overlap_average(one, whole) == DepthMap(3, 3, one));

  const auto g2 = make_patch_grid(7, 9, 3, 2);
  const std::vector<double> constant(g2.patch_count() * g2.patch_area(), 2.5);
  CHECK(overlap_average(constant, g2) == DepthMap(7, 9, 2.5));
  CHECK_THROWS_AS(overlap_average(std::vector<double>(3), g2), AlignmentError);
}

TEST_CASE("crop then average is the identity") {
  for (std::uint64_t t = 0; t < 5; ++t) {
    const auto g = make_patch_grid(9, 13, 5, 2);
    const DepthMap z = test::random_depth(9, 13, t);
    const DepthMap back = overlap_average(crop_all(z, g), g);
    for (std::size_t i = 0; i < z.size(); ++i) CHECK(back[i] == doctest::Approx(z[i]).epsilon(1e-14));
  }
}

TEST_CASE("overlap average is the least-squares minimizer") {
  // Zero gradient of sum_i |crop_i(Z) - x_i|^2: per pixel, the covering
  // residuals sum to zero.
  for (std::uint64_t t = 0; t < 10; ++t) {
    const auto g = t % 2 ? make_patch_grid(8, 8, 4, 2) : make_patch_grid(7, 8, 3, 1);
    std::mt19937_64 rng(t);
    std::uniform_real_distribution<double> u(0.0, 5.0);
    std::vector<double> patches(g.patch_count() * g.patch_area());
    for (auto& v : patches) v = u(rng);
    const DepthMap z = overlap_average(patches, g);
    for (std::size_t y = 0; y < g.height(); ++y) {
      for (std::size_t x = 0; x < g.width(); ++x) {
        double grad = 0.0;
        for (std::size_t p = 0; p < g.patch_count(); ++p) {
          if (test::covers(g, p, y, x)) grad += z(y, x) - patches[p * g.patch_area() + test::offset_in(g, p, y, x)];
        }
        CHECK(std::abs(grad) < 1e-12);
      }
    }
  }
}

TEST_CASE("serial references agree with the parallel kernels") {
  const auto g = make_patch_grid(17, 21, 5, 2);
  const SampleSet s = test::random_samples(g, 6, 3);
  Selection sel;
  std::mt19937_64 rng(4);
  for (std::size_t p = 0; p < g.patch_count(); ++p) sel.index.push_back(static_cast<std::uint32_t>(rng() % 6));

  const DepthMap mk = kernels::mean_depth(s), ms = serial::mean_depth(s);
  for (std::size_t i = 0; i < mk.size(); ++i) CHECK(mk[i] == doctest::Approx(ms[i]).epsilon(1e-14));
  CHECK(kernels::average_selected(s, sel) == serial::average_selected(s, sel));
  const DepthMap vk = kernels::variance_map(s), vs = serial::variance_map(s);
  for (std::size_t i = 0; i < vk.size(); ++i) CHECK(vk[i] == doctest::Approx(vs[i]).epsilon(1e-12));
  const DepthMap z = test::random_depth(17, 21, 5);
  CHECK(kernels::select_samples(z, s, nullptr) == serial::select_samples(z, s, nullptr));
  const auto patches = crop_all(z, g);
  CHECK(overlap_average(patches, g) == serial::overlap_average(patches, g));
}

TEST_CASE("sparse measurements validation") {
  CHECK_NOTHROW(SparseMeasurements(4, 4, {{0, 0, 1.0}, {3, 3, 2.0}}));
  CHECK_THROWS_AS(SparseMeasurements(4, 4, {{4, 0, 1.0}}), InvariantError);
  CHECK_THROWS_AS(SparseMeasurements(4, 4, {{0, 0, -1.0}}), InvariantError);
  CHECK_THROWS_AS(SparseMeasurements(4, 4, {{0, 0, 1.0}, {0, 0, 2.0}}), InvariantError);
  const SparseMeasurements lattice(5, 5, {{0, 0, 1}, {0, 4, 1}, {4, 0, 1}, {4, 4, 1}}, MeasurementPattern::regular_grid);
  CHECK(lattice.is_complete_lattice());
  CHECK_THROWS_AS(SparseMeasurements(5, 5, {{0, 0, 1}, {0, 4, 1}, {4, 0, 1}}, MeasurementPattern::regular_grid),
                  InvariantError);
}

TEST_CASE("depth map invariants") {
  DepthMap z(2, 2, 1.0);
  CHECK_NOTHROW(z.require_positive());
  z(0, 1) = -1.0;
  CHECK_THROWS_AS(z.require_positive(), InvariantError);
  z.set_validity({1, 0, 1, 1});
  CHECK_NOTHROW(z.require_positive());
  z(1, 1) = std::nan("");
  CHECK_THROWS_AS(z.require_finite(), InvariantError);
  CHECK_THROWS_AS(z.set_validity({1, 1}), AlignmentError);

  BinaryMask m(3, 4);
  CHECK(m.empty());
  m.fill_rect(1, 1, 2, 2);
  CHECK(m.count() == 4);
  CHECK(m(2, 2));
  CHECK_FALSE(m(0, 0));
  m.fill_rect(2, 3, 5, 5);  // clipped to the mask
  CHECK(m.count() == 5);
}
