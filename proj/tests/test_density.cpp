#include <cmath>

#include "doctest.h"
#include "pmd/density.hpp"
#include "support.hpp"

using namespace pmd;

namespace {

// Single-patch set: the image is exactly one K x K patch.
SampleSet single_patch(std::size_t k, const std::vector<std::vector<float>>& samples) {
  std::vector<float> data;
  for (const auto& s : samples) data.insert(data.end(), s.begin(), s.end());
  return {make_patch_grid(k, k, k, 1), samples.size(), data};
}

}  // namespace

TEST_CASE("patch potential examples") {
  const std::vector<double> z{1, 1, 1, 1};
  const std::vector<float> same{1, 1, 1, 1};
  CHECK(patch_potential(z, same, 1) == 1.0);

  // Second sample at L2 distance 2 (each of four entries off by 1).
  const std::vector<float> two{1, 1, 1, 1, 2, 2, 2, 2};
  CHECK(patch_potential(z, two, 2) == doctest::Approx((1 + std::exp(-2.0)) / 2).epsilon(1e-15));
  CHECK(patch_potential(z, two, 2) == doctest::Approx(0.56767).epsilon(1e-5));

  const std::vector<float> all_same{1, 1, 1, 1, 1, 1, 1, 1, 1, 1, 1, 1};
  CHECK(patch_potential(z, all_same, 3) == 1.0);

  const double p = patch_potential(z, two, 2, {2.0});
  CHECK(p == doctest::Approx((1 + std::exp(-4.0 / 8.0)) / 2).epsilon(1e-15));
  CHECK_THROWS_AS(patch_potential(z, two, 3), AlignmentError);
  CHECK_THROWS_AS(patch_potential(z, two, 2, {0.0}), ConfigError);
}

TEST_CASE("patch potential stays in (0, 1]") {
  std::mt19937_64 rng(2);
  std::uniform_real_distribution<float> u(0.0f, 3.0f);
  for (int t = 0; t < 50; ++t) {
    std::vector<double> z(9);
    std::vector<float> x(9 * 4);
    for (auto& v : z) v = u(rng);
    for (auto& v : x) v = u(rng);
    const double p = patch_potential(z, x, 4);
    CHECK(p > 0.0);
    CHECK(p <= 1.0);
  }
}

TEST_CASE("log density examples") {
  const auto g = make_patch_grid(7, 7, 3, 2);
  const DepthMap z = test::random_depth(7, 7, 1);
  std::vector<float> data;
  for (const auto& c : crop_all(z, g)) data.push_back(static_cast<float>(c));
  DepthMap zf = z;
  for (auto& v : zf.values()) v = static_cast<float>(v);
  const SampleSet s(g, 1, data);
  CHECK(log_density(zf, s) == 0.0);
  CHECK(log_density_maxapprox(zf, s) == 0.0);

  // One patch, two samples: distances {1, 3} from Z, h = 1.
  const SampleSet two = single_patch(2, {{1, 1, 1, 2}, {1, 1, 1, 4}});
  const DepthMap one(2, 2, 1.0);
  CHECK(log_density_maxapprox(one, two) == -0.5);
  CHECK(log_density(one, two) == doctest::Approx(std::log(std::exp(-0.5) + std::exp(-4.5))).epsilon(1e-15));

  const SampleSet single = single_patch(2, {{1, 1, 2, 3}});
  CHECK(log_density(one, single) == log_density_maxapprox(one, single));
  CHECK_THROWS_AS(log_density(DepthMap(3, 2, 1.0), two), AlignmentError);
}

TEST_CASE("log density matches brute force and log-sum-exp bounds") {
  const auto g = make_patch_grid(8, 8, 4, 2);
  const SampleSet s = test::random_samples(g, 5, 3);
  for (std::uint64_t t = 0; t < 20; ++t) {
    const DepthMap z = test::random_depth(8, 8, 40 + t, 0.5, 3.5);
    const double lp = log_density(z, s), lm = log_density_maxapprox(z, s);
    CHECK(lp == doctest::Approx(test::brute_log_density(z, s, 1.0)).epsilon(1e-10));
    CHECK(lp >= lm);
    CHECK(lp <= lm + g.patch_count() * std::log(5.0));
  }
}

TEST_CASE("log-sum-exp is stable") {
  const std::vector<double> big{1000.0, 1000.0};
  CHECK(log_sum_exp(big) == doctest::Approx(1000.0 + std::log(2.0)));
  const std::vector<double> small{-1000.0, -1001.0};
  CHECK(log_sum_exp(small) == doctest::Approx(-1000.0 + std::log1p(std::exp(-1.0))));
  CHECK(std::isinf(log_sum_exp(std::vector<double>{})));
}

TEST_CASE("mean and variance examples") {
  const SampleSet s = single_patch(3, {std::vector<float>(9, 2.0f), std::vector<float>(9, 4.0f)});
  CHECK(mean_depth(s) == DepthMap(3, 3, 3.0));
  CHECK(variance_map(s) == DepthMap(3, 3, 1.0));

  const SampleSet same = single_patch(3, {std::vector<float>(9, 2.5f), std::vector<float>(9, 2.5f)});
  CHECK(variance_map(same) == DepthMap(3, 3, 0.0));
}

TEST_CASE("mean and variance match brute force") {
  for (std::uint64_t t = 0; t < 12; ++t) {
    const auto g = t % 2 ? make_patch_grid(8, 8, 4, 2) : make_patch_grid(7, 6, 3, 1);
    const SampleSet s = test::random_samples(g, 1 + t % 4, t);
    const DepthMap m = mean_depth(s), bm = test::brute_mean(s);
    const DepthMap v = variance_map(s), bv = test::brute_variance(s);
    for (std::size_t i = 0; i < m.size(); ++i) {
      CHECK(m[i] == doctest::Approx(bm[i]).epsilon(1e-12));
      CHECK(v[i] == doctest::Approx(bv[i]).epsilon(1e-10));
    }
  }
}

TEST_CASE("rank composites") {
  const auto g = make_patch_grid(9, 9, 3, 2);
  const DepthMap gt = test::random_depth(9, 9, 5);
  const SampleSet s = test::random_samples(g, 6, 6);
  const PatchRanking r = rank_samples(s, gt);
  for (std::size_t p = 0; p < g.patch_count(); ++p) {
    for (std::size_t k = 1; k < 6; ++k) CHECK(r.rms[p * 6 + k] >= r.rms[p * 6 + k - 1]);
  }
  CHECK_THROWS_AS(rank_composite(s, gt, 6), IndexError);

  const SampleSet one = test::random_samples(g, 1, 7);
  std::vector<std::uint32_t> zero(g.patch_count(), 0);
  CHECK(rank_composite(one, gt, 0) == test::brute_selected_average(one, zero));

  // Noiseless samples: every rank reproduces the ground truth.
  DepthMap gtf = gt;
  for (auto& v : gtf.values()) v = static_cast<float>(v);
  std::vector<float> data;
  for (std::size_t p = 0; p < g.patch_count(); ++p)
    for (int k = 0; k < 3; ++k)
      for (double v : crop(gtf, g, p)) data.push_back(static_cast<float>(v));
  const SampleSet exact(g, 3, data);
  for (std::size_t k = 0; k < 3; ++k) CHECK(rank_composite(exact, gtf, k) == gtf);
}
