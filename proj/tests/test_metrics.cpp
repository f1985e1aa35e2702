#include <cmath>

#include "doctest.h"
#include "json.hpp"
#include "pmd/metrics.hpp"

using namespace pmd;

TEST_CASE("error report: hand example") {
  const DepthMap gt(1, 4, std::vector<double>{1, 2, 4, 1});
  const DepthMap pred(1, 4, std::vector<double>{1, 2.5, 2, 1.3});
  const ErrorReport r = error_report(pred, gt);
  CHECK(r.pixels == 4);
  CHECK(r.images == 1);
  CHECK(r.rms == doctest::Approx(std::sqrt((0.25 + 4 + 0.09) / 4)));
  CHECK(r.m_rms == doctest::Approx(r.rms));
  CHECK(r.rel == doctest::Approx((0 + 0.25 + 0.5 + 0.3) / 4));
  // ratios 1, 1.25, 2, 1.3: 1.25 is not < 1.25
  CHECK(r.delta1 == 25.0);
  CHECK(r.delta2 == 75.0);
  CHECK(r.delta3 == 75.0);  // 2 > 1.25^3
}

TEST_CASE("error report: pooled rms differs from m-rms") {
  const std::vector<DepthMap> gts{DepthMap(1, 1, 1.0), DepthMap(1, 3, 1.0)};
  const std::vector<DepthMap> preds{DepthMap(1, 1, 3.0), DepthMap(1, 3, 1.0)};
  const ErrorReport r = error_report(preds, gts);
  CHECK(r.rms == doctest::Approx(1.0));    // sqrt(4 / 4)
  CHECK(r.m_rms == doctest::Approx(1.0));  // (2 + 0) / 2
  const std::vector<DepthMap> preds2{DepthMap(1, 1, 2.0), DepthMap(1, 3, 2.0)};
  const ErrorReport r2 = error_report(preds2, gts);
  CHECK(r2.rms == doctest::Approx(1.0));
  CHECK(r2.m_rms == doctest::Approx(1.0));
  const std::vector<DepthMap> preds3{DepthMap(1, 1, 1.0), DepthMap(1, 3, 3.0)};
  const ErrorReport r3 = error_report(preds3, gts);
  CHECK(r3.rms == doctest::Approx(std::sqrt(12.0 / 4)));
  CHECK(r3.m_rms == doctest::Approx(1.0));
}

TEST_CASE("error report: invalid pixels are skipped") {
  DepthMap gt(1, 3, std::vector<double>{1, 0, 2});
  const DepthMap pred(1, 3, std::vector<double>{1, 9, 2});
  CHECK(error_report(pred, gt).pixels == 2);
  CHECK(error_report(pred, gt).rms == 0.0);
  gt.set_validity({1, 1, 0});
  CHECK(error_report(pred, gt).pixels == 1);
  CHECK_THROWS_AS(error_report(pred, DepthMap(1, 3, 0.0)), ConfigError);
  CHECK_THROWS_AS(error_report(DepthMap(1, 2, 1.0), gt), AlignmentError);
}

TEST_CASE("error report: perfect prediction and monotonicity") {
  const DepthMap gt(3, 3, 2.0);
  const ErrorReport r = error_report(gt, gt);
  CHECK(r.rms == 0.0);
  CHECK(r.rel == 0.0);
  CHECK(r.delta1 == 100.0);
  double previous = -1.0;
  for (double e : {0.0, 0.1, 0.5, 1.0}) {
    const double rms = rms_error(DepthMap(3, 3, 2.0 + e), gt);
    CHECK(rms == doctest::Approx(e));
    CHECK(rms > previous);
    previous = rms;
  }
}

TEST_CASE("rms restricted to a mask") {
  const DepthMap gt(2, 2, 1.0);
  const DepthMap pred(2, 2, std::vector<double>{1, 1, 1, 5});
  BinaryMask m(2, 2);
  m.set(0, 0);
  CHECK(rms_error(pred, gt, &m) == 0.0);
  m.set(1, 1);
  CHECK(rms_error(pred, gt, &m) == doctest::Approx(std::sqrt(8.0)));
}

TEST_CASE("wkdr") {
  using O = Ordinal;
  const WkdrReport r = wkdr({O::a_closer, O::equal, O::b_closer, O::equal}, {O::a_closer, O::a_closer, O::equal, O::equal});
  CHECK(r.pairs == 4);
  CHECK(r.errors == 2);
  CHECK(r.wkdr == 50.0);
  REQUIRE(r.wkdr_eq);
  CHECK(*r.wkdr_eq == 50.0);
  REQUIRE(r.wkdr_neq);
  CHECK(*r.wkdr_neq == 50.0);

  const WkdrReport only_neq = wkdr({O::a_closer}, {O::b_closer});
  CHECK(only_neq.wkdr == 100.0);
  CHECK_FALSE(only_neq.wkdr_eq);
  CHECK_THROWS_AS(wkdr({}, {}), ConfigError);
  CHECK_THROWS_AS(wkdr({O::equal}, {}), AlignmentError);

  const auto j = nlohmann::json::parse(to_json(r));
  CHECK(j["wkdr"] == 50.0);
  CHECK(j["pairs"] == 4);
}

TEST_CASE("report serialization") {
  const ErrorReport r = error_report(DepthMap(1, 2, 2.0), DepthMap(1, 2, 1.0));
  const auto j = nlohmann::json::parse(to_json(r));
  CHECK(j["rms"] == 1.0);
  CHECK(j["delta3"] == 0.0);
  CHECK(to_text(r).find("rms") != std::string::npos);
}
