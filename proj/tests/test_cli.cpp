#include <sstream>

#include "cli.hpp"
#include "doctest.h"
#include "pmd/density.hpp"
#include "pmd/io.hpp"
#include "support.hpp"

using namespace pmd;

namespace {

struct Run {
  int code;
  std::string out, err;
};

Run run(std::vector<std::string> args) {
  std::ostringstream out, err;
  const int code = cli::run(args, out, err);
  return {code, out.str(), err.str()};
}

}  // namespace

TEST_CASE("cli exit codes") {
  const auto dir = test::scratch_dir("cli_codes");
  CHECK(run({"--help"}).code == 0);
  CHECK(run({}).code == 2);
  CHECK(run({"infer", "bogus"}).code == 2);
  CHECK(run({"infer", "mean"}).code == 2);  // missing required options
  CHECK(run({"infer", "mean", "--samples", (dir / "missing.pmds").string(), "--out", (dir / "z.pmdp").string()}).code == 1);
  CHECK(run({"guide", "points", "--samples", "x", "--strategy", "nope", "--out", "y"}).code == 2);
}

TEST_CASE("cli pipeline: noiseless samples reproduce the scene") {
  const auto dir = test::scratch_dir("cli_pipeline");
  const auto p = [&](const char* f) { return (dir / f).string(); };
  io::write_text(p("scene.json"), io::to_json(random_scene(21, 21, 3)).dump());
  io::write_text(p("cfg.json"), io::to_json(SamplerConfig::noiseless(1)).dump());
  REQUIRE(run({"scene", "gen", "--spec", p("scene.json"), "--out", p("gt.pmdp")}).code == 0);
  REQUIRE(run({"sample", "synth", "--gt", p("gt.pmdp"), "--K", "5", "--stride", "2", "--S", "3", "--cfg", p("cfg.json"),
               "--out", p("s.pmds")})
              .code == 0);
  REQUIRE(run({"infer", "mean", "--samples", p("s.pmds"), "--out", p("mean.pmdp")}).code == 0);
  DepthMap gt = io::load_depth(p("gt.pmdp"));
  CHECK(io::load_depth(p("mean.pmdp")) == gt);

  const Run e = run({"eval", "depth", "--pred", p("mean.pmdp"), "--gt", p("gt.pmdp")});
  REQUIRE(e.code == 0);
  CHECK(nlohmann::json::parse(e.out)["rms"] == 0.0);

  REQUIRE(run({"bench", "rank", "--samples", p("s.pmds"), "--gt", p("gt.pmdp"), "--out", p("rank.csv")}).code == 0);
  const std::string csv = io::read_text(p("rank.csv"));
  CHECK(csv.rfind("rank,rms\n", 0) == 0);
  CHECK(csv.find("0,0\n") != std::string::npos);

  const Run q = run({"query", "ordinal", "--samples", p("s.pmds"), "--a", "3,3", "--b", "4,4"});
  REQUIRE(q.code == 0);
  CHECK(nlohmann::json::parse(q.out).contains("relation"));
  CHECK(run({"query", "ordinal", "--samples", p("s.pmds"), "--a", "0,0", "--b", "20,20"}).code == 1);
}

TEST_CASE("cli bench rank with one sample per patch") {
  const auto dir = test::scratch_dir("cli_rank1");
  const auto p = [&](const char* f) { return (dir / f).string(); };
  const auto g = make_patch_grid(9, 9, 3, 2);
  const SampleSet s = test::random_samples(g, 1, 4);
  save_samples(s, p("s.pmds"));
  const DepthMap gt = test::random_depth(9, 9, 5);
  io::save_depth(gt, p("gt.pmdp"));
  REQUIRE(run({"bench", "rank", "--samples", p("s.pmds"), "--gt", p("gt.pmdp"), "--out", p("rank.csv")}).code == 0);
  std::ostringstream expected;
  expected.precision(17);
  DepthMap gtf = io::load_depth(p("gt.pmdp"));
  expected << "rank,rms\n0," << rms_error(mean_depth(s), gtf) << "\n";
  CHECK(io::read_text(p("rank.csv")) == expected.str());
}
