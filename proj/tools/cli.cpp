#include "cli.hpp"

#include <charconv>
#include <filesystem>
#include <functional>
#include <optional>
#include <sstream>

#include "CLI11.hpp"
#include "pmd/apps.hpp"
#include "pmd/density.hpp"
#include "pmd/io.hpp"
#include "pmd/metrics.hpp"
#include "pmd/samplers.hpp"
#include "pmd/service.hpp"

namespace pmd::cli {
namespace {

namespace fs = std::filesystem;
using nlohmann::json;

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

std::size_t parse_index(std::string_view text, const std::string& what) {
  std::size_t v = 0;
  const auto [end, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
  if (ec != std::errc{} || end != text.data() + text.size() || text.empty()) {
    throw UsageError(what + ": expected a non-negative integer, got \"" + std::string(text) + "\"");
  }
  return v;
}

Pixel parse_pixel(const std::string& text, const std::string& what) {
  const auto comma = text.find(',');
  if (comma == std::string::npos) throw UsageError(what + ": expected R,C");
  return {parse_index(std::string_view(text).substr(0, comma), what),
          parse_index(std::string_view(text).substr(comma + 1), what)};
}

const char* relation_name(Ordinal o) {
  switch (o) {
    case Ordinal::a_closer: return "a_closer";
    case Ordinal::equal: return "equal";
    case Ordinal::b_closer: return "b_closer";
  }
  return "equal";
}

json solve_summary(const SolveReport& r) {
  return {{"iterations", r.iterations}, {"converged", r.converged},
          {"objective", r.trace.empty() ? 0.0 : r.trace.back()}};
}

// Solver settings from an optional --opts file.
struct SolverSettings {
  io::SolverDocument doc;
  bool has_lambda = false;
};

SolverSettings load_solver(const std::string& path) {
  SolverSettings s;
  if (path.empty()) return s;
  const json j = io::read_json(path);
  s.doc = io::solver_from_json(j);
  s.has_lambda = j.contains("lambda");
  return s;
}

// Pairs file: header "ra,ca,rb,cb", one query per line.
std::vector<std::pair<Pixel, Pixel>> parse_pairs(const std::string& text) {
  std::vector<std::pair<Pixel, Pixel>> out;
  std::istringstream in(text);
  std::string line;
  std::size_t offset = 0;
  bool header = true;
  while (std::getline(in, line)) {
    const std::size_t at = offset;
    offset += line.size() + 1;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    if (header) {
      header = false;
      if (line != "ra,ca,rb,cb") throw FormatError("expected header \"ra,ca,rb,cb\"", at);
      continue;
    }
    std::vector<std::size_t> v;
    std::size_t start = 0;
    for (;;) {
      const auto comma = line.find(',', start);
      const auto field = std::string_view(line).substr(start, comma == std::string::npos ? std::string::npos : comma - start);
      std::size_t x = 0;
      const auto [end, ec] = std::from_chars(field.data(), field.data() + field.size(), x);
      if (ec != std::errc{} || end != field.data() + field.size() || field.empty()) {
        throw FormatError("bad pair field \"" + std::string(field) + "\"", at);
      }
      v.push_back(x);
      if (comma == std::string::npos) break;
      start = comma + 1;
    }
    if (v.size() != 4) throw FormatError("expected 4 fields per pair", at);
    out.push_back({{v[0], v[1]}, {v[2], v[3]}});
  }
  if (header) throw FormatError("missing header", 0);
  return out;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Patch-based probabilistic depth inference", "pmdepth"};
  app.require_subcommand(1);
  std::uint64_t seed = 0;
  bool seed_given = false;
  std::function<void()> action;

  const auto leaf = [&](CLI::App* parent, const std::string& name, const std::string& help) {
    auto* sub = parent->add_subcommand(name, help);
    sub->add_option_function<std::uint64_t>("--seed", [&](std::uint64_t v) { seed = v; seed_given = true; },
                                            "Random seed");
    return sub;
  };

  // scene gen
  std::string spec_path, out_path;
  auto* scene = app.add_subcommand("scene", "Synthetic scenes")->require_subcommand(1);
  auto* scene_gen = leaf(scene, "gen", "Render a scene description to a depth file");
  scene_gen->add_option("--spec", spec_path, "Scene JSON")->required();
  scene_gen->add_option("--out", out_path, "Output .pmdp")->required();
  scene_gen->callback([&] {
    action = [&] {
      SceneSpec spec = io::scene_from_json(io::read_json(spec_path));
      if (seed_given) spec.seed = seed;
      io::save_depth(render_scene(spec), out_path);
    };
  });

  // sample synth
  std::string gt_path, cfg_path, samples_path;
  std::size_t patch_size = 33, stride = 4, sample_count = 100;
  auto* sample = app.add_subcommand("sample", "Patch samples")->require_subcommand(1);
  auto* synth = leaf(sample, "synth", "Synthesize patch samples around a ground-truth map");
  synth->add_option("--gt", gt_path, "Ground truth .pmdp")->required();
  synth->add_option("--K", patch_size, "Patch size")->capture_default_str();
  synth->add_option("--stride", stride, "Patch stride")->capture_default_str();
  synth->add_option("--S", sample_count, "Samples per patch")->capture_default_str();
  synth->add_option("--cfg", cfg_path, "Sampler JSON");
  synth->add_option("--out", out_path, "Output .pmds")->required();
  synth->callback([&] {
    action = [&] {
      const DepthMap gt = io::load_depth(gt_path);
      SamplerConfig cfg = cfg_path.empty() ? SamplerConfig{} : io::sampler_from_json(io::read_json(cfg_path));
      if (seed_given) cfg.seed = seed;
      const auto grid = make_patch_grid(gt.height(), gt.width(), patch_size, stride);
      save_samples(synthesize_samples(gt, grid, sample_count, cfg), out_path);
    };
  });

  // infer
  auto* infer = app.add_subcommand("infer", "Depth estimation")->require_subcommand(1);
  for (const char* name : {"mean", "variance"}) {
    auto* sub = leaf(infer, name, std::string("Per-pixel ") + name + " of the sample distribution");
    sub->add_option("--samples", samples_path, "Samples .pmds")->required();
    sub->add_option("--out", out_path, "Output .pmdp")->required();
    const bool is_mean = std::string(name) == "mean";
    sub->callback([&, is_mean] {
      action = [&, is_mean] {
        const SampleSet s = load_samples(samples_path);
        io::save_depth(is_mean ? mean_depth(s) : variance_map(s), out_path);
      };
    });
  }

  std::string meas_path, spread, opts_path;
  auto* complete = leaf(infer, "complete", "MAP completion from sparse measurements");
  complete->add_option("--samples", samples_path, "Samples .pmds")->required();
  complete->add_option("--meas", meas_path, "Measurements CSV")->required();
  complete->add_option("--mode", spread, "Spreading: nn, bilinear or adjoint")
      ->check(CLI::IsMember({"nn", "bilinear", "adjoint"}));
  complete->add_option("--opts", opts_path, "Solver JSON");
  complete->add_option("--out", out_path, "Output .pmdp")->required();
  complete->callback([&] {
    action = [&] {
      const SampleSet s = load_samples(samples_path);
      const SolverSettings settings = load_solver(opts_path);
      SpreadMode mode = settings.doc.mode.value_or(SpreadMode::nearest_neighbor);
      if (spread == "nn") mode = SpreadMode::nearest_neighbor;
      else if (spread == "bilinear") mode = SpreadMode::bilinear_grid;
      else if (spread == "adjoint") mode = SpreadMode::exact_adjoint;
      const auto pattern =
          mode == SpreadMode::bilinear_grid ? MeasurementPattern::regular_grid : MeasurementPattern::random_points;
      const auto meas = io::load_measurements(meas_path, s.grid().height(), s.grid().width(), pattern);
      CostModel cost = meas.empty() ? make_zero_cost() : make_sparse_cost(meas, mode, settings.doc.lambda);
      cost.ramp = settings.doc.ramp;
      const SolveReport r = map_infer(s, cost, settings.doc.options);
      io::save_depth(r.depth, out_path);
      out << solve_summary(r).dump() << '\n';
    };
  });

  std::string dense_path, mask_path;
  auto* uncrop_cmd = leaf(infer, "uncrop", "MAP completion from dense measurements inside a mask");
  uncrop_cmd->add_option("--samples", samples_path, "Samples .pmds")->required();
  uncrop_cmd->add_option("--dense", dense_path, "Dense measurements .pmdp")->required();
  uncrop_cmd->add_option("--mask", mask_path, "Mask .pmdp (non-zero = measured)")->required();
  uncrop_cmd->add_option("--opts", opts_path, "Solver JSON");
  uncrop_cmd->add_option("--out", out_path, "Output .pmdp")->required();
  uncrop_cmd->callback([&] {
    action = [&] {
      const SampleSet s = load_samples(samples_path);
      const SolverSettings settings = load_solver(opts_path);
      const DepthMap dense = io::load_depth(dense_path);
      const BinaryMask mask = io::mask_from_depth(io::load_depth(mask_path));
      if (!s.grid().matches(dense) || mask.height() != dense.height() || mask.width() != dense.width()) {
        throw AlignmentError("dense measurements, mask and samples differ in size");
      }
      if (mask.empty()) throw ConfigError("un-crop mask selects no pixels");
      CostModel cost = make_uncrop_cost(dense, mask, settings.has_lambda ? settings.doc.lambda : 150.0);
      cost.ramp = settings.doc.ramp;
      const SolveReport r = map_infer(s, cost, settings.doc.options);
      io::save_depth(r.depth, out_path);
      out << solve_summary(r).dump() << '\n';
    };
  });

  std::size_t mode_count = 5;
  double lambda = 10.0;
  bool no_ramp = false;
  std::string out_dir;
  std::vector<std::string> mask_for;
  auto* modes_cmd = leaf(infer, "modes", "Diverse depth estimates");
  modes_cmd->add_option("--samples", samples_path, "Samples .pmds")->required();
  modes_cmd->add_option("--M", mode_count, "Number of modes")->capture_default_str()->check(CLI::PositiveNumber);
  modes_cmd->add_option("--lambda", lambda, "Diversity weight")->capture_default_str()->check(CLI::NonNegativeNumber);
  modes_cmd->add_flag("--no-ramp", no_ramp, "Use the full weight from the first iteration");
  modes_cmd->add_option("--opts", opts_path, "Solver JSON (gamma, steps, max_iters)");
  modes_cmd->add_option("--mask-for", mask_for, "Annotation mask for a mode, as M:path (repeatable)");
  modes_cmd->add_option("--out-dir", out_dir, "Output directory")->required();
  modes_cmd->callback([&] {
    action = [&] {
      const SampleSet s = load_samples(samples_path);
      ModeOptions o;
      o.lambda = lambda;
      o.ramp = !no_ramp;
      if (!opts_path.empty()) o.solver = load_solver(opts_path).doc.options;
      std::vector<BinaryMask> masks;
      for (const auto& spec : mask_for) {
        const auto colon = spec.find(':');
        if (colon == std::string::npos) throw UsageError("--mask-for: expected M:path");
        const std::size_t m = parse_index(std::string_view(spec).substr(0, colon), "--mask-for");
        if (m + 1 >= mode_count) throw UsageError("--mask-for: mode " + std::to_string(m) + " has no later mode");
        BinaryMask mask = io::mask_from_depth(io::load_depth(spec.substr(colon + 1)));
        if (mask.height() != s.grid().height() || mask.width() != s.grid().width()) {
          throw AlignmentError("mask for mode " + std::to_string(m) + " does not match the samples");
        }
        if (masks.size() <= m) masks.resize(m + 1, BinaryMask(s.grid().height(), s.grid().width()));
        masks[m] = std::move(mask);
      }
      const ModeSet set = generate_modes(s, mode_count, o, masks);
      fs::create_directories(out_dir);
      json meta = json::array();
      for (std::size_t m = 0; m < set.size(); ++m) {
        const std::string file = "mode_" + std::to_string(m) + ".pmdp";
        io::save_depth(set.modes[m], fs::path(out_dir) / file);
        const auto& p = set.provenance[m];
        meta.push_back({{"mode", m},
                        {"file", file},
                        {"kind", p.kind == ModeKind::mean ? "mean" : "diverse"},
                        {"lambda", p.lambda},
                        {"annotated_pixels", set.masks[m].count()}});
      }
      io::write_text(fs::path(out_dir) / "modes.json", json{{"modes", meta}}.dump(2) + "\n");
    };
  });

  // guide points
  std::size_t budget = 100;
  double dmin = 5.0;
  std::string strategy = "guided";
  auto* guide = app.add_subcommand("guide", "Measurement planning")->require_subcommand(1);
  auto* points = leaf(guide, "points", "Choose measurement locations");
  points->add_option("--samples", samples_path, "Samples .pmds")->required();
  points->add_option("--budget", budget, "Number of points")->capture_default_str();
  points->add_option("--dmin", dmin, "Minimum spacing in pixels")->capture_default_str()->check(CLI::NonNegativeNumber);
  points->add_option("--strategy", strategy, "guided or random")->capture_default_str()
      ->check(CLI::IsMember({"guided", "random"}));
  points->add_option("--gt", gt_path, "Ground truth; writes row,col,depth instead of row,col");
  points->add_option("--out", out_path, "Output CSV")->required();
  points->callback([&] {
    action = [&] {
      const SampleSet s = load_samples(samples_path);
      const auto& g = s.grid();
      const auto picked = strategy == "guided" ? guided_points(variance_map(s), budget, dmin)
                                               : random_points(g.height(), g.width(), budget, seed);
      if (gt_path.empty()) {
        io::write_text(out_path, io::format_points(picked));
        return;
      }
      const DepthMap gt = io::load_depth(gt_path);
      if (!g.matches(gt)) throw AlignmentError("ground truth does not match the samples");
      std::vector<Measurement> where;
      for (const auto& p : picked) where.push_back({p.row, p.col, 0.0});
      io::write_text(out_path, io::format_measurements(sample_at(gt, where, MeasurementPattern::random_points)));
    };
  });

  // query ordinal
  std::string a_text, b_text, pairs_path;
  double tau = 0.02;
  auto* query = app.add_subcommand("query", "Queries on the sample distribution")->require_subcommand(1);
  auto* ordinal = leaf(query, "ordinal", "Relative depth of two points");
  ordinal->add_option("--samples", samples_path, "Samples .pmds")->required();
  ordinal->add_option("--a", a_text, "Point A as R,C");
  ordinal->add_option("--b", b_text, "Point B as R,C");
  ordinal->add_option("--pairs", pairs_path, "CSV of pairs (ra,ca,rb,cb) for batch mode");
  ordinal->add_option("--tau", tau, "Equality tolerance")->capture_default_str()->check(CLI::NonNegativeNumber);
  ordinal->add_option("--out", out_path, "Relation CSV (batch mode)");
  ordinal->callback([&] {
    action = [&] {
      const SampleSet s = load_samples(samples_path);
      if (!pairs_path.empty()) {
        if (out_path.empty()) throw UsageError("--pairs needs --out");
        std::vector<Ordinal> rel;
        for (const auto& [a, b] : parse_pairs(io::read_text(pairs_path))) rel.push_back(ordinal_vote(s, a, b, tau).relation);
        io::write_text(out_path, io::format_ordinals(rel));
        return;
      }
      if (a_text.empty() || b_text.empty()) throw UsageError("query ordinal needs --a and --b, or --pairs");
      const auto v = ordinal_vote(s, parse_pixel(a_text, "--a"), parse_pixel(b_text, "--b"), tau);
      out << json{{"relation", relation_name(v.relation)},
                  {"a_closer", v.a_closer},
                  {"equal", v.equal},
                  {"b_closer", v.b_closer},
                  {"pairs", v.pairs}}
                 .dump()
          << '\n';
    };
  });

  // eval
  std::string pred_path, format = "json";
  auto* eval = app.add_subcommand("eval", "Metrics")->require_subcommand(1);
  auto* eval_depth = leaf(eval, "depth", "Depth error metrics");
  eval_depth->add_option("--pred", pred_path, "Prediction .pmdp")->required();
  eval_depth->add_option("--gt", gt_path, "Ground truth .pmdp")->required();
  eval_depth->add_option("--format", format, "json or text")->capture_default_str()
      ->check(CLI::IsMember({"json", "text"}));
  eval_depth->callback([&] {
    action = [&] {
      const auto r = error_report(io::load_depth(pred_path), io::load_depth(gt_path));
      out << (format == "json" ? to_json(r) : to_text(r)) << '\n';
    };
  });
  auto* eval_wkdr = leaf(eval, "wkdr", "Ordinal disagreement rates");
  eval_wkdr->add_option("--pred", pred_path, "Predicted relation CSV")->required();
  eval_wkdr->add_option("--gt", gt_path, "True relation CSV")->required();
  eval_wkdr->add_option("--format", format, "json or text")->capture_default_str()
      ->check(CLI::IsMember({"json", "text"}));
  eval_wkdr->callback([&] {
    action = [&] {
      const auto r = wkdr(io::parse_ordinals(io::read_text(pred_path)), io::parse_ordinals(io::read_text(gt_path)));
      out << (format == "json" ? to_json(r) : to_text(r)) << '\n';
    };
  });

  // bench rank
  auto* bench = app.add_subcommand("bench", "Sample quality curves")->require_subcommand(1);
  auto* rank = leaf(bench, "rank", "RMS of the rank-r composite for every r");
  rank->add_option("--samples", samples_path, "Samples .pmds")->required();
  rank->add_option("--gt", gt_path, "Ground truth .pmdp")->required();
  rank->add_option("--out", out_path, "Output CSV")->required();
  rank->callback([&] {
    action = [&] {
      const SampleSet s = load_samples(samples_path);
      const DepthMap gt = io::load_depth(gt_path);
      const PatchRanking ranking = rank_samples(s, gt);
      std::ostringstream csv;
      csv.precision(17);
      csv << "rank,rms\n";
      for (std::size_t r = 0; r < s.samples_per_patch(); ++r) {
        csv << r << ',' << rms_error(rank_composite(s, ranking, r), gt) << '\n';
      }
      io::write_text(out_path, csv.str());
    };
  });

  // serve
  int port = 8080;
  std::string host = "127.0.0.1", state_dir;
  auto* serve = leaf(&app, "serve", "HTTP session API");
  serve->add_option("--port", port, "Port")->capture_default_str()->check(CLI::Range(0, 65535));
  serve->add_option("--host", host, "Bind address")->capture_default_str();
  serve->add_option("--state-dir", state_dir, "Directory for session event logs");
  serve->callback([&] {
    action = [&] {
      service::SessionStore store(state_dir.empty() ? std::nullopt : std::optional<fs::path>(state_dir));
      service::HttpServer server(store);
      err << "listening on " << host << ':' << port << '\n';
      if (!server.listen(host, port)) throw Error("cannot listen on " + host + ":" + std::to_string(port));
    };
  });

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? 0 : 2;
  }

  try {
    action();
  } catch (const UsageError& e) {
    err << "usage error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}

}  // namespace pmd::cli
