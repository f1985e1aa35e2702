#include "pmd/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include "json.hpp"

namespace pmd {

namespace {

bool usable(const DepthMap& gt, std::size_t i) { return gt.valid(i) && gt[i] > 0.0 && std::isfinite(gt[i]); }

}  // namespace

ErrorReport error_report(const std::vector<DepthMap>& preds, const std::vector<DepthMap>& gts) {
  if (preds.size() != gts.size()) throw AlignmentError("prediction and ground-truth counts differ");
  ErrorReport r;
  double sq = 0.0, rel = 0.0, per_image = 0.0;
  std::size_t d1 = 0, d2 = 0, d3 = 0;
  const double t1 = 1.25, t2 = 1.25 * 1.25, t3 = 1.25 * 1.25 * 1.25;
  for (std::size_t k = 0; k < preds.size(); ++k) {
    const DepthMap& p = preds[k];
    const DepthMap& g = gts[k];
    if (!p.same_shape(g)) throw AlignmentError("prediction " + std::to_string(k) + " shape mismatch");
    double img_sq = 0.0;
    std::size_t img_n = 0;
    for (std::size_t i = 0; i < g.size(); ++i) {
      if (!usable(g, i)) continue;
      const double e = p[i] - g[i];
      img_sq += e * e;
      rel += std::abs(e) / g[i];
      const double ratio = p[i] > 0.0 ? std::max(p[i] / g[i], g[i] / p[i]) : INFINITY;
      d1 += ratio < t1;
      d2 += ratio < t2;
      d3 += ratio < t3;
      ++img_n;
    }
    if (img_n == 0) continue;
    sq += img_sq;
    per_image += std::sqrt(img_sq / static_cast<double>(img_n));
    r.pixels += img_n;
    ++r.images;
  }
  if (r.pixels == 0) throw ConfigError("no valid pixels to evaluate");
  const double n = static_cast<double>(r.pixels);
  r.rms = std::sqrt(sq / n);
  r.m_rms = per_image / static_cast<double>(r.images);
  r.rel = rel / n;
  r.delta1 = 100.0 * static_cast<double>(d1) / n;
  r.delta2 = 100.0 * static_cast<double>(d2) / n;
  r.delta3 = 100.0 * static_cast<double>(d3) / n;
  return r;
}

ErrorReport error_report(const DepthMap& pred, const DepthMap& gt) {
  return error_report(std::vector<DepthMap>{pred}, std::vector<DepthMap>{gt});
}

double rms_error(const DepthMap& pred, const DepthMap& gt, const BinaryMask* where) {
  if (!pred.same_shape(gt)) throw AlignmentError("prediction shape mismatch");
  if (where && !where->same_shape(gt)) throw AlignmentError("region mask shape mismatch");
  double sq = 0.0;
  std::size_t n = 0;
  for (std::size_t i = 0; i < gt.size(); ++i) {
    if (!usable(gt, i) || (where && !(*where)[i])) continue;
    const double e = pred[i] - gt[i];
    sq += e * e;
    ++n;
  }
  if (n == 0) throw ConfigError("no valid pixels to evaluate");
  return std::sqrt(sq / static_cast<double>(n));
}

WkdrReport wkdr(const std::vector<Ordinal>& predicted, const std::vector<Ordinal>& truth) {
  if (predicted.size() != truth.size()) throw AlignmentError("ordinal prediction and truth counts differ");
  if (truth.empty()) throw ConfigError("no ordinal pairs to evaluate");
  WkdrReport r;
  for (std::size_t i = 0; i < truth.size(); ++i) {
    const bool wrong = predicted[i] != truth[i];
    ++r.pairs;
    r.errors += wrong;
    if (truth[i] == Ordinal::equal) {
      ++r.eq_pairs;
      r.eq_errors += wrong;
    } else {
      ++r.neq_pairs;
      r.neq_errors += wrong;
    }
  }
  auto pct = [](std::size_t a, std::size_t b) { return 100.0 * static_cast<double>(a) / static_cast<double>(b); };
  r.wkdr = pct(r.errors, r.pairs);
  if (r.eq_pairs) r.wkdr_eq = pct(r.eq_errors, r.eq_pairs);
  if (r.neq_pairs) r.wkdr_neq = pct(r.neq_errors, r.neq_pairs);
  return r;
}

std::string to_json(const ErrorReport& r) {
  nlohmann::json j{{"rms", r.rms},       {"m_rms", r.m_rms},   {"rel", r.rel},       {"delta1", r.delta1},
                   {"delta2", r.delta2}, {"delta3", r.delta3}, {"pixels", r.pixels}, {"images", r.images}};
  return j.dump();
}

std::string to_json(const WkdrReport& r) {
  nlohmann::json j{{"wkdr", r.wkdr}, {"pairs", r.pairs}, {"eq_pairs", r.eq_pairs}, {"neq_pairs", r.neq_pairs}};
  j["wkdr_eq"] = r.wkdr_eq ? nlohmann::json(*r.wkdr_eq) : nlohmann::json(nullptr);
  j["wkdr_neq"] = r.wkdr_neq ? nlohmann::json(*r.wkdr_neq) : nlohmann::json(nullptr);
  return j.dump();
}

std::string to_text(const ErrorReport& r) {
  char buf[256];
  std::snprintf(buf, sizeof buf, "%10s %10s %10s %8s %8s %8s\n%10.6f %10.6f %10.6f %8.3f %8.3f %8.3f\n", "rms",
                "m-rms", "rel", "d1", "d2", "d3", r.rms, r.m_rms, r.rel, r.delta1, r.delta2, r.delta3);
  return buf;
}

std::string to_text(const WkdrReport& r) {
  auto cell = [](const std::optional<double>& v) {
    char b[32];
    if (v) std::snprintf(b, sizeof b, "%8.3f", *v);
    else std::snprintf(b, sizeof b, "%8s", "n/a");
    return std::string(b);
  };
  char buf[128];
  std::snprintf(buf, sizeof buf, "%8s %8s %8s\n%8.3f ", "WKDR", "WKDR=", "WKDR!=", r.wkdr);
  return buf + cell(r.wkdr_eq) + " " + cell(r.wkdr_neq) + "\n";
}

}  // namespace pmd
