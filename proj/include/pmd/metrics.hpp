#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include "pmd/core.hpp"

namespace pmd {

/// Standard depth error metrics over the valid ground-truth pixels.
struct ErrorReport {
  double rms = 0.0;    // pooled over every valid pixel of every image
  double m_rms = 0.0;  // mean of per-image rms
  double rel = 0.0;    // mean |pred - gt| / gt
  double delta1 = 0.0;  // % of pixels with max(pred/gt, gt/pred) < 1.25
  double delta2 = 0.0;  // ... < 1.25^2
  double delta3 = 0.0;  // ... < 1.25^3
  std::size_t pixels = 0;
  std::size_t images = 0;
};

/// Pixels where gt is invalid or gt <= 0 are skipped. Throws ConfigError when no
/// valid pixel remains and AlignmentError on shape mismatch.
ErrorReport error_report(const std::vector<DepthMap>& preds, const std::vector<DepthMap>& gts);
ErrorReport error_report(const DepthMap& pred, const DepthMap& gt);

/// RMS over valid pixels, optionally restricted to pixels where `where` is set.
double rms_error(const DepthMap& pred, const DepthMap& gt, const BinaryMask* where = nullptr);

/// Ordinal relation of point A relative to point B.
enum class Ordinal { a_closer, equal, b_closer };

/// Disagreement rates in percent. A class subset with no ground-truth pairs is reported as absent.
struct WkdrReport {
  double wkdr = 0.0;
  std::optional<double> wkdr_eq;
  std::optional<double> wkdr_neq;
  std::size_t pairs = 0;
  std::size_t eq_pairs = 0;
  std::size_t neq_pairs = 0;
  std::size_t errors = 0;
  std::size_t eq_errors = 0;
  std::size_t neq_errors = 0;
};

WkdrReport wkdr(const std::vector<Ordinal>& predicted, const std::vector<Ordinal>& truth);

std::string to_json(const ErrorReport& r);
std::string to_json(const WkdrReport& r);
std::string to_text(const ErrorReport& r);
std::string to_text(const WkdrReport& r);

}  // namespace pmd
