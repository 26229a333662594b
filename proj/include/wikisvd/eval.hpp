#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <span>
#include <utility>
#include <vector>

#include <boost/math/distributions/students_t.hpp>

#include "wikisvd/errors.hpp"

namespace wikisvd {

/// (predicted, actual)
using PredictionPair = std::pair<double, double>;

inline double rmse(std::span<const PredictionPair> pairs) {
  if (pairs.empty()) throw ArgumentError("rmse of an empty prediction list");
  double sse = 0.0;
  for (const auto& [pred, actual] : pairs) sse += (pred - actual) * (pred - actual);
  return std::sqrt(sse / static_cast<double>(pairs.size()));
}

inline double mae(std::span<const PredictionPair> pairs) {
  if (pairs.empty()) throw ArgumentError("mae of an empty prediction list");
  double sae = 0.0;
  for (const auto& [pred, actual] : pairs) sae += std::abs(pred - actual);
  return sae / static_cast<double>(pairs.size());
}

/// Relative error reduction in percent; negative when the model is worse.
inline double improvement_pct(double baseline_metric, double model_metric) {
  if (!(baseline_metric > 0.0)) throw ArgumentError("baseline metric must be positive");
  return 100.0 * (baseline_metric - model_metric) / baseline_metric;
}

struct TTestResult {
  double t = 0.0;
  double p = 1.0;
  std::size_t df = 0;
  bool significant = false;
  bool degenerate = false;  // constant nonzero differences: |t| infinite, p taken as 0
};

/// Two-sided paired t-test on a[k] - b[k].
inline TTestResult paired_t_test(std::span<const double> a, std::span<const double> b, double alpha = 0.05) {
  if (a.size() != b.size()) throw ArgumentError("paired samples must have equal length");
  if (a.size() < 2) throw ArgumentError("paired t-test needs at least two pairs");
  const auto n = a.size();
  std::vector<double> d(n);
  for (std::size_t k = 0; k < n; ++k) d[k] = a[k] - b[k];
  TTestResult out;
  out.df = n - 1;
  if (std::all_of(d.begin(), d.end(), [](double x) { return x == 0.0; })) return out;

  double mean = 0.0;
  for (double x : d) mean += x;
  mean /= static_cast<double>(n);
  double ss = 0.0;
  for (double x : d) ss += (x - mean) * (x - mean);
  const double sd = std::sqrt(ss / static_cast<double>(n - 1));

  if (sd <= 1e-14 * std::abs(mean)) {
    out.degenerate = true;
    out.t = mean > 0 ? std::numeric_limits<double>::infinity() : -std::numeric_limits<double>::infinity();
    out.p = 0.0;
    out.significant = true;
    return out;
  }
  out.t = mean / (sd / std::sqrt(static_cast<double>(n)));
  boost::math::students_t dist(static_cast<double>(out.df));
  out.p = 2.0 * boost::math::cdf(boost::math::complement(dist, std::abs(out.t)));
  out.significant = out.p < alpha;
  return out;
}

}  // namespace wikisvd
