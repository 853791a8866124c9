#pragma once

#include <functional>
#include <span>
#include <vector>

#include "dashmech/common.hpp"

namespace dashmech {

// A monotone allocation rule x : [0, vmax] -> [0, 1], represented piecewise
// linearly on an explicit knot grid.  Knot values are strictly increasing and
// start at 0; probabilities are non-decreasing.  Evaluation extends constantly
// above the last knot.  Integrals are exact per segment (trapezoid), which
// makes payments, bid strategies, and their inverses exact within segments.
//
// A rule is "strict" when every segment slope is at least `min_slope`; rules
// that fail this are rejected at construction unless `relaxed` is passed,
// in which case the rule is usable for analysis but not for dashboards.
class MonotoneRule {
 public:
  // Default: the identity ramp on [0, 1] (placeholder before assignment).
  MonotoneRule() : MonotoneRule(from_knots({0.0, 1.0}, {0.0, 1.0}, 1.0)) {}

  static MonotoneRule from_knots(std::vector<double> values, std::vector<double> probs,
                                 double vmax, bool relaxed = false,
                                 double min_slope = kMinSlope);

  // Samples f on a uniform grid of `knots` points over [0, vmax].
  static MonotoneRule sample(const std::function<double(double)>& f, double vmax,
                             std::size_t knots = kGridKnots, bool relaxed = false,
                             double min_slope = kMinSlope);

  // The default stage-1 dashboard rule: x(v) = max(min_slope, v / vmax).
  static MonotoneRule linear_ramp(double vmax, std::size_t knots = kGridKnots,
                                  double min_slope = kMinSlope);

  // Evaluation; clamps to the last knot above vmax, rejects negative values.
  double operator()(double v) const { return eval(v); }
  double eval(double v) const;

  // Exact integral of the piecewise-linear rule over [0, v].
  double cumulative(double v) const;

  // Payment-identity payment: v * x(v) - integral + transfer.
  double truthful_payment(double v, double transfer = 0.0) const;

  // All probabilities scaled by alpha; requires alpha * max_prob <= 1.
  MonotoneRule scaled(double alpha) const;

  // Affine clamp of the range into [floor_prob, 1]: x -> floor + (1-floor) x.
  MonotoneRule clamped_support(double floor_prob) const;

  // Re-samples this rule onto a uniform grid with `knots` points.
  MonotoneRule resampled(std::size_t knots) const;

  // Pointwise mean of rules sharing one grid.
  static MonotoneRule average(std::span<const MonotoneRule> rules);

  double vmax() const { return vmax_; }
  std::size_t knot_count() const { return values_.size(); }
  bool strict() const { return strict_; }
  double min_slope() const { return min_slope_; }
  const std::vector<double>& knot_values() const { return values_; }
  const std::vector<double>& knot_probs() const { return probs_; }

  // Index of the segment containing v (last segment for v >= last knot).
  std::size_t segment(double v) const;
  double segment_slope(std::size_t seg) const;
  // Integral over [0, knot value of seg].
  double cumulative_at_knot(std::size_t seg) const { return cum_[seg]; }

  // Smallest grid value whose allocation is at least `eps` (the win region
  // for winner-pays-bid strategies), or vmax if none.
  double win_region_start(double eps = kNoWinEps) const;

  // Derivative dx/dv at v (segment slope; right-continuous at knots).
  double slope_at(double v) const { return segment_slope(segment(v)); }

  bool same_grid(const MonotoneRule& other) const;

 private:
  struct Raw {};
  explicit MonotoneRule(Raw) {}
  void finalize(bool relaxed);

  std::vector<double> values_;
  std::vector<double> probs_;
  std::vector<double> cum_;  // cum_[i] = integral over [0, values_[i]]
  double vmax_ = 1.0;
  double min_slope_ = kMinSlope;
  bool strict_ = false;
};

}  // namespace dashmech
