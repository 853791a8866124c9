#include "dashmech/monotone_rule.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace dashmech {

MonotoneRule MonotoneRule::from_knots(std::vector<double> values, std::vector<double> probs,
                                      double vmax, bool relaxed, double min_slope) {
  if (values.size() < 2 || values.size() != probs.size())
    throw std::invalid_argument("rule needs at least two (value, prob) knots");
  if (!(vmax > 0.0)) throw std::invalid_argument("vmax must be positive");
  if (values.front() != 0.0) throw std::invalid_argument("first knot must be at value 0");
  for (std::size_t i = 0; i + 1 < values.size(); ++i) {
    if (!(values[i + 1] > values[i]))
      throw std::invalid_argument("knot values must be strictly increasing");
  }
  if (values.back() > vmax * (1.0 + 1e-12))
    throw std::invalid_argument("knot values exceed vmax");
  for (std::size_t i = 0; i < probs.size(); ++i) {
    if (!(probs[i] >= 0.0 && probs[i] <= 1.0))
      throw std::invalid_argument("probabilities must lie in [0, 1]");
    if (i > 0 && probs[i] < probs[i - 1])
      throw std::invalid_argument("probabilities must be non-decreasing");
  }
  MonotoneRule rule{Raw{}};
  rule.values_ = std::move(values);
  rule.probs_ = std::move(probs);
  rule.vmax_ = vmax;
  rule.min_slope_ = min_slope;
  rule.finalize(relaxed);
  return rule;
}

MonotoneRule MonotoneRule::sample(const std::function<double(double)>& f, double vmax,
                                  std::size_t knots, bool relaxed, double min_slope) {
  if (knots < 2) throw std::invalid_argument("need at least two knots");
  std::vector<double> values(knots), probs(knots);
  for (std::size_t i = 0; i < knots; ++i) {
    values[i] = vmax * static_cast<double>(i) / static_cast<double>(knots - 1);
    double p = f(values[i]);
    probs[i] = std::clamp(p, 0.0, 1.0);
  }
  return from_knots(std::move(values), std::move(probs), vmax, relaxed, min_slope);
}

MonotoneRule MonotoneRule::linear_ramp(double vmax, std::size_t knots, double min_slope) {
  return sample([&](double v) { return std::max(min_slope, v / vmax); }, vmax, knots,
                /*relaxed=*/false, min_slope);
}

void MonotoneRule::finalize(bool relaxed) {
  cum_.assign(values_.size(), 0.0);
  strict_ = true;
  for (std::size_t i = 0; i + 1 < values_.size(); ++i) {
    const double dv = values_[i + 1] - values_[i];
    cum_[i + 1] = cum_[i] + 0.5 * (probs_[i] + probs_[i + 1]) * dv;
    if ((probs_[i + 1] - probs_[i]) / dv < min_slope_) strict_ = false;
  }
  if (!strict_ && !relaxed)
    throw std::invalid_argument("rule is not strictly monotone (slope below min_slope); "
                                "pass relaxed=true for analysis-only use");
}

std::size_t MonotoneRule::segment(double v) const {
  if (v < 0.0) throw std::domain_error("negative value");
  auto it = std::upper_bound(values_.begin(), values_.end(), v);
  std::size_t idx = static_cast<std::size_t>(it - values_.begin());
  if (idx == 0) return 0;
  if (idx >= values_.size()) return values_.size() - 2;
  return idx - 1;
}

double MonotoneRule::segment_slope(std::size_t seg) const {
  return (probs_[seg + 1] - probs_[seg]) / (values_[seg + 1] - values_[seg]);
}

double MonotoneRule::eval(double v) const {
  if (v < 0.0) throw std::domain_error("negative value");
  if (v >= values_.back()) return probs_.back();
  const std::size_t seg = segment(v);
  return probs_[seg] + segment_slope(seg) * (v - values_[seg]);
}

double MonotoneRule::cumulative(double v) const {
  if (v < 0.0 || v > vmax_ * (1.0 + 1e-12))
    throw std::domain_error("cumulative outside [0, vmax]");
  if (v >= values_.back())
    return cum_.back() + probs_.back() * (v - values_.back());
  const std::size_t seg = segment(v);
  const double dv = v - values_[seg];
  const double m = segment_slope(seg);
  return cum_[seg] + probs_[seg] * dv + 0.5 * m * dv * dv;
}

double MonotoneRule::truthful_payment(double v, double transfer) const {
  return v * eval(v) - cumulative(v) + transfer;
}

MonotoneRule MonotoneRule::scaled(double alpha) const {
  if (!(alpha > 0.0)) throw std::domain_error("scale must be positive");
  if (alpha * probs_.back() > 1.0 + 1e-12)
    throw std::domain_error("scaling pushes probabilities above 1");
  MonotoneRule out = *this;
  for (double& p : out.probs_) p = std::min(1.0, p * alpha);
  // slopes scale with alpha, so the strictness threshold does too
  out.min_slope_ = min_slope_ * std::min(1.0, alpha) * (1.0 - 1e-9);
  out.finalize(/*relaxed=*/true);
  return out;
}

MonotoneRule MonotoneRule::clamped_support(double floor_prob) const {
  if (!(floor_prob >= 0.0 && floor_prob < 1.0))
    throw std::domain_error("support floor must lie in [0, 1)");
  MonotoneRule out = *this;
  for (double& p : out.probs_) p = floor_prob + (1.0 - floor_prob) * p;
  out.min_slope_ = min_slope_ * (1.0 - floor_prob) * (1.0 - 1e-9);
  out.finalize(/*relaxed=*/true);
  return out;
}

MonotoneRule MonotoneRule::resampled(std::size_t knots) const {
  return sample([this](double v) { return eval(v); }, vmax_, knots, /*relaxed=*/true,
                min_slope_);
}

MonotoneRule MonotoneRule::average(std::span<const MonotoneRule> rules) {
  if (rules.empty()) throw std::invalid_argument("cannot average zero rules");
  for (const auto& r : rules)
    if (!r.same_grid(rules.front()))
      throw std::invalid_argument("rules must share one knot grid to be averaged");
  MonotoneRule out = rules.front();
  const double inv = 1.0 / static_cast<double>(rules.size());
  for (std::size_t i = 0; i < out.probs_.size(); ++i) {
    double sum = 0.0;
    for (const auto& r : rules) sum += r.probs_[i];
    out.probs_[i] = sum * inv;
  }
  out.finalize(/*relaxed=*/true);
  return out;
}

double MonotoneRule::win_region_start(double eps) const {
  for (std::size_t i = 0; i < values_.size(); ++i)
    if (probs_[i] >= eps) return values_[i];
  return vmax_;
}

bool MonotoneRule::same_grid(const MonotoneRule& other) const {
  if (values_.size() != other.values_.size() || vmax_ != other.vmax_) return false;
  for (std::size_t i = 0; i < values_.size(); ++i)
    if (values_[i] != other.values_[i]) return false;
  return true;
}

}  // namespace dashmech
