#include "dashmech/agents.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace dashmech {

HedgeLearner::HedgeLearner(std::size_t arms, double vmax, std::uint64_t seed)
    : cum_util_(arms, 0.0), vmax_(vmax), rng_(seed) {
  if (arms < 2) throw std::invalid_argument("learner needs at least two arms");
  grid_.resize(arms);
  for (std::size_t i = 0; i < arms; ++i)
    grid_[i] = vmax * static_cast<double>(i) / static_cast<double>(arms - 1);
}

std::vector<double> HedgeLearner::weights() const {
  const std::size_t k = grid_.size();
  const double eta = std::sqrt(8.0 * std::log(static_cast<double>(k)) /
                               static_cast<double>(std::max<std::size_t>(1, stages_)));
  const double top = *std::max_element(cum_util_.begin(), cum_util_.end());
  std::vector<double> w(k);
  double total = 0.0;
  for (std::size_t i = 0; i < k; ++i) {
    w[i] = std::exp(eta * (cum_util_[i] - top));
    total += w[i];
  }
  for (double& x : w) x /= total;
  return w;
}

std::size_t HedgeLearner::act_index() {
  const std::vector<double> w = weights();
  return rng_.categorical(w);
}

double HedgeLearner::act() { return grid_[act_index()]; }

void HedgeLearner::update(std::span<const double> arm_utilities) {
  if (arm_utilities.size() != cum_util_.size())
    throw std::invalid_argument("utility vector size must match the arm count");
  for (std::size_t i = 0; i < cum_util_.size(); ++i) {
    const double clipped = std::clamp(arm_utilities[i], -vmax_, vmax_);
    cum_util_[i] += (clipped + vmax_) / (2.0 * vmax_);
  }
  ++stages_;
}

double ValuePath::at(int stage, Rng& stream) const {
  switch (kind) {
    case Kind::Static:
      return value;
    case Kind::Path: {
      if (path.empty()) throw std::invalid_argument("empty value path");
      const std::size_t idx = std::min<std::size_t>(static_cast<std::size_t>(stage - 1),
                                                    path.size() - 1);
      return path[idx];
    }
    case Kind::IidUniform: {
      Rng sub = stream.substream(0x7a1, static_cast<std::uint64_t>(stage));
      return sub.uniform(low, high);
    }
  }
  throw std::logic_error("unknown value path kind");
}

}  // namespace dashmech
