#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "dashmech/common.hpp"
#include "dashmech/rng.hpp"

namespace dashmech {

// Anytime multiplicative-weights learner over a fixed bid grid with full
// information: after each stage it observes the utility every grid bid would
// have earned.  Learning rate sqrt(8 ln K / t); utilities are rescaled from
// [-vmax, vmax] to [0, 1] internally.
class HedgeLearner {
 public:
  HedgeLearner(std::size_t arms, double vmax, std::uint64_t seed);

  // Samples a bid from the current weights.
  double act();
  std::size_t act_index();

  // Full-information update with one utility per grid bid.
  void update(std::span<const double> arm_utilities);

  std::vector<double> weights() const;
  const std::vector<double>& grid() const { return grid_; }
  const std::vector<double>& cumulative_utilities() const { return cum_util_; }
  std::size_t stage_count() const { return stages_; }

 private:
  std::vector<double> grid_;
  std::vector<double> cum_util_;  // rescaled to [0, 1] per stage
  std::size_t stages_ = 0;
  double vmax_;
  Rng rng_;
};

struct AgentStrategy {
  enum class Kind { FollowDashboard, ConstantBid, Hedge } kind = Kind::FollowDashboard;
  double constant_bid = 0.0;
  std::size_t hedge_arms = 257;
};

// Per-stage value process of an agent.
struct ValuePath {
  enum class Kind { Static, Path, IidUniform } kind = Kind::Static;
  double value = 0.0;
  std::vector<double> path;
  double low = 0.0, high = 1.0;

  double at(int stage, Rng& stream) const;  // stage is 1-based
};

struct AgentSpec {
  ValuePath values;
  AgentStrategy strategy;
};

}  // namespace dashmech
