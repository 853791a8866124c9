#pragma once

#include <cstddef>
#include <cstdint>
#include <stdexcept>
#include <string>

namespace dashmech {

// Payment format of a mechanism stage: winners pay their bid, or everyone
// pays their bid regardless of the outcome.
enum class PaymentFormat { WinnerPaysBid, AllPay };

inline const char* to_string(PaymentFormat f) {
  return f == PaymentFormat::WinnerPaysBid ? "winner_pays_bid" : "all_pay";
}

// Defaults shared across the library.  All of these can be overridden per
// experiment through ToleranceConfig / ExperimentConfig.
inline constexpr double kMinSlope = 1e-9;
inline constexpr std::size_t kGridKnots = 1025;
inline constexpr double kNoWinEps = 1e-12;
inline constexpr double kInvertTolFactor = 1e-10;  // bisection tol, times vmax
inline constexpr double kGammaHigh = 1.0 - 1e-4;
inline constexpr double kGammaLow = 1e-4;
inline constexpr double kExponentCap = 1e4;
inline constexpr double kFdStepFactor = 1.0 / 4096.0;  // finite differences, times vmax

struct ToleranceConfig {
  double min_slope = kMinSlope;
  double no_win_eps = kNoWinEps;
  double invert_tol_factor = kInvertTolFactor;
  double fd_step_factor = kFdStepFactor;
};

// Bid strategy evaluated where the winner-pays-bid allocation vanishes.
struct NoWinRegionError : std::domain_error {
  explicit NoWinRegionError(const std::string& what) : std::domain_error(what) {}
};

// Raised when a bid strategy is not strictly increasing and therefore cannot
// be inverted; carries the first offending segment of the value grid.
struct NonInvertibleError : std::runtime_error {
  NonInvertibleError(const std::string& what, std::size_t seg, double lo, double hi)
      : std::runtime_error(what), segment(seg), value_lo(lo), value_hi(hi) {}
  std::size_t segment;
  double value_lo;
  double value_hi;
};

// Value recovered from a bid.  `extrapolated` is set when the bid fell
// outside the invertible range and the result was clamped to the boundary.
struct InferResult {
  double value = 0.0;
  bool extrapolated = false;
};

}  // namespace dashmech
