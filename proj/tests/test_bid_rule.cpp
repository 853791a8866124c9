#include "doctest.h"

#include <cmath>
#include <vector>

#include "dashmech/bid_rule.hpp"
#include "dashmech/monotone_rule.hpp"
#include "dashmech/rng.hpp"

#include "test_support.hpp"

using namespace dashmech;
using dashmech::testing::identity_rule;
using dashmech::testing::random_rule;



TEST_CASE("bid strategies in closed form") {
  const MonotoneRule id = identity_rule();
  // winner-pays-bid: v - (v^2/2)/v = v/2
  CHECK(bid_strategy(id, 0.5, PaymentFormat::WinnerPaysBid) ==
        doctest::Approx(0.25).epsilon(1e-9));
  // the gamma = 1/2 linear-bid rule is x(z) = z, so the bid is gamma * z
  CHECK(bid_strategy(id, 0.8, PaymentFormat::WinnerPaysBid) ==
        doctest::Approx(0.4).epsilon(1e-9));
  // all-pay: v x(v) - integral = v^2/2
  CHECK(bid_strategy(id, 0.5, PaymentFormat::AllPay) ==
        doctest::Approx(0.125).epsilon(1e-9));
  CHECK(bid_strategy(id, 0.5, PaymentFormat::AllPay, 0.2) ==
        doctest::Approx(0.325).epsilon(1e-9));

  const MonotoneRule no_win =
      MonotoneRule::from_knots({0.0, 0.5, 1.0}, {0.0, 0.0, 1.0}, 1.0, true);
  CHECK_THROWS_AS((void)bid_strategy(no_win, 0.25, PaymentFormat::WinnerPaysBid),
                  NoWinRegionError);
}

TEST_CASE("bid allocation rules invert the strategy") {
  const MonotoneRule id = identity_rule();
  // all-pay: b = v^2/2, so x~(b) = sqrt(2b)
  const BidRule ap = BidRule::derive(id, PaymentFormat::AllPay, 0.0);
  CHECK(ap.alloc_at_bid(0.125) == doctest::Approx(0.5).epsilon(1e-8));
  // winner-pays-bid: b = v/2, so x~(b) = 2b
  const BidRule wpb = BidRule::derive(id, PaymentFormat::WinnerPaysBid, 0.0);
  CHECK(wpb.alloc_at_bid(0.25) == doctest::Approx(0.5).epsilon(1e-8));
}

TEST_CASE("positive transfers break winner-pays-bid inversion") {
  const MonotoneRule id = identity_rule();
  CHECK_THROWS_AS((void)BidRule::derive(id, PaymentFormat::WinnerPaysBid, 0.1),
                  NonInvertibleError);
  // all-pay keeps working with any transfer
  CHECK_NOTHROW((void)BidRule::derive(id, PaymentFormat::AllPay, 0.1));
  // the violating segment sits where the integral still trails the transfer
  try {
    (void)BidRule::derive(id, PaymentFormat::WinnerPaysBid, 0.1);
    CHECK(false);
  } catch (const NonInvertibleError& e) {
    CHECK(id.cumulative(e.value_lo) <= 0.1);
  }
}

TEST_CASE("first-order-condition inference") {
  // proportional share against a fixed opponent bid of 2: x~(b) = b/(b+2);
  // the optimal bid 1 reveals the value 5/2
  const double v = foc_value([](double b) { return b / (b + 2.0); }, 1.0,
                             PaymentFormat::WinnerPaysBid);
  CHECK(std::abs(v - 2.5) <= 1e-9);

  // all-pay x~(b) = sqrt(2 b): value 1/x~'(b) = sqrt(2 b)
  const MonotoneRule id = identity_rule();
  const BidRule ap = BidRule::derive(id, PaymentFormat::AllPay, 0.0);
  CHECK(ap.infer_foc(0.125).value == doctest::Approx(0.5).epsilon(1e-8));

  // round trip through the strategy
  for (double z : {0.1, 0.33, 0.5, 0.9}) {
    const double b = ap.strategy(z);
    CHECK(std::abs(ap.infer_foc(b).value - z) <= 1e-6);
    CHECK(std::abs(ap.invert(b).value - z) <= 1e-6);
  }
}

TEST_CASE("inversion clamps out-of-range bids with a flag") {
  const BidRule wpb =
      BidRule::derive(identity_rule(), PaymentFormat::WinnerPaysBid, 0.0);
  const InferResult low = wpb.invert(wpb.min_bid() - 0.5);
  CHECK(low.extrapolated);
  CHECK(low.value == doctest::Approx(wpb.domain_lo()));
  const InferResult high = wpb.invert(wpb.max_bid() + 0.5);
  CHECK(high.extrapolated);
  CHECK(high.value == doctest::Approx(1.0));
  CHECK_FALSE(wpb.invert(0.2).extrapolated);
}

TEST_CASE("round trip, FOC agreement, and payment identities on random rules") {
  Rng rng(11);
  for (int rep = 0; rep < 8; ++rep) {
    const double vmax = 0.5 + 2.0 * rng.uniform();
    const MonotoneRule rule = random_rule(rng, vmax);
    for (PaymentFormat fmt : {PaymentFormat::WinnerPaysBid, PaymentFormat::AllPay}) {
      const double transfer =
          fmt == PaymentFormat::AllPay ? 0.2 * (rng.uniform() - 0.5) : -0.1 * rng.uniform();
      const BidRule br = BidRule::derive(rule, fmt, transfer);
      const double lo = br.domain_lo(), hi = br.domain_hi();
      for (int k = 1; k < 20; ++k) {
        const double z = lo + (hi - lo) * k / 20.0;
        const double b = br.strategy(z);
        CHECK(std::abs(br.invert(b).value - z) <= 1e-6 * vmax);  // round trip
        if (k > 1 && k < 19)                                     // interior of the range
          CHECK(std::abs(br.infer_foc(b).value - br.invert(b).value) <= 1e-5 * vmax);
        // payment-format identity at the inferred value
        const double inferred = br.invert(b).value;
        const double truthful = rule.truthful_payment(inferred, transfer);
        if (fmt == PaymentFormat::WinnerPaysBid)
          CHECK(std::abs(b * br.alloc_at_bid(b) - truthful) <= 1e-6 * vmax);
        else
          CHECK(std::abs(b - truthful) <= 1e-6 * vmax);
      }
      // monotone strategy on the table
      const auto& bids = br.table_bids();
      for (std::size_t i = 0; i + 1 < bids.size(); ++i) CHECK(bids[i + 1] > bids[i]);
    }
  }
}

TEST_CASE("winner-pays-bid strategies ignore the rule's scale") {
  Rng rng(3);
  const MonotoneRule rule = random_rule(rng, 1.5);
  for (double alpha : {0.1, 0.5, 0.9}) {
    const MonotoneRule scaled = rule.scaled(alpha);
    for (double v : {0.2, 0.6, 1.0, 1.4}) {
      CHECK(bid_strategy(scaled, v, PaymentFormat::WinnerPaysBid) ==
            doctest::Approx(bid_strategy(rule, v, PaymentFormat::WinnerPaysBid))
                .epsilon(1e-13));
      // all-pay payments scale with alpha instead
      CHECK(bid_strategy(scaled, v, PaymentFormat::AllPay) ==
            doctest::Approx(alpha * bid_strategy(rule, v, PaymentFormat::AllPay))
                .epsilon(1e-12));
    }
  }
  const MonotoneRule id = identity_rule();
  CHECK(bid_strategy(id.scaled(0.5), 0.5, PaymentFormat::AllPay) ==
        doctest::Approx(0.0625).epsilon(1e-9));
  CHECK(bid_strategy(id.scaled(0.5), 0.5, PaymentFormat::WinnerPaysBid) ==
        doctest::Approx(0.25).epsilon(1e-12));
}

TEST_CASE("linear tail slope matches X/(V-B) and dominates delta") {
  // x(v) = v: V = 0.5, X = 0.5, P = 0.125, B = 0.25, delta = 1
  const LinearTail tail{0.5, 0.5, 0.125, 1.0};
  CHECK(tail.bid_at_V() == doctest::Approx(0.25));
  const double slope0 = linear_tail_slope(tail, 0.0);
  CHECK(std::abs(slope0 - 2.0) / 2.0 <= 1e-4);  // X/(V-B) = 2

  // independent cross-check: finite differences on the derived bid rule
  const BidRule wpb = BidRule::derive(identity_rule(), PaymentFormat::WinnerPaysBid, 0.0);
  const double h = 1e-5;
  const double fd = (wpb.alloc_at_bid(0.25 + h) - wpb.alloc_at_bid(0.25 - h)) / (2 * h);
  CHECK(std::abs(fd - slope0) <= 1e-3);

  // closed-form derivative of nu at beta = 0
  auto nu_prime_slope = [](const LinearTail& t, double beta) {
    const double B = t.bid_at_V();
    const double a = t.V - B - beta;
    return (t.X - t.delta * a) / std::sqrt(a * a + 2.0 * beta * t.X / t.delta) + t.delta;
  };
  CHECK(slope0 == doctest::Approx(nu_prime_slope(tail, 0.0)).epsilon(1e-4));

  // slope >= delta whenever the rule's slope is at least delta everywhere:
  // family x(v) = a + b v with b >= delta gives X = a + bV, P = b V^2 / 2
  Rng rng(5);
  for (int rep = 0; rep < 20; ++rep) {
    const double delta = 0.2 + rng.uniform();
    const double b = delta * (1.0 + rng.uniform());
    const double a = 0.3 * rng.uniform();
    const double V = 0.3 + 0.7 * rng.uniform();
    const LinearTail t{V, a + b * V, b * V * V / 2.0, delta};
    for (double beta : {0.0, 0.01, 0.05, 0.2})
      CHECK(linear_tail_slope(t, beta) >= delta - 1e-6);
  }

  CHECK_THROWS_AS((void)linear_tail_slope(LinearTail{0.5, 0.5, 0.30, 1.0}, 0.0),
                  std::domain_error);  // B = 0.6 > V: payment beyond surplus
}
