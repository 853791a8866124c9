#include "doctest.h"

#include <cmath>
#include <vector>

#include "dashmech/bid_rule.hpp"
#include "dashmech/rebalancing.hpp"
#include "dashmech/rng.hpp"

#include "test_support.hpp"

using namespace dashmech;
using dashmech::testing::identity_rule;
using dashmech::testing::power_rule;
using dashmech::testing::random_rule;
using dashmech::testing::worst_abs_balance_wpb;

TEST_CASE("reference rebalancing shifts payments by balance * rate") {
  const MonotoneRule id = identity_rule();
  const Dashboard ap = reference_rebalancing(id, PaymentFormat::AllPay, 0.2, 1.0);
  CHECK(ap.bid(0.5) == doctest::Approx(0.325).epsilon(1e-9));
  CHECK(ap.invertible());

  const Dashboard wpb = reference_rebalancing(id, PaymentFormat::WinnerPaysBid, 0.2, 0.5);
  CHECK(wpb.bid(0.5) == doctest::Approx(0.45).epsilon(1e-9));  // 0.25 + 0.1/0.5
  CHECK_FALSE(wpb.invertible());  // positive transfer: analysis only

  const Dashboard zero = reference_rebalancing(id, PaymentFormat::WinnerPaysBid, 0.0, 0.7);
  CHECK(zero.transfer() == 0.0);
  CHECK(zero.bid(0.5) == doctest::Approx(0.25).epsilon(1e-9));
  CHECK(zero.invertible());

  // negative balances keep winner-pays-bid invertible
  const Dashboard neg = reference_rebalancing(id, PaymentFormat::WinnerPaysBid, -0.2, 0.5);
  CHECK(neg.invertible());
  CHECK_THROWS_AS((void)reference_rebalancing(id, PaymentFormat::AllPay, 0.1, 1.5),
                  std::invalid_argument);
}

TEST_CASE("linear-bid rules") {
  // gamma = 1/2 meeting (1, 1): exponent 1, so x(z) = z
  const MonotoneRule lin = linear_bid_rule(0.5, 1.0, 1.0, 1.0);
  for (double z : {0.25, 0.5, 1.0}) CHECK(lin.eval(z) == doctest::Approx(z).epsilon(1e-6));

  // its winner-pays-bid strategy is gamma * z, for several gammas
  for (double gamma : {0.3, 0.5, 0.7}) {
    const MonotoneRule r = linear_bid_rule(gamma, 0.8, 0.9, 1.0);
    for (double z : {0.3, 0.5, 0.8})
      CHECK(bid_strategy(r, z, PaymentFormat::WinnerPaysBid) ==
            doctest::Approx(gamma * z).epsilon(2e-4));
  }

  // meeting (0.5, 0.25) with gamma = 1/2 scales to x(z) = z / 2
  const MonotoneRule scaled = linear_bid_rule(0.5, 0.5, 0.25, 1.0);
  CHECK(scaled.eval(0.5) == doctest::Approx(0.25).epsilon(1e-6));
  CHECK(scaled.eval(1.0) == doctest::Approx(0.5).epsilon(1e-6));

  // near-degenerate gamma caps the exponent and stays monotone
  bool capped = false;
  const MonotoneRule steep = linear_bid_rule(1.0 - 1e-6, 0.5, 0.5, 1.0, 257, kMinSlope,
                                             &capped);
  CHECK(capped);
  CHECK(steep.eval(1.0) >= steep.eval(0.25));
}

TEST_CASE("ir splice solves for the crossover value") {
  const MonotoneRule id = identity_rule();
  // dstrat(v) = v/2: positive balance 0.2 gives v - v/2 = 0.2 at v = 0.4
  auto [d_pos, s_pos] = ir_rebalancing(id, 0.2, 0.5);
  CHECK(s_pos.v_dagger == doctest::Approx(0.4).epsilon(1e-7));
  CHECK(d_pos.transfer() == 0.0);
  CHECK_FALSE(s_pos.saturated);
  // low values bid their full value, the map is continuous at v_dagger
  CHECK(d_pos.bid(0.2) == doctest::Approx(0.2));
  CHECK(d_pos.bid(s_pos.v_dagger + 1e-9) == doctest::Approx(s_pos.v_dagger).epsilon(1e-4));
  // high values follow the reference rebalancing strategy with B * x(v_dagger)
  const double xd = id.eval(s_pos.v_dagger);
  for (double v : {0.5, 0.7, 0.9})
    CHECK(d_pos.bid(v) ==
          doctest::Approx(v / 2.0 + 0.2 * xd / id.eval(v)).epsilon(1e-6));

  // negative balance -0.1: dstrat(v) = 0.1 at v = 0.2, low bids near zero
  auto [d_neg, s_neg] = ir_rebalancing(id, -0.1, 0.5);
  CHECK(s_neg.v_dagger == doctest::Approx(0.2).epsilon(1e-7));
  CHECK(d_neg.bid(0.1) == doctest::Approx(kGammaLow * 0.1));
  for (double v : {0.3, 0.6, 0.9})
    CHECK(d_neg.bid(v) <= v / 2.0);  // discounted payments

  // zero balance: plain dashboard
  auto [d_zero, s_zero] = ir_rebalancing(id, 0.0, 0.5);
  CHECK(s_zero.v_dagger == 0.0);
  CHECK(d_zero.bid(0.5) == doctest::Approx(0.25).epsilon(1e-9));

  // no solution below vmax: the whole population is treated as low-valued
  auto [d_sat, s_sat] = ir_rebalancing(id, 5.0, 0.5);
  CHECK(s_sat.saturated);
  CHECK(s_sat.v_dagger == doctest::Approx(1.0));
}

TEST_CASE("ir splice inference inverts the published map") {
  const MonotoneRule base = identity_rule().clamped_support(0.2);
  for (double balance : {0.35, -0.15}) {
    auto [d, splice] = ir_rebalancing(base, balance, 0.2);
    for (double v : {0.05, 0.3, 0.6, 0.95}) {
      const double b = d.bid(v);
      CHECK(std::abs(d.infer(b).value - v) <= 1e-6);
    }
  }
}

TEST_CASE("residual and resolved") {
  const MonotoneRule id = identity_rule();
  // correct dashboard: no residual
  auto [d0, r0] = residual_and_resolved(id, id, PaymentFormat::AllPay, 0.5, 0.3, 1.0, 1);
  CHECK(d0 == doctest::Approx(0.0));
  CHECK(r0 == doctest::Approx(0.3));

  // all-pay residual is the difference of the two all-pay bids
  const MonotoneRule half = identity_rule().scaled(0.5);
  auto [d1, r1] = residual_and_resolved(id, half, PaymentFormat::AllPay, 0.5, 0.0, 1.0, 1);
  CHECK(d1 == doctest::Approx(0.125 - 0.0625).epsilon(1e-9));

  // winner-pays-bid needs dashboard support above the rate
  CHECK_THROWS_AS((void)residual_and_resolved(id, id, PaymentFormat::WinnerPaysBid, 0.01,
                                              0.1, 0.5, 1),
                  std::domain_error);

  // |residual| <= inferred value, on random rule pairs
  Rng rng(17);
  for (int rep = 0; rep < 30; ++rep) {
    const MonotoneRule valloc = random_rule(rng, 1.0);
    const MonotoneRule ealloc = random_rule(rng, 1.0).clamped_support(0.2);
    const double v = 0.05 + 0.95 * rng.uniform();
    for (PaymentFormat fmt : {PaymentFormat::AllPay, PaymentFormat::WinnerPaysBid}) {
      auto [delta, res] = residual_and_resolved(valloc, ealloc, fmt, v, 0.1, 0.2, 1);
      CHECK(std::abs(delta) <= v + 1e-12);
      (void)res;
    }
  }
}

TEST_CASE("all-pay balance updates") {
  BalanceLedger ledger{0.0, 1.0, 0.0, {}};
  // bid equals the realized strategy: balance unchanged
  update_balance_allpay(ledger, 1, 0.4, 0.4, 0.4);
  CHECK(ledger.balance == doctest::Approx(0.0));

  // correct dashboard with eta = 1 resolves the full balance
  ledger.balance = 0.2;
  update_balance_allpay(ledger, 2, 0.3, 0.3 + 0.2, 0.3);
  CHECK(ledger.balance == doctest::Approx(0.0).epsilon(1e-15));

  // eta = 1/2 resolves half
  BalanceLedger l2{0.3, 0.5, 0.3, {}};
  update_balance_allpay(l2, 1, 0.25, 0.25 + 0.3 * 0.5, 0.25);
  CHECK(l2.balance == doctest::Approx(0.15).epsilon(1e-12));

  // ledger identity: balance = initial + sum(residual - resolved)
  double acc = l2.initial_balance;
  for (const auto& e : l2.entries) acc += e.residual - e.resolved;
  CHECK(acc == doctest::Approx(l2.balance).epsilon(1e-12));
}

TEST_CASE("winner-pays-bid balance updates") {
  BalanceLedger ledger{0.5, 0.5, 0.5, {}};
  update_balance_wpb(ledger, 1, 0.4, 0.9, /*realized=*/0, 0.4);
  CHECK(ledger.balance == doctest::Approx(0.5));  // no allocation, no change

  // correct dashboard, allocated: resolved amount within [B eta, B]
  const MonotoneRule ealloc = identity_rule().clamped_support(0.5);
  const double v = 0.7;
  const double s_plain = bid_strategy(ealloc, v, PaymentFormat::WinnerPaysBid);
  const double bid = s_plain + 0.5 * 0.5 / ealloc.eval(v);
  update_balance_wpb(ledger, 2, s_plain, bid, 1, s_plain);
  const double resolved = ledger.entries.back().resolved;
  CHECK(resolved >= 0.5 * 0.5 - 1e-12);
  CHECK(resolved <= 0.5 + 1e-12);

  // adversarial: +v residual every win still stays within v / eta
  BalanceLedger adv{0.0, 0.5, 0.0, {}};
  const double vbar = 0.8;
  for (int s = 0; s < 200; ++s) {
    const double resolve = adv.balance * adv.rate;  // dashboard support = eta exactly
    update_balance_wpb(adv, s + 1, vbar, 0.0 + resolve, 1, 0.0);
    CHECK(std::abs(adv.balance) <= vbar / adv.rate + 1e-9);
  }
}

TEST_CASE("all-pay rebalancing keeps |B| below vmax at full rate") {
  Rng rng(23);
  const double vmax = 1.0;
  for (int rep = 0; rep < 5; ++rep) {
    BalanceLedger ledger{0.0, 1.0, 0.0, {}};
    Rng run = rng.substream(0xaa, rep);
    for (int s = 1; s <= 400; ++s) {
      Rng stage = run.substream(0x77, static_cast<std::uint64_t>(s));
      const MonotoneRule valloc = random_rule(stage, vmax, 65);
      const MonotoneRule ealloc = random_rule(stage, vmax, 65);
      const double v = vmax * stage.uniform();
      const double s_plain = bid_strategy(ealloc, v, PaymentFormat::AllPay);
      const double bid = s_plain + ledger.balance;  // eta = 1
      const double s_real = bid_strategy(valloc, v, PaymentFormat::AllPay);
      update_balance_allpay(ledger, s, s_real, bid, s_plain);
      CHECK(std::abs(ledger.balance) <= vmax);
    }
  }
}

TEST_CASE("winner-pays-bid rebalancing keeps |B| below vmax / eta") {
  Rng rng(29);
  const double eta = 0.2;
  for (int rep = 0; rep < 3; ++rep) {
    Rng run = rng.substream(0xbb, rep);
    CHECK(worst_abs_balance_wpb(run, 500, eta, /*ir=*/false) <= 1.0 / eta);
  }
}

TEST_CASE("ir splice keeps the same bound with zero transfer") {
  Rng rng(31);
  const double eta = 0.2;
  for (int rep = 0; rep < 3; ++rep) {
    Rng run = rng.substream(0xcc, rep);
    double low_violation = 0.0;
    CHECK(worst_abs_balance_wpb(run, 500, eta, /*ir=*/true, &low_violation) <= 1.0 / eta);
    CHECK(low_violation <= 0.0);
  }
}

TEST_CASE("static environments decay the balance geometrically") {
  // static inferred value and rule: residual only in stage 1, then each
  // allocated stage resolves at least an eta fraction
  const MonotoneRule valloc = identity_rule().clamped_support(0.3);
  const MonotoneRule wrong = power_rule(2.0, 1.0).clamped_support(0.3);
  const double eta = 0.3, v = 0.8;
  BalanceLedger ledger{0.0, eta, 0.0, {}};
  // stage 1: wrong dashboard
  const double s_plain1 = bid_strategy(wrong, v, PaymentFormat::WinnerPaysBid);
  const double s_real = bid_strategy(valloc, v, PaymentFormat::WinnerPaysBid);
  update_balance_wpb(ledger, 1, s_real, s_plain1, 1, s_plain1);
  const double b1 = std::abs(ledger.balance);
  CHECK(b1 <= v);
  int wins = 0;
  Rng rng(37);
  for (int s = 2; s <= 40; ++s) {
    const double s_plain = bid_strategy(valloc, v, PaymentFormat::WinnerPaysBid);
    const double bid = s_plain + ledger.balance * eta / valloc.eval(v);
    const int realized = rng.uniform() < valloc.eval(v) ? 1 : 0;
    wins += realized;
    update_balance_wpb(ledger, s, s_real, bid, realized, s_plain);
    CHECK(std::abs(ledger.balance) <= b1 * std::pow(1.0 - eta, wins) + 1e-12);
  }
}
