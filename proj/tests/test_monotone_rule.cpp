#include "doctest.h"

#include <cmath>
#include <vector>

#include "dashmech/monotone_rule.hpp"
#include "dashmech/rng.hpp"

#include "test_support.hpp"

using namespace dashmech;
using dashmech::testing::identity_rule;
using dashmech::testing::random_rule;

namespace {

MonotoneRule square_rule(std::size_t knots = kGridKnots) {
  return MonotoneRule::sample([](double v) { return v * v; }, 1.0, knots);
}

}  // namespace

TEST_CASE("evaluation interpolates and clamps") {
  const MonotoneRule id = identity_rule();
  CHECK(id.eval(0.5) == doctest::Approx(0.5).epsilon(1e-12));
  CHECK(id.eval(0.0) == doctest::Approx(id.knot_probs().front()));

  const MonotoneRule r =
      MonotoneRule::from_knots({0.0, 1.0, 2.0}, {0.0, 0.2, 1.0}, 2.0);
  CHECK(r.eval(1.5) == doctest::Approx(0.6).epsilon(1e-12));  // hand interpolation
  CHECK(r.eval(5.0) == doctest::Approx(1.0));                 // constant extension
  CHECK_THROWS_AS((void)r.eval(-0.1), std::domain_error);
}

TEST_CASE("cumulative is the exact segment integral") {
  const MonotoneRule id = identity_rule();
  CHECK(id.cumulative(1.0) == doctest::Approx(0.5).epsilon(1e-12));
  CHECK(id.cumulative(0.0) == 0.0);

  // int_0^1 v^2 dv = 1/3 up to the knot-grid interpolation error
  const MonotoneRule sq = square_rule();
  CHECK(sq.cumulative(1.0) == doctest::Approx(1.0 / 3.0).epsilon(1e-6));
  CHECK_THROWS_AS((void)sq.cumulative(1.5), std::domain_error);
  CHECK_THROWS_AS((void)sq.cumulative(-0.5), std::domain_error);
}

TEST_CASE("truthful payment follows the payment identity") {
  const MonotoneRule id = identity_rule();
  CHECK(id.truthful_payment(0.5) == doctest::Approx(0.125).epsilon(1e-9));
  CHECK(id.truthful_payment(0.0) == doctest::Approx(0.0));
  CHECK(id.truthful_payment(0.5, 0.2) == doctest::Approx(0.325).epsilon(1e-9));
}

TEST_CASE("construction rejects malformed knots") {
  CHECK_THROWS_AS(MonotoneRule::from_knots({0.0, 1.0}, {0.5, 0.4}, 1.0),
                  std::invalid_argument);  // decreasing probs
  CHECK_THROWS_AS(MonotoneRule::from_knots({0.1, 1.0}, {0.0, 1.0}, 1.0),
                  std::invalid_argument);  // first knot not at 0
  CHECK_THROWS_AS(MonotoneRule::from_knots({0.0, 0.0}, {0.0, 1.0}, 1.0),
                  std::invalid_argument);  // values not increasing
  CHECK_THROWS_AS(MonotoneRule::from_knots({0.0, 1.0}, {0.0, 1.5}, 1.0),
                  std::invalid_argument);  // prob above 1
}

TEST_CASE("strictness gate and the relaxed escape hatch") {
  CHECK_THROWS_AS(MonotoneRule::from_knots({0.0, 0.5, 1.0}, {0.2, 0.2, 0.8}, 1.0),
                  std::invalid_argument);
  const MonotoneRule flat =
      MonotoneRule::from_knots({0.0, 0.5, 1.0}, {0.2, 0.2, 0.8}, 1.0, /*relaxed=*/true);
  CHECK_FALSE(flat.strict());
  CHECK(identity_rule().strict());
}

TEST_CASE("scaling") {
  const MonotoneRule id = identity_rule();
  const MonotoneRule same = id.scaled(1.0);
  for (std::size_t i = 0; i < id.knot_count(); ++i)
    CHECK(same.knot_probs()[i] == id.knot_probs()[i]);
  const MonotoneRule half = id.scaled(0.5);
  CHECK(half.eval(1.0) == doctest::Approx(0.5));
  CHECK(half.strict());
  CHECK_THROWS_AS((void)id.scaled(1.5), std::domain_error);
}

TEST_CASE("support clamp maps the range into [floor, 1]") {
  const MonotoneRule id = identity_rule();
  const MonotoneRule clamped = id.clamped_support(0.2);
  CHECK(clamped.eval(0.0) == doctest::Approx(0.2));
  CHECK(clamped.eval(1.0) == doctest::Approx(1.0));
  CHECK(clamped.eval(0.5) == doctest::Approx(0.6));
  CHECK(clamped.strict());
}

TEST_CASE("averaging preserves strictness and is the pointwise mean") {
  const MonotoneRule id = identity_rule(257);
  const MonotoneRule sq = square_rule(257);
  const MonotoneRule rules[] = {id, sq};
  const MonotoneRule mean = MonotoneRule::average({rules, 2});
  CHECK(mean.strict());
  for (double v : {0.25, 0.5, 0.75, 1.0})  // knot-grid points: the mean is exact there
    CHECK(mean.eval(v) == doctest::Approx(0.5 * (v + v * v)).epsilon(1e-12));

  // mean slope is the mean of the segment slopes
  for (std::size_t seg = 0; seg + 1 < mean.knot_count(); ++seg) {
    const double expect = 0.5 * (id.segment_slope(seg) + sq.segment_slope(seg));
    CHECK(mean.segment_slope(seg) == doctest::Approx(expect).epsilon(1e-9));
  }
}

TEST_CASE("averaging identical rules is a fixed point") {
  Rng rng(7);
  const MonotoneRule r = random_rule(rng, 2.0);
  const MonotoneRule rules[] = {r, r, r};
  const MonotoneRule mean = MonotoneRule::average({rules, 3});
  for (std::size_t i = 0; i < r.knot_count(); ++i)
    CHECK(mean.knot_probs()[i] == doctest::Approx(r.knot_probs()[i]).epsilon(1e-15));
}

TEST_CASE("random rules: evaluation and integral against a fine oracle") {
  Rng rng(42);
  for (int rep = 0; rep < 10; ++rep) {
    const double vmax = 0.5 + 2.0 * rng.uniform();
    const MonotoneRule r = random_rule(rng, vmax);
    // Riemann-midpoint oracle on a fine grid, independent of the stored
    // prefix integrals.
    const int n = 20000;
    double acc = 0.0;
    const double v = vmax * (0.3 + 0.6 * rng.uniform());
    for (int i = 0; i < n; ++i) acc += r.eval(v * (i + 0.5) / n) * (v / n);
    CHECK(r.cumulative(v) == doctest::Approx(acc).epsilon(1e-6));
    double prev = -1.0;
    for (int i = 0; i <= 100; ++i) {
      const double x = r.eval(vmax * i / 100.0);
      CHECK(x >= prev);
      prev = x;
    }
  }
}

TEST_CASE("win region start") {
  const MonotoneRule r =
      MonotoneRule::from_knots({0.0, 0.5, 1.0}, {0.0, 0.4, 1.0}, 1.0, true);
  CHECK(r.win_region_start() == doctest::Approx(0.5));
}
