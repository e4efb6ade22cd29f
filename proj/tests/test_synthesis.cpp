#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <random>

#include "commutant/synthesis.hpp"

using namespace commutant;

namespace {

LtvSystem smooth_example() {
  return LtvSystem::second_order(PiecewiseCoefficient(parse_expression("0.5*t^2")),
                                 PiecewiseCoefficient(parse_expression("t+1")),
                                 PiecewiseCoefficient(parse_expression("1/(2*t^2)")), 0.1);
}

LtvSystem switched_example() {
  SwitchingSignal sig({{0.0, 1.0, 0.0}, {1.0, 3.0, 10.0}, {3.0, 4.5, 0.0}, {4.5, kInf, 10.0}});
  return LtvSystem::second_order(PiecewiseCoefficient(Expr::constant(1.0)),
                                 apply_switching(-1.0, 1.0, sig), apply_switching(-2.0, 2.0, sig), 0.0);
}

void check_pointwise(const PiecewiseCoefficient& lhs, const Expr& target, double lo, double hi,
                     double rel = 1e-12) {
  for (int i = 0; i <= 512; ++i) {
    double t = lo + (hi - lo) * i / 512.0;
    double a = lhs.value(t);
    double b = target.evaluate(t);
    CHECK(std::abs(a - b) <= rel * (1.0 + std::abs(b)));
  }
}

}  // namespace

TEST_CASE("f_A of the smooth example") {
  LtvSystem a = smooth_example();
  CHECK(compute_f_A(a, 1.0) == Catch::Approx(3.0 * std::sqrt(2.0) / 4.0).epsilon(1e-13));
  // hand algebra: f_A = sqrt(2)*(t+2)/(4t)
  for (double t : {0.5, 1.3, 4.0})
    CHECK(compute_f_A(a, t) == Catch::Approx(std::sqrt(2.0) * (t + 2.0) / (4.0 * t)).epsilon(1e-13));
}

TEST_CASE("f_A on switched pieces and trivial systems") {
  LtvSystem sw = switched_example();
  CHECK(compute_f_A(sw, 0.5) == Catch::Approx(-0.5).margin(1e-15));
  CHECK(compute_f_A(sw, 2.0) == Catch::Approx(4.5).margin(1e-15));

  LtvSystem triv = LtvSystem::second_order(PiecewiseCoefficient(Expr::constant(1.0)),
                                           PiecewiseCoefficient(Expr::constant(0.0)),
                                           PiecewiseCoefficient(Expr::constant(0.0)));
  CHECK(compute_f_A(triv, 3.0) == 0.0);
}

TEST_CASE("Gamma values") {
  LtvSystem a = smooth_example();
  for (double t : {0.5, 1.0, 2.0, 5.0}) CHECK(compute_gamma(a, t) == Catch::Approx(-0.125).margin(1e-12));

  LtvSystem sw = switched_example();
  CHECK(compute_gamma(sw, 0.5) == Catch::Approx(-2.25).margin(1e-15));
  CHECK(compute_gamma(sw, 2.0) == Catch::Approx(-2.25).margin(1e-15));

  LtvSystem triv = LtvSystem::second_order(PiecewiseCoefficient(Expr::constant(1.0)),
                                           PiecewiseCoefficient(Expr::constant(0.0)),
                                           PiecewiseCoefficient(Expr::constant(0.0)));
  CHECK(compute_gamma(triv, 1.0) == 0.0);
}

TEST_CASE("Gamma constancy of the smooth example, sampled") {
  LtvSystem a = smooth_example();
  AuxQuantities aux = aux_quantities(a);
  double max_dev = 0.0;
  for (int i = 0; i <= 512; ++i) {
    double t = 0.5 + 4.5 * i / 512.0;
    max_dev = std::max(max_dev, std::abs(aux.gamma.value(t) + 0.125));
  }
  CHECK(max_dev <= 1e-9);
}

TEST_CASE("Gamma equals its defining identity with a finite-difference f_A'") {
  std::mt19937 rng(11);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  for (const LtvSystem& a : {smooth_example(), switched_example()}) {
    AuxQuantities aux = aux_quantities(a);
    for (const auto& piece : aux.f_A.pieces()) {
      double lo = std::max(piece.t_start, 0.6);
      double hi = std::min(piece.t_end, 5.0);
      if (!(lo < hi)) continue;
      for (int i = 0; i < 100; ++i) {
        double h = 1e-6;
        double t = lo + h + (hi - lo - 2 * h) * unit(rng);
        double fd = (piece.expr.evaluate(t + h) - piece.expr.evaluate(t - h)) / (2.0 * h);
        double gamma_fd = a.coeff(0).value(t) - std::pow(aux.f_A.value(t), 2) -
                          std::sqrt(a.coeff(2).value(t)) * fd;
        CHECK(std::abs(aux.gamma.value(t) - gamma_fd) <= 1e-6);
      }
    }
  }
}

TEST_CASE("second-order partner of the smooth example") {
  LtvSystem a = smooth_example();
  LtvSystem b = synth_second_order(a, {2.0, std::sqrt(2.0), 0.5});
  check_pointwise(b.coeff(2), parse_expression("t^2"), 0.5, 5.0);
  check_pointwise(b.coeff(1), parse_expression("3*t+2"), 0.5, 5.0);
  check_pointwise(b.coeff(0), parse_expression("(t^2+t+1)/t^2"), 0.5, 5.0);
}

TEST_CASE("second-order partner of the switched example") {
  LtvSystem b = synth_second_order(switched_example(), {1.0, -2.0, 4.0});
  // b1 = -3 + sigma, b0 = 3 + sigma
  CHECK(b.coeff(2).value(0.5) == 1.0);
  CHECK(b.coeff(1).value(0.5) == Catch::Approx(-3.0).margin(1e-15));
  CHECK(b.coeff(0).value(0.5) == Catch::Approx(3.0).margin(1e-15));
  CHECK(b.coeff(1).value(2.0) == Catch::Approx(7.0).margin(1e-15));
  CHECK(b.coeff(0).value(2.0) == Catch::Approx(13.0).margin(1e-15));
}

TEST_CASE("identity constants give back the system") {
  LtvSystem a = smooth_example();
  LtvSystem b = synth_second_order(a, {1.0, 0.0, 0.0});
  for (double t : {0.5, 1.0, 2.7, 5.0})
    for (int p = 0; p <= 2; ++p) CHECK(b.coeff(p).value(t) == a.coeff(p).value(t));
  CHECK_THROWS_AS(synth_second_order(a, {0.0, 1.0, 0.0}), std::invalid_argument);
}

TEST_CASE("partner coefficients are affine in the constants") {
  std::mt19937 rng(5);
  std::uniform_real_distribution<double> ks(-2.0, 2.0);
  std::uniform_real_distribution<double> ts(0.5, 5.0);
  LtvSystem a = smooth_example();
  for (int i = 0; i < 50; ++i) {
    CommutativityConstants k1{ks(rng), ks(rng), ks(rng)};
    CommutativityConstants k2{ks(rng), ks(rng), ks(rng)};
    CommutativityConstants sum{k1.k2 + k2.k2, k1.k1 + k2.k1, k1.k0 + k2.k0};
    if (k1.k2 == 0.0 || k2.k2 == 0.0 || sum.k2 == 0.0) continue;
    LtvSystem b1 = synth_second_order(a, k1);
    LtvSystem b2 = synth_second_order(a, k2);
    LtvSystem bs = synth_second_order(a, sum);
    double t = ts(rng);
    for (int p = 0; p <= 2; ++p) {
      double lhs = b1.coeff(p).value(t) + b2.coeff(p).value(t);
      double rhs = bs.coeff(p).value(t);
      CHECK(std::abs(lhs - rhs) <= 1e-12 * (1.0 + std::abs(rhs)));
    }
  }
}

TEST_CASE("first-order partner") {
  LtvSystem a = smooth_example();
  LtvSystem b = synth_first_order(a, std::sqrt(2.0), 0.5);
  REQUIRE(b.order() == 1);
  check_pointwise(b.coeff(1), parse_expression("t"), 0.5, 5.0);
  check_pointwise(b.coeff(0), parse_expression("(t+1)/t"), 0.5, 5.0);

  LtvSystem c = synth_first_order(switched_example(), 1.0, 0.0);
  CHECK(c.coeff(1).value(0.5) == 1.0);
  CHECK(c.coeff(0).value(0.5) == Catch::Approx(-0.5).margin(1e-15));

  LtvSystem triv = LtvSystem::second_order(PiecewiseCoefficient(Expr::constant(1.0)),
                                           PiecewiseCoefficient(Expr::constant(0.0)),
                                           PiecewiseCoefficient(Expr::constant(0.0)));
  LtvSystem d = synth_first_order(triv, 1.0, 0.0);
  CHECK(d.coeff(1).value(2.0) == 1.0);
  CHECK(d.coeff(0).value(2.0) == 0.0);
  CHECK_THROWS_AS(synth_first_order(a, 0.0, 1.0), std::invalid_argument);
}

TEST_CASE("scalar partner") {
  LtvSystem id = synth_scalar(1.0);
  CHECK(id.order() == 0);
  CHECK(id.coeff(0).value(3.0) == 1.0);
  CHECK(synth_scalar(2.0).coeff(0).value(0.0) == 2.0);
  CHECK_THROWS_AS(synth_scalar(0.0), std::invalid_argument);
}

TEST_CASE("feedback gains") {
  FeedbackGains g = feedback_gains({1.0, 0.0, 4.0});
  CHECK(g.alpha == 1.0);
  CHECK(g.sigma == 4.0);
  CHECK(g.gain_sum == 5.0);
  CHECK_FALSE(g.sum_is_unity);

  FeedbackGains u = feedback_gains({0.5, 0.0, 0.5});
  CHECK(u.alpha == 2.0);
  CHECK(u.sigma == 0.5);
  CHECK(u.sum_is_unity);

  FeedbackGains i = feedback_gains({1.0, 0.0, 0.0});
  CHECK(i.alpha == 1.0);
  CHECK(i.sigma == 0.0);

  CHECK_THROWS_AS(feedback_gains({1.0, 1.0, 0.0}), std::invalid_argument);
  CHECK_THROWS_AS(feedback_gains({0.0, 0.0, 1.0}), std::invalid_argument);
}

TEST_CASE("constants recovery from an explicit partner") {
  LtvSystem a = smooth_example();
  LtvSystem b = synth_second_order(a, {2.0, std::sqrt(2.0), 0.5});
  auto k = recover_constants(a, b, 0.5, 5.0);
  REQUIRE(k.has_value());
  CHECK(k->k2 == Catch::Approx(2.0).epsilon(1e-12));
  CHECK(k->k1 == Catch::Approx(std::sqrt(2.0)).epsilon(1e-12));
  CHECK(k->k0 == Catch::Approx(0.5).epsilon(1e-12));

  LtvSystem b1 = synth_first_order(a, std::sqrt(2.0), 0.5);
  auto k1 = recover_constants(a, b1, 0.5, 5.0);
  REQUIRE(k1.has_value());
  CHECK(k1->k2 == 0.0);
  CHECK(k1->k1 == Catch::Approx(std::sqrt(2.0)).epsilon(1e-12));

  // not expressible through the synthesis map
  LtvSystem stranger = LtvSystem::second_order(PiecewiseCoefficient(Expr::constant(1.0)),
                                               PiecewiseCoefficient(Expr::constant(0.0)),
                                               PiecewiseCoefficient(parse_expression("t")));
  CHECK_FALSE(recover_constants(a, stranger, 0.5, 5.0).has_value());
}
