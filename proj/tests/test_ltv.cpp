#include <catch2/catch_amalgamated.hpp>

#include <random>

#include "commutant/ltv.hpp"

using namespace commutant;

namespace {

// The switching signal of the switched example: 0 on [0,1) u [3,4.5),
// 10 on [1,3) u [4.5,inf).
SwitchingSignal stabilizing_signal() {
  return SwitchingSignal({{0.0, 1.0, 0.0}, {1.0, 3.0, 10.0}, {3.0, 4.5, 0.0}, {4.5, kInf, 10.0}});
}

LtvSystem switched_system() {
  SwitchingSignal sig = stabilizing_signal();
  return LtvSystem::second_order(PiecewiseCoefficient(Expr::constant(1.0)),
                                 apply_switching(-1.0, 1.0, sig), apply_switching(-2.0, 2.0, sig), 0.0);
}

}  // namespace

TEST_CASE("coefficient lookup at and between switching instants") {
  SwitchingSignal sig = stabilizing_signal();
  PiecewiseCoefficient a1 = apply_switching(-1.0, 1.0, sig);
  CHECK(coefficient_at(a1, 0.5, 0, Side::right) == -1.0);
  CHECK(coefficient_at(a1, 1.0, 0, Side::right) == 9.0);
  CHECK(coefficient_at(a1, 1.0, 0, Side::left) == -1.0);
  CHECK(coefficient_at(a1, 1.0, 1, Side::right) == 0.0);  // piece derivative only

  PiecewiseCoefficient c(parse_expression("3"));
  CHECK(coefficient_at(c, 2.0, 1, Side::right) == 0.0);
  CHECK_THROWS_AS(coefficient_at(a1, -0.5, 0, Side::right), DomainError);
}

TEST_CASE("apply_switching reproduces base + gain*level exactly") {
  SwitchingSignal sig = stabilizing_signal();
  PiecewiseCoefficient a1 = apply_switching(-1.0, 1.0, sig);
  PiecewiseCoefficient a0 = apply_switching(-2.0, 2.0, sig);
  struct Probe {
    double t, a1v, a0v;
  };
  for (auto [t, v1, v0] : {Probe{0.2, -1.0, -2.0}, Probe{1.7, 9.0, 18.0}, Probe{3.9, -1.0, -2.0},
                           Probe{5.5, 9.0, 18.0}}) {
    CHECK(a1.value(t) == v1);
    CHECK(a0.value(t) == v0);
  }
  PiecewiseCoefficient flat = apply_switching(-1.0, 0.0, sig);
  CHECK(flat.smooth());
  CHECK(flat.value(100.0) == -1.0);
}

TEST_CASE("system breakpoints inside a window") {
  LtvSystem sw = switched_system();
  CHECK(breakpoints(sw, {0.0, 6.0}) == std::vector<double>{1.0, 3.0, 4.5});
  CHECK(breakpoints(sw, {0.0, 4.0}) == std::vector<double>{1.0, 3.0});
  CHECK(breakpoints(sw, {1.0, 3.0}).empty());  // strictly inside only

  LtvSystem smooth = LtvSystem::second_order(PiecewiseCoefficient(parse_expression("0.5*t^2")),
                                             PiecewiseCoefficient(parse_expression("t+1")),
                                             PiecewiseCoefficient(parse_expression("1/(2*t^2)")), 0.1);
  CHECK(breakpoints(smooth, {1.0, 5.0}).empty());

  SwitchingSignal step({{0.0, 1.0, 0.0}, {1.0, kInf, 3.0}});
  LtvSystem third = LtvSystem::second_order(PiecewiseCoefficient(Expr::constant(1.0)),
                                            apply_switching(-1.0, 3.0, step),
                                            apply_switching(-1.0, 6.0, step), 0.0);
  CHECK(breakpoints(third, {0.0, 4.0}) == std::vector<double>{1.0});
}

TEST_CASE("left and right evaluation agree away from breakpoints") {
  LtvSystem sw = switched_system();
  std::mt19937 rng(3);
  std::uniform_real_distribution<double> ts(0.01, 6.0);
  auto bps = sw.breakpoints(0.0, 6.0);
  for (int i = 0; i < 300; ++i) {
    double t = ts(rng);
    bool on_bp = false;
    for (double b : bps) on_bp = on_bp || t == b;
    if (on_bp) continue;
    for (int p = 0; p <= 2; ++p)
      CHECK(sw.coeff(p).value(t, Side::left) == sw.coeff(p).value(t, Side::right));
  }
  CHECK(sw.coeff(1).value(3.0, Side::left) != sw.coeff(1).value(3.0, Side::right));
}

TEST_CASE("piecewise validation") {
  CHECK_THROWS_AS(PiecewiseCoefficient(std::vector<CoefficientPiece>{}), ValidationError);
  CHECK_THROWS_AS(PiecewiseCoefficient({{0.0, 1.0, Expr::constant(1)}, {2.0, 3.0, Expr::constant(2)}}),
                  ValidationError);
  CHECK_THROWS_AS(PiecewiseCoefficient({{1.0, 1.0, Expr::constant(1)}}), ValidationError);
  CHECK_THROWS_AS(SwitchingSignal({{0.0, 1.0, 0.0}, {1.5, 2.0, 1.0}}), ValidationError);
}

TEST_CASE("leading coefficient checks") {
  LtvSystem bad = LtvSystem::second_order(PiecewiseCoefficient(parse_expression("t")),
                                          PiecewiseCoefficient(Expr::constant(0.0)),
                                          PiecewiseCoefficient(Expr::constant(0.0)));
  CHECK_THROWS_AS(bad.require_leading_nonzero(-1.0, 1.0), ValidationError);
  CHECK_NOTHROW(bad.require_leading_nonzero(0.5, 1.0));
  CHECK_THROWS_AS(bad.require_leading_nonzero(-2.0, -1.0, /*positive=*/true), ValidationError);

  LtvSystem sw = switched_system();
  CHECK_NOTHROW(sw.require_leading_nonzero(0.0, 6.0, /*positive=*/true));
}

TEST_CASE("constants select the partner order") {
  CHECK(CommutativityConstants{2.0, 1.0, 0.5}.partner_order() == 2);
  CHECK(CommutativityConstants{0.0, 1.0, 0.5}.partner_order() == 1);
  CHECK(CommutativityConstants{0.0, 0.0, 2.0}.partner_order() == 0);
}
