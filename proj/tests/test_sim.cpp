#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <random>

#include "commutant/conditions.hpp"
#include "commutant/simulate.hpp"
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

std::pair<double, double> eigenvalues(const Mat2& m) {
  double tr = m.m[0][0] + m.m[1][1];
  double disc = std::sqrt(tr * tr - 4.0 * m.det());
  return {(tr - disc) / 2.0, (tr + disc) / 2.0};
}

double max_abs(const std::vector<double>& v) {
  double m = 0.0;
  for (double x : v) m = std::max(m, std::abs(x));
  return m;
}

}  // namespace

TEST_CASE("companion form and dwell-mode eigenvalues") {
  LtvSystem sw = switched_example();
  StateSpace unstable = to_state_space(sw, 0.5);
  CHECK(unstable.a.m[0][0] == 0.0);
  CHECK(unstable.a.m[0][1] == 1.0);
  CHECK(unstable.a.m[1][0] == 2.0);
  CHECK(unstable.a.m[1][1] == 1.0);
  auto [l1, l2] = eigenvalues(unstable.a);
  CHECK(l1 == Catch::Approx(-1.0));
  CHECK(l2 == Catch::Approx(2.0));

  StateSpace stable = to_state_space(sw, 2.0);
  auto [s1, s2] = eigenvalues(stable.a);
  CHECK(s1 == Catch::Approx(-6.0));
  CHECK(s2 == Catch::Approx(-3.0));

  LtvSystem dint = LtvSystem::second_order(PiecewiseCoefficient(Expr::constant(1.0)),
                                           PiecewiseCoefficient(Expr::constant(0.0)),
                                           PiecewiseCoefficient(Expr::constant(0.0)));
  StateSpace di = to_state_space(dint, 0.0);
  CHECK(di.a.m[1][0] == 0.0);
  CHECK(di.a.m[1][1] == 0.0);
  CHECK(di.b.y == 1.0);

  LtvSystem first = LtvSystem::first_order(PiecewiseCoefficient(Expr::constant(2.0)),
                                           PiecewiseCoefficient(Expr::constant(4.0)));
  StateSpace f = to_state_space(first, 0.0);
  CHECK(f.a11 == -2.0);
  CHECK(f.b11 == 0.5);

  StateSpace g = to_state_space(LtvSystem::scalar_gain(2.0), 0.0);
  CHECK(g.gain == 0.5);
}

TEST_CASE("zero input and zero state stay identically zero") {
  LtvSystem a = switched_example();
  LtvSystem b = synth_second_order(a, {1.0, -2.0, 4.0});
  Trajectory tr = simulate_cascade(a, b, InputSignal::zero(), {0.0, 0.0, 0.0}, {0.0, 0.0, 0.0}, 0.0, 6.0, 1e-2);
  CHECK(max_abs(tr.output) == 0.0);
  CHECK(max_abs(tr.intermediate) == 0.0);
}

TEST_CASE("double integrator with unit velocity is exact") {
  LtvSystem dint = LtvSystem::second_order(PiecewiseCoefficient(Expr::constant(1.0)),
                                           PiecewiseCoefficient(Expr::constant(0.0)),
                                           PiecewiseCoefficient(Expr::constant(0.0)));
  Trajectory tr = simulate_single(dint, InputSignal::zero(), {0.0, 0.0, 1.0}, 0.0, 2.0, 1e-2);
  for (std::size_t i = 0; i < tr.time.size(); ++i)
    CHECK(std::abs(tr.output[i] - tr.time[i]) <= 1e-10);
}

TEST_CASE("scalar stage is an algebraic gain") {
  Trajectory tr = simulate_single(LtvSystem::scalar_gain(2.0), InputSignal::sine(2.0, 1.0), {0.0, 0.0, 0.0},
                                  0.0, 1.0, 1e-3);
  for (std::size_t i = 0; i < tr.time.size(); ++i) {
    double expect = std::sin(2.0 * std::numbers::pi * tr.time[i]);
    CHECK(tr.output[i] == Catch::Approx(expect).margin(1e-12));
  }
}

TEST_CASE("single switched system stays finite under stabilizing switching") {
  Trajectory tr = simulate_single(switched_example(), InputSignal::zero(), {0.0, 0.6, 1.5}, 0.0, 6.0, 1e-3);
  CHECK_FALSE(tr.truncated);
  for (double v : tr.output) CHECK(std::isfinite(v));
}

TEST_CASE("every breakpoint is a grid point, bitwise") {
  LtvSystem a = switched_example();
  LtvSystem b = synth_second_order(a, {1.0, -2.0, 4.0});
  // a step that does not divide the dwell lengths
  Trajectory tr = simulate_cascade(a, b, InputSignal::sine(-10.0, 0.5), {0.0, 0.0, 0.0}, {0.0, 0.0, 0.0},
                                   0.0, 6.0, 7e-4);
  for (double bp : {1.0, 3.0, 4.5}) {
    bool found = false;
    for (double t : tr.time) found = found || t == bp;
    CHECK(found);
  }
  for (std::size_t i = 1; i < tr.time.size(); ++i) CHECK(tr.time[i] > tr.time[i - 1]);
}

TEST_CASE("both orderings share one grid") {
  LtvSystem a = switched_example();
  LtvSystem b = synth_second_order(a, {1.0, -2.0, 4.0});
  Trajectory ab = simulate_cascade(a, b, InputSignal::zero(), {0, 0.6, 1.5}, {0, 0.6, 1.5}, 0.0, 6.0, 1e-3);
  Trajectory ba = simulate_cascade(b, a, InputSignal::zero(), {0, 0.6, 1.5}, {0, 0.6, 1.5}, 0.0, 6.0, 1e-3);
  REQUIRE(ab.time.size() == ba.time.size());
  for (std::size_t i = 0; i < ab.time.size(); ++i) CHECK(ab.time[i] == ba.time[i]);
}

TEST_CASE("superposition holds for the cascades") {
  LtvSystem a = switched_example();
  LtvSystem b = synth_second_order(a, {1.0, -2.0, 4.0});
  SuperpositionReport rep = superposition_check(a, b, InputSignal::sine(-10.0, 0.5), {0.0, 0.6, 1.5},
                                                {0.0, 0.6, 1.5}, 0.0, 6.0, 1e-3);
  CHECK(rep.ok);

  LtvSystem sa = smooth_example();
  LtvSystem sb = synth_second_order(sa, {2.0, std::sqrt(2.0), 0.5});
  SuperpositionReport rep2 = superposition_check(sa, sb, InputSignal::sine(40.0, 2.0), {1.0, 1.0, -3.0},
                                                 {1.0, 1.0, -3.0}, 1.0, 5.0, 1e-3);
  CHECK(rep2.ok);

  SuperpositionReport trivial = superposition_check(a, b, InputSignal::zero(), {0.0, 0.0, 0.0},
                                                    {0.0, 0.0, 0.0}, 0.0, 6.0, 1e-2);
  CHECK(trivial.max_deviation == 0.0);
}

TEST_CASE("RK4 deviations shrink at fourth order") {
  LtvSystem a = smooth_example();
  LtvSystem b = synth_second_order(a, {2.0, std::sqrt(2.0), 0.5});
  InputSignal u = InputSignal::sine(40.0, 2.0);
  InitialState ic{1.0, 1.0, -3.0};
  std::vector<Trajectory> runs;
  for (double h : {1e-2, 5e-3, 2.5e-3, 1.25e-3})
    runs.push_back(simulate_cascade(a, b, u, ic, ic, 1.0, 5.0, h));
  std::vector<double> errs;
  for (std::size_t r = 0; r + 1 < runs.size(); ++r) {
    double e = 0.0;
    // coarse times are every second fine time, bitwise
    for (std::size_t i = 0; i < runs[r].time.size(); ++i) {
      REQUIRE(runs[r].time[i] == runs[r + 1].time[2 * i]);
      e = std::max(e, std::abs(runs[r].output[i] - runs[r + 1].output[2 * i]));
    }
    errs.push_back(e);
  }
  CHECK(errs[0] / errs[1] >= 12.0);
  CHECK(errs[1] / errs[2] >= 12.0);
}

TEST_CASE("mixed-order cascades run in both orders") {
  LtvSystem a = LtvSystem::second_order(PiecewiseCoefficient(Expr::constant(1.0)),
                                        PiecewiseCoefficient(Expr::constant(-1.0)),
                                        PiecewiseCoefficient(Expr::constant(-2.0)));
  double k0 = 1.0 + std::sqrt(3.25);
  LtvSystem b = synth_first_order(a, 1.0, k0);
  double slope = 0.5 - std::sqrt(3.25);
  InitialState ya{0.0, 1.0, slope};
  InitialState yb{0.0, 1.0, 0.0};
  Trajectory ab = simulate_cascade(a, b, InputSignal::zero(), ya, yb, 0.0, 2.0, 1e-3);
  Trajectory ba = simulate_cascade(b, a, InputSignal::zero(), yb, ya, 0.0, 2.0, 1e-3);
  double dev = 0.0, maxy = 0.0;
  for (std::size_t i = 0; i < ab.output.size(); ++i) {
    dev = std::max(dev, std::abs(ab.output[i] - ba.output[i]));
    maxy = std::max({maxy, std::abs(ab.output[i]), std::abs(ba.output[i])});
  }
  // the pair satisfies the first-order-partner conditions on this ray
  CHECK(dev <= 1e-5 * (1.0 + maxy));
}

TEST_CASE("window and domain validation") {
  LtvSystem a = smooth_example();
  LtvSystem b = synth_second_order(a, {2.0, std::sqrt(2.0), 0.5});
  CHECK_THROWS_AS(simulate_cascade(a, b, InputSignal::zero(), {0, 0, 0}, {0, 0, 0}, 0.0, 1.0, 1e-3),
                  ValidationError);  // t0 below the validity domain
  CHECK_THROWS_AS(simulate_single(a, InputSignal::zero(), {1, 0, 0}, 1.0, 1.0, 1e-3), std::invalid_argument);
  CHECK_THROWS_AS(simulate_single(a, InputSignal::zero(), {1, 0, 0}, 1.0, 2.0, -1.0), std::invalid_argument);

  SwitchingSignal narrow({{0.0, 1.0, 0.0}});
  LtvSystem short_sys = LtvSystem::second_order(PiecewiseCoefficient(Expr::constant(1.0)),
                                                apply_switching(0.0, 1.0, narrow),
                                                PiecewiseCoefficient(Expr::constant(0.0)), 0.0);
  CHECK_THROWS_AS(simulate_single(short_sys, InputSignal::zero(), {0, 0, 0}, 0.0, 2.0, 1e-2),
                  ValidationError);  // coefficients end before t_end
}

TEST_CASE("leading coefficient vanishing mid-horizon is an error") {
  LtvSystem bad = LtvSystem::second_order(PiecewiseCoefficient(parse_expression("1-t")),
                                          PiecewiseCoefficient(Expr::constant(0.0)),
                                          PiecewiseCoefficient(Expr::constant(0.0)));
  CHECK_THROWS_AS(simulate_single(bad, InputSignal::zero(), {0.0, 1.0, 0.0}, 0.0, 2.0, 0.25), DomainError);
}

TEST_CASE("overflowing dynamics truncate with a diagnostic") {
  // y'' = 100 y blows up around t ~ 8 at double range
  LtvSystem boom = LtvSystem::second_order(PiecewiseCoefficient(Expr::constant(1.0)),
                                           PiecewiseCoefficient(Expr::constant(0.0)),
                                           PiecewiseCoefficient(Expr::constant(-10000.0)));
  Trajectory tr = simulate_single(boom, InputSignal::zero(), {0.0, 1.0, 0.0}, 0.0, 10.0, 1e-2);
  CHECK(tr.truncated);
  CHECK_FALSE(tr.diagnostic.empty());
  CHECK(tr.time.size() == tr.output.size());
  CHECK(tr.time.size() < 1001);
}

TEST_CASE("trajectory CSV format") {
  Trajectory tr;
  tr.time = {0.0, 0.5};
  tr.output = {1.0, 0.123456789012345};
  tr.intermediate = {0.0, 2.0};
  std::ostringstream os;
  write_csv(tr, os);
  CHECK(os.str() == "t,y_out,y_mid\n0,1,0\n0.5,0.123456789012345,2\n");
}

TEST_CASE("randomized synthesized pairs commute in simulation") {
  // systems with constant Gamma by construction, constants chosen so the
  // determinant condition holds, initial conditions on the admissible ray
  std::mt19937 rng(987654);
  std::uniform_real_distribution<double> c(0.2, 1.5);
  std::uniform_real_distribution<double> g(-2.0, 0.5);
  std::uniform_real_distribution<double> ks(0.3, 1.5);
  int done = 0;
  while (done < 8) {
    Expr t = Expr::time();
    Expr a2e = Expr::constant(c(rng)) + Expr::constant(c(rng)) * t * t;
    Expr a1e = Expr::constant(2.0 * c(rng) - 1.5) + Expr::constant(c(rng)) * t +
               Expr::constant(0.3 * c(rng)) * sin(t);
    Expr f = Expr::constant(0.25) * (Expr::constant(2.0) * a1e - a2e.derivative()) / sqrt(a2e);
    double a0c = g(rng);
    Expr a0e = Expr::constant(a0c) + f * f + sqrt(a2e) * f.derivative();
    LtvSystem a = LtvSystem::second_order(PiecewiseCoefficient(a2e), PiecewiseCoefficient(a1e),
                                          PiecewiseCoefficient(a0e));
    double k1 = ks(rng), k2 = ks(rng);
    double k0 = 1.0 - k2 + k1 * std::sqrt(1.0 - a0c);
    CommutativityConstants k{k2, k1, k0};
    double t0 = 0.5;
    LtvSystem b = synth_second_order(a, k);
    double slope = required_ic_ray(a, k, t0).slope;

    InitialState ya{t0, 1.0, slope};
    Trajectory ab = simulate_cascade(a, b, InputSignal::sine(5.0, 1.0), ya, ya, t0, t0 + 2.0, 1e-3);
    Trajectory ba = simulate_cascade(b, a, InputSignal::sine(5.0, 1.0), ya, ya, t0, t0 + 2.0, 1e-3);
    double dev = 0.0, maxy = 0.0;
    for (std::size_t i = 0; i < ab.output.size(); ++i) {
      dev = std::max(dev, std::abs(ab.output[i] - ba.output[i]));
      maxy = std::max({maxy, std::abs(ab.output[i]), std::abs(ba.output[i])});
    }
    INFO("case " << done << ": A0 = " << a0c << ", k = (" << k2 << ", " << k1 << ", " << k0 << ")");
    CHECK(dev <= 1e-5 * (1.0 + maxy));
    ++done;
  }
}

TEST_CASE("identical runs produce byte-identical CSVs") {
  LtvSystem a = switched_example();
  LtvSystem b = synth_second_order(a, {1.0, -2.0, 4.0});
  std::string csv[2];
  for (auto& out : csv) {
    Trajectory tr = simulate_cascade(a, b, InputSignal::sine(-10.0, 0.5), {0, 0.6, 1.5}, {0, 0.6, 1.5},
                                     0.0, 6.0, 1e-3);
    std::ostringstream os;
    write_csv(tr, os);
    out = os.str();
  }
  CHECK(csv[0] == csv[1]);
}
