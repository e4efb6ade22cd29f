#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "commutant/metrics.hpp"

using namespace commutant;

namespace {

Trajectory ramp_pair(std::size_t n, double h, double (*f)(double)) {
  Trajectory tr;
  tr.step = h;
  for (std::size_t i = 0; i < n; ++i) {
    double t = static_cast<double>(i) * h;
    tr.time.push_back(t);
    tr.output.push_back(f(t));
    tr.intermediate.push_back(0.0);
  }
  return tr;
}

}  // namespace

TEST_CASE("identical trajectories") {
  Trajectory a = ramp_pair(100, 0.1, [](double t) { return std::sin(t); });
  DeviationSummary d = deviation(a, a, 1e-5);
  CHECK(d.max_abs == 0.0);
  CHECK(d.l2 == 0.0);
  CHECK_FALSE(d.onset_time.has_value());
}

TEST_CASE("onset detection with debounce") {
  auto base = [](double) { return 0.0; };
  Trajectory a = ramp_pair(200, 0.1, base);
  Trajectory b = ramp_pair(200, 0.1, base);

  SECTION("sustained departure is found at its first sample") {
    for (std::size_t i = 100; i < 200; ++i) b.output[i] = 0.5 * (b.time[i] - b.time[100]) + 0.01;
    DeviationSummary d = deviation(a, b, 1e-3, 1e-3);
    REQUIRE(d.onset_time.has_value());
    CHECK(*d.onset_time == Catch::Approx(10.0));
    CHECK(d.max_abs > 1e-3);
  }

  SECTION("an isolated spike does not trigger onset") {
    b.output[50] = 1.0;
    DeviationSummary d = deviation(a, b, 1e-3, 1e-3);
    CHECK_FALSE(d.onset_time.has_value());
    CHECK(d.max_abs == 1.0);
  }

  SECTION("nine consecutive samples are not enough, ten are") {
    for (std::size_t i = 50; i < 59; ++i) b.output[i] = 1.0;
    CHECK_FALSE(deviation(a, b, 1e-3, 1e-3).onset_time.has_value());
    b.output[59] = 1.0;
    auto d = deviation(a, b, 1e-3, 1e-3);
    REQUIRE(d.onset_time.has_value());
    CHECK(*d.onset_time == Catch::Approx(5.0));
  }
}

TEST_CASE("deviation is symmetric") {
  Trajectory a = ramp_pair(64, 0.25, [](double t) { return std::sin(t); });
  Trajectory b = ramp_pair(64, 0.25, [](double t) { return std::sin(t) + 0.1 * t; });
  DeviationSummary ab = deviation(a, b, 1e-2);
  DeviationSummary ba = deviation(b, a, 1e-2);
  CHECK(ab.max_abs == ba.max_abs);
  CHECK(ab.l2 == ba.l2);
  CHECK(ab.onset_time == ba.onset_time);
}

TEST_CASE("l2 is step-weighted") {
  // constant difference of 1 over [0, 1] integrates to 1
  Trajectory a = ramp_pair(101, 0.01, [](double) { return 0.0; });
  Trajectory b = ramp_pair(101, 0.01, [](double) { return 1.0; });
  DeviationSummary d = deviation(a, b, 1e-3);
  CHECK(d.l2 == Catch::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("grid mismatch is rejected") {
  Trajectory a = ramp_pair(10, 0.1, [](double) { return 0.0; });
  Trajectory b = ramp_pair(11, 0.1, [](double) { return 0.0; });
  CHECK_THROWS_AS(deviation(a, b, 1e-3), std::invalid_argument);
  Trajectory c = ramp_pair(10, 0.11, [](double) { return 0.0; });
  CHECK_THROWS_AS(deviation(a, c, 1e-3), std::invalid_argument);
}

TEST_CASE("default onset threshold is two orders below the equality threshold") {
  Trajectory a = ramp_pair(32, 0.1, [](double) { return 0.0; });
  DeviationSummary d = deviation(a, a, 1e-4);
  CHECK(d.threshold == 1e-4);
  CHECK(d.onset_threshold == Catch::Approx(1e-6));
}

TEST_CASE("assessment rules") {
  DeviationSummary quiet;
  quiet.max_abs = 1e-7;
  quiet.threshold = 1e-5;

  DeviationSummary loud;
  loud.max_abs = 2.0;
  loud.threshold = 1e-5;
  loud.onset_time = 1.001;

  SECTION("commutative expectation") {
    CHECK(assess({Verdict::commutative, {}}, quiet, 1e-3).agrees);
    CHECK_FALSE(assess({Verdict::commutative, {}}, loud, 1e-3).agrees);
  }
  SECTION("divergence-onset expectation") {
    CHECK(assess({Verdict::commutative_until, 1.0}, loud, 1e-3).agrees);
    CHECK_FALSE(assess({Verdict::commutative_until, 1.0}, quiet, 1e-3).agrees);
    DeviationSummary late = loud;
    late.onset_time = 1.5;
    CHECK_FALSE(assess({Verdict::commutative_until, 1.0}, late, 1e-3).agrees);
  }
  SECTION("non-commutative expectation") {
    CHECK(assess({Verdict::not_commutative, {}}, loud, 1e-3).agrees);
    CHECK_FALSE(assess({Verdict::not_commutative, {}}, quiet, 1e-3).agrees);
  }
}
