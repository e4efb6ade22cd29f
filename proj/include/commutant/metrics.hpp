// Deviation metrics between trajectory pairs and the consolidated scenario
// report tying simulation evidence back to the algebraic verdict.

#pragma once

#include <cmath>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "commutant/conditions.hpp"
#include "commutant/simulate.hpp"

namespace commutant {

struct DeviationSummary {
  double max_abs = 0.0;
  double l2 = 0.0;  // discrete, step-weighted
  std::optional<double> onset_time;
  double threshold = 0.0;        // equality threshold (tol_sim)
  double onset_threshold = 0.0;  // detection threshold used for onset_time
};

/// Compares two runs on the same grid. onset_time is the first instant where
/// |y_a - y_b| exceeds the onset threshold and stays above it for at least 10
/// consecutive samples (RK4 restarts at breakpoints can produce one-sample
/// kinks). The onset threshold defaults to threshold/100: the departure after
/// a spoiling instant grows quadratically from zero, so detection at the
/// equality threshold itself would systematically lag the true onset; /100
/// still sits far above integrator noise.
inline DeviationSummary deviation(const Trajectory& a, const Trajectory& b, double threshold,
                                  std::optional<double> onset_threshold = std::nullopt) {
  if (a.time.size() != b.time.size()) throw std::invalid_argument("trajectory grids differ in size");
  for (std::size_t i = 0; i < a.time.size(); ++i)
    if (a.time[i] != b.time[i]) throw std::invalid_argument("trajectory grids differ");

  DeviationSummary out;
  out.threshold = threshold;
  out.onset_threshold = onset_threshold.value_or(threshold / 100.0);

  const std::size_t n = a.time.size();
  double sum = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    double d = std::abs(a.output[i] - b.output[i]);
    out.max_abs = std::max(out.max_abs, d);
    double w;
    if (n == 1)
      w = 0.0;
    else if (i == 0)
      w = (a.time[1] - a.time[0]) / 2.0;
    else if (i + 1 == n)
      w = (a.time[n - 1] - a.time[n - 2]) / 2.0;
    else
      w = (a.time[i + 1] - a.time[i - 1]) / 2.0;
    sum += w * d * d;
  }
  out.l2 = std::sqrt(sum);

  const std::size_t debounce = 10;
  std::size_t run = 0;
  for (std::size_t i = 0; i < n; ++i) {
    if (std::abs(a.output[i] - b.output[i]) > out.onset_threshold) {
      if (++run >= debounce) {
        out.onset_time = a.time[i - run + 1];
        break;
      }
    } else {
      run = 0;
    }
  }
  return out;
}

enum class Verdict { commutative, commutative_until, not_commutative };

inline const char* to_string(Verdict v) {
  switch (v) {
    case Verdict::commutative: return "commutative";
    case Verdict::commutative_until: return "commutative_until";
    case Verdict::not_commutative: return "not_commutative";
  }
  return "?";
}

struct ResponseExpectation {
  Verdict verdict = Verdict::commutative;
  std::optional<double> until;
};

/// What the algebra predicts for the forced (zero initial conditions) pair.
inline ResponseExpectation expected_forced(const ConditionReport& rep, const InputSignal& input,
                                           double t_end) {
  if (input.kind == InputSignal::Kind::zero) return {Verdict::commutative, {}};
  if (!rep.constants_known) return {Verdict::not_commutative, {}};
  if (rep.relaxed.vacuous) return {Verdict::commutative, {}};
  if (!rep.relaxed_ok_at_t0) return {Verdict::not_commutative, {}};
  if (rep.relaxed_spoil_time && *rep.relaxed_spoil_time > rep.t0 && *rep.relaxed_spoil_time < t_end)
    return {Verdict::commutative_until, rep.relaxed_spoil_time};
  return {Verdict::commutative, {}};
}

/// What the algebra predicts for the zero-input (initial condition) pair.
inline ResponseExpectation expected_ic(const ConditionReport& rep, Vec2 y, double t_end) {
  if (y.inf_norm() == 0.0) return {Verdict::commutative, {}};
  if (!rep.constants_known) return {Verdict::not_commutative, {}};
  if (!rep.nonrelaxed_ok_at_t0) return {Verdict::not_commutative, {}};
  if (rep.relaxed_spoil_time && *rep.relaxed_spoil_time > rep.t0 && *rep.relaxed_spoil_time < t_end)
    return {Verdict::commutative_until, rep.relaxed_spoil_time};
  return {Verdict::commutative, {}};
}

struct AgreementEntry {
  ResponseExpectation expected;
  DeviationSummary observed;
  bool agrees = false;
  std::string detail;
};

/// Confronts one expectation with one deviation summary.
///   commutative        -> max deviation within the equality threshold
///   commutative_until  -> onset detected within 2 steps of the predicted instant
///   not_commutative    -> max deviation beyond 10x the equality threshold
inline AgreementEntry assess(const ResponseExpectation& exp, const DeviationSummary& dev, double h) {
  AgreementEntry e{exp, dev, false, ""};
  std::ostringstream d;
  switch (exp.verdict) {
    case Verdict::commutative:
      e.agrees = dev.max_abs <= dev.threshold;
      d << "expected equal responses; max deviation " << dev.max_abs << " vs threshold " << dev.threshold;
      break;
    case Verdict::commutative_until: {
      bool onset_ok = dev.onset_time && std::abs(*dev.onset_time - *exp.until) <= 2.0 * h;
      e.agrees = onset_ok && dev.max_abs > dev.threshold;
      d << "expected divergence starting at t=" << *exp.until << "; onset ";
      if (dev.onset_time)
        d << "at t=" << *dev.onset_time;
      else
        d << "not detected";
      break;
    }
    case Verdict::not_commutative:
      e.agrees = dev.max_abs > 10.0 * dev.threshold;
      d << "expected diverging responses; max deviation " << dev.max_abs << " vs threshold "
        << dev.threshold;
      break;
  }
  e.detail = d.str();
  return e;
}

struct ScenarioAssessment {
  AgreementEntry forced;
  AgreementEntry ic;
  bool agreement = false;  // both entries agree; a contradiction is a failure
};

inline ScenarioAssessment assess_scenario(const ConditionReport& rep, const InputSignal& input,
                                          Vec2 y, double t_end, double h,
                                          const DeviationSummary& dev_forced,
                                          const DeviationSummary& dev_ic) {
  ScenarioAssessment s;
  s.forced = assess(expected_forced(rep, input, t_end), dev_forced, h);
  s.ic = assess(expected_ic(rep, y, t_end), dev_ic, h);
  s.agreement = s.forced.agrees && s.ic.agrees;
  return s;
}

inline std::string to_key_values(const ScenarioAssessment& s, const ConditionReport& rep) {
  std::ostringstream os;
  Verdict v = (rep.ic_mode == IcMode::relaxed) ? s.forced.expected.verdict : s.ic.expected.verdict;
  os << "verdict=" << to_string(v) << '\n';
  os << "max_abs_forced=" << detail::fmt_double(s.forced.observed.max_abs) << '\n';
  os << "l2_forced=" << detail::fmt_double(s.forced.observed.l2) << '\n';
  os << "onset_forced="
     << (s.forced.observed.onset_time ? detail::fmt_compact(*s.forced.observed.onset_time) : "none") << '\n';
  os << "max_abs_ic=" << detail::fmt_double(s.ic.observed.max_abs) << '\n';
  os << "l2_ic=" << detail::fmt_double(s.ic.observed.l2) << '\n';
  os << "onset_ic=" << (s.ic.observed.onset_time ? detail::fmt_compact(*s.ic.observed.onset_time) : "none")
     << '\n';
  os << "threshold_forced=" << detail::fmt_double(s.forced.observed.threshold) << '\n';
  os << "threshold_ic=" << detail::fmt_double(s.ic.observed.threshold) << '\n';
  os << "agreement=" << (s.agreement ? "AGREEMENT" : "CONTRADICTION") << '\n';
  return os.str();
}

inline std::string to_text(const ScenarioAssessment& s) {
  std::ostringstream os;
  auto line = [&](const char* name, const AgreementEntry& e) {
    os << "  " << name << ": expected " << to_string(e.expected.verdict);
    if (e.expected.until) os << " (until t=" << detail::fmt_compact(*e.expected.until) << ")";
    os << " -> " << (e.agrees ? "AGREES" : "CONTRADICTS") << "\n    " << e.detail << "\n";
    os << "    max|dy|=" << detail::fmt_compact(e.observed.max_abs)
       << " l2=" << detail::fmt_compact(e.observed.l2) << " onset=";
    if (e.observed.onset_time)
      os << detail::fmt_compact(*e.observed.onset_time);
    else
      os << "none";
    os << " threshold=" << detail::fmt_compact(e.observed.threshold) << "\n";
  };
  os << "simulation vs algebra\n";
  line("forced responses (zero initial conditions)", s.forced);
  line("initial-condition responses (zero input)", s.ic);
  os << "  overall: " << (s.agreement ? "AGREEMENT" : "CONTRADICTION") << "\n";
  return os.str();
}

}  // namespace commutant
