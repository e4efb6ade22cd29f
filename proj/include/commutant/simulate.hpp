// Fixed-step RK4 integration of single systems and series (cascade)
// connections, with the step grid split at every switching breakpoint.
//
// Integration restarts at a breakpoint with the same state: piecewise
// coefficient jumps do not introduce discontinuities in the solutions, only
// in their higher derivatives. Within one grid interval every coefficient is
// pinned to the piece owning the interval start (right side), so RK4 stage
// evaluations at the interval end use the same smooth piece.

#pragma once

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numbers>
#include <ostream>
#include <string>
#include <vector>

#include "commutant/ltv.hpp"
#include "commutant/mat2.hpp"

namespace commutant {

struct InputSignal {
  enum class Kind { zero, sine };
  Kind kind = Kind::zero;
  double amplitude = 0.0;
  double frequency = 0.0;  // Hz
  double phase = 0.0;      // rad

  static InputSignal zero() { return {}; }
  static InputSignal sine(double amplitude, double frequency_hz, double phase = 0.0) {
    return {Kind::sine, amplitude, frequency_hz, phase};
  }

  double operator()(double t) const {
    if (kind == Kind::zero) return 0.0;
    return amplitude * std::sin(2.0 * std::numbers::pi * frequency * t + phase);
  }
};

/// Companion (state-space) form at time t.
///   order 2: dx = a*x + b*u with x = (y, y'), output y = x0
///   order 1: dy = a11*y + b11*u
///   order 0: y = gain*u (algebraic)
struct StateSpace {
  int order = 0;
  Mat2 a{};
  Vec2 b{};
  double a11 = 0.0;
  double b11 = 0.0;
  double gain = 0.0;
};

inline StateSpace to_state_space(const LtvSystem& s, double t, Side side = Side::right) {
  StateSpace ss;
  ss.order = s.order();
  double lead = s.leading().value(t, side);
  if (lead == 0.0) throw DomainError("leading coefficient vanishes at t=" + std::to_string(t));
  if (s.order() == 2) {
    double a1 = s.coeff(1).value(t, side);
    double a0 = s.coeff(0).value(t, side);
    ss.a = {{{0.0, 1.0}, {-a0 / lead, -a1 / lead}}};
    ss.b = {0.0, 1.0 / lead};
  } else if (s.order() == 1) {
    double b0 = s.coeff(0).value(t, side);
    ss.a11 = -b0 / lead;
    ss.b11 = 1.0 / lead;
  } else {
    ss.gain = 1.0 / lead;
  }
  return ss;
}

/// Sampled response of one simulation run. Samples sit on the uniform step
/// grid plus every switching breakpoint (stored bitwise).
struct Trajectory {
  std::vector<double> time;
  std::vector<double> output;        // y of the last stage
  std::vector<double> intermediate;  // y of the first stage (the input for single runs)
  double step = 0.0;
  std::string ordering;  // e.g. "AB", "BA", "A"
  std::string scenario;
  bool truncated = false;
  std::string diagnostic;
};

/// CSV with >= 12 significant digits; byte-identical for identical inputs.
inline void write_csv(const Trajectory& tr, std::ostream& os) {
  os << "t,y_out,y_mid\n";
  char buf[128];
  for (std::size_t i = 0; i < tr.time.size(); ++i) {
    std::snprintf(buf, sizeof(buf), "%.15g,%.15g,%.15g\n", tr.time[i], tr.output[i], tr.intermediate[i]);
    os << buf;
  }
}

/// Uniform grid t0 + i*h, closed with t_end, with every breakpoint in
/// (t0, t_end) inserted as an exact grid value.
inline std::vector<double> simulation_grid(double t0, double t_end, double h,
                                           const std::vector<double>& breakpoints) {
  if (!(h > 0.0) || !std::isfinite(h)) throw std::invalid_argument("step size must be positive and finite");
  if (!(t0 < t_end) || !std::isfinite(t0) || !std::isfinite(t_end))
    throw std::invalid_argument("simulation window must be finite and non-empty");
  auto n = static_cast<long long>(std::ceil((t_end - t0) / h - 1e-9));
  if (n < 1) n = 1;
  std::vector<double> g;
  g.reserve(static_cast<std::size_t>(n) + 1 + breakpoints.size());
  for (long long i = 0; i < n; ++i) g.push_back(t0 + static_cast<double>(i) * h);
  g.push_back(t_end);
  for (double b : breakpoints) {
    if (!(b > t0 && b < t_end)) continue;
    auto it = std::lower_bound(g.begin(), g.end(), b);
    if (it != g.end() && *it == b) continue;
    // Snap a uniform point that lands on the same instant up to rounding,
    // keeping the breakpoint value bitwise; never move t0 or t_end.
    if (it != g.end() && it + 1 != g.end() && *it - b <= h * 1e-9) {
      *it = b;
      continue;
    }
    if (it != g.begin() && it - 1 != g.begin() && b - *(it - 1) <= h * 1e-9) {
      *(it - 1) = b;
      continue;
    }
    g.insert(it, b);
  }
  return g;
}

namespace detail {

struct SimStage {
  const LtvSystem* sys;
  InitialState ic;
};

struct PinnedStage {
  int order;
  const Expr* c[3];
};

inline void pin(const std::vector<SimStage>& stages, double t, std::vector<PinnedStage>& out) {
  out.clear();
  for (const auto& st : stages) {
    PinnedStage p{st.sys->order(), {nullptr, nullptr, nullptr}};
    for (int pw = 0; pw <= p.order; ++pw) p.c[pw] = &st.sys->coeff(pw).piece_expr(t, Side::right);
    out.push_back(p);
  }
}

// Stacked cascade derivative; uin flows through the stage chain.
inline void chain_derivative(const std::vector<PinnedStage>& ps, double t, const double* x,
                             double* dx, double uin) {
  int off = 0;
  for (const auto& p : ps) {
    if (p.order == 2) {
      double a2 = p.c[2]->evaluate(t);
      if (a2 == 0.0) throw DomainError("leading coefficient vanished mid-horizon at t=" + std::to_string(t));
      double a1 = p.c[1]->evaluate(t);
      double a0 = p.c[0]->evaluate(t);
      dx[off] = x[off + 1];
      dx[off + 1] = (uin - a1 * x[off + 1] - a0 * x[off]) / a2;
      uin = x[off];
      off += 2;
    } else if (p.order == 1) {
      double b1 = p.c[1]->evaluate(t);
      if (b1 == 0.0) throw DomainError("leading coefficient vanished mid-horizon at t=" + std::to_string(t));
      double b0 = p.c[0]->evaluate(t);
      dx[off] = (uin - b0 * x[off]) / b1;
      uin = x[off];
      off += 1;
    } else {
      double b0 = p.c[0]->evaluate(t);
      if (b0 == 0.0) throw DomainError("scalar stage gain vanished at t=" + std::to_string(t));
      uin = uin / b0;
    }
  }
}

// Outputs of the first and last stage at a grid point.
inline void chain_outputs(const std::vector<PinnedStage>& ps, double t, const double* x, double uin,
                          double* first_out, double* last_out) {
  int off = 0;
  double out = uin;
  for (std::size_t i = 0; i < ps.size(); ++i) {
    const auto& p = ps[i];
    if (p.order >= 1) {
      out = x[off];
      off += p.order;
    } else {
      double b0 = p.c[0]->evaluate(t);
      if (b0 == 0.0) throw DomainError("scalar stage gain vanished at t=" + std::to_string(t));
      out = out / b0;
    }
    if (i == 0) *first_out = out;
  }
  *last_out = out;
}

inline Trajectory simulate_chain(const std::vector<SimStage>& stages, const InputSignal& u,
                                 double t0, double t_end, double h) {
  int dim = 0;
  std::vector<double> bps;
  for (const auto& st : stages) {
    dim += st.sys->order();
    if (t0 < st.sys->domain_start())
      throw ValidationError("simulation window starts before the system's validity domain (t0=" +
                            std::to_string(t0) + ", domain starts at " +
                            std::to_string(st.sys->domain_start()) + ")");
    for (int pw = 0; pw <= st.sys->order(); ++pw) {
      const auto& c = st.sys->coeff(pw);
      if (c.cover_start() > t0 || c.cover_end() < t_end)
        throw ValidationError("coefficients do not cover the simulation window");
    }
    auto b = st.sys->breakpoints(t0, t_end);
    bps.insert(bps.end(), b.begin(), b.end());
  }
  std::sort(bps.begin(), bps.end());
  bps.erase(std::unique(bps.begin(), bps.end()), bps.end());

  Trajectory tr;
  tr.step = h;
  tr.time = simulation_grid(t0, t_end, h, bps);
  tr.output.reserve(tr.time.size());
  tr.intermediate.reserve(tr.time.size());

  double x[4] = {0, 0, 0, 0};
  {
    int off = 0;
    for (const auto& st : stages) {
      if (st.sys->order() == 2) {
        x[off] = st.ic.y0;
        x[off + 1] = st.ic.dy0;
        off += 2;
      } else if (st.sys->order() == 1) {
        x[off] = st.ic.y0;
        off += 1;
      }
    }
  }

  std::vector<PinnedStage> pinned;
  double k1[4], k2[4], k3[4], k4[4], xt[4];
  const bool single = stages.size() == 1;

  for (std::size_t i = 0; i + 1 < tr.time.size(); ++i) {
    const double ta = tr.time[i];
    const double tb = tr.time[i + 1];
    pin(stages, ta, pinned);

    double mid, out;
    chain_outputs(pinned, ta, x, u(ta), &mid, &out);
    tr.output.push_back(out);
    tr.intermediate.push_back(single ? u(ta) : mid);

    const double hh = tb - ta;
    const double tm = ta + 0.5 * hh;
    chain_derivative(pinned, ta, x, k1, u(ta));
    for (int j = 0; j < dim; ++j) xt[j] = x[j] + 0.5 * hh * k1[j];
    chain_derivative(pinned, tm, xt, k2, u(tm));
    for (int j = 0; j < dim; ++j) xt[j] = x[j] + 0.5 * hh * k2[j];
    chain_derivative(pinned, tm, xt, k3, u(tm));
    for (int j = 0; j < dim; ++j) xt[j] = x[j] + hh * k3[j];
    chain_derivative(pinned, tb, xt, k4, u(tb));
    bool finite = true;
    for (int j = 0; j < dim; ++j) {
      x[j] += hh / 6.0 * (k1[j] + 2.0 * k2[j] + 2.0 * k3[j] + k4[j]);
      finite = finite && std::isfinite(x[j]);
    }
    if (!finite) {
      tr.truncated = true;
      tr.diagnostic = "state became non-finite near t=" + std::to_string(tb) + "; trajectory truncated";
      tr.time.resize(tr.output.size());
      return tr;
    }
  }

  // Final sample with the last interval's pieces (left side of t_end).
  if (!tr.time.empty()) {
    double tend = tr.time.back();
    if (pinned.empty()) pin(stages, t0, pinned);
    double mid, out;
    chain_outputs(pinned, tend, x, u(tend), &mid, &out);
    tr.output.push_back(out);
    tr.intermediate.push_back(single ? u(tend) : mid);
  }
  return tr;
}

}  // namespace detail

/// Integrates the series connection first -> second. The second stage is
/// driven by the first stage's output; an order-0 stage is applied
/// algebraically. Initial conditions are taken at t0 for each stage.
inline Trajectory simulate_cascade(const LtvSystem& first, const LtvSystem& second,
                                   const InputSignal& u, const InitialState& ic_first,
                                   const InitialState& ic_second, double t0, double t_end, double h) {
  return detail::simulate_chain({{&first, ic_first}, {&second, ic_second}}, u, t0, t_end, h);
}

inline Trajectory simulate_single(const LtvSystem& s, const InputSignal& u, const InitialState& ic,
                                  double t0, double t_end, double h) {
  return detail::simulate_chain({{&s, ic}}, u, t0, t_end, h);
}

struct SuperpositionReport {
  double max_deviation;
  double tolerance;
  bool ok;
};

/// Linearity check: the full response must equal the zero-state response plus
/// the zero-input response, within a tolerance scaled by the output range.
inline SuperpositionReport superposition_check(const LtvSystem& first, const LtvSystem& second,
                                               const InputSignal& u, const InitialState& ic_first,
                                               const InitialState& ic_second, double t0, double t_end,
                                               double h, double tol_scale = 1e-6) {
  InitialState zf{ic_first.t0, 0.0, 0.0};
  InitialState zs{ic_second.t0, 0.0, 0.0};
  Trajectory full = simulate_cascade(first, second, u, ic_first, ic_second, t0, t_end, h);
  Trajectory forced = simulate_cascade(first, second, u, zf, zs, t0, t_end, h);
  Trajectory natural = simulate_cascade(first, second, InputSignal::zero(), ic_first, ic_second, t0, t_end, h);
  double dev = 0.0, maxy = 0.0;
  for (std::size_t i = 0; i < full.output.size(); ++i) {
    dev = std::max(dev, std::abs(full.output[i] - forced.output[i] - natural.output[i]));
    maxy = std::max(maxy, std::abs(full.output[i]));
  }
  double tol = tol_scale * (1.0 + maxy);
  return {dev, tol, dev <= tol};
}

}  // namespace commutant
