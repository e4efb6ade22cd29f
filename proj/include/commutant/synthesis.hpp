// Synthesis of commutative partners of a second-order system from the
// constants (k2, k1, k0), and the auxiliary quantities f_A and Gamma that the
// commutativity conditions are written in:
//
//   f_A   = (1/4) * a2^(-1/2) * (2*a1 - a2')
//   Gamma = a0 - f_A^2 - sqrt(a2) * f_A'
//
// Partner coefficients (second-order partner):
//   b2 = a2*k2,  b1 = a1*k2 + sqrt(a2)*k1,  b0 = a0*k2 + f_A*k1 + k0

#pragma once

#include <cmath>
#include <optional>
#include <vector>

#include "commutant/expr.hpp"
#include "commutant/ltv.hpp"

namespace commutant {

namespace detail {

struct Segment {
  double start;
  double end;
};

/// Smooth segments of a second-order system: the coefficient coverage
/// intersection cut at every coefficient breakpoint.
inline std::vector<Segment> smooth_segments(const LtvSystem& a) {
  double lo = a.coeff(0).cover_start();
  double hi = a.coeff(0).cover_end();
  for (int p = 1; p <= a.order(); ++p) {
    lo = std::max(lo, a.coeff(p).cover_start());
    hi = std::min(hi, a.coeff(p).cover_end());
  }
  std::vector<double> cuts{lo};
  for (double b : a.breakpoints(lo, hi)) cuts.push_back(b);
  cuts.push_back(hi);
  std::vector<Segment> out;
  for (std::size_t i = 0; i + 1 < cuts.size(); ++i) out.push_back({cuts[i], cuts[i + 1]});
  return out;
}

inline const Expr& expr_on_segment(const PiecewiseCoefficient& c, const Segment& s) {
  if (std::isfinite(s.start)) return c.piece_expr(s.start, Side::right);
  if (std::isfinite(s.end)) return c.piece_expr(s.end, Side::left);
  return c.pieces().front().expr;
}

}  // namespace detail

/// f_A, its derivative and Gamma of a second-order system, each as a
/// piecewise expression aligned with the system's smooth segments.
struct AuxQuantities {
  PiecewiseCoefficient f_A;
  PiecewiseCoefficient f_A_dot;
  PiecewiseCoefficient gamma;
};

inline AuxQuantities aux_quantities(const LtvSystem& a) {
  if (a.order() != 2) throw std::invalid_argument("aux quantities require a second-order system");
  std::vector<CoefficientPiece> fp, fdp, gp;
  for (const auto& seg : detail::smooth_segments(a)) {
    const Expr& a2 = detail::expr_on_segment(a.coeff(2), seg);
    const Expr& a1 = detail::expr_on_segment(a.coeff(1), seg);
    const Expr& a0 = detail::expr_on_segment(a.coeff(0), seg);
    Expr f = Expr::constant(0.25) * (Expr::constant(2.0) * a1 - a2.derivative()) / sqrt(a2);
    Expr fd = f.derivative();
    Expr g = a0 - f * f - sqrt(a2) * fd;
    fp.push_back({seg.start, seg.end, f});
    fdp.push_back({seg.start, seg.end, fd});
    gp.push_back({seg.start, seg.end, g});
  }
  return {PiecewiseCoefficient(std::move(fp)), PiecewiseCoefficient(std::move(fdp)),
          PiecewiseCoefficient(std::move(gp))};
}

inline double compute_f_A(const LtvSystem& a, double t, Side side = Side::right) {
  return aux_quantities(a).f_A.value(t, side);
}

inline double compute_gamma(const LtvSystem& a, double t, Side side = Side::right) {
  return aux_quantities(a).gamma.value(t, side);
}

/// Second-order partner; requires k2 != 0 and a2 > 0 on the horizon.
inline LtvSystem synth_second_order(const LtvSystem& a, const CommutativityConstants& k) {
  if (a.order() != 2) throw std::invalid_argument("partner synthesis requires a second-order system");
  if (k.k2 == 0.0) throw std::invalid_argument("k2 = 0 selects a lower-order partner");
  AuxQuantities aux = aux_quantities(a);
  std::vector<CoefficientPiece> b2p, b1p, b0p;
  auto segments = detail::smooth_segments(a);
  for (std::size_t i = 0; i < segments.size(); ++i) {
    const auto& seg = segments[i];
    const Expr& a2 = detail::expr_on_segment(a.coeff(2), seg);
    const Expr& a1 = detail::expr_on_segment(a.coeff(1), seg);
    const Expr& a0 = detail::expr_on_segment(a.coeff(0), seg);
    const Expr& f = aux.f_A.pieces()[i].expr;
    b2p.push_back({seg.start, seg.end, a2 * Expr::constant(k.k2)});
    b1p.push_back({seg.start, seg.end,
                   a1 * Expr::constant(k.k2) + sqrt(a2) * Expr::constant(k.k1)});
    b0p.push_back({seg.start, seg.end,
                   a0 * Expr::constant(k.k2) + f * Expr::constant(k.k1) + Expr::constant(k.k0)});
  }
  return LtvSystem::second_order(PiecewiseCoefficient(std::move(b2p)),
                                 PiecewiseCoefficient(std::move(b1p)),
                                 PiecewiseCoefficient(std::move(b0p)), a.domain_start());
}

/// First-order partner (k2 = 0, k1 != 0): b1 = sqrt(a2)*k1, b0 = f_A*k1 + k0.
inline LtvSystem synth_first_order(const LtvSystem& a, double k1, double k0) {
  if (a.order() != 2) throw std::invalid_argument("partner synthesis requires a second-order system");
  if (k1 == 0.0) throw std::invalid_argument("k1 = 0 selects a scalar partner");
  AuxQuantities aux = aux_quantities(a);
  std::vector<CoefficientPiece> b1p, b0p;
  auto segments = detail::smooth_segments(a);
  for (std::size_t i = 0; i < segments.size(); ++i) {
    const auto& seg = segments[i];
    const Expr& a2 = detail::expr_on_segment(a.coeff(2), seg);
    const Expr& f = aux.f_A.pieces()[i].expr;
    b1p.push_back({seg.start, seg.end, sqrt(a2) * Expr::constant(k1)});
    b0p.push_back({seg.start, seg.end, f * Expr::constant(k1) + Expr::constant(k0)});
  }
  return LtvSystem::first_order(PiecewiseCoefficient(std::move(b1p)),
                                PiecewiseCoefficient(std::move(b0p)), a.domain_start());
}

/// Scalar partner: a constant gain system b0*y = x, so the output map is
/// y = x / b0. k0 = 0 is rejected (the output map would not exist).
inline LtvSystem synth_scalar(double k0) {
  if (k0 == 0.0) throw std::invalid_argument("scalar partner requires k0 != 0");
  return LtvSystem::scalar_gain(k0);
}

inline LtvSystem synth_partner(const LtvSystem& a, const CommutativityConstants& k) {
  switch (k.partner_order()) {
    case 2: return synth_second_order(a, k);
    case 1: return synth_first_order(a, k.k1, k.k0);
    default: return synth_scalar(k.k0);
  }
}

/// Feedback-conjugate gains for k1 = 0: constant feedforward alpha = 1/k2 and
/// feedback sigma = k0. The partner commutes with arbitrary equal nonzero
/// initial conditions iff k2 + k0 = 1.
struct FeedbackGains {
  double alpha;
  double sigma;
  double gain_sum;  // k2 + k0
  bool sum_is_unity;
};

inline FeedbackGains feedback_gains(const CommutativityConstants& k) {
  if (k.k1 != 0.0) throw std::invalid_argument("feedback gains are defined for k1 = 0");
  if (k.k2 == 0.0) throw std::invalid_argument("feedback gains require k2 != 0");
  double sum = k.k2 + k.k0;
  return {1.0 / k.k2, k.k0, sum, std::abs(sum - 1.0) <= 1e-12};
}

/// Attempts to express an explicit partner B through the synthesis map, by
/// sampling. Returns the constants if they come out the same (within tol) at
/// every sample, otherwise nullopt.
inline std::optional<CommutativityConstants> recover_constants(const LtvSystem& a,
                                                               const LtvSystem& b, double lo,
                                                               double hi, double tol = 1e-9) {
  AuxQuantities aux = aux_quantities(a);
  const int n = 128;
  CommutativityConstants k{};
  bool first = true;
  for (int i = 0; i <= n; ++i) {
    double t = lo + (hi - lo) * static_cast<double>(i) / n;
    Side side = (i == n) ? Side::left : Side::right;
    double a2 = a.coeff(2).value(t, side);
    double a1 = a.coeff(1).value(t, side);
    double a0 = a.coeff(0).value(t, side);
    double f = aux.f_A.value(t, side);
    CommutativityConstants s{};
    if (b.order() == 2) {
      s.k2 = b.coeff(2).value(t, side) / a2;
      s.k1 = (b.coeff(1).value(t, side) - a1 * s.k2) / std::sqrt(a2);
      s.k0 = b.coeff(0).value(t, side) - a0 * s.k2 - f * s.k1;
    } else if (b.order() == 1) {
      s.k1 = b.coeff(1).value(t, side) / std::sqrt(a2);
      s.k0 = b.coeff(0).value(t, side) - f * s.k1;
    } else {
      s.k0 = b.coeff(0).value(t, side);
    }
    if (first) {
      k = s;
      first = false;
    } else {
      auto close = [&](double x, double y) { return std::abs(x - y) <= tol * (1.0 + std::abs(y)); };
      if (!close(s.k2, k.k2) || !close(s.k1, k.k1) || !close(s.k0, k.k0)) return std::nullopt;
    }
  }
  return k;
}

}  // namespace commutant
