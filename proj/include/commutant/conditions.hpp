// Commutativity condition checking.
//
// First (relaxed) set: the partner coefficients come from the synthesis map
// and, when k1 != 0, Gamma(t) = a0 - f_A^2 - sqrt(a2)*f_A' must be a constant
// A0. Second (non-relaxed) set: both systems carry equal initial conditions
// and that vector lies in the null space of a 2x2 condition matrix
//
//   M = [ (k2+k0-1) + k1*f_A                   sqrt(a2)*k1          ]
//       [ k1*(1 - a0 + sqrt(a2)*f_A')/sqrt(a2)  (k2+k0-1) - k1*f_A  ]
//
// evaluated at t0, whose determinant is
//
//   Delta = (k2+k0-1)^2 - k1^2 + k1^2 * Gamma(t0).
//
// Nonzero admissible initial conditions exist only when Delta = 0; they form
// the ray (y, s*y) with
//
//   s = -[ (k2+k0-1)/k1 * a2^(-1/2) + (2*a1 - a2')/(4*a2) ]  at t0.
//
// An independent route to the same null-space test goes through the block
// matrices
//
//   S1 = [ c0  c1 ]      S2 = [ c2        0  ]
//        [ c0' c1'+c0 ]       [ c2'+c1    c2 ]
//
// of each system: the condition reads
// [A2^-1 (I - A1) - B2^-1 (I - B1)] Y = 0, and premultiplying that residual by
// B2 reproduces M*Y exactly (an identity of the synthesis map, exercised by
// the property tests).

#pragma once

#include <cmath>
#include <cstdio>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "commutant/expr.hpp"
#include "commutant/ltv.hpp"
#include "commutant/mat2.hpp"
#include "commutant/synthesis.hpp"

namespace commutant {

enum class TheoremCase { second_order_general, feedback, first_order_partner, scalar_partner };

inline const char* to_string(TheoremCase c) {
  switch (c) {
    case TheoremCase::second_order_general: return "second_order_general";
    case TheoremCase::feedback: return "feedback";
    case TheoremCase::first_order_partner: return "first_order_partner";
    case TheoremCase::scalar_partner: return "scalar_partner";
  }
  return "?";
}

inline TheoremCase theorem_case_for(const CommutativityConstants& k) {
  if (k.k2 != 0.0) return k.k1 != 0.0 ? TheoremCase::second_order_general : TheoremCase::feedback;
  return k.k1 != 0.0 ? TheoremCase::first_order_partner : TheoremCase::scalar_partner;
}

enum class IcMode { relaxed, nonrelaxed };

struct Tolerances {
  double gamma = 1e-8;     // Gamma-constancy, absolute
  double delta = 1e-9;     // |Delta| considered zero
  double residual = 1e-9;  // null-space residual, scaled by (1 + |Y|)
};

struct PieceGamma {
  double start;
  double end;
  double a0;       // Gamma reference on this smooth piece
  double max_dev;  // max |Gamma - a0| over the sampled piece
};

struct RelaxedCheck {
  bool ok = false;      // Gamma constant on every piece and equal across pieces
  bool vacuous = false; // k1 == 0: the condition is multiplied by k1
  double a0 = std::numeric_limits<double>::quiet_NaN();
  double max_deviation = std::numeric_limits<double>::quiet_NaN();  // vs the global a0
  std::vector<double> violated_breakpoints;
  std::vector<PieceGamma> pieces;
};

namespace detail {

// 512 samples per smooth piece, endpoints included (one-sided limits at the
// piece boundaries come out of the owning piece's expression).
inline constexpr int kGammaGridPoints = 512;

inline bool jumps_at(const PiecewiseCoefficient& c, double t, double tol = 1e-9) {
  double l = c.value(t, Side::left);
  double r = c.value(t, Side::right);
  return std::abs(l - r) > tol * (1.0 + std::max(std::abs(l), std::abs(r)));
}

}  // namespace detail

/// Samples Gamma on every smooth piece inside the window. ok requires the
/// same constant on each piece and across pieces. Breakpoints where a2, a1 or
/// f_A jump (one-sided derivative of f_A unbounded) or where the per-piece
/// constant changes are reported as violations. Vacuously true when k1 = 0,
/// with no violations (every Gamma term in the condition carries a k1 factor).
inline RelaxedCheck check_relaxed(const LtvSystem& a, const CommutativityConstants& k,
                                  std::pair<double, double> window, double tol = 1e-8) {
  RelaxedCheck out;
  out.vacuous = (k.k1 == 0.0);
  if (out.vacuous) {
    out.ok = true;
    return out;
  }
  AuxQuantities aux = aux_quantities(a);
  const auto [w0, w1] = window;

  bool first_sample = true;
  for (const auto& piece : aux.gamma.pieces()) {
    double lo = std::max(w0, piece.t_start);
    double hi = std::min(w1, piece.t_end);
    if (!(lo < hi)) continue;
    PieceGamma pg{lo, hi, 0.0, 0.0};
    bool first_in_piece = true;
    for (int i = 0; i < detail::kGammaGridPoints; ++i) {
      double t = lo + (hi - lo) * static_cast<double>(i) / (detail::kGammaGridPoints - 1);
      double g = piece.expr.evaluate(t);
      if (first_sample) {
        out.a0 = g;
        out.max_deviation = 0.0;
        first_sample = false;
      }
      if (first_in_piece) {
        pg.a0 = g;
        first_in_piece = false;
      }
      pg.max_dev = std::max(pg.max_dev, std::abs(g - pg.a0));
      out.max_deviation = std::max(out.max_deviation, std::abs(g - out.a0));
    }
    out.pieces.push_back(pg);
  }
  if (out.pieces.empty()) throw ValidationError("window does not intersect the coefficient horizon");

  out.ok = true;
  for (const auto& pg : out.pieces) {
    if (pg.max_dev > tol || std::abs(pg.a0 - out.pieces.front().a0) > tol) out.ok = false;
  }

  for (double b : merged_breakpoints({&a.coeff(2), &a.coeff(1), &a.coeff(0)}, w0, w1)) {
    bool violated = detail::jumps_at(a.coeff(2), b) || detail::jumps_at(a.coeff(1), b) ||
                    detail::jumps_at(aux.f_A, b);
    if (!violated) {
      double gl = aux.gamma.value(b, Side::left);
      double gr = aux.gamma.value(b, Side::right);
      violated = std::abs(gl - gr) > tol;
    }
    if (violated) out.violated_breakpoints.push_back(b);
  }
  return out;
}

/// Delta at t0: determinant of the condition matrix. Uses Gamma(t0) even when
/// Gamma is not constant, so "Delta = 0 at t0 but Gamma non-constant" can be
/// reported as two distinct findings. With k1 = 0 it degenerates to
/// (k2+k0-1)^2, the feedback/scalar discriminant.
inline double delta_determinant(const LtvSystem& a, const CommutativityConstants& k, double t0) {
  double s = k.k2 + k.k0 - 1.0;
  if (k.k1 == 0.0) return s * s;
  double gamma = aux_quantities(a).gamma.value(t0, Side::right);
  return s * s - k.k1 * k.k1 + k.k1 * k.k1 * gamma;
}

/// The 2x2 condition matrix at t0. Its determinant equals delta_determinant;
/// with k2 = 0 it is the first-order-partner matrix, with k1 = 0 it reduces
/// to (k2+k0-1)*I.
inline Mat2 condition_matrix(const LtvSystem& a, const CommutativityConstants& k, double t0) {
  double s = k.k2 + k.k0 - 1.0;
  if (k.k1 == 0.0) return {{{s, 0.0}, {0.0, s}}};
  AuxQuantities aux = aux_quantities(a);
  double a2 = a.coeff(2).value(t0, Side::right);
  double a0 = a.coeff(0).value(t0, Side::right);
  double f = aux.f_A.value(t0, Side::right);
  double fd = aux.f_A_dot.value(t0, Side::right);
  if (!(a2 > 0.0)) throw DomainError("condition matrix requires a2 > 0 at t0");
  double r = std::sqrt(a2);
  return {{{s + k.k1 * f, r * k.k1}, {k.k1 * (1.0 - a0 + r * fd) / r, s - k.k1 * f}}};
}

struct IcRay {
  double slope;       // admissible initial conditions are (y, slope*y)
  double delta;       // Delta at t0
  bool zero_ic_only;  // Delta != 0: only the zero vector is admissible
};

/// Admissible initial-condition ray for k1 != 0:
///   dy0 = -[ (k2+k0-1)/k1 * a2^(-1/2) + (2*a1 - a2')/(4*a2) ] * y0  at t0.
/// When Delta(t0) != 0 the slope is still reported (it is the null direction
/// of the first matrix row) but only the zero vector satisfies the full
/// condition; zero_ic_only is set.
inline IcRay required_ic_ray(const LtvSystem& a, const CommutativityConstants& k, double t0,
                             double delta_tol = 1e-9) {
  if (k.k1 == 0.0) throw std::invalid_argument("ic ray requires k1 != 0 (feedback/scalar cases have no ray)");
  double a2 = a.coeff(2).value(t0, Side::right);
  double a1 = a.coeff(1).value(t0, Side::right);
  double da2 = a.coeff(2).at(t0, 1, Side::right);
  if (!(a2 > 0.0)) throw DomainError("ic ray requires a2 > 0 at t0");
  double slope = -((k.k2 + k.k0 - 1.0) / k.k1 / std::sqrt(a2) + (2.0 * a1 - da2) / (4.0 * a2));
  double delta = delta_determinant(a, k, t0);
  return {slope, delta, std::abs(delta) > delta_tol};
}

struct BlockMatrices {
  Mat2 m1;  // [[c0, c1], [c0', c1'+c0]]
  Mat2 m2;  // [[c2, 0], [c2'+c1, c2]]
};

/// Block matrices of a second-order system at t (one-sided derivatives).
inline BlockMatrices block_matrices(const LtvSystem& s, double t, Side side = Side::right) {
  if (s.order() != 2) throw std::invalid_argument("block matrices require a second-order system");
  double c0 = s.coeff(0).value(t, side);
  double c1 = s.coeff(1).value(t, side);
  double c2 = s.coeff(2).value(t, side);
  double d0 = s.coeff(0).at(t, 1, side);
  double d1 = s.coeff(1).at(t, 1, side);
  double d2 = s.coeff(2).at(t, 1, side);
  return {{{{c0, c1}, {d0, d1 + c0}}}, {{{c2, 0.0}, {d2 + c1, c2}}}};
}

struct FirstOrderBlocks {
  double a1_row[2];  // [a0, a1]
  double a2_scalar;  // [a2]
  double b1_col[2];  // [b0; b0']
  Mat2 b2;           // [[b1, 0], [b1'+b0, b1]]
};

/// Block matrices of the mixed pair (second-order A, first-order B) at t.
inline FirstOrderBlocks first_order_block_matrices(const LtvSystem& a, const LtvSystem& b, double t,
                                                   Side side = Side::right) {
  if (a.order() != 2 || b.order() != 1)
    throw std::invalid_argument("expected a second-order A and first-order B");
  FirstOrderBlocks out;
  out.a1_row[0] = a.coeff(0).value(t, side);
  out.a1_row[1] = a.coeff(1).value(t, side);
  out.a2_scalar = a.coeff(2).value(t, side);
  double b0 = b.coeff(0).value(t, side);
  double b1 = b.coeff(1).value(t, side);
  double db0 = b.coeff(0).at(t, 1, side);
  double db1 = b.coeff(1).at(t, 1, side);
  out.b1_col[0] = b0;
  out.b1_col[1] = db0;
  out.b2 = {{{b1, 0.0}, {db1 + b0, b1}}};
  return out;
}

/// Null-space residual of the second commutativity condition at t0, built
/// from the block matrices (no f_A/Gamma algebra):
///  - order-2 partner: || B2 * [A2^-1 (I-A1) - B2^-1 (I-B1)] * Y ||_inf, which
///    equals ||M*Y||_inf of the condition matrix (premultiplying by B2
///    normalizes the raw residual to the condition-matrix row scale);
///  - order-1 partner: the 3-vector residual in (y0, dy0, y_B) with
///    y_B(t0) = y0 imposed;
///  - scalar partner:  |1 - b0| * ||Y||_inf.
inline double nonrelaxed_residual(const LtvSystem& a, const LtvSystem& b, Vec2 y, double t0) {
  if (b.order() == 2) {
    BlockMatrices ba = block_matrices(a, t0);
    BlockMatrices bb = block_matrices(b, t0);
    Mat2 i = Mat2::identity();
    Mat2 k = ba.m2.inverse() * (i - ba.m1) - bb.m2.inverse() * (i - bb.m1);
    Vec2 r = bb.m2 * (k * y);
    return r.inf_norm();
  }
  if (b.order() == 1) {
    FirstOrderBlocks fb = first_order_block_matrices(a, b, t0);
    double a0 = fb.a1_row[0], a1 = fb.a1_row[1], a2 = fb.a2_scalar;
    double b0 = fb.b1_col[0], db0 = fb.b1_col[1];
    double b1 = fb.b2.m[0][0], db1_plus_b0 = fb.b2.m[1][0];
    if (b1 == 0.0) throw DomainError("singular first-order partner (b1 = 0) at t0");
    if (a2 == 0.0) throw DomainError("singular system (a2 = 0) at t0");
    double yb = y.x;  // equal output initial conditions
    double r0 = y.x - yb;
    double r1 = -y.x / b1 + y.y + (b0 / b1) * yb;
    double r2 = (-a0 / a2 + db1_plus_b0 / (b1 * b1)) * y.x + (-a1 / a2 - 1.0 / b1) * y.y +
                (1.0 / a2 - db1_plus_b0 * b0 / (b1 * b1) + db0 / b1) * yb;
    return std::max({std::abs(r0), std::abs(r1), std::abs(r2)});
  }
  double b0 = b.coeff(0).value(t0, Side::right);
  return std::abs(1.0 - b0) * y.inf_norm();
}

struct ConditionReport {
  TheoremCase theorem_case = TheoremCase::second_order_general;
  IcMode ic_mode = IcMode::relaxed;
  double t0 = 0.0;
  CommutativityConstants k;
  bool constants_known = true;  // false: explicit partner not expressible through the synthesis map

  RelaxedCheck relaxed;
  bool relaxed_ok = false;

  double delta = std::numeric_limits<double>::quiet_NaN();
  Mat2 matrix{};
  std::optional<double> ic_slope;
  bool zero_ic_only = false;

  std::optional<Vec2> ic;
  double residual = std::numeric_limits<double>::quiet_NaN();
  bool nonrelaxed_ok = false;

  // Locality: the relaxed conditions hold on the smooth piece containing t0,
  // and the first instant past t0 where they spoil (violated breakpoint or a
  // later piece losing Gamma-constancy), if any. nonrelaxed_ok_at_t0 adds the
  // initial-condition conditions at t0 for the supplied Y.
  bool relaxed_ok_at_t0 = false;
  bool nonrelaxed_ok_at_t0 = false;
  std::optional<double> relaxed_spoil_time;

  // Same for the requested mode (non-relaxed additionally requires the
  // initial-condition conditions at t0). commutative_until is the first
  // spoiling instant when ok_at_t0 holds; t0 itself when it does not.
  bool ok_at_t0 = false;
  std::optional<double> commutative_until;

  std::string notes;
};

/// Evaluates every applicable condition and classifies the pair:
///   k2 != 0, k1 != 0 -> second-order general case;
///   k2 != 0, k1 == 0 -> feedback conjugate (relaxed: always commutative;
///                       non-relaxed: requires k2 + k0 = 1 and equal ICs);
///   k2 == 0, k1 != 0 -> first-order partner;
///   k2 == 0, k1 == 0 -> scalar partner (non-relaxed requires b0 = 1).
inline ConditionReport classify_pair(const LtvSystem& a, const CommutativityConstants& k,
                                     IcMode ic_mode, std::optional<Vec2> y, double t0,
                                     std::pair<double, double> window,
                                     const Tolerances& tols = {}) {
  ConditionReport rep;
  rep.theorem_case = theorem_case_for(k);
  rep.ic_mode = ic_mode;
  rep.t0 = t0;
  rep.k = k;
  rep.ic = y;

  rep.relaxed = check_relaxed(a, k, window, tols.gamma);
  rep.relaxed_ok = rep.relaxed.ok;
  rep.delta = delta_determinant(a, k, t0);
  rep.matrix = condition_matrix(a, k, t0);

  const bool y_zero = y && y->inf_norm() == 0.0;
  bool ic_ok = false;

  if (k.k1 != 0.0) {
    IcRay ray = required_ic_ray(a, k, t0, tols.delta);
    rep.ic_slope = ray.slope;
    rep.zero_ic_only = ray.zero_ic_only;
    LtvSystem b = synth_partner(a, k);
    if (y) rep.residual = nonrelaxed_residual(a, b, *y, t0);
    if (!y)
      ic_ok = !ray.zero_ic_only;
    else if (y_zero)
      ic_ok = true;
    else
      ic_ok = !ray.zero_ic_only && rep.residual <= tols.residual * (1.0 + y->inf_norm());
  } else {
    double sum_dev = std::abs(k.k2 + k.k0 - 1.0);
    rep.zero_ic_only = sum_dev > tols.delta;
    if (rep.theorem_case == TheoremCase::scalar_partner && k.k0 == 0.0)
      throw ValidationError("scalar partner requires k0 != 0");
    if (y) rep.residual = sum_dev * y->inf_norm();
    ic_ok = !rep.zero_ic_only || y_zero;
  }

  rep.nonrelaxed_ok = rep.relaxed_ok && ic_ok;

  // Locality at t0: the smooth piece containing t0 must satisfy the relaxed
  // condition; in non-relaxed mode the initial-condition conditions too.
  bool local_relaxed = true;
  double spoil = kInf;
  if (!rep.relaxed.vacuous) {
    const PieceGamma* own = nullptr;
    for (const auto& pg : rep.relaxed.pieces)
      if (pg.start <= t0 && (t0 < pg.end || &pg == &rep.relaxed.pieces.back())) {
        own = &pg;
        break;
      }
    if (own == nullptr || own->max_dev > tols.gamma) local_relaxed = false;
    for (double b : rep.relaxed.violated_breakpoints)
      if (b > t0) {
        spoil = std::min(spoil, b);
        break;
      }
    // A later piece can fail constancy without any coefficient jump; spoilage
    // then starts when that piece begins.
    for (const auto& pg : rep.relaxed.pieces)
      if (pg.start > t0 && pg.max_dev > tols.gamma) spoil = std::min(spoil, pg.start);
  }
  rep.relaxed_ok_at_t0 = local_relaxed;
  rep.nonrelaxed_ok_at_t0 = local_relaxed && ic_ok;
  if (std::isfinite(spoil)) rep.relaxed_spoil_time = spoil;
  rep.ok_at_t0 = (ic_mode == IcMode::relaxed) ? local_relaxed : rep.nonrelaxed_ok_at_t0;
  if (rep.ok_at_t0 && std::isfinite(spoil)) rep.commutative_until = spoil;
  if (!rep.ok_at_t0) rep.commutative_until = t0;

  return rep;
}

namespace detail {

inline std::string fmt_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

inline std::string fmt_compact(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.12g", v);
  return buf;
}

inline std::string join_breakpoints(const std::vector<double>& bs) {
  std::string out;
  for (std::size_t i = 0; i < bs.size(); ++i) {
    if (i) out += ',';
    out += fmt_compact(bs[i]);
  }
  return out;
}

}  // namespace detail

/// Machine-readable flat key=value dump.
inline std::string to_key_values(const ConditionReport& r) {
  std::ostringstream os;
  os << "theorem_case=" << to_string(r.theorem_case) << '\n';
  os << "constants_known=" << (r.constants_known ? "true" : "false") << '\n';
  os << "ic_mode=" << (r.ic_mode == IcMode::relaxed ? "relaxed" : "nonrelaxed") << '\n';
  os << "t0=" << detail::fmt_compact(r.t0) << '\n';
  os << "k2=" << detail::fmt_compact(r.k.k2) << '\n';
  os << "k1=" << detail::fmt_compact(r.k.k1) << '\n';
  os << "k0=" << detail::fmt_compact(r.k.k0) << '\n';
  os << "relaxed_ok=" << (r.relaxed_ok ? "true" : "false") << '\n';
  os << "nonrelaxed_ok=" << (r.nonrelaxed_ok ? "true" : "false") << '\n';
  os << "gamma_vacuous=" << (r.relaxed.vacuous ? "true" : "false") << '\n';
  os << "A0=" << detail::fmt_double(r.relaxed.a0) << '\n';
  os << "gamma_max_dev=" << detail::fmt_double(r.relaxed.max_deviation) << '\n';
  os << "delta=" << detail::fmt_double(r.delta) << '\n';
  os << "ic_slope=" << (r.ic_slope ? detail::fmt_double(*r.ic_slope) : "none") << '\n';
  os << "zero_ic_only=" << (r.zero_ic_only ? "true" : "false") << '\n';
  os << "residual=" << detail::fmt_double(r.residual) << '\n';
  os << "violated_breakpoints=" << detail::join_breakpoints(r.relaxed.violated_breakpoints) << '\n';
  os << "ok_at_t0=" << (r.ok_at_t0 ? "true" : "false") << '\n';
  os << "commutative_until=" << (r.commutative_until ? detail::fmt_compact(*r.commutative_until) : "none")
     << '\n';
  if (!r.notes.empty()) os << "notes=" << r.notes << '\n';
  return os.str();
}

/// Human-readable report.
inline std::string to_text(const ConditionReport& r) {
  std::ostringstream os;
  os << "commutativity conditions (" << to_string(r.theorem_case) << ", "
     << (r.ic_mode == IcMode::relaxed ? "relaxed" : "non-relaxed") << " mode)\n";
  if (!r.constants_known) {
    os << "  the partner is not expressible through the synthesis map: no constants exist,\n"
          "  so the pair cannot commute\n";
    os << "  verdict: not commutative\n";
    if (!r.notes.empty()) os << "  note: " << r.notes << "\n";
    return os.str();
  }
  os << "  constants: k2=" << detail::fmt_compact(r.k.k2) << " k1=" << detail::fmt_compact(r.k.k1)
     << " k0=" << detail::fmt_compact(r.k.k0) << ", t0=" << detail::fmt_compact(r.t0) << "\n";
  if (r.relaxed.vacuous) {
    os << "  Gamma condition: vacuous (k1 = 0)\n";
  } else {
    os << "  Gamma condition: " << (r.relaxed_ok ? "constant" : "NOT constant")
       << ", A0=" << detail::fmt_compact(r.relaxed.a0)
       << ", max deviation=" << detail::fmt_compact(r.relaxed.max_deviation) << "\n";
    for (const auto& pg : r.relaxed.pieces)
      os << "    piece [" << detail::fmt_compact(pg.start) << ", " << detail::fmt_compact(pg.end)
         << "): A0=" << detail::fmt_compact(pg.a0) << " dev=" << detail::fmt_compact(pg.max_dev) << "\n";
  }
  os << "  Delta(t0)=" << detail::fmt_compact(r.delta)
     << (r.zero_ic_only ? "  (nonzero: only the zero initial condition is admissible)" : "") << "\n";
  os << "  condition matrix at t0: [[" << detail::fmt_compact(r.matrix.m[0][0]) << ", "
     << detail::fmt_compact(r.matrix.m[0][1]) << "], [" << detail::fmt_compact(r.matrix.m[1][0]) << ", "
     << detail::fmt_compact(r.matrix.m[1][1]) << "]]\n";
  if (r.ic_slope)
    os << "  admissible initial conditions: (y, " << detail::fmt_compact(*r.ic_slope) << " * y)\n";
  if (r.ic)
    os << "  supplied Y=(" << detail::fmt_compact(r.ic->x) << ", " << detail::fmt_compact(r.ic->y)
       << "), residual=" << detail::fmt_compact(r.residual) << "\n";
  if (!r.relaxed.violated_breakpoints.empty())
    os << "  conditions violated at switching instants: "
       << detail::join_breakpoints(r.relaxed.violated_breakpoints) << "\n";
  os << "  verdict: ";
  if (r.ok_at_t0 && !r.commutative_until)
    os << "commutative";
  else if (r.ok_at_t0)
    os << "commutative until t=" << detail::fmt_compact(*r.commutative_until);
  else
    os << "not commutative";
  os << " (relaxed_ok=" << (r.relaxed_ok ? "true" : "false")
     << ", nonrelaxed_ok=" << (r.nonrelaxed_ok ? "true" : "false") << ")\n";
  if (!r.notes.empty()) os << "  note: " << r.notes << "\n";
  return os.str();
}

}  // namespace commutant
