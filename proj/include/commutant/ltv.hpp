// Linear time-varying systems of order 0/1/2 with piecewise-smooth (possibly
// switched) coefficients, switching signals and initial states.

#pragma once

#include <array>
#include <cmath>
#include <limits>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "commutant/expr.hpp"

namespace commutant {

class ValidationError : public std::runtime_error {
 public:
  explicit ValidationError(const std::string& what) : std::runtime_error(what) {}
};

/// Which piece owns a breakpoint when evaluating exactly on it. Intervals are
/// half-open [t_j, t_{j+1}), so the right-side piece owns the point.
enum class Side { left, right };

inline constexpr double kInf = std::numeric_limits<double>::infinity();

struct CoefficientPiece {
  double t_start;
  double t_end;  // +inf for the last piece of an unbounded coefficient
  Expr expr;
};

/// Ordered, contiguous, non-overlapping list of (interval, expression) pieces.
/// Breakpoints between pieces are the switching instants.
class PiecewiseCoefficient {
 public:
  PiecewiseCoefficient() : PiecewiseCoefficient(Expr::constant(0.0)) {}

  /// Single smooth piece covering the whole axis.
  explicit PiecewiseCoefficient(Expr e) { pieces_.push_back({-kInf, kInf, std::move(e)}); }

  explicit PiecewiseCoefficient(std::vector<CoefficientPiece> pieces) : pieces_(std::move(pieces)) {
    if (pieces_.empty()) throw ValidationError("piecewise coefficient has no pieces");
    for (std::size_t i = 0; i < pieces_.size(); ++i) {
      if (!(pieces_[i].t_start < pieces_[i].t_end))
        throw ValidationError("piece interval is empty or reversed");
      if (i > 0 && pieces_[i].t_start != pieces_[i - 1].t_end)
        throw ValidationError("pieces are not contiguous");
    }
  }

  const std::vector<CoefficientPiece>& pieces() const { return pieces_; }
  double cover_start() const { return pieces_.front().t_start; }
  double cover_end() const { return pieces_.back().t_end; }
  bool smooth() const { return pieces_.size() == 1; }

  /// Index of the piece owning t for the given side. The extreme endpoints of
  /// the covered range are closed on both sides.
  std::size_t piece_index(double t, Side side) const {
    if (t < cover_start() || t > cover_end())
      throw DomainError("t=" + std::to_string(t) + " outside coefficient horizon");
    std::size_t lo = 0, hi = pieces_.size() - 1;
    while (lo < hi) {
      std::size_t mid = (lo + hi + 1) / 2;
      if (pieces_[mid].t_start <= t)
        lo = mid;
      else
        hi = mid - 1;
    }
    // lo owns [start, end); adjust for side on an interior breakpoint.
    if (side == Side::left && lo > 0 && pieces_[lo].t_start == t) --lo;
    return lo;
  }

  const Expr& piece_expr(double t, Side side) const { return pieces_[piece_index(t, side)].expr; }

  /// Evaluates the order-th derivative of the owning piece's expression.
  /// Jump discontinuities between pieces contribute nothing here; the
  /// condition checker flags breakpoints separately.
  double at(double t, int order, Side side) const {
    return evaluate_derivative(pieces_[piece_index(t, side)].expr, order, t);
  }

  double value(double t, Side side = Side::right) const { return at(t, 0, side); }

  /// Interior breakpoints strictly inside (lo, hi), ascending.
  std::vector<double> breakpoints(double lo, double hi) const {
    std::vector<double> out;
    for (std::size_t i = 1; i < pieces_.size(); ++i) {
      double b = pieces_[i].t_start;
      if (b > lo && b < hi) out.push_back(b);
    }
    return out;
  }

 private:
  std::vector<CoefficientPiece> pieces_;
};

/// See PiecewiseCoefficient::at.
inline double coefficient_at(const PiecewiseCoefficient& c, double t, int order, Side side) {
  return c.at(t, order, side);
}

/// Piecewise-constant switching signal sigma(t): list of (interval, level).
class SwitchingSignal {
 public:
  struct Level {
    double t_start;
    double t_end;
    double value;
  };

  explicit SwitchingSignal(std::vector<Level> levels) : levels_(std::move(levels)) {
    if (levels_.empty()) throw ValidationError("switching signal has no levels");
    for (std::size_t i = 0; i < levels_.size(); ++i) {
      if (!(levels_[i].t_start < levels_[i].t_end))
        throw ValidationError("switching level interval is empty or reversed");
      if (i > 0 && levels_[i].t_start != levels_[i - 1].t_end)
        throw ValidationError("switching levels are not contiguous");
    }
  }

  const std::vector<Level>& levels() const { return levels_; }
  double cover_start() const { return levels_.front().t_start; }
  double cover_end() const { return levels_.back().t_end; }

 private:
  std::vector<Level> levels_;
};

/// Builds the piecewise-constant coefficient base + gain*sigma(t). Values are
/// affine in the stored constants, so lookups reproduce them exactly.
inline PiecewiseCoefficient apply_switching(double base, double gain, const SwitchingSignal& signal) {
  if (gain == 0.0) return PiecewiseCoefficient(Expr::constant(base));
  std::vector<CoefficientPiece> pieces;
  pieces.reserve(signal.levels().size());
  for (const auto& lvl : signal.levels())
    pieces.push_back({lvl.t_start, lvl.t_end, Expr::constant(base + gain * lvl.value)});
  // Merge neighbours that ended up with the same value (repeated levels).
  std::vector<CoefficientPiece> merged;
  for (auto& p : pieces) {
    if (!merged.empty() && merged.back().expr.constant_value() == p.expr.constant_value())
      merged.back().t_end = p.t_end;
    else
      merged.push_back(std::move(p));
  }
  return PiecewiseCoefficient(std::move(merged));
}

struct InitialState {
  double t0 = 0.0;
  double y0 = 0.0;
  double dy0 = 0.0;  // unused for order <= 1 stages
};

/// Constants (k2, k1, k0) selecting the commutative partner: k2 != 0 gives a
/// second-order partner, k2 = 0 and k1 != 0 a first-order one, both zero a
/// scalar gain.
struct CommutativityConstants {
  double k2 = 0.0;
  double k1 = 0.0;
  double k0 = 0.0;

  int partner_order() const {
    if (k2 != 0.0) return 2;
    if (k1 != 0.0) return 1;
    return 0;
  }
};

/// System of order 0, 1 or 2 as a tuple of piecewise coefficients indexed by
/// derivative power, with a validity-domain start.
class LtvSystem {
 public:
  static LtvSystem second_order(PiecewiseCoefficient a2, PiecewiseCoefficient a1,
                                PiecewiseCoefficient a0, double domain_start = -kInf) {
    LtvSystem s;
    s.order_ = 2;
    s.coeffs_[2] = std::move(a2);
    s.coeffs_[1] = std::move(a1);
    s.coeffs_[0] = std::move(a0);
    s.domain_start_ = domain_start;
    return s;
  }

  static LtvSystem first_order(PiecewiseCoefficient b1, PiecewiseCoefficient b0,
                               double domain_start = -kInf) {
    LtvSystem s;
    s.order_ = 1;
    s.coeffs_[1] = std::move(b1);
    s.coeffs_[0] = std::move(b0);
    s.domain_start_ = domain_start;
    return s;
  }

  static LtvSystem scalar(PiecewiseCoefficient b0, double domain_start = -kInf) {
    LtvSystem s;
    s.order_ = 0;
    s.coeffs_[0] = std::move(b0);
    s.domain_start_ = domain_start;
    return s;
  }

  static LtvSystem scalar_gain(double b0) { return scalar(PiecewiseCoefficient(Expr::constant(b0))); }

  int order() const { return order_; }
  double domain_start() const { return domain_start_; }

  const PiecewiseCoefficient& coeff(int power) const {
    if (power < 0 || power > order_) throw std::invalid_argument("coefficient power out of range");
    return coeffs_[power];
  }

  const PiecewiseCoefficient& leading() const { return coeffs_[order_]; }

  /// Sorted union of all coefficient breakpoints strictly inside the window.
  std::vector<double> breakpoints(double lo, double hi) const {
    std::vector<double> out;
    for (int p = 0; p <= order_; ++p) {
      auto b = coeffs_[p].breakpoints(lo, hi);
      out.insert(out.end(), b.begin(), b.end());
    }
    std::sort(out.begin(), out.end());
    out.erase(std::unique(out.begin(), out.end()), out.end());
    return out;
  }

  /// Verifies the leading coefficient does not vanish on [lo, hi], sampling
  /// 1000 uniform points per piece plus both endpoints, threshold 1e-12.
  /// If `positive` is set the coefficient must stay above +1e-12 (needed by
  /// the square roots in the partner synthesis).
  void require_leading_nonzero(double lo, double hi, bool positive = false) const {
    const PiecewiseCoefficient& c = leading();
    for (const auto& piece : c.pieces()) {
      double a = std::max(lo, piece.t_start);
      double b = std::min(hi, piece.t_end);
      if (!(a <= b)) continue;
      const int n = 1000;
      for (int i = 0; i <= n; ++i) {
        double t = a + (b - a) * static_cast<double>(i) / n;
        double v = piece.expr.evaluate(t);
        if (positive ? !(v > 1e-12) : !(std::abs(v) > 1e-12))
          throw ValidationError("leading coefficient " + std::string(positive ? "is not positive" : "vanishes") +
                                " near t=" + std::to_string(t));
      }
    }
  }

 private:
  LtvSystem() = default;

  int order_ = 0;
  std::array<PiecewiseCoefficient, 3> coeffs_{};
  double domain_start_ = -kInf;
};

inline std::vector<double> breakpoints(const LtvSystem& s, std::pair<double, double> window) {
  return s.breakpoints(window.first, window.second);
}

/// Merged interior breakpoints of several coefficients inside (lo, hi).
inline std::vector<double> merged_breakpoints(std::initializer_list<const PiecewiseCoefficient*> cs,
                                              double lo, double hi) {
  std::vector<double> out;
  for (const auto* c : cs) {
    auto b = c->breakpoints(lo, hi);
    out.insert(out.end(), b.begin(), b.end());
  }
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

}  // namespace commutant
