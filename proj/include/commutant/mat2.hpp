// Minimal fixed-size 2x2 / 2x1 linear algebra for the condition matrices.

#pragma once

#include <cmath>
#include <stdexcept>

namespace commutant {

struct Vec2 {
  double x = 0.0;
  double y = 0.0;

  double inf_norm() const { return std::max(std::abs(x), std::abs(y)); }
};

struct Mat2 {
  // m[row][col]
  double m[2][2] = {{0.0, 0.0}, {0.0, 0.0}};

  static Mat2 identity() { return {{{1.0, 0.0}, {0.0, 1.0}}}; }

  double det() const { return m[0][0] * m[1][1] - m[0][1] * m[1][0]; }

  Mat2 inverse() const {
    double d = det();
    if (d == 0.0) throw std::domain_error("singular 2x2 matrix");
    return {{{m[1][1] / d, -m[0][1] / d}, {-m[1][0] / d, m[0][0] / d}}};
  }

  friend Mat2 operator-(const Mat2& a, const Mat2& b) {
    return {{{a.m[0][0] - b.m[0][0], a.m[0][1] - b.m[0][1]},
             {a.m[1][0] - b.m[1][0], a.m[1][1] - b.m[1][1]}}};
  }

  friend Mat2 operator*(const Mat2& a, const Mat2& b) {
    Mat2 r;
    for (int i = 0; i < 2; ++i)
      for (int j = 0; j < 2; ++j) r.m[i][j] = a.m[i][0] * b.m[0][j] + a.m[i][1] * b.m[1][j];
    return r;
  }

  friend Vec2 operator*(const Mat2& a, const Vec2& v) {
    return {a.m[0][0] * v.x + a.m[0][1] * v.y, a.m[1][0] * v.x + a.m[1][1] * v.y};
  }
};

}  // namespace commutant
