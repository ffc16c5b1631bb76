#pragma once

#include <vector>

#include "risnoma/conic.hpp"
#include "risnoma/numerics.hpp"

namespace risnoma {

/// Affine real expression a . x + b over the decision variables of one
/// conic program. Complex vector variables are stored as interleaved
/// (real, imaginary) scalar pairs.
struct AffExpr {
  Eigen::VectorXd a;
  double b = 0.0;

  AffExpr() = default;
  explicit AffExpr(int n) : a(Eigen::VectorXd::Zero(n)) {}
  static AffExpr constant(int n, double c) {
    AffExpr e(n);
    e.b = c;
    return e;
  }
  static AffExpr variable(int n, int idx, double coeff = 1.0) {
    AffExpr e(n);
    e.a(idx) = coeff;
    return e;
  }
  double eval(const Eigen::VectorXd& x) const { return a.dot(x) + b; }
  AffExpr& operator+=(const AffExpr& o) {
    a += o.a;
    b += o.b;
    return e_ref();
  }
  AffExpr operator+(const AffExpr& o) const {
    AffExpr e = *this;
    e += o;
    return e;
  }
  AffExpr operator-(const AffExpr& o) const {
    AffExpr e = *this;
    e.a -= o.a;
    e.b -= o.b;
    return e;
  }
  AffExpr operator*(double s) const {
    AffExpr e = *this;
    e.a *= s;
    e.b *= s;
    return e;
  }
  AffExpr plus_const(double c) const {
    AffExpr e = *this;
    e.b += c;
    return e;
  }

 private:
  AffExpr& e_ref() { return *this; }
};

/// Complex affine expression (pair of real ones).
struct CAffExpr {
  AffExpr re, im;
  cplx eval(const Eigen::VectorXd& x) const { return {re.eval(x), im.eval(x)}; }
};

/// row . w for a complex variable vector stored interleaved at `base`.
inline CAffExpr complex_dot(const CRowVector& row, int base, int n) {
  CAffExpr e{AffExpr(n), AffExpr(n)};
  for (int m = 0; m < row.size(); ++m) {
    double cr = row(m).real(), ci = row(m).imag();
    int ir = base + 2 * m, ii = ir + 1;
    e.re.a(ir) += cr;
    e.re.a(ii) -= ci;
    e.im.a(ir) += ci;
    e.im.a(ii) += cr;
  }
  return e;
}

inline ConeBlock make_block(ConeType type, const std::vector<AffExpr>& rows) {
  ConeBlock blk;
  blk.type = type;
  const int n = rows.empty() ? 0 : static_cast<int>(rows[0].a.size());
  blk.A.resize(rows.size(), n);
  blk.b.resize(rows.size());
  for (size_t r = 0; r < rows.size(); ++r) {
    blk.A.row(r) = rows[r].a;
    blk.b(r) = rows[r].b;
  }
  return blk;
}

/// Second-order-cone encoding of  sum ||z_i||^2 <= t  as
/// ||[2 z; t - 1]|| <= t + 1 (valid for any sign of the affine t).
inline ConeBlock quad_le_affine(const std::vector<CAffExpr>& zs,
                                const std::vector<double>& consts, const AffExpr& t) {
  std::vector<AffExpr> rows;
  rows.push_back(t.plus_const(1.0));
  for (const auto& z : zs) {
    rows.push_back(z.re * 2.0);
    rows.push_back(z.im * 2.0);
  }
  const int n = static_cast<int>(t.a.size());
  for (double c : consts) rows.push_back(AffExpr::constant(n, 2.0 * c));
  rows.push_back(t.plus_const(-1.0));
  return make_block(ConeType::SecondOrder, rows);
}

/// Exponential-cone block for  e^{x_idx} <= expr  (triple (a,b,c) = (x,1,expr)).
inline ConeBlock exp_le_affine(int n, int var_idx, const AffExpr& expr) {
  std::vector<AffExpr> rows;
  rows.push_back(AffExpr::variable(n, var_idx));
  rows.push_back(AffExpr::constant(n, 1.0));
  rows.push_back(expr);
  return make_block(ConeType::Exponential, rows);
}

}  // namespace risnoma
