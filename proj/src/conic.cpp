#include "risnoma/conic.hpp"

#include <cmath>
#include <limits>
#include <ostream>
#include <stdexcept>

namespace risnoma {

namespace {

using Eigen::Index;
using Eigen::MatrixXd;
using Eigen::VectorXd;

const char* cone_name(ConeType t) {
  switch (t) {
    case ConeType::Equality: return "eq";
    case ConeType::Nonnegative: return "nonneg";
    case ConeType::SecondOrder: return "soc";
    case ConeType::Exponential: return "exp";
  }
  return "?";
}

// Strict interior margin of a cone point. Positive means strictly inside.
double cone_margin(ConeType t, const VectorXd& y) {
  switch (t) {
    case ConeType::Equality:
      return 0.0;
    case ConeType::Nonnegative:
      return y.size() ? y.minCoeff() : 1.0;
    case ConeType::SecondOrder:
      return y(0) - y.tail(y.size() - 1).norm();
    case ConeType::Exponential: {
      double a = y(0), b = y(1), c = y(2);
      if (b <= 0.0 || c <= 0.0) return std::min(b, c);
      return std::min({b, c, b * std::log(c / b) - a});
    }
  }
  return 0.0;
}

// Constraint violation (0 when the point satisfies the cone).
double cone_violation(ConeType t, const VectorXd& y) {
  switch (t) {
    case ConeType::Equality:
      return y.size() ? y.cwiseAbs().maxCoeff() : 0.0;
    case ConeType::Nonnegative:
      return y.size() ? std::max(0.0, -y.minCoeff()) : 0.0;
    case ConeType::SecondOrder:
      return std::max(0.0, y.tail(y.size() - 1).norm() - y(0));
    case ConeType::Exponential: {
      double a = y(0), b = y(1), c = y(2);
      if (b <= 0.0) return -b + std::max(0.0, -c);
      // b*exp(a/b) - c, guarded against overflow
      double e = a / b;
      if (e > 700.0) return std::numeric_limits<double>::infinity();
      return std::max(0.0, b * std::exp(e) - c);
    }
  }
  return 0.0;
}

double cone_nu(ConeType t, Index dim) {
  switch (t) {
    case ConeType::Equality: return 0.0;
    case ConeType::Nonnegative: return static_cast<double>(dim);
    case ConeType::SecondOrder: return 2.0;
    case ConeType::Exponential: return 3.0;
  }
  return 0.0;
}

// Barrier value; expects a strictly interior point.
double cone_barrier(ConeType t, const VectorXd& y) {
  switch (t) {
    case ConeType::Equality:
      return 0.0;
    case ConeType::Nonnegative:
      return -y.array().log().sum();
    case ConeType::SecondOrder: {
      double d = y(0) * y(0) - y.tail(y.size() - 1).squaredNorm();
      return -std::log(d);
    }
    case ConeType::Exponential: {
      double a = y(0), b = y(1), c = y(2);
      double r = b * std::log(c / b) - a;
      return -std::log(r) - std::log(b) - std::log(c);
    }
  }
  return 0.0;
}

// Barrier gradient and Hessian in the cone coordinates.
void cone_barrier_deriv(ConeType t, const VectorXd& y, VectorXd& g, MatrixXd& H) {
  const Index d = y.size();
  g.setZero(d);
  H.setZero(d, d);
  switch (t) {
    case ConeType::Equality:
      return;
    case ConeType::Nonnegative:
      for (Index i = 0; i < d; ++i) {
        g(i) = -1.0 / y(i);
        H(i, i) = 1.0 / (y(i) * y(i));
      }
      return;
    case ConeType::SecondOrder: {
      // f = -log(t^2 - ||z||^2)
      double den = y(0) * y(0) - y.tail(d - 1).squaredNorm();
      VectorXd gd(d);  // gradient of den
      gd(0) = 2.0 * y(0);
      gd.tail(d - 1) = -2.0 * y.tail(d - 1);
      g = -gd / den;
      H = gd * gd.transpose() / (den * den);
      H(0, 0) -= 2.0 / den;
      for (Index i = 1; i < d; ++i) H(i, i) += 2.0 / den;
      return;
    }
    case ConeType::Exponential: {
      double a = y(0), b = y(1), c = y(2);
      double lg = std::log(c / b);
      double r = b * lg - a;
      VectorXd gr(3);
      gr << -1.0, lg - 1.0, b / c;
      MatrixXd Hr = MatrixXd::Zero(3, 3);
      Hr(1, 1) = -1.0 / b;
      Hr(1, 2) = 1.0 / c;
      Hr(2, 1) = 1.0 / c;
      Hr(2, 2) = -b / (c * c);
      g = -gr / r;
      g(1) -= 1.0 / b;
      g(2) -= 1.0 / c;
      H = gr * gr.transpose() / (r * r) - Hr / r;
      H(1, 1) += 1.0 / (b * b);
      H(2, 2) += 1.0 / (c * c);
      return;
    }
  }
}

struct Workspace {
  const ConicProgram& p;
  std::vector<ConeBlock> cones;  // non-equality blocks, block-normalized
  MatrixXd E;                    // stacked equality rows, row-normalized
  VectorXd e;
  double nu_total = 0.0;

  explicit Workspace(const ConicProgram& prog) : p(prog) {
    Index eq_rows = 0;
    for (const auto& blk : p.blocks)
      if (blk.type == ConeType::Equality) eq_rows += blk.dim();
    E.resize(eq_rows, p.num_vars);
    e.resize(eq_rows);
    Index r = 0;
    for (const auto& blk : p.blocks) {
      if (blk.type == ConeType::Equality) {
        for (Index i = 0; i < blk.dim(); ++i) {
          double s = std::max(blk.A.row(i).cwiseAbs().maxCoeff(), std::abs(blk.b(i)));
          if (!(s > 0.0)) s = 1.0;
          E.row(r) = blk.A.row(i) / s;
          e(r) = blk.b(i) / s;
          ++r;
        }
      } else {
        // cones are invariant under positive scaling of the whole block
        ConeBlock nb = blk;
        double s = std::max(nb.A.cwiseAbs().maxCoeff(), nb.b.cwiseAbs().maxCoeff());
        if (s > 0.0) {
          nb.A /= s;
          nb.b /= s;
        }
        nu_total += cone_nu(nb.type, nb.dim());
        cones.push_back(std::move(nb));
      }
    }
  }

  bool interior(const VectorXd& x, double margin = 0.0) const {
    for (const auto& blk : cones) {
      VectorXd y = blk.A * x + blk.b;
      if (!(cone_margin(blk.type, y) > margin)) return false;
    }
    return true;
  }

  double barrier(const VectorXd& x) const {
    double f = 0.0;
    for (const auto& blk : cones) f += cone_barrier(blk.type, blk.A * x + blk.b);
    return f;
  }

  void barrier_deriv(const VectorXd& x, VectorXd& g, MatrixXd& H) const {
    g.setZero(p.num_vars);
    H.setZero(p.num_vars, p.num_vars);
    VectorXd gb;
    MatrixXd Hb;
    for (const auto& blk : cones) {
      VectorXd y = blk.A * x + blk.b;
      cone_barrier_deriv(blk.type, y, gb, Hb);
      g.noalias() += blk.A.transpose() * gb;
      H.noalias() += blk.A.transpose() * Hb * blk.A;
    }
  }

  double max_violation(const VectorXd& x) const {
    double v = 0.0;
    for (const auto& blk : p.blocks)
      v = std::max(v, cone_violation(blk.type, blk.A * x + blk.b));
    return v;
  }
};

// Largest step alpha with y + alpha*dy still strictly inside the cone
// (nonnegative and second-order cones only; exponential falls back to
// backtracking in the caller).
double step_to_boundary(ConeType t, const VectorXd& y, const VectorXd& dy) {
  double inf = std::numeric_limits<double>::infinity();
  switch (t) {
    case ConeType::Equality:
    case ConeType::Exponential:
      return inf;
    case ConeType::Nonnegative: {
      double a = inf;
      for (Index i = 0; i < y.size(); ++i)
        if (dy(i) < 0.0) a = std::min(a, -y(i) / dy(i));
      return a;
    }
    case ConeType::SecondOrder: {
      // (t+a*dt)^2 - ||z+a*dz||^2 = c0 + 2 c1 a + c2 a^2 > 0, t + a*dt > 0
      const Index d = y.size();
      double c0 = y(0) * y(0) - y.tail(d - 1).squaredNorm();
      double c1 = y(0) * dy(0) - y.tail(d - 1).dot(dy.tail(d - 1));
      double c2 = dy(0) * dy(0) - dy.tail(d - 1).squaredNorm();
      double a = inf;
      if (dy(0) < 0.0) a = std::min(a, -y(0) / dy(0));
      // smallest positive root of c2 a^2 + 2 c1 a + c0 = 0
      double disc = c1 * c1 - c2 * c0;
      if (disc >= 0.0) {
        double sq = std::sqrt(disc);
        if (std::abs(c2) > 1e-300) {
          double r1 = (-c1 - sq) / c2, r2 = (-c1 + sq) / c2;
          if (r1 > r2) std::swap(r1, r2);
          if (r1 > 0.0) a = std::min(a, r1);
          else if (r2 > 0.0) a = std::min(a, r2);
        } else if (c1 < 0.0) {
          a = std::min(a, -c0 / (2.0 * c1));
        }
      }
      return a;
    }
  }
  return inf;
}

struct CenterResult {
  bool ok = false;        // Newton decrement reached the centering tolerance
  bool early = false;     // watch threshold hit (feasibility phase)
  bool diverged = false;  // iterates ran away (unbounded direction)
  bool factor_failed = false;
  double decrement2 = std::numeric_limits<double>::infinity();
  int newton_used = 0;
};

// Newton centering of  minimize t * (-c.x) + barrier(x)  s.t.  E x + e = 0.
// x must enter strictly interior with E x + e = 0 and stays so. When
// watch_idx >= 0 the loop exits as soon as x(watch_idx) < watch_threshold.
CenterResult center(const Workspace& ws, const VectorXd& cobj, double t, VectorXd& x,
                    int newton_budget, int watch_idx = -1,
                    double watch_threshold = 0.0) {
  const Index n = ws.p.num_vars;
  const Index m = ws.E.rows();
  CenterResult res;
  VectorXd g(n);
  MatrixXd H(n, n);
  for (int it = 0; it < 100; ++it) {
    if (res.newton_used >= newton_budget) return res;
    ++res.newton_used;
    ws.barrier_deriv(x, g, H);
    g.noalias() -= t * cobj;

    VectorXd dx;
    // Jacobi-precondition the Newton system: the barrier Hessian spans many
    // orders of magnitude once constraints become nearly active.
    VectorXd dscale = H.diagonal().cwiseAbs().cwiseMax(1e-300).cwiseSqrt().cwiseInverse();
    MatrixXd Hs = dscale.asDiagonal() * H * dscale.asDiagonal();
    VectorXd gs = dscale.asDiagonal() * g;
    double ridge = 0.0;
    for (int attempt = 0; attempt < 8; ++attempt) {
      MatrixXd Hr = Hs;
      if (ridge > 0.0) Hr.diagonal().array() += ridge;
      Eigen::LDLT<MatrixXd> ldlt(Hr);
      if (ldlt.info() == Eigen::Success) {
        if (m == 0) {
          dx = dscale.asDiagonal() * ldlt.solve(-gs);
        } else {
          MatrixXd Es = ws.E * dscale.asDiagonal();
          MatrixXd HiEt = ldlt.solve(Es.transpose());
          VectorXd Hig = ldlt.solve(gs);
          MatrixXd S = Es * HiEt;
          Eigen::LDLT<MatrixXd> sd(S);
          if (sd.info() != Eigen::Success) { ridge = ridge == 0.0 ? 1e-13 : ridge * 100; continue; }
          VectorXd w = sd.solve(-Es * Hig);
          dx = dscale.asDiagonal() * (-Hig - HiEt * w);
        }
        if (dx.allFinite()) break;
      }
      ridge = ridge == 0.0 ? 1e-13 : ridge * 100;
      dx.resize(0);
    }
    if (dx.size() == 0) {
      res.factor_failed = true;
      return res;
    }

    double decr2 = -g.dot(dx);
    if (decr2 < 0.0) decr2 = 0.0;
    res.decrement2 = decr2;
    if (decr2 / 2.0 <= 1e-10) {
      res.ok = true;
      return res;
    }

    // Step at most 99% of the way to the nearest cone boundary, then
    // backtrack for the exponential blocks and require sufficient decrease.
    // The decrease test is evaluated in difference form: the linear part from
    // the step itself and the barrier as a difference of moderate values,
    // which stays meaningful when t |c.x| is many orders above the decrement.
    double alpha = 1.0;
    for (const auto& blk : ws.cones) {
      VectorXd y = blk.A * x + blk.b;
      VectorXd dy = blk.A * dx;
      alpha = std::min(alpha, 0.99 * step_to_boundary(blk.type, y, dy));
    }
    double bar0 = ws.barrier(x);
    double dlin = -t * cobj.dot(dx);  // directional change of the linear term
    int bt = 0;
    bool stepped = false;
    while (alpha > 1e-18 && bt < 200) {
      ++bt;
      VectorXd xn = x + alpha * dx;
      if (ws.interior(xn)) {
        double dpsi = alpha * dlin + (ws.barrier(xn) - bar0);
        if (dpsi <= -0.01 * alpha * decr2) {
          x = std::move(xn);
          stepped = true;
          break;
        }
      }
      alpha *= 0.7;
    }
    if (!stepped) {
      res.ok = decr2 / 2.0 <= 1e-6;  // stalled at the center within roundoff
      return res;
    }
    if (watch_idx >= 0 && x(watch_idx) < watch_threshold) {
      res.ok = true;
      res.early = true;
      return res;
    }
    if (x.cwiseAbs().maxCoeff() > 1e13) {
      res.diverged = true;
      return res;
    }
  }
  return res;  // not centered within the inner cap
}

}  // namespace

void ConicProgram::validate() const {
  if (num_vars < 0) throw std::invalid_argument("conic: negative num_vars");
  if (objective.size() != num_vars)
    throw std::invalid_argument("conic: objective dimension mismatch");
  for (const auto& blk : blocks) {
    if (blk.A.cols() != num_vars)
      throw std::invalid_argument("conic: block input dimension mismatch");
    if (blk.A.rows() != blk.b.size())
      throw std::invalid_argument("conic: block offset dimension mismatch");
    if (blk.type == ConeType::Exponential && blk.dim() != 3)
      throw std::invalid_argument("conic: exponential block must have dimension 3");
    if (blk.type == ConeType::SecondOrder && blk.dim() < 1)
      throw std::invalid_argument("conic: empty second-order block");
  }
}

void ConicProgram::dump(std::ostream& os) const {
  os.precision(17);
  os << "conic num_vars=" << num_vars << "\n";
  os << "obj " << objective_offset;
  for (int i = 0; i < num_vars; ++i) os << " " << objective(i);
  os << "\n";
  for (const auto& blk : blocks) {
    os << "block " << cone_name(blk.type) << " " << blk.dim() << "\n";
    for (Index r = 0; r < blk.dim(); ++r) {
      os << blk.b(r);
      for (int j = 0; j < num_vars; ++j) os << " " << blk.A(r, j);
      os << "\n";
    }
  }
}

ConicSolution solve_conic(const ConicProgram& p, const SolverOptions& opts,
                          const std::optional<Eigen::VectorXd>& warm_start) {
  p.validate();
  ConicSolution sol;
  Workspace ws(p);
  const Index n = p.num_vars;

  // Initial point satisfying the equality constraints.
  VectorXd x = VectorXd::Zero(n);
  if (warm_start && warm_start->size() == n) x = *warm_start;
  if (ws.E.rows() > 0) {
    VectorXd resid = ws.E * x + ws.e;
    if (resid.cwiseAbs().maxCoeff() > 0.0) {
      Eigen::CompleteOrthogonalDecomposition<MatrixXd> cod(ws.E);
      x -= cod.solve(resid);
      resid = ws.E * x + ws.e;
      double sc = 1.0 + ws.e.cwiseAbs().maxCoeff();
      if (resid.cwiseAbs().maxCoeff() > opts.feas_tol * sc) {
        sol.status = SolveStatus::Infeasible;
        sol.primal = x;
        sol.max_residual = resid.cwiseAbs().maxCoeff();
        return sol;
      }
    }
  }

  int newton_left = opts.max_newton;

  // Feasibility phase: minimize s with blocks shifted along interior rays,
  // inside a large trust ball that removes recession directions.
  if (!ws.cones.empty() && !ws.interior(x, 0.0)) {
    ConicProgram ph;
    ph.num_vars = n + 1;
    ph.objective = VectorXd::Zero(n + 1);
    ph.objective(n) = -1.0;  // maximize -s  ==  minimize s
    for (const auto& blk : p.blocks) {
      ConeBlock nb;
      nb.type = blk.type;
      nb.b = blk.b;
      nb.A.resize(blk.dim(), n + 1);
      nb.A.leftCols(n) = blk.A;
      nb.A.col(n).setZero();
      if (blk.type == ConeType::Nonnegative) {
        nb.A.col(n).setOnes();
      } else if (blk.type == ConeType::SecondOrder) {
        nb.A(0, n) = 1.0;
      } else if (blk.type == ConeType::Exponential) {
        nb.A(1, n) = 1.0;
        nb.A(2, n) = 2.0;
      }
      ph.blocks.push_back(std::move(nb));
    }
    double radius = 1e8 * std::max(1.0, x.norm());
    ConeBlock ball;
    ball.type = ConeType::SecondOrder;
    ball.A.setZero(n + 2, n + 1);
    ball.A.block(1, 0, n + 1, n + 1).setIdentity();
    ball.b = VectorXd::Zero(n + 2);
    ball.b(0) = radius;
    ph.blocks.push_back(std::move(ball));

    Workspace pws(ph);
    VectorXd xs(n + 1);
    xs.head(n) = x;
    xs(n) = 1.0;
    int grow = 0;
    while (!pws.interior(xs, 0.0) && grow < 60) {
      xs(n) *= 4.0;
      ++grow;
    }
    if (!pws.interior(xs, 0.0)) {
      sol.status = SolveStatus::NumericalTrouble;
      sol.primal = x;
      return sol;
    }
    VectorXd cobj = ph.objective;
    double t = 1.0;
    bool feasible = false;
    for (int outer = 0; outer < 90; ++outer) {
      CenterResult cr = center(pws, cobj, t, xs, newton_left, static_cast<int>(n), -1e-8);
      newton_left -= cr.newton_used;
      if (xs(n) < -1e-9) { feasible = true; break; }
      if (!cr.ok || cr.diverged || newton_left <= 0) break;
      if (pws.nu_total / t <= 1e-10) break;
      t *= opts.barrier_mu;
    }
    if (!feasible) {
      // Could not push the slack strictly negative: no strict interior.
      sol.status = xs(n) > 1e-7 ? SolveStatus::Infeasible : SolveStatus::NumericalTrouble;
      sol.primal = xs.head(n);
      sol.max_residual = ws.max_violation(sol.primal);
      return sol;
    }
    x = xs.head(n);
  }

  // Objective phase: follow the central path.
  const VectorXd& cobj = p.objective;
  if (ws.cones.empty()) {
    // Pure equality-constrained linear objective: bounded only if the
    // objective is orthogonal to the feasible subspace.
    VectorXd gproj = cobj;
    if (ws.E.rows() > 0) {
      Eigen::CompleteOrthogonalDecomposition<MatrixXd> cod(ws.E);
      gproj -= cod.pseudoInverse() * (ws.E * cobj);
    }
    if (gproj.cwiseAbs().maxCoeff() > 1e-10) {
      sol.status = SolveStatus::Unbounded;
      sol.primal = x;
      return sol;
    }
    sol.status = SolveStatus::Optimal;
    sol.primal = x;
    sol.objective_value = cobj.dot(x) + p.objective_offset;
    sol.max_residual = ws.max_violation(x);
    return sol;
  }

  auto finish = [&](SolveStatus st) {
    if (ws.E.rows() > 0) {
      // Remove accumulated round-off drift on the equality manifold.
      Eigen::CompleteOrthogonalDecomposition<MatrixXd> cod(ws.E);
      x -= cod.solve(ws.E * x + ws.e);
    }
    sol.status = st;
    sol.primal = x;
    sol.objective_value = cobj.dot(x) + p.objective_offset;
    sol.max_residual = ws.max_violation(x);
    if (ws.E.rows() > 0)
      sol.max_residual = std::max(sol.max_residual, (ws.E * x + ws.e).cwiseAbs().maxCoeff());
    return sol;
  };

  double t = 1.0;
  double prev_obj = std::numeric_limits<double>::quiet_NaN();
  for (int outer = 0; outer < 90; ++outer) {
    CenterResult cr = center(ws, cobj, t, x, newton_left);
    newton_left -= cr.newton_used;
    if (cr.diverged) {
      sol.status = SolveStatus::Unbounded;
      sol.primal = x;
      return sol;
    }
    if (cr.factor_failed || newton_left <= 0) return finish(SolveStatus::NumericalTrouble);
    double obj = cobj.dot(x) + p.objective_offset;
    double scale = std::max(1.0, std::abs(obj));
    if (ws.nu_total / t <= opts.gap_tol * scale) return finish(SolveStatus::Optimal);
    // Deep on the path the computed Newton decrement is dominated by
    // round-off even at the central point. Progress of the objective is the
    // reliable signal: once it stalls, the path cannot be followed further
    // in double precision.
    if (!cr.ok && !std::isnan(prev_obj) && std::abs(obj - prev_obj) <= 1e-9 * scale) {
      bool close_enough = ws.nu_total / t <= 1e-6 * scale;
      return finish(close_enough ? SolveStatus::Optimal : SolveStatus::NumericalTrouble);
    }
    prev_obj = obj;
    t *= opts.barrier_mu;
  }
  return finish(SolveStatus::NumericalTrouble);
}

}  // namespace risnoma
