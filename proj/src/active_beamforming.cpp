#include "risnoma/active_beamforming.hpp"

#include <cmath>
#include <stdexcept>

namespace risnoma {

namespace {

// Streams that carry power in the interference-as-noise mode.
std::vector<int> tin_streams(int K, bool sensing_col) {
  std::vector<int> s;
  for (int i = 0; i < K; ++i) s.push_back(i);
  if (sensing_col) s.push_back(K);
  return s;
}

}  // namespace

AffExpr taylor_lb_quadratic(const CRowVector& H, const CVector& w_hat, int var_base, int n) {
  cplx beta = (H * w_hat)(0);
  CAffExpr e = complex_dot(H, var_base, n);
  AffExpr out = e.re * (2.0 * beta.real()) + e.im * (2.0 * beta.imag());
  out.b -= std::norm(beta);
  return out;
}

double taylor_lb_value(const CRowVector& H, const CVector& w_hat, const CVector& w) {
  cplx beta = (H * w_hat)(0);
  cplx e = (H * w)(0);
  return 2.0 * (beta.real() * e.real() + beta.imag() * e.imag()) - std::norm(beta);
}

ConeBlock soc_interference_constraint(const CRowVector& H, const std::vector<int>& w_bases,
                                      double sigma, const AffExpr& delta, int n) {
  std::vector<CAffExpr> zs;
  for (int base : w_bases) zs.push_back(complex_dot(H, base, n));
  return quad_le_affine(zs, {sigma}, delta);
}

P3Linearization build_p3_linearization(const SystemConfig& cfg, const ChannelSet& ch,
                                       const CVector& v, const std::vector<CVector>& u,
                                       const CMatrix& W_anchor, const ActiveOptions& opts) {
  const int K = cfg.K;
  P3Linearization lin;
  lin.W_anchor = W_anchor;
  lin.H.resize(K);
  for (int k = 0; k < K; ++k) lin.H[k] = aggregate_user_channel(ch, v, k);

  lin.tau_hat = Eigen::VectorXd::Zero(K);
  if (opts.noma) {
    for (int k = 1; k < K; ++k) {
      double den = cfg.noise_user_w(k);
      for (int i = 0; i < k; ++i) den += std::norm((lin.H[k] * W_anchor.col(i))(0));
      lin.tau_hat(k) = std::log(den);
    }
  } else {
    auto streams = tin_streams(K, !opts.pin_sensing);
    for (int k = 0; k < K; ++k) {
      double den = cfg.noise_user_w(k);
      for (int i : streams)
        if (i != k) den += std::norm((lin.H[k] * W_anchor.col(i))(0));
      lin.tau_hat(k) = std::log(den);
    }
  }

  if (opts.radar) {
    lin.a_dir.resize(cfg.L);
    lin.delta2.resize(cfg.L);
    for (int l = 0; l < cfg.L; ++l) {
      CMatrix gl = composite_target_matrix(ch, v, l);
      CMatrix umat = Eigen::Map<const CMatrix>(u.at(l).data(), cfg.M, K + 1);
      lin.a_dir[l] = vec(gl.adjoint() * umat);  // (I ⊗ G_l)^H u_l
      lin.delta2(l) = cfg.gamma_lin(l) * cfg.noise_radar_w(l) * u.at(l).squaredNorm() /
                      (cfg.Q * cfg.rcs_var.at(l));
    }
  }
  return lin;
}

namespace {

struct P3Builder {
  const SystemConfig& cfg;
  const ActiveOptions& opts;
  const P3Linearization& lin;
  int K, M, L;
  int n_w, eta_base, tau_base, zeta_idx, slack_idx, n;

  P3Builder(const SystemConfig& c, const ActiveOptions& o, const P3Linearization& l,
            bool with_slack)
      : cfg(c), opts(o), lin(l), K(c.K), M(c.M), L(c.L) {
    n_w = 2 * M * (K + 1);
    if (with_slack) {
      // restoration carries no rate machinery: exponents free of any
      // objective would make the barrier subproblems unbounded
      eta_base = tau_base = zeta_idx = -1;
      slack_idx = n_w;
      n = n_w + 1;
      return;
    }
    if (opts.noma) {
      eta_base = n_w;
      tau_base = n_w + (K - 1);
      zeta_idx = n_w + 2 * (K - 1);
      n = zeta_idx + 1;
    } else {
      eta_base = n_w;
      tau_base = n_w + K;
      zeta_idx = -1;
      n = n_w + 2 * K;
    }
    slack_idx = -1;
  }

  int w_base(int col) const { return 2 * M * col; }
  int eta_idx(int u) const { return opts.noma ? eta_base + (u - 1) : eta_base + u; }
  int tau_idx(int u) const { return opts.noma ? tau_base + (u - 1) : tau_base + u; }

  AffExpr tlb(int user, int col) const {
    return taylor_lb_quadratic(lin.H[user], lin.W_anchor.col(col), w_base(col), n);
  }

  AffExpr slack() const { return AffExpr::variable(n, slack_idx); }

  // Affine surrogate e^{tau_hat} (1 + tau - tau_hat) of e^{tau}.
  AffExpr delta1(int u) const {
    double th = lin.tau_hat(u);
    double s = std::exp(th);
    AffExpr e = AffExpr::variable(n, tau_idx(u), s);
    e.b = s * (1.0 - th);
    return e;
  }

  void build(ConicProgram& prog, bool restoration) const {
    prog.num_vars = n;
    prog.objective = Eigen::VectorXd::Zero(n);
    if (restoration) {
      prog.objective(slack_idx) = 1.0;
    } else if (opts.noma) {
      for (int u = 1; u < K; ++u) {
        prog.objective(eta_idx(u)) = 1.0;
        prog.objective(tau_idx(u)) = -1.0;
      }
      prog.objective(zeta_idx) = 1.0;
    } else {
      for (int u = 0; u < K; ++u) {
        prog.objective(eta_idx(u)) = 1.0;
        prog.objective(tau_idx(u)) = -1.0;
      }
    }

    auto streams = tin_streams(K, !opts.pin_sensing);

    // rate machinery: numerator exp cones and denominator interference cones
    if (restoration) {
      // feasibility only; the rate surrogate plays no role
    } else if (opts.noma) {
      for (int u = 1; u < K; ++u) {
        AffExpr num = AffExpr::constant(n, cfg.noise_user_w(u));
        for (int i = 0; i <= u; ++i) num += tlb(u, i);
        prog.blocks.push_back(exp_le_affine(n, eta_idx(u), num));
      }
      prog.blocks.push_back(
          exp_le_affine(n, zeta_idx, tlb(0, 0).plus_const(cfg.noise_user_w(0))));
      std::vector<AffExpr> nonneg;
      for (int u = 1; u < K; ++u) {
        std::vector<int> bases;
        for (int i = 0; i < u; ++i) bases.push_back(w_base(i));
        prog.blocks.push_back(soc_interference_constraint(
            lin.H[u], bases, std::sqrt(cfg.noise_user_w(u)), delta1(u), n));
        nonneg.push_back(delta1(u));
      }
      if (!nonneg.empty()) prog.blocks.push_back(make_block(ConeType::Nonnegative, nonneg));
    } else {
      std::vector<AffExpr> nonneg;
      for (int u = 0; u < K; ++u) {
        AffExpr num = AffExpr::constant(n, cfg.noise_user_w(u));
        for (int i : streams) num += tlb(u, i);
        prog.blocks.push_back(exp_le_affine(n, eta_idx(u), num));
        std::vector<CAffExpr> zs;
        for (int i : streams)
          if (i != u) zs.push_back(complex_dot(lin.H[u], w_base(i), n));
        prog.blocks.push_back(
            quad_le_affine(zs, {std::sqrt(cfg.noise_user_w(u))}, delta1(u)));
        nonneg.push_back(delta1(u));
      }
      prog.blocks.push_back(make_block(ConeType::Nonnegative, nonneg));
    }

    // decode-SINR thresholds
    if (opts.noma) {
      for (int k = 1; k < K; ++k) {
        double r = cfg.rth_lin(k);
        double sr = std::sqrt(r);
        for (int j = 0; j <= k; ++j) {
          std::vector<CAffExpr> zs;
          for (int i = 0; i < k; ++i) {
            CAffExpr z = complex_dot(lin.H[j], w_base(i), n);
            zs.push_back({z.re * sr, z.im * sr});
          }
          AffExpr t = tlb(j, k);
          if (restoration) t = t - slack();
          prog.blocks.push_back(
              quad_le_affine(zs, {sr * std::sqrt(cfg.noise_user_w(j))}, t));
        }
      }
    } else {
      for (int k = 0; k < K; ++k) {
        double sr = std::sqrt(cfg.rth_lin(k));
        std::vector<CAffExpr> zs;
        for (int i : streams)
          if (i != k) {
            CAffExpr z = complex_dot(lin.H[k], w_base(i), n);
            zs.push_back({z.re * sr, z.im * sr});
          }
        AffExpr t = tlb(k, k);
        if (restoration) t = t - slack();
        prog.blocks.push_back(
            quad_le_affine(zs, {sr * std::sqrt(cfg.noise_user_w(k))}, t));
      }
    }

    // decode ordering: sensing stream strongest, then increasing user index
    if (opts.noma) {
      for (int u = 0; u < K; ++u) {
        if (opts.sensing_chain) {
          AffExpr t = tlb(u, K);
          if (restoration) t = t - slack();
          prog.blocks.push_back(
              quad_le_affine({complex_dot(lin.H[u], w_base(K - 1), n)}, {}, t));
        }
        for (int i = 0; i + 1 < K; ++i) {
          AffExpr t = tlb(u, i + 1);
          if (restoration) t = t - slack();
          prog.blocks.push_back(
              quad_le_affine({complex_dot(lin.H[u], w_base(i), n)}, {}, t));
        }
      }
    }

    // radar SNR thresholds
    if (opts.radar) {
      std::vector<AffExpr> rows;
      for (int l = 0; l < L; ++l) {
        CRowVector arow = lin.a_dir[l].adjoint();
        AffExpr e = taylor_lb_quadratic(arow, vec(lin.W_anchor), 0, n);
        e.b -= lin.delta2(l);
        if (restoration) e = e - slack();
        rows.push_back(e);
      }
      prog.blocks.push_back(make_block(ConeType::Nonnegative, rows));
    }

    // total power
    {
      std::vector<AffExpr> rows;
      rows.push_back(AffExpr::constant(n, std::sqrt(cfg.p_max_w())));
      for (int i = 0; i < n_w; ++i) rows.push_back(AffExpr::variable(n, i));
      prog.blocks.push_back(make_block(ConeType::SecondOrder, rows));
    }

    if (opts.pin_sensing) {
      std::vector<AffExpr> rows;
      for (int i = 0; i < 2 * M; ++i) rows.push_back(AffExpr::variable(n, w_base(K) + i));
      prog.blocks.push_back(make_block(ConeType::Equality, rows));
    }

    if (restoration) {
      // cap the slack so the restoration objective stays bounded
      AffExpr cap = AffExpr::constant(n, 1e9) - slack();
      prog.blocks.push_back(make_block(ConeType::Nonnegative, {cap}));
    }
  }

  Eigen::VectorXd warm_start(bool restoration) const {
    Eigen::VectorXd x = Eigen::VectorXd::Zero(n);
    double shrink = restoration ? 1.0 - 1e-6 : 1.0;
    for (int j = 0; j <= K; ++j)
      for (int m = 0; m < M; ++m) {
        cplx w = opts.pin_sensing && j == K ? cplx(0.0, 0.0) : shrink * lin.W_anchor(m, j);
        x(w_base(j) + 2 * m) = w.real();
        x(w_base(j) + 2 * m + 1) = w.imag();
      }
    if (restoration) {
      x(slack_idx) = -1.0;
      return x;
    }
    const double off = 1e-4;
    auto streams = tin_streams(K, !opts.pin_sensing);
    if (opts.noma) {
      for (int u = 1; u < K; ++u) {
        double num = cfg.noise_user_w(u);
        for (int i = 0; i <= u; ++i) num += std::norm((lin.H[u] * lin.W_anchor.col(i))(0));
        x(eta_idx(u)) = std::log(num) - off;
        x(tau_idx(u)) = lin.tau_hat(u) + off;
      }
      x(zeta_idx) =
          std::log(std::norm((lin.H[0] * lin.W_anchor.col(0))(0)) + cfg.noise_user_w(0)) - off;
    } else {
      for (int u = 0; u < K; ++u) {
        double num = cfg.noise_user_w(u);
        for (int i : streams) num += std::norm((lin.H[u] * lin.W_anchor.col(i))(0));
        x(eta_idx(u)) = std::log(num) - off;
        x(tau_idx(u)) = lin.tau_hat(u) + off;
      }
    }
    return x;
  }
};

CMatrix extract_w(const Eigen::VectorXd& x, int M, int K) {
  CMatrix W(M, K + 1);
  for (int j = 0; j <= K; ++j)
    for (int m = 0; m < M; ++m) {
      int base = 2 * (j * M + m);
      W(m, j) = {x(base), x(base + 1)};
    }
  return W;
}

}  // namespace

P3Problem build_p3(const SystemConfig& cfg, const ChannelSet& ch, const CVector& v,
                   const std::vector<CVector>& u, const CMatrix& W_anchor,
                   const ActiveOptions& opts) {
  if (W_anchor.rows() != cfg.M || W_anchor.cols() != cfg.K + 1)
    throw std::invalid_argument("build_p3: anchor has wrong dimensions");
  P3Problem p;
  p.opts = opts;
  p.M = cfg.M;
  p.K = cfg.K;
  p.L = cfg.L;
  p.lin = build_p3_linearization(cfg, ch, v, u, W_anchor, opts);
  P3Builder b(cfg, p.opts, p.lin, false);
  b.build(p.prog, false);
  p.n_w = b.n_w;
  p.eta_base = b.eta_base;
  p.tau_base = b.tau_base;
  p.zeta_idx = b.zeta_idx;
  p.warm = b.warm_start(false);
  p.prog.validate();
  return p;
}

P3Result solve_p3(const P3Problem& p, double previous_objective, const SolverOptions& sopts) {
  ConicSolution s = solve_conic(p.prog, sopts, p.warm);
  P3Result r;
  r.status = s.status;
  r.max_residual = s.max_residual;
  if (s.status != SolveStatus::Optimal) return r;
  r.W = extract_w(s.primal, p.M, p.K);
  const int K = p.K;
  if (p.opts.noma) {
    r.eta.resize(K - 1);
    r.tau.resize(K - 1);
    for (int u = 1; u < K; ++u) {
      r.eta(u - 1) = s.primal(p.eta_base + (u - 1));
      r.tau(u - 1) = s.primal(p.tau_base + (u - 1));
    }
    r.zeta1 = s.primal(p.zeta_idx);
  } else {
    r.eta = s.primal.segment(p.eta_base, K);
    r.tau = s.primal.segment(p.tau_base, K);
  }
  r.objective = s.objective_value;
  (void)previous_objective;  // ascent relative to it is checked by callers
  return r;
}

RestorationResult solve_p3_restoration(const SystemConfig& cfg, const ChannelSet& ch,
                                       const CVector& v, const std::vector<CVector>& u,
                                       const CMatrix& W_anchor, const ActiveOptions& opts,
                                       const SolverOptions& sopts) {
  P3Linearization lin = build_p3_linearization(cfg, ch, v, u, W_anchor, opts);
  P3Builder b(cfg, opts, lin, true);
  ConicProgram prog;
  b.build(prog, true);
  prog.validate();
  ConicSolution s = solve_conic(prog, sopts, b.warm_start(true));
  RestorationResult r;
  r.status = s.status;
  if (s.status != SolveStatus::Optimal) return r;
  r.W = extract_w(s.primal, cfg.M, cfg.K);
  r.slack = s.primal(b.slack_idx);
  return r;
}

}  // namespace risnoma
