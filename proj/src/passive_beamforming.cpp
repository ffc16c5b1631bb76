#include "risnoma/passive_beamforming.hpp"

#include <cmath>
#include <stdexcept>

namespace risnoma {

namespace {

std::vector<int> tin_streams(int K, bool sensing_col) {
  std::vector<int> s;
  for (int i = 0; i < K; ++i) s.push_back(i);
  if (sensing_col) s.push_back(K);
  return s;
}

}  // namespace

EffectiveChannels build_effective_channels(const ChannelSet& ch, const CMatrix& W) {
  const int K = static_cast<int>(W.cols()) - 1;
  const int N = static_cast<int>(ch.G_mat.rows());
  EffectiveChannels eff;
  eff.row.assign(ch.h_d.size(), std::vector<CRowVector>(K + 1));
  for (size_t i = 0; i < ch.h_d.size(); ++i) {
    for (int j = 0; j <= K; ++j) {
      CRowVector r(N + 1);
      if (N > 0) {
        CVector gw = ch.G_mat * W.col(j);
        r.head(N) = ch.h_r[i].adjoint() * gw.asDiagonal();
      }
      r(N) = (ch.h_d[i].adjoint() * W.col(j))(0);
      eff.row[i][j] = r;
    }
  }
  return eff;
}

double SensingAffinization::surrogate_margin(const CVector& u_l, const CVector& v) const {
  cplx lin = (u_l.adjoint() * F * v)(0);
  cplx quad = (v.adjoint() * Ltilde * v)(0);
  return d_direct + lin.real() + quad.real() - delta3;
}

double SensingAffinization::affine_margin(const CVector& v) const {
  return delta4 - (u_tilde.adjoint() * v)(0).real();
}

SensingAffinization build_sensing_affinization(const SystemConfig& cfg, const ChannelSet& ch,
                                               const CMatrix& W, const CVector& u_l,
                                               const CVector& v_hat, int l) {
  const int N = cfg.N;
  const int K = cfg.K;
  const int M = cfg.M;
  if (N <= 0) throw std::invalid_argument("sensing affinization needs N >= 1");
  SensingAffinization s;
  s.v_hat = v_hat;

  const CVector& gd = ch.g_d.at(l);
  const CVector& gr = ch.g_r.at(l);
  CMatrix D = CMatrix(gr.asDiagonal());
  CMatrix GhD = ch.G_mat.adjoint() * D;              // M x N
  CMatrix WtGtDc = W.transpose() * ch.G_mat.transpose() * D.conjugate();  // (K+1) x N

  // echo direction = (I ⊗ g_d g_d^H) vec(W) + F v + L vec(v v^T)
  s.F = kron(W.transpose() * gd.conjugate(), GhD) + kron(WtGtDc, CMatrix(gd));
  s.Lmat = kron(WtGtDc, GhD);

  // reshape contract: u^H L vec(v v^H) = v^H Ltilde v
  CVector r = s.Lmat.transpose() * u_l.conjugate();
  CMatrix R = Eigen::Map<CMatrix>(r.data(), N, N);
  s.Ltilde = R.transpose();

  // real embedding contract: Re{v^H Ltilde v} = -vbar^T Lbar vbar
  Eigen::MatrixXd re = s.Ltilde.real(), im = s.Ltilde.imag();
  s.Lbar.resize(2 * N, 2 * N);
  s.Lbar << -re, im, -im, -re;

  s.lambda = max_eig_hermitian((s.Lbar + s.Lbar.transpose()).cast<cplx>());

  s.d_direct = (u_l.adjoint() * vec(gd * gd.adjoint() * W))(0).real();
  s.delta3 = std::sqrt(cfg.gamma_lin(l) * cfg.noise_radar_w(l) * u_l.squaredNorm() /
                       (cfg.Q * cfg.rcs_var.at(l)));

  Eigen::VectorXd vbar(2 * N);
  vbar << v_hat.real(), v_hat.imag();
  Eigen::RowVectorXd rrow = vbar.transpose() * (s.Lbar + s.Lbar.transpose() -
                                                s.lambda * Eigen::MatrixXd::Identity(2 * N, 2 * N));
  // fold the real row through U = [I; -jI]: r^T vbar == Re{(r1 - j r2)^T v}
  CVector utilde_row(N);
  for (int n = 0; n < N; ++n) utilde_row(n) = cplx(rrow(n), -rrow(N + n));
  CVector uf = (u_l.adjoint() * s.F).adjoint();  // F^H u
  s.u_tilde = utilde_row.conjugate() - uf;       // row form is -u^H F + r^T U
  s.delta4 = -s.delta3 + (vbar.transpose() * s.Lbar.transpose() * vbar)(0) + s.d_direct -
             s.lambda * N;

  // construction self-checks on deterministic probes
  Rng probe(0x5eed5eedULL + static_cast<uint64_t>(l));
  for (int trial = 0; trial < 5; ++trial) {
    CVector v(N);
    for (int n = 0; n < N; ++n) v(n) = std::polar(1.0, 2.0 * M_PI * probe.uniform());
    cplx lhs = (u_l.adjoint() * s.Lmat * vec(CMatrix(v * v.adjoint())))(0);
    cplx rhs = (v.adjoint() * s.Ltilde * v)(0);
    double scale = std::max(1.0, std::abs(rhs));
    if (std::abs(lhs - rhs) > 1e-9 * scale)
      throw std::runtime_error("sensing affinization: reshape contract violated");
    Eigen::VectorXd vb(2 * N);
    vb << v.real(), v.imag();
    double emb = -(vb.transpose() * s.Lbar * vb)(0);
    if (std::abs(rhs.real() - emb) > 1e-9 * scale)
      throw std::runtime_error("sensing affinization: real embedding contract violated");
  }
  (void)M;
  return s;
}

namespace {

struct P7Builder {
  const SystemConfig& cfg;
  const PassiveOptions& opts;
  const EffectiveChannels& eff;
  const std::vector<SensingAffinization>& sensing;
  const CVector& v_hat;
  double rho;
  int K, N, L;
  int eta_base, tau_base, zeta_idx, b_base, n;
  Eigen::VectorXd tau_hat;

  P7Builder(const SystemConfig& c, const PassiveOptions& o, const EffectiveChannels& e,
            const std::vector<SensingAffinization>& sa, const CVector& vh, double rho_)
      : cfg(c), opts(o), eff(e), sensing(sa), v_hat(vh), rho(rho_), K(c.K), N(c.N), L(c.L) {
    int aux = opts.noma ? 2 * (K - 1) + 1 : 2 * K;
    eta_base = 2 * N;
    tau_base = eta_base + (opts.noma ? K - 1 : K);
    zeta_idx = opts.noma ? tau_base + (K - 1) : -1;
    b_base = 2 * N + aux;
    n = b_base + N;
    tau_hat = Eigen::VectorXd::Zero(K);
    auto streams = tin_streams(K, opts.sensing_col);
    for (int u = 0; u < K; ++u) {
      if (opts.noma && u == 0) continue;
      double den = cfg.noise_user_w(u);
      if (opts.noma) {
        for (int i = 0; i < u; ++i) den += std::norm(dot_anchor(u, i));
      } else {
        for (int i : streams)
          if (i != u) den += std::norm(dot_anchor(u, i));
      }
      tau_hat(u) = std::log(den);
    }
  }

  cplx dot_anchor(int i, int j) const {
    const CRowVector& r = eff.row[i][j];
    return (r.head(N) * v_hat)(0) + r(N);
  }

  int eta_idx(int u) const { return opts.noma ? eta_base + (u - 1) : eta_base + u; }
  int tau_idx(int u) const { return opts.noma ? tau_base + (u - 1) : tau_base + u; }

  // complex affine H_tilde(i,j)^H [v; 1] over the v variables
  CAffExpr evar(int i, int j) const {
    const CRowVector& r = eff.row[i][j];
    CAffExpr e = complex_dot(r.head(N), 0, n);
    e.re.b += r(N).real();
    e.im.b += r(N).imag();
    return e;
  }

  AffExpr tlb(int i, int j) const {
    cplx beta = dot_anchor(i, j);
    CAffExpr e = evar(i, j);
    AffExpr out = e.re * (2.0 * beta.real()) + e.im * (2.0 * beta.imag());
    out.b -= std::norm(beta);
    return out;
  }

  AffExpr delta1(int u) const {
    double th = tau_hat(u);
    double s = std::exp(th);
    AffExpr e = AffExpr::variable(n, tau_idx(u), s);
    e.b = s * (1.0 - th);
    return e;
  }

  void build(ConicProgram& prog) const {
    prog.num_vars = n;
    prog.objective = Eigen::VectorXd::Zero(n);
    for (int u = opts.noma ? 1 : 0; u < K; ++u) {
      prog.objective(eta_idx(u)) = 1.0;
      prog.objective(tau_idx(u)) = -1.0;
    }
    if (opts.noma) prog.objective(zeta_idx) = 1.0;
    for (int b = 0; b < N; ++b) prog.objective(b_base + b) = -rho;

    auto streams = tin_streams(K, opts.sensing_col);

    if (opts.noma) {
      for (int u = 1; u < K; ++u) {
        AffExpr num = AffExpr::constant(n, cfg.noise_user_w(u));
        for (int i = 0; i <= u; ++i) num += tlb(u, i);
        prog.blocks.push_back(exp_le_affine(n, eta_idx(u), num));
      }
      prog.blocks.push_back(
          exp_le_affine(n, zeta_idx, tlb(0, 0).plus_const(cfg.noise_user_w(0))));
      std::vector<AffExpr> nonneg;
      for (int u = 1; u < K; ++u) {
        std::vector<CAffExpr> zs;
        for (int i = 0; i < u; ++i) zs.push_back(evar(u, i));
        prog.blocks.push_back(
            quad_le_affine(zs, {std::sqrt(cfg.noise_user_w(u))}, delta1(u)));
        nonneg.push_back(delta1(u));
      }
      if (!nonneg.empty()) prog.blocks.push_back(make_block(ConeType::Nonnegative, nonneg));

      for (int k = 1; k < K; ++k) {
        double sr = std::sqrt(cfg.rth_lin(k));
        for (int j = 0; j <= k; ++j) {
          std::vector<CAffExpr> zs;
          for (int i = 0; i < k; ++i) {
            CAffExpr z = evar(j, i);
            zs.push_back({z.re * sr, z.im * sr});
          }
          prog.blocks.push_back(
              quad_le_affine(zs, {sr * std::sqrt(cfg.noise_user_w(j))}, tlb(j, k)));
        }
      }

      for (int u = 0; u < K; ++u) {
        if (opts.sensing_chain)
          prog.blocks.push_back(quad_le_affine({evar(u, K - 1)}, {}, tlb(u, K)));
        for (int i = 0; i + 1 < K; ++i)
          prog.blocks.push_back(quad_le_affine({evar(u, i)}, {}, tlb(u, i + 1)));
      }
    } else {
      std::vector<AffExpr> nonneg;
      for (int u = 0; u < K; ++u) {
        AffExpr num = AffExpr::constant(n, cfg.noise_user_w(u));
        for (int i : streams) num += tlb(u, i);
        prog.blocks.push_back(exp_le_affine(n, eta_idx(u), num));
        std::vector<CAffExpr> zs;
        for (int i : streams)
          if (i != u) zs.push_back(evar(u, i));
        prog.blocks.push_back(
            quad_le_affine(zs, {std::sqrt(cfg.noise_user_w(u))}, delta1(u)));
        nonneg.push_back(delta1(u));
        double sr = std::sqrt(cfg.rth_lin(u));
        std::vector<CAffExpr> zr;
        for (int i : streams)
          if (i != u) {
            CAffExpr z = evar(u, i);
            zr.push_back({z.re * sr, z.im * sr});
          }
        prog.blocks.push_back(
            quad_le_affine(zr, {sr * std::sqrt(cfg.noise_user_w(u))}, tlb(u, u)));
      }
      prog.blocks.push_back(make_block(ConeType::Nonnegative, nonneg));
    }

    if (opts.radar) {
      std::vector<AffExpr> rows;
      for (int l = 0; l < L; ++l) {
        CAffExpr ut = complex_dot(sensing[l].u_tilde.adjoint(), 0, n);
        AffExpr row = AffExpr::constant(n, sensing[l].delta4) - ut.re;
        rows.push_back(row);
      }
      prog.blocks.push_back(make_block(ConeType::Nonnegative, rows));
    }

    // unit modulus, penalty form: |v_n|^2 <= 1 + b_n and the tangent lower
    // bound 2 Re{vhat_n^* v_n} - 1 >= 1 - b_n, with b_n >= 0
    std::vector<AffExpr> lowers, bnn;
    for (int m = 0; m < N; ++m) {
      CAffExpr vn{AffExpr::variable(n, 2 * m), AffExpr::variable(n, 2 * m + 1)};
      AffExpr t = AffExpr::variable(n, b_base + m).plus_const(1.0);
      prog.blocks.push_back(quad_le_affine({vn}, {}, t));
      AffExpr low = vn.re * (2.0 * v_hat(m).real()) + vn.im * (2.0 * v_hat(m).imag());
      low.b = -std::norm(v_hat(m)) - 1.0;
      low += AffExpr::variable(n, b_base + m);
      lowers.push_back(low);
      bnn.push_back(AffExpr::variable(n, b_base + m));
    }
    prog.blocks.push_back(make_block(ConeType::Nonnegative, lowers));
    prog.blocks.push_back(make_block(ConeType::Nonnegative, bnn));
  }

  Eigen::VectorXd warm_start() const {
    Eigen::VectorXd x = Eigen::VectorXd::Zero(n);
    for (int m = 0; m < N; ++m) {
      x(2 * m) = v_hat(m).real();
      x(2 * m + 1) = v_hat(m).imag();
    }
    const double off = 1e-4;
    auto streams = tin_streams(K, opts.sensing_col);
    for (int u = 0; u < K; ++u) {
      if (opts.noma && u == 0) continue;
      double num = cfg.noise_user_w(u);
      if (opts.noma) {
        for (int i = 0; i <= u; ++i) num += std::norm(dot_anchor(u, i));
      } else {
        for (int i : streams) num += std::norm(dot_anchor(u, i));
      }
      x(eta_idx(u)) = std::log(num) - off;
      x(tau_idx(u)) = tau_hat(u) + off;
    }
    if (opts.noma)
      x(zeta_idx) = std::log(std::norm(dot_anchor(0, 0)) + cfg.noise_user_w(0)) - off;
    for (int m = 0; m < N; ++m) x(b_base + m) = 1e-6;
    return x;
  }
};

}  // namespace

P7Problem build_p7(const SystemConfig& cfg, const ChannelSet& ch, const CMatrix& W,
                   const std::vector<CVector>& u, const CVector& v_hat, double rho,
                   const PassiveOptions& opts) {
  if (cfg.N <= 0) throw std::invalid_argument("build_p7: N must be positive");
  if (v_hat.size() != cfg.N) throw std::invalid_argument("build_p7: anchor has wrong length");
  P7Problem p;
  p.opts = opts;
  p.N = cfg.N;
  p.K = cfg.K;
  p.L = cfg.L;
  p.v_hat = v_hat;
  p.rho = rho;
  p.eff = build_effective_channels(ch, W);
  if (opts.radar)
    for (int l = 0; l < cfg.L; ++l)
      p.sensing.push_back(build_sensing_affinization(cfg, ch, W, u.at(l), v_hat, l));
  P7Builder b(cfg, p.opts, p.eff, p.sensing, p.v_hat, rho);
  b.build(p.prog);
  p.eta_base = b.eta_base;
  p.tau_base = b.tau_base;
  p.zeta_idx = b.zeta_idx;
  p.b_base = b.b_base;
  p.warm = b.warm_start();
  p.prog.validate();
  return p;
}

P7Result solve_p7(const P7Problem& p, double previous_objective, const SolverOptions& sopts) {
  (void)previous_objective;
  ConicSolution s = solve_conic(p.prog, sopts, p.warm);
  P7Result r;
  r.status = s.status;
  r.max_residual = s.max_residual;
  if (s.status != SolveStatus::Optimal) return r;
  const int N = p.N, K = p.K;
  r.v_raw.resize(N);
  r.v.resize(N);
  for (int m = 0; m < N; ++m) {
    cplx vn(s.primal(2 * m), s.primal(2 * m + 1));
    r.v_raw(m) = vn;
    r.v(m) = std::abs(vn) > 1e-12 ? vn / std::abs(vn) : p.v_hat(m);
  }
  double pen = 0.0;
  r.max_slack = 0.0;
  for (int m = 0; m < N; ++m) {
    double b = s.primal(p.b_base + m);
    pen += b;
    r.max_slack = std::max(r.max_slack, b);
  }
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
  r.objective = s.objective_value + p.rho * pen;
  return r;
}

}  // namespace risnoma
