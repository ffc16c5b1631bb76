#include "risnoma/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>
#include <stdexcept>

namespace risnoma {

namespace {

// |H_k^H w_j|^2 for all precomputed rows.
double beam_power(const CRowVector& hk, const CVector& w) {
  cplx z = hk * w;
  return std::norm(z);
}

}  // namespace

CRowVector aggregate_user_channel(const ChannelSet& ch, const CVector& v, int k) {
  CRowVector row = ch.h_d.at(k).adjoint();
  if (v.size() > 0) row += ch.h_r.at(k).adjoint() * v.asDiagonal() * ch.G_mat;
  return row;
}

double sinr_decode(const SystemConfig& cfg, const ChannelSet& ch, const Design& d, int k, int j) {
  const int K = cfg.K;
  if (k < 0 || k >= K) throw std::domain_error("sinr_decode: bad user index");
  if (j < k) throw std::domain_error("sinr_decode: decoding order violation (j < k)");
  if (j > K) throw std::domain_error("sinr_decode: bad stream index");
  CRowVector hk = aggregate_user_channel(ch, d.v, k);
  double noise = cfg.noise_user_w(k);
  double num = beam_power(hk, d.W.col(j));
  double den = noise;
  // j == K decodes the sensing stream against all user signals; otherwise
  // streams 0..j-1 are still undecoded interference.
  int upto = (j == K) ? K : j;
  for (int i = 0; i < upto; ++i) den += beam_power(hk, d.W.col(i));
  return num / den;
}

double sum_rate(const SystemConfig& cfg, const ChannelSet& ch, const Design& d) {
  double s = 0.0;
  for (int k = 0; k < cfg.K; ++k) s += std::log2(1.0 + sinr_decode(cfg, ch, d, k, k));
  return s;
}

CMatrix composite_target_matrix(const ChannelSet& ch, const CVector& v, int l) {
  CVector a = ch.g_d.at(l);
  CRowVector b = ch.g_d.at(l).adjoint();
  if (v.size() > 0) {
    a += ch.G_mat.adjoint() * v.asDiagonal() * ch.g_r.at(l);
    b += ch.g_r.at(l).adjoint() * v.asDiagonal() * ch.G_mat;
  }
  return a * b;
}

double radar_snr_lb(const SystemConfig& cfg, const ChannelSet& ch, const Design& d, int l) {
  CMatrix gl = composite_target_matrix(ch, d.v, l);
  CVector q = vec(gl * d.W);  // (I ⊗ G_l) vec(W)
  cplx z = d.u.at(l).dot(q);  // u^H q
  double uu = d.u.at(l).squaredNorm();
  return cfg.Q * cfg.rcs_var.at(l) * std::norm(z) / (cfg.noise_radar_w(l) * uu);
}

double radar_snr_sample(const SystemConfig& cfg, const ChannelSet& ch, const Design& d, int l,
                        const CMatrix& S) {
  CMatrix gl = composite_target_matrix(ch, d.v, l);
  CMatrix corr = S * S.adjoint();  // (K+1) x (K+1)
  // (SS^H ⊗ G_l) vec(W) = vec(G_l W (SS^H)^T)
  CVector q = vec(gl * d.W * corr.transpose());
  cplx z = d.u.at(l).dot(q);
  double uu = d.u.at(l).squaredNorm();
  return cfg.rcs_var.at(l) * std::norm(z) / (cfg.Q * cfg.noise_radar_w(l) * uu);
}

McEstimate radar_snr_mc(const SystemConfig& cfg, const ChannelSet& ch, const Design& d, int l,
                        int trials, Rng& rng) {
  if (trials < 100) throw std::invalid_argument("radar_snr_mc: trials must be >= 100");
  CMatrix gl = composite_target_matrix(ch, d.v, l);
  CMatrix glw = gl * d.W;
  double uu = d.u.at(l).squaredNorm();
  double scale = cfg.rcs_var.at(l) / (cfg.Q * cfg.noise_radar_w(l) * uu);
  double sum = 0.0, sum2 = 0.0;
  CMatrix S(cfg.K + 1, cfg.Q);
  for (int t = 0; t < trials; ++t) {
    for (int i = 0; i < S.rows(); ++i)
      for (int q = 0; q < S.cols(); ++q) S(i, q) = rng.cgauss();
    CVector y = vec(glw * (S * S.adjoint()).transpose());
    double val = scale * std::norm(d.u.at(l).dot(y));
    sum += val;
    sum2 += val * val;
  }
  McEstimate est;
  est.mean = sum / trials;
  double var = std::max(0.0, sum2 / trials - est.mean * est.mean);
  est.stderr_ = std::sqrt(var / trials);
  return est;
}

double FeasibilityReport::worst() const {
  double w = std::numeric_limits<double>::infinity();
  for (const auto& f : families) w = std::min(w, f.worst);
  return w;
}

std::string FeasibilityReport::worst_family() const {
  double w = std::numeric_limits<double>::infinity();
  std::string name;
  for (const auto& f : families)
    if (f.worst < w) {
      w = f.worst;
      name = f.family;
    }
  return name;
}

bool FeasibilityReport::feasible() const { return worst() >= -tol; }

FeasibilityReport check_feasible(const SystemConfig& cfg, const ChannelSet& ch, const Design& d,
                                 double tol) {
  return check_feasible(cfg, ch, d, tol, ConstraintProfile::full());
}

FeasibilityReport check_feasible(const SystemConfig& cfg, const ChannelSet& ch, const Design& d,
                                 double tol, const ConstraintProfile& profile) {
  const int K = cfg.K;
  FeasibilityReport rep;
  rep.tol = tol;
  auto inf = std::numeric_limits<double>::infinity();

  if (profile.radar) {
    double worst = inf;
    for (int l = 0; l < cfg.L; ++l)
      worst = std::min(worst, radar_snr_lb(cfg, ch, d, l) / cfg.gamma_lin(l) - 1.0);
    rep.families.push_back({"radar", worst});
  }

  {
    double worst = inf;
    if (profile.noma) {
      // every decoder of stream k (including user k itself) needs gamma >= r_k
      for (int k = 1; k < K; ++k)
        for (int j = 0; j <= k; ++j)
          worst = std::min(worst, sinr_decode(cfg, ch, d, j, k) / cfg.rth_lin(k) - 1.0);
    } else {
      // interference-as-noise: per-user own SINR only
      for (int k = 0; k < K; ++k) {
        CRowVector hk = aggregate_user_channel(ch, d.v, k);
        double num = beam_power(hk, d.W.col(k));
        double den = cfg.noise_user_w(k);
        for (int i = 0; i <= K; ++i) {
          if (i == k || (i == K && !profile.sensing_beam)) continue;
          den += beam_power(hk, d.W.col(i));
        }
        worst = std::min(worst, (num / den) / cfg.rth_lin(k) - 1.0);
      }
    }
    rep.families.push_back({"sinr", worst});
  }

  {
    double worst = 0.0;
    for (int n = 0; n < d.v.size(); ++n)
      worst = std::min(worst, -std::abs(std::abs(d.v(n)) - 1.0));
    rep.families.push_back({"modulus", worst});
  }

  rep.families.push_back({"power", 1.0 - d.W.squaredNorm() / cfg.p_max_w()});

  {
    double worst = 0.0;
    for (const auto& ul : d.u) worst = std::min(worst, -std::abs(ul.norm() - 1.0));
    rep.families.push_back({"filter", worst});
  }

  if (profile.noma) {
    // decode-order chains: at every user, the sensing stream is strongest,
    // then streams K-1 down to k, then everything below stream k.
    double worst = inf;
    for (int k = 0; k < K; ++k) {
      CRowVector hk = aggregate_user_channel(ch, d.v, k);
      double noise = cfg.noise_user_w(k);
      std::vector<double> p(K + 1);
      for (int i = 0; i <= K; ++i) p[i] = beam_power(hk, d.W.col(i));
      auto resid = [&](double hi, double lo) { return (hi - lo) / (hi + lo + noise); };
      if (profile.sensing_beam) worst = std::min(worst, resid(p[K], p[K - 1]));
      for (int i = K - 1; i > k; --i) worst = std::min(worst, resid(p[i], p[i - 1]));
      for (int j = 0; j < k; ++j) worst = std::min(worst, resid(p[k], p[j]));
    }
    if (worst != inf) rep.families.push_back({"sic", worst});
  }

  return rep;
}

RateReport rate_report(const SystemConfig& cfg, const ChannelSet& ch, const Design& d, double tol) {
  RateReport r;
  const int K = cfg.K;
  r.gamma.resize(K);
  r.rate.resize(K);
  r.gamma_sensing_decode.resize(K);
  r.gamma_decode.assign(K, {});
  for (int k = 0; k < K; ++k) {
    r.gamma[k] = sinr_decode(cfg, ch, d, k, k);
    r.rate[k] = std::log2(1.0 + r.gamma[k]);
    r.gamma_sensing_decode[k] = sinr_decode(cfg, ch, d, k, K);
    for (int j = k; j < K; ++j) r.gamma_decode[k].push_back(sinr_decode(cfg, ch, d, k, j));
    r.sum_rate += r.rate[k];
  }
  r.snr_lb.resize(cfg.L);
  for (int l = 0; l < cfg.L; ++l) r.snr_lb[l] = radar_snr_lb(cfg, ch, d, l);
  r.feasibility = check_feasible(cfg, ch, d, tol);
  return r;
}

std::string rate_report_csv(const RateReport& r) {
  std::ostringstream os;
  os.precision(12);
  os << "entity,index,sinr,rate,snr_lb,worst_decode_sinr\n";
  for (size_t k = 0; k < r.gamma.size(); ++k) {
    double worst_decode = r.gamma[k];
    for (double g : r.gamma_decode[k]) worst_decode = std::min(worst_decode, g);
    os << "user," << k << "," << r.gamma[k] << "," << r.rate[k] << ",," << worst_decode << "\n";
  }
  for (size_t l = 0; l < r.snr_lb.size(); ++l)
    os << "target," << l << ",,," << r.snr_lb[l] << ",\n";
  return os.str();
}

double beampattern_at(const SystemConfig& cfg, const ChannelSet& ch, const Design& d, double x,
                      double y) {
  const auto& geo = cfg.geometry;
  auto probe = [&](const Vec2& from, int n, double exponent) -> CVector {
    double dx = x - from.x, dy = y - from.y;
    double r = std::max(0.1, std::hypot(dx, dy));
    double g = path_gain(r, exponent, cfg.pathloss_ref_db);
    return std::sqrt(g) * ula_steering(n, dy / r);
  };
  CRowVector row = probe(geo.dfbs, cfg.M, cfg.pathloss_exponents.bs_user).adjoint();
  if (cfg.N > 0 && d.v.size() > 0)
    row += probe(geo.ris, cfg.N, cfg.pathloss_exponents.ris_user).adjoint() * d.v.asDiagonal() *
           ch.G_mat;
  return (row * d.W).squaredNorm();
}

Eigen::MatrixXd beampattern(const SystemConfig& cfg, const ChannelSet& ch, const Design& d,
                            const GridSpec& grid) {
  Eigen::MatrixXd bp(grid.steps, grid.steps);
  for (int iy = 0; iy < grid.steps; ++iy) {
    double y = grid.steps == 1 ? grid.y_min
                               : grid.y_min + (grid.y_max - grid.y_min) * iy / (grid.steps - 1.0);
    for (int ix = 0; ix < grid.steps; ++ix) {
      double x = grid.steps == 1 ? grid.x_min
                                 : grid.x_min + (grid.x_max - grid.x_min) * ix / (grid.steps - 1.0);
      bp(iy, ix) = beampattern_at(cfg, ch, d, x, y);
    }
  }
  return bp;
}

}  // namespace risnoma
