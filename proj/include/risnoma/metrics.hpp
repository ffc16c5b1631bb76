#pragma once

#include <string>
#include <vector>

#include "risnoma/numerics.hpp"
#include "risnoma/scenario.hpp"

namespace risnoma {

/// A candidate solution. W has K+1 columns: user beams w_0..w_{K-1} and the
/// sensing beam in the last column. Throughout the library users are indexed
/// 0-based with index 0 the strongest (first-decoded-last) user, and the
/// sensing stream is addressed by index K.
struct Design {
  CMatrix W;                // M x (K+1)
  CVector v;                // N phase coefficients, unit modulus
  std::vector<CVector> u;   // L receive filters, length M*(K+1), unit norm
  Eigen::VectorXd eta;      // auxiliary exponents (per user subset)
  Eigen::VectorXd tau;
  double zeta1 = 0.0;
};

/// Index of the sensing stream in W and in decode orders.
inline int sensing_index(const SystemConfig& cfg) { return cfg.K; }

/// H_k^H = h_{d,k}^H + h_{r,k}^H diag(v) G, a 1 x M row.
CRowVector aggregate_user_channel(const ChannelSet& ch, const CVector& v, int k);

/// SINR at user k when decoding stream j (0-based). j == k is the user's own
/// signal, k < j < K a weaker user's signal, j == K the sensing signal.
/// Throws std::domain_error when j < k (decoding order violation).
double sinr_decode(const SystemConfig& cfg, const ChannelSet& ch, const Design& d, int k, int j);

double sum_rate(const SystemConfig& cfg, const ChannelSet& ch, const Design& d);

/// Rank-1 two-hop echo matrix of target l,
/// (g_d + G^H diag(v) g_r)(g_d^H + g_r^H diag(v) G), exactly as modeled.
CMatrix composite_target_matrix(const ChannelSet& ch, const CVector& v, int l);

/// Deterministic radar SNR lower bound
/// Q sigma_l^2 |u^H (I ⊗ G_l) vec(W)|^2 / (eps_l^2 u^H u).
double radar_snr_lb(const SystemConfig& cfg, const ChannelSet& ch, const Design& d, int l);

struct McEstimate {
  double mean = 0.0;
  double stderr_ = 0.0;
};

/// Monte-Carlo estimate of the radar SNR with random unit-power Gaussian
/// symbol blocks S of Q samples (the quantity the lower bound understates).
McEstimate radar_snr_mc(const SystemConfig& cfg, const ChannelSet& ch, const Design& d, int l,
                        int trials, Rng& rng);

/// Same statistic for one externally supplied symbol block (test hook).
double radar_snr_sample(const SystemConfig& cfg, const ChannelSet& ch, const Design& d, int l,
                        const CMatrix& S);

/// Which constraint families to evaluate; baselines relax some of them.
struct ConstraintProfile {
  bool radar = true;       // per-target SNR thresholds
  bool noma = true;        // SIC ordering + decode SINR chains
  bool sensing_beam = true;  // sensing stream exists (column K active)
  static ConstraintProfile full() { return {}; }
};

struct FamilyResidual {
  std::string family;
  double worst;  // signed, >= 0 when satisfied; dimensionless
};

struct FeasibilityReport {
  std::vector<FamilyResidual> families;
  double tol = 0.0;
  double worst() const;
  std::string worst_family() const;
  bool feasible() const;
};

/// Evaluates every constraint of the joint design problem on a candidate:
/// radar SNR thresholds, decode-SINR chains, RIS modulus, total power, filter
/// norms and the SIC ordering chains. Residuals are normalized per family.
FeasibilityReport check_feasible(const SystemConfig& cfg, const ChannelSet& ch, const Design& d,
                                 double tol);
FeasibilityReport check_feasible(const SystemConfig& cfg, const ChannelSet& ch, const Design& d,
                                 double tol, const ConstraintProfile& profile);

struct RateReport {
  std::vector<double> gamma;        // own SINR per user
  std::vector<double> rate;         // log2(1 + gamma)
  std::vector<double> gamma_sensing_decode;        // per user, sensing stream
  std::vector<std::vector<double>> gamma_decode;   // [k][j-k] for j in k..K-1
  double sum_rate = 0.0;
  std::vector<double> snr_lb;       // per target
  FeasibilityReport feasibility;
};

RateReport rate_report(const SystemConfig& cfg, const ChannelSet& ch, const Design& d, double tol = 1e-5);

/// CSV with one row per entity; header
/// entity,index,sinr,rate,snr_lb,worst_decode_sinr
std::string rate_report_csv(const RateReport& r);

struct GridSpec {
  double x_min, x_max, y_min, y_max;
  int steps;
};

/// Radiated energy ||(h_d^H(x,y) + h_r^H(x,y) diag(v) G) W||^2 on a grid of
/// probe points. Probe channels are deterministic line-of-sight with the
/// user-link path-loss exponents; probe distances are floored at 0.1 m.
Eigen::MatrixXd beampattern(const SystemConfig& cfg, const ChannelSet& ch, const Design& d,
                            const GridSpec& grid);

/// Beampattern at one probe point.
double beampattern_at(const SystemConfig& cfg, const ChannelSet& ch, const Design& d, double x,
                      double y);

}  // namespace risnoma
