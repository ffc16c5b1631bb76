#pragma once

#include <vector>

#include "risnoma/affine.hpp"
#include "risnoma/conic.hpp"
#include "risnoma/metrics.hpp"
#include "risnoma/scenario.hpp"

namespace risnoma {

/// Which constraint families the transmit-beamforming subproblem carries.
struct ActiveOptions {
  bool noma = true;          // successive decoding; false = interference as noise
  bool radar = true;         // per-target SNR threshold rows
  bool sensing_chain = true; // decode-the-sensing-stream-first ordering rows
  bool pin_sensing = false;  // force the sensing column to zero

  static ActiveOptions for_profile(const ConstraintProfile& p, int L) {
    ActiveOptions o;
    o.noma = p.noma;
    o.radar = p.radar && L > 0;
    o.sensing_chain = p.noma && p.sensing_beam && L > 0;
    o.pin_sensing = !p.sensing_beam;
    return o;
  }
};

/// Anchor data for one convexification of the transmit update: the expansion
/// point, per-user exponent anchors, aggregated channel rows, and the
/// precomputed sensing directions (I ⊗ G_l)^H u_l with their thresholds.
struct P3Linearization {
  CMatrix W_anchor;            // M x (K+1)
  Eigen::VectorXd tau_hat;     // per user (entry 0 unused in NOMA mode)
  std::vector<CRowVector> H;   // K aggregated channel rows
  std::vector<CVector> a_dir;  // per target
  Eigen::VectorXd delta2;      // per target, Gamma eps^2 ||u||^2 / (Q sigma^2)
};

/// Affine lower bound of |H^H w|^2 expanded at w_hat:
/// 2 Re{w_hat^H H H^H w} - |H^H w_hat|^2. Tangent at w = w_hat and never
/// above the quadratic.
AffExpr taylor_lb_quadratic(const CRowVector& H, const CVector& w_hat, int var_base, int n);
double taylor_lb_value(const CRowVector& H, const CVector& w_hat, const CVector& w);

/// Cone form of  sum_{i<k} |H^H w_i|^2 + sigma^2 <= delta  where delta is an
/// affine expression: ||[2 H^H w_{k-1}, ..., 2 H^H w_1, 2 sigma, delta-1]||
/// <= delta + 1.
ConeBlock soc_interference_constraint(const CRowVector& H, const std::vector<int>& w_bases,
                                      double sigma, const AffExpr& delta, int n);

struct P3Problem {
  ConicProgram prog;
  ActiveOptions opts;
  int M = 0, K = 0, L = 0;
  int n_w = 0;        // real variables in the beam block
  int eta_base = -1;  // first eta index (-1 when absent)
  int tau_base = -1;
  int zeta_idx = -1;
  P3Linearization lin;
  Eigen::VectorXd warm;  // solver start derived from the anchor
};

P3Linearization build_p3_linearization(const SystemConfig& cfg, const ChannelSet& ch,
                                       const CVector& v, const std::vector<CVector>& u,
                                       const CMatrix& W_anchor, const ActiveOptions& opts);

/// Convex transmit-beamforming subproblem around W_anchor, with v and the
/// receive filters held fixed.
P3Problem build_p3(const SystemConfig& cfg, const ChannelSet& ch, const CVector& v,
                   const std::vector<CVector>& u, const CMatrix& W_anchor,
                   const ActiveOptions& opts = {});

struct P3Result {
  SolveStatus status = SolveStatus::NumericalTrouble;
  CMatrix W;
  Eigen::VectorXd eta, tau;
  double zeta1 = 0.0;
  double objective = 0.0;
  double max_residual = 0.0;
};

/// Solves the subproblem; with a feasible anchor the objective does not
/// decrease below previous_objective (ascent within solver tolerance).
P3Result solve_p3(const P3Problem& p, double previous_objective, const SolverOptions& sopts = {});

struct RestorationResult {
  SolveStatus status = SolveStatus::NumericalTrouble;
  CMatrix W;
  double slack = 0.0;  // worst signed slack achieved by the new point
};

/// One round of feasibility restoration: same constraint families, objective
/// replaced by the minimum slack over the radar / SINR / ordering rows.
RestorationResult solve_p3_restoration(const SystemConfig& cfg, const ChannelSet& ch,
                                       const CVector& v, const std::vector<CVector>& u,
                                       const CMatrix& W_anchor, const ActiveOptions& opts,
                                       const SolverOptions& sopts = {});

}  // namespace risnoma
