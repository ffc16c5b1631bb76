#pragma once

#include <vector>

#include "risnoma/affine.hpp"
#include "risnoma/conic.hpp"
#include "risnoma/metrics.hpp"
#include "risnoma/scenario.hpp"

namespace risnoma {

/// Effective per-pair channels for the phase update: rows of length N+1 with
/// row(i,j) . [v; 1] = (h_{d,i}^H + h_{r,i}^H diag(v) G) w_j.
struct EffectiveChannels {
  std::vector<std::vector<CRowVector>> row;  // [user i][stream j], j in 0..K
};

EffectiveChannels build_effective_channels(const ChannelSet& ch, const CMatrix& W);

/// Everything needed to turn the radar SNR constraint of one target into an
/// affine constraint in v around the anchor v_hat.
///
/// The echo direction decomposes into a v-independent direct part, a linear
/// part F v and a quadratic part L vec(v v^T). The quadratic contribution
/// enters the surrogate through the sesquilinear reading pinned by two
/// numerical contracts:
///   u^H L vec(v v^H) =  v^H Ltilde v        (reshape contract)
///   Re{v^H Ltilde v} = -vbar^T Lbar vbar    (real embedding contract)
/// with vbar = [Re v; Im v] and lambda the largest eigenvalue of
/// (Lbar + Lbar^T). The affine constraint Re{u_tilde^H v} <= delta4 is tight
/// at v = v_hat and implies the surrogate constraint on the unit torus.
struct SensingAffinization {
  CMatrix F;              // M(K+1) x N
  CMatrix Lmat;           // M(K+1) x N^2
  CMatrix Ltilde;         // N x N
  Eigen::MatrixXd Lbar;   // 2N x 2N, real
  double lambda = 0.0;
  double delta3 = 0.0;
  double delta4 = 0.0;
  CVector u_tilde;        // length N
  double d_direct = 0.0;  // Re{u^H (I ⊗ g_d g_d^H) vec(W)}
  CVector v_hat;

  /// Surrogate constraint value E(v) - delta3 with
  /// E(v) = d_direct + Re{u^H F v} + Re{v^H Ltilde v}.
  double surrogate_margin(const CVector& u_l, const CVector& v) const;
  /// Affinized constraint value delta4 - Re{u_tilde^H v}.
  double affine_margin(const CVector& v) const;
};

/// Throws std::runtime_error when the construction self-checks fail.
SensingAffinization build_sensing_affinization(const SystemConfig& cfg, const ChannelSet& ch,
                                               const CMatrix& W, const CVector& u_l,
                                               const CVector& v_hat, int l);

struct PassiveOptions {
  bool noma = true;
  bool radar = true;
  bool sensing_chain = true;
  bool sensing_col = true;  // sensing stream carries power (interference in TIN mode)

  static PassiveOptions for_profile(const ConstraintProfile& p, int L) {
    PassiveOptions o;
    o.noma = p.noma;
    o.radar = p.radar && L > 0;
    o.sensing_chain = p.noma && p.sensing_beam && L > 0;
    o.sensing_col = p.sensing_beam;
    return o;
  }
};

struct P7Problem {
  ConicProgram prog;
  PassiveOptions opts;
  int N = 0, K = 0, L = 0;
  int eta_base = -1, tau_base = -1, zeta_idx = -1, b_base = -1;
  EffectiveChannels eff;
  std::vector<SensingAffinization> sensing;
  CVector v_hat;
  double rho = 0.0;
  Eigen::VectorXd warm;
};

/// Convex phase-update subproblem around v_hat with W and the filters fixed;
/// the unit-modulus constraints are relaxed with penalized slacks b_n.
P7Problem build_p7(const SystemConfig& cfg, const ChannelSet& ch, const CMatrix& W,
                   const std::vector<CVector>& u, const CVector& v_hat, double rho,
                   const PassiveOptions& opts = {});

struct P7Result {
  SolveStatus status = SolveStatus::NumericalTrouble;
  CVector v;      // projected to exact unit modulus
  CVector v_raw;  // solver output before projection
  Eigen::VectorXd eta, tau;
  double zeta1 = 0.0;
  double objective = 0.0;  // surrogate value without the penalty term
  double max_slack = 0.0;  // largest modulus slack b_n
  double max_residual = 0.0;
};

P7Result solve_p7(const P7Problem& p, double previous_objective, const SolverOptions& sopts = {});

}  // namespace risnoma
