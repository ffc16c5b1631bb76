#pragma once

#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "risnoma/numerics.hpp"

namespace risnoma {

/// Deterministic random stream: mt19937_64 plus an explicit Box-Muller
/// normal so draws are identical across platforms and library versions.
class Rng {
 public:
  explicit Rng(uint64_t seed) : eng_(seed) {}

  double uniform() {  // (0, 1]
    return 1.0 - (eng_() >> 11) * 0x1.0p-53;
  }

  double gauss() {
    if (have_spare_) {
      have_spare_ = false;
      return spare_;
    }
    double u1 = uniform(), u2 = uniform();
    double r = std::sqrt(-2.0 * std::log(u1));
    double a = 2.0 * M_PI * u2;
    spare_ = r * std::sin(a);
    have_spare_ = true;
    return r * std::cos(a);
  }

  /// Circularly symmetric complex normal with unit power, CN(0, 1).
  cplx cgauss() { return {gauss() * M_SQRT1_2, gauss() * M_SQRT1_2}; }

  uint64_t raw() { return eng_(); }

  /// splitmix64-style mixer used to derive independent sub-streams.
  static uint64_t mix(uint64_t a, uint64_t b);

 private:
  std::mt19937_64 eng_;
  bool have_spare_ = false;
  double spare_ = 0.0;
};

struct Vec2 {
  double x = 0.0, y = 0.0;
};

struct PathlossExponents {
  double bs_ris = 1.1;
  double ris_target = 1.1;
  double ris_user = 1.2;
  double bs_target = 1.2;
  double bs_user = 1.7;
};

struct CcpPenalty {
  double rho0 = 10.0;
  double rho_growth = 3.0;
  double rho_max = 1e5;
};

struct GeometryLayout {
  Vec2 dfbs{0.0, 0.0};
  Vec2 ris{40.0, 2.0};
  std::vector<Vec2> users;
  std::vector<Vec2> targets;
};

/// All scalar system parameters. Thresholds and powers are stored in the dB
/// domain exactly as they appear in config files; the *_lin() accessors do
/// the conversion (dBm -> watts as 10^((x-30)/10), dB -> ratio as 10^(x/10)).
struct SystemConfig {
  int M = 6;   // transmit antennas
  int K = 4;   // users
  int L = 2;   // targets
  int N = 16;  // RIS elements (0 means no RIS)
  int Q = 1024;  // echo samples per detection

  std::vector<double> noise_user_dbm;   // per user, sigma_k^2
  std::vector<double> noise_radar_dbm;  // per target, eps_l^2
  std::vector<double> rcs_var;          // per target, linear sigma_l^2
  std::vector<double> snr_threshold_db;   // per target
  std::vector<double> sinr_threshold_db;  // per user
  double p_max_dbm = 40.0;
  double rician_kappa_db = 3.0;
  PathlossExponents pathloss_exponents;
  double pathloss_ref_db = -30.0;  // gain at 1 m
  GeometryLayout geometry;
  uint64_t seed = 1;
  double epsilon_conv = 1e-3;
  int max_ao_iters = 30;
  CcpPenalty ccp_penalty;
  int discrete_bits = 3;

  // solver tolerances, exposed for experiments
  double solver_feas_tol = 1e-8;
  double solver_gap_tol = 1e-8;

  double noise_user_w(int k) const;
  double noise_radar_w(int l) const;
  double gamma_lin(int l) const;  // radar SNR threshold, linear
  double rth_lin(int k) const;    // user SINR threshold, linear
  double p_max_w() const;
  double kappa_lin() const;

  /// Throws std::invalid_argument when sizes or ranges are inconsistent.
  void validate() const;

  static SystemConfig desk_preset();
  static SystemConfig paper_preset();

  /// Parse from a JSON document; unknown keys are rejected. `base` supplies
  /// defaults so partial documents act as overrides.
  static SystemConfig from_json(const std::string& text, const SystemConfig& base = desk_preset());
  std::string to_json() const;
};

/// One random draw of every channel in the system.
struct ChannelSet {
  std::vector<CVector> h_d;  // K vectors, length M (DFBS -> user)
  std::vector<CVector> h_r;  // K vectors, length N (RIS -> user)
  CMatrix G_mat;             // N x M (DFBS -> RIS)
  std::vector<CVector> g_d;  // L vectors, length M (DFBS -> target)
  std::vector<CVector> g_r;  // L vectors, length N (RIS -> target)
};

/// Linear amplitude-squared gain 10^(ref_db/10) * d^(-exponent).
/// Throws std::domain_error for non-positive distance.
double path_gain(double distance_m, double exponent, double ref_db);

/// sqrt(gain) * ( sqrt(k/(1+k)) los + sqrt(1/(1+k)) w ), w ~ CN(0, I).
/// `los` must have per-element unit modulus (norm sqrt(dim)).
CVector rician_vector(int dim, double kappa_linear, const CVector& los, double gain, Rng& rng);

/// Half-wavelength ULA steering vector for an array whose element axis has
/// direction cosine `cos_dir` towards the far point.
CVector ula_steering(int n, double cos_dir);

ChannelSet generate_channels(const SystemConfig& cfg, Rng& rng);

/// Users sorted by descending aggregated channel gain
/// ||h_d^H + h_r^H diag(v) G||^2, ties broken by original index.
std::vector<int> order_users(const ChannelSet& ch, const CVector& v);

/// Permute all per-user data so that position 0 holds the strongest user.
void apply_user_order(ChannelSet& ch, const std::vector<int>& order);
void apply_user_order(SystemConfig& cfg, const std::vector<int>& order);

}  // namespace risnoma
