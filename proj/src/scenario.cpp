#include "risnoma/scenario.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include <json.hpp>

namespace risnoma {

namespace {

double db_to_lin(double db) { return std::pow(10.0, db / 10.0); }
double dbm_to_w(double dbm) { return std::pow(10.0, (dbm - 30.0) / 10.0); }

double dist(const Vec2& a, const Vec2& b) {
  return std::hypot(a.x - b.x, a.y - b.y);
}

// Direction cosine of the a->b direction against the array element axis.
// Both the DFBS and the RIS arrays are laid out along the y axis.
double dir_cos(const Vec2& from, const Vec2& to) {
  double d = dist(from, to);
  if (d <= 0.0) return 0.0;
  return (to.y - from.y) / d;
}

uint64_t splitmix64(uint64_t z) {
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

}  // namespace

uint64_t Rng::mix(uint64_t a, uint64_t b) { return splitmix64(a ^ splitmix64(b)); }

double SystemConfig::noise_user_w(int k) const { return dbm_to_w(noise_user_dbm.at(k)); }
double SystemConfig::noise_radar_w(int l) const { return dbm_to_w(noise_radar_dbm.at(l)); }
double SystemConfig::gamma_lin(int l) const { return db_to_lin(snr_threshold_db.at(l)); }
double SystemConfig::rth_lin(int k) const { return db_to_lin(sinr_threshold_db.at(k)); }
double SystemConfig::p_max_w() const { return dbm_to_w(p_max_dbm); }
double SystemConfig::kappa_lin() const { return db_to_lin(rician_kappa_db); }

void SystemConfig::validate() const {
  // L = 0 and N = 0 describe sensing-free and RIS-free degenerate setups
  if (M < 1 || K < 1 || L < 0 || N < 0 || Q < 1)
    throw std::invalid_argument("config: M,K >= 1, L,N >= 0, Q >= 1 required");
  auto need = [&](size_t got, size_t want, const char* name) {
    if (got != want) throw std::invalid_argument(std::string("config: bad length for ") + name);
  };
  need(noise_user_dbm.size(), K, "noise_user_dbm");
  need(sinr_threshold_db.size(), K, "sinr_threshold_db");
  need(noise_radar_dbm.size(), L, "noise_radar_dbm");
  need(rcs_var.size(), L, "rcs_var");
  need(snr_threshold_db.size(), L, "snr_threshold_db");
  need(geometry.users.size(), K, "geometry.users");
  need(geometry.targets.size(), L, "geometry.targets");
  for (double v : rcs_var)
    if (!(v > 0.0)) throw std::invalid_argument("config: rcs_var must be positive");
  if (!(p_max_w() > 0.0)) throw std::invalid_argument("config: p_max must be positive");
  if (max_ao_iters < 1) throw std::invalid_argument("config: max_ao_iters >= 1");
  if (discrete_bits < 1) throw std::invalid_argument("config: discrete_bits >= 1");
}

SystemConfig SystemConfig::desk_preset() {
  SystemConfig c;
  c.M = 6;
  c.K = 4;
  c.L = 2;
  c.N = 16;
  c.Q = 1024;
  c.noise_user_dbm.assign(c.K, -90.0);
  c.noise_radar_dbm.assign(c.L, -90.0);
  c.rcs_var.assign(c.L, 1.0);
  c.snr_threshold_db.assign(c.L, 10.0);
  c.sinr_threshold_db.assign(c.K, 5.0);
  c.p_max_dbm = 40.0;
  c.rician_kappa_db = 3.0;
  c.pathloss_ref_db = -30.0;
  c.geometry.dfbs = {0.0, 0.0};
  c.geometry.ris = {40.0, 2.0};
  // users 8 m and targets 4 m from the RIS, spread in angle
  const double ux = c.geometry.ris.x, uy = c.geometry.ris.y;
  auto on_circle = [&](double r, double deg) {
    double a = deg * M_PI / 180.0;
    return Vec2{ux + r * std::cos(a), uy + r * std::sin(a)};
  };
  c.geometry.users = {on_circle(8.0, -75.0), on_circle(8.0, -30.0),
                      on_circle(8.0, 25.0), on_circle(8.0, 70.0)};
  c.geometry.targets = {on_circle(4.0, -50.0), on_circle(4.0, 45.0)};
  c.seed = 1;
  c.epsilon_conv = 1e-3;
  c.max_ao_iters = 30;
  c.discrete_bits = 3;
  return c;
}

SystemConfig SystemConfig::paper_preset() {
  SystemConfig c = desk_preset();
  c.N = 60;
  return c;
}

namespace {

using nlohmann::json;

std::vector<double> per_entity(const json& j, int count, const char* name) {
  std::vector<double> out;
  if (j.is_number()) {
    out.assign(count, j.get<double>());
  } else if (j.is_array()) {
    out = j.get<std::vector<double>>();
  } else {
    throw std::invalid_argument(std::string("config: ") + name + " must be number or array");
  }
  return out;
}

Vec2 to_vec2(const json& j) {
  if (!j.is_array() || j.size() != 2) throw std::invalid_argument("config: position must be [x, y]");
  return Vec2{j[0].get<double>(), j[1].get<double>()};
}

json from_vec2(const Vec2& v) { return json::array({v.x, v.y}); }

}  // namespace

SystemConfig SystemConfig::from_json(const std::string& text, const SystemConfig& base) {
  json j = json::parse(text);
  SystemConfig c = base;
  for (auto it = j.begin(); it != j.end(); ++it) {
    const std::string& k = it.key();
    const json& v = it.value();
    if (k == "M") c.M = v.get<int>();
    else if (k == "K") c.K = v.get<int>();
    else if (k == "L") c.L = v.get<int>();
    else if (k == "N") c.N = v.get<int>();
    else if (k == "Q") c.Q = v.get<int>();
    else if (k == "p_max_dbm") c.p_max_dbm = v.get<double>();
    else if (k == "rician_kappa_db") c.rician_kappa_db = v.get<double>();
    else if (k == "pathloss_ref_db") c.pathloss_ref_db = v.get<double>();
    else if (k == "seed") c.seed = v.get<uint64_t>();
    else if (k == "epsilon_conv") c.epsilon_conv = v.get<double>();
    else if (k == "max_ao_iters") c.max_ao_iters = v.get<int>();
    else if (k == "discrete_bits") c.discrete_bits = v.get<int>();
    else if (k == "solver_feas_tol") c.solver_feas_tol = v.get<double>();
    else if (k == "solver_gap_tol") c.solver_gap_tol = v.get<double>();
    else if (k == "ccp_penalty") {
      c.ccp_penalty.rho0 = v.value("rho0", c.ccp_penalty.rho0);
      c.ccp_penalty.rho_growth = v.value("rho_growth", c.ccp_penalty.rho_growth);
      c.ccp_penalty.rho_max = v.value("rho_max", c.ccp_penalty.rho_max);
    } else if (k == "pathloss_exponents") {
      c.pathloss_exponents.bs_ris = v.value("bs_ris", c.pathloss_exponents.bs_ris);
      c.pathloss_exponents.ris_target = v.value("ris_target", c.pathloss_exponents.ris_target);
      c.pathloss_exponents.ris_user = v.value("ris_user", c.pathloss_exponents.ris_user);
      c.pathloss_exponents.bs_target = v.value("bs_target", c.pathloss_exponents.bs_target);
      c.pathloss_exponents.bs_user = v.value("bs_user", c.pathloss_exponents.bs_user);
    } else if (k == "geometry") {
      if (v.contains("dfbs")) c.geometry.dfbs = to_vec2(v["dfbs"]);
      if (v.contains("ris")) c.geometry.ris = to_vec2(v["ris"]);
      if (v.contains("users")) {
        c.geometry.users.clear();
        for (const auto& u : v["users"]) c.geometry.users.push_back(to_vec2(u));
      }
      if (v.contains("targets")) {
        c.geometry.targets.clear();
        for (const auto& t : v["targets"]) c.geometry.targets.push_back(to_vec2(t));
      }
    } else if (k == "noise_user_dbm" || k == "sinr_threshold_db" ||
               k == "noise_radar_dbm" || k == "rcs_var" || k == "snr_threshold_db") {
      // handled below once counts are final
    } else if (k == "sweep" || k == "beampattern") {
      // consumed by the experiment runner
    } else {
      throw std::invalid_argument("config: unknown key '" + k + "'");
    }
  }
  if (j.contains("noise_user_dbm")) c.noise_user_dbm = per_entity(j["noise_user_dbm"], c.K, "noise_user_dbm");
  if (j.contains("sinr_threshold_db")) c.sinr_threshold_db = per_entity(j["sinr_threshold_db"], c.K, "sinr_threshold_db");
  if (j.contains("noise_radar_dbm")) c.noise_radar_dbm = per_entity(j["noise_radar_dbm"], c.L, "noise_radar_dbm");
  if (j.contains("rcs_var")) c.rcs_var = per_entity(j["rcs_var"], c.L, "rcs_var");
  if (j.contains("snr_threshold_db")) c.snr_threshold_db = per_entity(j["snr_threshold_db"], c.L, "snr_threshold_db");
  // When only the counts changed, stretch the per-entity defaults.
  auto fit = [](std::vector<double>& v, int n) {
    if (static_cast<int>(v.size()) != n && !v.empty()) v.resize(n, v.back());
  };
  fit(c.noise_user_dbm, c.K);
  fit(c.sinr_threshold_db, c.K);
  fit(c.noise_radar_dbm, c.L);
  fit(c.rcs_var, c.L);
  fit(c.snr_threshold_db, c.L);
  c.validate();
  return c;
}

std::string SystemConfig::to_json() const {
  json j;
  j["M"] = M;
  j["K"] = K;
  j["L"] = L;
  j["N"] = N;
  j["Q"] = Q;
  j["noise_user_dbm"] = noise_user_dbm;
  j["noise_radar_dbm"] = noise_radar_dbm;
  j["rcs_var"] = rcs_var;
  j["snr_threshold_db"] = snr_threshold_db;
  j["sinr_threshold_db"] = sinr_threshold_db;
  j["p_max_dbm"] = p_max_dbm;
  j["rician_kappa_db"] = rician_kappa_db;
  j["pathloss_exponents"] = {{"bs_ris", pathloss_exponents.bs_ris},
                             {"ris_target", pathloss_exponents.ris_target},
                             {"ris_user", pathloss_exponents.ris_user},
                             {"bs_target", pathloss_exponents.bs_target},
                             {"bs_user", pathloss_exponents.bs_user}};
  j["pathloss_ref_db"] = pathloss_ref_db;
  json geo;
  geo["dfbs"] = from_vec2(geometry.dfbs);
  geo["ris"] = from_vec2(geometry.ris);
  geo["users"] = json::array();
  for (const auto& u : geometry.users) geo["users"].push_back(from_vec2(u));
  geo["targets"] = json::array();
  for (const auto& t : geometry.targets) geo["targets"].push_back(from_vec2(t));
  j["geometry"] = geo;
  j["seed"] = seed;
  j["epsilon_conv"] = epsilon_conv;
  j["max_ao_iters"] = max_ao_iters;
  j["ccp_penalty"] = {{"rho0", ccp_penalty.rho0},
                      {"rho_growth", ccp_penalty.rho_growth},
                      {"rho_max", ccp_penalty.rho_max}};
  j["discrete_bits"] = discrete_bits;
  j["solver_feas_tol"] = solver_feas_tol;
  j["solver_gap_tol"] = solver_gap_tol;
  return j.dump(2);
}

double path_gain(double distance_m, double exponent, double ref_db) {
  if (!(distance_m > 0.0)) throw std::domain_error("path_gain: distance must be positive");
  return db_to_lin(ref_db) * std::pow(distance_m, -exponent);
}

CVector ula_steering(int n, double cos_dir) {
  CVector a(n);
  for (int i = 0; i < n; ++i) a(i) = std::polar(1.0, M_PI * i * cos_dir);
  return a;
}

CVector rician_vector(int dim, double kappa_linear, const CVector& los, double gain, Rng& rng) {
  double los_w = std::sqrt(kappa_linear / (1.0 + kappa_linear));
  double nlos_w = std::sqrt(1.0 / (1.0 + kappa_linear));
  CVector out(dim);
  for (int i = 0; i < dim; ++i) out(i) = los_w * los(i) + nlos_w * rng.cgauss();
  return std::sqrt(gain) * out;
}

ChannelSet generate_channels(const SystemConfig& cfg, Rng& rng) {
  cfg.validate();
  const auto& geo = cfg.geometry;
  const auto& pl = cfg.pathloss_exponents;
  const double kap = cfg.kappa_lin();
  ChannelSet ch;
  ch.h_d.resize(cfg.K);
  ch.h_r.resize(cfg.K);
  ch.g_d.resize(cfg.L);
  ch.g_r.resize(cfg.L);

  // DFBS -> RIS matrix: rank-1 line-of-sight from the two steering vectors,
  // Rician-faded entrywise.
  if (cfg.N > 0) {
    double g = path_gain(dist(geo.dfbs, geo.ris), pl.bs_ris, cfg.pathloss_ref_db);
    CVector a_r = ula_steering(cfg.N, dir_cos(geo.ris, geo.dfbs));
    CVector a_b = ula_steering(cfg.M, dir_cos(geo.dfbs, geo.ris));
    CMatrix los = a_r * a_b.adjoint();
    CVector flat = rician_vector(cfg.N * cfg.M, kap, vec(los), g, rng);
    ch.G_mat = Eigen::Map<CMatrix>(flat.data(), cfg.N, cfg.M);
  } else {
    ch.G_mat.resize(0, cfg.M);
  }

  for (int k = 0; k < cfg.K; ++k) {
    double gd = path_gain(dist(geo.dfbs, geo.users[k]), pl.bs_user, cfg.pathloss_ref_db);
    ch.h_d[k] = rician_vector(cfg.M, kap, ula_steering(cfg.M, dir_cos(geo.dfbs, geo.users[k])), gd, rng);
    if (cfg.N > 0) {
      double gr = path_gain(dist(geo.ris, geo.users[k]), pl.ris_user, cfg.pathloss_ref_db);
      ch.h_r[k] = rician_vector(cfg.N, kap, ula_steering(cfg.N, dir_cos(geo.ris, geo.users[k])), gr, rng);
    } else {
      ch.h_r[k].resize(0);
    }
  }

  // Target links are not line-of-sight dominated; Rayleigh fading.
  for (int l = 0; l < cfg.L; ++l) {
    double gd = path_gain(dist(geo.dfbs, geo.targets[l]), pl.bs_target, cfg.pathloss_ref_db);
    ch.g_d[l] = rician_vector(cfg.M, 0.0, ula_steering(cfg.M, dir_cos(geo.dfbs, geo.targets[l])), gd, rng);
    if (cfg.N > 0) {
      double gr = path_gain(dist(geo.ris, geo.targets[l]), pl.ris_target, cfg.pathloss_ref_db);
      ch.g_r[l] = rician_vector(cfg.N, 0.0, ula_steering(cfg.N, dir_cos(geo.ris, geo.targets[l])), gr, rng);
    } else {
      ch.g_r[l].resize(0);
    }
  }
  return ch;
}

std::vector<int> order_users(const ChannelSet& ch, const CVector& v) {
  const int K = static_cast<int>(ch.h_d.size());
  std::vector<double> gain(K);
  for (int k = 0; k < K; ++k) {
    CRowVector row = ch.h_d[k].adjoint();
    if (v.size() > 0) row += ch.h_r[k].adjoint() * v.asDiagonal() * ch.G_mat;
    gain[k] = row.squaredNorm();
  }
  std::vector<int> idx(K);
  std::iota(idx.begin(), idx.end(), 0);
  std::stable_sort(idx.begin(), idx.end(), [&](int a, int b) { return gain[a] > gain[b]; });
  return idx;
}

void apply_user_order(ChannelSet& ch, const std::vector<int>& order) {
  std::vector<CVector> hd(order.size()), hr(order.size());
  for (size_t i = 0; i < order.size(); ++i) {
    hd[i] = ch.h_d[order[i]];
    hr[i] = ch.h_r[order[i]];
  }
  ch.h_d = std::move(hd);
  ch.h_r = std::move(hr);
}

void apply_user_order(SystemConfig& cfg, const std::vector<int>& order) {
  auto permute = [&](std::vector<double>& v) {
    std::vector<double> out(order.size());
    for (size_t i = 0; i < order.size(); ++i) out[i] = v[order[i]];
    v = std::move(out);
  };
  permute(cfg.noise_user_dbm);
  permute(cfg.sinr_threshold_db);
  std::vector<Vec2> users(order.size());
  for (size_t i = 0; i < order.size(); ++i) users[i] = cfg.geometry.users[order[i]];
  cfg.geometry.users = std::move(users);
}

}  // namespace risnoma
