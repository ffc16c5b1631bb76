#include "risnoma/orchestrator.hpp"

#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <limits>
#include <sstream>

#include <json.hpp>

#include "risnoma/active_beamforming.hpp"
#include "risnoma/passive_beamforming.hpp"
#include "risnoma/receive_filter.hpp"

namespace risnoma {

namespace {

using clock_type = std::chrono::steady_clock;

double ms_since(clock_type::time_point t0) {
  return std::chrono::duration<double, std::milli>(clock_type::now() - t0).count();
}

SolverOptions solver_options(const SystemConfig& cfg) {
  SolverOptions o;
  o.feas_tol = cfg.solver_feas_tol;
  o.gap_tol = cfg.solver_gap_tol;
  return o;
}

void refresh_filters(const SystemConfig& cfg, const ChannelSet& ch, Design& d) {
  d.u.resize(cfg.L);
  for (int l = 0; l < cfg.L; ++l)
    d.u[l] = optimal_filter(composite_target_matrix(ch, d.v, l), d.W);
}

ChannelSet strip_ris(const ChannelSet& ch, int M) {
  ChannelSet out = ch;
  for (auto& h : out.h_r) h.resize(0);
  for (auto& g : out.g_r) g.resize(0);
  out.G_mat.resize(0, M);
  return out;
}

constexpr uint64_t kChannelStream = 1;
constexpr uint64_t kInitStream = 2;

}  // namespace

const char* baseline_name(BaselineKind k) {
  switch (k) {
    case BaselineKind::Proposed: return "proposed";
    case BaselineKind::CommOnly: return "comm_only";
    case BaselineKind::DiscretePhase: return "discrete_phase";
    case BaselineKind::RandomPhase: return "random_phase";
    case BaselineKind::WithoutRis: return "without_ris";
    case BaselineKind::WithoutNoma: return "without_noma";
  }
  return "?";
}

BaselineKind baseline_from_name(const std::string& name) {
  for (BaselineKind k : {BaselineKind::Proposed, BaselineKind::CommOnly, BaselineKind::DiscretePhase,
                         BaselineKind::RandomPhase, BaselineKind::WithoutRis, BaselineKind::WithoutNoma})
    if (name == baseline_name(k)) return k;
  throw std::invalid_argument("unknown baseline '" + name + "'");
}

const char* run_status_name(RunStatus s) {
  switch (s) {
    case RunStatus::Converged: return "converged";
    case RunStatus::MaxIters: return "max_iters";
    case RunStatus::FailedFeasibility: return "failed_feasibility";
  }
  return "?";
}

OrderedScenario order_scenario(const SystemConfig& cfg, const ChannelSet& ch, const CVector& v0) {
  OrderedScenario sc;
  sc.cfg = cfg;
  sc.ch = ch;
  sc.v0 = v0;
  sc.user_order = order_users(ch, v0);
  apply_user_order(sc.ch, sc.user_order);
  apply_user_order(sc.cfg, sc.user_order);
  return sc;
}

CVector draw_phases(int N, Rng& rng) {
  CVector v(N);
  for (int n = 0; n < N; ++n) v(n) = std::polar(1.0, 2.0 * M_PI * rng.uniform());
  return v;
}

CVector quantize_phases(const CVector& v, int bits) {
  const double step = 2.0 * M_PI / std::pow(2.0, bits);
  CVector out(v.size());
  for (int n = 0; n < v.size(); ++n) {
    double th = std::arg(v(n));
    out(n) = std::polar(1.0, step * std::round(th / step));
  }
  return out;
}

namespace {

// Shared-direction beams with a geometric power ladder satisfy the decode
// ordering chain by construction; the ladder ratio leaves SINR headroom.
CMatrix ladder_beams(const SystemConfig& cfg, const std::vector<CRowVector>& H,
                     const ConstraintProfile& profile) {
  const int K = cfg.K, M = cfg.M;
  CVector dir = CVector::Zero(M);
  for (int k = 0; k < K; ++k) dir += H[k].adjoint() / H[k].norm();
  if (dir.norm() < 1e-300) dir = CVector::Ones(M);
  dir /= dir.norm();
  const double ratio = 6.0;
  Eigen::VectorXd p(K + 1);
  for (int k = 0; k < K; ++k) p(k) = std::pow(ratio, k);
  p(K) = (profile.sensing_beam && cfg.L > 0) ? 1.5 * p(K - 1) : 0.0;
  p *= cfg.p_max_w() / p.sum();
  CMatrix W(M, K + 1);
  for (int j = 0; j <= K; ++j) W.col(j) = std::sqrt(p(j)) * dir;
  return W;
}

// Interference-as-noise start: zero-forced user beams, sensing beam in the
// orthogonal complement.
CMatrix tin_beams(const SystemConfig& cfg, const ChannelSet& ch,
                  const std::vector<CRowVector>& H, const ConstraintProfile& profile) {
  const int K = cfg.K, M = cfg.M;
  CMatrix Hs(K, M);
  for (int k = 0; k < K; ++k) Hs.row(k) = H[k];
  CMatrix pinv = Hs.adjoint() * (Hs * Hs.adjoint()).inverse();
  CMatrix W = CMatrix::Zero(M, K + 1);
  int cols = K + (profile.sensing_beam && cfg.L > 0 ? 1 : 0);
  double per = cfg.p_max_w() / cols;
  for (int k = 0; k < K; ++k) {
    CVector c = pinv.col(k);
    if (c.norm() < 1e-300) c = H[k].adjoint();
    W.col(k) = std::sqrt(per) * c / c.norm();
  }
  if (profile.sensing_beam && cfg.L > 0) {
    CVector b = CVector::Zero(M);
    for (int l = 0; l < cfg.L; ++l) {
      CRowVector row = ch.g_d[l].adjoint();
      if (ch.g_r[l].size() > 0) row += ch.g_r[l].adjoint() * CMatrix(ch.G_mat);
      b += row.adjoint() / std::max(row.norm(), 1e-300);
    }
    // remove the user-channel components so the sensing beam adds no
    // interference at the start
    CVector proj = b - Hs.adjoint() * ((Hs * Hs.adjoint()).inverse() * (Hs * b));
    if (proj.norm() > 1e-12 * b.norm()) b = proj;
    if (b.norm() < 1e-300) b = CVector::Ones(M);
    W.col(K) = std::sqrt(per) * b / b.norm();
  }
  return W;
}

}  // namespace

InitResult initialize(const SystemConfig& cfg, const ChannelSet& ch, Rng& rng,
                      const ConstraintProfile& profile, int quantize_bits) {
  cfg.validate();
  CVector v0 = draw_phases(cfg.N, rng);
  if (quantize_bits > 0) v0 = quantize_phases(v0, quantize_bits);
  InitResult res;
  res.sc = order_scenario(cfg, ch, v0);
  const SystemConfig& c = res.sc.cfg;
  const ChannelSet& cch = res.sc.ch;

  std::vector<CRowVector> H(c.K);
  for (int k = 0; k < c.K; ++k) H[k] = aggregate_user_channel(cch, v0, k);

  Design d;
  d.v = v0;
  d.W = profile.noma ? ladder_beams(c, H, profile) : tin_beams(c, cch, H, profile);
  if (!profile.sensing_beam) d.W.col(c.K).setZero();
  refresh_filters(c, cch, d);

  ActiveOptions aopts = ActiveOptions::for_profile(profile, c.L);
  SolverOptions sopts = solver_options(c);
  const double tol = 1e-6;
  for (int round = 0; round <= 10; ++round) {
    FeasibilityReport rep = check_feasible(c, cch, d, tol, profile);
    if (rep.feasible()) {
      res.design = d;
      res.restoration_rounds = round;
      return res;
    }
    if (round == 10) break;
    RestorationResult rr = solve_p3_restoration(c, cch, d.v, d.u, d.W, aopts, sopts);
    if (rr.status != SolveStatus::Optimal)
      throw InfeasibleScenario("feasibility restoration failed to solve");
    d.W = rr.W;
    refresh_filters(c, cch, d);
  }
  throw InfeasibleScenario("no feasible starting design within 10 restoration rounds");
}

std::pair<Design, SolveTrace> ao_solve(const SystemConfig& cfg, const ChannelSet& ch,
                                       const Design& init, const AoOptions& opts) {
  Design d = init;
  SolveTrace trace;
  SolverOptions sopts = solver_options(cfg);
  ActiveOptions aopts = ActiveOptions::for_profile(opts.profile, cfg.L);
  PassiveOptions popts = PassiveOptions::for_profile(opts.profile, cfg.L);
  const bool sensing = opts.profile.sensing_beam && cfg.L > 0;
  const bool phases = opts.optimize_phases && cfg.N > 0;
  double rho = cfg.ccp_penalty.rho0;
  double prev_obj = std::numeric_limits<double>::quiet_NaN();
  double current_rate = sum_rate(cfg, ch, d);
  Design best = d;
  double best_rate = current_rate;

  for (int iter = 1; iter <= cfg.max_ao_iters; ++iter) {
    auto t0 = clock_type::now();

    // transmit update
    P3Problem p3 = build_p3(cfg, ch, d.v, d.u, d.W, aopts);
    P3Result r3 = solve_p3(p3, std::isnan(prev_obj) ? -1e300 : prev_obj, sopts);
    if (r3.status == SolveStatus::NumericalTrouble) {
      SolverOptions relaxed = sopts;
      relaxed.gap_tol = sopts.gap_tol * 100;
      relaxed.feas_tol = sopts.feas_tol * 100;
      r3 = solve_p3(p3, std::isnan(prev_obj) ? -1e300 : prev_obj, relaxed);
    }
    if (r3.status != SolveStatus::Optimal) {
      trace.status = RunStatus::FailedFeasibility;
      return {best, trace};
    }
    d.W = r3.W;
    d.eta = r3.eta;
    d.tau = r3.tau;
    d.zeta1 = r3.zeta1;
    double surrogate = r3.objective;

    // closed-form filter refresh
    if (sensing && opts.update_filters) refresh_filters(cfg, ch, d);

    // phase update with rollback safeguard
    double max_slack = 0.0;
    if (phases) {
      current_rate = sum_rate(cfg, ch, d);
      try {
        P7Problem p7 = build_p7(cfg, ch, d.W, d.u, d.v, rho, popts);
        P7Result r7 = solve_p7(p7, surrogate, sopts);
        if (r7.status == SolveStatus::Optimal) {
          max_slack = r7.max_slack;
          CVector cand_v = opts.quantize_bits > 0 ? quantize_phases(r7.v, opts.quantize_bits) : r7.v;
          Design cand = d;
          cand.v = cand_v;
          double cand_rate = sum_rate(cfg, ch, cand);
          if (cand_rate >= current_rate - 1e-9 &&
              check_feasible(cfg, ch, cand, 1e-6, opts.profile).feasible()) {
            d = cand;
            d.eta = r7.eta;
            d.tau = r7.tau;
            d.zeta1 = r7.zeta1;
          }
        }
      } catch (const std::runtime_error&) {
        // keep the previous phases when the subproblem cannot be built
      }
      rho = std::min(rho * cfg.ccp_penalty.rho_growth, cfg.ccp_penalty.rho_max);
    }

    current_rate = sum_rate(cfg, ch, d);
    if (current_rate >= best_rate) {
      best = d;
      best_rate = current_rate;
    }

    FeasibilityReport rep = check_feasible(cfg, ch, d, 1e-5, opts.profile);
    TraceIter ti;
    ti.iter = iter;
    ti.surrogate = surrogate;
    ti.sum_rate = current_rate;
    ti.worst_residual = rep.worst();
    ti.worst_family = rep.worst_family();
    ti.rho = phases ? rho : 0.0;
    ti.wall_ms = ms_since(t0);
    trace.iters.push_back(ti);

    if (!std::isfinite(cfg.epsilon_conv)) {
      trace.status = RunStatus::Converged;
      return {d, trace};
    }
    if (!std::isnan(prev_obj) &&
        std::abs(surrogate - prev_obj) <= cfg.epsilon_conv * std::max(1.0, std::abs(prev_obj)) &&
        max_slack < 1e-6) {
      trace.status = RunStatus::Converged;
      return {d, trace};
    }
    prev_obj = surrogate;
  }
  trace.status = RunStatus::MaxIters;
  return {d, trace};
}

namespace {

RunResult finish_run(BaselineKind kind, const OrderedScenario& sc, Design d, SolveTrace trace) {
  RunResult r;
  r.kind = kind;
  r.design = std::move(d);
  r.trace = std::move(trace);
  r.cfg = sc.cfg;
  r.ch = sc.ch;
  r.sum_rate = sum_rate(r.cfg, r.ch, r.design);
  r.snr_lb.resize(r.cfg.L);
  double margin = std::numeric_limits<double>::infinity();
  for (int l = 0; l < r.cfg.L; ++l) {
    r.snr_lb[l] = radar_snr_lb(r.cfg, r.ch, r.design, l);
    margin = std::min(margin, 10.0 * std::log10(r.snr_lb[l] / r.cfg.gamma_lin(l)));
  }
  r.min_snr_margin_db = margin;
  return r;
}

}  // namespace

RunResult run_baseline(BaselineKind kind, const SystemConfig& cfg, const ChannelSet& ch, Rng& rng) {
  switch (kind) {
    case BaselineKind::Proposed: {
      InitResult init = initialize(cfg, ch, rng);
      AoOptions o;
      auto [d, t] = ao_solve(init.sc.cfg, init.sc.ch, init.design, o);
      t.restoration_rounds = init.restoration_rounds;
      return finish_run(kind, init.sc, std::move(d), std::move(t));
    }
    case BaselineKind::CommOnly: {
      // solve the constrained problem first, then warm-start the relaxation
      // from it so the relaxed optimum dominates seed by seed
      RunResult prop = run_baseline(BaselineKind::Proposed, cfg, ch, rng);
      OrderedScenario sc;
      sc.cfg = prop.cfg;
      sc.ch = prop.ch;
      sc.v0 = prop.design.v;
      Design start = prop.design;
      start.W.col(sc.cfg.K).setZero();
      AoOptions o;
      o.profile.radar = false;
      o.profile.sensing_beam = false;
      o.update_filters = false;
      auto [d, t] = ao_solve(sc.cfg, sc.ch, start, o);
      if (sum_rate(sc.cfg, sc.ch, d) < prop.sum_rate) d = start;  // never below the warm start
      return finish_run(kind, sc, std::move(d), std::move(t));
    }
    case BaselineKind::DiscretePhase: {
      InitResult init = initialize(cfg, ch, rng, ConstraintProfile::full(), cfg.discrete_bits);
      AoOptions o;
      o.quantize_bits = cfg.discrete_bits;
      auto [d, t] = ao_solve(init.sc.cfg, init.sc.ch, init.design, o);
      t.restoration_rounds = init.restoration_rounds;
      return finish_run(kind, init.sc, std::move(d), std::move(t));
    }
    case BaselineKind::RandomPhase: {
      InitResult init = initialize(cfg, ch, rng);
      AoOptions o;
      o.optimize_phases = false;
      auto [d, t] = ao_solve(init.sc.cfg, init.sc.ch, init.design, o);
      t.restoration_rounds = init.restoration_rounds;
      return finish_run(kind, init.sc, std::move(d), std::move(t));
    }
    case BaselineKind::WithoutRis: {
      SystemConfig c2 = cfg;
      c2.N = 0;
      ChannelSet ch2 = strip_ris(ch, cfg.M);
      InitResult init = initialize(c2, ch2, rng);
      AoOptions o;
      auto [d, t] = ao_solve(init.sc.cfg, init.sc.ch, init.design, o);
      t.restoration_rounds = init.restoration_rounds;
      return finish_run(kind, init.sc, std::move(d), std::move(t));
    }
    case BaselineKind::WithoutNoma: {
      ConstraintProfile profile;
      profile.noma = false;
      InitResult init = initialize(cfg, ch, rng, profile);
      AoOptions o;
      o.profile = profile;
      auto [d, t] = ao_solve(init.sc.cfg, init.sc.ch, init.design, o);
      t.restoration_rounds = init.restoration_rounds;
      return finish_run(kind, init.sc, std::move(d), std::move(t));
    }
  }
  throw std::logic_error("unreachable baseline kind");
}

void emit_beampattern_grid(const SystemConfig& cfg, const ChannelSet& ch, const Design& d,
                           const GridSpec& grid, std::ostream& os) {
  os.precision(12);
  os << "x,y,bp\n";
  for (int iy = 0; iy < grid.steps; ++iy) {
    double y = grid.steps == 1 ? grid.y_min
                               : grid.y_min + (grid.y_max - grid.y_min) * iy / (grid.steps - 1.0);
    for (int ix = 0; ix < grid.steps; ++ix) {
      double x = grid.steps == 1 ? grid.x_min
                                 : grid.x_min + (grid.x_max - grid.x_min) * ix / (grid.steps - 1.0);
      os << x << "," << y << "," << beampattern_at(cfg, ch, d, x, y) << "\n";
    }
  }
}

void emit_beampattern_angular(const SystemConfig& cfg, const ChannelSet& ch, const Design& d,
                              double theta_min, double theta_max, int steps, double radius,
                              std::ostream& os) {
  os.precision(12);
  os << "theta_rad,bp_db\n";
  for (int i = 0; i < steps; ++i) {
    double th = steps == 1 ? theta_min : theta_min + (theta_max - theta_min) * i / (steps - 1.0);
    double x = cfg.geometry.dfbs.x + radius * std::cos(th);
    double y = cfg.geometry.dfbs.y + radius * std::sin(th);
    double bp = beampattern_at(cfg, ch, d, x, y);
    os << th << "," << 10.0 * std::log10(std::max(bp, 1e-300)) << "\n";
  }
}

std::string trace_json(const RunResult& r) {
  nlohmann::json j;
  j["baseline"] = baseline_name(r.kind);
  j["status"] = run_status_name(r.trace.status);
  j["restoration_rounds"] = r.trace.restoration_rounds;
  j["user_order"] = nlohmann::json::array();
  j["iterations"] = nlohmann::json::array();
  for (const auto& it : r.trace.iters) {
    j["iterations"].push_back({{"iter", it.iter},
                               {"surrogate", it.surrogate},
                               {"sum_rate", it.sum_rate},
                               {"worst_residual", it.worst_residual},
                               {"worst_family", it.worst_family},
                               {"rho", it.rho},
                               {"wall_ms", it.wall_ms}});
  }
  j["final"] = {{"sum_rate", r.sum_rate},
                {"snr_lb", r.snr_lb},
                {"min_snr_margin_db", r.min_snr_margin_db}};
  return j.dump(2);
}

const char* summary_csv_header() {
  return "seed,baseline,M,N,K,P_th_dbm,sum_rate,min_snr_margin_db,iterations,status,wall_ms";
}

std::string summary_csv_row(uint64_t seed, const RunResult& r) {
  std::ostringstream os;
  os.precision(12);
  double wall = 0.0;
  for (const auto& it : r.trace.iters) wall += it.wall_ms;
  os << seed << "," << baseline_name(r.kind) << "," << r.cfg.M << "," << r.cfg.N << ","
     << r.cfg.K << "," << r.cfg.p_max_dbm << "," << r.sum_rate << "," << r.min_snr_margin_db
     << "," << r.trace.iters.size() << "," << run_status_name(r.trace.status) << "," << wall;
  return os.str();
}

int run_experiment(const std::string& config_json, const std::string& out_dir) {
  namespace fs = std::filesystem;
  try {
    SystemConfig base = SystemConfig::from_json(config_json);
    nlohmann::json doc = nlohmann::json::parse(config_json);

    std::vector<uint64_t> seeds{base.seed};
    std::vector<std::string> baselines{"proposed"};
    std::vector<int> n_values{base.N};
    std::vector<double> p_values{base.p_max_dbm};
    if (doc.contains("sweep")) {
      const auto& sw = doc["sweep"];
      if (sw.contains("seeds")) {
        seeds.clear();
        if (sw["seeds"].is_object()) {
          uint64_t start = sw["seeds"].value("start", 1);
          int count = sw["seeds"].value("count", 1);
          for (int i = 0; i < count; ++i) seeds.push_back(start + i);
        } else {
          for (const auto& s : sw["seeds"]) seeds.push_back(s.get<uint64_t>());
        }
      }
      if (sw.contains("baselines")) {
        baselines.clear();
        for (const auto& b : sw["baselines"]) baselines.push_back(b.get<std::string>());
      }
      if (sw.contains("N")) {
        n_values.clear();
        for (const auto& n : sw["N"]) n_values.push_back(n.get<int>());
      }
      if (sw.contains("p_max_dbm")) {
        p_values.clear();
        for (const auto& p : sw["p_max_dbm"]) p_values.push_back(p.get<double>());
      }
    }

    std::error_code ec;
    fs::create_directories(out_dir, ec);
    std::ofstream csv(fs::path(out_dir) / "summary.csv");
    if (!csv) {
      std::cerr << "cannot write to " << out_dir << "\n";
      return 1;
    }
    csv << summary_csv_header() << "\n";

    bool any_infeasible = false;
    for (uint64_t seed : seeds) {
      for (int nv : n_values) {
        for (double pv : p_values) {
          SystemConfig cfg = base;
          cfg.seed = seed;
          cfg.N = nv;
          cfg.p_max_dbm = pv;
          Rng ch_rng(Rng::mix(Rng::mix(seed, static_cast<uint64_t>(nv)), kChannelStream));
          ChannelSet ch = generate_channels(cfg, ch_rng);
          for (const auto& bname : baselines) {
            BaselineKind kind = baseline_from_name(bname);
            Rng init_rng(Rng::mix(Rng::mix(seed, static_cast<uint64_t>(nv)), kInitStream));
            std::ostringstream tag;
            tag << "s" << seed << "_" << bname << "_N" << nv << "_P" << pv;
            try {
              RunResult r = run_baseline(kind, cfg, ch, init_rng);
              csv << summary_csv_row(seed, r) << "\n";
              std::ofstream tf(fs::path(out_dir) / ("trace_" + tag.str() + ".json"));
              tf << trace_json(r);
            } catch (const InfeasibleScenario&) {
              any_infeasible = true;
              csv << seed << "," << bname << "," << cfg.M << "," << cfg.N << "," << cfg.K << ","
                  << cfg.p_max_dbm << ",0,0,0,infeasible,0\n";
            }
          }
        }
      }
    }
    return any_infeasible ? 2 : 0;
  } catch (const std::exception& e) {
    std::cerr << "experiment failed: " << e.what() << "\n";
    return 1;
  }
}

}  // namespace risnoma
