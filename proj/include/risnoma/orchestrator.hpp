#pragma once

#include <iosfwd>
#include <stdexcept>
#include <string>
#include <vector>

#include "risnoma/metrics.hpp"
#include "risnoma/scenario.hpp"

namespace risnoma {

enum class BaselineKind { Proposed, CommOnly, DiscretePhase, RandomPhase, WithoutRis, WithoutNoma };

const char* baseline_name(BaselineKind k);
BaselineKind baseline_from_name(const std::string& name);

enum class RunStatus { Converged, MaxIters, FailedFeasibility };
const char* run_status_name(RunStatus s);

struct TraceIter {
  int iter = 0;
  double surrogate = 0.0;   // transmit-subproblem objective
  double sum_rate = 0.0;
  double worst_residual = 0.0;
  std::string worst_family;
  double rho = 0.0;
  double wall_ms = 0.0;
};

struct SolveTrace {
  std::vector<TraceIter> iters;
  RunStatus status = RunStatus::MaxIters;
  int restoration_rounds = 0;
};

struct InfeasibleScenario : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// A scenario with users relabeled into decoding order (position 0 holds the
/// strongest aggregated channel under the initial phases).
struct OrderedScenario {
  SystemConfig cfg;
  ChannelSet ch;
  CVector v0;
  std::vector<int> user_order;
};

OrderedScenario order_scenario(const SystemConfig& cfg, const ChannelSet& ch, const CVector& v0);

CVector draw_phases(int N, Rng& rng);
CVector quantize_phases(const CVector& v, int bits);

struct InitResult {
  OrderedScenario sc;
  Design design;
  int restoration_rounds = 0;
};

/// Random initial phases, user relabeling into decoding order, a
/// shared-direction power-ladder beam matrix scaled to the power budget,
/// matched receive filters, and up to 10 rounds of feasibility restoration.
/// Throws InfeasibleScenario when restoration cannot reach feasibility.
InitResult initialize(const SystemConfig& cfg, const ChannelSet& ch, Rng& rng,
                      const ConstraintProfile& profile = ConstraintProfile::full(),
                      int quantize_bits = 0);

struct AoOptions {
  ConstraintProfile profile = ConstraintProfile::full();
  bool optimize_phases = true;   // run the phase-update subproblem
  bool update_filters = true;    // closed-form filter refresh each iteration
  int quantize_bits = 0;         // >0 snaps accepted phases to a uniform grid
};

/// Alternating optimization: transmit update, filter update, phase update,
/// until the relative change of the transmit-subproblem objective drops
/// below cfg.epsilon_conv or cfg.max_ao_iters is reached. Inputs must be an
/// ordered scenario and a feasible starting design.
std::pair<Design, SolveTrace> ao_solve(const SystemConfig& cfg, const ChannelSet& ch,
                                       const Design& init, const AoOptions& opts = {});

struct RunResult {
  BaselineKind kind = BaselineKind::Proposed;
  Design design;
  SolveTrace trace;
  SystemConfig cfg;  // ordered (and reduced for the no-RIS baseline)
  ChannelSet ch;
  double sum_rate = 0.0;
  std::vector<double> snr_lb;
  double min_snr_margin_db = 0.0;
};

/// Runs one algorithm on one channel draw. The comm-only baseline first runs
/// the proposed pipeline and warm-starts its relaxed problem from that
/// solution, so relaxation dominance holds per seed.
RunResult run_baseline(BaselineKind kind, const SystemConfig& cfg, const ChannelSet& ch, Rng& rng);

/// Beampattern CSV over a cartesian grid ("x,y,bp") or an angular sweep at
/// fixed radius around the transmitter ("theta_rad,bp_db").
void emit_beampattern_grid(const SystemConfig& cfg, const ChannelSet& ch, const Design& d,
                           const GridSpec& grid, std::ostream& os);
void emit_beampattern_angular(const SystemConfig& cfg, const ChannelSet& ch, const Design& d,
                              double theta_min, double theta_max, int steps, double radius,
                              std::ostream& os);

/// Sweep runner: for every (seed, baseline, N, p_max) cell of the config's
/// optional "sweep" section, runs the pipeline, writes trace JSON files and a
/// summary CSV into out_dir. Returns a process exit code: 0 on success, 2
/// when a scenario was infeasible, 1 on error.
int run_experiment(const std::string& config_json, const std::string& out_dir);

/// JSON document for one run (per-iteration trace plus final metrics).
std::string trace_json(const RunResult& r);

const char* summary_csv_header();
std::string summary_csv_row(uint64_t seed, const RunResult& r);

}  // namespace risnoma
