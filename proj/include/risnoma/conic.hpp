#pragma once

#include <iosfwd>
#include <optional>
#include <vector>

#include <Eigen/Dense>

namespace risnoma {

/// Cone membership of one affine block y = A x + b.
///   Equality     y = 0
///   Nonnegative  y >= 0 elementwise
///   SecondOrder  y = (t, z), ||z|| <= t
///   Exponential  y = (a, b, c), c >= b * exp(a / b), b > 0 (dim exactly 3)
enum class ConeType { Equality, Nonnegative, SecondOrder, Exponential };

struct ConeBlock {
  ConeType type;
  Eigen::MatrixXd A;
  Eigen::VectorXd b;
  Eigen::Index dim() const { return A.rows(); }
};

/// A conic program over real scalar decision variables x in R^num_vars:
///
///   maximize objective . x + objective_offset
///   subject to (A_i x + b_i) in K_i for every block i
///
/// Complex quantities are lowered to real/imaginary pairs by the builder
/// modules before they reach this representation.
struct ConicProgram {
  int num_vars = 0;
  Eigen::VectorXd objective;
  double objective_offset = 0.0;
  std::vector<ConeBlock> blocks;

  /// Throws std::invalid_argument on dimension mismatch or malformed cones.
  void validate() const;

  /// Plain-text dump for differential testing against external modeling
  /// tools. Format: one header line "conic num_vars=<n>", the objective as
  /// "obj <offset> <c_0> ... <c_{n-1}>", then per block a line
  /// "block <type> <dim>" followed by dim rows "<b_r> <A_r0> ... <A_r,n-1>",
  /// all values printed with 17 significant digits.
  void dump(std::ostream& os) const;
};

enum class SolveStatus { Optimal, Infeasible, Unbounded, NumericalTrouble };

struct ConicSolution {
  SolveStatus status = SolveStatus::NumericalTrouble;
  Eigen::VectorXd primal;
  double objective_value = 0.0;
  double max_residual = 0.0;
};

struct SolverOptions {
  double feas_tol = 1e-8;
  double gap_tol = 1e-8;
  int max_newton = 4000;
  double barrier_mu = 10.0;
};

/// Deterministic barrier interior-point solve. The same program always
/// produces bit-identical output (fixed iteration schedule, no randomness).
/// An optional warm start is used as the initial point when it is strictly
/// feasible; otherwise a feasibility phase runs first.
ConicSolution solve_conic(const ConicProgram& p, const SolverOptions& opts = {},
                          const std::optional<Eigen::VectorXd>& warm_start = {});

}  // namespace risnoma
