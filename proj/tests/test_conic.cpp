#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <cstring>
#include <sstream>

#include "risnoma/conic.hpp"

using namespace risnoma;
using Eigen::MatrixXd;
using Eigen::VectorXd;

namespace {

ConeBlock block(ConeType t, const MatrixXd& a, const VectorXd& b) {
  return ConeBlock{t, a, b};
}

}  // namespace

TEST_CASE("lp: maximize -x subject to x >= 1") {
  ConicProgram p;
  p.num_vars = 1;
  p.objective = VectorXd::Constant(1, -1.0);
  MatrixXd a(1, 1);
  a << 1.0;
  p.blocks.push_back(block(ConeType::Nonnegative, a, VectorXd::Constant(1, -1.0)));
  auto s = solve_conic(p);
  REQUIRE(s.status == SolveStatus::Optimal);
  CHECK(s.primal(0) == doctest::Approx(1.0).epsilon(1e-6));
  CHECK(s.objective_value == doctest::Approx(-1.0).epsilon(1e-6));
  CHECK(s.max_residual <= 1e-8);
}

TEST_CASE("soc: minimize t subject to ||(3,4)|| <= t") {
  ConicProgram p;
  p.num_vars = 1;
  p.objective = VectorXd::Constant(1, -1.0);  // maximize -t
  MatrixXd a(3, 1);
  a << 1.0, 0.0, 0.0;
  VectorXd b(3);
  b << 0.0, 3.0, 4.0;
  p.blocks.push_back(block(ConeType::SecondOrder, a, b));
  auto s = solve_conic(p);
  REQUIRE(s.status == SolveStatus::Optimal);
  CHECK(s.primal(0) == doctest::Approx(5.0).epsilon(1e-6));
}

TEST_CASE("exp cone: minimize t subject to t >= e^1") {
  ConicProgram p;
  p.num_vars = 1;
  p.objective = VectorXd::Constant(1, -1.0);
  MatrixXd a(3, 1);
  a << 0.0, 0.0, 1.0;
  VectorXd b(3);
  b << 1.0, 1.0, 0.0;  // (a,b,c) = (1, 1, t)
  p.blocks.push_back(block(ConeType::Exponential, a, b));
  auto s = solve_conic(p);
  REQUIRE(s.status == SolveStatus::Optimal);
  CHECK(s.primal(0) == doctest::Approx(std::exp(1.0)).epsilon(1e-6));
}

TEST_CASE("linear objective over a ball") {
  // maximize c.x subject to ||x|| <= 3, optimum 3*||c|| at x = 3c/||c||.
  ConicProgram p;
  p.num_vars = 3;
  VectorXd c(3);
  c << 1.0, 2.0, 2.0;
  p.objective = c;
  MatrixXd a(4, 3);
  a.setZero();
  a.block(1, 0, 3, 3).setIdentity();
  VectorXd b(4);
  b << 3.0, 0.0, 0.0, 0.0;
  p.blocks.push_back(block(ConeType::SecondOrder, a, b));
  auto s = solve_conic(p);
  REQUIRE(s.status == SolveStatus::Optimal);
  CHECK(s.objective_value == doctest::Approx(9.0).epsilon(1e-6));
  CHECK(s.primal(0) == doctest::Approx(1.0).epsilon(1e-5));
}

TEST_CASE("exp cone with stationary interior optimum") {
  // maximize 2x - t subject to t >= e^x; optimum at x = ln 2, value 2ln2 - 2.
  ConicProgram p;
  p.num_vars = 2;
  VectorXd c(2);
  c << 2.0, -1.0;
  p.objective = c;
  MatrixXd a(3, 2);
  a << 1.0, 0.0, 0.0, 0.0, 0.0, 1.0;
  VectorXd b(3);
  b << 0.0, 1.0, 0.0;
  p.blocks.push_back(block(ConeType::Exponential, a, b));
  auto s = solve_conic(p);
  REQUIRE(s.status == SolveStatus::Optimal);
  CHECK(s.objective_value == doctest::Approx(2.0 * std::log(2.0) - 2.0).epsilon(1e-6));
  CHECK(s.primal(0) == doctest::Approx(std::log(2.0)).epsilon(1e-5));
}

TEST_CASE("mixed ball and halfspace") {
  // maximize x + y subject to ||(x,y)|| <= 1, x <= 0.3.
  ConicProgram p;
  p.num_vars = 2;
  p.objective = VectorXd::Ones(2);
  MatrixXd soc(3, 2);
  soc.setZero();
  soc(1, 0) = 1.0;
  soc(2, 1) = 1.0;
  VectorXd bs(3);
  bs << 1.0, 0.0, 0.0;
  p.blocks.push_back(block(ConeType::SecondOrder, soc, bs));
  MatrixXd nn(1, 2);
  nn << -1.0, 0.0;
  p.blocks.push_back(block(ConeType::Nonnegative, nn, VectorXd::Constant(1, 0.3)));
  auto s = solve_conic(p);
  REQUIRE(s.status == SolveStatus::Optimal);
  double want = 0.3 + std::sqrt(1.0 - 0.09);
  CHECK(s.objective_value == doctest::Approx(want).epsilon(1e-6));
}

TEST_CASE("equality constraints combine with cones") {
  // maximize x - y subject to x + y = 1, x >= 0, y >= 0 -> (1, 0).
  ConicProgram p;
  p.num_vars = 2;
  VectorXd c(2);
  c << 1.0, -1.0;
  p.objective = c;
  MatrixXd eq(1, 2);
  eq << 1.0, 1.0;
  p.blocks.push_back(block(ConeType::Equality, eq, VectorXd::Constant(1, -1.0)));
  p.blocks.push_back(block(ConeType::Nonnegative, MatrixXd::Identity(2, 2), VectorXd::Zero(2)));
  auto s = solve_conic(p);
  REQUIRE(s.status == SolveStatus::Optimal);
  CHECK(s.primal(0) == doctest::Approx(1.0).epsilon(1e-6));
  CHECK(std::abs(s.primal(0) + s.primal(1) - 1.0) <= 1e-8);
}

TEST_CASE("infeasible program is reported") {
  // x >= 1 and -x >= 1 cannot hold together.
  ConicProgram p;
  p.num_vars = 1;
  p.objective = VectorXd::Zero(1);
  MatrixXd a(2, 1);
  a << 1.0, -1.0;
  VectorXd b(2);
  b << -1.0, -1.0;
  p.blocks.push_back(block(ConeType::Nonnegative, a, b));
  auto s = solve_conic(p);
  CHECK(s.status == SolveStatus::Infeasible);
}

TEST_CASE("unbounded program is reported") {
  ConicProgram p;
  p.num_vars = 1;
  p.objective = VectorXd::Ones(1);
  MatrixXd a(1, 1);
  a << 1.0;
  p.blocks.push_back(block(ConeType::Nonnegative, a, VectorXd::Zero(1)));
  auto s = solve_conic(p);
  CHECK(s.status == SolveStatus::Unbounded);
}

TEST_CASE("solver output is deterministic") {
  ConicProgram p;
  p.num_vars = 2;
  p.objective = VectorXd::Ones(2);
  MatrixXd soc(3, 2);
  soc.setZero();
  soc(1, 0) = 1.0;
  soc(2, 1) = 1.0;
  VectorXd bs(3);
  bs << 2.0, 0.1, -0.2;
  p.blocks.push_back(block(ConeType::SecondOrder, soc, bs));
  auto s1 = solve_conic(p);
  auto s2 = solve_conic(p);
  REQUIRE(s1.status == SolveStatus::Optimal);
  REQUIRE(s1.primal.size() == s2.primal.size());
  CHECK(std::memcmp(s1.primal.data(), s2.primal.data(),
                    sizeof(double) * s1.primal.size()) == 0);
  CHECK(s1.objective_value == s2.objective_value);
}

TEST_CASE("validate rejects malformed programs") {
  ConicProgram p;
  p.num_vars = 2;
  p.objective = VectorXd::Zero(2);
  MatrixXd a(1, 3);
  a.setZero();
  p.blocks.push_back(block(ConeType::Nonnegative, a, VectorXd::Zero(1)));
  CHECK_THROWS_AS(p.validate(), std::invalid_argument);

  ConicProgram q;
  q.num_vars = 1;
  q.objective = VectorXd::Zero(1);
  MatrixXd e(2, 1);
  e.setZero();
  q.blocks.push_back(block(ConeType::Exponential, e, VectorXd::Zero(2)));
  CHECK_THROWS_AS(q.validate(), std::invalid_argument);
}

TEST_CASE("dump emits a parseable text form") {
  ConicProgram p;
  p.num_vars = 1;
  p.objective = VectorXd::Constant(1, -1.0);
  MatrixXd a(1, 1);
  a << 1.0;
  p.blocks.push_back(block(ConeType::Nonnegative, a, VectorXd::Constant(1, -1.0)));
  std::ostringstream os;
  p.dump(os);
  CHECK(os.str().find("conic num_vars=1") != std::string::npos);
  CHECK(os.str().find("block nonneg 1") != std::string::npos);
}
