#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "risnoma/metrics.hpp"
#include "risnoma/receive_filter.hpp"

using namespace risnoma;

namespace {

CMatrix random_cmatrix(int r, int c, Rng& rng) {
  CMatrix m(r, c);
  for (int i = 0; i < r; ++i)
    for (int j = 0; j < c; ++j) m(i, j) = rng.cgauss();
  return m;
}

double snr_lb_of(const CMatrix& gl, const CMatrix& W, const CVector& u, double Q, double rcs,
                 double eps2) {
  CVector q = vec(gl * W);
  return Q * rcs * std::norm(u.dot(q)) / (eps2 * u.squaredNorm());
}

}  // namespace

TEST_CASE("identity echo with a single unit beam gives the stacked direction") {
  const int M = 3, K = 1;
  CMatrix gl = CMatrix::Identity(M, M);
  CMatrix W = CMatrix::Zero(M, K + 1);
  W(0, 0) = 1.0;
  CVector u = optimal_filter(gl, W);
  CHECK(u.norm() == doctest::Approx(1.0).epsilon(1e-14));
  CVector want = CVector::Zero(M * (K + 1));
  want(0) = 1.0;
  CHECK((u - want).norm() < 1e-14);
  // attained bound is Q rcs / eps^2 for unit everything
  CHECK(snr_lb_of(gl, W, u, 8.0, 1.0, 1.0) == doctest::Approx(8.0).epsilon(1e-12));
}

TEST_CASE("closed-form filter dominates random unit filters") {
  Rng rng(101);
  const int M = 4, K = 2;
  for (int trial = 0; trial < 20; ++trial) {
    CMatrix a = random_cmatrix(M, 1, rng), b = random_cmatrix(M, 1, rng);
    CMatrix gl = a * b.adjoint();  // rank-1 like the echo model
    CMatrix W = random_cmatrix(M, K + 1, rng);
    CVector u = optimal_filter(gl, W);
    double best = snr_lb_of(gl, W, u, 16.0, 1.0, 0.5);
    for (int i = 0; i < 500; ++i) {
      CVector r = random_cmatrix(M * (K + 1), 1, rng);
      r.normalize();
      CHECK(snr_lb_of(gl, W, r, 16.0, 1.0, 0.5) <= best * (1.0 + 1e-12));
    }
  }
}

TEST_CASE("optimal SNR equals the top eigenvalue of the rank-one outer product") {
  Rng rng(102);
  const int M = 3, K = 2;
  const double Q = 32.0, rcs = 2.0, eps2 = 0.25;
  CMatrix a = random_cmatrix(M, 1, rng), b = random_cmatrix(M, 1, rng);
  CMatrix gl = a * b.adjoint();
  CMatrix W = random_cmatrix(M, K + 1, rng);
  CVector dir = vec(gl * W);
  CVector u = optimal_filter(gl, W);
  double got = snr_lb_of(gl, W, u, Q, rcs, eps2);
  double want = (Q * rcs / eps2) * max_eig_hermitian(dir * dir.adjoint());
  CHECK(got == doctest::Approx(want).epsilon(1e-10));
}

TEST_CASE("the filter is exactly unit norm") {
  Rng rng(103);
  CMatrix gl = random_cmatrix(4, 4, rng);
  CMatrix W = random_cmatrix(4, 3, rng);
  CHECK(std::abs(optimal_filter(gl, W).norm() - 1.0) < 1e-12);
}

TEST_CASE("a global phase on the filter leaves the attained bound unchanged") {
  Rng rng(104);
  CMatrix gl = random_cmatrix(3, 3, rng);
  CMatrix W = random_cmatrix(3, 2, rng);
  CVector u = optimal_filter(gl, W);
  double base = snr_lb_of(gl, W, u, 8.0, 1.0, 1.0);
  for (int i = 0; i < 10; ++i) {
    CVector rotated = std::polar(1.0, 2.0 * M_PI * rng.uniform()) * u;
    CHECK(snr_lb_of(gl, W, rotated, 8.0, 1.0, 1.0) == doctest::Approx(base).epsilon(1e-12));
  }
}

TEST_CASE("an unilluminated target is rejected") {
  CMatrix gl = CMatrix::Zero(3, 3);
  CMatrix W = CMatrix::Ones(3, 2);
  CHECK_THROWS_AS(optimal_filter(gl, W), std::runtime_error);
}

TEST_CASE("the filter update never lowers the previous bound") {
  // maximizer dominance: whatever bound the previous filter met, the
  // refreshed filter meets it too
  Rng rng(105);
  const int M = 4, K = 2;
  for (int trial = 0; trial < 50; ++trial) {
    CMatrix a = random_cmatrix(M, 1, rng), b = random_cmatrix(M, 1, rng);
    CMatrix gl = a * b.adjoint();
    CMatrix W = random_cmatrix(M, K + 1, rng);
    CVector prev = random_cmatrix(M * (K + 1), 1, rng);
    prev.normalize();
    double before = snr_lb_of(gl, W, prev, 8.0, 1.0, 1.0);
    double after = snr_lb_of(gl, W, optimal_filter(gl, W), 8.0, 1.0, 1.0);
    CHECK(after >= before * (1.0 - 1e-12));
  }
}
