#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <complex>
#include <random>

#include "risnoma/numerics.hpp"

using namespace risnoma;

namespace {

std::mt19937_64 rng(20240601);

cplx rc() {
  std::normal_distribution<double> g;
  return {g(rng), g(rng)};
}

CMatrix random_cmatrix(int r, int c) {
  CMatrix m(r, c);
  for (int i = 0; i < r; ++i)
    for (int j = 0; j < c; ++j) m(i, j) = rc();
  return m;
}

// Power iteration on A + shift*I, an oracle independent of the library path.
double power_iteration_max_eig(const CMatrix& a) {
  CMatrix sym = 0.5 * (a + a.adjoint());
  double shift = sym.cwiseAbs().sum() + 1.0;
  CMatrix m = sym + shift * CMatrix::Identity(a.rows(), a.cols());
  CVector x = CVector::Ones(a.rows());
  x.normalize();
  for (int it = 0; it < 20000; ++it) {
    CVector y = m * x;
    x = y / y.norm();
  }
  double lambda = std::real(x.dot(m * x));
  return lambda - shift;
}

}  // namespace

TEST_CASE("kron of scalar one is identity") {
  CMatrix one = CMatrix::Constant(1, 1, 1.0);
  CMatrix b = random_cmatrix(3, 2);
  CHECK(kron(one, b) == b);
}

TEST_CASE("kron with identity gives block diagonal") {
  CMatrix b = random_cmatrix(2, 2);
  CMatrix k = kron(CMatrix::Identity(2, 2), b);
  CHECK(k.rows() == 4);
  CHECK((k.block(0, 0, 2, 2) - b).cwiseAbs().maxCoeff() == 0.0);
  CHECK((k.block(2, 2, 2, 2) - b).cwiseAbs().maxCoeff() == 0.0);
  CHECK(k.block(0, 2, 2, 2).cwiseAbs().maxCoeff() == 0.0);
  CHECK(k.block(2, 0, 2, 2).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("kron matches the definition entrywise") {
  CMatrix a = random_cmatrix(2, 3), b = random_cmatrix(3, 2);
  CMatrix k = kron(a, b);
  REQUIRE(k.rows() == 6);
  REQUIRE(k.cols() == 6);
  for (int i = 0; i < 2; ++i)
    for (int j = 0; j < 3; ++j)
      for (int p = 0; p < 3; ++p)
        for (int q = 0; q < 2; ++q)
          CHECK(std::abs(k(i * 3 + p, j * 2 + q) - a(i, j) * b(p, q)) < 1e-14);
}

TEST_CASE("vec stacks column-major") {
  CMatrix a(2, 2);
  a << cplx(1), cplx(2), cplx(3), cplx(4);
  CVector v = vec(a);
  CHECK(v(0) == cplx(1));
  CHECK(v(1) == cplx(3));
  CHECK(v(2) == cplx(2));
  CHECK(v(3) == cplx(4));
}

TEST_CASE("vec of a column vector is itself") {
  CMatrix a = random_cmatrix(5, 1);
  CHECK(vec(a) == a.col(0));
}

TEST_CASE("vec(ABC) identity over random conformable triples") {
  for (int trial = 0; trial < 100; ++trial) {
    CMatrix a = random_cmatrix(3, 2), b = random_cmatrix(2, 2), c = random_cmatrix(2, 3);
    CVector lhs = vec(a * b * c);
    CVector rhs = kron(c.transpose(), a) * vec(b);
    CHECK((lhs - rhs).cwiseAbs().maxCoeff() < 1e-12);
  }
}

TEST_CASE("double conjugate transpose is bitwise identity") {
  CMatrix a = random_cmatrix(4, 3);
  CMatrix back = a.adjoint().adjoint();
  for (int i = 0; i < a.rows(); ++i)
    for (int j = 0; j < a.cols(); ++j) CHECK(back(i, j) == a(i, j));
}

TEST_CASE("max eigenvalue of identity and diagonal") {
  CHECK(max_eig_hermitian(CMatrix::Identity(3, 3)) == doctest::Approx(1.0));
  CMatrix d = CMatrix::Zero(3, 3);
  d(0, 0) = 1.0;
  d(1, 1) = 3.0;
  d(2, 2) = 2.0;
  CHECK(max_eig_hermitian(d) == doctest::Approx(3.0));
}

TEST_CASE("max eigenvalue against power iteration oracle") {
  CMatrix a = random_cmatrix(6, 6);
  a = 0.5 * (a + a.adjoint());
  double got = max_eig_hermitian(a);
  double want = power_iteration_max_eig(a);
  CHECK(got == doctest::Approx(want).epsilon(1e-8));
}

TEST_CASE("max eigenvalue dominates Rayleigh quotients") {
  CMatrix a = random_cmatrix(6, 6);
  a = 0.5 * (a + a.adjoint());
  double lmax = max_eig_hermitian(a);
  for (int i = 0; i < 100; ++i) {
    CVector x = random_cmatrix(6, 1);
    double rq = std::real(x.dot(a * x)) / x.squaredNorm();
    CHECK(rq <= lmax + 1e-10);
  }
}

TEST_CASE("max eigenvalue rejects non-square input") {
  CHECK_THROWS_AS(max_eig_hermitian(random_cmatrix(3, 4)), std::invalid_argument);
}
