#pragma once

#include <complex>

#include <Eigen/Dense>

namespace risnoma {

using cplx = std::complex<double>;

/// Dense complex matrix, column-major storage (Eigen default). A column
/// vector is an Nx1 CMatrix; CVector is the dedicated vector type.
using CMatrix = Eigen::MatrixXcd;
using CVector = Eigen::VectorXcd;
using CRowVector = Eigen::RowVectorXcd;

/// Kronecker product. result((i*rowsB+p),(j*colsB+q)) = A(i,j)*B(p,q).
CMatrix kron(const CMatrix& a, const CMatrix& b);

/// Column-major stacking of a matrix into a column vector.
/// Satisfies vec(A*B*C) = (C^T ⊗ A) vec(B) for conformable matrices.
CVector vec(const CMatrix& a);

/// Largest eigenvalue of a Hermitian matrix. The input is symmetrized as
/// (A + A^H)/2 before the decomposition. Throws std::invalid_argument for
/// non-square input.
double max_eig_hermitian(const CMatrix& a);

}  // namespace risnoma
