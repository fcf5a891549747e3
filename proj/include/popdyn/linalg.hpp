#pragma once

#include <complex>
#include <span>
#include <vector>

#include "popdyn/matrix.hpp"

namespace popdyn::linalg {

/// Solves A x = b by LU with partial pivoting. Throws SingularSystem when the
/// factorization is rank deficient or the relative residual exceeds `max_residual`.
Vector solve(const Matrix& a, std::span<const double> b, double max_residual = 1e-10);

/// All eigenvalues of a square matrix (dense Hessenberg-QR), unordered.
std::vector<std::complex<double>> eigenvalues(const Matrix& a);

/// Magnitudes sorted descending.
std::vector<double> eigenvalue_magnitudes(const Matrix& a);

}  // namespace popdyn::linalg
