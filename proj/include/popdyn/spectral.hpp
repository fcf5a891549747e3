#pragma once

#include <cstddef>
#include <utility>
#include <vector>

#include "popdyn/graph.hpp"
#include "popdyn/matrix.hpp"

namespace popdyn {

struct SpectralRadiusOptions {
  double relative_tolerance = 1e-12;
  std::size_t max_iterations = 100000;
};

/// max |eigenvalue|. Nonnegative matrices go through power iteration (the
/// Perron root dominates); anything else, or a power iteration that stalls,
/// goes to the dense eigensolver.
double spectral_radius(const Matrix& m, const SpectralRadiusOptions& opts = {});

/// Magnitude of the largest eigenvalue once one instance of the dominant one
/// is removed. Requires at least a 2x2 matrix.
double subdominant_magnitude(const Matrix& m);

/// Left eigenvector for eigenvalue 1, nonnegative, summing to 1.
/// Throws NotUnique when the chain has more than one closed class.
Vector stationary_distribution(const RowStochasticMatrix& m);

struct NormSample {
  std::size_t k;
  double norm;
};

/// ||M^k||_inf for k = 1..k_max. Requires spectral_radius(M) < 1.
/// Throws Overflow (with at() = k) if a power stops being finite.
std::vector<NormSample> power_norm_decay(const Matrix& m, std::size_t k_max);

/// Least-squares slope of log(norm) against k over samples with k in [k_from, k_to].
double log_decay_slope(const std::vector<NormSample>& samples, std::size_t k_from,
                       std::size_t k_to);

}  // namespace popdyn
