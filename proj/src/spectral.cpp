#include "popdyn/spectral.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "popdyn/error.hpp"
#include "popdyn/kernels.hpp"
#include "popdyn/linalg.hpp"
#include "popdyn/rng.hpp"

namespace popdyn {
namespace {

void require_square_finite(const Matrix& m, const char* what) {
  if (!m.square()) throw Error(ErrorCode::NonSquare, std::string(what) + ": matrix not square");
  for (double x : m.data()) {
    if (!std::isfinite(x)) {
      throw Error(ErrorCode::InvalidArgument, std::string(what) + ": non-finite entry");
    }
  }
}

double dense_radius(const Matrix& m) {
  const auto mags = linalg::eigenvalue_magnitudes(m);
  return mags.empty() ? 0.0 : mags.front();
}

}  // namespace

double spectral_radius(const Matrix& m, const SpectralRadiusOptions& opts) {
  require_square_finite(m, "spectral_radius");
  const std::size_t n = m.rows();
  if (n == 0) return 0.0;
  if (std::any_of(m.data().begin(), m.data().end(), [](double x) { return x < 0.0; })) {
    return dense_radius(m);
  }

  Rng rng(0x5eedULL);
  Vector x(n);
  for (auto& xi : x) xi = 0.5 + rng.uniform();
  const double s0 = kernels::sum(x);
  for (auto& xi : x) xi /= s0;

  double prev = -1.0;
  int calm = 0;
  for (std::size_t it = 0; it < opts.max_iterations; ++it) {
    Vector y = m * x;
    const double s = kernels::sum(y);  // ||y||_1 since y >= 0 and ||x||_1 = 1
    if (s == 0.0) return 0.0;          // M^k x0 = 0 with x0 > 0 means M is nilpotent
    for (std::size_t i = 0; i < n; ++i) x[i] = y[i] / s;
    if (std::fabs(s - prev) <= opts.relative_tolerance * s) {
      if (++calm >= 3) return s;
    } else {
      calm = 0;
    }
    prev = s;
  }
  // Periodic or nearly-degenerate spectrum: power iteration oscillates or crawls.
  return dense_radius(m);
}

double subdominant_magnitude(const Matrix& m) {
  require_square_finite(m, "subdominant_magnitude");
  if (m.rows() < 2) {
    throw Error(ErrorCode::InvalidArgument, "subdominant_magnitude: need at least 2x2");
  }
  return linalg::eigenvalue_magnitudes(m)[1];
}

Vector stationary_distribution(const RowStochasticMatrix& m) {
  const std::size_t n = m.n();
  if (closed_class_count(m) > 1) {
    throw Error(ErrorCode::NotUnique,
                "stationary_distribution: eigenvalue 1 is not simple (several closed classes)");
  }
  // phi^T (M - I) = 0 with the last equation replaced by sum(phi) = 1.
  Matrix a(n, n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) a(i, j) = m(j, i) - (i == j ? 1.0 : 0.0);
  for (std::size_t j = 0; j < n; ++j) a(n - 1, j) = 1.0;
  Vector rhs(n, 0.0);
  rhs[n - 1] = 1.0;

  Vector phi;
  try {
    phi = linalg::solve(a, rhs, 1e-10);
  } catch (const Error& e) {
    throw Error(ErrorCode::NotUnique, std::string("stationary_distribution: ") + e.what());
  }
  for (auto& p : phi) {
    if (p < -1e-12) {
      throw Error(ErrorCode::NoConvergence, "stationary_distribution: negative component");
    }
    p = std::max(p, 0.0);
  }
  const double total = kernels::sum(phi);
  for (auto& p : phi) p /= total;

  double residual = 0.0;
  for (std::size_t j = 0; j < n; ++j) {
    double acc = 0.0;
    for (std::size_t i = 0; i < n; ++i) acc += phi[i] * m(i, j);
    residual += std::fabs(acc - phi[j]);
  }
  if (!(residual <= 1e-10)) {
    throw Error(ErrorCode::NoConvergence,
                "stationary_distribution: residual " + std::to_string(residual));
  }
  return phi;
}

std::vector<NormSample> power_norm_decay(const Matrix& m, std::size_t k_max) {
  require_square_finite(m, "power_norm_decay");
  if (k_max == 0) throw Error(ErrorCode::InvalidArgument, "power_norm_decay: k_max must be >= 1");
  const double rho = spectral_radius(m);
  if (!(rho < 1.0)) {
    throw Error(ErrorCode::DomainError,
                "power_norm_decay: spectral radius " + std::to_string(rho) + " is not < 1");
  }
  std::vector<NormSample> out;
  out.reserve(k_max);
  Matrix power = m;
  for (std::size_t k = 1; k <= k_max; ++k) {
    const double nrm = norm_inf(power);
    if (!std::isfinite(nrm)) {
      throw Error(ErrorCode::Overflow,
                  "power_norm_decay: ||M^k|| overflowed at k=" + std::to_string(k),
                  static_cast<std::int64_t>(k));
    }
    out.push_back({k, nrm});
    if (k < k_max) power = power * m;
  }
  return out;
}

double log_decay_slope(const std::vector<NormSample>& samples, std::size_t k_from,
                       std::size_t k_to) {
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  std::size_t cnt = 0;
  for (const auto& s : samples) {
    if (s.k < k_from || s.k > k_to) continue;
    if (!(s.norm > 0.0)) {
      throw Error(ErrorCode::DomainError, "log_decay_slope: zero norm at k=" + std::to_string(s.k),
                  static_cast<std::int64_t>(s.k));
    }
    const double x = static_cast<double>(s.k);
    const double y = std::log(s.norm);
    sx += x;
    sy += y;
    sxx += x * x;
    sxy += x * y;
    ++cnt;
  }
  if (cnt < 2) throw Error(ErrorCode::TooShort, "log_decay_slope: fewer than 2 samples");
  const double c = static_cast<double>(cnt);
  return (c * sxy - sx * sy) / (c * sxx - sx * sx);
}

}  // namespace popdyn
