#include "popdyn/kernels.hpp"

#include <cmath>
#include <limits>

namespace popdyn::kernels::scalar {
namespace {

double dot(const double* a, const double* b, std::size_t n) {
  double acc = 0.0;
  for (std::size_t i = 0; i < n; ++i) acc += a[i] * b[i];
  return acc;
}

void axpy(double a, const double* x, double* y, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) y[i] += a * x[i];
}

void affine_update(const double* alpha, const double* y, const double* beta, double pi,
                   const double* gamma, double q, double* out, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) out[i] = alpha[i] * y[i] + beta[i] * pi + gamma[i] * q;
}

double max_abs_diff(const double* a, const double* b, std::size_t n) {
  double m = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double d = std::fabs(a[i] - b[i]);
    if (std::isnan(d)) return std::numeric_limits<double>::quiet_NaN();
    if (d > m) m = d;
  }
  return m;
}

double sum(const double* a, std::size_t n) {
  double acc = 0.0;
  for (std::size_t i = 0; i < n; ++i) acc += a[i];
  return acc;
}

constexpr KernelTable kTable{&dot, &axpy, &affine_update, &max_abs_diff, &sum};

}  // namespace

const KernelTable& table() noexcept { return kTable; }

}  // namespace popdyn::kernels::scalar
