#pragma once

// Inner-loop arithmetic used by the simulator and the matrix-product code.
//
// Every kernel has a scalar reference implementation and, on x86-64 builds, an
// AVX2/FMA variant. The variant is picked once per process from CPUID; tests
// can force either backend. Results of the two backends agree to within the
// usual reassociation error bound, not bitwise.

#include <cstddef>
#include <span>
#include <string_view>

namespace popdyn::kernels {

enum class Backend { Scalar, Avx2 };

struct KernelTable {
  double (*dot)(const double* a, const double* b, std::size_t n);
  // y[i] += a * x[i]
  void (*axpy)(double a, const double* x, double* y, std::size_t n);
  // out[v] = alpha[v] * y[v] + beta[v] * pi + gamma[v] * q
  void (*affine_update)(const double* alpha, const double* y, const double* beta, double pi,
                        const double* gamma, double q, double* out, std::size_t n);
  double (*max_abs_diff)(const double* a, const double* b, std::size_t n);
  double (*sum)(const double* a, std::size_t n);
};

namespace scalar {
const KernelTable& table() noexcept;
}

#ifdef POPDYN_HAVE_AVX2
namespace avx2 {
const KernelTable& table() noexcept;
}
#endif

bool backend_available(Backend b) noexcept;
Backend active_backend() noexcept;
/// Overrides the CPUID choice; returns false when `b` is not available.
bool force_backend(Backend b) noexcept;
std::string_view backend_name(Backend b) noexcept;

const KernelTable& active() noexcept;

inline double dot(std::span<const double> a, std::span<const double> b) {
  return active().dot(a.data(), b.data(), a.size());
}
inline void axpy(double a, std::span<const double> x, std::span<double> y) {
  active().axpy(a, x.data(), y.data(), x.size());
}
inline double max_abs_diff(std::span<const double> a, std::span<const double> b) {
  return active().max_abs_diff(a.data(), b.data(), a.size());
}
inline double sum(std::span<const double> a) { return active().sum(a.data(), a.size()); }

}  // namespace popdyn::kernels
