#include <atomic>

#include "popdyn/kernels.hpp"

namespace popdyn::kernels {
namespace {

bool cpu_has_avx2() noexcept {
#if defined(POPDYN_HAVE_AVX2) && (defined(__GNUC__) || defined(__clang__))
  __builtin_cpu_init();
  return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
#else
  return false;
#endif
}

const KernelTable& table_for(Backend b) noexcept {
#ifdef POPDYN_HAVE_AVX2
  if (b == Backend::Avx2) return avx2::table();
#endif
  (void)b;
  return scalar::table();
}

Backend detect() noexcept { return cpu_has_avx2() ? Backend::Avx2 : Backend::Scalar; }

std::atomic<Backend>& current() noexcept {
  static std::atomic<Backend> b{detect()};
  return b;
}

}  // namespace

bool backend_available(Backend b) noexcept {
  return b == Backend::Scalar || (b == Backend::Avx2 && cpu_has_avx2());
}

Backend active_backend() noexcept { return current().load(std::memory_order_relaxed); }

bool force_backend(Backend b) noexcept {
  if (!backend_available(b)) return false;
  current().store(b, std::memory_order_relaxed);
  return true;
}

std::string_view backend_name(Backend b) noexcept {
  return b == Backend::Avx2 ? "avx2" : "scalar";
}

const KernelTable& active() noexcept { return table_for(active_backend()); }

}  // namespace popdyn::kernels
