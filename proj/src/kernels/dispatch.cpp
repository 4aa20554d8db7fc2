#include <atomic>
#include <cstdlib>
#include <string_view>

#include "damro/kernels.hpp"

namespace damro::kernels {

#if defined(DAMRO_HAVE_AVX2)
namespace detail {
const KernelTable& avx2_table_unchecked() noexcept;
}
#endif

const KernelTable* avx2_table() noexcept {
#if defined(DAMRO_HAVE_AVX2)
  static const bool supported = [] {
    __builtin_cpu_init();
    return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
  }();
  if (supported) return &detail::avx2_table_unchecked();
#endif
  return nullptr;
}

namespace {

const KernelTable* select_default() noexcept {
  const char* env = std::getenv("DAMRO_KERNELS");
  const std::string_view want = env ? env : "";
  if (want == "scalar") return &scalar_table();
  if (const KernelTable* avx = avx2_table()) return avx;
  return &scalar_table();
}

std::atomic<const KernelTable*>& slot() noexcept {
  static std::atomic<const KernelTable*> current{select_default()};
  return current;
}

}  // namespace

const KernelTable& active() noexcept { return *slot().load(std::memory_order_acquire); }

void set_active(const KernelTable& table) noexcept { slot().store(&table, std::memory_order_release); }

}  // namespace damro::kernels
