#include <atomic>
#include <cstdlib>
#include <string>

#include "kinelo/error.hpp"
#include "kinelo/simd.hpp"

namespace kinelo::simd {
namespace detail {
#ifndef KINELO_HAVE_AVX2
const KernelTable* avx2_table() { return nullptr; }
#endif
}  // namespace detail

namespace {

bool cpu_has_avx2() {
#if defined(KINELO_HAVE_AVX2) && (defined(__GNUC__) || defined(__clang__))
  __builtin_cpu_init();
  return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
#else
  return false;
#endif
}

Backend detect() {
  if (const char* env = std::getenv("KINELO_SIMD"); env != nullptr && *env != '\0') {
    const Backend b = parse_backend(env);
    if (available(b)) return b;
  }
  return available(Backend::kAvx2) ? Backend::kAvx2 : Backend::kScalar;
}

std::atomic<const KernelTable*>& active() {
  static std::atomic<const KernelTable*> table{&kernels(detect())};
  return table;
}

}  // namespace

bool available(Backend b) {
  switch (b) {
    case Backend::kScalar:
      return true;
    case Backend::kAvx2:
      return detail::avx2_table() != nullptr && cpu_has_avx2();
  }
  return false;
}

const KernelTable& kernels(Backend b) {
  if (!available(b)) {
    throw ConfigError("run.simd", "backend '" + std::string(name(b)) +
                                      "' is not available on this machine");
  }
  return b == Backend::kAvx2 ? *detail::avx2_table() : detail::scalar_table();
}

const KernelTable& kernels() { return *active().load(std::memory_order_acquire); }

void set_backend(Backend b) { active().store(&kernels(b), std::memory_order_release); }

std::string_view name(Backend b) {
  return b == Backend::kAvx2 ? "avx2" : "scalar";
}

Backend parse_backend(std::string_view s) {
  if (s == "scalar") return Backend::kScalar;
  if (s == "avx2") return Backend::kAvx2;
  if (s == "auto") return available(Backend::kAvx2) ? Backend::kAvx2 : Backend::kScalar;
  throw ConfigError("run.simd", "expected scalar, avx2 or auto, got '" + std::string(s) + "'");
}

}  // namespace kinelo::simd
