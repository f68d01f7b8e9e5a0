#include <cstdlib>
#include <string>

#include "metafuse/error.hpp"
#include "metafuse/kernels.hpp"

namespace metafuse::kernels {

const KernelSet* simd() {
#if defined(METAFUSE_HAVE_AVX2_TU)
  return detail::avx2_if_supported();
#elif defined(METAFUSE_HAVE_NEON_TU)
  return detail::neon_if_supported();
#else
  return nullptr;
#endif
}

const KernelSet& select(Preference p) {
  if (p == Preference::automatic) {
    const char* env = std::getenv("METAFUSE_KERNELS");
    if (env != nullptr) p = parse_preference(env);
  }
  if (p == Preference::scalar) return scalar();
  const KernelSet* s = simd();
  return s ? *s : scalar();
}

Preference parse_preference(std::string_view text) {
  if (text == "auto" || text.empty()) return Preference::automatic;
  if (text == "scalar") return Preference::scalar;
  if (text == "simd") return Preference::simd;
  throw ConfigError("unknown kernel preference '" + std::string(text) + "' (expected auto|scalar|simd)");
}

const KernelSet& active() { return select(Preference::automatic); }

}  // namespace metafuse::kernels
