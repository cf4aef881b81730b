// Runtime ISA selection. Defaults to the best backend the CPU supports;
// force_isa pins a backend for equivalence tests and the CLI --isa flag.

#include "homtom/simd.hpp"

#include <atomic>
#include <stdexcept>
#include <string>

namespace homtom::simd {
namespace {

#if defined(HOMTOM_HAVE_AVX2) && (defined(__x86_64__) || defined(__i386__))
bool cpu_has_avx2() {
    return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
}
#else
bool cpu_has_avx2() { return false; }
#endif

std::atomic<const Ops*> g_forced{nullptr};

}  // namespace

bool avx2_available() {
    static const bool ok = cpu_has_avx2();
    return ok;
}

#if !defined(HOMTOM_HAVE_AVX2)
const Ops& avx2_ops() { throw std::runtime_error("avx2 backend not compiled in"); }
#endif

const Ops& active() {
    const Ops* forced = g_forced.load(std::memory_order_acquire);
    if (forced) return *forced;
    return avx2_available() ? avx2_ops() : scalar_ops();
}

void force_isa(std::string_view name) {
    if (name == "auto") {
        g_forced.store(nullptr, std::memory_order_release);
    } else if (name == "scalar") {
        g_forced.store(&scalar_ops(), std::memory_order_release);
    } else if (name == "avx2") {
        if (!avx2_available())
            throw std::runtime_error("avx2 not available on this CPU");
        g_forced.store(&avx2_ops(), std::memory_order_release);
    } else {
        throw std::invalid_argument("unknown isa: " + std::string(name));
    }
}

}  // namespace homtom::simd
