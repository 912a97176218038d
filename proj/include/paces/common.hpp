#pragma once

#include <complex>
#include <cstdint>
#include <cstdlib>
#include <stdexcept>
#include <string>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace paces {

/// Word type used by the engine-facing packed tables. The codec itself is
/// generic over the word type; 16- and 64-bit words are exercised in tests.
using Word = std::uint32_t;

using cplx = std::complex<double>;

class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// ---------------------------------------------------------------------------
// memory budget
// ---------------------------------------------------------------------------

/// Allocation cap in bytes taken from PACES_MAX_MEMORY_BYTES; 0 = unlimited.
/// Read on every call so tests can toggle the variable at runtime.
inline std::uint64_t memory_cap_bytes() {
    const char* env = std::getenv("PACES_MAX_MEMORY_BYTES");
    if (env == nullptr || *env == '\0') return 0;
    char* end = nullptr;
    unsigned long long v = std::strtoull(env, &end, 10);
    if (end == env) throw Error("PACES_MAX_MEMORY_BYTES is not a number: " + std::string(env));
    return static_cast<std::uint64_t>(v);
}

/// Checks a projected allocation size against the memory cap.
inline void require_memory(std::uint64_t bytes, const char* what) {
    const std::uint64_t cap = memory_cap_bytes();
    if (cap != 0 && bytes > cap) {
        throw Error(std::string("memory cap exceeded: ") + what + " needs " +
                    std::to_string(bytes) + " bytes, PACES_MAX_MEMORY_BYTES=" +
                    std::to_string(cap));
    }
}

// ---------------------------------------------------------------------------
// worker threads
// ---------------------------------------------------------------------------

inline void set_thread_count(int n) {
#ifdef _OPENMP
    if (n >= 1) omp_set_num_threads(n);
#else
    (void)n;
#endif
}

inline int thread_count() {
#ifdef _OPENMP
    return omp_get_max_threads();
#else
    return 1;
#endif
}

// ---------------------------------------------------------------------------
// seeding
// ---------------------------------------------------------------------------

/// splitmix64 step; used to derive independent per-step seeds from one seed.
inline std::uint64_t mix_seed(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

}  // namespace paces
