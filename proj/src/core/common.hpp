#pragma once

#include <cstdint>
#include <functional>
#include <stdexcept>
#include <string>
#include <vector>

namespace rsplat {

// Error taxonomy shared by the core library and the C API. Categories map to
// process exit codes (config=2, io=3, training=4, fitting=5).
enum class ErrorCode {
    MalformedXml,
    UnknownLinkRef,
    CycleDetected,
    UnsupportedJointKind,
    NoGeometry,
    PoseLengthMismatch,
    PoseMismatch,
    NoTape,
    EmptyAfterPrune,
    ShapeMismatch,
    NonFiniteGradient,
    EmptySet,
    DivergedNonFinite,
    IndexOutOfRange,
    EmptyInput,
    BridgeProtocolError,
    BridgeClosed,
    StaleAux,
    IoFailure,
    ConfigError,
};

const char* error_code_name(ErrorCode code);

class Error : public std::runtime_error {
  public:
    Error(ErrorCode code, const std::string& message)
        : std::runtime_error(std::string(error_code_name(code)) + ": " + message), code_(code) {}

    ErrorCode code() const { return code_; }

  private:
    ErrorCode code_;
};

[[noreturn]] inline void fail(ErrorCode code, const std::string& message) {
    throw Error(code, message);
}

inline void require(bool cond, ErrorCode code, const std::string& message) {
    if (!cond) fail(code, message);
}

// Deterministic PRNG (splitmix64 core). All randomness in the library flows
// through this type so results are bit-exact for a fixed seed, independent of
// the standard library's distribution implementations.
struct Rng {
    uint64_t state;

    explicit Rng(uint64_t seed) : state(seed) {}

    uint64_t next_u64() {
        uint64_t z = (state += 0x9e3779b97f4a7c15ull);
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
        return z ^ (z >> 31);
    }

    // Uniform in [0,1).
    double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    // Uniform integer in [0, n).
    int64_t uniform_int(int64_t n) {
        return static_cast<int64_t>(uniform() * static_cast<double>(n)) % n;
    }

    // Standard normal via Box-Muller (no cached spare; two draws per call).
    double normal();

    // Derive an independent stream for a named purpose.
    Rng fork(uint64_t salt) const {
        Rng r(state ^ (salt * 0x9e3779b97f4a7c15ull + 0x165667b19e3779f9ull));
        r.next_u64();
        return r;
    }
};

// Thread pool controls. parallel_for guarantees that task outputs are only
// identified by task index, so callers can merge results in index order and
// obtain bit-identical reductions at any thread count.
int thread_count();
void set_thread_count(int n);

void parallel_for(int64_t n, const std::function<void(int64_t)>& body);

// FNV-1a over raw bytes, used to detect stale render tapes.
uint64_t hash_bytes(uint64_t seed, const void* data, size_t len);

template <typename T>
uint64_t hash_span(uint64_t seed, const std::vector<T>& v) {
    return hash_bytes(seed, v.data(), v.size() * sizeof(T));
}

}  // namespace rsplat
