#include "common.hpp"

#include <atomic>
#include <cmath>
#include <condition_variable>
#include <mutex>
#include <thread>

namespace rsplat {

const char* error_code_name(ErrorCode code) {
    switch (code) {
        case ErrorCode::MalformedXml: return "MalformedXml";
        case ErrorCode::UnknownLinkRef: return "UnknownLinkRef";
        case ErrorCode::CycleDetected: return "CycleDetected";
        case ErrorCode::UnsupportedJointKind: return "UnsupportedJointKind";
        case ErrorCode::NoGeometry: return "NoGeometry";
        case ErrorCode::PoseLengthMismatch: return "PoseLengthMismatch";
        case ErrorCode::PoseMismatch: return "PoseMismatch";
        case ErrorCode::NoTape: return "NoTape";
        case ErrorCode::EmptyAfterPrune: return "EmptyAfterPrune";
        case ErrorCode::ShapeMismatch: return "ShapeMismatch";
        case ErrorCode::NonFiniteGradient: return "NonFiniteGradient";
        case ErrorCode::EmptySet: return "EmptySet";
        case ErrorCode::DivergedNonFinite: return "DivergedNonFinite";
        case ErrorCode::IndexOutOfRange: return "IndexOutOfRange";
        case ErrorCode::EmptyInput: return "EmptyInput";
        case ErrorCode::BridgeProtocolError: return "BridgeProtocolError";
        case ErrorCode::BridgeClosed: return "BridgeClosed";
        case ErrorCode::StaleAux: return "StaleAux";
        case ErrorCode::IoFailure: return "IoFailure";
        case ErrorCode::ConfigError: return "ConfigError";
    }
    return "UnknownError";
}

double Rng::normal() {
    double u1 = uniform();
    double u2 = uniform();
    if (u1 < 1e-300) u1 = 1e-300;
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * M_PI * u2);
}

namespace {

std::atomic<int> g_threads{0};  // 0 = auto

int resolve_threads() {
    int n = g_threads.load(std::memory_order_relaxed);
    if (n <= 0) {
        unsigned hc = std::thread::hardware_concurrency();
        n = hc == 0 ? 1 : static_cast<int>(hc);
    }
    return n;
}

}  // namespace

int thread_count() { return resolve_threads(); }

void set_thread_count(int n) { g_threads.store(n, std::memory_order_relaxed); }

void parallel_for(int64_t n, const std::function<void(int64_t)>& body) {
    if (n <= 0) return;
    const int workers = std::min<int64_t>(resolve_threads(), n);
    if (workers <= 1) {
        for (int64_t i = 0; i < n; ++i) body(i);
        return;
    }
    std::atomic<int64_t> next{0};
    std::exception_ptr first_error;
    std::mutex error_mutex;
    auto run = [&]() {
        for (;;) {
            int64_t i = next.fetch_add(1, std::memory_order_relaxed);
            if (i >= n) return;
            try {
                body(i);
            } catch (...) {
                std::lock_guard<std::mutex> lock(error_mutex);
                if (!first_error) first_error = std::current_exception();
                return;
            }
        }
    };
    std::vector<std::thread> pool;
    pool.reserve(workers - 1);
    for (int w = 1; w < workers; ++w) pool.emplace_back(run);
    run();
    for (auto& t : pool) t.join();
    if (first_error) std::rethrow_exception(first_error);
}

uint64_t hash_bytes(uint64_t seed, const void* data, size_t len) {
    const auto* p = static_cast<const unsigned char*>(data);
    uint64_t h = seed ^ 0xcbf29ce484222325ull;
    for (size_t i = 0; i < len; ++i) {
        h ^= p[i];
        h *= 0x100000001b3ull;
    }
    return h;
}

}  // namespace rsplat
