#include "mamr/kernels.hpp"

#include <atomic>
#include <cmath>
#include <cstdlib>
#include <stdexcept>
#include <string>

#if defined(__x86_64__) || defined(_M_X64)
#include <immintrin.h>
#define MAMR_X86 1
#else
#define MAMR_X86 0
#endif

#if defined(__aarch64__)
#include <arm_neon.h>
#define MAMR_NEON 1
#else
#define MAMR_NEON 0
#endif

namespace mamr::kernels {

namespace scalar {

double dot(const double* a, const double* b, std::size_t n) {
    double lane[4] = {0.0, 0.0, 0.0, 0.0};
    const std::size_t body = n - (n & 3);
    std::size_t i = 0;
    for (; i < body; i += 4) {
        lane[0] = lane[0] + a[i] * b[i];
        lane[1] = lane[1] + a[i + 1] * b[i + 1];
        lane[2] = lane[2] + a[i + 2] * b[i + 2];
        lane[3] = lane[3] + a[i + 3] * b[i + 3];
    }
    double sum = (lane[0] + lane[1]) + (lane[2] + lane[3]);
    for (; i < n; ++i) sum = sum + a[i] * b[i];
    return sum;
}

}  // namespace scalar

#if MAMR_X86
namespace avx2 {

__attribute__((target("avx2"))) double dot(const double* a, const double* b, std::size_t n) {
    const std::size_t body = n - (n & 3);
    __m256d acc = _mm256_setzero_pd();
    std::size_t i = 0;
    for (; i < body; i += 4) {
        const __m256d x = _mm256_loadu_pd(a + i);
        const __m256d y = _mm256_loadu_pd(b + i);
        acc = _mm256_add_pd(acc, _mm256_mul_pd(x, y));
    }
    alignas(32) double lane[4];
    _mm256_store_pd(lane, acc);
    double sum = (lane[0] + lane[1]) + (lane[2] + lane[3]);
    for (; i < n; ++i) sum = sum + a[i] * b[i];
    return sum;
}

}  // namespace avx2
#endif

#if MAMR_NEON
namespace neon {

double dot(const double* a, const double* b, std::size_t n) {
    const std::size_t body = n - (n & 3);
    float64x2_t acc01 = vdupq_n_f64(0.0);
    float64x2_t acc23 = vdupq_n_f64(0.0);
    std::size_t i = 0;
    for (; i < body; i += 4) {
        acc01 = vaddq_f64(acc01, vmulq_f64(vld1q_f64(a + i), vld1q_f64(b + i)));
        acc23 = vaddq_f64(acc23, vmulq_f64(vld1q_f64(a + i + 2), vld1q_f64(b + i + 2)));
    }
    double sum = (vgetq_lane_f64(acc01, 0) + vgetq_lane_f64(acc01, 1)) +
                 (vgetq_lane_f64(acc23, 0) + vgetq_lane_f64(acc23, 1));
    for (; i < n; ++i) sum = sum + a[i] * b[i];
    return sum;
}

}  // namespace neon
#endif

namespace {

using DotFn = double (*)(const double*, const double*, std::size_t);

DotFn dot_for(Isa isa) {
    switch (isa) {
#if MAMR_X86
        case Isa::avx2:
            return &avx2::dot;
#endif
#if MAMR_NEON
        case Isa::neon:
            return &neon::dot;
#endif
        default:
            return &scalar::dot;
    }
}

Isa initial_isa() {
    // MAMR_SIMD=scalar pins the reference path for the whole process.
    if (const char* env = std::getenv("MAMR_SIMD"); env && std::string(env) == "scalar")
        return Isa::scalar;
    return detected_isa();
}

std::atomic<Isa>& active() {
    static std::atomic<Isa> isa{initial_isa()};
    return isa;
}

}  // namespace

std::string_view to_string(Isa isa) {
    switch (isa) {
        case Isa::scalar:
            return "scalar";
        case Isa::avx2:
            return "avx2";
        case Isa::neon:
            return "neon";
    }
    return "?";
}

bool isa_supported(Isa isa) {
    switch (isa) {
        case Isa::scalar:
            return true;
        case Isa::avx2:
#if MAMR_X86
            return __builtin_cpu_supports("avx2");
#else
            return false;
#endif
        case Isa::neon:
            return MAMR_NEON != 0;
    }
    return false;
}

Isa detected_isa() {
    if (isa_supported(Isa::avx2)) return Isa::avx2;
    if (isa_supported(Isa::neon)) return Isa::neon;
    return Isa::scalar;
}

Isa active_isa() { return active().load(std::memory_order_relaxed); }

void force_isa(Isa isa) {
    if (!isa_supported(isa))
        throw std::invalid_argument("ISA " + std::string(to_string(isa)) + " not supported");
    active().store(isa, std::memory_order_relaxed);
}

double dot(std::span<const double> a, std::span<const double> b) {
    if (a.size() != b.size()) throw std::invalid_argument("dot: dimension mismatch");
    return dot_for(active_isa())(a.data(), b.data(), a.size());
}

double squared_norm(std::span<const double> a) {
    return dot_for(active_isa())(a.data(), a.data(), a.size());
}

namespace {

double distance_from(double ab, double aa, double bb) {
    if (aa == 0.0 || bb == 0.0) return 2.0;
    return 1.0 - ab / (std::sqrt(aa) * std::sqrt(bb));
}

}  // namespace

double cosine_distance(std::span<const double> a, std::span<const double> b) {
    if (a.size() != b.size()) throw std::invalid_argument("cosine_distance: dimension mismatch");
    const DotFn f = dot_for(active_isa());
    return distance_from(f(a.data(), b.data(), a.size()), f(a.data(), a.data(), a.size()),
                         f(b.data(), b.data(), b.size()));
}

void cosine_distances(std::span<const double> query, std::span<const double> rows,
                      std::span<double> out) {
    const std::size_t dim = query.size();
    if (dim == 0 || rows.size() % dim != 0 || out.size() != rows.size() / dim)
        throw std::invalid_argument("cosine_distances: shape mismatch");
    const DotFn f = dot_for(active_isa());
    const double qq = f(query.data(), query.data(), dim);
    for (std::size_t r = 0; r < out.size(); ++r) {
        const double* row = rows.data() + r * dim;
        out[r] = distance_from(f(query.data(), row, dim), qq, f(row, row, dim));
    }
}

}  // namespace mamr::kernels
