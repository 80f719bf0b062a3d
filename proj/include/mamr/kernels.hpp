#pragma once

// Vector kernels behind similarity retrieval.
//
// Every variant accumulates in four interleaved lanes (element i goes to lane
// i % 4), reduces as (lane0 + lane1) + (lane2 + lane3) and then adds the tail
// sequentially, with separate multiply and add (no FMA). The scalar
// reference and the SIMD variants therefore return bit-identical results, so
// retrieval order never depends on the host ISA.

#include <cstddef>
#include <span>
#include <string_view>

namespace mamr::kernels {

enum class Isa { scalar, avx2, neon };

std::string_view to_string(Isa isa);

/// Best ISA supported by the running CPU.
Isa detected_isa();
/// ISA currently used by the dispatching entry points.
Isa active_isa();
/// Overrides dispatch (tests, benchmarking). Throws std::invalid_argument if
/// the CPU does not support `isa`.
void force_isa(Isa isa);
bool isa_supported(Isa isa);

double dot(std::span<const double> a, std::span<const double> b);
double squared_norm(std::span<const double> a);

/// 1 - cos(a, b); 2 when either vector has zero norm.
double cosine_distance(std::span<const double> a, std::span<const double> b);

/// Cosine distance from `query` to each row of a row-major `rows` matrix with
/// row length query.size(). `out` must hold rows.size() / query.size() values.
void cosine_distances(std::span<const double> query, std::span<const double> rows,
                      std::span<double> out);

namespace scalar {
double dot(const double* a, const double* b, std::size_t n);
}

#if defined(__x86_64__) || defined(_M_X64)
namespace avx2 {
double dot(const double* a, const double* b, std::size_t n);
}
#endif

#if defined(__aarch64__)
namespace neon {
double dot(const double* a, const double* b, std::size_t n);
}
#endif

}  // namespace mamr::kernels
