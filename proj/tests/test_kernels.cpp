#include <doctest.h>

#include <cmath>
#include <cstring>
#include <random>
#include <vector>

#include "mamr/kernels.hpp"

using namespace mamr::kernels;

namespace {

std::vector<double> random_vec(std::mt19937_64& rng, std::size_t n) {
    std::normal_distribution<double> d(0.0, 1.0);
    std::vector<double> v(n);
    for (auto& x : v) x = d(rng);
    return v;
}

bool same_bits(double a, double b) { return std::memcmp(&a, &b, sizeof a) == 0; }

}  // namespace

TEST_CASE("scalar dot matches a long double sum") {
    std::mt19937_64 rng(1);
    for (std::size_t n : {0u, 1u, 3u, 4u, 7u, 16u, 33u}) {
        const auto a = random_vec(rng, n), b = random_vec(rng, n);
        long double ref = 0;
        for (std::size_t i = 0; i < n; ++i) ref += static_cast<long double>(a[i]) * b[i];
        CHECK(scalar::dot(a.data(), b.data(), n) == doctest::Approx(static_cast<double>(ref)).epsilon(1e-12));
    }
}

TEST_CASE("SIMD kernels are bit-identical to the scalar reference") {
    std::mt19937_64 rng(2);
    for (int trial = 0; trial < 500; ++trial) {
        const std::size_t n = trial % 70;
        const auto a = random_vec(rng, n), b = random_vec(rng, n);
        const double s = scalar::dot(a.data(), b.data(), n);
#if defined(__x86_64__)
        if (isa_supported(Isa::avx2)) REQUIRE(same_bits(s, avx2::dot(a.data(), b.data(), n)));
#endif
#if defined(__aarch64__)
        REQUIRE(same_bits(s, neon::dot(a.data(), b.data(), n)));
#endif
        REQUIRE(same_bits(s, dot(a, b)));
    }
}

TEST_CASE("cosine distances agree across ISAs") {
    std::mt19937_64 rng(3);
    const std::size_t dim = 16, rows = 50;
    const auto q = random_vec(rng, dim);
    auto m = random_vec(rng, dim * rows);
    std::fill(m.begin(), m.begin() + dim, 0.0);  // zero row
    std::vector<double> first(rows), second(rows);

    const Isa original = active_isa();
    force_isa(Isa::scalar);
    cosine_distances(q, m, first);
    force_isa(detected_isa());
    cosine_distances(q, m, second);
    force_isa(original);

    CHECK(first[0] == 2.0);
    for (std::size_t i = 0; i < rows; ++i) CHECK(same_bits(first[i], second[i]));
    for (std::size_t i = 1; i < rows; ++i)
        CHECK(first[i] == doctest::Approx(cosine_distance(q, std::span<const double>(m).subspan(i * dim, dim))));
}

TEST_CASE("cosine distance basics") {
    const std::vector<double> a{1, 0}, b{0, 1}, c{2, 0}, z{0, 0};
    CHECK(cosine_distance(a, c) == doctest::Approx(0.0));
    CHECK(cosine_distance(a, b) == doctest::Approx(1.0));
    CHECK(cosine_distance(a, z) == 2.0);
    CHECK(squared_norm(c) == 4.0);
    CHECK(to_string(Isa::scalar) == "scalar");
    CHECK(isa_supported(Isa::scalar));
}
