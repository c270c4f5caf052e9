#include <cmath>
#include <random>

#include "doctest.h"
#include "scatter/error.hpp"
#include "scatter/fourier.hpp"

using namespace scatter;

namespace {

template <class T>
ComplexGrid<T> random_grid(std::size_t m, std::uint64_t seed) {
    ComplexGrid<T> g(m);
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> n(0.0, 1.0);
    for (auto& z : g.span()) z = Complex<T>(static_cast<T>(n(rng)), static_cast<T>(n(rng)));
    return g;
}

template <class T>
double max_diff(const ComplexGrid<T>& a, const ComplexGrid<T>& b) {
    double d = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i)
        d = std::max(d, std::abs(std::complex<double>(a.data()[i]) - std::complex<double>(b.data()[i])));
    return d;
}

}  // namespace

TEST_CASE("dft2: impulse, constant and round trip") {
    ComplexGrid<float> delta(8);
    delta(0, 0) = 1.0f;
    const auto D = dft2(delta);
    for (const auto& z : D.span()) CHECK(std::abs(z - Complex<float>(1.0f)) < 1e-6f);

    ComplexGrid<double> c(8);
    for (auto& z : c.span()) z = 2.5;
    const auto C = dft2(c);
    CHECK(std::abs(C(0, 0) - Complex<double>(64 * 2.5)) < 1e-12);
    for (std::size_t i = 1; i < C.size(); ++i) CHECK(std::abs(C.data()[i]) < 1e-12);

    const auto g = random_grid<float>(16, 1);
    CHECK(max_diff(idft2(dft2(g)), g) < 1e-5);

    ComplexGrid<float> ones(8);
    for (auto& z : ones.span()) z = 1.0f;
    const auto imp = idft2(ones);
    CHECK(std::abs(imp(0, 0) - Complex<float>(1.0f)) < 1e-6f);
    CHECK(std::abs(imp(3, 5)) < 1e-6f);
}

TEST_CASE("dft2: non power of two rejected") { CHECK_THROWS_AS(ComplexGrid<float>(12), InvalidInput); }

TEST_CASE("idft2 is linear") {
    const auto s = random_grid<double>(8, 2);
    ComplexGrid<double> s3 = s;
    for (auto& z : s3.span()) z *= 3.0;
    auto a = idft2(s3), b = idft2(s);
    for (auto& z : b.span()) z *= 3.0;
    CHECK(max_diff(a, b) < 1e-12);
}

TEST_CASE("Parseval") {
    const auto g = random_grid<float>(32, 3);
    const double lhs = std::pow(l2_norm(dft2(g)), 2);
    const double rhs = 32.0 * 32.0 * std::pow(l2_norm(g), 2);
    CHECK(lhs == doctest::Approx(rhs).epsilon(1e-5));
}

TEST_CASE("periodize: identity, constants, spatial subsampling") {
    const auto s = random_grid<double>(16, 4);
    CHECK(periodize(s, 0) == s);

    ComplexGrid<double> c(16);
    for (auto& z : c.span()) z = Complex<double>(1.5, -0.5);
    const auto P = periodize(c, 2);
    for (const auto& z : P.span()) CHECK(std::abs(z - Complex<double>(1.5, -0.5)) < 1e-12);

    const auto x = random_grid<double>(16, 5);
    const auto sub = idft2(periodize(dft2(x), 2));
    REQUIRE(sub.side() == 4);
    for (std::size_t y = 0; y < 4; ++y)
        for (std::size_t q = 0; q < 4; ++q) CHECK(std::abs(sub(y, q) - x(4 * y, 4 * q)) < 1e-6);

    CHECK(l2_norm(periodize(s, 1)) <= l2_norm(s));
    CHECK_THROWS_AS(periodize(ComplexGrid<double>(4), 3), InvalidInput);
}

TEST_CASE("periodize_vjp: identity, zero, dot-product") {
    const auto g = random_grid<double>(4, 6);
    CHECK(periodize_vjp(g, 0) == g);
    const auto V = periodize_vjp(ComplexGrid<double>(4), 2);
    for (const auto& z : V.span()) CHECK(z == Complex<double>(0.0));

    const auto s = random_grid<double>(16, 7);
    const auto p = periodize(s, 2);
    const auto a = periodize_vjp(g, 2);
    Complex<double> lhs = 0.0, rhs = 0.0;
    for (std::size_t i = 0; i < p.size(); ++i) lhs += p.data()[i] * std::conj(g.data()[i]);
    for (std::size_t i = 0; i < s.size(); ++i) rhs += s.data()[i] * std::conj(a.data()[i]);
    CHECK(std::abs(lhs - rhs) < 1e-12 * std::abs(lhs));
}

TEST_CASE("pointwise_mul") {
    const auto a = random_grid<double>(8, 8), b = random_grid<double>(8, 9);
    ComplexGrid<double> ones(8), zero(8);
    for (auto& z : ones.span()) z = 1.0;
    CHECK(pointwise_mul(a, ones) == a);
    const auto Z = pointwise_mul(zero, b);
    for (const auto& z : Z.span()) CHECK(z == Complex<double>(0.0));
    CHECK(max_diff(pointwise_mul(a, b), pointwise_mul(b, a)) < 1e-15);
    CHECK_THROWS_AS(pointwise_mul(a, ComplexGrid<double>(4)), InvalidInput);
}

TEST_CASE("modulus") {
    ComplexGrid<double> g(2);
    g(0, 0) = Complex<double>(3, 4);
    g(1, 1) = 2.0;
    const auto m = modulus(g);
    CHECK(m(0, 0) == Complex<double>(5, 0));
    CHECK(m(1, 1) == Complex<double>(2, 0));

    const auto a = random_grid<double>(16, 10), b = random_grid<double>(16, 11);
    CHECK(l2_norm(modulus(a)) == doctest::Approx(l2_norm(a)).epsilon(1e-12));
    ComplexGrid<double> da(16), dm(16);
    const auto ma = modulus(a), mb = modulus(b);
    for (std::size_t i = 0; i < a.size(); ++i) {
        da.data()[i] = a.data()[i] - b.data()[i];
        dm.data()[i] = ma.data()[i] - mb.data()[i];
    }
    CHECK(l2_norm(dm) <= l2_norm(da));
}

TEST_CASE("fused kernels match multiply then periodize") {
    std::mt19937_64 rng(21);
    std::normal_distribution<double> n(0.0, 1.0);
    const std::size_t M = 16;
    ComplexGrid<double> f(M), v(M);
    for (auto& z : f.span()) z = {n(rng), n(rng)};
    for (auto& z : v.span()) z = {n(rng), n(rng)};
    for (int k = 0; k <= 2; ++k) {
        const auto ref = periodize(pointwise_mul(f, v), k);
        ComplexGrid<double> fused(M >> k);
        kernel::multiply_periodize<double>(f.span(), v.span(), M, 0.5, k, fused.span());
        for (std::size_t i = 0; i < fused.size(); ++i) CHECK(std::abs(fused.data()[i] - 0.5 * ref.data()[i]) < 1e-12);

        ComplexGrid<double> g(M >> k);
        for (auto& z : g.span()) z = {n(rng), n(rng)};
        const auto tiled = periodize_vjp(g, k);
        ComplexGrid<double> acc(M), expect(M);
        for (std::size_t i = 0; i < acc.size(); ++i) acc.data()[i] = expect.data()[i] = {1.0, -1.0};
        kernel::multiply_conj_accumulate<double>(f.span(), tiled.span(), 2.0, expect.span());
        kernel::tile_multiply_conj_accumulate<double>(f.span(), g.span(), M >> k, k, 2.0, acc.span());
        for (std::size_t i = 0; i < acc.size(); ++i) CHECK(std::abs(acc.data()[i] - expect.data()[i]) < 1e-12);
    }
}
