#include <cmath>
#include <random>

#include "doctest.h"
#include "helpers.hpp"
#include "scatter/adjoint.hpp"
#include "scatter/error.hpp"

using namespace scatter;

namespace {

double dot(const std::vector<double>& a, const std::vector<double>& b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
    return s;
}

Cotangent random_cotangent(const ScatteringCoeffs& like, std::uint64_t seed) {
    Cotangent ct = like;
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> n(0.0, 1.0);
    for (double& v : ct.data) v = n(rng);
    return ct;
}

ImageGrid axpy(const ImageGrid& x, double a, const ImageGrid& d) {
    ImageGrid out = x;
    for (std::size_t i = 0; i < out.size(); ++i) out.data()[i] += a * d.data()[i];
    return out;
}

}  // namespace

TEST_CASE("modulus_vjp examples") {
    ComplexGrid<double> z(2);
    z(0, 0) = {3.0, 4.0};
    z(0, 1) = {0.0, 0.0};
    z(1, 0) = {-2.0, 0.0};
    z(1, 1) = {0.0, 1e-20};
    const std::vector<double> g = {1.0, 5.0, 0.5, 1.0};
    const auto out = modulus_vjp<double>(z, g);
    CHECK(out(0, 0).real() == doctest::Approx(0.6));
    CHECK(out(0, 0).imag() == doctest::Approx(0.8));
    CHECK(out(0, 1) == std::complex<double>(0.0, 0.0));
    CHECK(out(1, 0).real() == doctest::Approx(-0.5));
    CHECK(std::isfinite(out(1, 1).imag()));
    CHECK(std::abs(out(1, 1)) <= 1e-8);

    ComplexGrid<float> zf(1);
    zf(0, 0) = {0.0f, 1e-9f};
    const std::vector<float> gf = {1.0f};
    CHECK(std::abs(modulus_vjp<float>(zf, gf)(0, 0)) <= 1e-3f);
}

TEST_CASE("backward: adjoint identity against finite differences") {
    for (BoundaryMode b : {BoundaryMode::Periodic, BoundaryMode::Reflect}) {
        const auto cfg = ScatteringConfig::make(2, 4, b, Precision::Double);
        const std::size_t n = b == BoundaryMode::Periodic ? 16 : 12;
        const FilterBank fb = build_filterbank(geometry(n, n, cfg).M, 2, 4, cfg.params);
        const ImageGrid x = testing::random_image(n, n, 1, 3);
        const ImageGrid v = testing::random_image(n, n, 1, 4);
        auto [s, tape] = forward_with_tape(x, fb, cfg);
        const Cotangent ct = random_cotangent(s, 5);
        const ImageGrid g = backward(tape, ct);
        REQUIRE(g.same_shape(x));

        const double h = 1e-5;
        const ScatteringCoeffs sp = forward(axpy(x, h, v), fb, cfg), sm = forward(axpy(x, -h, v), fb, cfg);
        double jv_ct = 0.0;
        for (std::size_t i = 0; i < ct.data.size(); ++i) jv_ct += (sp.data[i] - sm.data[i]) / (2 * h) * ct.data[i];
        const double lhs = dot(g.data(), v.data());
        CHECK(std::abs(lhs - jv_ct) / std::abs(jv_ct) < 1e-6);
    }
}

TEST_CASE("backward: loss gradient matches central differences") {
    const auto cfg = ScatteringConfig::make(2, 4, BoundaryMode::Periodic, Precision::Double);
    const FilterBank fb = build_filterbank(16, 2, 4, cfg.params);
    const ScatteringCoeffs target = forward(testing::random_image(16, 16, 1, 1), fb, cfg);
    const ImageGrid y = testing::random_image(16, 16, 1, 2);
    const LossGrad lg = recon_loss_grad(target, y, fb, cfg);
    const ImageGrid v = testing::random_image(16, 16, 1, 7);
    const double h = 1e-5;
    const double fd = (recon_loss_grad(target, axpy(y, h, v), fb, cfg).loss -
                       recon_loss_grad(target, axpy(y, -h, v), fb, cfg).loss) /
                      (2 * h);
    CHECK(std::abs(dot(lg.grad.data(), v.data()) - fd) / std::abs(fd) < 1e-4);

    const LossGrad zero = recon_loss_grad(lg.coeffs, y, fb, cfg);
    CHECK(zero.loss == 0.0);
    for (double g : zero.grad.data()) CHECK(g == 0.0);
}

TEST_CASE("backward: linear in the cotangent") {
    const auto cfg = ScatteringConfig::make(2, 4, BoundaryMode::Periodic, Precision::Double);
    const FilterBank fb = build_filterbank(16, 2, 4, cfg.params);
    const ImageGrid x = testing::random_image(16, 16, 1, 8);
    auto [s, tape] = forward_with_tape(x, fb, cfg);
    const Cotangent a = random_cotangent(s, 1), b = random_cotangent(s, 2);
    Cotangent mix = a;
    for (std::size_t i = 0; i < mix.data.size(); ++i) mix.data[i] = 2.0 * a.data[i] - 0.5 * b.data[i];
    const ImageGrid ga = backward(tape, a), gb = backward(tape, b), gm = backward(tape, mix);
    double err = 0.0, ref = 0.0;
    for (std::size_t i = 0; i < gm.size(); ++i) {
        const double e = 2.0 * ga.data()[i] - 0.5 * gb.data()[i];
        err += (gm.data()[i] - e) * (gm.data()[i] - e);
        ref += e * e;
    }
    CHECK(std::sqrt(err / ref) < 1e-10);

    Cotangent z = a;
    std::fill(z.data.begin(), z.data.end(), 0.0);
    const ImageGrid gz = backward(tape, z);
    for (double g : gz.data()) CHECK(g == 0.0);
}

TEST_CASE("backward: tape is deterministic and shape checked") {
    const auto cfg = ScatteringConfig::make(2, 4);
    const ImageGrid x = testing::random_image(20, 20, 3, 9, Precision::Single);
    const FilterBank fb = build_filterbank(geometry(20, 20, cfg).M, 2, 4, cfg.params);
    auto [s1, t1] = forward_with_tape(x, fb, cfg);
    auto [s2, t2] = forward_with_tape(x, fb, cfg);
    CHECK(t1 == t2);
    CHECK(s1.data == s2.data);
    CHECK(s1.data == forward(x, fb, cfg).data);
    const Cotangent ct = random_cotangent(s1, 3);
    CHECK(backward(t1, ct).data() == backward(t2, ct).data());

    Cotangent bad = ct;
    bad.data.pop_back();
    CHECK_THROWS_AS(backward(t1, bad), InvalidInput);
}

TEST_CASE("backward: memory stays within three times the forward pass") {
    const auto cfg = ScatteringConfig::make(3, 8, BoundaryMode::Periodic, Precision::Single);
    const FilterBank fb = build_filterbank(64, 3, 8, cfg.params);
    const ImageGrid x = testing::random_image(64, 64, 1, 10, Precision::Single);
    SlotMeter plain;
    forward(x, fb, cfg, plain);
    SlotMeter taped;
    auto [s, tape] = forward_with_tape(x, fb, cfg, taped);
    backward(tape, random_cotangent(s, 1), taped);
    CHECK(taped.peak() <= 3 * plain.peak());
}
