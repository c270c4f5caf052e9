#include <cmath>

#include "doctest.h"
#include "helpers.hpp"
#include "scatter/error.hpp"
#include "scatter/scattering.hpp"

using namespace scatter;

namespace {

ScatteringConfig periodic(int J, int L, Precision p = Precision::Double) {
    return ScatteringConfig::make(J, L, BoundaryMode::Periodic, p);
}

double rel(const ScatteringCoeffs& a, const ScatteringCoeffs& b) { return l2_distance(a, b) / l2_norm(b); }

// Rotation by 90 degrees about the origin of the periodic grid.
ImageGrid rot90(const ImageGrid& img) {
    const std::size_t n = img.height();
    ImageGrid out = img;
    for (std::size_t c = 0; c < img.channels(); ++c)
        for (std::size_t y = 0; y < n; ++y)
            for (std::size_t x = 0; x < n; ++x) out.at(c, x, (n - y) % n) = img.at(c, y, x);
    return out;
}

}  // namespace

TEST_CASE("path table counts and ordering") {
    CHECK(path_count(2, 8) == 81);
    CHECK(3 * path_table(2, 8).size() == 243);
    CHECK(3 * path_table(3, 8).size() == 651);
    CHECK(3 * path_table(4, 8).size() == 1251);
    const auto one = path_table(1, 6);
    CHECK(one.size() == 7);
    for (const auto& p : one) CHECK(p.order < 2);

    const auto t = path_table(3, 4);
    CHECK(t[0].order == 0);
    for (int j1 = 0; j1 < 3; ++j1)
        for (int l1 = 0; l1 < 4; ++l1) {
            CHECK(t[order1_index(j1, l1, 4)] == PathIndex{1, j1, l1, -1, -1});
            for (int j2 = j1 + 1; j2 < 3; ++j2)
                for (int l2 = 0; l2 < 4; ++l2)
                    CHECK(t[order2_index(j1, l1, j2, l2, 3, 4)] == PathIndex{2, j1, l1, j2, l2});
        }
}

TEST_CASE("forward: zero and constant images") {
    const auto cfg = periodic(2, 4);
    const FilterBank fb = build_filterbank(16, 2, 4, cfg.params);
    ImageGrid zero(16, 16, 1, ColorSpace::GRAY, Precision::Double);
    for (double v : forward(zero, fb, cfg).data) CHECK(v == 0.0);

    ImageGrid c = zero;
    for (double& v : c.data()) v = 0.3;
    const ScatteringCoeffs s = forward(c, fb, cfg);
    for (std::size_t p = 0; p < s.paths.size(); ++p)
        for (double v : s.map(0, p)) {
            if (p == 0)
                CHECK(v == doctest::Approx(0.3).epsilon(1e-9));
            else
                CHECK(std::abs(v) < 1e-5 * 0.3);
        }
}

TEST_CASE("forward: oracle equivalence in both modes") {
    auto cfg = periodic(2, 4);
    const FilterBank fb = build_filterbank(16, 2, 4, cfg.params);
    double full = 0.0, alg = 0.0;
    for (std::uint64_t seed = 0; seed < 5; ++seed) {
        const ImageGrid img = testing::random_image(16, 16, 1, seed);
        const ScatteringCoeffs ref = forward_oracle(img, fb, cfg);
        cfg.mode = ForwardMode::FullResolution;
        full = std::max(full, rel(forward(img, fb, cfg), ref));
        cfg.mode = ForwardMode::Algorithm;
        alg = std::max(alg, rel(forward(img, fb, cfg), ref));
    }
    CHECK(full < 1e-5);
    CHECK(alg < 1e-2);

    ImageGrid zero(16, 16, 1, ColorSpace::GRAY, Precision::Double);
    for (double v : forward_oracle(zero, fb, cfg).data) CHECK(v == 0.0);
}

TEST_CASE("forward: single precision close to double") {
    const ImageGrid img = testing::random_image(32, 32, 3, 9);
    const FilterBank fb = build_filterbank(32, 2, 8, MorletParams::defaults(8));
    const auto d = forward(img, fb, periodic(2, 8, Precision::Double));
    const auto f = forward(img, fb, periodic(2, 8, Precision::Single));
    CHECK(rel(f, d) < 1e-5);
}

TEST_CASE("forward: translation covariance by 2^J") {
    const auto cfg = periodic(2, 8);
    const FilterBank fb = build_filterbank(32, 2, 8, cfg.params);
    const ImageGrid x = testing::random_image(32, 32, 1, 11);
    ImageGrid shifted = x;
    for (std::size_t y = 0; y < 32; ++y)
        for (std::size_t q = 0; q < 32; ++q) shifted.at(0, (y + 4) % 32, q) = x.at(0, y, q);
    const ScatteringCoeffs a = forward(x, fb, cfg), b = forward(shifted, fb, cfg);
    ScatteringCoeffs expect = a;
    for (std::size_t p = 0; p < a.paths.size(); ++p)
        for (std::size_t y = 0; y < 8; ++y)
            for (std::size_t q = 0; q < 8; ++q) expect.at(0, p, (y + 1) % 8, q) = a.at(0, p, y, q);
    CHECK(rel(b, expect) < 1e-5);
}

TEST_CASE("forward: rotation covariance for 90 degrees") {
    const int L = 8;
    const auto cfg = periodic(2, L);
    const FilterBank fb = build_filterbank(32, 2, L, cfg.params);
    const ImageGrid x = testing::random_image(32, 32, 1, 12);
    const ScatteringCoeffs a = forward(x, fb, cfg), b = forward(rot90(x), fb, cfg);
    double diff = 0.0, energy = 0.0;
    for (int j = 0; j < 2; ++j)
        for (int l = 0; l < L; ++l) {
            const std::size_t pb = order1_index(j, l, L), pa = order1_index(j, (l + L / 2) % L, L);
            for (std::size_t y = 0; y < 8; ++y)
                for (std::size_t q = 0; q < 8; ++q) {
                    const double d = b.at(0, pb, q, (8 - y) % 8) - a.at(0, pa, y, q);
                    diff += d * d;
                    energy += a.at(0, pa, y, q) * a.at(0, pa, y, q);
                }
        }
    CHECK(diff / energy < 0.03);
}

TEST_CASE("forward: non-expansive and energy bounded") {
    const auto cfg = periodic(2, 8);
    const FilterBank fb = build_filterbank(32, 2, 8, cfg.params);
    const double bound = std::sqrt(std::max(1.0, littlewood_paley(fb).max_e));
    for (std::uint64_t s = 0; s < 5; ++s) {
        const ImageGrid x = testing::random_image(32, 32, 1, 100 + s), y = testing::random_image(32, 32, 1, 200 + s);
        ImageGrid d = x;
        for (std::size_t i = 0; i < d.size(); ++i) d.data()[i] -= y.data()[i];
        const ScatteringCoeffs sx = forward(x, fb, cfg);
        CHECK(l2_distance(sx, forward(y, fb, cfg)) <= bound * l2_norm(d));
        CHECK(l2_norm(sx) <= bound * l2_norm(x));
    }
}

TEST_CASE("forward: reflect geometry and documented output sizes") {
    auto cfg = ScatteringConfig::make(2, 8);
    const ImageGrid small = testing::random_image(32, 32, 3, 13, Precision::Single);
    const FilterBank fb = build_filterbank(geometry(32, 32, cfg).M, 2, 8, cfg.params);
    const ScatteringCoeffs s = forward(small, fb, cfg);
    CHECK(s.height == 8);
    CHECK(s.width == 8);
    CHECK(s.channel_count() == 243);

    cfg = ScatteringConfig::make(4, 8);
    const Geometry g = geometry(224, 224, cfg);
    CHECK(g.M == 256);
    CHECK(g.out_h == 14);
    CHECK(g.out_w == 14);

    const Geometry rect = geometry(20, 36, ScatteringConfig::make(2, 4));
    CHECK(rect.out_h == 5);
    CHECK(rect.out_w == 9);
}

TEST_CASE("forward: errors") {
    const auto cfg = periodic(2, 4);
    const FilterBank fb = build_filterbank(16, 2, 4, cfg.params);
    CHECK_THROWS_AS(forward(testing::random_image(12, 12, 1, 1), fb, cfg), InvalidInput);
    CHECK_THROWS_AS(forward(testing::random_image(32, 32, 1, 1), fb, cfg), InvalidInput);
    CHECK_THROWS_AS(forward(testing::random_image(16, 16, 1, 1), fb, periodic(2, 8)), InvalidInput);
}

TEST_CASE("forward_batch: deterministic across worker counts") {
    const auto cfg = ScatteringConfig::make(2, 4);
    std::vector<ImageGrid> imgs;
    for (std::uint64_t s = 0; s < 8; ++s) imgs.push_back(testing::random_image(16, 16, 3, s, Precision::Single));
    const FilterBank fb = build_filterbank(geometry(16, 16, cfg).M, 2, 4, cfg.params);
    const auto a = forward_batch(imgs, fb, cfg, 1), b = forward_batch(imgs, fb, cfg, 4);
    REQUIRE(a.size() == 8);
    for (std::size_t i = 0; i < 8; ++i) CHECK(a[i].data == b[i].data);
    CHECK(forward_batch({}, fb, cfg, 2).empty());
    const auto same = forward_batch({imgs[0], imgs[0]}, fb, cfg, 2);
    CHECK(same[0].data == same[1].data);
    CHECK(forward(imgs[3], fb, cfg).data == a[3].data);
    imgs.push_back(testing::random_image(8, 8, 3, 1));
    CHECK_THROWS_AS(forward_batch(imgs, fb, cfg, 2), InvalidInput);
}

TEST_CASE("memory report") {
    const double expected[3] = {2.0e6, 2.5e6, 2.6e6};
    for (int J = 2; J <= 4; ++J) {
        const double t = tree_storage(J, 8, 256);
        CHECK(std::abs(t - expected[J - 2]) / expected[J - 2] <= 0.10);
    }
    for (std::size_t N : {64, 128}) {
        for (int J = 2; J <= 4; ++J) {
            const MemoryReport r = memory_report(ScatteringConfig::make(J, 8, BoundaryMode::Periodic), N);
            CHECK(r.infix_peak <= 5 * N * N);
        }
    }
}

TEST_CASE("path statistics standardize to zero mean and unit deviation") {
    const auto cfg = periodic(2, 4);
    const FilterBank fb = build_filterbank(16, 2, 4, cfg.params);
    std::vector<ScatteringCoeffs> xs;
    for (std::uint64_t s = 0; s < 6; ++s) xs.push_back(forward(testing::random_image(16, 16, 1, s), fb, cfg));
    const PathStats st = compute_path_stats(xs);
    for (auto& x : xs) standardize(x, st);
    const PathStats after = compute_path_stats(xs);
    for (std::size_t k = 0; k < after.mean.size(); ++k) {
        CHECK(std::abs(after.mean[k]) < 1e-9);
        CHECK(std::abs(after.stddev[k] - 1.0) < 1e-4);  // stddev carries a 1e-8 guard
    }
}
