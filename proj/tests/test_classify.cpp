#include <algorithm>
#include <cmath>
#include <numbers>

#include "doctest.h"
#include "helpers.hpp"
#include "scatter/classify.hpp"
#include "scatter/dataset.hpp"
#include "scatter/error.hpp"

using namespace scatter;

namespace {

struct Toy {
    std::vector<ScatteringCoeffs> x;
    std::vector<int> y;
};

// Two classes of 4x4 gray images: bright left half or bright right half.
Toy halves(std::size_t n, std::uint64_t seed) {
    Toy t;
    for (std::size_t i = 0; i < n; ++i) {
        ImageGrid img = testing::random_image(4, 4, 1, seed + i);
        const int label = static_cast<int>(i % 2);
        for (std::size_t r = 0; r < 4; ++r)
            for (std::size_t c = 0; c < 4; ++c)
                if ((c < 2) == (label == 0)) img.at(0, r, c) += 2.0;
        t.x.push_back(pixel_features(img));
        t.y.push_back(label);
    }
    return t;
}

struct Trained {
    ScatteringConfig cfg = ScatteringConfig::make(2, 4, BoundaryMode::Periodic, Precision::Double);
    FilterBank fb = build_filterbank(16, 2, 4, cfg.params);
    LabeledImages data = synthetic_textures(6, 16, 3);
    LinearModel model;

    Trained() {
        std::vector<ScatteringCoeffs> f;
        for (const auto& img : data.images) f.push_back(forward(img, fb, cfg));
        model = train_linear(f, data.labels, data.class_names.size(), {}, 1);
    }
};

const Trained& trained() {
    static const Trained t;
    return t;
}

}  // namespace

TEST_CASE("train_linear separates a toy problem") {
    const Toy train = halves(40, 0), test = halves(20, 1000);
    const LinearModel m = train_linear(train.x, train.y, 2, {}, 5);
    CHECK(m.classes == 2);
    CHECK(m.weights.size() == 2 * 16);
    CHECK(accuracy(m, test.x, test.y) == 1.0);

    const Prediction p = predict(m, test.x[0]);
    CHECK(p.scores.size() == 2);
    CHECK(p.label == static_cast<int>(std::max_element(p.scores.begin(), p.scores.end()) - p.scores.begin()));

    CHECK(train_linear(train.x, train.y, 2, {}, 5) == m);
}

TEST_CASE("train_linear rejects bad input") {
    const Toy t = halves(4, 0);
    std::vector<int> bad = t.y;
    bad[0] = 2;
    CHECK_THROWS_AS(train_linear(t.x, bad, 2, {}, 1), InvalidInput);
    CHECK_THROWS_AS(train_linear(t.x, std::span<const int>(t.y).first(3), 2, {}, 1), InvalidInput);
    CHECK_THROWS_AS(train_linear({}, {}, 2, {}, 1), InvalidInput);
    TrainConfig cfg;
    cfg.momentum = 1.0;
    CHECK_THROWS_AS(train_linear(t.x, t.y, 2, cfg, 1), InvalidInput);

    const LinearModel m = train_linear(t.x, t.y, 2, {}, 1);
    CHECK_THROWS_AS(predict(m, pixel_features(testing::random_image(8, 8, 1, 1))), InvalidInput);
}

TEST_CASE("pixel_features layout") {
    const ImageGrid img = testing::random_image(3, 5, 3, 1);
    const ScatteringCoeffs s = pixel_features(img);
    CHECK(s.J == 0);
    CHECK(s.paths.size() == 1);
    CHECK(s.input_channels == 3);
    CHECK(s.height == 3);
    CHECK(s.width == 5);
    CHECK(s.data == img.data());
}

TEST_CASE("omega energies of phase ramps") {
    const int L = 8;
    for (int k = 0; k < L; ++k) {
        std::vector<std::complex<double>> f(L);
        for (int l = 0; l < L; ++l) f[l] = std::polar(1.0, 2 * std::numbers::pi * k * l / L);
        const auto e = omega1_energy(f, L);
        for (int w = 0; w < L; ++w) CHECK(e[w] == doctest::Approx(w == k ? L : 0.0));
    }

    std::vector<std::complex<double>> g(L * L);
    for (int a = 0; a < L; ++a)
        for (int b = 0; b < L; ++b) g[a * L + b] = std::polar(1.0, 2 * std::numbers::pi * (2 * a + 5 * b) / L);
    const auto e2 = omega2_energy(g, L);
    for (int w = 0; w < L * L; ++w) CHECK(e2[w] == doctest::Approx(w == 2 * L + 5 ? L * L : 0.0));

    std::vector<std::complex<double>> flat(2 * L, 1.0);
    const auto e0 = omega1_energy(flat, L);
    CHECK(e0[0] == doctest::Approx(2.0 * L));
    CHECK_THROWS_AS(omega1_energy(std::span(flat).first(L + 1), L), InvalidInput);
}

TEST_CASE("spectral_flatness examples") {
    const std::vector<double> flat(6, 2.5), peak = {1.0, 0.0, 0.0}, two = {1.0, 4.0};
    CHECK(spectral_flatness(flat) == doctest::Approx(1.0));
    CHECK(spectral_flatness(peak) == 0.0);
    CHECK(spectral_flatness(two) == doctest::Approx(0.8));
    CHECK_THROWS_AS(spectral_flatness(std::vector<double>{}), InvalidInput);
}

TEST_CASE("angular_spectrum conserves energy") {
    const LinearModel& m = trained().model;
    const AngularSpectrum a = angular_spectrum(m);
    CHECK(a.L == 4);
    REQUIRE(a.omega1.size() == 4);
    REQUIRE(a.omega2.size() == 16);
    double s1 = 0.0, s2 = 0.0;
    for (double v : a.omega1) s1 += v;
    for (double v : a.omega2) s2 += v;
    CHECK(s1 == doctest::Approx(a.energy1));
    CHECK(s2 == doctest::Approx(a.energy2));
}

TEST_CASE("permute_order1_angles keeps values per fiber") {
    const LinearModel& m = trained().model;
    const LinearModel p = permute_order1_angles(m, 9);
    CHECK(angular_spectrum(p).energy1 == doctest::Approx(angular_spectrum(m).energy1));
    const std::size_t cells = m.height * m.width;
    for (std::size_t k = 0; k < m.classes; ++k)
        for (std::size_t i = 0; i < cells; ++i) CHECK(p.row(k)[i] == m.row(k)[i]);
    CHECK(p.weights != m.weights);
}

TEST_CASE("sparsify_angular") {
    const LinearModel& m = trained().model;
    const auto [same, s1] = sparsify_angular(m, 1.0);
    CHECK(s1.zeroed == 0);
    CHECK(s1.zero_fraction == 0.0);
    CHECK(s1.energy_retained == doctest::Approx(1.0));
    for (std::size_t i = 0; i < m.weights.size(); ++i) CHECK(same.weights[i] == doctest::Approx(m.weights[i]).epsilon(1e-9));

    const auto [sparse, s2] = sparsify_angular(m, 0.2);
    CHECK(s2.zero_fraction >= 0.8);
    CHECK(s2.zero_fraction == doctest::Approx(static_cast<double>(s2.zeroed) / s2.coefficients));
    CHECK(s2.energy_retained <= 1.0);
    CHECK(s2.energy_retained > 0.2);
    CHECK(sparse.bias == m.bias);

    CHECK_THROWS_AS(sparsify_angular(m, 0.0), InvalidInput);
    CHECK_THROWS_AS(sparsify_angular(m, 1.5), InvalidInput);
}

TEST_CASE("fgsm_attack contract") {
    const Trained& t = trained();
    const ImageGrid& x = t.data.images[0];
    const int source = predict(t.model, forward(x, t.fb, t.cfg)).label;
    const int target = (source + 1) % static_cast<int>(t.model.classes);
    std::vector<double> grid;
    for (int i = 1; i <= 20; ++i) grid.push_back(0.05 * i);
    const AttackResult r = fgsm_attack(t.model, t.fb, t.cfg, x, target, grid);
    CHECK(r.source_label == source);
    if (r.eps) {
        REQUIRE(r.adversarial);
        CHECK(std::find(grid.begin(), grid.end(), *r.eps) != grid.end());
        for (std::size_t i = 0; i < x.size(); ++i) {
            const double v = r.adversarial->data()[i];
            CHECK(v >= 0.0);
            CHECK(v <= 1.0);
            CHECK(std::abs(v - x.data()[i]) <= *r.eps + 1e-12);
        }
        CHECK(predict(t.model, forward(*r.adversarial, t.fb, t.cfg)).label == target);
    } else {
        CHECK(!r.adversarial);
    }

    CHECK_THROWS_AS(fgsm_attack(t.model, t.fb, t.cfg, x, source, grid), InvalidInput);
    const std::vector<double> descending = {0.2, 0.1};
    CHECK_THROWS_AS(fgsm_attack(t.model, t.fb, t.cfg, x, target, descending), InvalidInput);
    const AttackResult none = fgsm_attack(t.model, t.fb, t.cfg, x, target, {});
    CHECK(!none.eps);
}
