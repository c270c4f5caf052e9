#include <cmath>

#include "doctest.h"
#include "helpers.hpp"
#include "scatter/error.hpp"
#include "scatter/recon.hpp"

using namespace scatter;

TEST_CASE("adam_step examples") {
    ReconConfig cfg;
    cfg.step_size = 0.1;
    ImageGrid g(1, 3, 1, ColorSpace::GRAY, Precision::Double);
    g.data() = {2.0, -0.5, 0.0};
    AdamState st(3);
    const ImageGrid u = adam_step(st, g, cfg);
    CHECK(st.step == 1);
    CHECK(u.data()[0] == doctest::Approx(-0.1).epsilon(1e-6));
    CHECK(u.data()[1] == doctest::Approx(0.1).epsilon(1e-6));
    CHECK(u.data()[2] == 0.0);
    CHECK(st.m[0] == doctest::Approx(0.2));
    CHECK(st.v[0] == doctest::Approx(0.004));

    // A constant gradient keeps the bias-corrected step at the learning rate.
    for (int i = 0; i < 20; ++i) {
        const ImageGrid w = adam_step(st, g, cfg);
        CHECK(w.data()[0] == doctest::Approx(-0.1).epsilon(1e-6));
    }

    AdamState wrong(2);
    CHECK_THROWS_AS(adam_step(wrong, g, cfg), InvalidInput);
}

TEST_CASE("ReconConfig validation") {
    ReconConfig cfg;
    CHECK_NOTHROW(cfg.validate());
    cfg.work_color_space = ColorSpace::GRAY;
    CHECK_THROWS_AS(cfg.validate(), InvalidInput);
    cfg = {};
    cfg.step_size = 0.0;
    CHECK_THROWS_AS(cfg.validate(), InvalidInput);
    cfg = {};
    cfg.iterations = 0;
    CHECK_THROWS_AS(cfg.validate(), InvalidInput);
}

TEST_CASE("reconstruct: constant image converges") {
    const auto cfg = ScatteringConfig::make(2, 4, BoundaryMode::Periodic, Precision::Double);
    const FilterBank fb = build_filterbank(16, 2, 4, cfg.params);
    ImageGrid x(16, 16, 3, ColorSpace::RGB, Precision::Double);
    for (double& v : x.data()) v = 0.5;
    ReconConfig rc;
    rc.iterations = 150;
    rc.step_size = 0.05;
    const ReconResult r = reconstruct(forward(x, fb, cfg), fb, cfg, rc, 1);
    REQUIRE(r.history.size() == 151);
    CHECK(r.history.back().err_s < 1e-2);
    CHECK(r.history.back().loss < r.history.front().loss);
    CHECK(r.image.color_space() == ColorSpace::RGB);
    CHECK(err_metrics(r.image, x, fb, cfg).err_s == doctest::Approx(r.history.back().err_s).epsilon(1e-6));
}

TEST_CASE("reconstruct: deterministic for a seed, gray targets supported") {
    const auto cfg = ScatteringConfig::make(2, 4, BoundaryMode::Periodic, Precision::Double);
    const FilterBank fb = build_filterbank(16, 2, 4, cfg.params);
    const ScatteringCoeffs target = forward(testing::random_image(16, 16, 1, 4), fb, cfg);
    ReconConfig rc;
    rc.iterations = 10;
    const ReconResult a = reconstruct(target, fb, cfg, rc, 7), b = reconstruct(target, fb, cfg, rc, 7);
    CHECK(a.image.data() == b.image.data());
    CHECK(a.history.size() == 11);
    for (std::size_t i = 0; i < a.history.size(); ++i) CHECK(a.history[i].loss == b.history[i].loss);
    CHECK(a.image.data() != reconstruct(target, fb, cfg, rc, 8).image.data());
    CHECK(a.image.color_space() == ColorSpace::GRAY);
}

TEST_CASE("reconstruct: rejects mismatched or empty targets") {
    const auto cfg = ScatteringConfig::make(2, 4, BoundaryMode::Periodic, Precision::Double);
    const FilterBank fb = build_filterbank(16, 2, 4, cfg.params);
    ReconConfig rc;
    rc.iterations = 1;
    ImageGrid zero(16, 16, 1, ColorSpace::GRAY, Precision::Double);
    CHECK_THROWS_AS(reconstruct(forward(zero, fb, cfg), fb, cfg, rc, 1), InvalidInput);
    const ScatteringCoeffs s = forward(testing::random_image(16, 16, 1, 1), fb, cfg);
    auto other = cfg;
    other.boundary = BoundaryMode::Reflect;
    CHECK_THROWS_AS(reconstruct(s, fb, other, rc, 1), InvalidInput);
}

TEST_CASE("err_metrics examples") {
    const auto cfg = ScatteringConfig::make(2, 4, BoundaryMode::Periodic, Precision::Double);
    const FilterBank fb = build_filterbank(16, 2, 4, cfg.params);
    const ImageGrid x = testing::random_image(16, 16, 1, 2);
    const ErrMetrics same = err_metrics(x, x, fb, cfg);
    CHECK(same.err_x == 0.0);
    CHECK(same.err_s == 0.0);

    ImageGrid half = x;
    for (double& v : half.data()) v *= 0.5;
    const ErrMetrics h = err_metrics(half, x, fb, cfg);
    CHECK(h.err_x == doctest::Approx(0.5));
    // S is positively homogeneous.
    CHECK(h.err_s == doctest::Approx(0.5).epsilon(1e-9));

    ImageGrid zero(16, 16, 1, ColorSpace::GRAY, Precision::Double);
    CHECK_THROWS_AS(err_metrics(x, zero, fb, cfg), UndefinedMetric);
    CHECK_THROWS_AS(err_metrics(testing::random_image(8, 8, 1, 1), x, fb, cfg), InvalidInput);
}
