#include <sstream>

#include "doctest.h"
#include "helpers.hpp"
#include "scatter/error.hpp"
#include "scatter/formats.hpp"

using namespace scatter;

TEST_CASE("SCT1 round trip") {
    const auto cfg = ScatteringConfig::make(2, 4);
    const ImageGrid img = testing::random_image(12, 20, 3, 1, Precision::Single);
    const FilterBank fb = build_filterbank(geometry(12, 20, cfg).M, 2, 4, cfg.params);
    ScatteringCoeffs s = forward(img, fb, cfg);
    for (double& v : s.data) v = static_cast<float>(v);

    std::stringstream a;
    write_coeffs(s, a);
    const std::string bytes = a.str();
    CHECK(bytes.substr(0, 4) == "SCT1");
    const ScatteringCoeffs back = read_coeffs(a);
    CHECK(back.J == 2);
    CHECK(back.L == 4);
    CHECK(back.input_height == 12);
    CHECK(back.input_width == 20);
    CHECK(back.boundary == BoundaryMode::Reflect);
    CHECK(back.paths == s.paths);
    CHECK(back.data == s.data);

    std::stringstream b;
    write_coeffs(back, b);
    CHECK(b.str() == bytes);
}

TEST_CASE("SCT1 rejects corrupt input") {
    std::stringstream bad("SCTX....");
    CHECK_THROWS_AS(read_coeffs(bad), InvalidInput);
    CHECK_THROWS_AS(read_coeffs(std::filesystem::path("/nonexistent/file.sct")), InvalidInput);

    ScatteringCoeffs s = pixel_features(testing::random_image(2, 2, 1, 1));
    std::stringstream ok;
    write_coeffs(s, ok);
    std::string truncated = ok.str();
    truncated.resize(truncated.size() - 4);
    std::stringstream t(truncated);
    CHECK_THROWS_AS(read_coeffs(t), InvalidInput);
}

TEST_CASE("SLM1 round trip") {
    std::vector<ScatteringCoeffs> x;
    std::vector<int> y;
    for (std::uint64_t i = 0; i < 6; ++i) {
        x.push_back(pixel_features(testing::random_image(4, 4, 1, i)));
        y.push_back(static_cast<int>(i % 3));
    }
    LinearModel m = train_linear(x, y, 3, {}, 2);
    for (double& v : m.weights) v = static_cast<float>(v);
    for (double& v : m.bias) v = static_cast<float>(v);

    std::stringstream a;
    write_model(m, a);
    const std::string bytes = a.str();
    CHECK(bytes.substr(0, 4) == "SLM1");
    const LinearModel back = read_model(a);
    CHECK(back.classes == 3);
    CHECK(back.weights == m.weights);
    CHECK(back.bias == m.bias);
    CHECK(back.stats.mean.size() == m.stats.mean.size());
    std::stringstream b;
    write_model(back, b);
    CHECK(b.str() == bytes);

    std::stringstream wrong;
    write_coeffs(x[0], wrong);
    CHECK_THROWS_AS(read_model(wrong), InvalidInput);
}
