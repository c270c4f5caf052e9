#pragma once

#include <random>

#include "scatter/grid.hpp"

namespace testing {

inline scatter::ImageGrid random_image(std::size_t h, std::size_t w, std::size_t c, std::uint64_t seed,
                                       scatter::Precision p = scatter::Precision::Double) {
    using namespace scatter;
    ImageGrid img(h, w, c, c == 1 ? ColorSpace::GRAY : ColorSpace::RGB, p);
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (double& v : img.data()) v = u(rng);
    return img;
}

}  // namespace testing
