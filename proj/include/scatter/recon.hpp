#pragma once

#include <cstdint>
#include <vector>

#include "scatter/adjoint.hpp"

namespace scatter {

struct ReconConfig {
    int iterations = 200;
    double init_noise_variance = 1e-4;
    double step_size = 0.3;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps_adam = 1e-8;
    ColorSpace work_color_space = ColorSpace::YUV;

    void validate() const;
};

struct AdamState {
    std::vector<double> m;
    std::vector<double> v;
    long step = 0;

    AdamState() = default;
    explicit AdamState(std::size_t n) : m(n, 0.0), v(n, 0.0) {}
    bool operator==(const AdamState&) const = default;
};

/// Advances the state by one gradient and returns the increment to add to
/// the parameters (already negated and bias corrected).
ImageGrid adam_step(AdamState& state, const ImageGrid& grad, const ReconConfig& cfg);

struct ReconRecord {
    double loss = 0.0;
    double err_s = 0.0;
};

struct ReconResult {
    ImageGrid image;                   // RGB (or gray) estimate
    std::vector<ReconRecord> history;  // entry i: after i updates
    bool diverged = false;             // loss rose across some 50-iteration window
};

/// Gradient descent on |S(y) - target|^2 from white noise. The optimization
/// variable lives in cfg_recon.work_color_space; S is applied to its RGB
/// version. Grayscale targets are optimized directly.
ReconResult reconstruct(const ScatteringCoeffs& target, const FilterBank& fb, const ScatteringConfig& cfg_scat,
                        const ReconConfig& cfg_recon, std::uint64_t seed);

struct ErrMetrics {
    double err_x = 0.0;
    double err_s = 0.0;
};

/// err_x = |xhat - x| / |x|, err_s = |S xhat - S x| / |S x|.
ErrMetrics err_metrics(const ImageGrid& xhat, const ImageGrid& x, const FilterBank& fb,
                       const ScatteringConfig& cfg);

}  // namespace scatter
