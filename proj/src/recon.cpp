#include "scatter/recon.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include "scatter/error.hpp"

namespace scatter {

void ReconConfig::validate() const {
    require(iterations >= 1, "ReconConfig: iterations must be >= 1");
    require(init_noise_variance > 0.0, "ReconConfig: init_noise_variance must be positive");
    require(step_size > 0.0, "ReconConfig: step_size must be positive");
    require(beta1 >= 0.0 && beta1 < 1.0 && beta2 >= 0.0 && beta2 < 1.0, "ReconConfig: Adam betas must lie in [0,1)");
    require(eps_adam > 0.0, "ReconConfig: eps_adam must be positive");
    require(work_color_space != ColorSpace::GRAY, "ReconConfig: work color space must be RGB or YUV");
}

ImageGrid adam_step(AdamState& state, const ImageGrid& grad, const ReconConfig& cfg) {
    require(state.m.size() == grad.size() && state.v.size() == grad.size(), "adam_step: shape mismatch");
    ++state.step;
    const double c1 = 1.0 - std::pow(cfg.beta1, static_cast<double>(state.step));
    const double c2 = 1.0 - std::pow(cfg.beta2, static_cast<double>(state.step));
    ImageGrid update(grad.height(), grad.width(), grad.channels(), grad.color_space(), grad.precision());
    const auto& g = grad.data();
    auto& u = update.data();
    for (std::size_t i = 0; i < g.size(); ++i) {
        state.m[i] = cfg.beta1 * state.m[i] + (1.0 - cfg.beta1) * g[i];
        state.v[i] = cfg.beta2 * state.v[i] + (1.0 - cfg.beta2) * g[i] * g[i];
        const double mhat = state.m[i] / c1;
        const double vhat = state.v[i] / c2;
        u[i] = -cfg.step_size * mhat / (std::sqrt(vhat) + cfg.eps_adam);
    }
    return update;
}

namespace {

bool rose_in_some_window(const std::vector<ReconRecord>& h, std::size_t window) {
    for (std::size_t i = 0; i + window < h.size(); ++i)
        if (h[i + window].loss > h[i].loss) return true;
    return false;
}

}  // namespace

ReconResult reconstruct(const ScatteringCoeffs& target, const FilterBank& fb, const ScatteringConfig& cfg_scat,
                        const ReconConfig& cfg_recon, std::uint64_t seed) {
    cfg_recon.validate();
    cfg_scat.validate();
    require(target.J == cfg_scat.J && target.L == cfg_scat.L && target.boundary == cfg_scat.boundary,
            "reconstruct: target was computed with a different configuration");
    require(target.input_channels == 1 || target.input_channels == 3,
            "reconstruct: target must come from a 1- or 3-channel image");
    const double target_norm = l2_norm(target);
    require(target_norm > 0.0, "reconstruct: target coefficients are all zero");

    const bool color = target.input_channels == 3;
    const bool yuv = color && cfg_recon.work_color_space == ColorSpace::YUV;
    const ColorSpace work_cs = !color ? ColorSpace::GRAY : yuv ? ColorSpace::YUV : ColorSpace::RGB;

    ImageGrid y(target.input_height, target.input_width, target.input_channels, work_cs, cfg_scat.precision);
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> noise(0.0, std::sqrt(cfg_recon.init_noise_variance));
    for (double& v : y.data()) v = noise(rng);

    auto as_image = [&](const ImageGrid& w) { return yuv ? yuv_to_rgb(w) : w; };

    AdamState adam(y.size());
    ReconResult result;
    result.history.reserve(static_cast<std::size_t>(cfg_recon.iterations) + 1);
    for (int it = 0;; ++it) {
        LossGrad lg = recon_loss_grad(target, as_image(y), fb, cfg_scat);
        result.history.push_back({lg.loss, std::sqrt(lg.loss) / target_norm});
        if (it == cfg_recon.iterations) break;
        const ImageGrid grad = yuv ? rgb_gradient_to_yuv(lg.grad) : lg.grad;
        const ImageGrid step = adam_step(adam, grad, cfg_recon);
        for (std::size_t i = 0; i < y.size(); ++i) y.data()[i] += step.data()[i];
    }
    result.image = as_image(y);
    if (color) result.image.set_color_space(ColorSpace::RGB);
    result.diverged = rose_in_some_window(result.history, 50);
    return result;
}

ErrMetrics err_metrics(const ImageGrid& xhat, const ImageGrid& x, const FilterBank& fb, const ScatteringConfig& cfg) {
    require(xhat.same_shape(x), "err_metrics: image shapes differ");
    const double nx = l2_norm(x);
    if (nx == 0.0) throw UndefinedMetric("err_x undefined: reference image has zero norm");
    const ScatteringCoeffs sx = forward(x, fb, cfg);
    const double ns = l2_norm(sx);
    if (ns == 0.0) throw UndefinedMetric("err_S undefined: reference coefficients have zero norm");
    double d = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double e = xhat.data()[i] - x.data()[i];
        d += e * e;
    }
    ErrMetrics out;
    out.err_x = std::sqrt(d) / nx;
    out.err_s = l2_distance(forward(xhat, fb, cfg), sx) / ns;
    return out;
}

}  // namespace scatter
