#include "scatter/selftest.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <random>
#include <sstream>

#include "scatter/adjoint.hpp"
#include "scatter/classify.hpp"
#include "scatter/formats.hpp"

namespace scatter {

namespace {

class Suite {
public:
    explicit Suite(const SelftestOptions& opt) : opt_(opt), rng_(opt.seed) {}

    FilterBank bank(std::size_t M, int J, int L) const {
        FilterBank fb(M, J, L, MorletParams::defaults(L));
        if (opt_.fault != 0.0) fb.inject_fault_for_testing(opt_.fault);
        return fb;
    }

    ImageGrid noise(std::size_t n, std::size_t channels = 1) {
        ImageGrid img(n, n, channels, channels == 1 ? ColorSpace::GRAY : ColorSpace::RGB, Precision::Double);
        std::uniform_real_distribution<double> u(0.0, 1.0);
        for (double& v : img.data()) v = u(rng_);
        return img;
    }

    void check(const std::string& name, double measured, double threshold, bool below = true,
               std::string detail = {}) {
        const bool ok = std::isfinite(measured) && (below ? measured <= threshold : measured >= threshold);
        results_.push_back({name, ok, measured, threshold, std::move(detail)});
    }

    void guarded(const std::string& name, const std::function<void()>& body) {
        try {
            body();
        } catch (const std::exception& e) {
            results_.push_back({name, false, NAN, NAN, std::string("exception: ") + e.what()});
        }
    }

    std::mt19937_64& rng() { return rng_; }
    std::vector<CheckResult> take() { return std::move(results_); }

private:
    SelftestOptions opt_;
    std::mt19937_64 rng_;
    std::vector<CheckResult> results_;
};

double rel(const ScatteringCoeffs& a, const ScatteringCoeffs& b) { return l2_distance(a, b) / l2_norm(b); }

ImageGrid roll(const ImageGrid& img, std::size_t dy, std::size_t dx) {
    ImageGrid out = img;
    const std::size_t h = img.height(), w = img.width();
    for (std::size_t c = 0; c < img.channels(); ++c)
        for (std::size_t y = 0; y < h; ++y)
            for (std::size_t x = 0; x < w; ++x) out.at(c, (y + dy) % h, (x + dx) % w) = img.at(c, y, x);
    return out;
}

}  // namespace

std::vector<CheckResult> run_selftest(const SelftestOptions& opt) {
    Suite s(opt);

    s.guarded("path_counts", [&] {
        const bool ok = 3 * path_count(2, 8) == 243 && 3 * path_count(3, 8) == 651 && 3 * path_count(4, 8) == 1251;
        s.check("path_counts", ok ? 0.0 : 1.0, 0.0, true, "3 x paths for J=2,3,4 and L=8");
    });

    s.guarded("filter_zero_mean", [&] {
        const FilterBank fb = s.bank(64, 3, 8);
        double worst = 0.0;
        for (int j = 0; j < 3; ++j)
            for (int l = 0; l < 8; ++l) worst = std::max(worst, std::abs(fb.psi<double>(j, l, 0)(0, 0)));
        s.check("filter_zero_mean", worst, 1e-9, true, "max |psi_hat(0)| at full resolution");
    });

    s.guarded("littlewood_paley", [&] {
        const LittlewoodPaley lp = littlewood_paley(s.bank(64, 3, 8));
        s.check("littlewood_paley_max", lp.max_e, 1.05, true, "max over omega");
        s.check("littlewood_paley_band_min", lp.min_e_band, 0.5, false, "min over the wavelet band");
    });

    s.guarded("oracle_equivalence", [&] {
        auto cfg = ScatteringConfig::make(2, 4, BoundaryMode::Periodic, Precision::Double);
        const FilterBank fb = s.bank(16, 2, 4);
        double full = 0.0, alg = 0.0;
        for (int t = 0; t < 4; ++t) {
            const ImageGrid img = s.noise(16);
            const ScatteringCoeffs ref = forward_oracle(img, fb, cfg);
            cfg.mode = ForwardMode::FullResolution;
            full = std::max(full, rel(forward(img, fb, cfg), ref));
            cfg.mode = ForwardMode::Algorithm;
            alg = std::max(alg, rel(forward(img, fb, cfg), ref));
        }
        s.check("oracle_full_resolution", full, 1e-5, true, "max relative deviation, 16x16 J=2 L=4");
        s.check("oracle_algorithm", alg, 1e-2, true, "max relative deviation, 16x16 J=2 L=4");
    });

    s.guarded("gradient", [&] {
        const auto cfg = ScatteringConfig::make(2, 4, BoundaryMode::Reflect, Precision::Double);
        const FilterBank fb = s.bank(geometry(16, 16, cfg).M, 2, 4);
        const ImageGrid x = s.noise(16), x0 = s.noise(16);
        const ScatteringCoeffs target = forward(x0, fb, cfg);
        const LossGrad lg = recon_loss_grad(target, x, fb, cfg);
        auto loss = [&](const ImageGrid& y) { return std::pow(l2_distance(forward(y, fb, cfg), target), 2); };
        double worst = 0.0;
        for (int t = 0; t < 12; ++t) {
            const std::size_t i = s.rng()() % x.size();
            ImageGrid xp = x, xm = x;
            const double h = 1e-5;
            xp.data()[i] += h;
            xm.data()[i] -= h;
            const double fd = (loss(xp) - loss(xm)) / (2 * h);
            worst = std::max(worst, std::abs(fd - lg.grad.data()[i]) / std::max(std::abs(fd), 1e-12));
        }
        s.check("gradient_finite_difference", worst, 1e-4, true, "max relative error, 12 pixels");

        // <J v, w> against <v, J^T w>.
        auto [coeffs, tape] = forward_with_tape(x, fb, cfg);
        Cotangent w = coeffs;
        std::normal_distribution<double> g(0.0, 1.0);
        for (double& v : w.data) v = g(s.rng());
        ImageGrid v = s.noise(16);
        for (double& e : v.data()) e -= 0.5;
        const ImageGrid jt_w = backward(tape, w);
        double rhs = 0.0;
        for (std::size_t i = 0; i < v.size(); ++i) rhs += v.data()[i] * jt_w.data()[i];
        const double h = 1e-5;
        ImageGrid xp = x, xm = x;
        for (std::size_t i = 0; i < x.size(); ++i) {
            xp.data()[i] += h * v.data()[i];
            xm.data()[i] -= h * v.data()[i];
        }
        const ScatteringCoeffs sp = forward(xp, fb, cfg), sm = forward(xm, fb, cfg);
        double lhs = 0.0;
        for (std::size_t i = 0; i < w.data.size(); ++i) lhs += (sp.data[i] - sm.data[i]) / (2 * h) * w.data[i];
        s.check("adjoint_dot_product", std::abs(lhs - rhs) / std::abs(rhs), 1e-6, true, "relative mismatch");
    });

    s.guarded("covariance", [&] {
        const auto cfg = ScatteringConfig::make(2, 8, BoundaryMode::Periodic, Precision::Double);
        const FilterBank fb = s.bank(32, 2, 8);
        const ImageGrid x = s.noise(32);
        const ScatteringCoeffs a = forward(x, fb, cfg);
        const ScatteringCoeffs b = forward(roll(x, 4, 8), fb, cfg);
        ScatteringCoeffs a_shift = a;
        for (std::size_t p = 0; p < a.paths.size(); ++p)
            for (std::size_t y = 0; y < a.height; ++y)
                for (std::size_t q = 0; q < a.width; ++q)
                    a_shift.at(0, p, (y + 1) % a.height, (q + 2) % a.width) = a.at(0, p, y, q);
        s.check("translation_covariance", rel(b, a_shift), 1e-5, true, "shift by (4, 8) pixels, J=2");
    });

    s.guarded("non_expansive", [&] {
        const auto cfg = ScatteringConfig::make(2, 8, BoundaryMode::Periodic, Precision::Double);
        const FilterBank fb = s.bank(32, 2, 8);
        const double bound = std::max(1.0, littlewood_paley(fb).max_e);
        double worst = 0.0;
        for (int t = 0; t < 5; ++t) {
            const ImageGrid x = s.noise(32), y = s.noise(32);
            ImageGrid d = x;
            for (std::size_t i = 0; i < d.size(); ++i) d.data()[i] -= y.data()[i];
            worst = std::max(worst, l2_distance(forward(x, fb, cfg), forward(y, fb, cfg)) / l2_norm(d));
        }
        s.check("non_expansive", worst, std::sqrt(bound), true, "max |Sx-Sy|/|x-y| over 5 pairs");
    });

    s.guarded("memory_bound", [&] {
        double worst = 0.0;
        for (int J = 2; J <= 4; ++J) {
            const MemoryReport r = memory_report(ScatteringConfig::make(J, 8, BoundaryMode::Periodic), 64);
            worst = std::max(worst, static_cast<double>(r.infix_peak) / (64.0 * 64.0));
        }
        s.check("memory_bound", worst, 5.0, true, "peak complex slots / N^2, N=64, J=2..4");
    });

    s.guarded("format_roundtrip", [&] {
        const auto cfg = ScatteringConfig::make(2, 4, BoundaryMode::Reflect);
        const ImageGrid img = s.noise(12, 3);
        const FilterBank fb = s.bank(geometry(12, 12, cfg).M, 2, 4);
        const ScatteringCoeffs c = forward(img, fb, cfg);
        std::stringstream a, b;
        write_coeffs(c, a);
        const ScatteringCoeffs back = read_coeffs(a);
        write_coeffs(back, b);
        s.check("sct1_roundtrip", a.str() == b.str() ? 0.0 : 1.0, 0.0, true, "write/read/write byte equality");

        LinearModel m;
        m.J = c.J;
        m.L = c.L;
        m.input_height = c.input_height;
        m.input_width = c.input_width;
        m.boundary = c.boundary;
        m.input_channels = c.input_channels;
        m.height = c.height;
        m.width = c.width;
        m.paths = c.paths;
        m.classes = 3;
        m.stats = compute_path_stats(std::span<const ScatteringCoeffs>(&c, 1));
        std::normal_distribution<double> g(0.0, 1.0);
        m.weights.resize(m.classes * m.feature_count());
        for (double& v : m.weights) v = g(s.rng());
        m.bias = {0.1, -0.2, 0.3};
        std::stringstream ma, mb;
        write_model(m, ma);
        const LinearModel mback = read_model(ma);
        write_model(mback, mb);
        s.check("slm1_roundtrip", ma.str() == mb.str() ? 0.0 : 1.0, 0.0, true, "write/read/write byte equality");
    });

    return s.take();
}

}  // namespace scatter
