#include "scatter/adjoint.hpp"

#include <algorithm>
#include <cmath>

#include "engine.hpp"
#include "scatter/error.hpp"

namespace scatter {

template <class T>
ComplexGrid<T> modulus_vjp(const ComplexGrid<T>& z, std::span<const T> g) {
    require(g.size() == z.size(), "modulus_vjp: shape mismatch");
    ComplexGrid<T> out(z.side());
    for (std::size_t i = 0; i < z.size(); ++i) {
        const Complex<T> v = z.data()[i];
        out.data()[i] = g[i] * v / std::max(std::abs(v), modulus_guard<T>());
    }
    return out;
}

template ComplexGrid<float> modulus_vjp<float>(const ComplexGrid<float>&, std::span<const float>);
template ComplexGrid<double> modulus_vjp<double>(const ComplexGrid<double>&, std::span<const double>);

bool Tape::operator==(const Tape& o) const {
    return fb == o.fb && source_height == o.source_height && source_width == o.source_width &&
           geom.M == o.geom.M && padded.data() == o.padded.data() && cfg.J == o.cfg.J && cfg.L == o.cfg.L &&
           cfg.boundary == o.cfg.boundary && cfg.mode == o.cfg.mode && cfg.precision == o.cfg.precision;
}

std::pair<ScatteringCoeffs, Tape> forward_with_tape(const ImageGrid& img, const FilterBank& fb,
                                                    const ScatteringConfig& cfg, SlotMeter& meter) {
    Tape tape;
    tape.cfg = cfg;
    tape.geom = geometry(img.height(), img.width(), cfg);
    tape.padded = cfg.boundary == BoundaryMode::Reflect
                      ? pad(img, tape.geom.rows, tape.geom.cols, BoundaryMode::Reflect)
                      : img;
    tape.source_height = img.height();
    tape.source_width = img.width();
    tape.fb = &fb;
    meter.add(tape.retained_slots());
    ScatteringCoeffs s = forward(img, fb, cfg, meter);
    meter.release(tape.retained_slots());
    return {std::move(s), std::move(tape)};
}

std::pair<ScatteringCoeffs, Tape> forward_with_tape(const ImageGrid& img, const FilterBank& fb,
                                                    const ScatteringConfig& cfg) {
    SlotMeter meter;
    return forward_with_tape(img, fb, cfg, meter);
}

namespace {

/// Reverse pass for one channel. Each first-order branch is recomputed from
/// the input spectrum, its second-order children are recomputed one at a
/// time, and cotangents are pulled back through periodization, the modulus
/// and the transforms in reverse order.
template <class T>
class BackwardEngine {
public:
    BackwardEngine(const FilterBank& fb, const ScatteringConfig& cfg, SlotMeter& meter)
        : fb_(fb), cfg_(cfg), M_(fb.M()), plan_(detail::workspace_plan(M_, cfg.J, cfg.mode)),
          spectrum_(plan_.full, meter), grad_(plan_.full, meter),
          z1_(plan_.full, meter), u1_(plan_.full, meter), gu1_(plan_.full, meter),
          z2_(plan_.second, meter), g2_(plan_.second, meter), out_(plan_.out, meter) {}

    /// x: padded plane; maps: cotangent on the full (M/2^J)^2 output grid per
    /// path; grad: receives d<S(x), maps>/dx on the padded grid.
    void run(std::span<const double> x, std::span<const double> maps, std::span<double> grad) {
        using detail::density_gain;
        using detail::resolution;
        using kernel::Direction;
        const int J = cfg_.J;
        const int L = cfg_.L;

        auto A = spectrum_.first(M_ * M_);
        detail::load_real<T>(x, A);
        kernel::fft2<T>(A, M_, Direction::Forward);

        auto GX = grad_.first(M_ * M_);
        std::fill(GX.begin(), GX.end(), Complex<T>(0));
        pull_output(maps, 0, M_, J, fb_.phi<T>(0).span(), T(1), GX);

        for (int j1 = 0; j1 < J; ++j1) {
            const int r1 = resolution(j1, cfg_.mode);
            const std::size_t M1 = M_ >> r1;
            for (int l1 = 0; l1 < L; ++l1) {
                auto Z1 = z1_.first(M1 * M1);
                auto U1 = u1_.first(M1 * M1);
                auto GU1 = gu1_.first(M1 * M1);
                const auto& psi1 = fb_.psi<T>(j1, l1, 0).span();

                kernel::multiply_periodize<T>(psi1, A, M_, T(1), r1, Z1);
                kernel::fft2<T>(Z1, M1, Direction::Inverse);
                std::copy(Z1.begin(), Z1.end(), U1.begin());
                kernel::modulus<T>(U1);
                kernel::fft2<T>(U1, M1, Direction::Forward);

                std::fill(GU1.begin(), GU1.end(), Complex<T>(0));
                pull_output(maps, order1_index(j1, l1, L), M1, J - r1, fb_.phi<T>(r1).span(), density_gain<T>(r1),
                            GU1);

                for (int j2 = j1 + 1; j2 < J; ++j2) {
                    const int r2 = resolution(j2, cfg_.mode);
                    const std::size_t M2 = M_ >> r2;
                    for (int l2 = 0; l2 < L; ++l2) {
                        auto Z2 = z2_.first(M2 * M2);
                        auto G2 = g2_.first(M2 * M2);
                        const auto& psi2 = fb_.psi<T>(j2, l2, r1).span();

                        kernel::multiply_periodize<T>(psi2, U1, M1, density_gain<T>(r1), r2 - r1, Z2);
                        kernel::fft2<T>(Z2, M2, Direction::Inverse);

                        std::fill(G2.begin(), G2.end(), Complex<T>(0));
                        pull_output(maps, order2_index(j1, l1, j2, l2, J, L), M2, J - r2, fb_.phi<T>(r2).span(),
                                    density_gain<T>(r2), G2);
                        pull_modulus(G2, Z2, M2);
                        kernel::tile_multiply_conj_accumulate<T>(psi2, G2, M2, r2 - r1, density_gain<T>(r1), GU1);
                    }
                }

                pull_modulus(GU1, Z1, M1);
                kernel::tile_multiply_conj_accumulate<T>(psi1, GU1, M1, r1, T(1), GX);
            }
        }

        kernel::fft2_adjoint_of_forward<T>(GX, M_);
        for (std::size_t i = 0; i < grad.size(); ++i) grad[i] += static_cast<double>(GX[i].real());
    }

private:
    // Cotangent of one output map pulled back through "invert, take the real
    // part, periodize by 2^k, low-pass": accumulated into `acc` at resolution `side`.
    void pull_output(std::span<const double> maps, std::size_t path, std::size_t side, int k,
                     std::span<const Complex<T>> phi, T gain, std::span<Complex<T>> acc) {
        const std::size_t MJ = side >> k;
        auto E = out_.first(MJ * MJ);
        const double* src = maps.data() + path * MJ * MJ;
        for (std::size_t i = 0; i < MJ * MJ; ++i) E[i] = Complex<T>(static_cast<T>(src[i]), T(0));
        // Adjoint of the scaled inverse DFT is the forward DFT over n.
        kernel::fft2<T>(E, MJ, kernel::Direction::Forward);
        const T scale = T(1) / static_cast<T>(MJ * MJ);
        for (auto& z : E) z *= scale;
        kernel::tile_multiply_conj_accumulate<T>(phi, E, MJ, k, gain, acc.first(side * side));
    }

    // `g` holds the cotangent of FFT(|z|). Replace it by the cotangent of the
    // pre-inverse-DFT spectrum of z.
    void pull_modulus(std::span<Complex<T>> g, std::span<const Complex<T>> z, std::size_t side) {
        kernel::fft2_adjoint_of_forward<T>(g, side);
        for (std::size_t i = 0; i < g.size(); ++i) {
            const T gr = g[i].real();  // |z| is real: only the real part propagates
            const T mag = std::sqrt(z[i].real() * z[i].real() + z[i].imag() * z[i].imag());
            g[i] = z[i] * (gr / std::max(mag, modulus_guard<T>()));
        }
        kernel::fft2<T>(g, side, kernel::Direction::Forward);
        const T scale = T(1) / static_cast<T>(side * side);
        for (auto& v : g) v *= scale;
    }

    const FilterBank& fb_;
    const ScatteringConfig& cfg_;
    std::size_t M_;
    detail::WorkspacePlan plan_;
    detail::Buffer<T> spectrum_;
    detail::Buffer<T> grad_;
    detail::Buffer<T> z1_;
    detail::Buffer<T> u1_;
    detail::Buffer<T> gu1_;
    detail::Buffer<T> z2_;
    detail::Buffer<T> g2_;
    detail::Buffer<T> out_;
};

template <class T>
void backward_padded(const Tape& tape, const std::vector<double>& maps_full, ImageGrid& grad, SlotMeter& meter) {
    BackwardEngine<T> engine(*tape.fb, tape.cfg, meter);
    const std::size_t per_channel = maps_full.size() / tape.padded.channels();
    for (std::size_t c = 0; c < tape.padded.channels(); ++c) {
        engine.run(tape.padded.plane(c), std::span<const double>(maps_full).subspan(c * per_channel, per_channel),
                   grad.plane(c));
    }
}

}  // namespace

ImageGrid backward(const Tape& tape, const Cotangent& ct, SlotMeter& meter) {
    require(tape.fb != nullptr, "backward: tape has no filter bank");
    const Geometry& g = tape.geom;
    const int J = tape.cfg.J;
    require(ct.J == J && ct.L == tape.cfg.L && ct.input_channels == tape.padded.channels() &&
                ct.height == g.out_h && ct.width == g.out_w &&
                ct.paths.size() == path_count(J, tape.cfg.L) && ct.data.size() == ct.channel_count() * ct.map_size(),
            "backward: cotangent shape does not match the forward pass");

    // Adjoint of the crop: cotangent placed on the full output grid.
    const std::size_t MJ = g.M >> J;
    const std::size_t paths = ct.paths.size();
    std::vector<double> maps(ct.input_channels * paths * MJ * MJ, 0.0);
    for (std::size_t c = 0; c < ct.input_channels; ++c)
        for (std::size_t p = 0; p < paths; ++p)
            for (std::size_t y = 0; y < g.out_h; ++y)
                for (std::size_t x = 0; x < g.out_w; ++x)
                    maps[((c * paths + p) * MJ + g.crop_y0 + y) * MJ + g.crop_x0 + x] = ct.at(c, p, y, x);

    ImageGrid grad(g.M, g.M, tape.padded.channels(), tape.padded.color_space(), tape.padded.precision());
    meter.add(tape.retained_slots());
    if (tape.cfg.precision == Precision::Single)
        backward_padded<float>(tape, maps, grad, meter);
    else
        backward_padded<double>(tape, maps, grad, meter);
    meter.release(tape.retained_slots());

    if (tape.cfg.boundary == BoundaryMode::Periodic) return grad;
    return pad_adjoint(grad, g.rows, g.cols, BoundaryMode::Reflect);
}

ImageGrid backward(const Tape& tape, const Cotangent& ct) {
    SlotMeter meter;
    return backward(tape, ct, meter);
}

LossGrad recon_loss_grad(const ScatteringCoeffs& target, const ImageGrid& y, const FilterBank& fb,
                         const ScatteringConfig& cfg) {
    auto [coeffs, tape] = forward_with_tape(y, fb, cfg);
    require(coeffs.same_layout(target), "recon_loss_grad: target shape does not match the configuration");
    Cotangent ct = coeffs;
    double loss = 0.0;
    for (std::size_t i = 0; i < ct.data.size(); ++i) {
        const double d = coeffs.data[i] - target.data[i];
        loss += d * d;
        ct.data[i] = 2.0 * d;
    }
    LossGrad out;
    out.loss = loss;
    out.grad = backward(tape, ct);
    out.grad.set_color_space(y.color_space());
    out.coeffs = std::move(coeffs);
    return out;
}

}  // namespace scatter
