#include "scatter/filterbank.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "scatter/error.hpp"
#include "scatter/grid.hpp"

namespace scatter {

namespace {

constexpr double kPi = std::numbers::pi;
// Neighbouring 2*pi periods summed when sampling a spectrum on the grid.
// Gaussian tails beyond 2 periods are below 1e-40 for sigma0 >= 0.5.
constexpr int kPeriods = 2;

// Sum over 2*pi-translates of an anisotropic Gaussian centred at `centre`,
// expressed in the frame rotated by theta.
struct RotatedGaussian {
    double sigma;
    double slant;
    double cos_t;
    double sin_t;
    double cx;
    double cy;

    double operator()(double wy, double wx) const {
        double acc = 0.0;
        for (int ky = -kPeriods; ky <= kPeriods; ++ky) {
            for (int kx = -kPeriods; kx <= kPeriods; ++kx) {
                const double a = wx + 2.0 * kPi * kx - cx;
                const double b = wy + 2.0 * kPi * ky - cy;
                const double along = cos_t * a + sin_t * b;
                const double across = -sin_t * a + cos_t * b;
                acc += std::exp(-0.5 * sigma * sigma * (along * along + across * across / (slant * slant)));
            }
        }
        return acc;
    }
};

template <class T>
SpectrumGrid<T> convert(const SpectrumGrid<double>& in) {
    if constexpr (std::is_same_v<T, double>) {
        return in;
    } else {
        SpectrumGrid<T> out(in.side());
        for (std::size_t i = 0; i < in.size(); ++i)
            out.data()[i] = Complex<T>(static_cast<T>(in.data()[i].real()), static_cast<T>(in.data()[i].imag()));
        return out;
    }
}

}  // namespace

MorletParams MorletParams::defaults(int L) {
    require(L >= 1, "MorletParams: L must be >= 1");
    MorletParams p;
    p.slant = 4.0 / L;
    return p;
}

void MorletParams::validate() const {
    require(xi0 > 0.0 && xi0 < kPi, "MorletParams: xi0 must lie in (0, pi)");
    require(sigma0 > 0.0, "MorletParams: sigma0 must be positive");
    require(slant > 0.0, "MorletParams: slant must be positive");
}

double wavelet_angle(int l, int L) { return kPi * static_cast<double>(l) / static_cast<double>(L); }

double bin_frequency(std::size_t k, std::size_t M) {
    const auto sk = static_cast<double>(k);
    const auto sm = static_cast<double>(M);
    return 2.0 * kPi * (k < M / 2 ? sk : sk - sm) / sm;
}

SpectrumGrid<double> build_morlet(std::size_t M, int j, double theta, const MorletParams& p) {
    p.validate();
    require_power_of_two_side(M, "build_morlet");
    require(j >= 0 && (std::size_t{1} << j) < M, "build_morlet: scale 2^j must be smaller than the grid");

    const double sigma = p.sigma0 * std::ldexp(1.0, j);
    const double xi = p.xi0 / std::ldexp(1.0, j);
    const double c = std::cos(theta);
    const double s = std::sin(theta);
    const RotatedGaussian wave{sigma, p.slant, c, s, xi * c, xi * s};
    const RotatedGaussian envelope{sigma, p.slant, c, s, 0.0, 0.0};
    // Subtracting a scaled centred Gaussian makes the DC response vanish.
    const double beta = wave(0.0, 0.0) / envelope(0.0, 0.0);

    SpectrumGrid<double> out(M);
    double peak = 0.0;
    for (std::size_t ky = 0; ky < M; ++ky) {
        const double wy = bin_frequency(ky, M);
        for (std::size_t kx = 0; kx < M; ++kx) {
            const double wx = bin_frequency(kx, M);
            const double v = wave(wy, wx) - beta * envelope(wy, wx);
            out(ky, kx) = v;
            peak = std::max(peak, std::abs(v));
        }
    }
    out(0, 0) = 0.0;
    for (auto& z : out.span()) z /= peak;
    return out;
}

SpectrumGrid<double> build_gaussian(std::size_t M, int J, const MorletParams& p) {
    p.validate();
    require_power_of_two_side(M, "build_gaussian");
    require(J >= 0 && (std::size_t{1} << J) <= M, "build_gaussian: 2^J must not exceed the grid");
    const double sigma = p.sigma0 * std::ldexp(1.0, J);
    const RotatedGaussian g{sigma, 1.0, 1.0, 0.0, 0.0, 0.0};
    const double dc = g(0.0, 0.0);
    SpectrumGrid<double> out(M);
    for (std::size_t ky = 0; ky < M; ++ky)
        for (std::size_t kx = 0; kx < M; ++kx)
            out(ky, kx) = g(bin_frequency(ky, M), bin_frequency(kx, M)) / dc;
    return out;
}

FilterBank::FilterBank(std::size_t M, int J, int L, const MorletParams& params)
    : M_(M), J_(J), L_(L), params_(params) {
    require_power_of_two_side(M, "build_filterbank");
    require(J >= 1, "build_filterbank: J must be >= 1");
    require(L >= 1, "build_filterbank: L must be >= 1");
    require(J < 30 && (std::size_t{1} << J) <= M, "build_filterbank: 2^J must not exceed M");
    params.validate();

    std::vector<SpectrumGrid<double>> full;
    full.reserve(static_cast<std::size_t>(J * L));
    for (int j = 0; j < J; ++j)
        for (int l = 0; l < L; ++l) full.push_back(build_morlet(M, j, wavelet_angle(l, L), params));
    const SpectrumGrid<double> phi0 = build_gaussian(M, J, params);

    // Frame normalisation: one gain for all wavelets so that
    // max_w |phi(w)|^2 + gain^2 * W(w) == 1, W the symmetrised wavelet energy.
    std::vector<double> wsum(M * M, 0.0);
    for (const auto& psi : full)
        for (std::size_t ky = 0; ky < M; ++ky)
            for (std::size_t kx = 0; kx < M; ++kx) {
                const double a = std::norm(psi(ky, kx));
                const double b = std::norm(psi(negate_bin(ky, M), negate_bin(kx, M)));
                wsum[ky * M + kx] += 0.5 * (a + b);
            }
    double gain2 = 1.0;
    for (std::size_t i = 0; i < M * M; ++i) {
        if (wsum[i] > 1e-12) gain2 = std::min(gain2, (1.0 - std::norm(phi0.data()[i])) / wsum[i]);
    }
    frame_gain_ = std::sqrt(std::max(gain2, 0.0));

    for (int j = 0; j < J; ++j) {
        for (int l = 0; l < L; ++l) {
            SpectrumGrid<double> base = full[static_cast<std::size_t>(j * L + l)];
            for (auto& z : base.span()) z *= frame_gain_;
            for (int r = 0; r <= j; ++r) {
                SpectrumGrid<double> reduced = r == 0 ? base : periodize(base, r);
                psi_f_.emplace(Key{j, l, r}, convert<float>(reduced));
                psi_d_.emplace(Key{j, l, r}, std::move(reduced));
            }
        }
    }
    for (int r = 0; r <= J; ++r) {
        SpectrumGrid<double> reduced = r == 0 ? phi0 : periodize(phi0, r);
        phi_f_.push_back(convert<float>(reduced));
        phi_d_.push_back(std::move(reduced));
    }
}

template <>
const SpectrumGrid<double>& FilterBank::psi<double>(int j, int l, int r) const {
    auto it = psi_d_.find(Key{j, l, r});
    require(it != psi_d_.end(), "FilterBank::psi: no filter for (j=" + std::to_string(j) +
                                    ", l=" + std::to_string(l) + ", r=" + std::to_string(r) + ")");
    return it->second;
}

template <>
const SpectrumGrid<float>& FilterBank::psi<float>(int j, int l, int r) const {
    auto it = psi_f_.find(Key{j, l, r});
    require(it != psi_f_.end(), "FilterBank::psi: no filter for (j=" + std::to_string(j) +
                                    ", l=" + std::to_string(l) + ", r=" + std::to_string(r) + ")");
    return it->second;
}

template <>
const SpectrumGrid<double>& FilterBank::phi<double>(int r) const {
    require(r >= 0 && r <= J_, "FilterBank::phi: resolution out of range");
    return phi_d_[static_cast<std::size_t>(r)];
}

template <>
const SpectrumGrid<float>& FilterBank::phi<float>(int r) const {
    require(r >= 0 && r <= J_, "FilterBank::phi: resolution out of range");
    return phi_f_[static_cast<std::size_t>(r)];
}

std::size_t FilterBank::wavelet_count(int r) const {
    return static_cast<std::size_t>(std::count_if(psi_d_.begin(), psi_d_.end(),
                                                  [r](const auto& kv) { return std::get<2>(kv.first) == r; }));
}

void FilterBank::inject_fault_for_testing(double amount) {
    for (auto& [key, grid] : psi_d_)
        if (std::get<0>(key) == 0 && std::get<1>(key) == 0) grid(0, 0) += amount;
    for (auto& [key, grid] : psi_f_)
        if (std::get<0>(key) == 0 && std::get<1>(key) == 0) grid(0, 0) += static_cast<float>(amount);
}

bool FilterBank::operator==(const FilterBank& o) const {
    return M_ == o.M_ && J_ == o.J_ && L_ == o.L_ && params_ == o.params_ && psi_d_ == o.psi_d_ &&
           psi_f_ == o.psi_f_ && phi_d_ == o.phi_d_ && phi_f_ == o.phi_f_;
}

FilterBank build_filterbank(std::size_t M, int J, int L, const MorletParams& p) {
    return FilterBank(M, J, L, p);
}

LittlewoodPaley littlewood_paley(const FilterBank& fb) {
    const std::size_t M = fb.M();
    LittlewoodPaley out;
    out.energy.assign(M * M, 0.0);
    const auto& phi = fb.phi<double>(0);
    for (std::size_t i = 0; i < M * M; ++i) out.energy[i] = std::norm(phi.data()[i]);
    for (int j = 0; j < fb.J(); ++j) {
        for (int l = 0; l < fb.L(); ++l) {
            const auto& psi = fb.psi<double>(j, l, 0);
            for (std::size_t ky = 0; ky < M; ++ky)
                for (std::size_t kx = 0; kx < M; ++kx)
                    out.energy[ky * M + kx] +=
                        0.5 * (std::norm(psi(ky, kx)) + std::norm(psi(negate_bin(ky, M), negate_bin(kx, M))));
        }
    }
    const double lo = 2.0 * kPi / std::ldexp(1.0, fb.J());
    const double hi = 0.75 * kPi;
    out.max_e = 0.0;
    out.min_e_band = std::numeric_limits<double>::infinity();
    for (std::size_t ky = 0; ky < M; ++ky) {
        for (std::size_t kx = 0; kx < M; ++kx) {
            const double e = out.energy[ky * M + kx];
            out.max_e = std::max(out.max_e, e);
            const double radius = std::hypot(bin_frequency(ky, M), bin_frequency(kx, M));
            if (radius >= lo && radius <= hi) out.min_e_band = std::min(out.min_e_band, e);
        }
    }
    if (!std::isfinite(out.min_e_band)) out.min_e_band = 0.0;
    return out;
}

}  // namespace scatter
