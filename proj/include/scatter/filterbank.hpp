#pragma once

#include <cstddef>
#include <map>
#include <numbers>
#include <tuple>
#include <vector>

#include "scatter/fourier.hpp"

namespace scatter {

/// Mother Morlet wavelet parameters.
struct MorletParams {
    double xi0 = 3.0 * std::numbers::pi / 4.0;  // centre frequency, radians/sample
    double sigma0 = 0.8;                        // spatial width at scale 0
    double slant = 0.5;                         // envelope anisotropy

    /// Published defaults with slant = 4/L.
    static MorletParams defaults(int L);
    void validate() const;

    bool operator==(const MorletParams&) const = default;
};

/// Angle of wavelet l out of L; angles cover the half circle [0, pi).
double wavelet_angle(int l, int L);

/// Fourier-domain Morlet wavelet at scale j and orientation theta on an M x M
/// grid. The spectrum is periodic on the grid, has exactly zero mean up to
/// rounding and unit peak magnitude.
SpectrumGrid<double> build_morlet(std::size_t M, int j, double theta, const MorletParams& p);

/// Periodic isotropic Gaussian low-pass of spatial width sigma0 * 2^J, unit DC gain.
SpectrumGrid<double> build_gaussian(std::size_t M, int J, const MorletParams& p);

/// All wavelets psi(j, l, r) for 0 <= r <= j < J and low-pass phi(r) for
/// 0 <= r <= J, each at resolution M / 2^r. Reduced resolutions are periodize()
/// of the full-resolution spectrum. Immutable after construction.
class FilterBank {
public:
    FilterBank(std::size_t M, int J, int L, const MorletParams& params);

    std::size_t M() const { return M_; }
    int J() const { return J_; }
    int L() const { return L_; }
    const MorletParams& params() const { return params_; }

    /// Common gain applied to every wavelet so the Littlewood-Paley sum peaks
    /// at exactly 1.
    double frame_gain() const { return frame_gain_; }

    template <class T>
    const SpectrumGrid<T>& psi(int j, int l, int r) const;
    template <class T>
    const SpectrumGrid<T>& phi(int r) const;

    std::size_t wavelet_count(int r = 0) const;

    /// Test hook: perturbs the DC bin of psi(0, 0, r) at every resolution, in
    /// both precisions. Used to check that self-test detects broken filters.
    void inject_fault_for_testing(double amount);

    bool operator==(const FilterBank& o) const;

private:
    using Key = std::tuple<int, int, int>;

    std::size_t M_;
    int J_;
    int L_;
    MorletParams params_;
    double frame_gain_ = 1.0;
    std::map<Key, SpectrumGrid<double>> psi_d_;
    std::map<Key, SpectrumGrid<float>> psi_f_;
    std::vector<SpectrumGrid<double>> phi_d_;
    std::vector<SpectrumGrid<float>> phi_f_;
};

FilterBank build_filterbank(std::size_t M, int J, int L, const MorletParams& p);

struct LittlewoodPaley {
    std::vector<double> energy;  // M x M, row-major in DFT index order
    double max_e = 0.0;
    double min_e_band = 0.0;     // over 2*pi/2^J <= |omega| <= 0.75*pi
};

LittlewoodPaley littlewood_paley(const FilterBank& fb);

/// Signed angular frequency (radians/sample) of DFT bin k on an M-point axis.
double bin_frequency(std::size_t k, std::size_t M);

/// Index of -k modulo M.
inline std::size_t negate_bin(std::size_t k, std::size_t M) { return (M - k) % M; }

}  // namespace scatter
