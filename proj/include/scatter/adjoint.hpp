#pragma once

#include <utility>
#include <vector>

#include "scatter/fourier.hpp"
#include "scatter/scattering.hpp"

namespace scatter {

/// Cotangent on the coefficients: same shape and indexing as ScatteringCoeffs.
using Cotangent = ScatteringCoeffs;

/// Guard used in place of |z| when dividing by the modulus.
template <class T>
constexpr T modulus_guard() {
    if constexpr (std::is_same_v<T, float>) return T(1e-6);
    else return T(1e-12);
}

/// Vector-Jacobian product of z -> |z|: g * z / max(|z|, eps).
template <class T>
ComplexGrid<T> modulus_vjp(const ComplexGrid<T>& z, std::span<const T> g);

/// What backward() needs from one forward pass. Intermediates are recomputed
/// from the padded input during backward rather than stored.
struct Tape {
    ScatteringConfig cfg;
    Geometry geom;
    ImageGrid padded;           // input on the transform grid
    std::size_t source_height = 0;
    std::size_t source_width = 0;
    const FilterBank* fb = nullptr;

    /// Complex-slot equivalent of the retained state (real samples count half).
    std::size_t retained_slots() const { return (padded.size() + 1) / 2; }
    bool operator==(const Tape& o) const;
};

std::pair<ScatteringCoeffs, Tape> forward_with_tape(const ImageGrid& img, const FilterBank& fb,
                                                    const ScatteringConfig& cfg);
std::pair<ScatteringCoeffs, Tape> forward_with_tape(const ImageGrid& img, const FilterBank& fb,
                                                    const ScatteringConfig& cfg, SlotMeter& meter);

/// Gradient of <S(x), ct> with respect to the original (unpadded) image.
ImageGrid backward(const Tape& tape, const Cotangent& ct);
ImageGrid backward(const Tape& tape, const Cotangent& ct, SlotMeter& meter);

struct LossGrad {
    double loss = 0.0;
    ImageGrid grad;
    ScatteringCoeffs coeffs;  // S(y), reused by callers reporting err(S_J)
};

/// loss = |S(y) - target|^2 and its gradient with respect to y.
LossGrad recon_loss_grad(const ScatteringCoeffs& target, const ImageGrid& y, const FilterBank& fb,
                         const ScatteringConfig& cfg);

}  // namespace scatter
