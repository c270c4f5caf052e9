#pragma once

// Internal helpers shared by the forward cascade and its adjoint.

#include <cmath>
#include <span>
#include <string>
#include <utility>

#include "scatter/error.hpp"
#include "scatter/filterbank.hpp"
#include "scatter/fourier.hpp"
#include "scatter/scattering.hpp"

namespace scatter::detail {

/// Aligned complex scratch buffer registered with a SlotMeter for its lifetime.
template <class T>
class Buffer {
public:
    Buffer(std::size_t capacity, SlotMeter& meter) : data_(capacity), meter_(&meter) {
        meter_->add(capacity);
    }
    ~Buffer() {
        if (meter_) meter_->release(data_.size());
    }
    Buffer(const Buffer&) = delete;
    Buffer& operator=(const Buffer&) = delete;
    Buffer(Buffer&& o) noexcept : data_(std::move(o.data_)), meter_(std::exchange(o.meter_, nullptr)) {}

    std::span<Complex<T>> first(std::size_t n) { return std::span<Complex<T>>(data_).first(n); }
    std::size_t capacity() const { return data_.size(); }

private:
    AlignedVector<Complex<T>> data_;
    SlotMeter* meter_;
};

/// Resolution exponent at which the wavelet-modulus signal of scale j lives.
inline int resolution(int j, ForwardMode mode) { return mode == ForwardMode::Algorithm ? j : 0; }

/// Filtering on a grid subsampled by 2^r with a periodized filter is a
/// Riemann sum with cell area 4^r.
template <class T>
T density_gain(int r) {
    return static_cast<T>(std::ldexp(1.0, 2 * r));
}

template <class T>
void load_real(std::span<const double> x, std::span<Complex<T>> out) {
    for (std::size_t i = 0; i < x.size(); ++i) out[i] = Complex<T>(static_cast<T>(x[i]), T(0));
}

/// Buffer capacities (complex slots) for one image channel on an M grid.
struct WorkspacePlan {
    std::size_t full = 0;    // M^2
    std::size_t second = 0;  // largest second-order signal
    std::size_t out = 0;     // (M/2^J)^2
};

inline WorkspacePlan workspace_plan(std::size_t M, int J, ForwardMode mode) {
    WorkspacePlan p;
    p.full = M * M;
    const std::size_t m2 = mode == ForwardMode::Algorithm ? (M >> 1) : M;
    p.second = J >= 2 ? m2 * m2 : 1;
    p.out = (M >> J) * (M >> J);
    return p;
}

template <class T>
void check_filterbank(const FilterBank& fb, const ScatteringConfig& cfg, std::size_t M) {
    if (fb.J() != cfg.J || fb.L() != cfg.L || !(fb.params() == cfg.params) || fb.M() != M)
        throw InvalidInput("filter bank (M=" + std::to_string(fb.M()) + ", J=" + std::to_string(fb.J()) +
                           ", L=" + std::to_string(fb.L()) + ") does not match the configuration (M=" +
                           std::to_string(M) + ", J=" + std::to_string(cfg.J) + ", L=" + std::to_string(cfg.L) +
                           ")");
}

}  // namespace scatter::detail
