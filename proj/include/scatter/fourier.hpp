#pragma once

#include <complex>
#include <cstddef>
#include <memory>
#include <span>
#include <vector>

namespace scatter {

template <class T>
using Complex = std::complex<T>;

/// 64-byte aligned allocator so FFTW can use its SIMD codelets on our buffers.
template <class T>
struct AlignedAllocator {
    using value_type = T;
    static constexpr std::align_val_t kAlign{64};

    AlignedAllocator() = default;
    template <class U>
    AlignedAllocator(const AlignedAllocator<U>&) noexcept {}

    T* allocate(std::size_t n) {
        return static_cast<T*>(::operator new(n * sizeof(T), kAlign));
    }
    void deallocate(T* p, std::size_t) noexcept { ::operator delete(p, kAlign); }

    template <class U>
    bool operator==(const AlignedAllocator<U>&) const noexcept { return true; }
};

template <class T>
using AlignedVector = std::vector<T, AlignedAllocator<T>>;

/// Square M x M complex raster, row-major. M must be a power of two.
///
/// Used both for spatial complex signals and for spectra; SpectrumGrid is the
/// same layout with frequency-domain meaning.
template <class T>
class ComplexGrid {
public:
    ComplexGrid() = default;
    explicit ComplexGrid(std::size_t m);

    std::size_t side() const { return side_; }
    std::size_t size() const { return data_.size(); }

    Complex<T>& operator()(std::size_t y, std::size_t x) { return data_[y * side_ + x]; }
    const Complex<T>& operator()(std::size_t y, std::size_t x) const { return data_[y * side_ + x]; }

    std::span<Complex<T>> span() { return data_; }
    std::span<const Complex<T>> span() const { return data_; }
    Complex<T>* data() { return data_.data(); }
    const Complex<T>* data() const { return data_.data(); }

    bool operator==(const ComplexGrid& o) const { return side_ == o.side_ && data_ == o.data_; }

private:
    std::size_t side_ = 0;
    AlignedVector<Complex<T>> data_;
};

template <class T>
using SpectrumGrid = ComplexGrid<T>;

template <class T>
double l2_norm(const ComplexGrid<T>& g);

// Value-in/value-out public kernel.

/// Unnormalised forward 2-D DFT.
template <class T>
SpectrumGrid<T> dft2(const ComplexGrid<T>& g);

/// Inverse 2-D DFT scaled by 1/M^2.
template <class T>
ComplexGrid<T> idft2(const SpectrumGrid<T>& s);

/// Folds an M x M spectrum onto (M/2^k)^2 by summing the 2^{2k} aliased
/// blocks and scaling by 2^{-2k}. In space this is x[2^k p].
template <class T>
SpectrumGrid<T> periodize(const SpectrumGrid<T>& s, int k);

/// Adjoint of periodize: tiles the reduced spectrum over the 2^{2k} blocks,
/// each scaled by 2^{-2k}.
template <class T>
SpectrumGrid<T> periodize_vjp(const SpectrumGrid<T>& g, int k);

template <class T>
SpectrumGrid<T> pointwise_mul(const SpectrumGrid<T>& a, const SpectrumGrid<T>& b);

/// |z| elementwise, imaginary part set to zero.
template <class T>
ComplexGrid<T> modulus(const ComplexGrid<T>& g);

// In-place span kernels used by the transform engine. `side` is the grid
// side length; spans must hold side*side elements.
namespace kernel {

enum class Direction { Forward, Inverse };

/// In-place 2-D FFT. Inverse includes the 1/side^2 factor.
template <class T>
void fft2(std::span<Complex<T>> data, std::size_t side, Direction dir);

/// Unscaled inverse (i.e. the conjugate-transpose of the forward DFT).
template <class T>
void fft2_adjoint_of_forward(std::span<Complex<T>> data, std::size_t side);

template <class T>
void periodize(std::span<const Complex<T>> in, std::size_t side, int k, std::span<Complex<T>> out);

template <class T>
void periodize_adjoint(std::span<const Complex<T>> in, std::size_t reduced_side, int k,
                       std::span<Complex<T>> out);

/// out = gain * a .* b  (a is a filter, b a signal).
template <class T>
void multiply(std::span<const Complex<T>> filter, std::span<const Complex<T>> in, T gain,
              std::span<Complex<T>> out);

/// out = gain * conj(filter) .* in
template <class T>
void multiply_conj(std::span<const Complex<T>> filter, std::span<const Complex<T>> in, T gain,
                   std::span<Complex<T>> out);

/// acc += gain * conj(filter) .* in
template <class T>
void multiply_conj_accumulate(std::span<const Complex<T>> filter, std::span<const Complex<T>> in,
                              T gain, std::span<Complex<T>> acc);

/// out = periodize(gain * filter .* in, k) without the full-size product.
template <class T>
void multiply_periodize(std::span<const Complex<T>> filter, std::span<const Complex<T>> in, std::size_t side,
                        T gain, int k, std::span<Complex<T>> out);

/// acc += gain * conj(filter) .* periodize_adjoint(in, k)
template <class T>
void tile_multiply_conj_accumulate(std::span<const Complex<T>> filter, std::span<const Complex<T>> in,
                                   std::size_t reduced_side, int k, T gain, std::span<Complex<T>> acc);

template <class T>
void modulus(std::span<Complex<T>> data);

}  // namespace kernel

void require_power_of_two_side(std::size_t m, const char* what);

}  // namespace scatter
