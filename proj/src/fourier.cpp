#include "scatter/fourier.hpp"

#include <fftw3.h>

#include <cmath>
#include <map>
#include <mutex>
#include <string>
#include <tuple>

#include "scatter/error.hpp"

namespace scatter {

void require_power_of_two_side(std::size_t m, const char* what) {
    if (m == 0 || (m & (m - 1)) != 0)
        throw InvalidInput(std::string(what) + ": grid side " + std::to_string(m) + " is not a power of two");
}

namespace {

template <class T>
struct Fftw;

template <>
struct Fftw<float> {
    using Plan = fftwf_plan;
    using Cx = fftwf_complex;
    static Plan plan(int n, Cx* buf, int sign, unsigned flags) {
        return fftwf_plan_dft_2d(n, n, buf, buf, sign, flags);
    }
    static void execute(Plan p, Cx* buf) { fftwf_execute_dft(p, buf, buf); }
    static Cx* alloc(std::size_t n) { return fftwf_alloc_complex(n); }
    static void free(Cx* p) { fftwf_free(p); }
    static int alignment_of(float* p) { return fftwf_alignment_of(p); }
};

template <>
struct Fftw<double> {
    using Plan = fftw_plan;
    using Cx = fftw_complex;
    static Plan plan(int n, Cx* buf, int sign, unsigned flags) {
        return fftw_plan_dft_2d(n, n, buf, buf, sign, flags);
    }
    static void execute(Plan p, Cx* buf) { fftw_execute_dft(p, buf, buf); }
    static Cx* alloc(std::size_t n) { return fftw_alloc_complex(n); }
    static void free(Cx* p) { fftw_free(p); }
    static int alignment_of(double* p) { return fftw_alignment_of(p); }
};

// FFTW's planner is not thread-safe; execution with new-array functions is.
std::mutex& planner_mutex() {
    static std::mutex m;
    return m;
}

template <class T>
typename Fftw<T>::Plan get_plan(std::size_t side, int sign, bool aligned) {
    using Key = std::tuple<std::size_t, int, bool>;
    static std::map<Key, typename Fftw<T>::Plan> cache;
    std::lock_guard lock(planner_mutex());
    const Key key{side, sign, aligned};
    if (auto it = cache.find(key); it != cache.end()) return it->second;
    auto* buf = Fftw<T>::alloc(side * side);
    unsigned flags = FFTW_ESTIMATE;
    if (!aligned) flags |= FFTW_UNALIGNED;
    auto plan = Fftw<T>::plan(static_cast<int>(side), buf, sign, flags);
    Fftw<T>::free(buf);
    cache.emplace(key, plan);
    return plan;
}

template <class T>
void execute(std::span<Complex<T>> data, std::size_t side, int sign) {
    auto* raw = reinterpret_cast<T*>(data.data());
    const bool aligned = Fftw<T>::alignment_of(raw) == 0;
    auto plan = get_plan<T>(side, sign, aligned);
    Fftw<T>::execute(plan, reinterpret_cast<typename Fftw<T>::Cx*>(data.data()));
}

template <class T>
void check_span(std::span<const Complex<T>> s, std::size_t side, const char* what) {
    require_power_of_two_side(side, what);
    if (s.size() != side * side)
        throw InvalidInput(std::string(what) + ": buffer holds " + std::to_string(s.size()) +
                           " elements, expected " + std::to_string(side * side));
}

}  // namespace

template <class T>
ComplexGrid<T>::ComplexGrid(std::size_t m) : side_(m), data_(m * m) {
    require_power_of_two_side(m, "ComplexGrid");
}

template <class T>
double l2_norm(const ComplexGrid<T>& g) {
    double s = 0.0;
    for (const auto& z : g.span()) s += std::norm(std::complex<double>(z));
    return std::sqrt(s);
}

namespace kernel {

namespace {

// Plain complex arithmetic; std::complex operator* carries NaN/Inf recovery
// branches that dominate these loops.
template <class T>
inline Complex<T> mul(Complex<T> a, Complex<T> b) {
    return {a.real() * b.real() - a.imag() * b.imag(), a.real() * b.imag() + a.imag() * b.real()};
}

template <class T>
inline Complex<T> mul_conj(Complex<T> a, Complex<T> b) {
    return {a.real() * b.real() + a.imag() * b.imag(), a.real() * b.imag() - a.imag() * b.real()};
}

}  // namespace

template <class T>
void fft2(std::span<Complex<T>> data, std::size_t side, Direction dir) {
    check_span<T>(data, side, "fft2");
    if (dir == Direction::Forward) {
        execute<T>(data, side, FFTW_FORWARD);
        return;
    }
    execute<T>(data, side, FFTW_BACKWARD);
    const T scale = T(1) / static_cast<T>(side * side);
    for (auto& z : data) z *= scale;
}

template <class T>
void fft2_adjoint_of_forward(std::span<Complex<T>> data, std::size_t side) {
    check_span<T>(data, side, "fft2_adjoint_of_forward");
    execute<T>(data, side, FFTW_BACKWARD);
}

template <class T>
void periodize(std::span<const Complex<T>> in, std::size_t side, int k, std::span<Complex<T>> out) {
    check_span<T>(in, side, "periodize");
    if (k < 0 || (side >> k) == 0 || ((side >> k) << k) != side)
        throw InvalidInput("periodize: 2^k does not divide the grid side");
    const std::size_t r = side >> k;
    check_span<T>(out, r, "periodize");
    const std::size_t blocks = std::size_t{1} << k;
    const T scale = T(1) / static_cast<T>(blocks * blocks);
    for (std::size_t y = 0; y < r; ++y) {
        Complex<T>* dst = out.data() + y * r;
        for (std::size_t x = 0; x < r; ++x) dst[x] = 0;
        for (std::size_t by = 0; by < blocks; ++by) {
            const Complex<T>* src_row = in.data() + (by * r + y) * side;
            for (std::size_t bx = 0; bx < blocks; ++bx) {
                const Complex<T>* src = src_row + bx * r;
                for (std::size_t x = 0; x < r; ++x) dst[x] += src[x];
            }
        }
        for (std::size_t x = 0; x < r; ++x) dst[x] *= scale;
    }
}

template <class T>
void periodize_adjoint(std::span<const Complex<T>> in, std::size_t reduced_side, int k,
                       std::span<Complex<T>> out) {
    check_span<T>(in, reduced_side, "periodize_vjp");
    if (k < 0) throw InvalidInput("periodize_vjp: negative k");
    const std::size_t blocks = std::size_t{1} << k;
    const std::size_t side = reduced_side * blocks;
    check_span<T>(out, side, "periodize_vjp");
    const T scale = T(1) / static_cast<T>(blocks * blocks);
    for (std::size_t y = 0; y < side; ++y) {
        const Complex<T>* src = in.data() + (y % reduced_side) * reduced_side;
        Complex<T>* dst = out.data() + y * side;
        for (std::size_t bx = 0; bx < blocks; ++bx)
            for (std::size_t x = 0; x < reduced_side; ++x) dst[bx * reduced_side + x] = src[x] * scale;
    }
}

template <class T>
void multiply(std::span<const Complex<T>> filter, std::span<const Complex<T>> in, T gain,
              std::span<Complex<T>> out) {
    if (filter.size() != in.size() || out.size() != in.size())
        throw InvalidInput("pointwise product: size mismatch");
    for (std::size_t i = 0; i < in.size(); ++i) out[i] = gain * mul<T>(filter[i], in[i]);
}

template <class T>
void multiply_conj(std::span<const Complex<T>> filter, std::span<const Complex<T>> in, T gain,
                   std::span<Complex<T>> out) {
    if (filter.size() != in.size() || out.size() != in.size())
        throw InvalidInput("pointwise product: size mismatch");
    for (std::size_t i = 0; i < in.size(); ++i) out[i] = gain * mul_conj<T>(filter[i], in[i]);
}

template <class T>
void multiply_conj_accumulate(std::span<const Complex<T>> filter, std::span<const Complex<T>> in,
                              T gain, std::span<Complex<T>> acc) {
    if (filter.size() != in.size() || acc.size() != in.size())
        throw InvalidInput("pointwise product: size mismatch");
    for (std::size_t i = 0; i < in.size(); ++i) acc[i] += gain * mul_conj<T>(filter[i], in[i]);
}

template <class T>
void multiply_periodize(std::span<const Complex<T>> filter, std::span<const Complex<T>> in, std::size_t side,
                        T gain, int k, std::span<Complex<T>> out) {
    check_span<T>(in, side, "multiply_periodize");
    if (filter.size() != in.size()) throw InvalidInput("pointwise product: size mismatch");
    if (k < 0 || (side >> k) == 0 || ((side >> k) << k) != side)
        throw InvalidInput("periodize: 2^k does not divide the grid side");
    const std::size_t r = side >> k;
    check_span<T>(out, r, "multiply_periodize");
    const std::size_t blocks = std::size_t{1} << k;
    const T scale = gain / static_cast<T>(blocks * blocks);
    for (std::size_t y = 0; y < r; ++y) {
        Complex<T>* dst = out.data() + y * r;
        for (std::size_t x = 0; x < r; ++x) dst[x] = 0;
        for (std::size_t by = 0; by < blocks; ++by) {
            const std::size_t row = (by * r + y) * side;
            for (std::size_t bx = 0; bx < blocks; ++bx) {
                const Complex<T>* f = filter.data() + row + bx * r;
                const Complex<T>* v = in.data() + row + bx * r;
                for (std::size_t x = 0; x < r; ++x) dst[x] += mul<T>(f[x], v[x]);
            }
        }
        for (std::size_t x = 0; x < r; ++x) dst[x] *= scale;
    }
}

template <class T>
void tile_multiply_conj_accumulate(std::span<const Complex<T>> filter, std::span<const Complex<T>> in,
                                   std::size_t reduced_side, int k, T gain, std::span<Complex<T>> acc) {
    check_span<T>(in, reduced_side, "tile_multiply_conj_accumulate");
    if (k < 0) throw InvalidInput("periodize_vjp: negative k");
    const std::size_t blocks = std::size_t{1} << k;
    const std::size_t side = reduced_side * blocks;
    check_span<T>(acc, side, "tile_multiply_conj_accumulate");
    if (filter.size() != acc.size()) throw InvalidInput("pointwise product: size mismatch");
    const T scale = gain / static_cast<T>(blocks * blocks);
    for (std::size_t y = 0; y < side; ++y) {
        const Complex<T>* src = in.data() + (y % reduced_side) * reduced_side;
        for (std::size_t bx = 0; bx < blocks; ++bx) {
            const std::size_t o = y * side + bx * reduced_side;
            const Complex<T>* f = filter.data() + o;
            Complex<T>* a = acc.data() + o;
            for (std::size_t x = 0; x < reduced_side; ++x) a[x] += scale * mul_conj<T>(f[x], src[x]);
        }
    }
}

template <class T>
void modulus(std::span<Complex<T>> data) {
    for (auto& z : data) z = Complex<T>(std::sqrt(z.real() * z.real() + z.imag() * z.imag()), T(0));
}

}  // namespace kernel

template <class T>
SpectrumGrid<T> dft2(const ComplexGrid<T>& g) {
    SpectrumGrid<T> out = g;
    kernel::fft2<T>(out.span(), out.side(), kernel::Direction::Forward);
    return out;
}

template <class T>
ComplexGrid<T> idft2(const SpectrumGrid<T>& s) {
    ComplexGrid<T> out = s;
    kernel::fft2<T>(out.span(), out.side(), kernel::Direction::Inverse);
    return out;
}

template <class T>
SpectrumGrid<T> periodize(const SpectrumGrid<T>& s, int k) {
    if (k < 0 || k > 30 || (s.side() >> k) == 0)
        throw InvalidInput("periodize: 2^k does not divide the grid side");
    SpectrumGrid<T> out(s.side() >> k);
    kernel::periodize<T>(s.span(), s.side(), k, out.span());
    return out;
}

template <class T>
SpectrumGrid<T> periodize_vjp(const SpectrumGrid<T>& g, int k) {
    if (k < 0 || k > 30) throw InvalidInput("periodize_vjp: k out of range");
    SpectrumGrid<T> out(g.side() << k);
    kernel::periodize_adjoint<T>(g.span(), g.side(), k, out.span());
    return out;
}

template <class T>
SpectrumGrid<T> pointwise_mul(const SpectrumGrid<T>& a, const SpectrumGrid<T>& b) {
    if (a.side() != b.side()) throw InvalidInput("pointwise_mul: size mismatch");
    SpectrumGrid<T> out(a.side());
    kernel::multiply<T>(a.span(), b.span(), T(1), out.span());
    return out;
}

template <class T>
ComplexGrid<T> modulus(const ComplexGrid<T>& g) {
    ComplexGrid<T> out = g;
    kernel::modulus<T>(out.span());
    return out;
}

#define SCATTER_INSTANTIATE_FOURIER(T)                                                              \
    template class ComplexGrid<T>;                                                                  \
    template double l2_norm<T>(const ComplexGrid<T>&);                                              \
    template SpectrumGrid<T> dft2<T>(const ComplexGrid<T>&);                                        \
    template ComplexGrid<T> idft2<T>(const SpectrumGrid<T>&);                                       \
    template SpectrumGrid<T> periodize<T>(const SpectrumGrid<T>&, int);                             \
    template SpectrumGrid<T> periodize_vjp<T>(const SpectrumGrid<T>&, int);                         \
    template SpectrumGrid<T> pointwise_mul<T>(const SpectrumGrid<T>&, const SpectrumGrid<T>&);      \
    template ComplexGrid<T> modulus<T>(const ComplexGrid<T>&);                                      \
    template void kernel::fft2<T>(std::span<Complex<T>>, std::size_t, kernel::Direction);           \
    template void kernel::fft2_adjoint_of_forward<T>(std::span<Complex<T>>, std::size_t);           \
    template void kernel::periodize<T>(std::span<const Complex<T>>, std::size_t, int,               \
                                       std::span<Complex<T>>);                                      \
    template void kernel::periodize_adjoint<T>(std::span<const Complex<T>>, std::size_t, int,       \
                                               std::span<Complex<T>>);                              \
    template void kernel::multiply_periodize<T>(std::span<const Complex<T>>, std::span<const Complex<T>>,  \
                                                std::size_t, T, int, std::span<Complex<T>>);         \
    template void kernel::tile_multiply_conj_accumulate<T>(std::span<const Complex<T>>,              \
                                                           std::span<const Complex<T>>, std::size_t, \
                                                           int, T, std::span<Complex<T>>);          \
    template void kernel::multiply<T>(std::span<const Complex<T>>, std::span<const Complex<T>>, T,  \
                                      std::span<Complex<T>>);                                       \
    template void kernel::multiply_conj<T>(std::span<const Complex<T>>, std::span<const Complex<T>>, T, \
                                           std::span<Complex<T>>);                                  \
    template void kernel::multiply_conj_accumulate<T>(std::span<const Complex<T>>,                  \
                                                      std::span<const Complex<T>>, T,               \
                                                      std::span<Complex<T>>);                       \
    template void kernel::modulus<T>(std::span<Complex<T>>);

SCATTER_INSTANTIATE_FOURIER(float)
SCATTER_INSTANTIATE_FOURIER(double)

#undef SCATTER_INSTANTIATE_FOURIER

}  // namespace scatter
