#include "scatter/scattering.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <mutex>
#include <numbers>
#include <string>
#include <thread>

#include "engine.hpp"
#include "scatter/error.hpp"

namespace scatter {

ScatteringConfig ScatteringConfig::make(int J, int L, BoundaryMode boundary, Precision precision) {
    ScatteringConfig cfg;
    cfg.J = J;
    cfg.L = L;
    cfg.boundary = boundary;
    cfg.precision = precision;
    cfg.params = MorletParams::defaults(L >= 1 ? L : 1);
    return cfg;
}

void ScatteringConfig::validate() const {
    require(J >= 1, "ScatteringConfig: J must be >= 1");
    require(J < 16, "ScatteringConfig: J too large");
    require(L >= 1, "ScatteringConfig: L must be >= 1");
    params.validate();
}

std::size_t path_count(int J, int L) {
    const auto j = static_cast<std::size_t>(J);
    const auto l = static_cast<std::size_t>(L);
    return 1 + j * l + j * (j - 1) / 2 * l * l;
}

std::size_t order1_index(int j1, int l1, int L) { return 1 + static_cast<std::size_t>(j1 * L + l1); }

std::size_t order2_index(int j1, int l1, int j2, int l2, int J, int L) {
    // Order-2 paths with first scale below j1 come first.
    std::size_t before = 0;
    for (int a = 0; a < j1; ++a) before += static_cast<std::size_t>(L * (J - 1 - a) * L);
    const auto per_l1 = static_cast<std::size_t>((J - 1 - j1) * L);
    return 1 + static_cast<std::size_t>(J * L) + before + static_cast<std::size_t>(l1) * per_l1 +
           static_cast<std::size_t>((j2 - j1 - 1) * L + l2);
}

std::vector<PathIndex> path_table(int J, int L) {
    require(J >= 1 && L >= 1, "path_table: J and L must be >= 1");
    std::vector<PathIndex> paths;
    paths.reserve(path_count(J, L));
    paths.push_back(PathIndex{});
    for (int j1 = 0; j1 < J; ++j1)
        for (int l1 = 0; l1 < L; ++l1) paths.push_back({1, j1, l1, PathIndex::kUnused, PathIndex::kUnused});
    for (int j1 = 0; j1 < J; ++j1)
        for (int l1 = 0; l1 < L; ++l1)
            for (int j2 = j1 + 1; j2 < J; ++j2)
                for (int l2 = 0; l2 < L; ++l2) paths.push_back({2, j1, l1, j2, l2});
    return paths;
}

bool ScatteringCoeffs::same_layout(const ScatteringCoeffs& o) const {
    return J == o.J && L == o.L && input_channels == o.input_channels && height == o.height &&
           width == o.width && paths == o.paths && data.size() == o.data.size();
}

double l2_norm(const ScatteringCoeffs& s) {
    double acc = 0.0;
    for (double v : s.data) acc += v * v;
    return std::sqrt(acc);
}

double l2_distance(const ScatteringCoeffs& a, const ScatteringCoeffs& b) {
    require(a.same_layout(b), "l2_distance: coefficient layouts differ");
    double acc = 0.0;
    for (std::size_t i = 0; i < a.data.size(); ++i) {
        const double d = a.data[i] - b.data[i];
        acc += d * d;
    }
    return std::sqrt(acc);
}

Geometry geometry(std::size_t height, std::size_t width, const ScatteringConfig& cfg) {
    cfg.validate();
    require(height > 0 && width > 0, "empty image");
    Geometry g;
    if (cfg.boundary == BoundaryMode::Periodic) {
        require(height == width && is_power_of_two(height),
                "periodic boundary requires a square power-of-two image, got " + std::to_string(height) +
                    "x" + std::to_string(width));
        require((std::size_t{1} << cfg.J) <= height, "image smaller than 2^J");
        g.M = height;
        g.rows = {height, 0, 0};
        g.cols = {width, 0, 0};
    } else {
        const PadPlan longest = pad_plan(std::max(height, width), cfg.J);
        g.M = longest.padded_size;
        g.rows = split_plan(height, g.M);
        g.cols = split_plan(width, g.M);
    }
    const std::size_t cell = std::size_t{1} << cfg.J;
    g.out_h = (height + cell - 1) / cell;
    g.out_w = (width + cell - 1) / cell;
    g.crop_y0 = g.rows.margin_lo / cell;
    g.crop_x0 = g.cols.margin_lo / cell;
    return g;
}

ScatteringCoeffs unpad_coeffs(const ScatteringCoeffs& padded, const Geometry& g, int J) {
    const std::size_t full = g.M >> J;
    require(padded.height == full && padded.width == full,
            "unpad_coeffs: coefficient maps are " + std::to_string(padded.height) + "x" +
                std::to_string(padded.width) + ", expected " + std::to_string(full) + "x" + std::to_string(full));
    require(g.crop_y0 + g.out_h <= full && g.crop_x0 + g.out_w <= full, "unpad_coeffs: crop exceeds grid");
    ScatteringCoeffs out = padded;
    out.height = g.out_h;
    out.width = g.out_w;
    out.data.assign(out.input_channels * out.paths.size() * out.map_size(), 0.0);
    for (std::size_t c = 0; c < out.input_channels; ++c)
        for (std::size_t p = 0; p < out.paths.size(); ++p)
            for (std::size_t y = 0; y < g.out_h; ++y)
                for (std::size_t x = 0; x < g.out_w; ++x)
                    out.at(c, p, y, x) = padded.at(c, p, g.crop_y0 + y, g.crop_x0 + x);
    return out;
}

void SlotMeter::add(std::size_t slots) {
    live_ += slots;
    peak_ = std::max(peak_, live_);
}

void SlotMeter::release(std::size_t slots) { live_ -= std::min(live_, slots); }

namespace {

/// Memory-bounded cascade for one channel: a first-order branch is carried to
/// the end (its order-1 output and all its order-2 children) before the next
/// branch starts, reusing a fixed set of buffers.
template <class T>
class ForwardEngine {
public:
    ForwardEngine(const FilterBank& fb, const ScatteringConfig& cfg, SlotMeter& meter)
        : fb_(fb), cfg_(cfg), M_(fb.M()),
          plan_(detail::workspace_plan(M_, cfg.J, cfg.mode)),
          spectrum_(plan_.full, meter), first_(plan_.full, meter),
          second_(plan_.second, meter), out_(plan_.out, meter) {}

    /// x: M*M padded plane. maps: path_count * (M/2^J)^2 output values.
    void run(std::span<const double> x, std::span<double> maps) {
        using detail::density_gain;
        using detail::resolution;
        using kernel::Direction;
        const int J = cfg_.J;
        const int L = cfg_.L;
        auto A = spectrum_.first(M_ * M_);
        detail::load_real<T>(x, A);
        kernel::fft2<T>(A, M_, Direction::Forward);

        emit(fb_.phi<T>(0).span(), A, T(1), M_, J, maps, 0);

        for (int j1 = 0; j1 < J; ++j1) {
            const int r1 = resolution(j1, cfg_.mode);
            const std::size_t M1 = M_ >> r1;
            for (int l1 = 0; l1 < L; ++l1) {
                auto U1 = first_.first(M1 * M1);
                kernel::multiply_periodize<T>(fb_.psi<T>(j1, l1, 0).span(), A, M_, T(1), r1, U1);
                kernel::fft2<T>(U1, M1, Direction::Inverse);
                kernel::modulus<T>(U1);
                kernel::fft2<T>(U1, M1, Direction::Forward);
                emit(fb_.phi<T>(r1).span(), U1, density_gain<T>(r1), M1, J - r1, maps, order1_index(j1, l1, L));

                for (int j2 = j1 + 1; j2 < J; ++j2) {
                    const int r2 = resolution(j2, cfg_.mode);
                    const std::size_t M2 = M_ >> r2;
                    for (int l2 = 0; l2 < L; ++l2) {
                        auto U2 = second_.first(M2 * M2);
                        kernel::multiply_periodize<T>(fb_.psi<T>(j2, l2, r1).span(), U1, M1, density_gain<T>(r1),
                                                      r2 - r1, U2);
                        kernel::fft2<T>(U2, M2, Direction::Inverse);
                        kernel::modulus<T>(U2);
                        kernel::fft2<T>(U2, M2, Direction::Forward);
                        emit(fb_.phi<T>(r2).span(), U2, density_gain<T>(r2), M2, J - r2, maps,
                             order2_index(j1, l1, j2, l2, J, L));
                    }
                }
            }
        }
    }

private:
    // Low-pass, periodize down to M/2^J, invert, store the real part.
    void emit(std::span<const Complex<T>> phi, std::span<const Complex<T>> signal, T gain, std::size_t side, int k,
              std::span<double> maps, std::size_t path) {
        const std::size_t MJ = side >> k;
        auto E = out_.first(MJ * MJ);
        kernel::multiply_periodize<T>(phi, signal, side, gain, k, E);
        kernel::fft2<T>(E, MJ, kernel::Direction::Inverse);
        double* dst = maps.data() + path * MJ * MJ;
        for (std::size_t i = 0; i < MJ * MJ; ++i) dst[i] = static_cast<double>(E[i].real());
    }

    const FilterBank& fb_;
    const ScatteringConfig& cfg_;
    std::size_t M_;
    detail::WorkspacePlan plan_;
    detail::Buffer<T> spectrum_;  // transform of the input channel
    detail::Buffer<T> first_;     // first-order wavelet modulus
    detail::Buffer<T> second_;    // second-order wavelet modulus
    detail::Buffer<T> out_;       // averaged output
};

ScatteringCoeffs empty_coeffs(const ImageGrid& img, const ScatteringConfig& cfg, std::size_t side) {
    ScatteringCoeffs s;
    s.J = cfg.J;
    s.L = cfg.L;
    s.input_height = img.height();
    s.input_width = img.width();
    s.boundary = cfg.boundary;
    s.input_channels = img.channels();
    s.height = side;
    s.width = side;
    s.paths = path_table(cfg.J, cfg.L);
    s.data.assign(s.input_channels * s.paths.size() * side * side, 0.0);
    return s;
}

template <class T>
ScatteringCoeffs forward_impl(const ImageGrid& padded, const ImageGrid& original, const FilterBank& fb,
                              const ScatteringConfig& cfg, SlotMeter& meter) {
    const std::size_t M = padded.height();
    ScatteringCoeffs s = empty_coeffs(original, cfg, M >> cfg.J);
    ForwardEngine<T> engine(fb, cfg, meter);
    const std::size_t per_channel = s.paths.size() * s.map_size();
    for (std::size_t c = 0; c < padded.channels(); ++c)
        engine.run(padded.plane(c), std::span<double>(s.data).subspan(c * per_channel, per_channel));
    return s;
}

}  // namespace

ScatteringCoeffs forward(const ImageGrid& img, const FilterBank& fb, const ScatteringConfig& cfg,
                         SlotMeter& meter) {
    const Geometry g = geometry(img.height(), img.width(), cfg);
    detail::check_filterbank<float>(fb, cfg, g.M);
    const ImageGrid padded =
        cfg.boundary == BoundaryMode::Reflect ? pad(img, g.rows, g.cols, BoundaryMode::Reflect) : img;
    ScatteringCoeffs full = cfg.precision == Precision::Single
                                ? forward_impl<float>(padded, img, fb, cfg, meter)
                                : forward_impl<double>(padded, img, fb, cfg, meter);
    if (cfg.boundary == BoundaryMode::Periodic) return full;
    return unpad_coeffs(full, g, cfg.J);
}

ScatteringCoeffs forward(const ImageGrid& img, const FilterBank& fb, const ScatteringConfig& cfg) {
    SlotMeter meter;
    return forward(img, fb, cfg, meter);
}

namespace {

using Cd = std::complex<double>;

// Naive inverse DFT (1/M^2 scaling), separable: rows then columns.
std::vector<Cd> naive_idft2(const SpectrumGrid<double>& s) {
    const std::size_t M = s.side();
    std::vector<Cd> twiddle(M);
    for (std::size_t k = 0; k < M; ++k)
        twiddle[k] = std::polar(1.0, 2.0 * std::numbers::pi * static_cast<double>(k) / static_cast<double>(M));
    std::vector<Cd> tmp(M * M), out(M * M);
    for (std::size_t y = 0; y < M; ++y)
        for (std::size_t x = 0; x < M; ++x) {
            Cd acc = 0.0;
            for (std::size_t k = 0; k < M; ++k) acc += s(y, k) * twiddle[(k * x) % M];
            tmp[y * M + x] = acc;
        }
    const double scale = 1.0 / static_cast<double>(M * M);
    for (std::size_t x = 0; x < M; ++x)
        for (std::size_t y = 0; y < M; ++y) {
            Cd acc = 0.0;
            for (std::size_t k = 0; k < M; ++k) acc += tmp[k * M + x] * twiddle[(k * y) % M];
            out[y * M + x] = acc * scale;
        }
    return out;
}

// (u * h)[p] = sum_q u[q] h[(p - q) mod M], at every p.
std::vector<Cd> circular_convolve(const std::vector<Cd>& u, const std::vector<Cd>& h, std::size_t M) {
    std::vector<Cd> out(M * M);
    for (std::size_t py = 0; py < M; ++py)
        for (std::size_t px = 0; px < M; ++px) {
            Cd acc = 0.0;
            for (std::size_t qy = 0; qy < M; ++qy) {
                const Cd* hrow = h.data() + ((py + M - qy) % M) * M;
                const Cd* urow = u.data() + qy * M;
                for (std::size_t qx = 0; qx < M; ++qx) acc += urow[qx] * hrow[(px + M - qx) % M];
            }
            out[py * M + px] = acc;
        }
    return out;
}

// Low-pass average evaluated only on the 2^J-subsampled lattice.
void average_subsampled(const std::vector<Cd>& u, const std::vector<Cd>& phi, std::size_t M, int J,
                        std::span<double> dst) {
    const std::size_t step = std::size_t{1} << J;
    const std::size_t MJ = M >> J;
    for (std::size_t py = 0; py < MJ; ++py)
        for (std::size_t px = 0; px < MJ; ++px) {
            Cd acc = 0.0;
            for (std::size_t qy = 0; qy < M; ++qy)
                for (std::size_t qx = 0; qx < M; ++qx)
                    acc += u[qy * M + qx] * phi[((py * step + M - qy) % M) * M + (px * step + M - qx) % M];
            dst[py * MJ + px] = acc.real();
        }
}

}  // namespace

ScatteringCoeffs forward_oracle(const ImageGrid& img, const FilterBank& fb, const ScatteringConfig& cfg) {
    require(cfg.boundary == BoundaryMode::Periodic, "forward_oracle: periodic boundary only");
    const Geometry g = geometry(img.height(), img.width(), cfg);
    require(g.M <= 128, "forward_oracle: grids larger than 128^2 are not supported");
    detail::check_filterbank<double>(fb, cfg, g.M);
    const std::size_t M = g.M;
    const int J = cfg.J;
    const int L = cfg.L;

    const std::vector<Cd> phi = naive_idft2(fb.phi<double>(0));
    std::vector<std::vector<Cd>> psi;
    for (int j = 0; j < J; ++j)
        for (int l = 0; l < L; ++l) psi.push_back(naive_idft2(fb.psi<double>(j, l, 0)));
    auto wavelet = [&](int j, int l) -> const std::vector<Cd>& { return psi[static_cast<std::size_t>(j * L + l)]; };

    ScatteringCoeffs s = empty_coeffs(img, cfg, M >> J);
    for (std::size_t c = 0; c < img.channels(); ++c) {
        std::vector<Cd> x(M * M);
        for (std::size_t i = 0; i < M * M; ++i) x[i] = img.plane(c)[i];
        average_subsampled(x, phi, M, J, s.map(c, 0));
        for (int j1 = 0; j1 < J; ++j1)
            for (int l1 = 0; l1 < L; ++l1) {
                std::vector<Cd> u1 = circular_convolve(x, wavelet(j1, l1), M);
                for (auto& z : u1) z = std::abs(z);
                average_subsampled(u1, phi, M, J, s.map(c, order1_index(j1, l1, L)));
                for (int j2 = j1 + 1; j2 < J; ++j2)
                    for (int l2 = 0; l2 < L; ++l2) {
                        std::vector<Cd> u2 = circular_convolve(u1, wavelet(j2, l2), M);
                        for (auto& z : u2) z = std::abs(z);
                        average_subsampled(u2, phi, M, J, s.map(c, order2_index(j1, l1, j2, l2, J, L)));
                    }
            }
    }
    return s;
}

std::vector<ScatteringCoeffs> forward_batch(const std::vector<ImageGrid>& imgs, const FilterBank& fb,
                                            const ScatteringConfig& cfg, std::size_t workers) {
    std::vector<ScatteringCoeffs> out(imgs.size());
    if (imgs.empty()) return out;
    for (const auto& img : imgs)
        require(img.same_shape(imgs.front()), "forward_batch: images must share one shape");
    workers = std::clamp<std::size_t>(workers, 1, imgs.size());

    std::atomic<std::size_t> next{0};
    std::exception_ptr failure;
    std::mutex failure_mutex;
    auto worker = [&] {
        try {
            for (std::size_t i = next++; i < imgs.size(); i = next++) out[i] = forward(imgs[i], fb, cfg);
        } catch (...) {
            std::lock_guard lock(failure_mutex);
            if (!failure) failure = std::current_exception();
            next = imgs.size();
        }
    };
    if (workers == 1) {
        worker();
    } else {
        std::vector<std::jthread> pool;
        for (std::size_t w = 0; w < workers; ++w) pool.emplace_back(worker);
    }
    if (failure) std::rethrow_exception(failure);
    return out;
}

double tree_storage(int J, int L, std::size_t N) {
    const double n2 = static_cast<double>(N) * static_cast<double>(N);
    const double lowpass = n2 / std::ldexp(1.0, 2 * J);
    // Wavelet-modulus signals from scales [from, J) plus one low-pass output.
    auto layer = [&](int from) {
        double acc = 0.0;
        for (int j = from; j < J; ++j) acc += static_cast<double>(L) * n2 / std::ldexp(1.0, 2 * j);
        return acc + lowpass;
    };
    double second = 0.0;
    for (int j1 = 0; j1 < J; ++j1) second += static_cast<double>(L) * layer(j1 + 1);
    const double averaged = 0.5 * J * (J - 1) * static_cast<double>(L) * L * lowpass;
    return layer(0) + second + averaged;
}

MemoryReport memory_report(const ScatteringConfig& cfg, std::size_t N) {
    cfg.validate();
    require_power_of_two_side(N, "memory_report");
    MemoryReport r;
    r.tree_coeffs = tree_storage(cfg.J, cfg.L, N);
    ScatteringConfig run_cfg = cfg;
    run_cfg.boundary = BoundaryMode::Periodic;
    const FilterBank fb = build_filterbank(N, cfg.J, cfg.L, cfg.params);
    SlotMeter meter;
    const ImageGrid probe(N, N, 1, ColorSpace::GRAY, cfg.precision);
    (void)forward(probe, fb, run_cfg, meter);
    r.infix_peak = meter.peak();
    return r;
}

PathStats compute_path_stats(std::span<const ScatteringCoeffs> samples) {
    require(!samples.empty(), "compute_path_stats: no samples");
    const auto& first = samples.front();
    const std::size_t channels = first.channel_count();
    const std::size_t cells = first.map_size();
    PathStats st;
    st.mean.assign(channels, 0.0);
    st.stddev.assign(channels, 0.0);
    for (const auto& s : samples) {
        require(s.same_layout(first), "compute_path_stats: heterogeneous coefficient layouts");
        for (std::size_t k = 0; k < channels; ++k)
            for (std::size_t i = 0; i < cells; ++i) st.mean[k] += s.data[k * cells + i];
    }
    const double count = static_cast<double>(samples.size() * cells);
    for (auto& m : st.mean) m /= count;
    for (const auto& s : samples)
        for (std::size_t k = 0; k < channels; ++k)
            for (std::size_t i = 0; i < cells; ++i) {
                const double d = s.data[k * cells + i] - st.mean[k];
                st.stddev[k] += d * d;
            }
    for (auto& v : st.stddev) v = std::sqrt(v / count) + 1e-8;
    return st;
}

void standardize(ScatteringCoeffs& s, const PathStats& stats) {
    const std::size_t channels = s.channel_count();
    require(stats.mean.size() == channels && stats.stddev.size() == channels,
            "standardize: statistics do not match the coefficient layout");
    const std::size_t cells = s.map_size();
    for (std::size_t k = 0; k < channels; ++k)
        for (std::size_t i = 0; i < cells; ++i)
            s.data[k * cells + i] = (s.data[k * cells + i] - stats.mean[k]) / stats.stddev[k];
}

}  // namespace scatter
