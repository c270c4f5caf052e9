#include "scatter/classify.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>
#include <random>

#include "scatter/error.hpp"

namespace scatter {

bool LinearModel::accepts(const ScatteringCoeffs& s) const {
    return s.J == J && s.L == L && s.input_channels == input_channels && s.height == height && s.width == width &&
           s.paths == paths && s.data.size() == feature_count();
}

bool LinearModel::operator==(const LinearModel& o) const {
    return J == o.J && L == o.L && input_height == o.input_height && input_width == o.input_width &&
           boundary == o.boundary && input_channels == o.input_channels && height == o.height &&
           width == o.width && paths == o.paths && stats.mean == o.stats.mean && stats.stddev == o.stats.stddev &&
           classes == o.classes && weights == o.weights && bias == o.bias;
}

void TrainConfig::validate() const {
    require(epochs >= 1, "TrainConfig: epochs must be >= 1");
    require(batch >= 1, "TrainConfig: batch must be >= 1");
    require(step > 0.0, "TrainConfig: step must be positive");
    require(momentum >= 0.0 && momentum < 1.0, "TrainConfig: momentum must lie in [0,1)");
    require(weight_decay >= 0.0, "TrainConfig: weight_decay must be >= 0");
}

namespace {

// Standardized copy of one sample's coefficients.
void standardized(const LinearModel& m, const ScatteringCoeffs& s, std::span<double> out) {
    const std::size_t cells = m.height * m.width;
    for (std::size_t f = 0; f < out.size(); ++f) {
        const std::size_t k = f / cells;
        out[f] = (s.data[f] - m.stats.mean[k]) / m.stats.stddev[k];
    }
}

void scores_of(const LinearModel& m, std::span<const double> z, std::span<double> scores) {
    for (std::size_t k = 0; k < m.classes; ++k) {
        const auto w = m.row(k);
        scores[k] = std::inner_product(w.begin(), w.end(), z.begin(), m.bias[k]);
    }
}

int argmax(std::span<const double> v) {
    std::size_t best = 0;
    for (std::size_t k = 1; k < v.size(); ++k)
        if (v[k] > v[best]) best = k;
    return static_cast<int>(best);
}

}  // namespace

LinearModel train_linear(std::span<const ScatteringCoeffs> features, std::span<const int> labels,
                         std::size_t classes, const TrainConfig& cfg, std::uint64_t seed) {
    cfg.validate();
    require(!features.empty(), "train_linear: empty dataset");
    require(features.size() == labels.size(), "train_linear: features and labels differ in length");
    require(classes >= 2, "train_linear: need at least two classes");
    for (int y : labels)
        require(y >= 0 && static_cast<std::size_t>(y) < classes, "train_linear: label out of range");

    const ScatteringCoeffs& first = features.front();
    LinearModel m;
    m.J = first.J;
    m.L = first.L;
    m.input_height = first.input_height;
    m.input_width = first.input_width;
    m.boundary = first.boundary;
    m.input_channels = first.input_channels;
    m.height = first.height;
    m.width = first.width;
    m.paths = first.paths;
    m.classes = classes;
    m.stats = compute_path_stats(features);
    const std::size_t d = m.feature_count();
    m.weights.assign(classes * d, 0.0);
    m.bias.assign(classes, 0.0);

    const std::size_t n = features.size();
    std::vector<double> X(n * d);
    double mean_sq = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        require(m.accepts(features[i]), "train_linear: heterogeneous feature shapes");
        auto row = std::span<double>(X).subspan(i * d, d);
        standardized(m, features[i], row);
        mean_sq += std::inner_product(row.begin(), row.end(), row.begin(), 0.0);
    }
    mean_sq /= static_cast<double>(n);
    // The step is relative to the mean squared feature norm, so one setting
    // works for any feature dimension.
    const double lr = cfg.step / std::max(mean_sq, 1.0);

    std::vector<double> vel_w(classes * d, 0.0), vel_b(classes, 0.0);
    std::vector<double> grad_w(classes * d), grad_b(classes), p(classes);
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::mt19937_64 rng(seed);

    for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
        std::shuffle(order.begin(), order.end(), rng);
        for (std::size_t b0 = 0; b0 < n; b0 += cfg.batch) {
            const std::size_t b1 = std::min(n, b0 + cfg.batch);
            std::fill(grad_w.begin(), grad_w.end(), 0.0);
            std::fill(grad_b.begin(), grad_b.end(), 0.0);
            for (std::size_t t = b0; t < b1; ++t) {
                const std::size_t i = order[t];
                const auto z = std::span<const double>(X).subspan(i * d, d);
                scores_of(m, z, p);
                const double mx = *std::max_element(p.begin(), p.end());
                double sum = 0.0;
                for (double& v : p) sum += (v = std::exp(v - mx));
                for (std::size_t k = 0; k < classes; ++k) {
                    const double r = p[k] / sum - (static_cast<int>(k) == labels[i] ? 1.0 : 0.0);
                    grad_b[k] += r;
                    double* g = grad_w.data() + k * d;
                    for (std::size_t f = 0; f < d; ++f) g[f] += r * z[f];
                }
            }
            const double inv = 1.0 / static_cast<double>(b1 - b0);
            for (std::size_t q = 0; q < grad_w.size(); ++q) {
                vel_w[q] = cfg.momentum * vel_w[q] - lr * (grad_w[q] * inv + cfg.weight_decay * m.weights[q]);
                m.weights[q] += vel_w[q];
            }
            for (std::size_t k = 0; k < classes; ++k) {
                vel_b[k] = cfg.momentum * vel_b[k] - lr * grad_b[k] * inv;
                m.bias[k] += vel_b[k];
            }
        }
    }
    return m;
}

Prediction predict(const LinearModel& m, const ScatteringCoeffs& s) {
    require(m.accepts(s), "predict: coefficients do not match the model layout");
    std::vector<double> z(m.feature_count());
    standardized(m, s, z);
    Prediction out;
    out.scores.resize(m.classes);
    scores_of(m, z, out.scores);
    out.label = argmax(out.scores);
    return out;
}

double accuracy(const LinearModel& m, std::span<const ScatteringCoeffs> features, std::span<const int> labels) {
    require(features.size() == labels.size() && !features.empty(), "accuracy: bad dataset");
    std::size_t hits = 0;
    for (std::size_t i = 0; i < features.size(); ++i) hits += predict(m, features[i]).label == labels[i];
    return static_cast<double>(hits) / static_cast<double>(features.size());
}

ScatteringCoeffs pixel_features(const ImageGrid& img) {
    ScatteringCoeffs s;
    s.input_height = img.height();
    s.input_width = img.width();
    s.input_channels = img.channels();
    s.height = img.height();
    s.width = img.width();
    s.paths = {PathIndex{}};
    s.data = img.data();
    return s;
}

AttackResult fgsm_attack(const LinearModel& m, const FilterBank& fb, const ScatteringConfig& cfg,
                         const ImageGrid& x, int target_class, std::span<const double> eps_grid, bool untargeted) {
    require(cfg.J == m.J && cfg.L == m.L && cfg.boundary == m.boundary, "fgsm_attack: config differs from the model");
    require(x.height() == m.input_height && x.width() == m.input_width && x.channels() == m.input_channels,
            "fgsm_attack: image shape differs from the model input");
    require(untargeted || (target_class >= 0 && static_cast<std::size_t>(target_class) < m.classes),
            "fgsm_attack: target class out of range");
    for (std::size_t i = 1; i < eps_grid.size(); ++i)
        require(eps_grid[i] > eps_grid[i - 1], "fgsm_attack: eps grid must be strictly ascending");

    auto [coeffs, tape] = forward_with_tape(x, fb, cfg);
    AttackResult res;
    res.source_label = predict(m, coeffs).label;
    if (!untargeted && res.source_label == target_class)
        throw InvalidInput("fgsm_attack: image is already classified as the target class");

    // Cotangent of (score_target - score_source), or -score_source.
    Cotangent ct = coeffs;
    const std::size_t cells = m.height * m.width;
    const auto ws = m.row(static_cast<std::size_t>(res.source_label));
    for (std::size_t f = 0; f < ct.data.size(); ++f) {
        const double wt = untargeted ? 0.0 : m.row(static_cast<std::size_t>(target_class))[f];
        ct.data[f] = (wt - ws[f]) / m.stats.stddev[f / cells];
    }
    const ImageGrid grad = backward(tape, ct);

    for (double eps : eps_grid) {
        ImageGrid xa = x;
        for (std::size_t i = 0; i < xa.size(); ++i) {
            const double g = grad.data()[i];
            const double s = g > 0.0 ? 1.0 : g < 0.0 ? -1.0 : 0.0;
            xa.data()[i] = std::clamp(x.data()[i] + eps * s, 0.0, 1.0);
        }
        const int label = predict(m, forward(xa, fb, cfg)).label;
        if (untargeted ? label != res.source_label : label == target_class) {
            res.eps = eps;
            res.adversarial = std::move(xa);
            return res;
        }
    }
    return res;
}

namespace {

using Cd = std::complex<double>;

// Orthonormal DFT of length L along a stride.
void dft_line(const Cd* in, std::size_t stride, int L, Cd* out, std::size_t out_stride, bool inverse) {
    const double sign = inverse ? 1.0 : -1.0;
    const double norm = 1.0 / std::sqrt(static_cast<double>(L));
    for (int w = 0; w < L; ++w) {
        Cd acc = 0.0;
        for (int l = 0; l < L; ++l)
            acc += in[static_cast<std::size_t>(l) * stride] *
                   std::polar(1.0, sign * 2.0 * std::numbers::pi * static_cast<double>((w * l) % L) / L);
        out[static_cast<std::size_t>(w) * out_stride] = acc * norm;
    }
}

std::vector<Cd> dft_fiber(std::span<const Cd> f, int L, bool two_d, bool inverse) {
    const auto Ls = static_cast<std::size_t>(L);
    std::vector<Cd> out(f.size());
    if (!two_d) {
        dft_line(f.data(), 1, L, out.data(), 1, inverse);
        return out;
    }
    std::vector<Cd> tmp(f.size());
    for (std::size_t r = 0; r < Ls; ++r) dft_line(f.data() + r * Ls, 1, L, tmp.data() + r * Ls, 1, inverse);
    for (std::size_t c = 0; c < Ls; ++c) dft_line(tmp.data() + c, Ls, L, out.data() + c, Ls, inverse);
    return out;
}

std::vector<double> fiber_energy(std::span<const Cd> fibers, int L, bool two_d) {
    require(L >= 1, "angular spectrum: L must be >= 1");
    const std::size_t len = two_d ? static_cast<std::size_t>(L * L) : static_cast<std::size_t>(L);
    require(fibers.size() % len == 0, "angular spectrum: data is not a whole number of fibers");
    std::vector<double> omega(len, 0.0);
    for (std::size_t o = 0; o < fibers.size(); o += len) {
        const auto F = dft_fiber(fibers.subspan(o, len), L, two_d, false);
        for (std::size_t w = 0; w < len; ++w) omega[w] += std::norm(F[w]);
    }
    return omega;
}

// Weight indices of every order-1 (L values) and order-2 (L*L values,
// theta1 major) fiber of every class row.
struct FiberIndex {
    std::vector<std::size_t> order1;
    std::vector<std::size_t> order2;
};

FiberIndex fiber_index(const LinearModel& m) {
    require(m.J >= 1 && m.L >= 1 && m.paths == path_table(m.J, m.L),
            "angular analysis: model path table is not a scattering path table");
    const std::size_t cells = m.height * m.width;
    const std::size_t P = m.paths.size();
    FiberIndex idx;
    for (std::size_t k = 0; k < m.classes; ++k)
        for (std::size_t c = 0; c < m.input_channels; ++c) {
            const std::size_t base = k * m.feature_count() + c * P * cells;
            for (int j1 = 0; j1 < m.J; ++j1)
                for (std::size_t q = 0; q < cells; ++q)
                    for (int l1 = 0; l1 < m.L; ++l1) idx.order1.push_back(base + order1_index(j1, l1, m.L) * cells + q);
            for (int j1 = 0; j1 < m.J; ++j1)
                for (int j2 = j1 + 1; j2 < m.J; ++j2)
                    for (std::size_t q = 0; q < cells; ++q)
                        for (int l1 = 0; l1 < m.L; ++l1)
                            for (int l2 = 0; l2 < m.L; ++l2)
                                idx.order2.push_back(base + order2_index(j1, l1, j2, l2, m.J, m.L) * cells + q);
        }
    return idx;
}

}  // namespace

std::vector<double> omega1_energy(std::span<const std::complex<double>> fibers, int L) {
    return fiber_energy(fibers, L, false);
}

std::vector<double> omega2_energy(std::span<const std::complex<double>> fibers, int L) {
    return fiber_energy(fibers, L, true);
}

AngularSpectrum angular_spectrum(const LinearModel& m) {
    const FiberIndex idx = fiber_index(m);
    std::vector<double> w = m.weights;
    for (std::size_t k = 0; k < m.classes; ++k) {
        auto row = std::span<double>(w).subspan(k * m.feature_count(), m.feature_count());
        const double n = std::sqrt(std::inner_product(row.begin(), row.end(), row.begin(), 0.0));
        if (n > 0.0)
            for (double& v : row) v /= n;
    }
    auto gather = [&](const std::vector<std::size_t>& ix, double& energy) {
        std::vector<Cd> f(ix.size());
        energy = 0.0;
        for (std::size_t i = 0; i < ix.size(); ++i) {
            f[i] = w[ix[i]];
            energy += w[ix[i]] * w[ix[i]];
        }
        return f;
    };
    AngularSpectrum s;
    s.L = m.L;
    s.omega1 = omega1_energy(gather(idx.order1, s.energy1), m.L);
    s.omega2 = omega2_energy(gather(idx.order2, s.energy2), m.L);
    return s;
}

double spectral_flatness(std::span<const double> spectrum) {
    require(!spectrum.empty(), "spectral_flatness: empty spectrum");
    double log_sum = 0.0, sum = 0.0;
    for (double v : spectrum) {
        require(v >= 0.0, "spectral_flatness: negative energy");
        if (v == 0.0) return 0.0;
        log_sum += std::log(v);
        sum += v;
    }
    const double n = static_cast<double>(spectrum.size());
    return std::exp(log_sum / n) / (sum / n);
}

LinearModel permute_order1_angles(const LinearModel& m, std::uint64_t seed) {
    const FiberIndex idx = fiber_index(m);
    LinearModel out = m;
    std::mt19937_64 rng(seed);
    const auto L = static_cast<std::size_t>(m.L);
    std::vector<double> vals(L);
    for (std::size_t o = 0; o < idx.order1.size(); o += L) {
        for (std::size_t l = 0; l < L; ++l) vals[l] = m.weights[idx.order1[o + l]];
        std::shuffle(vals.begin(), vals.end(), rng);
        for (std::size_t l = 0; l < L; ++l) out.weights[idx.order1[o + l]] = vals[l];
    }
    return out;
}

std::pair<LinearModel, SparsifyStats> sparsify_angular(const LinearModel& m, double keep_fraction) {
    require(keep_fraction > 0.0 && keep_fraction <= 1.0, "sparsify_angular: keep_fraction must lie in (0, 1]");
    const FiberIndex idx = fiber_index(m);
    const int L = m.L;
    const auto Ls = static_cast<std::size_t>(L);

    struct Block {
        const std::vector<std::size_t>* ix;
        bool two_d;
        std::size_t len;
        std::vector<Cd> spec;
    };
    std::vector<Block> blocks = {{&idx.order1, false, Ls, {}}, {&idx.order2, true, Ls * Ls, {}}};

    // A unit is a coefficient together with its conjugate partner.
    struct Unit {
        double mag;
        std::size_t block;
        std::size_t a;
        std::size_t b;
    };
    std::vector<Unit> units;
    std::size_t total = 0;
    double energy = 0.0;
    for (std::size_t bi = 0; bi < blocks.size(); ++bi) {
        Block& B = blocks[bi];
        B.spec.resize(B.ix->size());
        for (std::size_t o = 0; o < B.ix->size(); o += B.len) {
            std::vector<Cd> f(B.len);
            for (std::size_t t = 0; t < B.len; ++t) f[t] = m.weights[(*B.ix)[o + t]];
            const auto F = dft_fiber(f, L, B.two_d, false);
            std::copy(F.begin(), F.end(), B.spec.begin() + static_cast<std::ptrdiff_t>(o));
            for (std::size_t t = 0; t < B.len; ++t) {
                std::size_t partner;
                if (B.two_d) {
                    const std::size_t w1 = t / Ls, w2 = t % Ls;
                    partner = ((Ls - w1) % Ls) * Ls + (Ls - w2) % Ls;
                } else {
                    partner = (Ls - t) % Ls;
                }
                if (partner < t) continue;
                units.push_back({std::abs(F[t]), bi, o + t, o + partner});
            }
        }
        total += B.ix->size();
        for (const Cd& z : B.spec) energy += std::norm(z);
    }

    std::stable_sort(units.begin(), units.end(), [](const Unit& x, const Unit& y) { return x.mag > y.mag; });
    const auto budget = static_cast<std::size_t>(std::floor(keep_fraction * static_cast<double>(total) + 1e-9));
    std::size_t kept = 0;
    double kept_energy = 0.0;
    std::vector<std::vector<char>> keep(blocks.size());
    for (std::size_t bi = 0; bi < blocks.size(); ++bi) keep[bi].assign(blocks[bi].spec.size(), 0);
    for (const Unit& u : units) {
        const std::size_t size = u.a == u.b ? 1 : 2;
        if (kept + size > budget) continue;
        kept += size;
        keep[u.block][u.a] = keep[u.block][u.b] = 1;
        kept_energy += std::norm(blocks[u.block].spec[u.a]) * static_cast<double>(size);
    }

    LinearModel out = m;
    for (std::size_t bi = 0; bi < blocks.size(); ++bi) {
        Block& B = blocks[bi];
        for (std::size_t o = 0; o < B.spec.size(); o += B.len) {
            std::vector<Cd> F(B.len);
            for (std::size_t t = 0; t < B.len; ++t) F[t] = keep[bi][o + t] ? B.spec[o + t] : Cd(0.0);
            const auto f = dft_fiber(F, L, B.two_d, true);
            for (std::size_t t = 0; t < B.len; ++t) out.weights[(*B.ix)[o + t]] = f[t].real();
        }
    }

    SparsifyStats st;
    st.coefficients = total;
    st.zeroed = total - kept;
    st.zero_fraction = total ? static_cast<double>(st.zeroed) / static_cast<double>(total) : 0.0;
    st.energy_retained = energy > 0.0 ? kept_energy / energy : 1.0;
    return {std::move(out), st};
}

}  // namespace scatter
