#pragma once

#include <complex>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "scatter/adjoint.hpp"
#include "scatter/scattering.hpp"

namespace scatter {

/// Multinomial logistic regression over standardized coefficients.
///
/// weights are [class][input_channel][path][y][x], i.e. one row per class in
/// the ScatteringCoeffs data order.
struct LinearModel {
    int J = 0;
    int L = 0;
    std::size_t input_height = 0;
    std::size_t input_width = 0;
    BoundaryMode boundary = BoundaryMode::Periodic;
    std::size_t input_channels = 0;
    std::size_t height = 0;
    std::size_t width = 0;
    std::vector<PathIndex> paths;
    PathStats stats;
    std::size_t classes = 0;
    std::vector<double> weights;
    std::vector<double> bias;

    std::size_t feature_count() const { return input_channels * paths.size() * height * width; }
    std::span<double> row(std::size_t k) { return {weights.data() + k * feature_count(), feature_count()}; }
    std::span<const double> row(std::size_t k) const {
        return {weights.data() + k * feature_count(), feature_count()};
    }
    bool accepts(const ScatteringCoeffs& s) const;
    bool operator==(const LinearModel&) const;
};

struct TrainConfig {
    int epochs = 30;
    std::size_t batch = 32;
    double step = 0.05;
    double momentum = 0.9;
    double weight_decay = 1e-4;

    void validate() const;
};

LinearModel train_linear(std::span<const ScatteringCoeffs> features, std::span<const int> labels,
                         std::size_t classes, const TrainConfig& cfg, std::uint64_t seed);

struct Prediction {
    int label = 0;
    std::vector<double> scores;
};

Prediction predict(const LinearModel& m, const ScatteringCoeffs& s);

double accuracy(const LinearModel& m, std::span<const ScatteringCoeffs> features, std::span<const int> labels);

/// Wraps raw pixels as a single order-0 "path" so the same probe can be
/// trained on them.
ScatteringCoeffs pixel_features(const ImageGrid& img);

struct AttackResult {
    int source_label = 0;
    std::optional<double> eps;
    std::optional<ImageGrid> adversarial;
};

/// Sign-gradient attack. Walks eps_grid in ascending order and stops at the
/// first epsilon whose clamped perturbation is classified as target_class.
/// With untargeted set, the direction decreases the source score instead and
/// success means any label other than the source.
AttackResult fgsm_attack(const LinearModel& m, const FilterBank& fb, const ScatteringConfig& cfg,
                         const ImageGrid& x, int target_class, std::span<const double> eps_grid,
                         bool untargeted = false);

struct AngularSpectrum {
    int L = 0;
    std::vector<double> omega1;  // L
    std::vector<double> omega2;  // L x L, row = omega_theta1
    double energy1 = 0.0;        // squared norm of the analysed order-1 block
    double energy2 = 0.0;
};

/// Energy per angular frequency of fibers sampled along theta. Fibers are
/// contiguous runs of L (order 1) or L*L (order 2, theta1 major) values. The
/// DFT is orthonormal, so the totals equal the input energy.
std::vector<double> omega1_energy(std::span<const std::complex<double>> fibers, int L);
std::vector<double> omega2_energy(std::span<const std::complex<double>> fibers, int L);

/// Angular spectrum of the model's order-1 and order-2 weight blocks after
/// normalizing each class row to unit norm.
AngularSpectrum angular_spectrum(const LinearModel& m);

/// Geometric over arithmetic mean; 1 for a flat spectrum.
double spectral_flatness(std::span<const double> spectrum);

/// Copy of the model with the order-1 weights of every fiber shuffled across theta1.
LinearModel permute_order1_angles(const LinearModel& m, std::uint64_t seed);

struct SparsifyStats {
    std::size_t coefficients = 0;
    std::size_t zeroed = 0;
    double zero_fraction = 0.0;
    double energy_retained = 0.0;
};

/// Keeps the largest keep_fraction of the angular-frequency coefficients of
/// the order-1/order-2 blocks (one threshold for all of them) and transforms
/// back. Conjugate-symmetric pairs are kept or dropped together so the
/// weights stay real.
std::pair<LinearModel, SparsifyStats> sparsify_angular(const LinearModel& m, double keep_fraction);

}  // namespace scatter
