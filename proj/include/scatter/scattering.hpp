#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "scatter/filterbank.hpp"
#include "scatter/grid.hpp"

namespace scatter {

enum class ForwardMode {
    Algorithm,       // intermediate signals subsampled at 2^j1 / 2^j2
    FullResolution,  // debug: every intermediate at full resolution, subsample at the end
};

struct ScatteringConfig {
    int J = 2;
    int L = 8;
    BoundaryMode boundary = BoundaryMode::Reflect;
    Precision precision = Precision::Single;
    MorletParams params = MorletParams::defaults(8);
    ForwardMode mode = ForwardMode::Algorithm;

    /// Config with the default Morlet parameters for the given L.
    static ScatteringConfig make(int J, int L, BoundaryMode boundary = BoundaryMode::Reflect,
                                 Precision precision = Precision::Single);
    void validate() const;
};

struct PathIndex {
    static constexpr int kUnused = -1;

    int order = 0;
    int j1 = kUnused;
    int l1 = kUnused;
    int j2 = kUnused;
    int l2 = kUnused;

    bool operator==(const PathIndex&) const = default;
};

/// Order 0, then order 1 by (j1, l1), then order 2 by (j1, l1, j2, l2), j1 < j2.
std::vector<PathIndex> path_table(int J, int L);
std::size_t path_count(int J, int L);
std::size_t order1_index(int j1, int l1, int L);
/// Position of path (j1, l1, j2, l2) in path_table(J, L).
std::size_t order2_index(int j1, int l1, int j2, int l2, int J, int L);

/// Coefficients indexed [input_channel][path][y][x].
struct ScatteringCoeffs {
    int J = 0;
    int L = 0;
    std::size_t input_height = 0;  // source image size before padding
    std::size_t input_width = 0;
    BoundaryMode boundary = BoundaryMode::Periodic;
    std::size_t input_channels = 0;
    std::size_t height = 0;  // spatial size of every coefficient map
    std::size_t width = 0;
    std::vector<PathIndex> paths;
    std::vector<double> data;

    std::size_t map_size() const { return height * width; }
    std::size_t channel_count() const { return input_channels * paths.size(); }

    double& at(std::size_t c, std::size_t p, std::size_t y, std::size_t x) {
        return data[((c * paths.size() + p) * height + y) * width + x];
    }
    double at(std::size_t c, std::size_t p, std::size_t y, std::size_t x) const {
        return data[((c * paths.size() + p) * height + y) * width + x];
    }
    std::span<double> map(std::size_t c, std::size_t p) {
        return {data.data() + (c * paths.size() + p) * map_size(), map_size()};
    }
    std::span<const double> map(std::size_t c, std::size_t p) const {
        return {data.data() + (c * paths.size() + p) * map_size(), map_size()};
    }

    bool same_layout(const ScatteringCoeffs& o) const;
};

double l2_norm(const ScatteringCoeffs& s);
double l2_distance(const ScatteringCoeffs& a, const ScatteringCoeffs& b);

/// Where an image of a given size lives on the transform grid.
struct Geometry {
    PadPlan rows;
    PadPlan cols;
    std::size_t M = 0;        // padded square grid side
    std::size_t out_h = 0;    // cropped coefficient map size
    std::size_t out_w = 0;
    std::size_t crop_y0 = 0;  // offset of the crop in the M/2^J output grid
    std::size_t crop_x0 = 0;
};

/// Reflect: square power-of-two grid from pad_plan of the longer side.
/// Periodic: input must already be a square power of two.
Geometry geometry(std::size_t height, std::size_t width, const ScatteringConfig& cfg);

/// Crops a coefficient set computed on the padded grid to the cells that
/// cover the original image: rows margin_lo/2^J, count ceil(n/2^J).
ScatteringCoeffs unpad_coeffs(const ScatteringCoeffs& padded, const Geometry& g, int J);

/// Counts live complex buffer slots; the peak is what memory_report exposes.
class SlotMeter {
public:
    void add(std::size_t slots);
    void release(std::size_t slots);
    std::size_t live() const { return live_; }
    std::size_t peak() const { return peak_; }

private:
    std::size_t live_ = 0;
    std::size_t peak_ = 0;
};

ScatteringCoeffs forward(const ImageGrid& img, const FilterBank& fb, const ScatteringConfig& cfg);

/// forward() with an explicit meter that sees every scratch buffer.
ScatteringCoeffs forward(const ImageGrid& img, const FilterBank& fb, const ScatteringConfig& cfg,
                         SlotMeter& meter);

/// Brute-force reference: naive DFTs for the spatial filters and direct
/// circular convolutions at full resolution; only the final maps are
/// subsampled. Periodic boundary, grids up to 128^2.
ScatteringCoeffs forward_oracle(const ImageGrid& img, const FilterBank& fb, const ScatteringConfig& cfg);

/// Applies forward() to every image with `workers` threads. Output does not
/// depend on the worker count.
std::vector<ScatteringCoeffs> forward_batch(const std::vector<ImageGrid>& imgs, const FilterBank& fb,
                                            const ScatteringConfig& cfg, std::size_t workers);

struct MemoryReport {
    double tree_coeffs = 0.0;     // storage of the level-order tree traversal
    std::size_t infix_peak = 0;   // measured peak complex slots, one image channel
};

/// `N` is the (power-of-two) grid side.
MemoryReport memory_report(const ScatteringConfig& cfg, std::size_t N);

/// Tree-traversal storage count alone (no transform run).
double tree_storage(int J, int L, std::size_t N);

/// Per (input_channel, path) mean and standard deviation.
struct PathStats {
    std::vector<double> mean;
    std::vector<double> stddev;
};

PathStats compute_path_stats(std::span<const ScatteringCoeffs> samples);
void standardize(ScatteringCoeffs& s, const PathStats& stats);

}  // namespace scatter
