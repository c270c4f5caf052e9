#pragma once

#include <cstddef>
#include <span>
#include <string_view>
#include <vector>

namespace scatter {

enum class ColorSpace { RGB, YUV, GRAY };
enum class Precision { Single, Double };
enum class BoundaryMode { Reflect, Periodic };

const char* to_string(ColorSpace cs);
const char* to_string(Precision p);
const char* to_string(BoundaryMode b);
BoundaryMode parse_boundary(std::string_view s);

/// Real-valued raster stored channel-major, row-major within a channel.
///
/// Values are kept in double regardless of `precision`; the tag selects the
/// arithmetic used by the transform engine.
class ImageGrid {
public:
    ImageGrid() = default;
    ImageGrid(std::size_t height, std::size_t width, std::size_t channels,
              ColorSpace cs = ColorSpace::RGB, Precision p = Precision::Single);

    std::size_t height() const { return height_; }
    std::size_t width() const { return width_; }
    std::size_t channels() const { return channels_; }
    std::size_t plane_size() const { return height_ * width_; }
    std::size_t size() const { return data_.size(); }
    ColorSpace color_space() const { return color_space_; }
    Precision precision() const { return precision_; }

    void set_color_space(ColorSpace cs);
    void set_precision(Precision p) { precision_ = p; }

    double& at(std::size_t c, std::size_t y, std::size_t x) {
        return data_[(c * height_ + y) * width_ + x];
    }
    double at(std::size_t c, std::size_t y, std::size_t x) const {
        return data_[(c * height_ + y) * width_ + x];
    }

    std::span<double> plane(std::size_t c) {
        return {data_.data() + c * plane_size(), plane_size()};
    }
    std::span<const double> plane(std::size_t c) const {
        return {data_.data() + c * plane_size(), plane_size()};
    }

    std::vector<double>& data() { return data_; }
    const std::vector<double>& data() const { return data_; }

    bool same_shape(const ImageGrid& o) const {
        return height_ == o.height_ && width_ == o.width_ && channels_ == o.channels_;
    }

private:
    std::size_t height_ = 0;
    std::size_t width_ = 0;
    std::size_t channels_ = 0;
    ColorSpace color_space_ = ColorSpace::GRAY;
    Precision precision_ = Precision::Single;
    std::vector<double> data_;
};

double l2_norm(const ImageGrid& img);

// BT.601, zero-centred chroma.
ImageGrid rgb_to_yuv(const ImageGrid& img);
ImageGrid yuv_to_rgb(const ImageGrid& img);

/// Applies the transpose of the RGB->YUV matrix to a per-pixel gradient
/// expressed in RGB, giving the gradient with respect to YUV values.
ImageGrid rgb_gradient_to_yuv(const ImageGrid& grad_rgb);

/// Padding geometry along one axis.
struct PadPlan {
    std::size_t padded_size = 0;
    std::size_t margin_lo = 0;
    std::size_t margin_hi = 0;

    bool operator==(const PadPlan&) const = default;
};

/// Smallest power of two >= n + 2*2^J, slack split evenly (odd pixel high).
PadPlan pad_plan(std::size_t n, int J);

/// Plan for an axis of length n padded to a fixed `padded_size`.
PadPlan split_plan(std::size_t n, std::size_t padded_size);

/// Pads every channel by the given margins. Reflect mirrors without repeating
/// the edge sample; Periodic wraps.
ImageGrid pad(const ImageGrid& img, const PadPlan& rows, const PadPlan& cols, BoundaryMode mode);
ImageGrid pad(const ImageGrid& img, std::size_t margin, BoundaryMode mode);

/// Adjoint of pad(): folds gradients on the padded grid back onto the
/// original pixels.
ImageGrid pad_adjoint(const ImageGrid& padded, const PadPlan& rows, const PadPlan& cols,
                      BoundaryMode mode);

ImageGrid crop(const ImageGrid& img, std::size_t y0, std::size_t x0, std::size_t h, std::size_t w);

/// Maps a padded-axis index to the source index of the unpadded axis.
std::size_t source_index(std::ptrdiff_t i, std::size_t n, BoundaryMode mode);

bool is_power_of_two(std::size_t n);

}  // namespace scatter
