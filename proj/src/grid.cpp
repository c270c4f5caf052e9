#include "scatter/grid.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "scatter/error.hpp"

namespace scatter {

namespace {

// BT.601 with chroma written as scaled colour differences so both chroma rows
// sum to exactly zero.
constexpr double kR = 0.299;
constexpr double kG = 0.587;
constexpr double kB = 0.114;
constexpr double kU = 0.436 / (1.0 - kB);
constexpr double kV = 0.615 / (1.0 - kR);

// Rows: Y, U, V. Columns: R, G, B.
constexpr double kRgbToYuv[3][3] = {
    {kR, kG, kB},
    {-kU * kR, -kU * kG, kU * (1.0 - kB)},
    {kV * (1.0 - kR), -kV * kG, -kV * kB},
};

}  // namespace

const char* to_string(ColorSpace cs) {
    switch (cs) {
        case ColorSpace::RGB: return "RGB";
        case ColorSpace::YUV: return "YUV";
        case ColorSpace::GRAY: return "GRAY";
    }
    return "?";
}

const char* to_string(Precision p) { return p == Precision::Single ? "single" : "double"; }

const char* to_string(BoundaryMode b) { return b == BoundaryMode::Reflect ? "reflect" : "periodic"; }

BoundaryMode parse_boundary(std::string_view s) {
    if (s == "reflect") return BoundaryMode::Reflect;
    if (s == "periodic") return BoundaryMode::Periodic;
    throw InvalidInput("unknown boundary mode '" + std::string(s) + "' (expected reflect|periodic)");
}

ImageGrid::ImageGrid(std::size_t height, std::size_t width, std::size_t channels, ColorSpace cs,
                     Precision p)
    : height_(height), width_(width), channels_(channels), color_space_(cs), precision_(p),
      data_(height * width * channels, 0.0) {
    require(cs != ColorSpace::GRAY || channels == 1, "GRAY images must have exactly one channel");
}

void ImageGrid::set_color_space(ColorSpace cs) {
    require(cs != ColorSpace::GRAY || channels_ == 1, "GRAY images must have exactly one channel");
    color_space_ = cs;
}

double l2_norm(const ImageGrid& img) {
    double s = 0.0;
    for (double v : img.data()) s += v * v;
    return std::sqrt(s);
}

ImageGrid rgb_to_yuv(const ImageGrid& img) {
    require(img.color_space() == ColorSpace::RGB && img.channels() == 3,
            "rgb_to_yuv expects a 3-channel RGB image");
    ImageGrid out(img.height(), img.width(), 3, ColorSpace::YUV, img.precision());
    for (std::size_t i = 0; i < img.plane_size(); ++i) {
        const double rgb[3] = {img.plane(0)[i], img.plane(1)[i], img.plane(2)[i]};
        for (std::size_t r = 0; r < 3; ++r)
            out.plane(r)[i] = kRgbToYuv[r][0] * rgb[0] + kRgbToYuv[r][1] * rgb[1] + kRgbToYuv[r][2] * rgb[2];
    }
    return out;
}

ImageGrid yuv_to_rgb(const ImageGrid& img) {
    require(img.color_space() == ColorSpace::YUV && img.channels() == 3,
            "yuv_to_rgb expects a 3-channel YUV image");
    ImageGrid out(img.height(), img.width(), 3, ColorSpace::RGB, img.precision());
    for (std::size_t i = 0; i < img.plane_size(); ++i) {
        const double y = img.plane(0)[i];
        const double r = y + img.plane(2)[i] / kV;
        const double b = y + img.plane(1)[i] / kU;
        out.plane(0)[i] = r;
        out.plane(1)[i] = (y - kR * r - kB * b) / kG;
        out.plane(2)[i] = b;
    }
    return out;
}

ImageGrid rgb_gradient_to_yuv(const ImageGrid& grad_rgb) {
    require(grad_rgb.channels() == 3, "rgb_gradient_to_yuv expects 3 channels");
    // d(rgb)/d(yuv) is the inverse matrix; its transpose maps the gradient.
    // Columns of the inverse, obtained from yuv_to_rgb applied to unit vectors.
    double inv[3][3];
    for (std::size_t k = 0; k < 3; ++k) {
        ImageGrid unit(1, 1, 3, ColorSpace::YUV);
        unit.plane(k)[0] = 1.0;
        const ImageGrid col = yuv_to_rgb(unit);
        for (std::size_t r = 0; r < 3; ++r) inv[r][k] = col.plane(r)[0];
    }
    ImageGrid out(grad_rgb.height(), grad_rgb.width(), 3, ColorSpace::YUV, grad_rgb.precision());
    for (std::size_t i = 0; i < grad_rgb.plane_size(); ++i) {
        for (std::size_t k = 0; k < 3; ++k) {
            double s = 0.0;
            for (std::size_t r = 0; r < 3; ++r) s += inv[r][k] * grad_rgb.plane(r)[i];
            out.plane(k)[i] = s;
        }
    }
    return out;
}

bool is_power_of_two(std::size_t n) { return n != 0 && (n & (n - 1)) == 0; }

PadPlan pad_plan(std::size_t n, int J) {
    require(J >= 0 && J < 30, "pad_plan: J out of range");
    const std::size_t support = std::size_t{1} << J;
    require(n >= support, "pad_plan: image size " + std::to_string(n) + " smaller than 2^J = " +
                              std::to_string(support));
    std::size_t padded = 1;
    while (padded < n + 2 * support) padded <<= 1;
    return split_plan(n, padded);
}

PadPlan split_plan(std::size_t n, std::size_t padded_size) {
    require(padded_size >= n, "split_plan: padded size smaller than input");
    const std::size_t slack = padded_size - n;
    return {padded_size, slack / 2, slack - slack / 2};
}

std::size_t source_index(std::ptrdiff_t i, std::size_t n, BoundaryMode mode) {
    const auto sn = static_cast<std::ptrdiff_t>(n);
    if (mode == BoundaryMode::Periodic) {
        std::ptrdiff_t r = i % sn;
        return static_cast<std::size_t>(r < 0 ? r + sn : r);
    }
    if (sn == 1) return 0;
    // Mirror without repeating the edge sample; period 2(n-1).
    const std::ptrdiff_t period = 2 * (sn - 1);
    std::ptrdiff_t r = i % period;
    if (r < 0) r += period;
    return static_cast<std::size_t>(r < sn ? r : period - r);
}

ImageGrid pad(const ImageGrid& img, const PadPlan& rows, const PadPlan& cols, BoundaryMode mode) {
    require(rows.padded_size == img.height() + rows.margin_lo + rows.margin_hi &&
                cols.padded_size == img.width() + cols.margin_lo + cols.margin_hi,
            "pad: inconsistent plan");
    if (mode == BoundaryMode::Reflect) {
        const bool fits = std::max(rows.margin_lo, rows.margin_hi) < img.height() &&
                          std::max(cols.margin_lo, cols.margin_hi) < img.width();
        require(fits || (rows.margin_lo + rows.margin_hi + cols.margin_lo + cols.margin_hi) == 0,
                "pad: reflect margin must be smaller than the image size");
    }
    ImageGrid out(rows.padded_size, cols.padded_size, img.channels(), img.color_space(),
                  img.precision());
    std::vector<std::size_t> xs(cols.padded_size);
    for (std::size_t x = 0; x < cols.padded_size; ++x)
        xs[x] = source_index(static_cast<std::ptrdiff_t>(x) - static_cast<std::ptrdiff_t>(cols.margin_lo),
                             img.width(), mode);
    for (std::size_t c = 0; c < img.channels(); ++c) {
        for (std::size_t y = 0; y < rows.padded_size; ++y) {
            const std::size_t sy = source_index(
                static_cast<std::ptrdiff_t>(y) - static_cast<std::ptrdiff_t>(rows.margin_lo), img.height(), mode);
            for (std::size_t x = 0; x < cols.padded_size; ++x) out.at(c, y, x) = img.at(c, sy, xs[x]);
        }
    }
    return out;
}

ImageGrid pad(const ImageGrid& img, std::size_t margin, BoundaryMode mode) {
    const PadPlan rows{img.height() + 2 * margin, margin, margin};
    const PadPlan cols{img.width() + 2 * margin, margin, margin};
    return pad(img, rows, cols, mode);
}

ImageGrid pad_adjoint(const ImageGrid& padded, const PadPlan& rows, const PadPlan& cols,
                      BoundaryMode mode) {
    require(padded.height() == rows.padded_size && padded.width() == cols.padded_size,
            "pad_adjoint: shape does not match plan");
    const std::size_t h = rows.padded_size - rows.margin_lo - rows.margin_hi;
    const std::size_t w = cols.padded_size - cols.margin_lo - cols.margin_hi;
    ImageGrid out(h, w, padded.channels(), padded.color_space(), padded.precision());
    std::vector<std::size_t> xs(cols.padded_size);
    for (std::size_t x = 0; x < cols.padded_size; ++x)
        xs[x] = source_index(static_cast<std::ptrdiff_t>(x) - static_cast<std::ptrdiff_t>(cols.margin_lo), w, mode);
    for (std::size_t c = 0; c < padded.channels(); ++c) {
        for (std::size_t y = 0; y < rows.padded_size; ++y) {
            const std::size_t sy =
                source_index(static_cast<std::ptrdiff_t>(y) - static_cast<std::ptrdiff_t>(rows.margin_lo), h, mode);
            for (std::size_t x = 0; x < cols.padded_size; ++x) out.at(c, sy, xs[x]) += padded.at(c, y, x);
        }
    }
    return out;
}

ImageGrid crop(const ImageGrid& img, std::size_t y0, std::size_t x0, std::size_t h, std::size_t w) {
    require(y0 + h <= img.height() && x0 + w <= img.width(), "crop: window exceeds image");
    ImageGrid out(h, w, img.channels(), img.color_space(), img.precision());
    for (std::size_t c = 0; c < img.channels(); ++c)
        for (std::size_t y = 0; y < h; ++y)
            for (std::size_t x = 0; x < w; ++x) out.at(c, y, x) = img.at(c, y0 + y, x0 + x);
    return out;
}

}  // namespace scatter
