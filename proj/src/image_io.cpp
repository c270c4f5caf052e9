#include "scatter/image_io.hpp"

#include <png.h>

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <vector>

#include "scatter/binary_io.hpp"
#include "scatter/error.hpp"

namespace scatter {

namespace {

std::uint8_t quantize(double v) {
    return static_cast<std::uint8_t>(std::lround(std::clamp(v, 0.0, 1.0) * 255.0));
}

ImageGrid as_displayable(const ImageGrid& img) {
    if (img.color_space() == ColorSpace::YUV) return yuv_to_rgb(img);
    require(img.channels() == 1 || img.channels() == 3, "only 1- or 3-channel images can be exported");
    return img;
}

std::vector<std::uint8_t> interleave(const ImageGrid& img) {
    std::vector<std::uint8_t> px(img.size());
    const std::size_t ch = img.channels();
    for (std::size_t i = 0; i < img.plane_size(); ++i)
        for (std::size_t c = 0; c < ch; ++c) px[i * ch + c] = quantize(img.plane(c)[i]);
    return px;
}

ImageGrid deinterleave(const std::uint8_t* px, std::size_t h, std::size_t w, std::size_t ch) {
    ImageGrid img(h, w, ch, ch == 1 ? ColorSpace::GRAY : ColorSpace::RGB);
    for (std::size_t i = 0; i < h * w; ++i)
        for (std::size_t c = 0; c < ch; ++c) img.plane(c)[i] = px[i * ch + c] / 255.0;
    return img;
}

ImageGrid read_png(const std::filesystem::path& path) {
    png_image image{};
    image.version = PNG_IMAGE_VERSION;
    if (!png_image_begin_read_from_file(&image, path.c_str()))
        throw InvalidInput("cannot read PNG '" + path.string() + "': " + image.message);
    const bool gray = (image.format & PNG_FORMAT_FLAG_COLOR) == 0;
    image.format = gray ? PNG_FORMAT_GRAY : PNG_FORMAT_RGB;
    std::vector<std::uint8_t> buf(PNG_IMAGE_SIZE(image));
    if (!png_image_finish_read(&image, nullptr, buf.data(), 0, nullptr))
        throw InvalidInput("cannot decode PNG '" + path.string() + "': " + image.message);
    return deinterleave(buf.data(), image.height, image.width, gray ? 1 : 3);
}

// Skips whitespace and '#' comments in a PNM header.
std::size_t read_pnm_int(std::istream& is) {
    int c;
    while ((c = is.peek()) != EOF) {
        if (c == '#') {
            std::string line;
            std::getline(is, line);
        } else if (std::isspace(c)) {
            is.get();
        } else {
            break;
        }
    }
    std::size_t v = 0;
    if (!(is >> v)) throw InvalidInput("malformed PNM header");
    return v;
}

ImageGrid read_pnm(const std::filesystem::path& path) {
    std::ifstream is(path, std::ios::binary);
    char magic[2];
    is.read(magic, 2);
    const std::size_t ch = magic[1] == '5' ? 1 : 3;
    const std::size_t w = read_pnm_int(is);
    const std::size_t h = read_pnm_int(is);
    const std::size_t maxval = read_pnm_int(is);
    if (maxval != 255) throw InvalidInput("only 8-bit PNM files are supported");
    is.get();
    std::vector<std::uint8_t> buf(w * h * ch);
    if (!is.read(reinterpret_cast<char*>(buf.data()), static_cast<std::streamsize>(buf.size())))
        throw InvalidInput("truncated PNM file '" + path.string() + "'");
    return deinterleave(buf.data(), h, w, ch);
}

}  // namespace

ImageGrid read_image(const std::filesystem::path& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw InvalidInput("cannot open image '" + path.string() + "'");
    unsigned char head[4] = {};
    is.read(reinterpret_cast<char*>(head), 4);
    is.close();
    if (head[0] == 0x89 && head[1] == 'P' && head[2] == 'N' && head[3] == 'G') return read_png(path);
    if (head[0] == 'P' && (head[1] == '5' || head[1] == '6')) return read_pnm(path);
    if (head[0] == 'R' && head[1] == 'A' && head[2] == 'W' && head[3] == 'F') return read_raw(path);
    throw InvalidInput("unrecognised image format in '" + path.string() + "'");
}

void write_png(const ImageGrid& img, const std::filesystem::path& path) {
    const ImageGrid out = as_displayable(img);
    const std::vector<std::uint8_t> px = interleave(out);
    png_image image{};
    image.version = PNG_IMAGE_VERSION;
    image.width = static_cast<png_uint_32>(out.width());
    image.height = static_cast<png_uint_32>(out.height());
    image.format = out.channels() == 1 ? PNG_FORMAT_GRAY : PNG_FORMAT_RGB;
    if (!png_image_write_to_file(&image, path.c_str(), 0, px.data(), 0, nullptr))
        throw InvalidInput("cannot write PNG '" + path.string() + "': " + image.message);
}

void write_pnm(const ImageGrid& img, const std::filesystem::path& path) {
    const ImageGrid out = as_displayable(img);
    std::ofstream os(path, std::ios::binary);
    if (!os) throw InvalidInput("cannot write '" + path.string() + "'");
    os << (out.channels() == 1 ? "P5" : "P6") << '\n' << out.width() << ' ' << out.height() << "\n255\n";
    const std::vector<std::uint8_t> px = interleave(out);
    os.write(reinterpret_cast<const char*>(px.data()), static_cast<std::streamsize>(px.size()));
}

ImageGrid read_raw(const std::filesystem::path& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw InvalidInput("cannot open '" + path.string() + "'");
    io::expect_magic(is, "RAWF", "RAWF image");
    const std::uint32_t h = io::read_u32(is);
    const std::uint32_t w = io::read_u32(is);
    const std::uint32_t c = io::read_u32(is);
    require(c >= 1, "RAWF image with zero channels");
    ImageGrid img(h, w, c, c == 1 ? ColorSpace::GRAY : ColorSpace::RGB);
    for (double& v : img.data()) v = io::read_f32(is);
    return img;
}

void write_raw(const ImageGrid& img, const std::filesystem::path& path) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw InvalidInput("cannot write '" + path.string() + "'");
    os.write("RAWF", 4);
    io::write_u32(os, static_cast<std::uint32_t>(img.height()));
    io::write_u32(os, static_cast<std::uint32_t>(img.width()));
    io::write_u32(os, static_cast<std::uint32_t>(img.channels()));
    for (double v : img.data()) io::write_f32(os, static_cast<float>(v));
}

void write_image(const ImageGrid& img, const std::filesystem::path& path) {
    const std::string ext = path.extension().string();
    if (ext == ".png") return write_png(img, path);
    if (ext == ".pgm" || ext == ".ppm") return write_pnm(img, path);
    if (ext == ".raw" || ext == ".rawf") return write_raw(img, path);
    throw InvalidInput("unsupported output extension '" + ext + "' (use .png, .pgm, .ppm or .raw)");
}

}  // namespace scatter
