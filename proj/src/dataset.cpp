#include "scatter/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numbers>
#include <random>

#include "scatter/error.hpp"
#include "scatter/image_io.hpp"

namespace scatter {

namespace {

constexpr int kOrientations = 5;
constexpr double kPeriods[2] = {4.0, 8.0};

}  // namespace

LabeledImages synthetic_textures(std::size_t per_class, std::size_t size, std::uint64_t seed) {
    require(size >= 8, "synthetic_textures: size must be >= 8");
    LabeledImages out;
    for (int f = 0; f < 2; ++f)
        for (int o = 0; o < kOrientations; ++o)
            out.class_names.push_back("o" + std::to_string(o * 180 / kOrientations) + "_p" +
                                      std::to_string(static_cast<int>(kPeriods[f])));

    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    std::normal_distribution<double> gauss(0.0, 1.0);
    const double pi = std::numbers::pi;
    // Interleave classes so any prefix of the set is balanced.
    for (std::size_t i = 0; i < per_class; ++i)
        for (int cls = 0; cls < 2 * kOrientations; ++cls) {
            const int f = cls / kOrientations;
            const int o = cls % kOrientations;
            ImageGrid img(size, size, 1, ColorSpace::GRAY);
            auto px = img.plane(0);
            std::fill(px.begin(), px.end(), 0.5);
            for (int g = 0; g < 2; ++g) {
                const double theta = pi * o / kOrientations + 0.12 * gauss(rng);
                const double k = 2.0 * pi / (kPeriods[f] * (1.0 + 0.1 * gauss(rng)));
                const double phase = 2.0 * pi * unit(rng);
                const double amp = 0.1 + 0.1 * unit(rng);
                for (std::size_t y = 0; y < size; ++y)
                    for (std::size_t x = 0; x < size; ++x)
                        px[y * size + x] +=
                            amp * std::cos(k * (std::cos(theta) * x + std::sin(theta) * y) + phase);
            }
            for (double& v : px) v = std::clamp(v + 0.15 * gauss(rng), 0.0, 1.0);
            out.images.push_back(std::move(img));
            out.labels.push_back(cls);
        }
    return out;
}

LabeledImages load_image_folder(const std::filesystem::path& root) {
    namespace fs = std::filesystem;
    require(fs::is_directory(root), "dataset folder '" + root.string() + "' does not exist");
    std::vector<fs::path> classes;
    for (const auto& e : fs::directory_iterator(root))
        if (e.is_directory()) classes.push_back(e.path());
    std::sort(classes.begin(), classes.end());
    require(!classes.empty(), "dataset folder '" + root.string() + "' has no class subdirectories");
    LabeledImages out;
    for (std::size_t c = 0; c < classes.size(); ++c) {
        out.class_names.push_back(classes[c].filename().string());
        std::vector<fs::path> files;
        for (const auto& e : fs::directory_iterator(classes[c]))
            if (e.is_regular_file()) files.push_back(e.path());
        std::sort(files.begin(), files.end());
        for (const auto& f : files) {
            out.images.push_back(read_image(f));
            out.labels.push_back(static_cast<int>(c));
        }
    }
    require(!out.images.empty(), "dataset folder '" + root.string() + "' holds no images");
    for (const auto& img : out.images)
        require(img.same_shape(out.images.front()), "dataset images must all have the same shape");
    return out;
}

void save_image_folder(const LabeledImages& data, const std::filesystem::path& root) {
    namespace fs = std::filesystem;
    for (const auto& name : data.class_names) fs::create_directories(root / name);
    std::vector<std::size_t> counter(data.class_names.size(), 0);
    for (std::size_t i = 0; i < data.images.size(); ++i) {
        const auto c = static_cast<std::size_t>(data.labels[i]);
        char name[32];
        std::snprintf(name, sizeof name, "%06zu.png", counter[c]++);
        write_png(data.images[i], root / data.class_names[c] / name);
    }
}

}  // namespace scatter
