#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "scatter/grid.hpp"

namespace scatter {

struct LabeledImages {
    std::vector<ImageGrid> images;
    std::vector<int> labels;
    std::vector<std::string> class_names;
};

/// Ten classes of noisy oriented gratings on a gray background: five
/// orientations times two spatial frequencies, random phase per image.
LabeledImages synthetic_textures(std::size_t per_class, std::size_t size, std::uint64_t seed);

/// One subdirectory per class (sorted by name), images inside.
LabeledImages load_image_folder(const std::filesystem::path& root);
void save_image_folder(const LabeledImages& data, const std::filesystem::path& root);

}  // namespace scatter
