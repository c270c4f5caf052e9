#pragma once

#include <filesystem>
#include <iosfwd>

#include "scatter/classify.hpp"
#include "scatter/scattering.hpp"

namespace scatter {

// SCT1: "SCT1", u32 version, u32 header length, JSON header, float32 payload
// in [input_channel][path][y][x] order. SLM1 uses the same framing with the
// model metadata in the header, then weights and biases.

void write_coeffs(const ScatteringCoeffs& s, std::ostream& os);
void write_coeffs(const ScatteringCoeffs& s, const std::filesystem::path& path);
ScatteringCoeffs read_coeffs(std::istream& is);
ScatteringCoeffs read_coeffs(const std::filesystem::path& path);

void write_model(const LinearModel& m, std::ostream& os);
void write_model(const LinearModel& m, const std::filesystem::path& path);
LinearModel read_model(std::istream& is);
LinearModel read_model(const std::filesystem::path& path);

}  // namespace scatter
