#include "scatter/formats.hpp"

#include <fstream>
#include <string>

#include "json.hpp"
#include "scatter/binary_io.hpp"
#include "scatter/error.hpp"

namespace scatter {

namespace {

using nlohmann::json;

constexpr std::uint32_t kVersion = 1;

json paths_to_json(const std::vector<PathIndex>& paths) {
    json arr = json::array();
    for (const auto& p : paths) arr.push_back({p.order, p.j1, p.l1, p.j2, p.l2});
    return arr;
}

std::vector<PathIndex> paths_from_json(const json& arr) {
    std::vector<PathIndex> paths;
    for (const auto& e : arr) {
        require(e.is_array() && e.size() == 5, "path table entry must be [order,j1,l1,j2,l2]");
        paths.push_back({e[0].get<int>(), e[1].get<int>(), e[2].get<int>(), e[3].get<int>(), e[4].get<int>()});
    }
    return paths;
}

void write_framed(std::ostream& os, const char (&magic)[5], const json& header) {
    const std::string text = header.dump();
    os.write(magic, 4);
    io::write_u32(os, kVersion);
    io::write_u32(os, static_cast<std::uint32_t>(text.size()));
    os.write(text.data(), static_cast<std::streamsize>(text.size()));
}

json read_framed(std::istream& is, const char (&magic)[5], const std::string& what) {
    io::expect_magic(is, magic, what);
    const std::uint32_t version = io::read_u32(is);
    require(version == kVersion, what + ": unsupported version " + std::to_string(version));
    const std::uint32_t len = io::read_u32(is);
    std::string text(len, '\0');
    if (!is.read(text.data(), len)) throw InvalidInput(what + ": truncated header");
    try {
        return json::parse(text);
    } catch (const json::exception& e) {
        throw InvalidInput(what + ": malformed header: " + e.what());
    }
}

template <class F>
auto with_header_errors(const std::string& what, F&& f) {
    try {
        return f();
    } catch (const json::exception& e) {
        throw InvalidInput(what + ": bad header field: " + e.what());
    }
}

void write_values(std::ostream& os, const std::vector<double>& v) {
    for (double x : v) io::write_f32(os, static_cast<float>(x));
}

std::vector<double> read_values(std::istream& is, std::size_t n) {
    std::vector<double> v(n);
    for (double& x : v) x = io::read_f32(is);
    return v;
}

std::ofstream open_out(const std::filesystem::path& path) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw InvalidInput("cannot write '" + path.string() + "'");
    return os;
}

std::ifstream open_in(const std::filesystem::path& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw InvalidInput("cannot open '" + path.string() + "'");
    return is;
}

}  // namespace

void write_coeffs(const ScatteringCoeffs& s, std::ostream& os) {
    require(s.data.size() == s.channel_count() * s.map_size(), "write_coeffs: payload size mismatch");
    json h;
    h["J"] = s.J;
    h["L"] = s.L;
    h["N"] = {s.input_height, s.input_width};
    h["boundary"] = to_string(s.boundary);
    h["input_channels"] = s.input_channels;
    h["spatial"] = {s.height, s.width};
    h["paths"] = paths_to_json(s.paths);
    write_framed(os, "SCT1", h);
    write_values(os, s.data);
}

void write_coeffs(const ScatteringCoeffs& s, const std::filesystem::path& path) {
    auto os = open_out(path);
    write_coeffs(s, os);
}

ScatteringCoeffs read_coeffs(std::istream& is) {
    const json h = read_framed(is, "SCT1", "SCT1 file");
    ScatteringCoeffs s = with_header_errors("SCT1 file", [&] {
        ScatteringCoeffs c;
        c.J = h.at("J").get<int>();
        c.L = h.at("L").get<int>();
        c.input_height = h.at("N").at(0).get<std::size_t>();
        c.input_width = h.at("N").at(1).get<std::size_t>();
        c.boundary = parse_boundary(h.at("boundary").get<std::string>());
        c.input_channels = h.at("input_channels").get<std::size_t>();
        c.height = h.at("spatial").at(0).get<std::size_t>();
        c.width = h.at("spatial").at(1).get<std::size_t>();
        c.paths = paths_from_json(h.at("paths"));
        return c;
    });
    s.data = read_values(is, s.channel_count() * s.map_size());
    return s;
}

ScatteringCoeffs read_coeffs(const std::filesystem::path& path) {
    auto is = open_in(path);
    return read_coeffs(is);
}

void write_model(const LinearModel& m, std::ostream& os) {
    require(m.weights.size() == m.classes * m.feature_count() && m.bias.size() == m.classes,
            "write_model: weight shape mismatch");
    json h;
    h["J"] = m.J;
    h["L"] = m.L;
    h["N"] = {m.input_height, m.input_width};
    h["boundary"] = to_string(m.boundary);
    h["input_channels"] = m.input_channels;
    h["spatial"] = {m.height, m.width};
    h["paths"] = paths_to_json(m.paths);
    h["classes"] = m.classes;
    h["mean"] = m.stats.mean;
    h["stddev"] = m.stats.stddev;
    write_framed(os, "SLM1", h);
    write_values(os, m.weights);
    write_values(os, m.bias);
}

void write_model(const LinearModel& m, const std::filesystem::path& path) {
    auto os = open_out(path);
    write_model(m, os);
}

LinearModel read_model(std::istream& is) {
    const json h = read_framed(is, "SLM1", "SLM1 file");
    LinearModel m = with_header_errors("SLM1 file", [&] {
        LinearModel r;
        r.J = h.at("J").get<int>();
        r.L = h.at("L").get<int>();
        r.input_height = h.at("N").at(0).get<std::size_t>();
        r.input_width = h.at("N").at(1).get<std::size_t>();
        r.boundary = parse_boundary(h.at("boundary").get<std::string>());
        r.input_channels = h.at("input_channels").get<std::size_t>();
        r.height = h.at("spatial").at(0).get<std::size_t>();
        r.width = h.at("spatial").at(1).get<std::size_t>();
        r.paths = paths_from_json(h.at("paths"));
        r.classes = h.at("classes").get<std::size_t>();
        r.stats.mean = h.at("mean").get<std::vector<double>>();
        r.stats.stddev = h.at("stddev").get<std::vector<double>>();
        return r;
    });
    const std::size_t channels = m.input_channels * m.paths.size();
    require(m.stats.mean.size() == channels && m.stats.stddev.size() == channels,
            "SLM1 file: normalization statistics do not match the path table");
    m.weights = read_values(is, m.classes * m.feature_count());
    m.bias = read_values(is, m.classes);
    return m;
}

LinearModel read_model(const std::filesystem::path& path) {
    auto is = open_in(path);
    return read_model(is);
}

}  // namespace scatter
