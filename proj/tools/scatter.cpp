#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iomanip>
#include <iostream>
#include <numbers>
#include <optional>
#include <random>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "scatter/adjoint.hpp"
#include "scatter/classify.hpp"
#include "scatter/dataset.hpp"
#include "scatter/error.hpp"
#include "scatter/formats.hpp"
#include "scatter/image_io.hpp"
#include "scatter/recon.hpp"
#include "scatter/selftest.hpp"

namespace fs = std::filesystem;
using namespace scatter;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitInvariant = 1;
constexpr int kExitUsage = 2;

std::string num(double v) {
    std::ostringstream os;
    os << std::setprecision(9) << v;
    return os.str();
}

std::size_t default_workers() {
    if (const char* env = std::getenv("SCATTER_WORKERS")) {
        const long n = std::strtol(env, nullptr, 10);
        if (n > 0) return static_cast<std::size_t>(n);
    }
    return std::max(1u, std::thread::hardware_concurrency());
}

struct ScatterFlags {
    int J = 2;
    int L = 8;
    std::string boundary = "reflect";
    std::string precision = "single";

    void add(CLI::App* cmd) {
        cmd->add_option("--J", J, "Number of scales")->check(CLI::Range(1, 8));
        cmd->add_option("--L", L, "Number of orientations")->check(CLI::Range(1, 32));
        cmd->add_option("--boundary", boundary, "reflect | periodic")
            ->check(CLI::IsMember({"reflect", "periodic"}));
        cmd->add_option("--precision", precision, "single | double")->check(CLI::IsMember({"single", "double"}));
    }

    ScatteringConfig config() const {
        return ScatteringConfig::make(J, L, parse_boundary(boundary),
                                      precision == "double" ? Precision::Double : Precision::Single);
    }
};

FilterBank bank_for(std::size_t h, std::size_t w, const ScatteringConfig& cfg) {
    return build_filterbank(geometry(h, w, cfg).M, cfg.J, cfg.L, cfg.params);
}

bool is_sct1(const fs::path& p) {
    std::ifstream is(p, std::ios::binary);
    char head[4] = {};
    is.read(head, 4);
    return is && std::string(head, 4) == "SCT1";
}

std::vector<double> parse_grid(const std::string& spec) {
    // "start:stop:step" or a comma-separated list.
    std::vector<double> out;
    if (spec.find(':') != std::string::npos) {
        double a, b, s;
        char c1, c2;
        std::istringstream is(spec);
        if (!(is >> a >> c1 >> b >> c2 >> s) || s <= 0.0 || b < a)
            throw InvalidInput("bad epsilon grid '" + spec + "' (expected start:stop:step)");
        const auto n = static_cast<long>(std::floor((b - a) / s + 1e-9));
        for (long i = 0; i <= n; ++i) out.push_back(a + static_cast<double>(i) * s);
    } else {
        std::istringstream is(spec);
        std::string tok;
        while (std::getline(is, tok, ',')) out.push_back(std::stod(tok));
    }
    if (out.empty()) throw InvalidInput("empty epsilon grid");
    return out;
}

// ---------------------------------------------------------------- forward

struct ForwardCmd {
    std::vector<std::string> inputs;
    std::string out;
    ScatterFlags sf;
    std::size_t workers = 0;

    void add(CLI::App& app, std::function<int()>& run) {
        auto* cmd = app.add_subcommand("forward", "Scattering coefficients of images, written as SCT1");
        cmd->add_option("inputs", inputs, "Image files (PNG, PGM/PPM, RAWF)")->required()->check(CLI::ExistingFile);
        cmd->add_option("--out", out, "Output .sct file, or a directory for several inputs")->required();
        sf.add(cmd);
        cmd->add_option("--workers", workers, "Worker threads (default: SCATTER_WORKERS or all cores)");
        cmd->callback([this, &run] { run = [this] { return exec(); }; });
    }

    int exec() {
        const ScatteringConfig cfg = sf.config();
        std::vector<ImageGrid> imgs;
        for (const auto& p : inputs) imgs.push_back(read_image(p));
        for (const auto& img : imgs)
            require(img.same_shape(imgs.front()), "forward: all inputs must share one shape");
        const FilterBank fb = bank_for(imgs.front().height(), imgs.front().width(), cfg);
        const auto coeffs = forward_batch(imgs, fb, cfg, workers ? workers : default_workers());
        const bool many = inputs.size() > 1;
        if (many) fs::create_directories(out);
        for (std::size_t i = 0; i < inputs.size(); ++i) {
            const fs::path dst = many ? fs::path(out) / (fs::path(inputs[i]).stem().string() + ".sct") : fs::path(out);
            write_coeffs(coeffs[i], dst);
            const auto& c = coeffs[i];
            std::cout << dst.string() << ": paths=" << c.paths.size() << " channels=" << c.channel_count()
                      << " spatial=" << c.height << "x" << c.width << "\n";
        }
        return kExitOk;
    }
};

// ---------------------------------------------------------------- reconstruct

struct ReconstructCmd {
    std::string input;
    std::string out = "reconstruction.png";
    std::string history;
    ScatterFlags sf;
    ReconConfig rc;
    std::string color = "yuv";
    std::uint64_t seed = 0;

    void add(CLI::App& app, std::function<int()>& run) {
        auto* cmd = app.add_subcommand("reconstruct", "Recover an image from scattering coefficients");
        cmd->add_option("input", input, "SCT1 file, or an image to transform first")->required()->check(CLI::ExistingFile);
        cmd->add_option("--out", out, "Output image (.png, .ppm/.pgm or .raw)");
        cmd->add_option("--history", history, "CSV of (iteration, loss, err_S); default <out>.csv");
        sf.add(cmd);
        cmd->add_option("--iters", rc.iterations, "Adam iterations")->check(CLI::PositiveNumber);
        cmd->add_option("--step", rc.step_size, "Adam step size")->check(CLI::PositiveNumber);
        cmd->add_option("--noise-var", rc.init_noise_variance, "Variance of the white-noise start")
            ->check(CLI::PositiveNumber);
        cmd->add_option("--color", color, "Optimization color space: yuv | rgb")->check(CLI::IsMember({"yuv", "rgb"}));
        cmd->add_option("--seed", seed, "Seed for the initial noise")->required();
        cmd->callback([this, &run] { run = [this] { return exec(); }; });
    }

    int exec() {
        rc.work_color_space = color == "yuv" ? ColorSpace::YUV : ColorSpace::RGB;
        ScatteringConfig cfg = sf.config();
        std::optional<ImageGrid> original;
        ScatteringCoeffs target;
        if (is_sct1(input)) {
            target = read_coeffs(fs::path(input));
            cfg = ScatteringConfig::make(target.J, target.L, target.boundary, cfg.precision);
        } else {
            original = read_image(input);
            target = forward(*original, bank_for(original->height(), original->width(), cfg), cfg);
        }
        const FilterBank fb = bank_for(target.input_height, target.input_width, cfg);
        const ReconResult r = reconstruct(target, fb, cfg, rc, seed);
        write_image(r.image, out);
        const fs::path hist = history.empty() ? fs::path(out).replace_extension(".csv") : fs::path(history);
        std::ofstream csv(hist);
        csv << "iteration,loss,err_S\n";
        for (std::size_t i = 0; i < r.history.size(); ++i)
            csv << i << "," << num(r.history[i].loss) << "," << num(r.history[i].err_s) << "\n";
        if (r.diverged) std::cerr << "warning: loss increased across a 50-iteration window\n";
        std::cout << "reconstruct: out=" << out << " history=" << hist.string()
                  << " err_S=" << num(r.history.back().err_s);
        if (original) std::cout << " err_x=" << num(err_metrics(r.image, *original, fb, cfg).err_x);
        std::cout << "\n";
        return kExitOk;
    }
};

// ---------------------------------------------------------------- filters

struct FiltersCmd {
    std::size_t size = 64;
    int J = 2;
    int L = 8;
    std::string out = "filters";

    void add(CLI::App& app, std::function<int()>& run) {
        auto* cmd = app.add_subcommand("filters", "Export the filter bank as RAWF files plus a manifest");
        cmd->add_option("--size", size, "Grid side (power of two)")->check(CLI::PositiveNumber);
        cmd->add_option("--J", J, "Number of scales")->check(CLI::Range(1, 8));
        cmd->add_option("--L", L, "Number of orientations")->check(CLI::Range(1, 32));
        cmd->add_option("--out", out, "Output directory");
        cmd->callback([this, &run] { run = [this] { return exec(); }; });
    }

    static void export_one(const SpectrumGrid<double>& spec, const fs::path& stem) {
        const std::size_t m = spec.side();
        ImageGrid fimg(m, m, 2, ColorSpace::RGB), simg(m, m, 2, ColorSpace::RGB);
        const ComplexGrid<double> spatial = idft2(spec);
        for (std::size_t i = 0; i < m * m; ++i) {
            fimg.plane(0)[i] = spec.data()[i].real();
            fimg.plane(1)[i] = spec.data()[i].imag();
            simg.plane(0)[i] = spatial.data()[i].real();
            simg.plane(1)[i] = spatial.data()[i].imag();
        }
        write_raw(fimg, stem.string() + "_spectrum.raw");
        write_raw(simg, stem.string() + "_spatial.raw");
    }

    static std::pair<double, double> peak_and_norm(const SpectrumGrid<double>& spec) {
        const std::size_t m = spec.side();
        std::size_t best = 0;
        for (std::size_t i = 1; i < m * m; ++i)
            if (std::abs(spec.data()[i]) > std::abs(spec.data()[best])) best = i;
        const double wy = bin_frequency(best / m, m), wx = bin_frequency(best % m, m);
        return {std::hypot(wy, wx), l2_norm(idft2(spec))};
    }

    int exec() {
        require(is_power_of_two(size), "filters: --size must be a power of two");
        const FilterBank fb = build_filterbank(size, J, L, MorletParams::defaults(L));
        fs::create_directories(out);
        std::ofstream manifest(fs::path(out) / "manifest.txt");
        manifest << "# name j l r peak_frequency l2_norm\n";
        std::size_t count = 0;
        auto emit = [&](const std::string& name, int j, int l, int r, const SpectrumGrid<double>& spec) {
            export_one(spec, fs::path(out) / name);
            const auto [peak, norm] = peak_and_norm(spec);
            manifest << name << " " << j << " " << l << " " << r << " " << num(peak) << " " << num(norm) << "\n";
            ++count;
        };
        for (int j = 0; j < J; ++j)
            for (int l = 0; l < L; ++l)
                for (int r = 0; r <= j; ++r)
                    emit("psi_j" + std::to_string(j) + "_l" + std::to_string(l) + "_r" + std::to_string(r), j, l, r,
                         fb.psi<double>(j, l, r));
        for (int r = 0; r <= J; ++r) emit("phi_r" + std::to_string(r), J, -1, r, fb.phi<double>(r));
        const LittlewoodPaley lp = littlewood_paley(fb);
        std::cout << "filters: out=" << out << " count=" << count << " frame_gain=" << num(fb.frame_gain())
                  << " lp_max=" << num(lp.max_e) << " lp_band_min=" << num(lp.min_e_band) << "\n";
        return kExitOk;
    }
};

// ---------------------------------------------------------------- train

struct DataFlags {
    std::string data;
    std::size_t synthetic = 0;
    std::size_t size = 32;
    double test_fraction = 1.0 / 3.0;

    void add(CLI::App* cmd) {
        cmd->add_option("--data", data, "Dataset folder (one subdirectory per class)")->check(CLI::ExistingDirectory);
        cmd->add_option("--synthetic", synthetic, "Generate N images per class of the oriented-texture set");
        cmd->add_option("--size", size, "Side of synthetic images")->check(CLI::Range(8, 512));
        cmd->add_option("--test-fraction", test_fraction, "Held-out fraction")->check(CLI::Range(0.0, 0.9));
    }

    // Deterministic split: every k-th sample goes to the test set.
    std::pair<LabeledImages, LabeledImages> load(std::uint64_t seed) const {
        require(!data.empty() || synthetic > 0, "give --data DIR or --synthetic N");
        const LabeledImages all = data.empty() ? synthetic_textures(synthetic, size, seed) : load_image_folder(data);
        LabeledImages train, test;
        train.class_names = test.class_names = all.class_names;
        const auto period = test_fraction > 0.0 ? static_cast<std::size_t>(std::lround(1.0 / test_fraction)) : 0;
        for (std::size_t i = 0; i < all.images.size(); ++i) {
            auto& dst = period && (i / all.class_names.size()) % period == period - 1 ? test : train;
            dst.images.push_back(all.images[i]);
            dst.labels.push_back(all.labels[i]);
        }
        return {train, test};
    }
};

std::vector<ScatteringCoeffs> features_of(const std::vector<ImageGrid>& imgs, bool pixels, const ScatteringConfig& cfg,
                                          std::size_t workers) {
    if (pixels) {
        std::vector<ScatteringCoeffs> out;
        for (const auto& img : imgs) out.push_back(pixel_features(img));
        return out;
    }
    const FilterBank fb = bank_for(imgs.front().height(), imgs.front().width(), cfg);
    return forward_batch(imgs, fb, cfg, workers);
}

struct TrainCmd {
    DataFlags df;
    ScatterFlags sf;
    TrainConfig tc;
    std::string features = "scattering";
    std::string out = "model.slm";
    std::uint64_t seed = 0;
    std::size_t workers = 0;

    void add(CLI::App& app, std::function<int()>& run) {
        auto* cmd = app.add_subcommand("train", "Train a linear probe on scattering (or pixel) features");
        df.add(cmd);
        sf.add(cmd);
        cmd->add_option("--features", features, "scattering | pixels")->check(CLI::IsMember({"scattering", "pixels"}));
        cmd->add_option("--epochs", tc.epochs, "Training epochs")->check(CLI::PositiveNumber);
        cmd->add_option("--batch", tc.batch, "Mini-batch size")->check(CLI::PositiveNumber);
        cmd->add_option("--step", tc.step, "Step size relative to the mean squared feature norm")
            ->check(CLI::PositiveNumber);
        cmd->add_option("--momentum", tc.momentum, "Momentum")->check(CLI::Range(0.0, 0.999));
        cmd->add_option("--weight-decay", tc.weight_decay, "L2 weight decay")->check(CLI::NonNegativeNumber);
        cmd->add_option("--out", out, "Output SLM1 model file");
        cmd->add_option("--seed", seed, "Seed for data generation and shuffling")->required();
        cmd->add_option("--workers", workers, "Worker threads for feature extraction");
        cmd->callback([this, &run] { run = [this] { return exec(); }; });
    }

    int exec() {
        const auto [train, test] = df.load(seed);
        const ScatteringConfig cfg = sf.config();
        const bool pixels = features == "pixels";
        const std::size_t w = workers ? workers : default_workers();
        const auto ftrain = features_of(train.images, pixels, cfg, w);
        const LinearModel m = train_linear(ftrain, train.labels, train.class_names.size(), tc, seed);
        write_model(m, fs::path(out));
        std::cout << "train: out=" << out << " features=" << features << " samples=" << train.images.size()
                  << " train_accuracy=" << num(accuracy(m, ftrain, train.labels));
        if (!test.images.empty())
            std::cout << " test_accuracy=" << num(accuracy(m, features_of(test.images, pixels, cfg, w), test.labels));
        std::cout << "\n";
        return kExitOk;
    }
};

// ---------------------------------------------------------------- attack

struct AttackCmd {
    std::string model;
    std::string image;
    int target = -1;
    bool untargeted = false;
    std::string eps_spec = "0.005:0.3:0.005";
    std::string out = "adversarial.png";
    std::size_t synthetic = 0;
    std::string report = "attack.csv";
    std::uint64_t seed = 0;
    std::string precision = "single";

    void add(CLI::App& app, std::function<int()>& run) {
        auto* cmd = app.add_subcommand("attack", "Sign-gradient attack against a scattering linear probe");
        cmd->add_option("--model", model, "SLM1 model file")->required()->check(CLI::ExistingFile);
        cmd->add_option("--image", image, "Image to perturb")->check(CLI::ExistingFile);
        cmd->add_option("--target", target, "Target class (required unless --untargeted)");
        cmd->add_flag("--untargeted", untargeted, "Push away from the current class instead");
        cmd->add_option("--eps-grid", eps_spec, "start:stop:step or comma list, ascending");
        cmd->add_option("--out", out, "Adversarial image (single-image mode)");
        cmd->add_option("--synthetic", synthetic, "Attack N fresh synthetic images; target = label+1");
        cmd->add_option("--report", report, "Per-image CSV in --synthetic mode");
        cmd->add_option("--seed", seed, "Seed for --synthetic images")->default_val(0);
        cmd->add_option("--precision", precision, "single | double")->check(CLI::IsMember({"single", "double"}));
        cmd->callback([this, &run] { run = [this] { return exec(); }; });
    }

    int exec() {
        const LinearModel m = read_model(fs::path(model));
        require(m.J >= 1, "attack: the model was not trained on scattering features");
        const ScatteringConfig cfg = ScatteringConfig::make(
            m.J, m.L, m.boundary, precision == "double" ? Precision::Double : Precision::Single);
        const FilterBank fb = bank_for(m.input_height, m.input_width, cfg);
        const std::vector<double> grid = parse_grid(eps_spec);

        if (!image.empty()) {
            require(untargeted || target >= 0, "attack: give --target or --untargeted");
            const ImageGrid x = read_image(image);
            const AttackResult r = fgsm_attack(m, fb, cfg, x, target, grid, untargeted);
            if (r.eps) {
                write_image(*r.adversarial, out);
                std::cout << "attack: status=success source=" << r.source_label << " eps_x=" << num(*r.eps)
                          << " out=" << out << "\n";
            } else {
                std::cout << "attack: status=failed source=" << r.source_label << " no epsilon in grid\n";
            }
            return kExitOk;
        }

        require(synthetic > 0, "attack: give --image or --synthetic N");
        const LabeledImages data = synthetic_textures((synthetic + 9) / 10, m.input_height, seed);
        std::ofstream csv(report);
        csv << "index,label,source,target,eps_x,status\n";
        std::size_t attempted = 0, hits = 0, hits_015 = 0;
        for (std::size_t i = 0; i < synthetic && i < data.images.size(); ++i) {
            const int src = predict(m, forward(data.images[i], fb, cfg)).label;
            const int tgt = untargeted ? -1 : (src + 1) % static_cast<int>(m.classes);
            const AttackResult r = fgsm_attack(m, fb, cfg, data.images[i], tgt, grid, untargeted);
            ++attempted;
            if (r.eps) {
                ++hits;
                hits_015 += *r.eps <= 0.15 + 1e-12;
            }
            csv << i << "," << data.labels[i] << "," << r.source_label << "," << tgt << ","
                << (r.eps ? num(*r.eps) : "") << "," << (r.eps ? "success" : "no_epsilon") << "\n";
        }
        std::cout << "attack: report=" << report << " attempted=" << attempted
                  << " success_fraction=" << num(static_cast<double>(hits) / static_cast<double>(attempted))
                  << " success_fraction_eps_le_0.15="
                  << num(static_cast<double>(hits_015) / static_cast<double>(attempted)) << "\n";
        return kExitOk;
    }
};

// ---------------------------------------------------------------- analyze

struct AnalyzeCmd {
    std::string model;
    std::string out = "angular.csv";
    double keep = 0.0;
    std::string sparse_out;

    void add(CLI::App& app, std::function<int()>& run) {
        auto* cmd = app.add_subcommand("analyze", "Angular-frequency energy of a model's weights");
        cmd->add_option("--model", model, "SLM1 model file")->required()->check(CLI::ExistingFile);
        cmd->add_option("--out", out, "CSV output");
        cmd->add_option("--sparsify", keep, "Also keep only this fraction of angular coefficients")
            ->check(CLI::Range(0.0, 1.0));
        cmd->add_option("--sparse-out", sparse_out, "Where to write the sparsified model");
        cmd->callback([this, &run] { run = [this] { return exec(); }; });
    }

    int exec() {
        const LinearModel m = read_model(fs::path(model));
        const AngularSpectrum s = angular_spectrum(m);
        std::ofstream csv(out);
        csv << "block,omega_theta1,omega_theta2,energy\n";
        double sum1 = 0.0, sum2 = 0.0;
        for (int w = 0; w < s.L; ++w) {
            csv << "omega1," << w << ",," << num(s.omega1[static_cast<std::size_t>(w)]) << "\n";
            sum1 += s.omega1[static_cast<std::size_t>(w)];
        }
        for (int a = 0; a < s.L; ++a)
            for (int b = 0; b < s.L; ++b) {
                const double e = s.omega2[static_cast<std::size_t>(a * s.L + b)];
                csv << "omega2," << a << "," << b << "," << num(e) << "\n";
                sum2 += e;
            }
        std::cout << "analyze: out=" << out << " omega1_sum=" << num(sum1) << " order1_energy=" << num(s.energy1)
                  << " omega2_sum=" << num(sum2) << " order2_energy=" << num(s.energy2)
                  << " flatness1=" << num(spectral_flatness(s.omega1));
        if (keep > 0.0) {
            const auto [sparse, st] = sparsify_angular(m, keep);
            if (!sparse_out.empty()) write_model(sparse, fs::path(sparse_out));
            std::cout << " zero_fraction=" << num(st.zero_fraction) << " energy_retained=" << num(st.energy_retained);
        }
        std::cout << "\n";
        return kExitOk;
    }
};

// ---------------------------------------------------------------- bench

struct BenchCmd {
    std::vector<std::size_t> sizes = {32, 128};
    std::size_t batch = 128;
    int J = 2;
    int L = 8;
    std::size_t workers = 0;
    std::string out;
    std::uint64_t seed = 0;

    void add(CLI::App& app, std::function<int()>& run) {
        auto* cmd = app.add_subcommand("bench", "Timing and memory benchmark, CSV output");
        cmd->add_option("--sizes", sizes, "Image sides")->delimiter(',');
        cmd->add_option("--batch", batch, "Images per batch (3 channels each)")->check(CLI::PositiveNumber);
        cmd->add_option("--J", J, "Number of scales")->check(CLI::Range(1, 8));
        cmd->add_option("--L", L, "Number of orientations")->check(CLI::Range(1, 32));
        cmd->add_option("--workers", workers, "Worker threads");
        cmd->add_option("--out", out, "CSV file (default: stdout)");
        cmd->add_option("--seed", seed, "Seed for the random images")->default_val(0);
        cmd->callback([this, &run] { run = [this] { return exec(); }; });
    }

    static std::uint64_t hash(const std::vector<ScatteringCoeffs>& cs) {
        std::uint64_t h = 1469598103934665603ull;
        for (const auto& c : cs)
            for (double v : c.data) {
                std::uint64_t bits;
                std::memcpy(&bits, &v, sizeof bits);
                h = (h ^ bits) * 1099511628211ull;
            }
        return h;
    }

    template <class F>
    static double time_ms(F&& f) {
        const auto t0 = std::chrono::steady_clock::now();
        f();
        return std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
    }

    int exec() {
        std::ofstream file;
        if (!out.empty()) file.open(out);
        std::ostream& os = out.empty() ? std::cout : file;
        os << "op,shape,J,L,workers,wall_ms,peak_slots,throughput,note\n";
        const std::size_t w = workers ? workers : default_workers();
        std::mt19937_64 rng(seed);
        std::uniform_real_distribution<double> u(0.0, 1.0);
        bool bound_ok = true;

        for (std::size_t n : sizes) {
            std::vector<ImageGrid> imgs(batch, ImageGrid(n, n, 3, ColorSpace::RGB));
            for (auto& img : imgs)
                for (double& v : img.data()) v = u(rng);
            const ScatteringConfig cfg = ScatteringConfig::make(J, L);
            const FilterBank fb = bank_for(n, n, cfg);
            SlotMeter meter;
            ImageGrid probe(n, n, 1, ColorSpace::GRAY);
            (void)forward(probe, fb, cfg, meter);
            const std::size_t M = fb.M();
            bound_ok = bound_ok && meter.peak() <= 5 * M * M;
            std::vector<ScatteringCoeffs> a, b;
            const double ms = time_ms([&] { a = forward_batch(imgs, fb, cfg, w); });
            const double ms2 = time_ms([&] { b = forward_batch(imgs, fb, cfg, 2 * w); });
            const std::string shape = std::to_string(batch) + "x3x" + std::to_string(n) + "x" + std::to_string(n);
            os << "forward," << shape << "," << J << "," << L << "," << w << "," << num(ms) << "," << meter.peak()
               << "," << num(1000.0 * static_cast<double>(batch) / ms) << ",M=" << M
               << " peak_over_M2=" << num(static_cast<double>(meter.peak()) / static_cast<double>(M * M)) << "\n";
            os << "forward," << shape << "," << J << "," << L << "," << 2 * w << "," << num(ms2) << ","
               << meter.peak() << "," << num(1000.0 * static_cast<double>(batch) / ms2)
               << ",hash_equal=" << (hash(a) == hash(b) ? 1 : 0) << "\n";
        }

        // Brute-force reference against the FFT pipeline at 64^2.
        {
            ScatteringConfig cfg = ScatteringConfig::make(J, L, BoundaryMode::Periodic, Precision::Double);
            const FilterBank fb = build_filterbank(64, J, L, cfg.params);
            ImageGrid img(64, 64, 1, ColorSpace::GRAY, Precision::Double);
            for (double& v : img.data()) v = u(rng);
            const double oracle_ms = time_ms([&] { (void)forward_oracle(img, fb, cfg); });
            cfg.precision = Precision::Single;
            const int reps = 20;
            const double fast_ms = time_ms([&] {
                                       for (int r = 0; r < reps; ++r) (void)forward(img, fb, cfg);
                                   }) /
                                   reps;
            os << "forward_oracle,1x1x64x64," << J << "," << L << ",1," << num(oracle_ms) << ",,"
               << num(1000.0 / oracle_ms) << ",speedup=" << num(oracle_ms / fast_ms) << "\n";
        }

        for (int j = 2; j <= 4; ++j) {
            const MemoryReport r = memory_report(ScatteringConfig::make(j, L, BoundaryMode::Periodic), 256);
            bound_ok = bound_ok && r.infix_peak <= 5u * 256u * 256u;
            os << "memory_report,1x1x256x256," << j << "," << L << ",1,," << r.infix_peak << ",,tree_coeffs="
               << num(r.tree_coeffs) << "\n";
        }
        std::cerr << "bench: peak slots within 5*M^2: " << (bound_ok ? "yes" : "no") << "\n";
        return bound_ok ? kExitOk : kExitInvariant;
    }
};

// ---------------------------------------------------------------- selftest

struct SelftestCmd {
    SelftestOptions opt;
    std::string report;

    void add(CLI::App& app, std::function<int()>& run) {
        auto* cmd = app.add_subcommand("selftest", "Run the invariant suite and print a JSON report");
        cmd->add_option("--report", report, "Write the JSON report here instead of stdout");
        cmd->add_option("--inject-fault", opt.fault, "Corrupt one wavelet's DC bin by this amount (test hook)");
        cmd->add_option("--seed", opt.seed, "Seed for the random test inputs");
        cmd->callback([this, &run] { run = [this] { return exec(); }; });
    }

    int exec() {
        const auto results = run_selftest(opt);
        nlohmann::ordered_json j;
        bool all = true;
        j["checks"] = nlohmann::ordered_json::array();
        for (const auto& r : results) {
            all = all && r.passed;
            nlohmann::ordered_json e;
            e["name"] = r.name;
            e["passed"] = r.passed;
            e["measured"] = std::isfinite(r.measured) ? nlohmann::ordered_json(std::stod(num(r.measured)))
                                                      : nlohmann::ordered_json(nullptr);
            e["threshold"] = r.threshold;
            e["detail"] = r.detail;
            j["checks"].push_back(e);
        }
        j["passed"] = all;
        if (report.empty()) {
            std::cout << j.dump(2) << "\n";
        } else {
            std::ofstream(report) << j.dump(2) << "\n";
        }
        for (const auto& r : results)
            if (!r.passed) std::cerr << "selftest: FAILED " << r.name << " (measured " << num(r.measured) << ")\n";
        return all ? kExitOk : kExitInvariant;
    }
};

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Order-2 wavelet scattering transform: forward, adjoint, reconstruction and linear probes"};
    app.require_subcommand(1);
    std::function<int()> run;

    ForwardCmd forward_cmd;
    ReconstructCmd reconstruct_cmd;
    FiltersCmd filters_cmd;
    TrainCmd train_cmd;
    AttackCmd attack_cmd;
    AnalyzeCmd analyze_cmd;
    BenchCmd bench_cmd;
    SelftestCmd selftest_cmd;
    forward_cmd.add(app, run);
    reconstruct_cmd.add(app, run);
    filters_cmd.add(app, run);
    train_cmd.add(app, run);
    attack_cmd.add(app, run);
    analyze_cmd.add(app, run);
    bench_cmd.add(app, run);
    selftest_cmd.add(app, run);

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return kExitUsage;
    }

    try {
        return run();
    } catch (const InvalidInput& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitUsage;
    } catch (const std::invalid_argument& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitUsage;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitInvariant;
    }
}
