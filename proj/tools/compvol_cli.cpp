// SPDX-License-Identifier: Apache-2.0
//
// compvol: command-line front end for the compositional volume renderer.
//
//   compvol gen-synthetic --seed 7 --out parts/
//   compvol render --parts parts/ --yaw 1.5708 --pitch 1.5708 --out frame/
//   compvol sweep --parts parts/ --yaw-range 0.3 --steps 10 --out sweep/
//   compvol metrics --a original.ppm --b edited.ppm [--mask edited_region.pgm]
//   compvol check-grad --sets 100 --size 8

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <new>
#include <numbers>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "compvol/compvol.hpp"

namespace fs = std::filesystem;
using namespace compvol;

namespace {

struct RenderArgs {
    std::string parts_dir;
    double yaw = kPoseMean;
    double pitch = kPoseMean;
    int samples = 36;
    bool train_profile = false;
    std::string mapping = "gaussian:1";
    std::string mask_mode = "nerf";
    std::string active = "all";
    std::string feature_vis = "first3";
    int width = 64;
    int height = 64;
    double fov = 0.5236;
    double radius = 3.0;
    int depth_planes = 32;
    int threads = 0;
    long long jitter_seed = -1;
    std::string out = ".";
};

MappingFn parse_mapping(const std::string& s) {
    const auto colon = s.find(':');
    const std::string kind = s.substr(0, colon);
    double param = 1.0;
    if (colon != std::string::npos) {
        try {
            std::size_t used = 0;
            param = std::stod(s.substr(colon + 1), &used);
            if (used != s.size() - colon - 1) throw std::invalid_argument(s);
        } catch (const std::exception&) {
            throw UsageError("invalid mapping parameter in '" + s + "'");
        }
    }
    if (kind == "gaussian") return MappingFn::gaussian(param);
    if (kind == "invprop") return MappingFn::inverse_proportional(param);
    throw UsageError("unknown mapping '" + s + "' (expected gaussian:<alpha> or invprop:<beta>)");
}

MaskWeightMode parse_mask_mode(const std::string& s) {
    if (s == "nerf") return MaskWeightMode::NerfWeights;
    if (s == "uniform") return MaskWeightMode::Uniform;
    throw UsageError("unknown mask mode '" + s + "' (expected nerf or uniform)");
}

FeatureVis parse_vis(const std::string& s) {
    if (s == "first3") return FeatureVis::First3;
    if (s == "norm") return FeatureVis::Norm;
    throw UsageError("unknown feature visualization '" + s + "' (expected first3 or norm)");
}

/// "all", "prefix:<n>", or a comma list of part names / indices.
std::vector<int> parse_active(const std::string& s, const PartSet& parts) {
    if (s == "all") return {};
    std::vector<int> out;
    if (s.rfind("prefix:", 0) == 0) {
        const int n = std::stoi(s.substr(7));
        if (n < 1 || n > parts.size()) throw UsageError("active prefix out of range: " + s);
        for (int k = 0; k < n; ++k) out.push_back(k);
        return out;
    }
    std::stringstream ss(s);
    std::string tok;
    while (std::getline(ss, tok, ',')) {
        if (tok.empty()) continue;
        int idx = parts.find(tok);
        if (idx < 0) {
            try {
                std::size_t used = 0;
                idx = std::stoi(tok, &used);
                if (used != tok.size()) idx = -1;
            } catch (const std::exception&) {
                idx = -1;
            }
        }
        if (idx < 0 || idx >= parts.size()) throw UsageError("unknown part '" + tok + "' in --active");
        out.push_back(idx);
    }
    if (out.empty()) throw UsageError("--active selects no parts");
    return out;
}

void add_render_options(CLI::App* cmd, RenderArgs& a) {
    cmd->add_option("--parts", a.parts_dir, "Part-set directory")->required();
    cmd->add_option("--samples,-n", a.samples, "Samples per ray (N)");
    cmd->add_flag("--train-profile", a.train_profile, "Use the training sample count N=12");
    cmd->add_option("--mapping", a.mapping, "gaussian:<alpha> | invprop:<beta>");
    cmd->add_option("--mask-mode", a.mask_mode, "nerf | uniform");
    cmd->add_option("--active", a.active, "all | prefix:<n> | comma list of part names or indices");
    cmd->add_option("--feature-vis", a.feature_vis, "first3 | norm");
    cmd->add_option("--width", a.width, "Image width");
    cmd->add_option("--height", a.height, "Image height");
    cmd->add_option("--fov", a.fov, "Vertical field of view (radians)");
    cmd->add_option("--radius", a.radius, "Orbit radius (world units)");
    cmd->add_option("--depth-planes", a.depth_planes, "Lifted grid depth Z");
    cmd->add_option("--threads", a.threads, "Worker threads (default: $COMPVOL_THREADS or all cores)");
    cmd->add_option("--jitter-seed", a.jitter_seed, "Enable stratified sample jitter with this seed");
    cmd->add_option("--out,-o", a.out, "Output directory");
}

struct Prepared {
    PartSet parts;
    CameraConfig camera;
    RenderOptions options;
    FeatureVis vis;
};

Prepared prepare(const RenderArgs& a) {
    Prepared p{load_part_set(a.parts_dir), {}, {}, parse_vis(a.feature_vis)};
    p.camera.orbit_radius = a.radius;
    p.camera.fov_y = a.fov;
    p.camera.image_w = a.width;
    p.camera.image_h = a.height;
    p.camera.n_samples = a.train_profile ? 12 : a.samples;
    p.options.mapping = parse_mapping(a.mapping);
    p.options.mask_mode = parse_mask_mode(a.mask_mode);
    p.options.active = parse_active(a.active, p.parts);
    p.options.depth_planes = a.depth_planes;
    p.options.threads = a.threads;
    if (a.jitter_seed >= 0) p.options.jitter_seed = static_cast<std::uint64_t>(a.jitter_seed);
    validate(p.camera);
    return p;
}

nlohmann::ordered_json frame_record(const RenderedFrame& f, const Prepared& p, const std::vector<int>& labels) {
    nlohmann::ordered_json j;
    j["pose"] = {{"yaw", f.pose.yaw}, {"pitch", f.pose.pitch}};
    auto active = nlohmann::ordered_json::array();
    for (int k : p.options.active) active.push_back(k);
    j["config"] = {{"width", f.width},
                   {"height", f.height},
                   {"n_samples", p.camera.n_samples},
                   {"fov_y", p.camera.fov_y},
                   {"orbit_radius", p.camera.orbit_radius},
                   {"depth_planes", p.options.depth_planes},
                   {"mapping", p.options.mapping.describe()},
                   {"mask_mode", to_string(p.options.mask_mode)},
                   {"active", p.options.active.empty() ? nlohmann::ordered_json("all") : active},
                   {"jitter_seed", p.options.jitter_seed ? nlohmann::ordered_json(*p.options.jitter_seed)
                                                         : nlohmann::ordered_json(nullptr)}};
    std::size_t covered = 0;
    for (auto c : f.coverage) covered += c;
    j["covered_pixels"] = covered;
    auto parts = nlohmann::ordered_json::array();
    for (const auto& part : p.parts.parts) {
        const int k = part.id.index;
        std::size_t label_pixels = 0;
        for (int l : labels) label_pixels += l == k;
        double soft = 0.0;
        for (int y = 0; y < f.height; ++y)
            for (int x = 0; x < f.width; ++x) soft += f.mask.m.at(x, y, k);
        parts.push_back({{"index", k},
                         {"name", part.id.name},
                         {"label_pixels", label_pixels},
                         {"soft_area", soft / (static_cast<double>(f.width) * f.height)}});
    }
    j["parts"] = std::move(parts);
    return j;
}

void write_text(const fs::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw FormatError("cannot open " + path.string() + " for writing");
    out << text;
}

/// Writes <stem>feature.ppm, <stem>labels.pgm / mask_labels.pgm, mask_k<k>.pgm and the json record.
void write_frame(const RenderedFrame& f, const Prepared& p, const fs::path& dir, const std::string& stem) {
    fs::create_directories(dir);
    const auto labels = argmax_labels(f.mask.m);
    auto feature = feature_to_raster(f, p.vis);
    if (feature.channels == 1) feature = gray_to_rgb(feature);
    write_pnm(dir / (stem + "frame_feature.ppm"), feature);
    write_pnm(dir / (stem + "mask_labels.pgm"), label_raster(labels, f.width, f.height));
    for (int k = 0; k < p.parts.size(); ++k)
        write_pnm(dir / (stem + "mask_k" + std::to_string(k) + ".pgm"), mask_channel_raster(f.mask.m, k));
    write_text(dir / (stem + "frame.json"), frame_record(f, p, labels).dump(2) + "\n");
}

int cmd_gen(std::uint64_t seed, const std::string& out, int parts, int size, int channels, double face_depth,
            const std::string& scene) {
    PartSet set;
    if (scene == "portrait") {
        SynthConfig cfg;
        cfg.seed = seed;
        cfg.parts = parts;
        cfg.height = cfg.width = size;
        cfg.channels = channels;
        cfg.face_base_depth = face_depth;
        set = synth_part_set(cfg);
    } else if (scene == "occlusion") {
        OcclusionScene sc;
        sc.size = size;
        sc.channels = channels;
        set = occlusion_part_set(sc);
    } else {
        throw UsageError("unknown scene '" + scene + "' (expected portrait or occlusion)");
    }
    save_part_set(set, out);
    return 0;
}

int cmd_render(const RenderArgs& a) {
    const auto p = prepare(a);
    const auto frame = render_frame(p.parts, {a.yaw, a.pitch}, p.camera, p.options);
    write_frame(frame, p, a.out, "");
    return 0;
}

int cmd_sweep(const RenderArgs& a, double yaw_range, int steps) {
    if (steps < 1) throw UsageError("--steps must be >= 1");
    if (!(yaw_range >= 0.0)) throw UsageError("--yaw-range must be >= 0");
    const auto p = prepare(a);
    for (int i = 0; i < steps; ++i) {
        const double yaw = steps == 1 ? a.yaw : a.yaw - yaw_range + 2.0 * yaw_range * i / (steps - 1);
        const auto frame = render_frame(p.parts, {yaw, a.pitch}, p.camera, p.options);
        char stem[32];
        std::snprintf(stem, sizeof stem, "%03d_", i);
        write_frame(frame, p, a.out, stem);
    }
    return 0;
}

int cmd_metrics(const std::string& a_path, const std::string& b_path, const std::string& mask_path) {
    const Image a = load_image(a_path);
    const Image b = load_image(b_path);
    std::vector<std::uint8_t> edited;
    if (!mask_path.empty()) {
        const Raster8 mask = read_pnm(mask_path);
        if (mask.channels != 1 || mask.width != a.width || mask.height != a.height)
            throw UsageError("edit mask must be a PGM with the image dimensions");
        for (auto v : mask.data) edited.push_back(v != 0);
    }
    const auto m = compute_metrics(a, b, edited);
    nlohmann::ordered_json j{{"d_mean", m.d_mean},
                             {"d_mean_masked", m.d_mean_masked},
                             {"w", m.width},
                             {"h", m.height},
                             {"masked_pixel_count", m.masked_pixel_count}};
    std::cout << j.dump() << '\n';
    return 0;
}

int cmd_check_grad(const std::string& from, int sets, int size, int parts, std::uint64_t seed, double step,
                   double tol, double corrupt) {
    std::vector<DepthStack> stacks;
    if (!from.empty()) {
        stacks.push_back(DepthStack::from(load_part_set(from)));
    } else {
        if (sets < 1 || size < 1 || parts < 1) throw UsageError("--sets, --size and --k must be >= 1");
        std::mt19937_64 rng(seed);
        for (int s = 0; s < sets; ++s) {
            DepthStack st{parts, size, size, std::vector<double>(static_cast<std::size_t>(parts) * size * size)};
            for (double& d : st.values) d = 31.0 * detail::unit(rng);
            stacks.push_back(std::move(st));
        }
    }
    GradCheckReport total;
    total.pass = true;
    for (const auto& st : stacks) {
        auto grad = depth_smoothness_gradient(st.values, st.parts, st.height, st.width);
        for (double& g : grad) g *= corrupt;
        const auto r = finite_diff_check(
            [&](std::span<const double> x) { return depth_smoothness(x, st.parts, st.height, st.width); }, st.values,
            grad, step, tol);
        total.max_abs_err = std::max(total.max_abs_err, r.max_abs_err);
        total.max_rel_err = std::max(total.max_rel_err, r.max_rel_err);
        total.n_probes += r.n_probes;
        total.pass = total.pass && r.pass;
    }
    nlohmann::ordered_json j{{"max_abs_err", total.max_abs_err},
                             {"max_rel_err", total.max_rel_err},
                             {"n_probes", total.n_probes},
                             {"tolerance", tol},
                             {"sets", stacks.size()},
                             {"pass", total.pass}};
    std::cout << j.dump() << '\n';
    return total.pass ? 0 : 5;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Compositional 3D-aware volume renderer for lifted per-part 2D maps"};
    app.require_subcommand(1);

    std::uint64_t gen_seed = 7;
    std::string gen_out, gen_scene = "portrait";
    int gen_parts = 13, gen_size = 64, gen_channels = 16;
    double gen_face_depth = 16.0;
    auto* gen = app.add_subcommand("gen-synthetic", "Write a procedural part set");
    gen->add_option("--seed", gen_seed, "Generator seed");
    gen->add_option("--out,-o", gen_out, "Output directory")->required();
    gen->add_option("--parts,-k", gen_parts, "Part count K");
    gen->add_option("--size", gen_size, "Map side H = W");
    gen->add_option("--channels,-c", gen_channels, "Feature channels C");
    gen->add_option("--face-depth", gen_face_depth, "Face base depth (grid z units)");
    gen->add_option("--scene", gen_scene, "portrait | occlusion");

    RenderArgs render_args;
    auto* render = app.add_subcommand("render", "Render one posed frame");
    add_render_options(render, render_args);
    render->add_option("--yaw", render_args.yaw, "Yaw (radians)");
    render->add_option("--pitch", render_args.pitch, "Pitch (radians)");

    RenderArgs sweep_args;
    double sweep_range = 0.3;
    int sweep_steps = 10;
    auto* sweep = app.add_subcommand("sweep", "Render frames across a yaw range");
    add_render_options(sweep, sweep_args);
    sweep->add_option("--yaw", sweep_args.yaw, "Center yaw (radians)");
    sweep->add_option("--pitch", sweep_args.pitch, "Pitch (radians)");
    sweep->add_option("--yaw-range", sweep_range, "Half-width of the yaw range");
    sweep->add_option("--steps", sweep_steps, "Number of frames");

    std::string metrics_a, metrics_b, metrics_mask;
    auto* metrics = app.add_subcommand("metrics", "Difference-map metrics between two images");
    metrics->add_option("--a", metrics_a, "Original image (PPM)")->required();
    metrics->add_option("--b", metrics_b, "Edited image (PPM)")->required();
    metrics->add_option("--mask", metrics_mask, "Edited-region mask (PGM, nonzero = edited)");

    std::string grad_from;
    int grad_sets = 100, grad_size = 8, grad_parts = 3;
    std::uint64_t grad_seed = 1;
    double grad_step = 1e-4, grad_tol = 1e-4, grad_corrupt = 1.0;
    auto* grad = app.add_subcommand("check-grad", "Finite-difference check of the depth-smoothness gradient");
    grad->add_option("--from", grad_from, "Check a part-set directory instead of random stacks");
    grad->add_option("--sets", grad_sets, "Random depth stacks");
    grad->add_option("--size", grad_size, "Map side");
    grad->add_option("--k", grad_parts, "Parts per stack");
    grad->add_option("--seed", grad_seed, "Random seed");
    grad->add_option("--step", grad_step, "Central-difference step h");
    grad->add_option("--tol", grad_tol, "Relative error tolerance");
    grad->add_option("--corrupt", grad_corrupt, "Scale the analytic gradient (negative control)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e);
    }

    try {
        if (*gen) return cmd_gen(gen_seed, gen_out, gen_parts, gen_size, gen_channels, gen_face_depth, gen_scene);
        if (*render) return cmd_render(render_args);
        if (*sweep) return cmd_sweep(sweep_args, sweep_range, sweep_steps);
        if (*metrics) return cmd_metrics(metrics_a, metrics_b, metrics_mask);
        if (*grad)
            return cmd_check_grad(grad_from, grad_sets, grad_size, grad_parts, grad_seed, grad_step, grad_tol,
                                  grad_corrupt);
    } catch (const AllocationError& e) {
        std::cerr << "error: allocation: " << e.what() << '\n';
        return 3;
    } catch (const std::bad_alloc&) {
        std::cerr << "error: allocation: out of memory\n";
        return 3;
    } catch (const fs::filesystem_error& e) {
        std::cerr << "error: file: " << e.what() << '\n';
        return 2;
    } catch (const FormatError& e) {
        std::cerr << "error: file: " << e.what() << '\n';
        return 2;
    } catch (const NumericError& e) {
        std::cerr << "error: numeric: " << e.what() << '\n';
        return 4;
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
    return 1;
}
