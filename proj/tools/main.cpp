// meshgrad-cli: render, fit silhouettes, transfer style, DeepDream, voxel IoU.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "config.hpp"
#include "meshgrad/apps.hpp"
#include "meshgrad/error.hpp"
#include "meshgrad/image.hpp"
#include "meshgrad/io.hpp"
#include "meshgrad/render.hpp"
#include "meshgrad/voxel.hpp"

namespace fs = std::filesystem;
using namespace meshgrad;
using meshgrad::cli::JobFile;

namespace {

struct Common {
    std::string config;
    std::uint64_t seed = 0;
    std::string out = ".";
    int threads = 1;
    std::string resume;
};

JobFile open_job(const Common& c, const std::string& verb) {
    if (c.config.empty()) return {};
    return JobFile(c.config, cli::allowed_keys(verb), verb);
}

void require_input(const fs::path& p) {
    if (!fs::exists(p)) throw ValidationError("input file not found: '" + p.string() + "'");
}

std::string numbered(const char* pattern, int index) {
    char buf[64];
    std::snprintf(buf, sizeof buf, pattern, index);
    return buf;
}

std::string number(double x) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", x);
    return buf;
}

RenderOptions read_render(const JobFile& f, std::optional<RenderMode> mode_default) {
    RenderOptions o;
    o.image_size = f.integer("render.image_size", o.image_size);
    o.downsample_factor = f.integer("render.downsample", o.downsample_factor);
    if (mode_default) o.mode = parse_render_mode(f.text("render.mode", std::string(to_string(*mode_default))));
    o.background = f.vec3("render.background", o.background);
    o.cull_backfaces = f.flag("render.cull_backfaces", o.cull_backfaces);
    o.validate();
    return o;
}

std::vector<Viewpoint> read_views(const JobFile& f, int default_count) {
    const double elevation = f.number("views.elevation", 30.0);
    const double distance = f.number("views.distance", 5.0);
    const double fov = f.number("views.field_of_view", 30.0);
    if (const auto az = f.numbers("views.azimuths")) {
        if (f.has("views.count")) throw ValidationError("set either views.count or views.azimuths, not both");
        const auto el = f.numbers("views.elevations");
        if (el && el->size() != az->size())
            throw ValidationError("views.elevations needs one value per azimuth");
        std::vector<Viewpoint> out;
        for (std::size_t i = 0; i < az->size(); ++i) {
            Viewpoint v{(*az)[i], el ? (*el)[i] : elevation, distance, fov};
            v.validate();
            out.push_back(v);
        }
        return out;
    }
    if (f.has("views.elevations")) throw ValidationError("views.elevations needs views.azimuths");
    return azimuth_ring(f.integer("views.count", default_count), elevation, f.number("views.azimuth_start", 0.0),
                        distance, fov);
}

Lighting read_lighting(const JobFile& f) {
    Lighting l;
    l.ambient = f.number("lighting.ambient", l.ambient);
    l.directional = f.number("lighting.directional", l.directional);
    const Vec3 d = f.vec3("lighting.direction", l.direction);
    if (!(d.norm() > 0.0) || !d.allFinite()) throw ValidationError("lighting.direction must be a nonzero vector");
    l.direction = d.normalized();
    l.validate();
    return l;
}

ViewSampler read_sampling(const JobFile& f) {
    ViewSampler s;
    if (f.flag("sampling.fixed", false)) {
        s.fixed = read_views(f, 1);
        return s;
    }
    s.elevation_min = f.number("sampling.elevation_min", s.elevation_min);
    s.elevation_max = f.number("sampling.elevation_max", s.elevation_max);
    s.azimuth_min = f.number("sampling.azimuth_min", s.azimuth_min);
    s.azimuth_max = f.number("sampling.azimuth_max", s.azimuth_max);
    s.distance = f.number("sampling.distance", s.distance);
    s.field_of_view = f.number("sampling.field_of_view", s.field_of_view);
    s.validate();
    return s;
}

AdamHyper read_adam(const JobFile& f, const std::string& rate_key, double rate) {
    AdamHyper h;
    h.learning_rate = f.number(rate_key, rate);
    h.beta1 = f.number("optim.beta1", h.beta1);
    h.beta2 = f.number("optim.beta2", h.beta2);
    h.epsilon = f.number("optim.epsilon", h.epsilon);
    h.validate();
    return h;
}

RunControl read_control(const JobFile& f, const Common& c, const fs::path& out, bool checkpoint_default = true) {
    RunControl r;
    if (c.threads < 1) throw ValidationError("--threads must be >= 1");
    r.threads = c.threads;
    r.seed = c.seed;
    if (f.flag("output.checkpoint", checkpoint_default)) r.checkpoint = out / "checkpoint.nadm";
    if (!c.resume.empty()) {
        require_input(c.resume);
        r.resume = fs::path(c.resume);
    }
    r.fail_at_step = f.integer("debug.nan_at_step", -1);
    return r;
}

void write_text(const fs::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error("cannot write '" + path.string() + "'");
    out << text;
    if (!out) throw Error("failed writing '" + path.string() + "'");
}

// Textures from [mesh] textures if given; they must match the face count.
void attach_textures(const JobFile& f, Mesh& mesh) {
    if (!f.has("mesh.textures")) return;
    const fs::path p = f.text("mesh.textures", "");
    require_input(p);
    mesh.textures = load_textures(p);
    mesh.validate();
}

int cmd_render(const Common& c, const std::string& mesh_path) {
    const JobFile f = open_job(c, "render");
    const RenderOptions opt = read_render(f, RenderMode::silhouette);
    const std::vector<Viewpoint> views = read_views(f, 1);
    const Lighting light = read_lighting(f);
    require_input(mesh_path);
    Mesh mesh = load_obj(mesh_path);
    attach_textures(f, mesh);
    if (opt.mode != RenderMode::silhouette && !mesh.textures)
        mesh.textures = std::vector<TextureCube>(mesh.face_count(), TextureCube(2));

    const fs::path out = c.out;
    fs::create_directories(out);
    for (std::size_t i = 0; i < views.size(); ++i)
        save_png(render(mesh, views[i], opt, light).image, out / numbered("view_%03d.png", static_cast<int>(i)));
    std::printf("render: %zu views written to %s\n", views.size(), out.string().c_str());
    return 0;
}

int cmd_fit(const Common& c, const std::string& target_dir) {
    const JobFile f = open_job(c, "fit-silhouette");
    const fs::path out = c.out;
    FitSilhouetteConfig cfg;
    cfg.render = read_render(f, std::nullopt);
    cfg.views = read_views(f, 24);
    cfg.lambda_silhouette = f.number("loss.silhouette", cfg.lambda_silhouette);
    cfg.lambda_smoothness = f.number("loss.smoothness", cfg.lambda_smoothness);
    cfg.steps = f.integer("optim.steps", cfg.steps);
    cfg.batch = f.integer("optim.batch", cfg.batch);
    cfg.adam = read_adam(f, "optim.learning_rate", 1e-4);
    cfg.subdivision = f.integer("mesh.subdivision", cfg.subdivision);
    cfg.validate();
    const RunControl control = read_control(f, c, out);

    std::vector<Image> targets;
    for (std::size_t i = 0; i < cfg.views.size(); ++i) {
        const fs::path p = fs::path(target_dir) / numbered("view_%03d.png", static_cast<int>(i));
        require_input(p);
        targets.push_back(load_mask_png(p));
    }
    fs::create_directories(out);
    const FitResult r = fit_silhouette(targets, cfg, control);

    std::string csv = "step,silhouette,smoothness,mean_iou\n";
    for (const FitTraceRow& row : r.trace)
        csv += std::to_string(row.step) + ',' + number(row.silhouette) + ',' + number(row.smoothness) + ',' +
               number(row.mean_iou) + '\n';
    write_text(out / "trace.csv", csv);
    save_obj(r.mesh, out / "mesh.obj");
    std::printf("fit-silhouette: steps=%d mean_iou=%.6f smoothness=%.6f\n", cfg.steps, r.mean_iou, r.smoothness);
    return 0;
}

struct TextureJob {
    TextureRunConfig config;
    RunControl control;
    std::unique_ptr<FeatureExtractor> extractor;
};

TextureJob read_texture_job(const JobFile& f, const Common& c, const std::string& extractor_flag, bool dream) {
    TextureJob job;
    TextureRunConfig& cfg = job.config;
    cfg.render = read_render(f, dream ? std::nullopt : std::optional(RenderMode::textured_lit));
    if (!dream) cfg.lighting = read_lighting(f);
    cfg.views = read_sampling(f);
    if (dream) {
        cfg.lambda_dream = f.number("loss.dream", cfg.lambda_dream);
    } else {
        cfg.lambda_content = f.number("loss.content", cfg.lambda_content);
        cfg.lambda_style = f.number("loss.style", cfg.lambda_style);
        cfg.lambda_tv = f.number("loss.tv", cfg.lambda_tv);
    }
    cfg.steps = f.integer("optim.steps", cfg.steps);
    cfg.vertex_adam = read_adam(f, "optim.vertex_learning_rate", dream ? 5e-5 : 2.5e-4);
    cfg.texture_adam = read_adam(f, "optim.texture_learning_rate", dream ? 1e-2 : 5e-2);
    cfg.texture_size = f.integer("mesh.texture_size", cfg.texture_size);
    cfg.dump_every = f.integer("output.dump_every", 100);
    if (dream) cfg.render.mode = RenderMode::textured;
    cfg.validate();
    const std::string name = extractor_flag.empty() ? f.text("features.extractor", "toy") : extractor_flag;
    job.extractor = make_extractor(name);
    job.control = read_control(f, c, c.out);
    return job;
}

void write_texture_outputs(const fs::path& out, const TextureRunResult& r, bool dream) {
    std::string csv = dream ? "step,total,dream\n" : "step,total,content,style,tv\n";
    for (const TextureTraceRow& row : r.trace) {
        csv += std::to_string(row.step) + ',' + number(row.total);
        csv += dream ? ',' + number(row.style) : ',' + number(row.content) + ',' + number(row.style) + ',' + number(row.tv);
        csv += '\n';
    }
    write_text(out / "trace.csv", csv);
    save_obj(r.mesh, out / "mesh.obj");
    save_textures(*r.mesh.textures, out / "textures.ntex");
}

DumpFn dumper(const fs::path& out) {
    return [out](int step, const Image& image) { save_png(image, out / numbered("step_%05d.png", step)); };
}

int cmd_style(const Common& c, const std::string& mesh_path, const std::string& style_path,
              const std::string& extractor) {
    const JobFile f = open_job(c, "style-transfer");
    TextureJob job = read_texture_job(f, c, extractor, false);
    require_input(mesh_path);
    require_input(style_path);
    Mesh mesh = load_obj(mesh_path);
    attach_textures(f, mesh);
    Image style = load_png(style_path);
    if (style.channels() == 1) {
        Image rgb(style.width(), style.height(), 3);
        for (int r = 0; r < style.height(); ++r)
            for (int col = 0; col < style.width(); ++col)
                for (int ch = 0; ch < 3; ++ch) rgb(r, col, ch) = style(r, col);
        style = rgb;
    }
    const fs::path out = c.out;
    fs::create_directories(out);
    const TextureRunResult r = style_transfer(mesh, style, *job.extractor, job.config, job.control, dumper(out));
    write_texture_outputs(out, r, false);
    std::printf("style-transfer: steps=%d final_loss=%.6g\n", job.config.steps,
                r.trace.empty() ? 0.0 : r.trace.back().total);
    return 0;
}

int cmd_dream(const Common& c, const std::string& mesh_path, const std::string& extractor) {
    const JobFile f = open_job(c, "deepdream");
    TextureJob job = read_texture_job(f, c, extractor, true);
    require_input(mesh_path);
    Mesh mesh = load_obj(mesh_path);
    attach_textures(f, mesh);
    const fs::path out = c.out;
    fs::create_directories(out);
    const TextureRunResult r = deepdream(mesh, *job.extractor, job.config, job.control, dumper(out));
    write_texture_outputs(out, r, true);
    std::printf("deepdream: steps=%d final_loss=%.6g\n", job.config.steps,
                r.trace.empty() ? 0.0 : r.trace.back().total);
    return 0;
}

int cmd_voxel_iou(const Common& c, const std::string& a, const std::string& b, std::optional<int> resolution) {
    const JobFile f = open_job(c, "voxel-iou");
    const int res = resolution.value_or(f.integer("voxel.resolution", 32));
    if (res < kMinVoxelResolution)
        throw ValidationError("voxel resolution must be >= " + std::to_string(kMinVoxelResolution));
    require_input(a);
    require_input(b);
    std::printf("%.6f\n", voxel_iou(load_obj(a), load_obj(b), res));
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Differentiable triangle-mesh rendering and its applications"};
    app.require_subcommand(1);
    Common common;
    auto add_common = [&](CLI::App* sub, bool optimizer) {
        sub->add_option("--config", common.config, "Job file (INI)");
        sub->add_option("--seed", common.seed, "Seed for view and batch sampling");
        sub->add_option("--out", common.out, "Output directory");
        sub->add_option("--threads", common.threads, "Worker threads for the backward pass");
        if (optimizer) sub->add_option("--resume", common.resume, "Checkpoint to continue from");
    };

    std::string mesh, second, extractor;
    std::optional<int> resolution;

    CLI::App* render_cmd = app.add_subcommand("render", "Render a mesh to one PNG per viewpoint");
    render_cmd->add_option("mesh", mesh, "OBJ file")->required();
    add_common(render_cmd, false);

    CLI::App* fit_cmd = app.add_subcommand("fit-silhouette", "Fit a deformed sphere to silhouette masks");
    fit_cmd->add_option("targets", mesh, "Directory holding view_000.png, view_001.png, ...")->required();
    add_common(fit_cmd, true);

    CLI::App* style_cmd = app.add_subcommand("style-transfer", "Transfer an image style onto a mesh");
    style_cmd->add_option("mesh", mesh, "Content OBJ file")->required();
    style_cmd->add_option("style", second, "Style PNG")->required();
    style_cmd->add_option("--extractor", extractor, "Feature extractor name");
    add_common(style_cmd, true);

    CLI::App* dream_cmd = app.add_subcommand("deepdream", "Amplify extractor features on a mesh");
    dream_cmd->add_option("mesh", mesh, "OBJ file")->required();
    dream_cmd->add_option("--extractor", extractor, "Feature extractor name");
    add_common(dream_cmd, true);

    CLI::App* voxel_cmd = app.add_subcommand("voxel-iou", "Voxel IoU of two meshes");
    voxel_cmd->add_option("mesh_a", mesh, "First OBJ file")->required();
    voxel_cmd->add_option("mesh_b", second, "Second OBJ file")->required();
    voxel_cmd->add_option("--resolution", resolution, "Voxels per side (default 32)");
    add_common(voxel_cmd, false);

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 2;
    }

    try {
        if (render_cmd->parsed()) return cmd_render(common, mesh);
        if (fit_cmd->parsed()) return cmd_fit(common, mesh);
        if (style_cmd->parsed()) return cmd_style(common, mesh, second, extractor);
        if (dream_cmd->parsed()) return cmd_dream(common, mesh, extractor);
        if (voxel_cmd->parsed()) return cmd_voxel_iou(common, mesh, second, resolution);
    } catch (const ValidationError& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 2;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    }
    return 2;
}
