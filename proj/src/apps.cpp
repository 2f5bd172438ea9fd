#include "meshgrad/apps.hpp"

#include <cmath>
#include <limits>
#include <numeric>
#include <algorithm>
#include <random>

#include "meshgrad/losses.hpp"
#include "meshgrad/render.hpp"

namespace meshgrad {

namespace {

void require_weight(double w, const char* name) {
    if (!(w >= 0.0) || !std::isfinite(w)) throw ValidationError(std::string(name) + " must be a finite value >= 0");
}

std::vector<double> flatten(std::span<const Vec3> v) {
    std::vector<double> out(3 * v.size());
    for (std::size_t i = 0; i < v.size(); ++i)
        for (int k = 0; k < 3; ++k) out[3 * i + k] = v[i][k];
    return out;
}

void unflatten(std::span<const double> flat, std::span<Vec3> v) {
    for (std::size_t i = 0; i < v.size(); ++i)
        for (int k = 0; k < 3; ++k) v[i][k] = flat[3 * i + k];
}

std::vector<double> flatten(const std::vector<TextureCube>& textures) {
    std::vector<double> out;
    for (const TextureCube& t : textures) {
        const auto flat = flatten(t.texels());
        out.insert(out.end(), flat.begin(), flat.end());
    }
    return out;
}

void unflatten(std::span<const double> flat, std::vector<TextureCube>& textures) {
    std::size_t at = 0;
    for (TextureCube& t : textures) {
        unflatten(flat.subspan(at, 3 * t.texel_count()), t.texels());
        at += 3 * t.texel_count();
    }
}

bool all_finite(std::span<const double> v) {
    for (double x : v)
        if (!std::isfinite(x)) return false;
    return true;
}

void restore(std::span<ParamBlock> blocks, const RunControl& control) {
    if (!control.resume) return;
    load_checkpoint(blocks, *control.resume);
}

[[noreturn]] void diverge(std::span<const ParamBlock> blocks, const RunControl& control, int step,
                          const std::string& what) {
    std::string msg = "optimization diverged at step " + std::to_string(step) + ": " + what;
    if (control.checkpoint) {
        save_checkpoint(blocks, *control.checkpoint);
        msg += "; last good state saved to '" + control.checkpoint->string() + "'";
    }
    throw DivergenceError(msg, step);
}

// `count` distinct indices from [0, n), or all of them when count >= n.
std::vector<int> sample_indices(int n, int count, std::mt19937_64& rng) {
    std::vector<int> idx(n);
    std::iota(idx.begin(), idx.end(), 0);
    if (count >= n) return idx;
    for (int i = 0; i < count; ++i) {
        std::uniform_int_distribution<int> pick(i, n - 1);
        std::swap(idx[i], idx[pick(rng)]);
    }
    idx.resize(count);
    return idx;
}

Viewpoint sample_view(const ViewSampler& s, int step, std::mt19937_64& rng) {
    if (!s.fixed.empty()) return s.fixed[static_cast<std::size_t>(step) % s.fixed.size()];
    std::uniform_real_distribution<double> el(s.elevation_min, s.elevation_max);
    std::uniform_real_distribution<double> az(s.azimuth_min, s.azimuth_max);
    Viewpoint v;
    v.elevation = el(rng);
    v.azimuth = az(rng);
    v.distance = s.distance;
    v.field_of_view = s.field_of_view;
    return v;
}

// Shared loop of style transfer and DeepDream. `image_loss` returns the
// weighted image-space value and fills its gradient, plus the trace entries.
using ImageLossFn = std::function<double(const Image& image, Image& grad, TextureTraceRow& row)>;

TextureRunResult optimize_textured(const Mesh& start, const std::vector<Vec3>* content_reference,
                                   const TextureRunConfig& config, const RunControl& control,
                                   const ImageLossFn& image_loss, const DumpFn& dump) {
    Mesh mesh = start;
    mesh.validate();
    if (mesh.faces.empty()) throw ValidationError("mesh has no faces");
    if (!mesh.textures)
        mesh.textures = std::vector<TextureCube>(mesh.faces.size(), TextureCube(config.texture_size));
    const std::vector<TextureCube>& textures = *mesh.textures;
    for (const TextureCube& t : textures)
        if (t.size() != textures.front().size()) throw ValidationError("all texture cubes must share one size");

    std::vector<ParamBlock> blocks;
    blocks.emplace_back("vertices", flatten(mesh.vertices), config.vertex_adam);
    blocks.emplace_back("textures", flatten(textures), config.texture_adam);
    restore(blocks, control);

    TextureRunResult result;
    std::mt19937_64 rng(control.seed);
    const int start_step = static_cast<int>(blocks[0].state.step);
    // replay the view draws of the steps already taken
    for (int s = 0; s < start_step; ++s) sample_view(config.views, s, rng);

    for (int step = start_step; step < config.steps; ++step) {
        unflatten(blocks[0].values, mesh.vertices);
        unflatten(blocks[1].values, *mesh.textures);
        const Viewpoint view = sample_view(config.views, step, rng);
        const RenderResult r = render(mesh, view, config.render, config.lighting);
        if (dump && config.dump_every > 0 && step % config.dump_every == 0) dump(step, r.image);

        TextureTraceRow row;
        row.step = step;
        Image grad_image(r.image.width(), r.image.height(), r.image.channels());
        row.total = image_loss(r.image, grad_image, row);
        std::vector<Vec3> grad_vertices(mesh.vertices.size(), Vec3::Zero());
        if (content_reference) {
            const auto content = content_loss(mesh.vertices, *content_reference);
            row.content = content.value;
            row.total += config.lambda_content * content.value;
            for (std::size_t i = 0; i < grad_vertices.size(); ++i)
                grad_vertices[i] = config.lambda_content * content.gradient[i];
        }
        const GradientSet g = backward_render(mesh, view, config.render, config.lighting, r, grad_image,
                                              BackwardOptions{control.threads, nullptr});
        for (std::size_t i = 0; i < grad_vertices.size(); ++i) grad_vertices[i] += g.d_object_vertices[i];
        if (step == control.fail_at_step) grad_vertices[0].x() = std::numeric_limits<double>::quiet_NaN();
        const std::vector<double> gv = flatten(grad_vertices);
        const std::vector<double> gt = flatten(g.d_texels);
        if (!std::isfinite(row.total)) diverge(blocks, control, step, "loss is not finite");
        if (!all_finite(gv)) diverge(blocks, control, step, "vertex gradient is not finite");
        if (!all_finite(gt)) diverge(blocks, control, step, "texture gradient is not finite");

        adam_step(blocks[0].state, blocks[0].values, gv, blocks[0].name);
        adam_step(blocks[1].state, blocks[1].values, gt, blocks[1].name);
        for (double& x : blocks[1].values) x = std::clamp(x, 0.0, 1.0);
        result.trace.push_back(row);
    }
    unflatten(blocks[0].values, mesh.vertices);
    unflatten(blocks[1].values, *mesh.textures);
    if (control.checkpoint) save_checkpoint(blocks, *control.checkpoint);
    result.mesh = std::move(mesh);
    return result;
}

}  // namespace

void ViewSampler::validate() const {
    for (const Viewpoint& v : fixed) v.validate();
    if (fixed.empty()) {
        if (!(elevation_min <= elevation_max) || !(azimuth_min <= azimuth_max))
            throw ValidationError("view sampling ranges must satisfy min <= max");
        Viewpoint probe{azimuth_min, elevation_min, distance, field_of_view};
        probe.validate();
        probe.elevation = elevation_max;
        probe.validate();
    }
}

std::vector<Viewpoint> azimuth_ring(int count, double elevation, double azimuth_start, double distance,
                                    double field_of_view) {
    if (count < 1) throw ValidationError("need at least one azimuth");
    std::vector<Viewpoint> out;
    for (int i = 0; i < count; ++i) {
        Viewpoint v{azimuth_start + 360.0 * i / count, elevation, distance, field_of_view};
        v.validate();
        out.push_back(v);
    }
    return out;
}

void FitSilhouetteConfig::validate() const {
    render.validate();
    if (views.size() < 2) throw ValidationError("silhouette fitting needs at least two viewpoints");
    for (const Viewpoint& v : views) v.validate();
    require_weight(lambda_silhouette, "silhouette weight");
    require_weight(lambda_smoothness, "smoothness weight");
    if (steps < 1) throw ValidationError("step count must be >= 1");
    if (batch < 1) throw ValidationError("batch size must be >= 1");
    adam.validate();
    if (subdivision < 0 || subdivision > kMaxIcosphereLevel)
        throw ValidationError("subdivision level must lie in [0, " + std::to_string(kMaxIcosphereLevel) + "]");
}

void TextureRunConfig::validate() const {
    render.validate();
    if (render.mode == RenderMode::silhouette) throw ValidationError("texture optimization needs a textured render");
    lighting.validate();
    views.validate();
    require_weight(lambda_content, "content weight");
    require_weight(lambda_style, "style weight");
    require_weight(lambda_tv, "total variation weight");
    require_weight(lambda_dream, "dream weight");
    if (steps < 0) throw ValidationError("step count must be >= 0");
    vertex_adam.validate();
    texture_adam.validate();
    if (texture_size < 2) throw ValidationError("texture size must be >= 2");
    if (dump_every < 0) throw ValidationError("dump interval must be >= 0");
}

double mean_silhouette_iou(const Mesh& mesh, const std::vector<Viewpoint>& views,
                           const std::vector<Image>& targets, const RenderOptions& options) {
    RenderOptions opt = options;
    opt.mode = RenderMode::silhouette;
    double sum = 0.0;
    for (std::size_t i = 0; i < views.size(); ++i) sum += mask_iou(render(mesh, views[i], opt).image, targets[i]);
    return sum / static_cast<double>(views.size());
}

FitResult fit_silhouette(const std::vector<Image>& targets, const FitSilhouetteConfig& config,
                         const RunControl& control) {
    config.validate();
    RenderOptions opt = config.render;
    opt.mode = RenderMode::silhouette;
    if (targets.size() != config.views.size())
        throw ValidationError(std::to_string(targets.size()) + " target masks for " +
                              std::to_string(config.views.size()) + " viewpoints");
    const int out = opt.output_size();
    for (std::size_t i = 0; i < targets.size(); ++i)
        if (targets[i].width() != out || targets[i].height() != out || targets[i].channels() != 1)
            throw ValidationError("target mask " + std::to_string(i) + " is not a " + std::to_string(out) + "x" +
                                  std::to_string(out) + " mask");
    for (std::size_t i = 0; i < targets.size(); ++i)
        for (double x : targets[i].data())
            if (x != 0.0 && x != 1.0) throw ValidationError("target mask " + std::to_string(i) + " is not binary");

    SphereDeformation deformation(generate_icosphere(config.subdivision));
    const EdgeAdjacency adjacency = edge_adjacency(deformation.base);
    const int n = static_cast<int>(config.views.size());
    const int batch = std::min(config.batch, n);

    std::vector<ParamBlock> blocks;
    blocks.emplace_back("local_bias", std::vector<double>(3 * deformation.base.vertex_count(), 0.0), config.adam);
    blocks.emplace_back("global_bias", std::vector<double>(3, 0.0), config.adam);
    restore(blocks, control);

    FitResult result;
    std::mt19937_64 rng(control.seed);
    const int start_step = static_cast<int>(blocks[0].state.step);
    for (int s = 0; s < start_step; ++s) sample_indices(n, batch, rng);

    for (int step = start_step; step < config.steps; ++step) {
        unflatten(blocks[0].values, deformation.local_bias);
        deformation.global_bias = Vec3(blocks[1].values[0], blocks[1].values[1], blocks[1].values[2]);
        const Mesh mesh = deformation.realize();

        FitTraceRow row;
        row.step = step;
        std::vector<Vec3> grad_vertices(mesh.vertex_count(), Vec3::Zero());
        for (int i : sample_indices(n, batch, rng)) {
            const RenderResult r = render(mesh, config.views[i], opt);
            LossValue<Image> loss = silhouette_loss(r.image, targets[i]);
            row.silhouette += loss.value / batch;
            row.mean_iou += -loss.value / batch;
            for (double& g : loss.gradient.data()) g *= config.lambda_silhouette / batch;
            const GradientSet g = backward_render(mesh, config.views[i], opt, {}, r, loss.gradient,
                                                  BackwardOptions{control.threads, nullptr});
            for (std::size_t v = 0; v < grad_vertices.size(); ++v) grad_vertices[v] += g.d_object_vertices[v];
        }
        const auto smooth = smoothness_loss(mesh.vertices, adjacency);
        row.smoothness = smooth.value;
        if (config.lambda_smoothness > 0.0)
            for (std::size_t v = 0; v < grad_vertices.size(); ++v)
                grad_vertices[v] += config.lambda_smoothness * smooth.gradient[v];
        if (step == control.fail_at_step) grad_vertices[0].x() = std::numeric_limits<double>::quiet_NaN();

        std::vector<Vec3> grad_local;
        Vec3 grad_global;
        deformation.realize_backward(grad_vertices, grad_local, grad_global);
        const std::vector<double> gb = flatten(grad_local);
        const std::vector<double> gc{grad_global.x(), grad_global.y(), grad_global.z()};
        if (!std::isfinite(row.silhouette) || !std::isfinite(row.smoothness))
            diverge(blocks, control, step, "loss is not finite");
        if (!all_finite(gb) || !all_finite(gc)) diverge(blocks, control, step, "vertex gradient is not finite");

        adam_step(blocks[0].state, blocks[0].values, gb, blocks[0].name);
        adam_step(blocks[1].state, blocks[1].values, gc, blocks[1].name);
        result.trace.push_back(row);
    }

    unflatten(blocks[0].values, deformation.local_bias);
    deformation.global_bias = Vec3(blocks[1].values[0], blocks[1].values[1], blocks[1].values[2]);
    result.mesh = deformation.realize();
    result.mean_iou = mean_silhouette_iou(result.mesh, config.views, targets, opt);
    result.smoothness = smoothness_loss(result.mesh.vertices, adjacency).value;
    if (control.checkpoint) save_checkpoint(blocks, *control.checkpoint);
    return result;
}

TextureRunResult style_transfer(const Mesh& content, const Image& style, const FeatureExtractor& extractor,
                                const TextureRunConfig& config, const RunControl& control, const DumpFn& dump) {
    config.validate();
    const std::vector<Eigen::MatrixXd> grams = style_grams(style, extractor);
    const std::vector<Vec3> reference = content.vertices;
    const ImageLossFn loss = [&](const Image& image, Image& grad, TextureTraceRow& row) {
        double total = 0.0;
        if (config.lambda_style > 0.0) {
            const auto s = style_loss(image, grams, extractor);
            row.style = s.value;
            total += config.lambda_style * s.value;
            for (std::size_t i = 0; i < grad.size(); ++i) grad.data()[i] += config.lambda_style * s.gradient.data()[i];
        }
        if (config.lambda_tv > 0.0) {
            const auto t = total_variation(image);
            row.tv = t.value;
            total += config.lambda_tv * t.value;
            for (std::size_t i = 0; i < grad.size(); ++i) grad.data()[i] += config.lambda_tv * t.gradient.data()[i];
        }
        return total;
    };
    return optimize_textured(content, &reference, config, control, loss, dump);
}

TextureRunResult deepdream(const Mesh& mesh, const FeatureExtractor& extractor, const TextureRunConfig& config,
                           const RunControl& control, const DumpFn& dump) {
    TextureRunConfig cfg = config;
    cfg.render.mode = RenderMode::textured;
    cfg.validate();
    const ImageLossFn loss = [&](const Image& image, Image& grad, TextureTraceRow& row) {
        const auto d = deepdream_loss(image, extractor);
        row.style = d.value;
        for (std::size_t i = 0; i < grad.size(); ++i) grad.data()[i] = cfg.lambda_dream * d.gradient.data()[i];
        return cfg.lambda_dream * d.value;
    };
    return optimize_textured(mesh, nullptr, cfg, control, loss, dump);
}

}  // namespace meshgrad
