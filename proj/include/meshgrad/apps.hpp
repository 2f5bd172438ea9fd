#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "meshgrad/camera.hpp"
#include "meshgrad/error.hpp"
#include "meshgrad/features.hpp"
#include "meshgrad/image.hpp"
#include "meshgrad/optim.hpp"
#include "meshgrad/raster.hpp"

namespace meshgrad {

// Raised when a loss or gradient stops being finite; the run's last good
// checkpoint has been written by then if a checkpoint path was given.
class DivergenceError : public Error {
public:
    DivergenceError(const std::string& what, int step) : Error(what), step_(step) {}
    int step() const noexcept { return step_; }

private:
    int step_;
};

// Viewpoints drawn uniformly per step, or cycled from a fixed list when
// `fixed` is non-empty.
struct ViewSampler {
    std::vector<Viewpoint> fixed;
    double elevation_min = -10.0;
    double elevation_max = 50.0;
    double azimuth_min = 0.0;
    double azimuth_max = 360.0;
    double distance = 5.0;
    double field_of_view = 30.0;

    void validate() const;
};

// Evenly spaced azimuths at one elevation; index 0 at `azimuth_start`.
std::vector<Viewpoint> azimuth_ring(int count, double elevation, double azimuth_start = 0.0,
                                    double distance = 5.0, double field_of_view = 30.0);

struct RunControl {
    int threads = 1;
    std::uint64_t seed = 0;
    std::optional<std::filesystem::path> checkpoint;  // written on divergence and at the end
    std::optional<std::filesystem::path> resume;      // read before the first step
    int fail_at_step = -1;  // poison the gradient at this step (testing the divergence path)
};

struct FitSilhouetteConfig {
    RenderOptions render;  // mode is forced to silhouette
    std::vector<Viewpoint> views;
    double lambda_silhouette = 1.0;
    double lambda_smoothness = 0.0;
    int steps = 2000;
    int batch = 2;
    AdamHyper adam;
    int subdivision = 3;

    void validate() const;
};

struct FitTraceRow {
    int step = 0;
    double silhouette = 0.0;  // batch mean of the silhouette loss
    double smoothness = 0.0;
    double mean_iou = 0.0;    // batch mean IoU
};

struct FitResult {
    Mesh mesh;
    std::vector<FitTraceRow> trace;
    double mean_iou = 0.0;    // over all views after the last step
    double smoothness = 0.0;  // of the final mesh
};

// Optimizes a deformed icosphere so its silhouettes match `targets[i]` seen from
// `config.views[i]`.
FitResult fit_silhouette(const std::vector<Image>& targets, const FitSilhouetteConfig& config,
                         const RunControl& control = {});

// Mean silhouette IoU of `mesh` over the views against the targets.
double mean_silhouette_iou(const Mesh& mesh, const std::vector<Viewpoint>& views,
                           const std::vector<Image>& targets, const RenderOptions& options);

struct TextureRunConfig {
    RenderOptions render;
    Lighting lighting;
    ViewSampler views;
    double lambda_content = 1.0;
    double lambda_style = 1.0;
    double lambda_tv = 0.0;
    double lambda_dream = 1.0;
    int steps = 1000;
    AdamHyper vertex_adam;
    AdamHyper texture_adam;
    int texture_size = 4;
    int dump_every = 0;  // 0: no per-step renders

    void validate() const;
};

struct TextureTraceRow {
    int step = 0;
    double total = 0.0;
    double content = 0.0;
    double style = 0.0;
    double tv = 0.0;
};

struct TextureRunResult {
    Mesh mesh;  // with textures
    std::vector<TextureTraceRow> trace;
};

// Called every `dump_every` steps with the step index and the image rendered
// for that step.
using DumpFn = std::function<void(int step, const Image& image)>;

// Textures missing from `content` start as mid-gray cubes.
TextureRunResult style_transfer(const Mesh& content, const Image& style, const FeatureExtractor& extractor,
                                const TextureRunConfig& config, const RunControl& control = {},
                                const DumpFn& dump = {});

// Maximizes the squared feature norm of unlit renders, weighted by
// `lambda_dream`; the content and style weights are unused.
TextureRunResult deepdream(const Mesh& mesh, const FeatureExtractor& extractor, const TextureRunConfig& config,
                           const RunControl& control = {}, const DumpFn& dump = {});

}  // namespace meshgrad
