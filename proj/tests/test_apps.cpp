#include <doctest.h>

#include <filesystem>

#include "meshgrad/apps.hpp"
#include "meshgrad/losses.hpp"
#include "meshgrad/render.hpp"
#include "support.hpp"

using namespace meshgrad;
using namespace meshgrad::testing;

namespace {

RenderOptions small_render(RenderMode mode = RenderMode::silhouette) {
    RenderOptions o;
    o.image_size = 64;
    o.downsample_factor = 2;
    o.mode = mode;
    return o;
}

std::vector<Image> silhouettes(const Mesh& mesh, const std::vector<Viewpoint>& views, const RenderOptions& o) {
    std::vector<Image> out;
    for (const Viewpoint& v : views) {
        Image m = render(mesh, v, o).image;
        for (double& x : m.data()) x = x >= 0.5 ? 1.0 : 0.0;
        out.push_back(std::move(m));
    }
    return out;
}

FitSilhouetteConfig sphere_fit(int steps) {
    FitSilhouetteConfig c;
    c.render = small_render();
    c.views = azimuth_ring(8, 30.0);
    c.steps = steps;
    c.subdivision = 2;
    c.adam.learning_rate = 1e-3;
    return c;
}

TextureRunConfig texture_config(int steps) {
    TextureRunConfig c;
    c.render = small_render(RenderMode::textured_lit);
    c.steps = steps;
    c.vertex_adam.learning_rate = 2.5e-4;
    c.texture_adam.learning_rate = 5e-2;
    c.texture_size = 2;
    return c;
}

std::filesystem::path scratch(const std::string& name) {
    const auto dir = std::filesystem::temp_directory_path() / "meshgrad_test_apps";
    std::filesystem::create_directories(dir);
    return dir / name;
}

double feature_energy(const Mesh& mesh, const Viewpoint& v, const RenderOptions& o, const FeatureExtractor& ex) {
    return -deepdream_loss(render(mesh, v, o).image, ex).value;
}

}  // namespace

TEST_CASE("fitting targets of the undeformed sphere stays at the optimum") {
    // 64x64 masks as in the full-size runs; coarser masks cap the soft IoU below 0.98
    FitSilhouetteConfig c = sphere_fit(200);
    c.render.image_size = 128;
    c.subdivision = 3;
    c.adam.learning_rate = 1e-4;
    c.views = azimuth_ring(4, 30.0);
    c.batch = 4;
    const std::vector<Image> targets = silhouettes(generate_icosphere(c.subdivision), c.views, c.render);
    const FitResult r = fit_silhouette(targets, c);
    REQUIRE(r.trace.size() == 200);
    CHECK(r.trace.back().silhouette <= -0.98);
    CHECK(r.mean_iou >= 0.98);
    // the trace is non-increasing over consecutive 50-step windows
    double previous = std::numeric_limits<double>::infinity();
    for (std::size_t w = 0; w + 50 <= r.trace.size(); w += 50) {
        double mean = 0.0;
        for (std::size_t i = w; i < w + 50; ++i) mean += r.trace[i].silhouette / 50.0;
        CHECK(mean <= previous + 1e-12);
        previous = mean;
    }
}

TEST_CASE("fitting a shifted sphere improves the silhouette IoU") {
    FitSilhouetteConfig c = sphere_fit(60);
    Mesh shifted = generate_icosphere(c.subdivision);
    for (Vec3& v : shifted.vertices) v += Vec3(0.25, 0.1, 0.0);
    const std::vector<Image> targets = silhouettes(shifted, c.views, c.render);
    const double before = mean_silhouette_iou(generate_icosphere(c.subdivision), c.views, targets, c.render);
    const FitResult r = fit_silhouette(targets, c);
    CHECK(r.mean_iou > before + 0.05);
}

TEST_CASE("silhouette fitting validates its inputs") {
    FitSilhouetteConfig c = sphere_fit(5);
    const std::vector<Image> targets = silhouettes(generate_icosphere(2), c.views, c.render);
    CHECK_THROWS_AS(fit_silhouette({targets.begin(), targets.end() - 1}, c), ValidationError);
    std::vector<Image> wrong = targets;
    wrong[3] = Image(16, 16, 1);
    CHECK_THROWS_AS(fit_silhouette(wrong, c), ValidationError);
    wrong = targets;
    wrong[2](0, 0) = 0.5;
    CHECK_THROWS_AS(fit_silhouette(wrong, c), ValidationError);
    c.views.resize(1);
    CHECK_THROWS_AS(c.validate(), ValidationError);
    c = sphere_fit(0);
    CHECK_THROWS_AS(c.validate(), ValidationError);
    c = sphere_fit(5);
    c.lambda_smoothness = -1.0;
    CHECK_THROWS_AS(c.validate(), ValidationError);
}

TEST_CASE("silhouette fitting is deterministic for a seed and thread count does not matter") {
    FitSilhouetteConfig c = sphere_fit(8);
    c.batch = 3;
    Mesh target = generate_box(Vec3::Constant(0.7));
    const std::vector<Image> targets = silhouettes(target, c.views, c.render);
    const FitResult a = fit_silhouette(targets, c, RunControl{1, 7});
    const FitResult b = fit_silhouette(targets, c, RunControl{1, 7});
    const FitResult t = fit_silhouette(targets, c, RunControl{4, 7});
    CHECK(a.mesh.vertices == b.mesh.vertices);
    CHECK(a.mesh.vertices == t.mesh.vertices);
    for (std::size_t i = 0; i < a.trace.size(); ++i) CHECK(a.trace[i].silhouette == t.trace[i].silhouette);
}

TEST_CASE("divergence saves a checkpoint and a resumed run continues it") {
    FitSilhouetteConfig c = sphere_fit(10);
    const std::vector<Image> targets = silhouettes(generate_box(Vec3::Constant(0.7)), c.views, c.render);
    const auto ckpt = scratch("fit.nadm");
    std::filesystem::remove(ckpt);

    RunControl failing{1, 3};
    failing.checkpoint = ckpt;
    failing.fail_at_step = 5;
    try {
        fit_silhouette(targets, c, failing);
        FAIL("expected divergence");
    } catch (const DivergenceError& e) {
        CHECK(e.step() == 5);
        CHECK(std::string(e.what()).find("step 5") != std::string::npos);
    }
    REQUIRE(std::filesystem::exists(ckpt));

    RunControl resumed{1, 3};
    resumed.resume = ckpt;
    const FitResult continued = fit_silhouette(targets, c, resumed);
    CHECK(continued.trace.size() == 5);
    CHECK(continued.trace.front().step == 5);

    const FitResult straight = fit_silhouette(targets, c, RunControl{1, 3});
    // checkpoints store single precision, so the two runs agree closely but not bitwise
    CHECK(continued.trace.back().silhouette == doctest::Approx(straight.trace.back().silhouette).epsilon(1e-4));
    for (std::size_t i = 0; i < straight.mesh.vertex_count(); ++i)
        CHECK((continued.mesh.vertices[i] - straight.mesh.vertices[i]).norm() <= 1e-5);
    std::filesystem::remove(ckpt);
}

TEST_CASE("style transfer without a style term keeps the content vertices") {
    TextureRunConfig c = texture_config(15);
    c.lambda_style = 0.0;
    const Mesh content = generate_icosphere(2);
    const TextureRunResult r = style_transfer(content, Image(32, 32, 3, 0.5), EdgeFilterExtractor{}, c);
    for (std::size_t i = 0; i < content.vertex_count(); ++i)
        CHECK((r.mesh.vertices[i] - content.vertices[i]).norm() <= 1e-6);
    REQUIRE(r.mesh.textures);
    CHECK(r.mesh.textures->size() == content.face_count());
}

TEST_CASE("style transfer toward a render of the content mesh decreases the loss") {
    Random rng(17);
    Mesh painted = generate_icosphere(2);
    painted.textures = std::vector<TextureCube>(painted.face_count(), TextureCube(2));
    for (TextureCube& t : *painted.textures)
        for (Vec3& texel : t.texels()) texel = rng.point3(0.0, 1.0);
    TextureRunConfig c = texture_config(20);
    c.views.fixed = {Viewpoint{30, 20, 5, 30}};
    // toy features are small, so the style term is scaled up and Adam's
    // near-constant step lengths are shortened until descent is monotone
    c.lambda_style = 1e4;
    c.vertex_adam.learning_rate = 2.5e-5;
    c.texture_adam.learning_rate = 5e-3;
    const Image style = render(painted, c.views.fixed[0], c.render, c.lighting).image;
    const Mesh content = generate_icosphere(2);  // starts mid-gray
    const TextureRunResult r = style_transfer(content, style, EdgeFilterExtractor{}, c);
    REQUIRE(r.trace.size() == 20);
    for (std::size_t i = 1; i < r.trace.size(); ++i) {
        INFO("step ", i);
        CHECK(r.trace[i].total < r.trace[i - 1].total);
    }
    for (const TextureCube& t : *r.mesh.textures)
        for (const Vec3& texel : t.texels()) {
            CHECK(texel.minCoeff() >= 0.0);
            CHECK(texel.maxCoeff() <= 1.0);
        }
}

TEST_CASE("style transfer dumps renders at the requested interval") {
    TextureRunConfig c = texture_config(7);
    c.dump_every = 3;
    std::vector<int> dumped;
    style_transfer(generate_icosphere(1), Image(32, 32, 3, 0.5), EdgeFilterExtractor{}, c, {},
                   [&](int step, const Image& img) {
                       dumped.push_back(step);
                       CHECK(img.width() == 32);
                   });
    CHECK(dumped == std::vector<int>{0, 3, 6});
    c.render.mode = RenderMode::silhouette;
    CHECK_THROWS_AS(c.validate(), ValidationError);
}

TEST_CASE("deepdream with zero steps returns the input mesh") {
    TextureRunConfig c = texture_config(0);
    const Mesh m = generate_icosphere(2);
    const TextureRunResult r = deepdream(m, EdgeFilterExtractor{}, c);
    CHECK(r.mesh.vertices == m.vertices);
    CHECK(r.mesh.faces == m.faces);
    CHECK(r.trace.empty());
}

TEST_CASE("deepdream raises the feature energy at a held-out view") {
    TextureRunConfig c = texture_config(100);
    c.vertex_adam.learning_rate = 5e-5;
    c.texture_adam.learning_rate = 1e-2;
    const Mesh m = generate_icosphere(2);
    const EdgeFilterExtractor toy;
    const Viewpoint held_out{77, 12, 5, 30};
    RenderOptions unlit = c.render;
    unlit.mode = RenderMode::textured;
    Mesh start = m;
    start.textures = std::vector<TextureCube>(m.face_count(), TextureCube(c.texture_size));
    const double before = feature_energy(start, held_out, unlit, toy);
    const TextureRunResult r = deepdream(m, toy, c, RunControl{1, 11});
    CHECK(feature_energy(r.mesh, held_out, unlit, toy) > before);
}

TEST_CASE("deepdream aborts on a non-finite gradient with a checkpoint") {
    TextureRunConfig c = texture_config(6);
    const auto ckpt = scratch("dream.nadm");
    std::filesystem::remove(ckpt);
    RunControl failing{1, 2};
    failing.checkpoint = ckpt;
    failing.fail_at_step = 2;
    CHECK_THROWS_AS(deepdream(generate_icosphere(1), EdgeFilterExtractor{}, c, failing), DivergenceError);
    CHECK(std::filesystem::exists(ckpt));
    std::filesystem::remove(ckpt);
}

TEST_CASE("view sampling helpers") {
    const auto ring = azimuth_ring(24, 30.0);
    REQUIRE(ring.size() == 24);
    CHECK(ring[0].azimuth == 0.0);
    CHECK(ring[6].azimuth == 90.0);
    for (const Viewpoint& v : ring) CHECK(v.elevation == 30.0);
    CHECK_THROWS_AS(azimuth_ring(0, 30.0), ValidationError);
    ViewSampler s;
    CHECK_NOTHROW(s.validate());
    s.elevation_max = 95.0;
    CHECK_THROWS_AS(s.validate(), ValidationError);
}
