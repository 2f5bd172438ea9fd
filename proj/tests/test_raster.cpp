#include <doctest.h>

#include <filesystem>
#include <numbers>

#include "meshgrad/error.hpp"
#include "meshgrad/image.hpp"
#include "meshgrad/raster.hpp"
#include "meshgrad/render.hpp"
#include "support.hpp"

using namespace meshgrad;
using namespace meshgrad::testing;

namespace {

RenderOptions internal(int n, RenderMode mode = RenderMode::silhouette) {
    RenderOptions o;
    o.image_size = n;
    o.downsample_factor = 1;
    o.mode = mode;
    return o;
}

}  // namespace

TEST_CASE("barycentric coordinates") {
    const Vec2 a(0, 0), b(1, 0), c(0, 1);
    const Weights at_a = barycentric(a, a, b, c);
    CHECK(at_a[0] == 1.0);
    CHECK(at_a[1] == 0.0);
    CHECK(at_a[2] == 0.0);
    const Weights mid = barycentric((a + b + c) / 3.0, a, b, c);
    for (double w : mid) CHECK(w == doctest::Approx(1.0 / 3.0).epsilon(1e-14));
    const Weights q = barycentric(Vec2(0.25, 0.25), a, b, c);
    CHECK(q[0] == doctest::Approx(0.5).epsilon(1e-14));
    CHECK(q[1] == doctest::Approx(0.25).epsilon(1e-14));
    CHECK(q[2] == doctest::Approx(0.25).epsilon(1e-14));
    CHECK_THROWS_AS(barycentric(a, a, b, Vec2(2, 0)), ValidationError);
}

TEST_CASE("a screen-filling triangle covers every pixel") {
    const ScreenVertices s = make_screen(16, {Vec2(-20, -20), Vec2(60, -20), Vec2(-20, 60)}, {2, 2, 2});
    const std::vector<Face> faces{{0, 1, 2}};
    const RenderBuffers b = rasterize(s, faces, internal(16));
    for (int id : b.face_id) CHECK(id == 0);
}

TEST_CASE("the nearer of two overlapping triangles wins") {
    const ScreenVertices s = make_screen(16, {Vec2(0, 0), Vec2(16, 0), Vec2(0, 16), Vec2(2, 2), Vec2(14, 2), Vec2(2, 14)},
                                         {5, 5, 5, 3, 3, 3});
    const std::vector<Face> faces{{0, 1, 2}, {3, 4, 5}};
    const RenderBuffers b = rasterize(s, faces, internal(16));
    CHECK(b.face_id[b.index(4, 4)] == 1);
    CHECK(b.face_id[b.index(0, 0)] == 0);
    // equal depths: the lower index is kept
    ScreenVertices tie = s;
    tie.depth = {3, 3, 3, 3, 3, 3};
    CHECK(rasterize(tie, faces, internal(16)).face_id[b.index(4, 4)] == 0);
}

TEST_CASE("no faces gives background everywhere") {
    const ScreenVertices s = make_screen(8, {}, {});
    RenderOptions o = internal(8, RenderMode::textured);
    o.background = Vec3(0.2, 0.4, 0.6);
    const std::vector<TextureCube> textures;
    Shading sh;
    sh.textures = &textures;
    const RenderBuffers b = rasterize(s, {}, o, sh);
    for (int r = 0; r < 8; ++r)
        for (int c = 0; c < 8; ++c) {
            CHECK(b.face_id[b.index(r, c)] == -1);
            CHECK(b.image(r, c, 1) == 0.4);
        }
}

TEST_CASE("rasterize matches the brute-force oracle on random scenes") {
    Random rng(21);
    for (int scene_index = 0; scene_index < 50; ++scene_index) {
        const Scene sc = random_scene(rng, 32, rng.integer(1, 10), -4.0, 36.0);
        const RenderBuffers b = rasterize(sc.screen, sc.faces, internal(32));
        const OracleBuffers o = brute_force_raster(sc.screen, sc.faces, 32);
        for (std::size_t i = 0; i < b.face_id.size(); ++i) {
            REQUIRE(b.face_id[i] == o.face_id[i]);
            if (o.face_id[i] >= 0) CHECK(std::abs(b.depth[i] - o.depth[i]) <= 1e-6);
        }
    }
}

TEST_CASE("buffer invariants hold on random scenes") {
    Random rng(22);
    for (int scene_index = 0; scene_index < 20; ++scene_index) {
        const Scene sc = random_scene(rng, 24, 6, 0.0, 24.0);
        const RenderBuffers b = rasterize(sc.screen, sc.faces, internal(24));
        for (int r = 0; r < 24; ++r)
            for (int c = 0; c < 24; ++c) {
                const std::size_t i = b.index(r, c);
                const double v = b.image(r, c);
                CHECK((v == 0.0 || v == 1.0));
                const bool covered = b.face_id[i] >= 0;
                CHECK(covered == std::isfinite(b.depth[i]));
                CHECK((v == 1.0) == covered);
                if (!covered) continue;
                const Weights& w = b.bary[i];
                CHECK(std::abs(w[0] + w[1] + w[2] - 1.0) <= 1e-6);
                for (double x : w) CHECK(x >= -1e-6);
                const Face& f = sc.faces[b.face_id[i]];
                const double z = w[0] * sc.screen.depth[f[0]] + w[1] * sc.screen.depth[f[1]] + w[2] * sc.screen.depth[f[2]];
                CHECK(std::abs(z - b.depth[i]) <= 1e-6);
            }
    }
}

TEST_CASE("shared edges through pixel centers are covered exactly once") {
    // diagonal and axis-aligned shared edges placed exactly on pixel centers
    const std::vector<Vec2> xy{Vec2(0.5, 0.5), Vec2(8.5, 0.5), Vec2(8.5, 8.5), Vec2(0.5, 8.5)};
    const std::vector<Face> faces{{0, 1, 2}, {0, 2, 3}};
    const std::vector<Face> flipped{{0, 2, 1}, {0, 3, 2}};  // both orientations
    for (const auto* fs : {&faces, &flipped}) {
        const ScreenVertices s = make_screen(10, xy, {1, 1, 1, 1});
        std::vector<int> count(100, 0);
        for (std::size_t j = 0; j < fs->size(); ++j) {
            const std::vector<Face> one{(*fs)[j]};
            const RenderBuffers b = rasterize(s, one, internal(10));
            for (std::size_t i = 0; i < 100; ++i) count[i] += b.face_id[i] >= 0;
        }
        for (int r = 0; r < 10; ++r)
            for (int c = 0; c < 10; ++c) {
                const bool interior = r >= 1 && r <= 7 && c >= 1 && c <= 7;
                if (interior) CHECK(count[r * 10 + c] == 1);
                if (r == 9 || c == 9) CHECK(count[r * 10 + c] == 0);
            }
    }
}

TEST_CASE("texture sampling") {
    TextureCube cube(3, Vec3::Zero());
    cube.at(2, 0, 0) = Vec3(0.9, 0.1, 0.3);
    const Vec3 corner = sample_texture(cube, {1.0, 0.0, 0.0});
    CHECK((corner - Vec3(0.9, 0.1, 0.3)).norm() == 0.0);

    const TextureCube flat(4, Vec3(0.2, 0.5, 0.7));
    Random rng(2);
    for (int i = 0; i < 10; ++i) {
        const double a = rng.uniform(0, 1), b = rng.uniform(0, 1 - a);
        CHECK((sample_texture(flat, {a, b, 1 - a - b}) - Vec3(0.2, 0.5, 0.7)).norm() <= 1e-15);
    }

    TextureCube two(2, Vec3::Zero());
    two.at(1, 1, 1) = Vec3::Ones();
    CHECK(sample_texture(two, {0.5, 0.25, 0.25})[0] == doctest::Approx(0.03125).epsilon(1e-15));
}

TEST_CASE("lighting formula") {
    const Vec3 color(0.3, 0.6, 0.9);
    Lighting l;  // ambient 0.5, directional 0.5, direction +y
    CHECK((apply_lighting(color, Vec3::UnitY(), l) - color).norm() == 0.0);
    CHECK((apply_lighting(color, Vec3::UnitX(), l) - 0.5 * color).norm() == 0.0);
    l.directional = 0.0;
    l.ambient = 0.8;
    CHECK((apply_lighting(color, Vec3::UnitZ(), l) - 0.8 * color).norm() <= 1e-16);
    l.ambient = 2.0;
    CHECK(apply_lighting(color, Vec3::UnitZ(), l)[2] == 1.0);
    Lighting bad;
    bad.direction = Vec3(1, 1, 0);
    CHECK_THROWS_AS(bad.validate(), ValidationError);
}

TEST_CASE("downsampling") {
    const Image flat(8, 8, 3, 0.25);
    const Image down = downsample(flat, 4);
    CHECK(down.width() == 2);
    for (double v : down.data()) CHECK(v == 0.25);

    Image block(2, 2, 1);
    block(1, 0) = 1.0;
    block(1, 1) = 1.0;
    CHECK(downsample(block, 2)(0, 0) == 0.5);

    Image ramp(4, 4, 1);
    for (int r = 0; r < 4; ++r)
        for (int c = 0; c < 4; ++c) ramp(r, c) = 4 * r + c;
    const Image rd = downsample(ramp, 2);
    CHECK(rd(0, 0) == 2.5);  // (0 + 1 + 4 + 5) / 4
    CHECK(rd(0, 1) == 4.5);
    CHECK(rd(1, 0) == 10.5);
    CHECK(rd(1, 1) == 12.5);

    CHECK_THROWS_AS(downsample(Image(6, 6, 1), 4), ValidationError);
}

TEST_CASE("downsample_backward is the adjoint of downsample") {
    Random rng(4);
    Image x(12, 12, 3), y(4, 4, 3);
    for (double& v : x.data()) v = rng.uniform(-1, 1);
    for (double& v : y.data()) v = rng.uniform(-1, 1);
    const Image dx = downsample(x, 3);
    const Image dty = downsample_backward(y, 3);
    double lhs = 0.0, rhs = 0.0;
    for (std::size_t i = 0; i < y.size(); ++i) lhs += dx.data()[i] * y.data()[i];
    for (std::size_t i = 0; i < x.size(); ++i) rhs += x.data()[i] * dty.data()[i];
    CHECK(lhs == doctest::Approx(rhs).epsilon(1e-12));
}

TEST_CASE("render options validation") {
    RenderOptions o;
    o.image_size = 100;
    o.downsample_factor = 3;
    CHECK_THROWS_AS(o.validate(), ValidationError);
    CHECK_THROWS_AS(parse_render_mode("phong"), ValidationError);
    CHECK(parse_render_mode(to_string(RenderMode::textured_lit)) == RenderMode::textured_lit);
}

TEST_CASE("empty mesh renders the background") {
    RenderOptions o;
    o.image_size = 16;
    const RenderResult r = render(Mesh{}, Viewpoint{}, o);
    CHECK(r.image.width() == 8);
    for (double v : r.image.data()) CHECK(v == 0.0);
}

TEST_CASE("a sphere silhouette is a disc of the projected radius") {
    const Mesh sphere = generate_icosphere(4);
    const Viewpoint v{30.0, 15.0, 5.0, 30.0};
    const int n = 128;
    const RenderResult r = render(sphere, v, internal(n));
    double covered = 0.0;
    for (double x : r.image.data()) covered += x;
    // the silhouette cone has half-angle asin(R/d); on the image plane its radius is f R / sqrt(d^2 - R^2)
    const double focal = 0.5 * n / std::tan(15.0 * std::numbers::pi / 180.0);
    const double radius = focal / std::sqrt(25.0 - 1.0);
    const double area = std::numbers::pi * radius * radius;
    CHECK(std::abs(covered - area) <= 0.03 * area);
}

TEST_CASE("sphere silhouettes 90 degrees apart agree") {
    const Mesh sphere = generate_icosphere(3);
    const int n = 64;
    const RenderResult a = render(sphere, Viewpoint{0.0, 0.0, 5.0, 30.0}, internal(n));
    const RenderResult b = render(sphere, Viewpoint{90.0, 0.0, 5.0, 30.0}, internal(n));
    int differing = 0;
    for (std::size_t i = 0; i < a.image.size(); ++i) differing += a.image.data()[i] != b.image.data()[i];
    CHECK(differing <= n);
}

TEST_CASE("forward output does not depend on running the backward pass") {
    Mesh m = generate_icosphere(2);
    m.textures = std::vector<TextureCube>(m.face_count(), TextureCube(2, Vec3(0.3, 0.6, 0.9)));
    RenderOptions o;
    o.image_size = 32;
    o.mode = RenderMode::textured_lit;
    const Viewpoint v{10.0, 20.0, 5.0, 30.0};
    const RenderResult first = render(m, v, o);
    Image grad(first.image.width(), first.image.height(), 3, 0.5);
    backward_render(m, v, o, Lighting{}, first, grad);
    const RenderResult second = render(m, v, o);
    CHECK(first.image == second.image);
    CHECK(first.buffers.face_id == second.buffers.face_id);
    CHECK(first.buffers.depth == second.buffers.depth);
}

TEST_CASE("textured modes need textures and normals") {
    const Mesh m = generate_icosphere(0);
    RenderOptions o;
    o.image_size = 16;
    o.mode = RenderMode::textured;
    CHECK_THROWS_AS(render(m, Viewpoint{}, o), ValidationError);
}

TEST_CASE("PNG round trip and mask threshold") {
    const auto dir = std::filesystem::temp_directory_path() / "meshgrad_png_test";
    std::filesystem::create_directories(dir);
    Image rgb(5, 3, 3);
    for (int r = 0; r < 3; ++r)
        for (int c = 0; c < 5; ++c)
            for (int ch = 0; ch < 3; ++ch) rgb(r, c, ch) = (r * 5 + c + ch * 7) % 16 / 15.0;
    save_png(rgb, dir / "rgb.png");
    const Image back = load_png(dir / "rgb.png");
    REQUIRE(back.same_shape(rgb));
    for (std::size_t i = 0; i < rgb.size(); ++i) CHECK(std::abs(back.data()[i] - rgb.data()[i]) <= 0.5 / 255.0 + 1e-12);

    Image gray(2, 1, 1);
    gray(0, 0) = 127.0 / 255.0;
    gray(0, 1) = 128.0 / 255.0;
    save_png(gray, dir / "gray.png");
    const Image mask = load_mask_png(dir / "gray.png");
    CHECK(mask(0, 0) == 0.0);
    CHECK(mask(0, 1) == 1.0);
    CHECK_THROWS_AS(load_png(dir / "missing.png"), Error);
    std::filesystem::remove_all(dir);
}
