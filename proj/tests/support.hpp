#pragma once

#include <array>
#include <cmath>
#include <functional>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "meshgrad/camera.hpp"
#include "meshgrad/raster.hpp"
#include "meshgrad/raster_backward.hpp"

namespace meshgrad::testing {

// |a - b| <= rel * max(|a|, |b|) + floor
inline bool close(double a, double b, double rel, double floor = 1e-9) {
    return std::abs(a - b) <= rel * std::max(std::abs(a), std::abs(b)) + floor;
}

class Random {
public:
    explicit Random(std::uint64_t seed) : gen_(seed) {}
    double uniform(double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(gen_); }
    int integer(int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(gen_); }
    Vec2 point2(double lo, double hi) { return {uniform(lo, hi), uniform(lo, hi)}; }
    Vec3 point3(double lo, double hi) { return {uniform(lo, hi), uniform(lo, hi), uniform(lo, hi)}; }
    std::mt19937_64& engine() { return gen_; }

private:
    std::mt19937_64 gen_;
};

// Screen-space scene built directly from 2-D positions and depths.
ScreenVertices make_screen(int image_size, const std::vector<Vec2>& xy, const std::vector<double>& depth);

// Random triangle soup: `faces` triangles with vertices in [lo, hi]^2 and depths in [1, 10].
struct Scene {
    ScreenVertices screen;
    std::vector<Face> faces;
};
Scene random_scene(Random& rng, int image_size, int faces, double lo, double hi);

// Every face tested at every pixel center with weights from Cramer's rule.
struct OracleBuffers {
    std::vector<int> face_id;
    std::vector<double> depth;
};
OracleBuffers brute_force_raster(const ScreenVertices& screen, std::span<const Face> faces, int image_size);

// Point strictly inside triangle (a, b, c) of either orientation; weights via
// a 2x2 linear solve.
bool inside_triangle(const Vec2& p, const Vec2& a, const Vec2& b, const Vec2& c, double* weights = nullptr);

// Collision found by stepping one vertex coordinate in 1e-3 increments until
// coverage of the pixel center flips, refined by bisection. Stepping ends at
// `range` or once every edge function has passed its root.
struct ScanCross {
    int direction = 0;
    bool inside = false;
    double position = 0.0;
    double distance = 0.0;
    double color_change = 0.0;  // single white triangle on black
};
std::vector<ScanCross> scan_cross_points(const std::array<Vec2, 3>& tri, int slot, Axis axis, const Vec2& center,
                                         double step = 1e-3, double range = 4096.0);

// Empty when the analytic and scanned cross points agree within `rel`
// (position, distance and color change); otherwise a description. Analytic
// points farther than `reach` cannot be seen by the scan; they are skipped and
// counted in `unreachable`.
std::string compare_cross_points(std::vector<CrossPoint> analytic, std::vector<ScanCross> scanned, double rel,
                                 double reach = 4096.0, int* unreachable = nullptr);

// Surrogate gradient of one vertex coordinate of a single white triangle on
// black, assembled from scanned cross points and the gating rule.
double scan_vertex_gradient(const std::array<Vec2, 3>& tri, int slot, Axis axis, int image_size, const Image& grad);

// Central differences of f at x along every coordinate listed in `probe`.
std::vector<double> central_differences(const std::function<double(std::span<const double>)>& f,
                                        std::vector<double> x, std::span<const std::size_t> probe, double step);

}  // namespace meshgrad::testing
