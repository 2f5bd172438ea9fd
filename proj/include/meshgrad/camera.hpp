#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "meshgrad/mesh.hpp"

namespace meshgrad {

// Camera on a sphere around the origin, always looking at the origin with +y up.
// Angles in degrees. Azimuth 0 places the camera on +z; azimuth 90 on +x.
struct Viewpoint {
    double azimuth = 0.0;
    double elevation = 0.0;
    double distance = 5.0;
    double field_of_view = 30.0;

    // distance > 0, 0 < fov < 180, |elevation| < 90 (the up vector must not be
    // parallel to the viewing direction).
    void validate() const;
};

// Orthonormal look-at frame. Camera coordinates are (right, up, forward)
// components of (p - eye); forward depth is positive in front of the camera.
struct CameraFrame {
    Vec3 eye;
    Vec3 right;
    Vec3 up;
    Vec3 forward;
    double focal = 1.0;  // pixels per unit of (x / depth)
    double center = 0.0; // image_size / 2

    static CameraFrame from(const Viewpoint& view, int image_size);
};

// Vertices closer than this (along the view axis) are flagged as culled.
inline constexpr double kNearPlane = 1e-6;

struct ScreenVertices {
    int image_size = 0;
    std::vector<Vec2> xy;       // pixel coordinates, y grows downward
    std::vector<double> depth;  // camera-space depth
    std::vector<std::uint8_t> visible;

    std::size_t size() const noexcept { return xy.size(); }
};

// Look-at view transform, symmetric perspective projection and viewport
// mapping onto [0, image_size]^2.
ScreenVertices transform_to_screen(std::span<const Vec3> vertices, const Viewpoint& view,
                                   int image_size);

// Jacobian-transpose product of transform_to_screen. `grad_depth` may be empty.
// Culled vertices receive zero gradient.
std::vector<Vec3> transform_backward(std::span<const Vec3> vertices, const Viewpoint& view,
                                     int image_size, std::span<const Vec2> grad_xy,
                                     std::span<const double> grad_depth = {});

}  // namespace meshgrad
