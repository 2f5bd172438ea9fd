#include "meshgrad/camera.hpp"

#include <cmath>
#include <numbers>
#include <string>

#include <Eigen/Geometry>

#include "meshgrad/error.hpp"

namespace meshgrad {

namespace {

double radians(double degrees) { return degrees * std::numbers::pi / 180.0; }

}  // namespace

void Viewpoint::validate() const {
    if (!(distance > 0.0) || !std::isfinite(distance))
        throw ValidationError("viewpoint distance must be > 0, got " + std::to_string(distance));
    if (!(field_of_view > 0.0 && field_of_view < 180.0))
        throw ValidationError("field of view must be in (0, 180), got " +
                              std::to_string(field_of_view));
    if (!(std::abs(elevation) < 90.0))
        throw ValidationError("elevation must be in (-90, 90), got " + std::to_string(elevation));
    if (!std::isfinite(azimuth)) throw ValidationError("azimuth must be finite");
}

CameraFrame CameraFrame::from(const Viewpoint& view, int image_size) {
    view.validate();
    if (image_size <= 0) throw ValidationError("image size must be positive");
    const double az = radians(view.azimuth);
    const double el = radians(view.elevation);
    CameraFrame cam;
    cam.eye = view.distance *
              Vec3(std::cos(el) * std::sin(az), std::sin(el), std::cos(el) * std::cos(az));
    cam.forward = (-cam.eye).normalized();
    cam.right = cam.forward.cross(Vec3::UnitY()).normalized();
    cam.up = cam.right.cross(cam.forward);
    const double half = 0.5 * image_size;
    cam.focal = half / std::tan(0.5 * radians(view.field_of_view));
    cam.center = half;
    return cam;
}

ScreenVertices transform_to_screen(std::span<const Vec3> vertices, const Viewpoint& view,
                                   int image_size) {
    const CameraFrame cam = CameraFrame::from(view, image_size);
    ScreenVertices out;
    out.image_size = image_size;
    out.xy.resize(vertices.size());
    out.depth.resize(vertices.size());
    out.visible.resize(vertices.size());
    for (std::size_t i = 0; i < vertices.size(); ++i) {
        const Vec3 rel = vertices[i] - cam.eye;
        const double xc = cam.right.dot(rel);
        const double yc = cam.up.dot(rel);
        const double zc = cam.forward.dot(rel);
        out.depth[i] = zc;
        if (!(zc > kNearPlane) || !std::isfinite(zc)) {
            out.visible[i] = 0;
            out.xy[i] = Vec2::Zero();
            continue;
        }
        out.visible[i] = 1;
        out.xy[i] = Vec2(cam.center + cam.focal * xc / zc, cam.center - cam.focal * yc / zc);
    }
    return out;
}

std::vector<Vec3> transform_backward(std::span<const Vec3> vertices, const Viewpoint& view,
                                     int image_size, std::span<const Vec2> grad_xy,
                                     std::span<const double> grad_depth) {
    if (grad_xy.size() != vertices.size())
        throw ValidationError("screen gradient has " + std::to_string(grad_xy.size()) +
                              " entries for " + std::to_string(vertices.size()) + " vertices");
    if (!grad_depth.empty() && grad_depth.size() != vertices.size())
        throw ValidationError("depth gradient size does not match vertex count");

    const CameraFrame cam = CameraFrame::from(view, image_size);
    std::vector<Vec3> grad(vertices.size(), Vec3::Zero());
    for (std::size_t i = 0; i < vertices.size(); ++i) {
        const Vec3 rel = vertices[i] - cam.eye;
        const double xc = cam.right.dot(rel);
        const double yc = cam.up.dot(rel);
        const double zc = cam.forward.dot(rel);
        if (!(zc > kNearPlane) || !std::isfinite(zc)) continue;
        const double inv = 1.0 / zc;
        // sx = c + f xc/zc, sy = c - f yc/zc, depth = zc
        const Vec3 dsx = cam.focal * inv * (cam.right - (xc * inv) * cam.forward);
        const Vec3 dsy = -cam.focal * inv * (cam.up - (yc * inv) * cam.forward);
        grad[i] = grad_xy[i].x() * dsx + grad_xy[i].y() * dsy;
        if (!grad_depth.empty()) grad[i] += grad_depth[i] * cam.forward;
    }
    return grad;
}

}  // namespace meshgrad
