#pragma once

#include <iosfwd>
#include <limits>
#include <span>
#include <vector>

#include "meshgrad/raster.hpp"

namespace meshgrad {

enum class Axis { x = 0, y = 1 };

// Everything the backward pass reads from a forward rasterization.
struct RasterContext {
    const ScreenVertices& screen;
    std::span<const Face> faces;
    const RenderOptions& options;
    const Shading& shading;
    const RenderBuffers& buffers;
};

// Interval of one screen coordinate of a moving vertex over which its face
// covers a fixed point; endpoints may be infinite. `lo_partner`/`hi_partner`
// name the other vertex (slot) of the edge that passes the point at each end.
struct CoverageInterval {
    double lo = -std::numeric_limits<double>::infinity();
    double hi = std::numeric_limits<double>::infinity();
    int lo_partner = -1;
    int hi_partner = -1;
    bool empty = false;
};

// One vertex of one face sliding along one screen axis with the other two
// vertices fixed. Coordinates are in (u, w) = (swept axis, other axis).
class EdgeSweep {
public:
    EdgeSweep(const ScreenVertices& screen, const Face& face, int slot, Axis axis);

    double current() const noexcept { return q_[0]; }

    // Values of the swept coordinate for which the face covers point (pu, pw).
    CoverageInterval coverage(double pu, double pw) const noexcept;

    // Centroid weights (in face slot order) of point (pu, pw) with the moving
    // vertex placed at t. `on_edge_partner` >= 0 pins the weight that must vanish.
    Weights weights_at(double t, double pu, double pw, int on_edge_partner) const noexcept;

    // Where the current edge (moving vertex, partner) crosses the line w = pw.
    double edge_crossing(int partner, double pw) const noexcept;

    int slot() const noexcept { return slot_; }

private:
    int slot_;
    // moving vertex q and the fixed vertices a (slot + 1) and b (slot + 2)
    double q_[2], a_[2], b_[2];
};

struct CrossPoint {
    Axis axis = Axis::x;
    int direction = 0;           // +1: vertex moves towards +axis, -1: towards -axis
    bool inside = false;         // pixel center currently covered by the face
    double position = 0.0;       // x1
    double distance = 0.0;       // x1 - x0
    Vec3 color = Vec3::Zero();         // color the pixel takes at the collision
    Vec3 color_change = Vec3::Zero();  // color - current pixel color
    double depth = 0.0;          // depth of the face at the collision point
    bool occluded = false;       // hidden by a surface not incident to the vertex
};

// Cross points of pixel (row, col) for vertex `vertex` of face `face` moving
// along `axis`. Empty when the face can never cover the pixel center, or when
// |x1 - x0| < 1e-9.
std::vector<CrossPoint> find_cross_points(const RasterContext& ctx, int row, int col, int face,
                                          int vertex, Axis axis);

// Gated contribution of one cross point to dL/dx for upstream gradient
// `grad_pixel` (channel-wise sum of the gated ratio times the gradient).
double gated_contribution(const CrossPoint& cp, const Vec3& grad_pixel, int channels) noexcept;

struct BackwardOptions {
    int threads = 1;
    // When set, one CSV record per (pixel, face, vertex, axis, direction,
    // channel) is written and the pass runs serially.
    std::ostream* debug_csv = nullptr;
};

// Approximate dL/d(screen vertex) given dL/d(image) at internal resolution.
std::vector<Vec2> backward_vertices(const RasterContext& ctx, const Image& grad_image,
                                    const BackwardOptions& opts = {});

// Exact dL/d(texel), shaped like the forward textures.
std::vector<TextureCube> backward_texture(const RasterContext& ctx, const Image& grad_image);

struct LightingGradient {
    double ambient = 0.0;
    double directional = 0.0;
    Vec3 direction = Vec3::Zero();
    std::vector<Vec3> face_normals;  // dL/dn_j, for chaining into vertices
};

LightingGradient backward_lighting(const RasterContext& ctx, const Image& grad_image);

}  // namespace meshgrad
