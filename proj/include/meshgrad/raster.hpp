#pragma once

#include <array>
#include <limits>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "meshgrad/camera.hpp"
#include "meshgrad/image.hpp"
#include "meshgrad/mesh.hpp"

namespace meshgrad {

enum class RenderMode { silhouette, textured, textured_lit };

RenderMode parse_render_mode(std::string_view name);
std::string_view to_string(RenderMode mode);

struct RenderOptions {
    int image_size = 128;  // internal (supersampled) size
    int downsample_factor = 2;
    RenderMode mode = RenderMode::silhouette;
    Vec3 background = Vec3::Zero();
    bool cull_backfaces = false;

    int output_size() const noexcept { return image_size / downsample_factor; }
    int channels() const noexcept { return mode == RenderMode::silhouette ? 1 : 3; }
    void validate() const;
};

struct Lighting {
    double ambient = 0.5;
    double directional = 0.5;
    Vec3 direction = Vec3::UnitY();  // unit vector towards the light

    void validate() const;
};

using Weights = std::array<double, 3>;

inline constexpr double kBackgroundDepth = std::numeric_limits<double>::infinity();

// Per-pixel results of z-buffered rasterization at internal resolution.
struct RenderBuffers {
    int size = 0;
    Image image;                 // 1 channel (silhouette) or RGB
    std::vector<double> depth;   // +inf on background
    std::vector<int> face_id;    // -1 on background
    std::vector<Weights> bary;   // weights of the covering face, zero on background

    std::size_t index(int row, int col) const noexcept {
        return static_cast<std::size_t>(row) * size + col;
    }
};

// Surface attributes used to color covered pixels. `textures` is required for
// textured modes; `lighting` and `face_normals` for textured_lit.
struct Shading {
    const std::vector<TextureCube>* textures = nullptr;
    const Lighting* lighting = nullptr;
    std::span<const Vec3> face_normals;
};

// Centroid coordinates of `point` with respect to (a, b, c).
// Throws ValidationError for a zero-area triangle.
Weights barycentric(const Vec2& point, const Vec2& a, const Vec2& b, const Vec2& c);

// Doubled signed area (b - a) x (c - a) in screen coordinates.
inline double signed_area2(const Vec2& a, const Vec2& b, const Vec2& c) noexcept {
    return (b.x() - a.x()) * (c.y() - a.y()) - (b.y() - a.y()) * (c.x() - a.x());
}

// Pixel (row, col) is sampled at its center (col + 0.5, row + 0.5).
inline Vec2 pixel_center(int row, int col) noexcept { return {col + 0.5, row + 0.5}; }

// Indices of the pixel centers (i + 0.5) lying in [lo, hi], clipped to [0, n).
// Returns an empty range (first > last) when none do.
std::pair<int, int> pixel_span(double lo, double hi, int n) noexcept;

// Coverage predicate used by the rasterizer: all edge functions positive, or
// zero on a top/left edge. Writes the centroid coordinates when covered.
bool covers(const Vec2& p, const Vec2& a, const Vec2& b, const Vec2& c, Weights& weights) noexcept;

// For each pixel, the face with the smallest interpolated depth among those
// covering its center; ties keep the lower face index.
RenderBuffers rasterize(const ScreenVertices& screen, std::span<const Face> faces,
                        const RenderOptions& options, const Shading& shading = {});

// Trilinear lookup at grid coordinates w * (s - 1); w1 -> x, w2 -> y, w3 -> z.
Vec3 sample_texture(const TextureCube& cube, const Weights& weights);

// The 8 texel indices and interpolation weights behind sample_texture.
struct TexelStencil {
    std::array<std::size_t, 8> index;
    std::array<double, 8> weight;
};
TexelStencil texture_stencil(int size, const Weights& weights);

// l^a + (n^d . n) l^d
inline double light_factor(const Vec3& normal, const Lighting& lighting) noexcept {
    return lighting.ambient + lighting.direction.dot(normal) * lighting.directional;
}

// (l^a + (n^d . n) l^d) * color, clamped to [0, 1] per channel.
Vec3 apply_lighting(const Vec3& color, const Vec3& face_normal, const Lighting& lighting);

}  // namespace meshgrad
