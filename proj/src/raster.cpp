#include "meshgrad/raster.hpp"

#include <algorithm>
#include <cmath>

#include "meshgrad/error.hpp"

namespace meshgrad {

RenderMode parse_render_mode(std::string_view name) {
    if (name == "silhouette") return RenderMode::silhouette;
    if (name == "textured") return RenderMode::textured;
    if (name == "textured_lit") return RenderMode::textured_lit;
    throw ValidationError("unknown render mode '" + std::string(name) +
                          "' (expected silhouette, textured or textured_lit)");
}

std::string_view to_string(RenderMode mode) {
    switch (mode) {
        case RenderMode::silhouette: return "silhouette";
        case RenderMode::textured: return "textured";
        case RenderMode::textured_lit: return "textured_lit";
    }
    return "unknown";
}

void RenderOptions::validate() const {
    if (image_size <= 0) throw ValidationError("image size must be positive");
    if (downsample_factor < 1) throw ValidationError("downsample factor must be >= 1");
    if (image_size % downsample_factor != 0)
        throw ValidationError("image size " + std::to_string(image_size) +
                              " is not divisible by downsample factor " +
                              std::to_string(downsample_factor));
    if (!background.allFinite() || background.minCoeff() < 0.0 || background.maxCoeff() > 1.0)
        throw ValidationError("background color must lie in [0, 1]");
}

void Lighting::validate() const {
    if (!(ambient >= 0.0) || !(directional >= 0.0))
        throw ValidationError("light intensities must be >= 0");
    if (!direction.allFinite() || std::abs(direction.norm() - 1.0) > 1e-9)
        throw ValidationError("light direction must be a unit vector");
}

std::pair<int, int> pixel_span(double lo, double hi, int n) noexcept {
    const double first = std::clamp(std::ceil(lo - 0.5), 0.0, static_cast<double>(n));
    const double last = std::clamp(std::floor(hi - 0.5), -1.0, static_cast<double>(n - 1));
    return {static_cast<int>(first), static_cast<int>(last)};
}

Weights barycentric(const Vec2& point, const Vec2& a, const Vec2& b, const Vec2& c) {
    const double area = signed_area2(a, b, c);
    if (area == 0.0 || !std::isfinite(area))
        throw ValidationError("barycentric coordinates of a degenerate triangle");
    const double w1 = signed_area2(point, b, c) / area;
    const double w2 = signed_area2(a, point, c) / area;
    return {w1, w2, 1.0 - w1 - w2};
}

namespace {

// Oriented edge (dx, dy) is a top edge (horizontal, pointing +x) or a left edge
// (pointing -y) for the positive orientation in y-down screen space.
bool top_left(double dx, double dy) noexcept { return (dy == 0.0 && dx > 0.0) || dy < 0.0; }

bool edge_accepts(double e, double dx, double dy) noexcept {
    return e > 0.0 || (e == 0.0 && top_left(dx, dy));
}

}  // namespace

bool covers(const Vec2& p, const Vec2& a, const Vec2& b, const Vec2& c, Weights& weights) noexcept {
    const double area = signed_area2(a, b, c);
    if (area == 0.0 || !std::isfinite(area)) return false;
    const double s = area > 0.0 ? 1.0 : -1.0;
    const double e0 = signed_area2(b, c, p);
    const double e1 = signed_area2(c, a, p);
    const double e2 = signed_area2(a, b, p);
    if (!edge_accepts(s * e0, s * (c.x() - b.x()), s * (c.y() - b.y())) ||
        !edge_accepts(s * e1, s * (a.x() - c.x()), s * (a.y() - c.y())) ||
        !edge_accepts(s * e2, s * (b.x() - a.x()), s * (b.y() - a.y())))
        return false;
    weights = {e0 / area, e1 / area, e2 / area};
    return true;
}

Vec3 sample_texture(const TextureCube& cube, const Weights& weights) {
    const TexelStencil st = texture_stencil(cube.size(), weights);
    const auto texels = cube.texels();
    Vec3 out = Vec3::Zero();
    for (int k = 0; k < 8; ++k) out += st.weight[k] * texels[st.index[k]];
    return out;
}

TexelStencil texture_stencil(int size, const Weights& weights) {
    int lo[3];
    double frac[3];
    for (int a = 0; a < 3; ++a) {
        const double coord = std::clamp(weights[a], 0.0, 1.0) * (size - 1);
        lo[a] = std::min(static_cast<int>(std::floor(coord)), size - 2);
        frac[a] = coord - lo[a];
    }
    TexelStencil st;
    int k = 0;
    for (int dz = 0; dz < 2; ++dz)
        for (int dy = 0; dy < 2; ++dy)
            for (int dx = 0; dx < 2; ++dx, ++k) {
                const int x = lo[0] + dx, y = lo[1] + dy, z = lo[2] + dz;
                st.index[k] = (static_cast<std::size_t>(z) * size + y) * size + x;
                st.weight[k] = (dx ? frac[0] : 1.0 - frac[0]) * (dy ? frac[1] : 1.0 - frac[1]) *
                               (dz ? frac[2] : 1.0 - frac[2]);
            }
    return st;
}

Vec3 apply_lighting(const Vec3& color, const Vec3& face_normal, const Lighting& lighting) {
    const double k = light_factor(face_normal, lighting);
    return (k * color).cwiseMax(0.0).cwiseMin(1.0);
}

RenderBuffers rasterize(const ScreenVertices& screen, std::span<const Face> faces,
                        const RenderOptions& options, const Shading& shading) {
    options.validate();
    const int n = options.image_size;
    if (screen.image_size != n)
        throw ValidationError("screen vertices were projected for a different image size");
    const bool textured = options.mode != RenderMode::silhouette;
    const bool lit = options.mode == RenderMode::textured_lit;
    if (textured && (shading.textures == nullptr || shading.textures->size() != faces.size()))
        throw ValidationError("textured rendering needs one texture cube per face");
    if (lit && (shading.lighting == nullptr || shading.face_normals.size() != faces.size()))
        throw ValidationError("lit rendering needs lighting and per-face normals");

    RenderBuffers buf;
    buf.size = n;
    const std::size_t count = static_cast<std::size_t>(n) * n;
    buf.depth.assign(count, kBackgroundDepth);
    buf.face_id.assign(count, -1);
    buf.bary.assign(count, Weights{0.0, 0.0, 0.0});

    for (std::size_t j = 0; j < faces.size(); ++j) {
        const Face& f = faces[j];
        if (!screen.visible[f[0]] || !screen.visible[f[1]] || !screen.visible[f[2]]) continue;
        const Vec2& a = screen.xy[f[0]];
        const Vec2& b = screen.xy[f[1]];
        const Vec2& c = screen.xy[f[2]];
        const double area = signed_area2(a, b, c);
        if (area == 0.0 || !std::isfinite(area)) continue;
        // CCW faces seen from outside appear clockwise (negative area) in y-down screen space
        if (options.cull_backfaces && area > 0.0) continue;

        const double xmin = std::min({a.x(), b.x(), c.x()});
        const double xmax = std::max({a.x(), b.x(), c.x()});
        const double ymin = std::min({a.y(), b.y(), c.y()});
        const double ymax = std::max({a.y(), b.y(), c.y()});
        const auto [c0, c1] = pixel_span(xmin, xmax, n);
        const auto [r0, r1] = pixel_span(ymin, ymax, n);
        const double za = screen.depth[f[0]], zb = screen.depth[f[1]], zc = screen.depth[f[2]];

        for (int r = r0; r <= r1; ++r)
            for (int col = c0; col <= c1; ++col) {
                Weights w;
                if (!covers(pixel_center(r, col), a, b, c, w)) continue;
                const double z = w[0] * za + w[1] * zb + w[2] * zc;
                const std::size_t idx = buf.index(r, col);
                if (z < buf.depth[idx]) {
                    buf.depth[idx] = z;
                    buf.face_id[idx] = static_cast<int>(j);
                    buf.bary[idx] = w;
                }
            }
    }

    const int nc = options.channels();
    buf.image = Image(n, n, nc);
    for (int r = 0; r < n; ++r)
        for (int col = 0; col < n; ++col) {
            const std::size_t idx = buf.index(r, col);
            const int fid = buf.face_id[idx];
            if (!textured) {
                buf.image(r, col) = fid >= 0 ? 1.0 : 0.0;
                continue;
            }
            Vec3 color = options.background;
            if (fid >= 0) {
                color = sample_texture((*shading.textures)[fid], buf.bary[idx]);
                if (lit) color = apply_lighting(color, shading.face_normals[fid], *shading.lighting);
            }
            for (int ch = 0; ch < 3; ++ch) buf.image(r, col, ch) = color[ch];
        }
    return buf;
}

}  // namespace meshgrad
