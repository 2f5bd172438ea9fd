#include "meshgrad/raster_backward.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <ostream>
#include <thread>

#include "meshgrad/error.hpp"

namespace meshgrad {

namespace {

constexpr double kMinDistance = 1e-9;

inline void uw(const Vec2& p, Axis axis, double out[2]) noexcept {
    if (axis == Axis::x) {
        out[0] = p.x();
        out[1] = p.y();
    } else {
        out[0] = p.y();
        out[1] = p.x();
    }
}

inline void row_col(Axis axis, int u_idx, int w_idx, int& row, int& col) noexcept {
    if (axis == Axis::x) {
        row = w_idx;
        col = u_idx;
    } else {
        row = u_idx;
        col = w_idx;
    }
}

inline Vec3 pixel_color(const Image& image, int row, int col) noexcept {
    if (image.channels() == 1) return {image(row, col), 0.0, 0.0};
    return {image(row, col, 0), image(row, col, 1), image(row, col, 2)};
}

inline Vec3 background_color(const RenderOptions& options) noexcept {
    return options.mode == RenderMode::silhouette ? Vec3::Zero() : options.background;
}

inline bool has_vertex(const Face& f, int v) noexcept { return f[0] == v || f[1] == v || f[2] == v; }

// Faces the forward pass can draw; others take no part in the backward pass.
bool drawable(const RasterContext& ctx, const Face& f) noexcept {
    const ScreenVertices& s = ctx.screen;
    if (!s.visible[f[0]] || !s.visible[f[1]] || !s.visible[f[2]]) return false;
    const double area = signed_area2(s.xy[f[0]], s.xy[f[1]], s.xy[f[2]]);
    if (area == 0.0 || !std::isfinite(area)) return false;
    return !(ctx.options.cull_backfaces && area > 0.0);
}

void check_context(const RasterContext& ctx, const Image& grad_image) {
    const RenderBuffers& b = ctx.buffers;
    if (b.size != ctx.options.image_size || ctx.screen.image_size != b.size)
        throw ValidationError("render buffers do not match the render options");
    if (b.face_id.size() != static_cast<std::size_t>(b.size) * b.size)
        throw ValidationError("render buffers are incomplete");
    if (!grad_image.same_shape(b.image))
        throw ValidationError("image gradient is " + std::to_string(grad_image.width()) + "x" +
                              std::to_string(grad_image.height()) + "x" +
                              std::to_string(grad_image.channels()) + ", buffers are " +
                              std::to_string(b.image.width()) + "x" +
                              std::to_string(b.image.height()) + "x" +
                              std::to_string(b.image.channels()));
}

// Per (face, slot, axis) state shared by every probed pixel.
struct Probe {
    const RasterContext& ctx;
    int face_index;
    const Face& face;
    int vertex;
    Axis axis;
    EdgeSweep sweep;

    Probe(const RasterContext& c, int j, int slot, Axis ax)
        : ctx(c), face_index(j), face(c.faces[j]), vertex(c.faces[j][slot]), axis(ax),
          sweep(c.screen, c.faces[j], slot, ax) {}

    Vec3 surface_color(const Weights& w) const {
        const RenderOptions& opt = ctx.options;
        if (opt.mode == RenderMode::silhouette) return {1.0, 0.0, 0.0};
        Vec3 color = sample_texture((*ctx.shading.textures)[face_index], w);
        if (opt.mode == RenderMode::textured_lit)
            color = apply_lighting(color, ctx.shading.face_normals[face_index], *ctx.shading.lighting);
        return color;
    }

    // Current color just across the edge (vertex, partner) from pixel (u_idx, w_idx).
    Vec3 color_beyond_edge(int partner, double pu, int w_idx) const {
        const int n = ctx.buffers.size;
        const double xe = sweep.edge_crossing(partner, w_idx + 0.5);
        double out;
        if (pu > xe)
            out = std::ceil(xe - 0.5) - 1.0;
        else if (pu < xe)
            out = std::floor(xe - 0.5) + 1.0;
        else
            return background_color(ctx.options);
        if (!(out >= 0.0 && out < n)) return background_color(ctx.options);
        int row, col;
        row_col(axis, static_cast<int>(out), w_idx, row, col);
        return pixel_color(ctx.buffers.image, row, col);
    }

    template <class Emit>
    void pixel(int u_idx, int w_idx, Emit&& emit) const {
        const RenderBuffers& buf = ctx.buffers;
        int row, col;
        row_col(axis, u_idx, w_idx, row, col);
        const double pu = u_idx + 0.5;
        const double pw = w_idx + 0.5;
        const CoverageInterval iv = sweep.coverage(pu, pw);
        if (iv.empty) return;

        const std::size_t idx = buf.index(row, col);
        const int fid = buf.face_id[idx];
        const Vec3 current = pixel_color(buf.image, row, col);
        const double x0 = sweep.current();

        if (x0 >= iv.lo && x0 <= iv.hi) {
            // Covered: moving either way can pull the face off the pixel. When
            // another surface is in front nothing visible changes.
            if (fid != face_index) return;
            for (int dir : {+1, -1}) {
                const double x1 = dir > 0 ? iv.hi : iv.lo;
                const int partner = dir > 0 ? iv.hi_partner : iv.lo_partner;
                if (!std::isfinite(x1)) continue;
                const double dx = x1 - x0;
                if (std::abs(dx) < kMinDistance) continue;
                CrossPoint cp;
                cp.axis = axis;
                cp.direction = dir;
                cp.inside = true;
                cp.position = x1;
                cp.distance = dx;
                cp.color = color_beyond_edge(partner, pu, w_idx);
                cp.color_change = cp.color - current;
                cp.depth = buf.depth[idx];
                emit(cp);
            }
            return;
        }

        const int dir = x0 < iv.lo ? +1 : -1;
        const double x1 = dir > 0 ? iv.lo : iv.hi;
        const int partner = dir > 0 ? iv.lo_partner : iv.hi_partner;
        const double dx = x1 - x0;
        if (!(std::abs(dx) >= kMinDistance)) return;
        const Weights w = sweep.weights_at(x1, pu, pw, partner);
        const ScreenVertices& s = ctx.screen;
        CrossPoint cp;
        cp.axis = axis;
        cp.direction = dir;
        cp.inside = false;
        cp.position = x1;
        cp.distance = dx;
        cp.depth = w[0] * s.depth[face[0]] + w[1] * s.depth[face[1]] + w[2] * s.depth[face[2]];
        cp.occluded = fid >= 0 && !has_vertex(ctx.faces[fid], vertex) && buf.depth[idx] < cp.depth;
        cp.color = surface_color(w);
        cp.color_change = cp.color - current;
        emit(cp);
    }
};

}  // namespace

EdgeSweep::EdgeSweep(const ScreenVertices& screen, const Face& face, int slot, Axis axis)
    : slot_(slot) {
    uw(screen.xy[face[slot]], axis, q_);
    uw(screen.xy[face[(slot + 1) % 3]], axis, a_);
    uw(screen.xy[face[(slot + 2) % 3]], axis, b_);
}

CoverageInterval EdgeSweep::coverage(double pu, double pw) const noexcept {
    CoverageInterval iv;
    // p = alpha q + beta a + gamma b with the numerators of alpha, beta, gamma;
    // alpha's numerator does not depend on q.
    const double na = (a_[0] - pu) * (b_[1] - pw) - (a_[1] - pw) * (b_[0] - pu);
    if (na == 0.0 || !std::isfinite(na)) {
        iv.empty = true;
        return iv;
    }
    const double s = na > 0.0 ? 1.0 : -1.0;
    auto constrain = [&](double slope, double offset, int partner) {
        slope *= s;
        offset *= s;
        if (slope > 0.0) {
            const double root = -offset / slope;
            if (root > iv.lo) {
                iv.lo = root;
                iv.lo_partner = partner;
            }
        } else if (slope < 0.0) {
            const double root = -offset / slope;
            if (root < iv.hi) {
                iv.hi = root;
                iv.hi_partner = partner;
            }
        } else if (offset < 0.0) {
            iv.empty = true;
        }
    };
    const double qw = q_[1];
    // beta (weight of a) vanishes when p lies on edge (q, b)
    constrain(pw - b_[1], pu * (b_[1] - qw) - b_[0] * (pw - qw), (slot_ + 2) % 3);
    // gamma (weight of b) vanishes when p lies on edge (q, a)
    constrain(a_[1] - pw, a_[0] * (pw - qw) - pu * (a_[1] - qw), (slot_ + 1) % 3);
    if (iv.lo > iv.hi) iv.empty = true;
    return iv;
}

Weights EdgeSweep::weights_at(double t, double pu, double pw, int on_edge_partner) const noexcept {
    const double qw = q_[1];
    const double na = (a_[0] - pu) * (b_[1] - pw) - (a_[1] - pw) * (b_[0] - pu);
    double nb = t * (pw - b_[1]) + pu * (b_[1] - qw) - b_[0] * (pw - qw);
    double ng = t * (a_[1] - pw) + a_[0] * (pw - qw) - pu * (a_[1] - qw);
    if (on_edge_partner == (slot_ + 2) % 3) nb = 0.0;
    if (on_edge_partner == (slot_ + 1) % 3) ng = 0.0;
    const double d = na + nb + ng;
    Weights w;
    w[slot_] = na / d;
    w[(slot_ + 1) % 3] = nb / d;
    w[(slot_ + 2) % 3] = ng / d;
    return w;
}

double EdgeSweep::edge_crossing(int partner, double pw) const noexcept {
    const double* p = partner == (slot_ + 1) % 3 ? a_ : b_;
    const double dw = p[1] - q_[1];
    if (dw == 0.0) return q_[0];
    return q_[0] + (p[0] - q_[0]) * (pw - q_[1]) / dw;
}

std::vector<CrossPoint> find_cross_points(const RasterContext& ctx, int row, int col, int face,
                                          int vertex, Axis axis) {
    if (face < 0 || static_cast<std::size_t>(face) >= ctx.faces.size())
        throw ValidationError("face index out of range");
    const Face& f = ctx.faces[face];
    const auto it = std::find(f.begin(), f.end(), vertex);
    if (it == f.end())
        throw ValidationError("vertex " + std::to_string(vertex) + " is not part of face " +
                              std::to_string(face));
    std::vector<CrossPoint> out;
    if (!drawable(ctx, f)) return out;
    const Probe probe(ctx, face, static_cast<int>(it - f.begin()), axis);
    const int u_idx = axis == Axis::x ? col : row;
    const int w_idx = axis == Axis::x ? row : col;
    probe.pixel(u_idx, w_idx, [&](const CrossPoint& cp) { out.push_back(cp); });
    return out;
}

double gated_contribution(const CrossPoint& cp, const Vec3& grad_pixel, int channels) noexcept {
    if (cp.occluded) return 0.0;
    double g = 0.0;
    for (int ch = 0; ch < channels; ++ch) {
        const double product = grad_pixel[ch] * cp.color_change[ch];
        if (product < 0.0) g += product / cp.distance;
    }
    return g;
}

std::vector<Vec2> backward_vertices(const RasterContext& ctx, const Image& grad_image,
                                    const BackwardOptions& opts) {
    check_context(ctx, grad_image);
    const int n = ctx.buffers.size;
    const int nc = grad_image.channels();
    const bool silhouette = ctx.options.mode == RenderMode::silhouette;
    const std::size_t nf = ctx.faces.size();

    // [face][slot] -> (d/dx, d/dy); reduced afterwards in face order, so the
    // result does not depend on how faces are distributed over threads.
    std::vector<std::array<Vec2, 3>> per_face(nf, {Vec2::Zero(), Vec2::Zero(), Vec2::Zero()});

    auto process_face = [&](std::size_t j) {
        const Face& f = ctx.faces[j];
        if (!drawable(ctx, f)) return;
        for (int slot = 0; slot < 3; ++slot)
            for (Axis axis : {Axis::x, Axis::y}) {
                const Probe probe(ctx, static_cast<int>(j), slot, axis);
                double wv[3][2];
                for (int k = 0; k < 3; ++k) uw(ctx.screen.xy[f[k]], axis, wv[k]);
                const double wmin = std::min({wv[0][1], wv[1][1], wv[2][1]});
                const double wmax = std::max({wv[0][1], wv[1][1], wv[2][1]});
                const auto [w0, w1] = pixel_span(wmin, wmax, n);
                double acc = 0.0;
                for (int w_idx = w0; w_idx <= w1; ++w_idx)
                    for (int u_idx = 0; u_idx < n; ++u_idx) {
                        int row, col;
                        row_col(axis, u_idx, w_idx, row, col);
                        const std::size_t off = grad_image.offset(row, col);
                        Vec3 g = Vec3::Zero();
                        bool any = false;
                        for (int ch = 0; ch < nc; ++ch) {
                            g[ch] = grad_image.data()[off + ch];
                            any |= g[ch] != 0.0;
                        }
                        if (!any) continue;
                        if (silhouette) {
                            // a covered pixel can only change if this face is the one drawn
                            const std::size_t idx = ctx.buffers.index(row, col);
                            const bool own = ctx.buffers.face_id[idx] == static_cast<int>(j);
                            if (!own && ctx.buffers.image(row, col) == 1.0) continue;
                            // gates that cannot open: leaving the pixel only darkens
                            // it, arriving only brightens it
                            if (!opts.debug_csv && (own ? g[0] <= 0.0 : g[0] >= 0.0)) continue;
                        }
                        probe.pixel(u_idx, w_idx, [&](const CrossPoint& cp) {
                            const double contribution = gated_contribution(cp, g, nc);
                            acc += contribution;
                            if (opts.debug_csv) {
                                for (int ch = 0; ch < nc; ++ch) {
                                    const double product = g[ch] * cp.color_change[ch];
                                    const bool open = !cp.occluded && product < 0.0;
                                    *opts.debug_csv << row << ',' << col << ',' << j << ','
                                                    << f[slot] << ',' << (axis == Axis::x ? 'x' : 'y')
                                                    << ',' << cp.direction << ',' << cp.inside << ','
                                                    << cp.distance << ',' << ch << ','
                                                    << cp.color_change[ch] << ',' << g[ch] << ','
                                                    << open << ',' << cp.occluded << '\n';
                                }
                            }
                        });
                    }
                per_face[j][slot][axis == Axis::x ? 0 : 1] = acc;
            }
    };

    const int threads = opts.debug_csv ? 1 : std::max(1, opts.threads);
    if (opts.debug_csv)
        *opts.debug_csv << "row,col,face,vertex,axis,direction,inside,dx,channel,dI,dP,gate,occluded\n";
    if (threads == 1) {
        for (std::size_t j = 0; j < nf; ++j) process_face(j);
    } else {
        std::atomic<std::size_t> next{0};
        std::vector<std::jthread> pool;
        for (int t = 0; t < threads; ++t)
            pool.emplace_back([&] {
                for (std::size_t j; (j = next.fetch_add(1)) < nf;) process_face(j);
            });
    }

    std::vector<Vec2> grad(ctx.screen.size(), Vec2::Zero());
    for (std::size_t j = 0; j < nf; ++j)
        for (int slot = 0; slot < 3; ++slot) grad[ctx.faces[j][slot]] += per_face[j][slot];
    return grad;
}

std::vector<TextureCube> backward_texture(const RasterContext& ctx, const Image& grad_image) {
    check_context(ctx, grad_image);
    const RenderOptions& opt = ctx.options;
    if (opt.mode == RenderMode::silhouette)
        throw ValidationError("texture gradients need a textured render");
    const auto& textures = *ctx.shading.textures;
    std::vector<TextureCube> grad;
    grad.reserve(textures.size());
    for (const TextureCube& t : textures) grad.emplace_back(t.size(), Vec3::Zero());

    const bool lit = opt.mode == RenderMode::textured_lit;
    const RenderBuffers& buf = ctx.buffers;
    for (int row = 0; row < buf.size; ++row)
        for (int col = 0; col < buf.size; ++col) {
            const std::size_t idx = buf.index(row, col);
            const int fid = buf.face_id[idx];
            if (fid < 0) continue;
            Vec3 g = pixel_color(grad_image, row, col);
            if (lit) {
                const double k = light_factor(ctx.shading.face_normals[fid], *ctx.shading.lighting);
                const Vec3 raw = k * sample_texture(textures[fid], buf.bary[idx]);
                for (int ch = 0; ch < 3; ++ch) g[ch] = (raw[ch] >= 0.0 && raw[ch] <= 1.0) ? g[ch] * k : 0.0;
            }
            const TexelStencil st = texture_stencil(textures[fid].size(), buf.bary[idx]);
            auto texels = grad[fid].texels();
            for (int k = 0; k < 8; ++k) texels[st.index[k]] += st.weight[k] * g;
        }
    return grad;
}

LightingGradient backward_lighting(const RasterContext& ctx, const Image& grad_image) {
    check_context(ctx, grad_image);
    if (ctx.options.mode != RenderMode::textured_lit)
        throw ValidationError("lighting gradients need a lit render");
    const Lighting& light = *ctx.shading.lighting;
    const auto& textures = *ctx.shading.textures;
    const RenderBuffers& buf = ctx.buffers;

    LightingGradient out;
    out.face_normals.assign(ctx.faces.size(), Vec3::Zero());
    for (int row = 0; row < buf.size; ++row)
        for (int col = 0; col < buf.size; ++col) {
            const std::size_t idx = buf.index(row, col);
            const int fid = buf.face_id[idx];
            if (fid < 0) continue;
            const Vec3& normal = ctx.shading.face_normals[fid];
            const double k = light_factor(normal, light);
            const Vec3 color = sample_texture(textures[fid], buf.bary[idx]);
            double dk = 0.0;
            for (int ch = 0; ch < 3; ++ch) {
                const double raw = k * color[ch];
                if (raw >= 0.0 && raw <= 1.0) dk += grad_image(row, col, ch) * color[ch];
            }
            out.ambient += dk;
            out.directional += light.direction.dot(normal) * dk;
            out.direction += light.directional * dk * normal;
            out.face_normals[fid] += light.directional * dk * light.direction;
        }
    return out;
}

}  // namespace meshgrad
