#include "support.hpp"

#include <algorithm>
#include <limits>
#include <sstream>

namespace meshgrad::testing {

ScreenVertices make_screen(int image_size, const std::vector<Vec2>& xy, const std::vector<double>& depth) {
    ScreenVertices s;
    s.image_size = image_size;
    s.xy = xy;
    s.depth = depth;
    s.visible.assign(xy.size(), 1);
    return s;
}

Scene random_scene(Random& rng, int image_size, int faces, double lo, double hi) {
    std::vector<Vec2> xy;
    std::vector<double> depth;
    Scene scene;
    for (int f = 0; f < faces; ++f) {
        for (int k = 0; k < 3; ++k) {
            xy.push_back(rng.point2(lo, hi));
            depth.push_back(rng.uniform(1.0, 10.0));
        }
        scene.faces.push_back({3 * f, 3 * f + 1, 3 * f + 2});
    }
    scene.screen = make_screen(image_size, xy, depth);
    return scene;
}

bool inside_triangle(const Vec2& p, const Vec2& a, const Vec2& b, const Vec2& c, double* weights) {
    // p - c = w1 (a - c) + w2 (b - c)
    const double m00 = a.x() - c.x(), m01 = b.x() - c.x();
    const double m10 = a.y() - c.y(), m11 = b.y() - c.y();
    const double det = m00 * m11 - m01 * m10;
    if (det == 0.0) return false;
    const double rx = p.x() - c.x(), ry = p.y() - c.y();
    const double w1 = (rx * m11 - m01 * ry) / det;
    const double w2 = (m00 * ry - rx * m10) / det;
    const double w3 = 1.0 - w1 - w2;
    if (weights) {
        weights[0] = w1;
        weights[1] = w2;
        weights[2] = w3;
    }
    return w1 > 0.0 && w2 > 0.0 && w3 > 0.0;
}

OracleBuffers brute_force_raster(const ScreenVertices& screen, std::span<const Face> faces, int n) {
    OracleBuffers out;
    out.face_id.assign(static_cast<std::size_t>(n) * n, -1);
    out.depth.assign(static_cast<std::size_t>(n) * n, std::numeric_limits<double>::infinity());
    for (int r = 0; r < n; ++r)
        for (int c = 0; c < n; ++c) {
            const Vec2 p(c + 0.5, r + 0.5);
            for (std::size_t j = 0; j < faces.size(); ++j) {
                const Face& f = faces[j];
                double w[3];
                if (!inside_triangle(p, screen.xy[f[0]], screen.xy[f[1]], screen.xy[f[2]], w)) continue;
                const double z = w[0] * screen.depth[f[0]] + w[1] * screen.depth[f[1]] + w[2] * screen.depth[f[2]];
                const std::size_t idx = static_cast<std::size_t>(r) * n + c;
                if (z < out.depth[idx]) {
                    out.depth[idx] = z;
                    out.face_id[idx] = static_cast<int>(j);
                }
            }
        }
    return out;
}

std::vector<ScanCross> scan_cross_points(const std::array<Vec2, 3>& tri, int slot, Axis axis, const Vec2& center,
                                         double step, double range) {
    const int k = axis == Axis::x ? 0 : 1;
    const double x0 = tri[slot][k];
    auto moved = [&](double t) {
        std::array<Vec2, 3> m = tri;
        m[slot][k] = t;
        return m;
    };
    auto covered = [&](double t) {
        const auto m = moved(t);
        return inside_triangle(center, m[0], m[1], m[2]);
    };
    // the three edge functions are affine in t, which keeps the stepping cheap
    auto edges = [&](double t) {
        const auto m = moved(t);
        auto e = [&](const Vec2& a, const Vec2& b) {
            return (b.x() - a.x()) * (center.y() - a.y()) - (b.y() - a.y()) * (center.x() - a.x());
        };
        return std::array<double, 3>{e(m[0], m[1]), e(m[1], m[2]), e(m[2], m[0])};
    };
    const auto e0 = edges(x0);
    const auto e1 = edges(x0 + 1.0);
    auto stepped_inside = [&](double dt) {
        double v[3];
        for (int i = 0; i < 3; ++i) v[i] = e0[i] + (e1[i] - e0[i]) * dt;
        return (v[0] > 0 && v[1] > 0 && v[2] > 0) || (v[0] < 0 && v[1] < 0 && v[2] < 0);
    };

    const bool start = covered(x0);
    std::vector<ScanCross> out;
    for (int dir : {+1, -1}) {
        // past the last root of the three affine edge functions no sign can change
        double reach = 0.0;
        for (int i = 0; i < 3; ++i) {
            const double slope = e1[i] - e0[i];
            if (slope != 0.0) reach = std::max(reach, dir * (-e0[i] / slope));
        }
        // coverage is constant between consecutive edge roots, so the midpoints of
        // those intervals catch slivers thinner than one step
        std::vector<double> extra{0.0};
        for (int i = 0; i < 3; ++i) {
            const double slope = e1[i] - e0[i];
            if (slope != 0.0 && dir * (-e0[i] / slope) > 0.0) extra.push_back(dir * (-e0[i] / slope));
        }
        std::sort(extra.begin(), extra.end());
        std::vector<double> mids;
        for (std::size_t i = 0; i + 1 < extra.size(); ++i) mids.push_back(0.5 * (extra[i] + extra[i + 1]));
        std::size_t next_mid = 0;

        const long steps = static_cast<long>(std::min(range, reach + 2.0 * step) / step) + 1;
        double prev = 0.0;  // distance of the last sample, always on the start side
        auto try_sample = [&](double d) {
            const double dt = dir * d;
            if (stepped_inside(dt) == start) {
                prev = d;
                return false;
            }
            // bracket with the exact predicate, then bisect
            double in = x0 + dir * prev, out_t = x0 + dt;
            if (covered(out_t) == start) {
                prev = d;
                return false;
            }
            for (int it = 0; it < 80; ++it) {
                const double mid = 0.5 * (in + out_t);
                (covered(mid) == start ? in : out_t) = mid;
            }
            ScanCross cp;
            cp.direction = dir;
            cp.inside = start;
            cp.position = 0.5 * (in + out_t);
            cp.distance = cp.position - x0;
            cp.color_change = start ? -1.0 : 1.0;
            out.push_back(cp);
            return true;
        };
        bool found = false;
        for (long i = 1; i <= steps && !found; ++i) {
            const double d = i * step;
            while (!found && next_mid < mids.size() && mids[next_mid] < d) found = try_sample(mids[next_mid++]);
            if (!found) found = try_sample(d);
        }
        if (!start && !out.empty()) break;
    }
    return out;
}

std::string compare_cross_points(std::vector<CrossPoint> analytic, std::vector<ScanCross> scanned, double rel,
                                 double reach, int* unreachable) {
    std::ostringstream msg;
    const auto far = std::remove_if(analytic.begin(), analytic.end(),
                                    [&](const CrossPoint& cp) { return std::abs(cp.distance) > reach; });
    if (unreachable) *unreachable += static_cast<int>(analytic.end() - far);
    analytic.erase(far, analytic.end());
    if (analytic.size() != scanned.size()) {
        msg << analytic.size() << " analytic vs " << scanned.size() << " scanned cross points";
        return msg.str();
    }
    std::sort(analytic.begin(), analytic.end(), [](const auto& a, const auto& b) { return a.direction < b.direction; });
    std::sort(scanned.begin(), scanned.end(), [](const auto& a, const auto& b) { return a.direction < b.direction; });
    for (std::size_t i = 0; i < analytic.size(); ++i) {
        const CrossPoint& a = analytic[i];
        const ScanCross& s = scanned[i];
        if (a.direction != s.direction || a.inside != s.inside || !close(a.position, s.position, rel, 0.0) ||
            !close(a.distance, s.distance, rel, 0.0) || !close(a.color_change[0], s.color_change, rel, 0.0)) {
            msg << "direction " << a.direction << "/" << s.direction << " x1 " << a.position << "/" << s.position
                << " dx " << a.distance << "/" << s.distance << " dI " << a.color_change[0] << "/" << s.color_change;
            return msg.str();
        }
    }
    return {};
}

double scan_vertex_gradient(const std::array<Vec2, 3>& tri, int slot, Axis axis, int n, const Image& grad) {
    const int k = axis == Axis::x ? 1 : 0;  // the coordinate that stays fixed
    const double lo = std::min({tri[0][k], tri[1][k], tri[2][k]});
    const double hi = std::max({tri[0][k], tri[1][k], tri[2][k]});
    double total = 0.0;
    for (int r = 0; r < n; ++r)
        for (int c = 0; c < n; ++c) {
            const Vec2 center(c + 0.5, r + 0.5);
            // the fixed coordinate bounds every position the triangle can take
            if (center[k] < lo || center[k] > hi) continue;
            const double g = grad(r, c);
            if (g == 0.0) continue;
            for (const ScanCross& s : scan_cross_points(tri, slot, axis, center)) {
                const double product = g * s.color_change;
                if (product < 0.0) total += product / s.distance;
            }
        }
    return total;
}

std::vector<double> central_differences(const std::function<double(std::span<const double>)>& f,
                                        std::vector<double> x, std::span<const std::size_t> probe, double step) {
    std::vector<double> out;
    for (std::size_t i : probe) {
        const double saved = x[i];
        x[i] = saved + step;
        const double up = f(x);
        x[i] = saved - step;
        const double down = f(x);
        x[i] = saved;
        out.push_back((up - down) / (2.0 * step));
    }
    return out;
}

}  // namespace meshgrad::testing
