#include "meshgrad/voxel.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <fstream>
#include <limits>

#include <Eigen/Geometry>

#include "meshgrad/error.hpp"
#include "meshgrad/io.hpp"

namespace meshgrad {

namespace {

using Tri = std::array<Vec3, 3>;

// Separating-axis test of a triangle against the box [center - h, center + h].
bool triangle_box_overlap(const Tri& tri, const Vec3& center, double h) {
    const Vec3 v0 = tri[0] - center, v1 = tri[1] - center, v2 = tri[2] - center;
    const std::array<Vec3, 3> edges{v1 - v0, v2 - v1, v0 - v2};
    auto separated = [&](const Vec3& axis) {
        const double p0 = axis.dot(v0), p1 = axis.dot(v1), p2 = axis.dot(v2);
        const double r = h * (std::abs(axis.x()) + std::abs(axis.y()) + std::abs(axis.z()));
        return std::min({p0, p1, p2}) > r || std::max({p0, p1, p2}) < -r;
    };
    for (int k = 0; k < 3; ++k)
        if (separated(Vec3::Unit(k))) return false;
    const Vec3 normal = edges[0].cross(edges[1]);
    if (separated(normal)) return false;
    for (int k = 0; k < 3; ++k)
        for (const Vec3& e : edges)
            if (separated(Vec3::Unit(k).cross(e))) return false;
    return true;
}

// Does the segment from p along +axis by length len touch the triangle?
// Boundaries count as touching.
bool segment_hits(const Tri& tri, const Vec3& p, int axis, double len, double eps) {
    const int i = (axis + 1) % 3, j = (axis + 2) % 3;
    auto cross2 = [&](const Vec3& a, const Vec3& b) {
        return (a[i] - p[i]) * (b[j] - p[j]) - (a[j] - p[j]) * (b[i] - p[i]);
    };
    const double area = (tri[1][i] - tri[0][i]) * (tri[2][j] - tri[0][j]) -
                        (tri[1][j] - tri[0][j]) * (tri[2][i] - tri[0][i]);
    // triangles parallel to the segment are left to their neighbors
    if (std::abs(area) <= eps * eps) return false;
    const double s = area > 0.0 ? 1.0 : -1.0;
    const double e0 = s * cross2(tri[1], tri[2]);
    const double e1 = s * cross2(tri[2], tri[0]);
    const double e2 = s * cross2(tri[0], tri[1]);
    const double tol = -eps * std::abs(area);
    if (e0 < tol || e1 < tol || e2 < tol) return false;
    const double sum = e0 + e1 + e2;
    const double depth = (e0 * tri[0][axis] + e1 * tri[1][axis] + e2 * tri[2][axis]) / sum;
    return depth >= p[axis] - eps * len && depth <= p[axis] + len * (1.0 + eps);
}

}  // namespace

VoxelGrid::VoxelGrid(int resolution) : resolution_(resolution) {
    if (resolution < kMinVoxelResolution)
        throw ValidationError("voxel resolution must be >= " + std::to_string(kMinVoxelResolution));
    cells_.assign(static_cast<std::size_t>(resolution) * resolution * resolution, 0);
}

std::size_t VoxelGrid::count() const noexcept {
    return static_cast<std::size_t>(std::count(cells_.begin(), cells_.end(), 1));
}

VoxelFrame bounding_frame(const Mesh& a, const Mesh* b) {
    Vec3 lo = Vec3::Constant(std::numeric_limits<double>::infinity());
    Vec3 hi = -lo;
    for (const Mesh* m : {&a, b}) {
        if (m == nullptr) continue;
        for (const Vec3& v : m->vertices) {
            lo = lo.cwiseMin(v);
            hi = hi.cwiseMax(v);
        }
    }
    if (!lo.allFinite() || !hi.allFinite()) throw ValidationError("cannot voxelize an empty mesh");
    VoxelFrame f;
    f.side = (hi - lo).maxCoeff();
    if (!(f.side > 0.0)) throw ValidationError("cannot voxelize a mesh with zero extent");
    f.origin = 0.5 * (lo + hi) - Vec3::Constant(0.5 * f.side);
    return f;
}

VoxelGrid voxelize(const Mesh& mesh, int resolution) {
    return voxelize(mesh, resolution, bounding_frame(mesh));
}

VoxelGrid voxelize(const Mesh& mesh, int resolution, const VoxelFrame& frame) {
    if (mesh.faces.empty()) throw ValidationError("cannot voxelize an empty mesh");
    mesh.validate();
    VoxelGrid out(resolution);
    // one layer of padding around the frame; the flood starts in the padding
    const int n = resolution + 2;
    const double h = frame.side / resolution;
    const double eps = 1e-9;
    auto cell = [&](int x, int y, int z) { return (static_cast<std::size_t>(z) * n + y) * n + x; };
    auto center = [&](int x, int y, int z) {
        return Vec3(frame.origin.x() + (x - 0.5) * h, frame.origin.y() + (y - 0.5) * h,
                    frame.origin.z() + (z - 0.5) * h);
    };

    std::vector<Tri> tris;
    tris.reserve(mesh.faces.size());
    for (const Face& f : mesh.faces) tris.push_back({mesh.vertices[f[0]], mesh.vertices[f[1]], mesh.vertices[f[2]]});

    // triangles touching each (slightly enlarged) padded voxel
    std::vector<std::vector<int>> bins(static_cast<std::size_t>(n) * n * n);
    const double half = 0.5 * h * (1.0 + 1e-6);
    for (std::size_t t = 0; t < tris.size(); ++t) {
        Vec3 lo = tris[t][0].cwiseMin(tris[t][1]).cwiseMin(tris[t][2]);
        Vec3 hi = tris[t][0].cwiseMax(tris[t][1]).cwiseMax(tris[t][2]);
        std::array<int, 3> a, b;
        for (int k = 0; k < 3; ++k) {
            const double fl = (lo[k] - frame.origin[k]) / h + 1.0 - 1e-6;
            const double fh = (hi[k] - frame.origin[k]) / h + 1.0 + 1e-6;
            a[k] = static_cast<int>(std::clamp(std::floor(fl), 0.0, n - 1.0));
            b[k] = static_cast<int>(std::clamp(std::floor(fh), 0.0, n - 1.0));
        }
        for (int z = a[2]; z <= b[2]; ++z)
            for (int y = a[1]; y <= b[1]; ++y)
                for (int x = a[0]; x <= b[0]; ++x)
                    if (triangle_box_overlap(tris[t], center(x, y, z), half))
                        bins[cell(x, y, z)].push_back(static_cast<int>(t));
    }

    auto blocked = [&](const std::array<int, 3>& from, int axis, int step) {
        std::array<int, 3> lower = from;
        if (step < 0) lower[axis] -= 1;
        std::array<int, 3> upper = lower;
        upper[axis] += 1;
        const Vec3 p = center(lower[0], lower[1], lower[2]);
        for (const auto* c : {&lower, &upper})
            for (int t : bins[cell((*c)[0], (*c)[1], (*c)[2])])
                if (segment_hits(tris[t], p, axis, h, eps)) return true;
        return false;
    };

    std::vector<std::uint8_t> outside(static_cast<std::size_t>(n) * n * n, 0);
    std::vector<std::array<int, 3>> stack{{0, 0, 0}};
    outside[cell(0, 0, 0)] = 1;
    while (!stack.empty()) {
        const std::array<int, 3> v = stack.back();
        stack.pop_back();
        for (int axis = 0; axis < 3; ++axis)
            for (int step : {-1, 1}) {
                std::array<int, 3> w = v;
                w[axis] += step;
                if (w[axis] < 0 || w[axis] >= n) continue;
                const std::size_t id = cell(w[0], w[1], w[2]);
                if (outside[id] || blocked(v, axis, step)) continue;
                outside[id] = 1;
                stack.push_back(w);
            }
    }
    for (int z = 0; z < resolution; ++z)
        for (int y = 0; y < resolution; ++y)
            for (int x = 0; x < resolution; ++x)
                out.set(x, y, z, !outside[cell(x + 1, y + 1, z + 1)]);
    return out;
}

double voxel_iou(const VoxelGrid& a, const VoxelGrid& b) {
    if (a.resolution() != b.resolution())
        throw ValidationError("voxel grids differ in resolution (" + std::to_string(a.resolution()) +
                              " vs " + std::to_string(b.resolution()) + ")");
    std::size_t inter = 0, uni = 0;
    const int r = a.resolution();
    for (int z = 0; z < r; ++z)
        for (int y = 0; y < r; ++y)
            for (int x = 0; x < r; ++x) {
                const bool p = a.at(x, y, z), q = b.at(x, y, z);
                inter += p && q;
                uni += p || q;
            }
    return uni == 0 ? 1.0 : static_cast<double>(inter) / static_cast<double>(uni);
}

double voxel_iou(const Mesh& a, const Mesh& b, int resolution) {
    const VoxelFrame frame = bounding_frame(a, &b);
    return voxel_iou(voxelize(a, resolution, frame), voxelize(b, resolution, frame));
}

void write_voxels(std::ostream& out, const VoxelGrid& grid) {
    binary::write_magic(out, "NVOX");
    binary::write_u32(out, static_cast<std::uint32_t>(grid.resolution()));
    const int r = grid.resolution();
    const std::size_t total = static_cast<std::size_t>(r) * r * r;
    std::vector<char> bytes((total + 7) / 8, 0);
    for (int z = 0; z < r; ++z)
        for (int y = 0; y < r; ++y)
            for (int x = 0; x < r; ++x)
                if (grid.at(x, y, z)) {
                    const std::size_t i = grid.index(x, y, z);
                    bytes[i / 8] = static_cast<char>(bytes[i / 8] | (1 << (i % 8)));
                }
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw Error("failed writing voxel grid");
}

VoxelGrid read_voxels(std::istream& in) {
    binary::expect_magic(in, "NVOX");
    const std::uint32_t r = binary::read_u32(in);
    if (r < kMinVoxelResolution || r > 4096) throw ParseError("implausible voxel resolution " + std::to_string(r));
    VoxelGrid grid(static_cast<int>(r));
    const std::size_t total = static_cast<std::size_t>(r) * r * r;
    std::vector<char> bytes((total + 7) / 8);
    in.read(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (in.gcount() != static_cast<std::streamsize>(bytes.size())) throw ParseError("truncated voxel grid");
    const int n = static_cast<int>(r);
    for (int z = 0; z < n; ++z)
        for (int y = 0; y < n; ++y)
            for (int x = 0; x < n; ++x) {
                const std::size_t i = grid.index(x, y, z);
                grid.set(x, y, z, (static_cast<unsigned char>(bytes[i / 8]) >> (i % 8)) & 1);
            }
    return grid;
}

void save_voxels(const VoxelGrid& grid, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error("cannot write '" + path.string() + "'");
    write_voxels(out, grid);
}

VoxelGrid load_voxels(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error("cannot open '" + path.string() + "'");
    return read_voxels(in);
}

}  // namespace meshgrad
