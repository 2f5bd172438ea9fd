#include "meshgrad/mesh.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <string>
#include <utility>

#include <Eigen/Geometry>

#include "meshgrad/error.hpp"

namespace meshgrad {

TextureCube::TextureCube(int size, const Vec3& fill) : size_(size) {
    if (size < 2)
        throw ValidationError("texture size must be >= 2, got " + std::to_string(size));
    texels_.assign(static_cast<std::size_t>(size) * size * size, fill);
}

void TextureCube::validate() const {
    if (size_ < 2)
        throw ValidationError("texture size must be >= 2, got " + std::to_string(size_));
    if (texels_.size() != static_cast<std::size_t>(size_) * size_ * size_)
        throw ValidationError("texture texel count does not match its size");
    for (const Vec3& t : texels_)
        if (!t.allFinite()) throw ValidationError("texture contains a non-finite texel");
}

void Mesh::validate() const {
    const auto nv = static_cast<long>(vertices.size());
    for (std::size_t v = 0; v < vertices.size(); ++v)
        if (!vertices[v].allFinite())
            throw ValidationError("vertex " + std::to_string(v) + " is not finite");
    for (std::size_t f = 0; f < faces.size(); ++f) {
        const Face& face = faces[f];
        for (int idx : face)
            if (idx < 0 || idx >= nv)
                throw ValidationError("face " + std::to_string(f) + " references vertex " +
                                      std::to_string(idx) + " outside [0, " + std::to_string(nv) +
                                      ")");
        if (face[0] == face[1] || face[1] == face[2] || face[0] == face[2])
            throw ValidationError("face " + std::to_string(f) + " repeats a vertex index");
    }
    if (textures) {
        if (textures->size() != faces.size())
            throw ValidationError("texture count " + std::to_string(textures->size()) +
                                  " does not match face count " + std::to_string(faces.size()));
        for (const TextureCube& t : *textures) t.validate();
    }
}

namespace {

int midpoint(std::map<std::pair<int, int>, int>& cache, std::vector<Vec3>& vertices, int a, int b) {
    const auto key = std::minmax(a, b);
    if (auto it = cache.find(key); it != cache.end()) return it->second;
    const int id = static_cast<int>(vertices.size());
    vertices.push_back((vertices[a] + vertices[b]).normalized());
    cache.emplace(key, id);
    return id;
}

}  // namespace

Mesh generate_box(const Vec3& half_extent) {
    if (!(half_extent.minCoeff() > 0.0) || !half_extent.allFinite())
        throw ValidationError("box half extents must be positive");
    Mesh m;
    for (int i = 0; i < 8; ++i)
        m.vertices.emplace_back((i & 1 ? 1 : -1) * half_extent.x(), (i & 2 ? 1 : -1) * half_extent.y(),
                                (i & 4 ? 1 : -1) * half_extent.z());
    for (int axis = 0; axis < 3; ++axis)
        for (int side = 0; side < 2; ++side) {
            const int bit = 1 << axis, u = 1 << ((axis + 1) % 3), w = 1 << ((axis + 2) % 3);
            const int base = side ? bit : 0;
            const int q[4] = {base, base | u, base | u | w, base | w};
            Face f0{q[0], q[1], q[2]}, f1{q[0], q[2], q[3]};
            if (side == 0) {
                std::swap(f0[1], f0[2]);
                std::swap(f1[1], f1[2]);
            }
            m.faces.push_back(f0);
            m.faces.push_back(f1);
        }
    return m;
}

Mesh generate_icosphere(int subdivision_level) {
    if (subdivision_level < 0 || subdivision_level > kMaxIcosphereLevel)
        throw ValidationError("icosphere subdivision level must be in [0, " +
                              std::to_string(kMaxIcosphereLevel) + "], got " +
                              std::to_string(subdivision_level));

    const double t = (1.0 + std::sqrt(5.0)) / 2.0;
    Mesh mesh;
    mesh.vertices = {
        {-1, t, 0}, {1, t, 0}, {-1, -t, 0}, {1, -t, 0},
        {0, -1, t}, {0, 1, t}, {0, -1, -t}, {0, 1, -t},
        {t, 0, -1}, {t, 0, 1}, {-t, 0, -1}, {-t, 0, 1},
    };
    for (Vec3& v : mesh.vertices) v.normalize();
    mesh.faces = {
        {0, 11, 5}, {0, 5, 1},  {0, 1, 7},   {0, 7, 10}, {0, 10, 11},
        {1, 5, 9},  {5, 11, 4}, {11, 10, 2}, {10, 7, 6}, {7, 1, 8},
        {3, 9, 4},  {3, 4, 2},  {3, 2, 6},   {3, 6, 8},  {3, 8, 9},
        {4, 9, 5},  {2, 4, 11}, {6, 2, 10},  {8, 6, 7},  {9, 8, 1},
    };

    for (int level = 0; level < subdivision_level; ++level) {
        std::map<std::pair<int, int>, int> cache;
        std::vector<Face> next;
        next.reserve(mesh.faces.size() * 4);
        for (const Face& f : mesh.faces) {
            const int ab = midpoint(cache, mesh.vertices, f[0], f[1]);
            const int bc = midpoint(cache, mesh.vertices, f[1], f[2]);
            const int ca = midpoint(cache, mesh.vertices, f[2], f[0]);
            next.push_back({f[0], ab, ca});
            next.push_back({f[1], bc, ab});
            next.push_back({f[2], ca, bc});
            next.push_back({ab, bc, ca});
        }
        mesh.faces = std::move(next);
    }
    return mesh;
}

Vec3 face_normal(const Vec3& a, const Vec3& b, const Vec3& c) {
    const Vec3 n = (b - a).cross(c - a);
    const double len = n.norm();
    return len > 0.0 ? Vec3(n / len) : Vec3::Zero();
}

std::vector<Vec3> face_normals(std::span<const Vec3> vertices, std::span<const Face> faces) {
    std::vector<Vec3> normals;
    normals.reserve(faces.size());
    for (const Face& f : faces)
        normals.push_back(face_normal(vertices[f[0]], vertices[f[1]], vertices[f[2]]));
    return normals;
}

void face_normals_backward(std::span<const Vec3> vertices, std::span<const Face> faces,
                           std::span<const Vec3> grad_normals, std::span<Vec3> grad_vertices) {
    for (std::size_t j = 0; j < faces.size(); ++j) {
        const Face& f = faces[j];
        const Vec3& a = vertices[f[0]];
        const Vec3 e1 = vertices[f[1]] - a;
        const Vec3 e2 = vertices[f[2]] - a;
        const Vec3 raw = e1.cross(e2);
        const double len = raw.norm();
        if (len == 0.0) continue;
        const Vec3 n = raw / len;
        // d(raw/|raw|) = (I - n n^T) / |raw|
        const Vec3 g = (grad_normals[j] - n * n.dot(grad_normals[j])) / len;
        // raw = e1 x e2: dL/de1 = e2 x g, dL/de2 = g x e1
        const Vec3 g1 = e2.cross(g);
        const Vec3 g2 = g.cross(e1);
        grad_vertices[f[1]] += g1;
        grad_vertices[f[2]] += g2;
        grad_vertices[f[0]] -= g1 + g2;
    }
}

EdgeAdjacency edge_adjacency(const Mesh& mesh) {
    struct Incidence {
        std::vector<int> faces;
        std::vector<int> opposite;
    };
    std::map<std::pair<int, int>, Incidence> incidence;
    for (std::size_t j = 0; j < mesh.faces.size(); ++j) {
        const Face& f = mesh.faces[j];
        for (int k = 0; k < 3; ++k) {
            const auto key = std::minmax(f[k], f[(k + 1) % 3]);
            auto& entry = incidence[key];
            entry.faces.push_back(static_cast<int>(j));
            entry.opposite.push_back(f[(k + 2) % 3]);
        }
    }

    EdgeAdjacency edges;
    for (const auto& [key, entry] : incidence) {
        if (entry.faces.size() > 2)
            throw ValidationError("edge (" + std::to_string(key.first) + ", " +
                                  std::to_string(key.second) + ") is shared by " +
                                  std::to_string(entry.faces.size()) + " faces");
        if (entry.faces.size() < 2) continue;
        // faces are visited in increasing order, so faces[0] < faces[1] already
        edges.push_back({{key.first, key.second},
                         {entry.faces[0], entry.faces[1]},
                         {entry.opposite[0], entry.opposite[1]}});
    }
    return edges;
}

DihedralCosines dihedral_cosines(std::span<const Vec3> vertices, const EdgeAdjacency& adjacency) {
    DihedralCosines out;
    out.cosines.reserve(adjacency.size());
    out.valid.reserve(adjacency.size());
    for (const Edge& e : adjacency) {
        const Vec3& v0 = vertices[e.vertices[0]];
        const Vec3 a = vertices[e.vertices[1]] - v0;
        const Vec3 b = vertices[e.opposite[0]] - v0;
        const Vec3 c = vertices[e.opposite[1]] - v0;
        const double aa = a.squaredNorm();
        bool ok = aa > 0.0;
        double cosine = std::numeric_limits<double>::quiet_NaN();
        if (ok) {
            // components of the opposite vertices perpendicular to the shared edge
            const Vec3 pb = b - a * (a.dot(b) / aa);
            const Vec3 pc = c - a * (a.dot(c) / aa);
            const double nb = pb.norm();
            const double nc = pc.norm();
            const double scale = std::sqrt(aa);
            ok = nb > 1e-12 * scale && nc > 1e-12 * scale;
            if (ok) cosine = std::clamp(pb.dot(pc) / std::sqrt(pb.squaredNorm() * pc.squaredNorm()), -1.0, 1.0);
        }
        out.cosines.push_back(cosine);
        out.valid.push_back(ok);
        if (!ok) ++out.degenerate_count;
    }
    return out;
}

}  // namespace meshgrad
