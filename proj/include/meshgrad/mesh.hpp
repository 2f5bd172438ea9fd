#pragma once

#include <array>
#include <cstddef>
#include <optional>
#include <span>
#include <vector>

#include <Eigen/Core>

namespace meshgrad {

using Vec2 = Eigen::Vector2d;
using Vec3 = Eigen::Vector3d;
using Face = std::array<int, 3>;

// Per-face s x s x s grid of RGB colors indexed by centroid coordinates.
// Storage is z-major, then y, then x: index = (z * s + y) * s + x.
class TextureCube {
public:
    TextureCube() = default;
    explicit TextureCube(int size, const Vec3& fill = Vec3::Constant(0.5));

    int size() const noexcept { return size_; }
    std::size_t texel_count() const noexcept { return texels_.size(); }

    std::size_t index(int x, int y, int z) const noexcept {
        return (static_cast<std::size_t>(z) * size_ + y) * size_ + x;
    }
    Vec3& at(int x, int y, int z) noexcept { return texels_[index(x, y, z)]; }
    const Vec3& at(int x, int y, int z) const noexcept { return texels_[index(x, y, z)]; }

    std::span<Vec3> texels() noexcept { return texels_; }
    std::span<const Vec3> texels() const noexcept { return texels_; }

    // Throws ValidationError when size < 2 or a channel is non-finite.
    void validate() const;

private:
    int size_ = 0;
    std::vector<Vec3> texels_;
};

struct Mesh {
    std::vector<Vec3> vertices;
    std::vector<Face> faces;
    std::optional<std::vector<TextureCube>> textures;

    std::size_t vertex_count() const noexcept { return vertices.size(); }
    std::size_t face_count() const noexcept { return faces.size(); }

    // Index range, no repeated index within a face, texture count == face count.
    void validate() const;
};

// Unit-radius geodesic sphere built by repeatedly splitting an icosahedron.
// Level n has 20 * 4^n faces; levels above 6 are rejected.
Mesh generate_icosphere(int subdivision_level);

inline constexpr int kMaxIcosphereLevel = 6;

// Axis-aligned box centered at the origin, two outward-wound triangles per side.
Mesh generate_box(const Vec3& half_extent);

// Unit normal of a triangle (zero vector for degenerate faces).
Vec3 face_normal(const Vec3& a, const Vec3& b, const Vec3& c);
std::vector<Vec3> face_normals(std::span<const Vec3> vertices, std::span<const Face> faces);

// Adjoint of face_normals: accumulates dL/dv given dL/dn per face.
void face_normals_backward(std::span<const Vec3> vertices, std::span<const Face> faces,
                           std::span<const Vec3> grad_normals, std::span<Vec3> grad_vertices);

// Interior edge shared by exactly two faces. `faces[0] < faces[1]`;
// `opposite[k]` is the vertex of faces[k] not on the edge.
struct Edge {
    std::array<int, 2> vertices;
    std::array<int, 2> faces;
    std::array<int, 2> opposite;
};

using EdgeAdjacency = std::vector<Edge>;

// Lists every interior edge once, ordered by (lower vertex, higher vertex).
// Boundary edges are skipped; an edge with more than two faces throws.
EdgeAdjacency edge_adjacency(const Mesh& mesh);

struct DihedralCosines {
    std::vector<double> cosines;    // one per edge; NaN where invalid
    std::vector<bool> valid;
    int degenerate_count = 0;
};

// Cosine of the angle between the two half-planes meeting at each edge.
// A flat surface gives -1; a right-angle fold gives 0.
DihedralCosines dihedral_cosines(std::span<const Vec3> vertices, const EdgeAdjacency& adjacency);

}  // namespace meshgrad
