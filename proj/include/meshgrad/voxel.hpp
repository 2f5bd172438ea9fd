#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <vector>

#include "meshgrad/mesh.hpp"

namespace meshgrad {

// Axis-aligned cube [origin, origin + side]^3 split into resolution^3 voxels.
struct VoxelFrame {
    Vec3 origin = Vec3::Zero();
    double side = 1.0;
};

// Cube with the side of the largest extent of the box bounding both meshes,
// centered on that box.
VoxelFrame bounding_frame(const Mesh& a, const Mesh* b = nullptr);

class VoxelGrid {
public:
    VoxelGrid() = default;
    explicit VoxelGrid(int resolution);

    int resolution() const noexcept { return resolution_; }
    std::size_t index(int x, int y, int z) const noexcept {
        return (static_cast<std::size_t>(z) * resolution_ + y) * resolution_ + x;
    }
    bool at(int x, int y, int z) const noexcept { return cells_[index(x, y, z)] != 0; }
    void set(int x, int y, int z, bool value) noexcept { cells_[index(x, y, z)] = value; }
    std::size_t count() const noexcept;

    bool operator==(const VoxelGrid&) const = default;

private:
    int resolution_ = 0;
    std::vector<std::uint8_t> cells_;
};

inline constexpr int kMinVoxelResolution = 4;

// A voxel is occupied unless its center can be reached from outside the frame
// by axis-aligned steps between neighboring voxel centers that do not pass
// through the surface.
VoxelGrid voxelize(const Mesh& mesh, int resolution, const VoxelFrame& frame);
VoxelGrid voxelize(const Mesh& mesh, int resolution);

// |A and B| / |A or B|; 1 when both are empty.
double voxel_iou(const VoxelGrid& a, const VoxelGrid& b);

// Both meshes voxelized in their joint frame.
double voxel_iou(const Mesh& a, const Mesh& b, int resolution);

// "NVOX" + u32 resolution + occupancy bits (LSB first, x fastest), little-endian.
void write_voxels(std::ostream& out, const VoxelGrid& grid);
VoxelGrid read_voxels(std::istream& in);
void save_voxels(const VoxelGrid& grid, const std::filesystem::path& path);
VoxelGrid load_voxels(const std::filesystem::path& path);

}  // namespace meshgrad
