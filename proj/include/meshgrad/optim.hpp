#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "meshgrad/mesh.hpp"

namespace meshgrad {

struct AdamHyper {
    double learning_rate = 1e-4;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-8;

    void validate() const;
};

struct AdamState {
    AdamHyper hyper;
    std::uint32_t step = 0;
    std::vector<double> m;
    std::vector<double> v;

    AdamState() = default;
    AdamState(std::size_t size, const AdamHyper& h) : hyper(h), m(size, 0.0), v(size, 0.0) {}
};

// One bias-corrected Adam update in place. `block` names the parameters in
// error messages; a non-finite gradient leaves state and parameters untouched.
void adam_step(AdamState& state, std::span<double> params, std::span<const double> grads,
               const std::string& block = "parameters");

// A named parameter vector and its optimizer state.
struct ParamBlock {
    std::string name;
    std::vector<double> values;
    AdamState state;

    ParamBlock(std::string n, std::vector<double> init, const AdamHyper& h)
        : name(std::move(n)), values(std::move(init)), state(values.size(), h) {}
};

// "NADM" + u32 step + m, v and parameters of all blocks concatenated, as
// float32 little-endian. Every block must share the same step count.
void write_checkpoint(std::ostream& out, std::span<const ParamBlock> blocks);
void save_checkpoint(std::span<const ParamBlock> blocks, const std::filesystem::path& path);
// Restores into blocks of the sizes recorded at save time.
void read_checkpoint(std::istream& in, std::span<ParamBlock> blocks);
void load_checkpoint(std::span<ParamBlock> blocks, const std::filesystem::path& path);

// Sphere deformed by per-vertex offsets and one global translation, with each
// offset vertex kept in the coordinate octant of its base position.
struct SphereDeformation {
    Mesh base;
    std::vector<Vec3> local_bias;
    Vec3 global_bias = Vec3::Zero();

    SphereDeformation() = default;
    explicit SphereDeformation(Mesh base_mesh);

    Mesh realize() const;
    // Zero gradient where the octant clamp is active.
    void realize_backward(std::span<const Vec3> grad_vertices, std::vector<Vec3>& grad_local,
                          Vec3& grad_global) const;
};

// Coordinate of base + offset, zeroed if its sign differs from the base's.
inline double clamp_to_octant(double base, double moved) noexcept {
    if (base > 0.0) return moved > 0.0 ? moved : 0.0;
    if (base < 0.0) return moved < 0.0 ? moved : 0.0;
    return 0.0;
}

}  // namespace meshgrad
