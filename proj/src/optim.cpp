#include "meshgrad/optim.hpp"

#include <cmath>
#include <fstream>

#include "meshgrad/error.hpp"
#include "meshgrad/io.hpp"

namespace meshgrad {

void AdamHyper::validate() const {
    if (!(learning_rate >= 0.0) || !std::isfinite(learning_rate))
        throw ValidationError("learning rate must be a finite value >= 0");
    if (!(beta1 >= 0.0 && beta1 < 1.0) || !(beta2 >= 0.0 && beta2 < 1.0))
        throw ValidationError("Adam betas must lie in [0, 1)");
    if (!(epsilon > 0.0)) throw ValidationError("Adam epsilon must be > 0");
}

void adam_step(AdamState& state, std::span<double> params, std::span<const double> grads,
               const std::string& block) {
    if (params.size() != grads.size() || state.m.size() != params.size() || state.v.size() != params.size())
        throw ValidationError("Adam shapes disagree for " + block);
    for (std::size_t i = 0; i < grads.size(); ++i)
        if (!std::isfinite(grads[i]))
            throw Error("non-finite gradient in " + block + " at index " + std::to_string(i));
    const AdamHyper& h = state.hyper;
    const std::uint32_t t = ++state.step;
    const double c1 = 1.0 - std::pow(h.beta1, t);
    const double c2 = 1.0 - std::pow(h.beta2, t);
    for (std::size_t i = 0; i < params.size(); ++i) {
        state.m[i] = h.beta1 * state.m[i] + (1.0 - h.beta1) * grads[i];
        state.v[i] = h.beta2 * state.v[i] + (1.0 - h.beta2) * grads[i] * grads[i];
        const double m_hat = state.m[i] / c1;
        const double v_hat = state.v[i] / c2;
        params[i] -= h.learning_rate * m_hat / (std::sqrt(v_hat) + h.epsilon);
    }
}

void write_checkpoint(std::ostream& out, std::span<const ParamBlock> blocks) {
    const std::uint32_t step = blocks.empty() ? 0 : blocks.front().state.step;
    for (const ParamBlock& b : blocks)
        if (b.state.step != step) throw ValidationError("parameter blocks are at different steps");
    binary::write_magic(out, "NADM");
    binary::write_u32(out, step);
    for (const ParamBlock& b : blocks)
        for (double x : b.state.m) binary::write_f32(out, static_cast<float>(x));
    for (const ParamBlock& b : blocks)
        for (double x : b.state.v) binary::write_f32(out, static_cast<float>(x));
    for (const ParamBlock& b : blocks)
        for (double x : b.values) binary::write_f32(out, static_cast<float>(x));
    if (!out) throw Error("failed writing checkpoint");
}

void read_checkpoint(std::istream& in, std::span<ParamBlock> blocks) {
    binary::expect_magic(in, "NADM");
    const std::uint32_t step = binary::read_u32(in);
    std::size_t total = 0;
    for (const ParamBlock& b : blocks) total += b.values.size();
    // read everything first so a bad file leaves the blocks untouched
    std::vector<float> raw(3 * total);
    for (float& x : raw) x = binary::read_f32(in);
    if (in.peek() != std::char_traits<char>::eof())
        throw ParseError("checkpoint holds more parameters than expected (" + std::to_string(total) + ")");
    std::size_t at = 0;
    for (ParamBlock& b : blocks)
        for (double& x : b.state.m) x = raw[at++];
    for (ParamBlock& b : blocks)
        for (double& x : b.state.v) x = raw[at++];
    for (ParamBlock& b : blocks)
        for (double& x : b.values) x = raw[at++];
    for (ParamBlock& b : blocks) b.state.step = step;
}

void save_checkpoint(std::span<const ParamBlock> blocks, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error("cannot write '" + path.string() + "'");
    write_checkpoint(out, blocks);
}

void load_checkpoint(std::span<ParamBlock> blocks, const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error("cannot open checkpoint '" + path.string() + "'");
    try {
        read_checkpoint(in, blocks);
    } catch (const ParseError& e) {
        throw ParseError("checkpoint '" + path.string() + "': " + e.what());
    }
}

SphereDeformation::SphereDeformation(Mesh base_mesh)
    : base(std::move(base_mesh)), local_bias(base.vertices.size(), Vec3::Zero()) {}

Mesh SphereDeformation::realize() const {
    if (local_bias.size() != base.vertices.size())
        throw ValidationError("local bias count does not match the base mesh");
    Mesh out;
    out.faces = base.faces;
    out.vertices.resize(base.vertices.size());
    for (std::size_t i = 0; i < base.vertices.size(); ++i) {
        const Vec3 moved = base.vertices[i] + local_bias[i];
        for (int k = 0; k < 3; ++k)
            out.vertices[i][k] = clamp_to_octant(base.vertices[i][k], moved[k]) + global_bias[k];
    }
    return out;
}

void SphereDeformation::realize_backward(std::span<const Vec3> grad_vertices, std::vector<Vec3>& grad_local,
                                         Vec3& grad_global) const {
    if (grad_vertices.size() != base.vertices.size())
        throw ValidationError("vertex gradient count does not match the base mesh");
    grad_local.assign(base.vertices.size(), Vec3::Zero());
    grad_global.setZero();
    for (std::size_t i = 0; i < base.vertices.size(); ++i) {
        grad_global += grad_vertices[i];
        const Vec3 moved = base.vertices[i] + local_bias[i];
        for (int k = 0; k < 3; ++k)
            if (base.vertices[i][k] * moved[k] > 0.0) grad_local[i][k] = grad_vertices[i][k];
    }
}

}  // namespace meshgrad
