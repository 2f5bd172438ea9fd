#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <vector>

#include "meshgrad/mesh.hpp"

namespace meshgrad {

// Wavefront OBJ: `v` and `f` records are read, polygons are fan-triangulated,
// `vt`/`vn`/groups/materials are ignored. Textures are not part of OBJ.
Mesh read_obj(std::istream& in);
Mesh load_obj(const std::filesystem::path& path);
void write_obj(std::ostream& out, const Mesh& mesh);
void save_obj(const Mesh& mesh, const std::filesystem::path& path);

// Texture cubes as "NTEX" + u32 face_count + u32 size, followed by RGB float32
// triples in face, z, y, x order. Little-endian.
void write_textures(std::ostream& out, const std::vector<TextureCube>& textures);
std::vector<TextureCube> read_textures(std::istream& in);
void save_textures(const std::vector<TextureCube>& textures, const std::filesystem::path& path);
std::vector<TextureCube> load_textures(const std::filesystem::path& path);

namespace binary {

void write_u32(std::ostream& out, std::uint32_t value);
void write_f32(std::ostream& out, float value);
std::uint32_t read_u32(std::istream& in);
float read_f32(std::istream& in);
void write_magic(std::ostream& out, const char (&magic)[5]);
void expect_magic(std::istream& in, const char (&magic)[5]);

}  // namespace binary

}  // namespace meshgrad
