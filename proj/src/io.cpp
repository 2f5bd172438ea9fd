#include "meshgrad/io.hpp"

#include <bit>
#include <charconv>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <iomanip>
#include <sstream>
#include <string>
#include <string_view>

#include "meshgrad/error.hpp"

namespace meshgrad {

namespace {

std::string_view trim(std::string_view s) {
    const auto first = s.find_first_not_of(" \t\r");
    if (first == std::string_view::npos) return {};
    const auto last = s.find_last_not_of(" \t\r");
    return s.substr(first, last - first + 1);
}

std::vector<std::string_view> split_ws(std::string_view s) {
    std::vector<std::string_view> tokens;
    std::size_t i = 0;
    while (i < s.size()) {
        while (i < s.size() && (s[i] == ' ' || s[i] == '\t')) ++i;
        std::size_t j = i;
        while (j < s.size() && s[j] != ' ' && s[j] != '\t') ++j;
        if (j > i) tokens.push_back(s.substr(i, j - i));
        i = j;
    }
    return tokens;
}

double parse_double(std::string_view token, int line) {
    // from_chars for double is not available everywhere in libstdc++ 11; strtod is.
    std::string copy(token);
    char* end = nullptr;
    const double value = std::strtod(copy.c_str(), &end);
    if (end != copy.c_str() + copy.size())
        throw ParseError("invalid number '" + copy + "'", line);
    return value;
}

// OBJ face index, 1-based, negative values count back from the last vertex.
int parse_index(std::string_view token, int vertex_count, int line) {
    const auto slash = token.find('/');
    const std::string_view head = token.substr(0, slash);
    long value = 0;
    const auto [ptr, ec] = std::from_chars(head.data(), head.data() + head.size(), value);
    if (ec != std::errc{} || ptr != head.data() + head.size())
        throw ParseError("invalid face index '" + std::string(token) + "'", line);
    long resolved = value > 0 ? value - 1 : vertex_count + value;
    if (value == 0 || resolved < 0 || resolved >= vertex_count)
        throw ValidationError("line " + std::to_string(line) + ": face index " +
                              std::to_string(value) + " out of range for " +
                              std::to_string(vertex_count) + " vertices");
    return static_cast<int>(resolved);
}

}  // namespace

Mesh read_obj(std::istream& in) {
    Mesh mesh;
    std::string raw;
    int line = 0;
    while (std::getline(in, raw)) {
        ++line;
        std::string_view text = trim(raw);
        if (const auto hash = text.find('#'); hash != std::string_view::npos)
            text = trim(text.substr(0, hash));
        if (text.empty()) continue;
        const auto tokens = split_ws(text);
        const std::string_view tag = tokens.front();
        if (tag == "v") {
            if (tokens.size() < 4) throw ParseError("vertex needs 3 coordinates", line);
            Vec3 v(parse_double(tokens[1], line), parse_double(tokens[2], line),
                   parse_double(tokens[3], line));
            if (!v.allFinite()) throw ParseError("non-finite vertex coordinate", line);
            mesh.vertices.push_back(v);
        } else if (tag == "f") {
            if (tokens.size() < 4) throw ParseError("face needs at least 3 indices", line);
            const int nv = static_cast<int>(mesh.vertices.size());
            std::vector<int> poly;
            for (std::size_t k = 1; k < tokens.size(); ++k)
                poly.push_back(parse_index(tokens[k], nv, line));
            for (std::size_t k = 1; k + 1 < poly.size(); ++k)
                mesh.faces.push_back({poly[0], poly[k], poly[k + 1]});
        } else if (tag == "vt" || tag == "vn" || tag == "vp" || tag == "g" || tag == "o" ||
                   tag == "s" || tag == "usemtl" || tag == "mtllib" || tag == "l") {
            continue;
        } else {
            throw ParseError("unknown record '" + std::string(tag) + "'", line);
        }
    }
    mesh.validate();
    return mesh;
}

Mesh load_obj(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw Error("cannot open OBJ file '" + path.string() + "'");
    try {
        return read_obj(in);
    } catch (const ParseError& e) {
        throw ParseError(path.string() + ": " + e.what());
    } catch (const ValidationError& e) {
        throw ValidationError(path.string() + ": " + e.what());
    }
}

void write_obj(std::ostream& out, const Mesh& mesh) {
    std::ostringstream buf;
    buf.imbue(std::locale::classic());
    buf << std::setprecision(9);
    for (const Vec3& v : mesh.vertices) buf << "v " << v.x() << ' ' << v.y() << ' ' << v.z() << '\n';
    for (const Face& f : mesh.faces)
        buf << "f " << f[0] + 1 << ' ' << f[1] + 1 << ' ' << f[2] + 1 << '\n';
    out << buf.str();
}

void save_obj(const Mesh& mesh, const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) throw Error("cannot write OBJ file '" + path.string() + "'");
    write_obj(out, mesh);
    if (!out) throw Error("failed writing '" + path.string() + "'");
}

namespace binary {

void write_u32(std::ostream& out, std::uint32_t value) {
    unsigned char b[4];
    for (int i = 0; i < 4; ++i) b[i] = static_cast<unsigned char>((value >> (8 * i)) & 0xFF);
    out.write(reinterpret_cast<const char*>(b), 4);
}

void write_f32(std::ostream& out, float value) { write_u32(out, std::bit_cast<std::uint32_t>(value)); }

std::uint32_t read_u32(std::istream& in) {
    unsigned char b[4];
    if (!in.read(reinterpret_cast<char*>(b), 4)) throw ParseError("unexpected end of binary data");
    return static_cast<std::uint32_t>(b[0]) | (static_cast<std::uint32_t>(b[1]) << 8) |
           (static_cast<std::uint32_t>(b[2]) << 16) | (static_cast<std::uint32_t>(b[3]) << 24);
}

float read_f32(std::istream& in) { return std::bit_cast<float>(read_u32(in)); }

void write_magic(std::ostream& out, const char (&magic)[5]) { out.write(magic, 4); }

void expect_magic(std::istream& in, const char (&magic)[5]) {
    char got[4];
    if (!in.read(got, 4) || std::memcmp(got, magic, 4) != 0)
        throw ParseError(std::string("bad magic, expected '") + magic + "'");
}

}  // namespace binary

void write_textures(std::ostream& out, const std::vector<TextureCube>& textures) {
    const std::uint32_t size = textures.empty() ? 0 : textures.front().size();
    for (const TextureCube& t : textures)
        if (static_cast<std::uint32_t>(t.size()) != size)
            throw ValidationError("all texture cubes must share one size");
    binary::write_magic(out, "NTEX");
    binary::write_u32(out, static_cast<std::uint32_t>(textures.size()));
    binary::write_u32(out, size);
    for (const TextureCube& t : textures)
        for (const Vec3& c : t.texels())
            for (int ch = 0; ch < 3; ++ch) binary::write_f32(out, static_cast<float>(c[ch]));
}

std::vector<TextureCube> read_textures(std::istream& in) {
    binary::expect_magic(in, "NTEX");
    const std::uint32_t count = binary::read_u32(in);
    const std::uint32_t size = binary::read_u32(in);
    if (count > 0 && size < 2) throw ParseError("texture size must be >= 2");
    if (size > 256) throw ParseError("texture size " + std::to_string(size) + " is implausible");
    std::vector<TextureCube> textures;
    textures.reserve(count);
    for (std::uint32_t f = 0; f < count; ++f) {
        TextureCube cube(static_cast<int>(size));
        for (Vec3& c : cube.texels())
            for (int ch = 0; ch < 3; ++ch) c[ch] = binary::read_f32(in);
        cube.validate();
        textures.push_back(std::move(cube));
    }
    return textures;
}

void save_textures(const std::vector<TextureCube>& textures, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error("cannot write texture file '" + path.string() + "'");
    write_textures(out, textures);
}

std::vector<TextureCube> load_textures(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error("cannot open texture file '" + path.string() + "'");
    return read_textures(in);
}

}  // namespace meshgrad
