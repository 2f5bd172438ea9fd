#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <boost/property_tree/ptree.hpp>

#include "meshgrad/mesh.hpp"

namespace meshgrad::cli {

// INI-style job file: `[section]` headers, `key = value` lines, `;` or `#`
// comments. Keys are addressed as "section.key".
class JobFile {
public:
    JobFile() = default;
    // Throws ValidationError on syntax errors and unknown keys.
    JobFile(const std::filesystem::path& path, const std::set<std::string>& allowed, const std::string& verb);

    bool has(const std::string& key) const;
    double number(const std::string& key, double fallback) const;
    int integer(const std::string& key, int fallback) const;
    bool flag(const std::string& key, bool fallback) const;
    std::string text(const std::string& key, const std::string& fallback) const;
    Vec3 vec3(const std::string& key, const Vec3& fallback) const;
    std::optional<std::vector<double>> numbers(const std::string& key) const;

private:
    std::optional<std::string> raw(const std::string& key) const;

    std::filesystem::path path_;
    boost::property_tree::ptree tree_;
};

// Keys each verb accepts.
const std::set<std::string>& allowed_keys(const std::string& verb);

}  // namespace meshgrad::cli
