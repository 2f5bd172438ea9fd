#include "config.hpp"

#include <charconv>
#include <sstream>

#include <boost/property_tree/ini_parser.hpp>

#include "meshgrad/error.hpp"

namespace meshgrad::cli {

namespace {

const std::set<std::string> kRenderKeys{"render.image_size", "render.downsample", "render.background",
                                        "render.cull_backfaces"};
const std::set<std::string> kViewKeys{"views.count",    "views.elevation", "views.azimuth_start", "views.azimuths",
                                      "views.elevations", "views.distance", "views.field_of_view"};
const std::set<std::string> kLightKeys{"lighting.ambient", "lighting.directional", "lighting.direction"};
const std::set<std::string> kSamplingKeys{"sampling.fixed",         "sampling.elevation_min", "sampling.elevation_max",
                                          "sampling.azimuth_min",   "sampling.azimuth_max",   "sampling.distance",
                                          "sampling.field_of_view"};
const std::set<std::string> kAdamKeys{"optim.steps", "optim.beta1", "optim.beta2", "optim.epsilon"};

std::set<std::string> join(std::initializer_list<std::set<std::string>> parts) {
    std::set<std::string> out;
    for (const auto& p : parts) out.insert(p.begin(), p.end());
    return out;
}

std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return {};
    return s.substr(b, s.find_last_not_of(" \t\r") - b + 1);
}

}  // namespace

const std::set<std::string>& allowed_keys(const std::string& verb) {
    static const std::map<std::string, std::set<std::string>> table{
        {"render", join({kRenderKeys, kViewKeys, kLightKeys, {"render.mode", "mesh.textures"}})},
        {"fit-silhouette",
         join({kRenderKeys, kViewKeys, kAdamKeys,
               {"loss.silhouette", "loss.smoothness", "optim.batch", "optim.learning_rate", "mesh.subdivision",
                "output.checkpoint", "debug.nan_at_step"}})},
        {"style-transfer",
         join({kRenderKeys, kViewKeys, kLightKeys, kSamplingKeys, kAdamKeys,
               {"render.mode", "loss.content", "loss.style", "loss.tv", "optim.vertex_learning_rate",
                "optim.texture_learning_rate", "mesh.texture_size", "mesh.textures", "features.extractor",
                "output.dump_every", "output.checkpoint", "debug.nan_at_step"}})},
        {"deepdream",
         join({kRenderKeys, kViewKeys, kSamplingKeys, kAdamKeys,
               {"loss.dream", "optim.vertex_learning_rate", "optim.texture_learning_rate", "mesh.texture_size",
                "mesh.textures", "features.extractor", "output.dump_every", "output.checkpoint",
                "debug.nan_at_step"}})},
        {"voxel-iou", {"voxel.resolution"}},
    };
    return table.at(verb);
}

JobFile::JobFile(const std::filesystem::path& path, const std::set<std::string>& allowed, const std::string& verb)
    : path_(path) {
    if (!std::filesystem::exists(path)) throw ValidationError("config file not found: '" + path.string() + "'");
    try {
        boost::property_tree::ini_parser::read_ini(path.string(), tree_);
    } catch (const boost::property_tree::ini_parser_error& e) {
        throw ValidationError("config '" + path.string() + "' line " + std::to_string(e.line()) + ": " + e.message());
    }
    for (const auto& [section, keys] : tree_) {
        // a root-level key carries data; an empty [section] does not
        if (keys.empty() && !keys.data().empty())
            throw ValidationError("config '" + path.string() + "': key '" + section + "' is outside any [section]");
        for (const auto& [key, value] : keys) {
            const std::string full = section + "." + key;
            if (!allowed.contains(full))
                throw ValidationError("config '" + path.string() + "': unknown key '" + key + "' in [" + section +
                                      "] for " + verb);
        }
    }
}

std::optional<std::string> JobFile::raw(const std::string& key) const {
    if (auto v = tree_.get_optional<std::string>(key)) return trim(*v);
    return std::nullopt;
}

bool JobFile::has(const std::string& key) const { return raw(key).has_value(); }

double JobFile::number(const std::string& key, double fallback) const {
    const auto v = raw(key);
    if (!v) return fallback;
    double out = 0.0;
    const auto [end, ec] = std::from_chars(v->data(), v->data() + v->size(), out);
    if (ec != std::errc{} || end != v->data() + v->size())
        throw ValidationError("config key '" + key + "': '" + *v + "' is not a number");
    return out;
}

int JobFile::integer(const std::string& key, int fallback) const {
    const auto v = raw(key);
    if (!v) return fallback;
    int out = 0;
    const auto [end, ec] = std::from_chars(v->data(), v->data() + v->size(), out);
    if (ec != std::errc{} || end != v->data() + v->size())
        throw ValidationError("config key '" + key + "': '" + *v + "' is not an integer");
    return out;
}

bool JobFile::flag(const std::string& key, bool fallback) const {
    const auto v = raw(key);
    if (!v) return fallback;
    if (*v == "true" || *v == "yes" || *v == "1") return true;
    if (*v == "false" || *v == "no" || *v == "0") return false;
    throw ValidationError("config key '" + key + "': '" + *v + "' is not true or false");
}

std::string JobFile::text(const std::string& key, const std::string& fallback) const {
    return raw(key).value_or(fallback);
}

std::optional<std::vector<double>> JobFile::numbers(const std::string& key) const {
    const auto v = raw(key);
    if (!v) return std::nullopt;
    std::string s = *v;
    for (char& c : s)
        if (c == ',') c = ' ';
    std::istringstream in(s);
    std::vector<double> out;
    for (std::string word; in >> word;) {
        double x = 0.0;
        const auto [end, ec] = std::from_chars(word.data(), word.data() + word.size(), x);
        if (ec != std::errc{} || end != word.data() + word.size())
            throw ValidationError("config key '" + key + "': '" + word + "' is not a number");
        out.push_back(x);
    }
    if (out.empty()) throw ValidationError("config key '" + key + "' is empty");
    return out;
}

Vec3 JobFile::vec3(const std::string& key, const Vec3& fallback) const {
    const auto v = numbers(key);
    if (!v) return fallback;
    if (v->size() != 3) throw ValidationError("config key '" + key + "' needs three numbers");
    return {(*v)[0], (*v)[1], (*v)[2]};
}

}  // namespace meshgrad::cli
