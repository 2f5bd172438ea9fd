#include "meshgrad/features.hpp"

#include <array>

#include "meshgrad/error.hpp"

namespace meshgrad {

namespace {

using Kernel = std::array<std::array<double, 3>, 3>;

constexpr std::array<Kernel, EdgeFilterExtractor::kFilters> kKernels{{
    {{{-0.25, -0.5, -0.25}, {0.0, 0.0, 0.0}, {0.25, 0.5, 0.25}}},
    {{{-0.25, 0.0, 0.25}, {-0.5, 0.0, 0.5}, {-0.25, 0.0, 0.25}}},
    {{{0.0, 0.25, 0.5}, {-0.25, 0.0, 0.25}, {-0.5, -0.25, 0.0}}},
    {{{0.5, 0.25, 0.0}, {0.25, 0.0, -0.25}, {0.0, -0.25, -0.5}}},
}};

void require_rgb(const Image& image, int min_side) {
    if (image.channels() != 3) throw ValidationError("feature extractors need an RGB image");
    if (image.width() < min_side || image.height() < min_side)
        throw ValidationError("image is too small for the feature extractor (minimum " +
                              std::to_string(min_side) + " pixels per side)");
}

// 2x2 mean with any odd trailing row/column dropped.
Image half(const Image& image) {
    Image out(image.width() / 2, image.height() / 2, image.channels());
    for (int r = 0; r < out.height(); ++r)
        for (int c = 0; c < out.width(); ++c)
            for (int ch = 0; ch < image.channels(); ++ch)
                out(r, c, ch) = 0.25 * (image(2 * r, 2 * c, ch) + image(2 * r, 2 * c + 1, ch) +
                                        image(2 * r + 1, 2 * c, ch) + image(2 * r + 1, 2 * c + 1, ch));
    return out;
}

void half_backward(const Image& grad_half, Image& grad_full) {
    for (int r = 0; r < grad_half.height(); ++r)
        for (int c = 0; c < grad_half.width(); ++c)
            for (int ch = 0; ch < grad_half.channels(); ++ch) {
                const double g = 0.25 * grad_half(r, c, ch);
                grad_full(2 * r, 2 * c, ch) += g;
                grad_full(2 * r, 2 * c + 1, ch) += g;
                grad_full(2 * r + 1, 2 * c, ch) += g;
                grad_full(2 * r + 1, 2 * c + 1, ch) += g;
            }
}

double response(const Image& image, const Kernel& k, int r, int c, int ch) {
    double s = 0.0;
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j) s += k[i][j] * image(r + i, c + j, ch);
    return s;
}

FeatureMap edge_map(const Image& image) {
    FeatureMap m;
    m.height = image.height() - 2;
    m.width = image.width() - 2;
    m.values.resize(3 * EdgeFilterExtractor::kFilters, static_cast<Eigen::Index>(m.height) * m.width);
    for (int ch = 0; ch < 3; ++ch)
        for (int k = 0; k < EdgeFilterExtractor::kFilters; ++k)
            for (int r = 0; r < m.height; ++r)
                for (int c = 0; c < m.width; ++c) {
                    const double v = response(image, kKernels[k], r, c, ch);
                    m.values(ch * EdgeFilterExtractor::kFilters + k, r * m.width + c) = v * v;
                }
    return m;
}

void edge_map_backward(const Image& image, const FeatureMap& grad, Image& grad_image) {
    const int h = image.height() - 2, w = image.width() - 2;
    if (grad.height != h || grad.width != w || grad.channels() != 3 * EdgeFilterExtractor::kFilters)
        throw ValidationError("feature gradient does not match the extractor output");
    for (int ch = 0; ch < 3; ++ch)
        for (int k = 0; k < EdgeFilterExtractor::kFilters; ++k)
            for (int r = 0; r < h; ++r)
                for (int c = 0; c < w; ++c) {
                    const double g = grad.values(ch * EdgeFilterExtractor::kFilters + k, r * w + c);
                    if (g == 0.0) continue;
                    const double d = 2.0 * response(image, kKernels[k], r, c, ch) * g;
                    for (int i = 0; i < 3; ++i)
                        for (int j = 0; j < 3; ++j) grad_image(r + i, c + j, ch) += kKernels[k][i][j] * d;
                }
}

}  // namespace

std::vector<FeatureMap> IdentityExtractor::forward(const Image& image) const {
    require_rgb(image, 1);
    FeatureMap m;
    m.height = image.height();
    m.width = image.width();
    m.values.resize(3, static_cast<Eigen::Index>(m.height) * m.width);
    for (int r = 0; r < m.height; ++r)
        for (int c = 0; c < m.width; ++c)
            for (int ch = 0; ch < 3; ++ch) m.values(ch, r * m.width + c) = image(r, c, ch);
    return {m};
}

Image IdentityExtractor::backward(const Image& image, const std::vector<FeatureMap>& grad_maps) const {
    require_rgb(image, 1);
    if (grad_maps.size() != 1 || grad_maps[0].height != image.height() ||
        grad_maps[0].width != image.width() || grad_maps[0].channels() != 3)
        throw ValidationError("feature gradient does not match the extractor output");
    Image g(image.width(), image.height(), 3);
    for (int r = 0; r < image.height(); ++r)
        for (int c = 0; c < image.width(); ++c)
            for (int ch = 0; ch < 3; ++ch) g(r, c, ch) = grad_maps[0].values(ch, r * image.width() + c);
    return g;
}

std::vector<FeatureMap> EdgeFilterExtractor::forward(const Image& image) const {
    require_rgb(image, 6);
    std::vector<FeatureMap> maps;
    Image level = image;
    for (int s = 0; s < kScales; ++s) {
        if (s > 0) level = half(level);
        maps.push_back(edge_map(level));
    }
    return maps;
}

Image EdgeFilterExtractor::backward(const Image& image, const std::vector<FeatureMap>& grad_maps) const {
    require_rgb(image, 6);
    if (grad_maps.size() != kScales)
        throw ValidationError("feature gradient does not match the extractor output");
    std::vector<Image> levels{image};
    for (int s = 1; s < kScales; ++s) levels.push_back(half(levels.back()));
    Image grad(levels.back().width(), levels.back().height(), 3);
    for (int s = kScales - 1; s >= 0; --s) {
        edge_map_backward(levels[s], grad_maps[s], grad);
        if (s > 0) {
            Image up(levels[s - 1].width(), levels[s - 1].height(), 3);
            half_backward(grad, up);
            grad = std::move(up);
        }
    }
    return grad;
}

std::vector<std::string> extractor_names() { return {"toy", "identity"}; }

std::unique_ptr<FeatureExtractor> make_extractor(std::string_view name) {
    if (name == "toy") return std::make_unique<EdgeFilterExtractor>();
    if (name == "identity") return std::make_unique<IdentityExtractor>();
    std::string list;
    for (const auto& n : extractor_names()) list += (list.empty() ? "" : ", ") + n;
    throw ValidationError("unknown feature extractor '" + std::string(name) + "' (available: " + list + ")");
}

}  // namespace meshgrad
