#include "meshgrad/losses.hpp"

#include <cmath>

#include "meshgrad/error.hpp"

namespace meshgrad {

namespace {

void require_mask(const Image& m, const char* what) {
    if (m.channels() != 1) throw ValidationError(std::string(what) + " must have one channel");
}

}  // namespace

LossValue<Image> silhouette_loss(const Image& predicted, const Image& target) {
    require_mask(predicted, "predicted mask");
    require_mask(target, "target mask");
    if (!predicted.same_shape(target))
        throw ValidationError("predicted mask is " + std::to_string(predicted.width()) + "x" +
                              std::to_string(predicted.height()) + ", target is " +
                              std::to_string(target.width()) + "x" + std::to_string(target.height()));
    double inter = 0.0, uni = 0.0, target_sum = 0.0;
    const auto p = predicted.data();
    const auto s = target.data();
    for (std::size_t i = 0; i < p.size(); ++i) {
        inter += p[i] * s[i];
        uni += p[i] + s[i] - p[i] * s[i];
        target_sum += s[i];
    }
    if (target_sum == 0.0) throw ValidationError("target mask is empty; IoU is undefined");

    LossValue<Image> out;
    out.value = -inter / uni;
    out.gradient = Image(predicted.width(), predicted.height(), 1);
    auto g = out.gradient.data();
    const double u2 = uni * uni;
    for (std::size_t i = 0; i < p.size(); ++i) g[i] = -(s[i] * uni - inter * (1.0 - s[i])) / u2;
    return out;
}

double mask_iou(const Image& a, const Image& b) {
    require_mask(a, "mask");
    require_mask(b, "mask");
    if (!a.same_shape(b)) throw ValidationError("masks differ in size");
    double inter = 0.0, uni = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        const double x = a.data()[i], y = b.data()[i];
        inter += x * y;
        uni += x + y - x * y;
    }
    return uni == 0.0 ? 1.0 : inter / uni;
}

LossValue<std::vector<Vec3>> smoothness_loss(std::span<const Vec3> vertices, const EdgeAdjacency& adjacency) {
    LossValue<std::vector<Vec3>> out;
    out.gradient.assign(vertices.size(), Vec3::Zero());
    const DihedralCosines dc = dihedral_cosines(vertices, adjacency);
    for (std::size_t e = 0; e < adjacency.size(); ++e) {
        if (!dc.valid[e]) continue;
        const Edge& edge = adjacency[e];
        const Vec3& v0 = vertices[edge.vertices[0]];
        const Vec3 a = vertices[edge.vertices[1]] - v0;
        const Vec3 b = vertices[edge.opposite[0]] - v0;
        const Vec3 c = vertices[edge.opposite[1]] - v0;
        const double aa = a.squaredNorm();
        const double kb = a.dot(b) / aa, kc = a.dot(c) / aa;
        const Vec3 pb = b - kb * a;
        const Vec3 pc = c - kc * a;
        const double nb = pb.norm(), nc = pc.norm();
        // one rounding in the denominator keeps exactly flat folds at -1
        const double cosine = pb.dot(pc) / std::sqrt(pb.squaredNorm() * pc.squaredNorm());
        const double t = cosine + 1.0;
        out.value += t * t;

        const double scale = 2.0 * t;
        const Vec3 g_pb = scale * (pc / (nb * nc) - cosine * pb / (nb * nb));
        const Vec3 g_pc = scale * (pb / (nb * nc) - cosine * pc / (nc * nc));
        // pb = b - a (a.b)/|a|^2 and likewise for pc
        const Vec3 g_b = g_pb - a * (g_pb.dot(a) / aa);
        const Vec3 g_c = g_pc - a * (g_pc.dot(a) / aa);
        const Vec3 g_a = -kb * g_pb - g_pb.dot(a) * (b / aa - 2.0 * kb * a / aa) - kc * g_pc -
                         g_pc.dot(a) * (c / aa - 2.0 * kc * a / aa);
        out.gradient[edge.vertices[1]] += g_a;
        out.gradient[edge.opposite[0]] += g_b;
        out.gradient[edge.opposite[1]] += g_c;
        out.gradient[edge.vertices[0]] -= g_a + g_b + g_c;
    }
    return out;
}

LossValue<std::vector<Vec3>> content_loss(std::span<const Vec3> vertices, std::span<const Vec3> reference) {
    if (vertices.size() != reference.size())
        throw ValidationError("content loss needs equal vertex counts (" + std::to_string(vertices.size()) +
                              " vs " + std::to_string(reference.size()) + ")");
    LossValue<std::vector<Vec3>> out;
    out.gradient.resize(vertices.size());
    for (std::size_t i = 0; i < vertices.size(); ++i) {
        const Vec3 d = vertices[i] - reference[i];
        out.value += d.squaredNorm();
        out.gradient[i] = 2.0 * d;
    }
    return out;
}

Eigen::MatrixXd gram(const FeatureMap& map) {
    const double n = static_cast<double>(map.channels()) * map.height * map.width;
    if (n == 0.0) throw ValidationError("Gram matrix of an empty feature map");
    // rank update of one triangle, mirrored, so the result is exactly symmetric
    Eigen::MatrixXd g = Eigen::MatrixXd::Zero(map.channels(), map.channels());
    g.selfadjointView<Eigen::Lower>().rankUpdate(map.values, 1.0 / n);
    return g.selfadjointView<Eigen::Lower>();
}

std::vector<Eigen::MatrixXd> style_grams(const Image& style, const FeatureExtractor& extractor) {
    std::vector<Eigen::MatrixXd> out;
    for (const FeatureMap& m : extractor.forward(style)) out.push_back(gram(m));
    return out;
}

LossValue<Image> style_loss(const Image& image, const std::vector<Eigen::MatrixXd>& target_grams,
                            const FeatureExtractor& extractor) {
    std::vector<FeatureMap> maps = extractor.forward(image);
    if (maps.size() != target_grams.size())
        throw ValidationError("style statistics do not match the extractor");
    LossValue<Image> out;
    for (std::size_t l = 0; l < maps.size(); ++l) {
        FeatureMap& m = maps[l];
        if (target_grams[l].rows() != m.channels() || target_grams[l].cols() != m.channels())
            throw ValidationError("style statistics do not match the extractor");
        const double n = static_cast<double>(m.channels()) * m.height * m.width;
        const Eigen::MatrixXd diff = gram(m) - target_grams[l];
        out.value += diff.squaredNorm();
        // d/dF |F F^T / n - T|^2 = 4 (G - T) F / n for symmetric G - T
        m.values = 4.0 * diff * m.values / n;
    }
    out.gradient = extractor.backward(image, maps);
    return out;
}

LossValue<Image> style_loss(const Image& image, const Image& style, const FeatureExtractor& extractor) {
    return style_loss(image, style_grams(style, extractor), extractor);
}

LossValue<Image> total_variation(const Image& image) {
    if (image.width() < 2 && image.height() < 2)
        throw ValidationError("total variation needs at least two pixels");
    LossValue<Image> out;
    out.gradient = Image(image.width(), image.height(), image.channels());
    auto pair = [&](int r0, int c0, int r1, int c1) {
        for (int ch = 0; ch < image.channels(); ++ch) {
            const double d = image(r0, c0, ch) - image(r1, c1, ch);
            out.value += d * d;
            out.gradient(r0, c0, ch) += 2.0 * d;
            out.gradient(r1, c1, ch) -= 2.0 * d;
        }
    };
    for (int r = 0; r < image.height(); ++r)
        for (int c = 0; c < image.width(); ++c) {
            if (c + 1 < image.width()) pair(r, c, r, c + 1);
            if (r + 1 < image.height()) pair(r, c, r + 1, c);
        }
    return out;
}

LossValue<Image> deepdream_loss(const Image& image, const FeatureExtractor& extractor) {
    std::vector<FeatureMap> maps = extractor.forward(image);
    LossValue<Image> out;
    for (FeatureMap& m : maps) {
        out.value -= m.values.squaredNorm();
        m.values *= -2.0;
    }
    out.gradient = extractor.backward(image, maps);
    return out;
}

}  // namespace meshgrad
