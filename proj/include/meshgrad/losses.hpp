#pragma once

#include <span>
#include <vector>

#include <Eigen/Core>

#include "meshgrad/features.hpp"
#include "meshgrad/image.hpp"
#include "meshgrad/mesh.hpp"

namespace meshgrad {

template <class Gradient>
struct LossValue {
    double value = 0.0;
    Gradient gradient;
};

// Negative IoU of a soft mask against a binary target (both 1-channel).
LossValue<Image> silhouette_loss(const Image& predicted, const Image& target);

// IoU of two masks; 1 when both are empty.
double mask_iou(const Image& a, const Image& b);

// Sum over interior edges of (cos + 1)^2; degenerate edges are skipped.
LossValue<std::vector<Vec3>> smoothness_loss(std::span<const Vec3> vertices, const EdgeAdjacency& adjacency);

// Sum of squared vertex displacements from `reference`.
LossValue<std::vector<Vec3>> content_loss(std::span<const Vec3> vertices, std::span<const Vec3> reference);

// F F^T / (C H W)
Eigen::MatrixXd gram(const FeatureMap& map);

// Gram matrices of every map the extractor produces for `style`.
std::vector<Eigen::MatrixXd> style_grams(const Image& style, const FeatureExtractor& extractor);

// Sum over maps of |gram(f(image)) - target|_F^2.
LossValue<Image> style_loss(const Image& image, const std::vector<Eigen::MatrixXd>& target_grams,
                            const FeatureExtractor& extractor);
LossValue<Image> style_loss(const Image& image, const Image& style, const FeatureExtractor& extractor);

// Sum of squared differences over horizontally and vertically adjacent pixels.
LossValue<Image> total_variation(const Image& image);

// -(sum of squared feature entries)
LossValue<Image> deepdream_loss(const Image& image, const FeatureExtractor& extractor);

}  // namespace meshgrad
