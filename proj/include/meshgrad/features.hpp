#pragma once

#include <memory>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Core>

#include "meshgrad/image.hpp"

namespace meshgrad {

// C x (H*W) feature matrix; column index = row * width + col.
struct FeatureMap {
    int height = 0;
    int width = 0;
    Eigen::MatrixXd values;

    int channels() const noexcept { return static_cast<int>(values.rows()); }
};

// Deterministic map from an RGB image to a list of feature maps, with its adjoint.
class FeatureExtractor {
public:
    virtual ~FeatureExtractor() = default;
    virtual std::string name() const = 0;
    virtual std::vector<FeatureMap> forward(const Image& image) const = 0;
    // Gradient with respect to `image` of a scalar whose gradients with respect
    // to forward(image) are `grad_maps`.
    virtual Image backward(const Image& image, const std::vector<FeatureMap>& grad_maps) const = 0;
};

// One map holding the image itself (3 x H x W).
class IdentityExtractor final : public FeatureExtractor {
public:
    std::string name() const override { return "identity"; }
    std::vector<FeatureMap> forward(const Image& image) const override;
    Image backward(const Image& image, const std::vector<FeatureMap>& grad_maps) const override;
};

// Squared responses of fixed 3x3 edge filters (horizontal, vertical, diagonal,
// anti-diagonal) applied to each color channel, at full and half resolution.
// Each scale yields one 12-channel map over the valid convolution window.
class EdgeFilterExtractor final : public FeatureExtractor {
public:
    static constexpr int kScales = 2;
    static constexpr int kFilters = 4;

    std::string name() const override { return "toy"; }
    std::vector<FeatureMap> forward(const Image& image) const override;
    Image backward(const Image& image, const std::vector<FeatureMap>& grad_maps) const override;
};

std::vector<std::string> extractor_names();
// Throws ValidationError listing the available names when `name` is unknown.
std::unique_ptr<FeatureExtractor> make_extractor(std::string_view name);

}  // namespace meshgrad
