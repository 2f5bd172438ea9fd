#pragma once

#include <cstddef>
#include <filesystem>
#include <span>
#include <vector>

namespace meshgrad {

// Row-major image with interleaved channels (1 = gray/mask, 3 = RGB).
class Image {
public:
    Image() = default;
    Image(int width, int height, int channels, double fill = 0.0)
        : width_(width), height_(height), channels_(channels),
          data_(static_cast<std::size_t>(width) * height * channels, fill) {}

    int width() const noexcept { return width_; }
    int height() const noexcept { return height_; }
    int channels() const noexcept { return channels_; }
    std::size_t pixel_count() const noexcept { return static_cast<std::size_t>(width_) * height_; }
    std::size_t size() const noexcept { return data_.size(); }
    bool empty() const noexcept { return data_.empty(); }

    std::size_t offset(int row, int col) const noexcept {
        return (static_cast<std::size_t>(row) * width_ + col) * channels_;
    }
    double& operator()(int row, int col, int ch = 0) noexcept { return data_[offset(row, col) + ch]; }
    double operator()(int row, int col, int ch = 0) const noexcept {
        return data_[offset(row, col) + ch];
    }

    std::span<double> data() noexcept { return data_; }
    std::span<const double> data() const noexcept { return data_; }

    bool same_shape(const Image& other) const noexcept {
        return width_ == other.width_ && height_ == other.height_ && channels_ == other.channels_;
    }

    bool operator==(const Image&) const = default;

private:
    int width_ = 0;
    int height_ = 0;
    int channels_ = 0;
    std::vector<double> data_;
};

// Box-filter downsampling; each output pixel is the mean of a factor x factor block.
Image downsample(const Image& image, int factor);
// Adjoint of downsample: spreads each gradient uniformly over its block.
Image downsample_backward(const Image& grad, int factor);

Image transpose(const Image& image);

// 8-bit PNG, value = round(255 * clamp(channel, 0, 1)). One channel -> gray, three -> RGB.
void save_png(const Image& image, const std::filesystem::path& path);
// Loads a PNG as a 1- or 3-channel image with values in [0, 1] (alpha dropped).
Image load_png(const std::filesystem::path& path);
// Loads a PNG as a binary mask: luminance >= 128/255 -> 1, otherwise 0.
Image load_mask_png(const std::filesystem::path& path);

}  // namespace meshgrad
