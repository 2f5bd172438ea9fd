#include "meshgrad/image.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include <png.h>

#include "meshgrad/error.hpp"

namespace meshgrad {

Image downsample(const Image& image, int factor) {
    if (factor < 1) throw ValidationError("downsample factor must be >= 1");
    if (image.width() % factor != 0 || image.height() % factor != 0)
        throw ValidationError("image " + std::to_string(image.width()) + "x" +
                              std::to_string(image.height()) + " is not divisible by factor " +
                              std::to_string(factor));
    if (factor == 1) return image;
    const int w = image.width() / factor;
    const int h = image.height() / factor;
    const int nc = image.channels();
    const double scale = 1.0 / (static_cast<double>(factor) * factor);
    Image out(w, h, nc);
    for (int r = 0; r < h; ++r)
        for (int c = 0; c < w; ++c)
            for (int ch = 0; ch < nc; ++ch) {
                double sum = 0.0;
                for (int dr = 0; dr < factor; ++dr)
                    for (int dc = 0; dc < factor; ++dc)
                        sum += image(r * factor + dr, c * factor + dc, ch);
                out(r, c, ch) = sum * scale;
            }
    return out;
}

Image downsample_backward(const Image& grad, int factor) {
    if (factor < 1) throw ValidationError("downsample factor must be >= 1");
    if (factor == 1) return grad;
    const int nc = grad.channels();
    const double scale = 1.0 / (static_cast<double>(factor) * factor);
    Image out(grad.width() * factor, grad.height() * factor, nc);
    for (int r = 0; r < out.height(); ++r)
        for (int c = 0; c < out.width(); ++c)
            for (int ch = 0; ch < nc; ++ch) out(r, c, ch) = grad(r / factor, c / factor, ch) * scale;
    return out;
}

Image transpose(const Image& image) {
    Image out(image.height(), image.width(), image.channels());
    for (int r = 0; r < image.height(); ++r)
        for (int c = 0; c < image.width(); ++c)
            for (int ch = 0; ch < image.channels(); ++ch) out(c, r, ch) = image(r, c, ch);
    return out;
}

void save_png(const Image& image, const std::filesystem::path& path) {
    if (image.channels() != 1 && image.channels() != 3)
        throw ValidationError("PNG output needs 1 or 3 channels");
    std::vector<png_byte> pixels(image.size());
    for (std::size_t i = 0; i < image.size(); ++i)
        pixels[i] = static_cast<png_byte>(std::lround(255.0 * std::clamp(image.data()[i], 0.0, 1.0)));

    png_image desc{};
    desc.version = PNG_IMAGE_VERSION;
    desc.width = static_cast<png_uint_32>(image.width());
    desc.height = static_cast<png_uint_32>(image.height());
    desc.format = image.channels() == 1 ? PNG_FORMAT_GRAY : PNG_FORMAT_RGB;
    if (!png_image_write_to_file(&desc, path.string().c_str(), 0, pixels.data(), 0, nullptr)) {
        const std::string message = desc.message;
        png_image_free(&desc);
        throw Error("cannot write PNG '" + path.string() + "': " + message);
    }
}

Image load_png(const std::filesystem::path& path) {
    if (!std::filesystem::exists(path)) throw Error("cannot open PNG '" + path.string() + "'");
    png_image desc{};
    desc.version = PNG_IMAGE_VERSION;
    if (!png_image_begin_read_from_file(&desc, path.string().c_str())) {
        const std::string message = desc.message;
        png_image_free(&desc);
        throw ParseError("'" + path.string() + "' is not a readable PNG: " + message);
    }
    const bool gray = (desc.format & PNG_FORMAT_FLAG_COLOR) == 0;
    desc.format = gray ? PNG_FORMAT_GRAY : PNG_FORMAT_RGB;
    const int channels = gray ? 1 : 3;
    std::vector<png_byte> pixels(PNG_IMAGE_SIZE(desc));
    if (!png_image_finish_read(&desc, nullptr, pixels.data(), 0, nullptr)) {
        const std::string message = desc.message;
        png_image_free(&desc);
        throw ParseError("failed reading PNG '" + path.string() + "': " + message);
    }
    Image out(static_cast<int>(desc.width), static_cast<int>(desc.height), channels);
    for (std::size_t i = 0; i < out.size(); ++i) out.data()[i] = pixels[i] / 255.0;
    return out;
}

Image load_mask_png(const std::filesystem::path& path) {
    const Image img = load_png(path);
    Image mask(img.width(), img.height(), 1);
    for (int r = 0; r < img.height(); ++r)
        for (int c = 0; c < img.width(); ++c) {
            double lum = img(r, c, 0);
            if (img.channels() == 3)
                lum = 0.299 * img(r, c, 0) + 0.587 * img(r, c, 1) + 0.114 * img(r, c, 2);
            mask(r, c) = std::lround(255.0 * lum) >= 128 ? 1.0 : 0.0;
        }
    return mask;
}

}  // namespace meshgrad
