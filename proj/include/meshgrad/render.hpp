#pragma once

#include <vector>

#include "meshgrad/camera.hpp"
#include "meshgrad/raster.hpp"
#include "meshgrad/raster_backward.hpp"

namespace meshgrad {

// Forward state kept for the backward pass.
struct RenderResult {
    ScreenVertices screen;
    std::vector<Vec3> face_normals;  // filled in textured_lit mode only
    RenderBuffers buffers;           // internal resolution
    Image image;                     // after downsampling
};

// transform -> rasterize -> light -> downsample. Silhouette mode ignores
// textures and lighting.
RenderResult render(const Mesh& mesh, const Viewpoint& view, const RenderOptions& options,
                    const Lighting& lighting = {});

struct GradientSet {
    std::vector<Vec2> d_screen_vertices;
    std::vector<TextureCube> d_texels;  // empty in silhouette mode
    double d_ambient = 0.0;
    double d_directional = 0.0;
    Vec3 d_light_direction = Vec3::Zero();
    std::vector<Vec3> d_object_vertices;
};

// Gradients of a scalar loss given its gradient with respect to the final
// (downsampled) image of `forward`.
GradientSet backward_render(const Mesh& mesh, const Viewpoint& view, const RenderOptions& options,
                            const Lighting& lighting, const RenderResult& forward,
                            const Image& grad_image, const BackwardOptions& opts = {});

}  // namespace meshgrad
