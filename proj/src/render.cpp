#include "meshgrad/render.hpp"

#include "meshgrad/error.hpp"

namespace meshgrad {

namespace {

Shading shading_for(const Mesh& mesh, const RenderOptions& options, const Lighting& lighting,
                    const std::vector<Vec3>& normals) {
    Shading s;
    if (options.mode == RenderMode::silhouette) return s;
    if (!mesh.textures)
        throw ValidationError(std::string(to_string(options.mode)) + " rendering needs textures");
    s.textures = &*mesh.textures;
    if (options.mode == RenderMode::textured_lit) {
        s.lighting = &lighting;
        s.face_normals = normals;
    }
    return s;
}

}  // namespace

RenderResult render(const Mesh& mesh, const Viewpoint& view, const RenderOptions& options,
                    const Lighting& lighting) {
    options.validate();
    view.validate();
    if (options.mode == RenderMode::textured_lit) lighting.validate();
    RenderResult out;
    out.screen = transform_to_screen(mesh.vertices, view, options.image_size);
    if (options.mode == RenderMode::textured_lit) out.face_normals = face_normals(mesh.vertices, mesh.faces);
    const Shading shading = shading_for(mesh, options, lighting, out.face_normals);
    out.buffers = rasterize(out.screen, mesh.faces, options, shading);
    out.image = downsample(out.buffers.image, options.downsample_factor);
    return out;
}

GradientSet backward_render(const Mesh& mesh, const Viewpoint& view, const RenderOptions& options,
                            const Lighting& lighting, const RenderResult& forward,
                            const Image& grad_image, const BackwardOptions& opts) {
    if (!grad_image.same_shape(forward.image))
        throw ValidationError("image gradient does not match the rendered image");
    if (forward.screen.size() != mesh.vertex_count())
        throw ValidationError("forward pass was run on a different mesh");
    const Image grad_full = downsample_backward(grad_image, options.downsample_factor);
    const Shading shading = shading_for(mesh, options, lighting, forward.face_normals);
    const RasterContext ctx{forward.screen, mesh.faces, options, shading, forward.buffers};

    GradientSet g;
    g.d_screen_vertices = backward_vertices(ctx, grad_full, opts);
    g.d_object_vertices = transform_backward(mesh.vertices, view, options.image_size, g.d_screen_vertices);
    if (options.mode != RenderMode::silhouette) g.d_texels = backward_texture(ctx, grad_full);
    if (options.mode == RenderMode::textured_lit) {
        const LightingGradient lg = backward_lighting(ctx, grad_full);
        g.d_ambient = lg.ambient;
        g.d_directional = lg.directional;
        g.d_light_direction = lg.direction;
        face_normals_backward(mesh.vertices, mesh.faces, lg.face_normals, g.d_object_vertices);
    }
    return g;
}

}  // namespace meshgrad
