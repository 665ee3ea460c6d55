#include "mve/views.hpp"

#include "mve/errors.hpp"
#include "mve/imaging.hpp"

namespace mve {

const char* view_name(ViewKind view) {
    switch (view) {
        case ViewKind::Original: return "O";
        case ViewKind::Grey: return "G";
        case ViewKind::Skeleton: return "S";
    }
    return "?";
}

ViewKind view_from_name(const std::string& name) {
    if (name == "O" || name == "Original") return ViewKind::Original;
    if (name == "G" || name == "Grey") return ViewKind::Grey;
    if (name == "S" || name == "Skeleton") return ViewKind::Skeleton;
    throw ParseError("unknown view '" + name + "'");
}

RasterImage transform_view(const RasterImage& img, ViewKind view, const ViewConfig& cfg) {
    switch (view) {
        case ViewKind::Original:
            return imaging::composite_alpha(img);
        case ViewKind::Grey: {
            const GreyImage grey = imaging::to_grey(imaging::composite_alpha(img));
            RasterImage out(grey.width, grey.height);
            for (std::size_t i = 0; i < grey.pixels.size(); ++i) {
                const std::uint8_t v = grey.pixels[i];
                out.pixels[i] = Rgba{v, v, v, 255};
            }
            return out;
        }
        case ViewKind::Skeleton: {
            const GreyImage grey = imaging::to_grey(imaging::composite_alpha(img));
            BinaryImage binary = imaging::binarize_adaptive(grey, cfg.blocksize, cfg.offset);
            // scanned-page borders and anything outside the annotated outline
            // must never skeletonize
            for (std::size_t i = 0; i < binary.pixels.size(); ++i)
                if (img.pixels[i].a == 0) binary.pixels[i] = 0;
            const BinaryImage skeleton = imaging::skeletonize(binary);
            RasterImage out(skeleton.width, skeleton.height, Rgba{0, 0, 0, 255});
            for (std::size_t i = 0; i < skeleton.pixels.size(); ++i)
                if (skeleton.pixels[i]) out.pixels[i] = Rgba{255, 255, 255, 255};
            return out;
        }
    }
    throw ParseError("invalid view kind");
}

RasterImage resize_nearest(const RasterImage& img, int side) {
    if (img.width == side && img.height == side) return img;
    RasterImage out(side, side);
    for (int y = 0; y < side; ++y) {
        const int sy = static_cast<int>(static_cast<std::int64_t>(img.height) * y / side);
        for (int x = 0; x < side; ++x) {
            const int sx = static_cast<int>(static_cast<std::int64_t>(img.width) * x / side);
            out.at(x, y) = img.at(sx, sy);
        }
    }
    return out;
}

ModelInput prepare_input(const RasterImage& img, const ViewConfig& cfg) {
    const RasterImage resized = resize_nearest(img, cfg.input_side);
    ModelInput input;
    input.side = cfg.input_side;
    input.values.resize(static_cast<std::size_t>(cfg.input_side) * cfg.input_side * 3);
    for (std::size_t i = 0; i < resized.pixels.size(); ++i) {
        const Rgba p = resized.pixels[i];
        input.values[i * 3 + 0] = p.r / 255.0f;
        input.values[i * 3 + 1] = p.g / 255.0f;
        input.values[i * 3 + 2] = p.b / 255.0f;
    }
    return input;
}

} // namespace mve
