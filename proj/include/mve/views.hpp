#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "mve/image.hpp"

namespace mve {

enum class ViewKind { Original, Grey, Skeleton };

const char* view_name(ViewKind view);
ViewKind view_from_name(const std::string& name); // throws ParseError

struct ViewConfig {
    int blocksize = 41; // adaptive-threshold window, odd and >= 3
    int offset = 2;     // signed intensity subtracted from the local mean
    int input_side = 64;

    bool operator==(const ViewConfig&) const = default;
};

// Flattened classifier input: input_side x input_side pixels, 3 channels
// interleaved (R, G, B), row-major, each value in [0, 1].
struct ModelInput {
    int side = 0;
    std::vector<float> values;

    std::size_t feature_count() const { return values.size(); }
};

// Applies the view transformation:
//   Original -> alpha-composited image, otherwise unchanged
//   Grey     -> luminance replicated into 3 equal channels
//   Skeleton -> adaptive binarization restricted to the alpha>0 region,
//               thinned, rendered white-on-black in 3 channels
RasterImage transform_view(const RasterImage& img, ViewKind view, const ViewConfig& cfg);

// Nearest-neighbour resize with src index = floor(src_size * dst_index / dst_size).
RasterImage resize_nearest(const RasterImage& img, int side);

// Resize to cfg.input_side and scale channel values by 1/255.
ModelInput prepare_input(const RasterImage& img, const ViewConfig& cfg);

} // namespace mve
