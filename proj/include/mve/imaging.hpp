#pragma once

#include "mve/image.hpp"

namespace mve::imaging {

// Alpha-blend every pixel onto an opaque white background.
// out = round((c*A + 255*(255-A)) / 255), output alpha = 255.
RasterImage composite_alpha(const RasterImage& img);

// Luminance conversion: round_half_up(0.299 R + 0.587 G + 0.114 B).
// Expects an already-composited image (alpha is ignored).
GreyImage to_grey(const RasterImage& img);

// Adaptive mean threshold: pixel is foreground iff
//   intensity < mean(blocksize x blocksize window, edge-clamped) - offset.
// Dark structures on a light background become foreground.
// Throws EvenOrTooSmallBlocksize unless blocksize is odd and >= 3.
BinaryImage binarize_adaptive(const GreyImage& img, int blocksize, int offset);

// Zhang-Suen two-subiteration thinning iterated to fixpoint.
// Neighborhood P2..P9 enumerated clockwise from north; border is background.
BinaryImage skeletonize(const BinaryImage& img);

// Serial reference implementations. The parallel kernels above must produce
// bit-identical output; tests and the benchmark target compare against these.
namespace serial {

RasterImage composite_alpha(const RasterImage& img);
GreyImage to_grey(const RasterImage& img);
BinaryImage binarize_adaptive(const GreyImage& img, int blocksize, int offset);
BinaryImage skeletonize(const BinaryImage& img);

} // namespace serial

} // namespace mve::imaging
