#include "mve/imaging.hpp"

#include <cstdint>
#include <string>
#include <vector>

#include "mve/errors.hpp"

namespace mve::imaging {

namespace {

// round(x / 255) for x >= 0; exact halves cannot occur for integer x
inline std::uint8_t div255_round(int x) {
    return static_cast<std::uint8_t>((x + 127) / 255);
}

inline Rgba blend_white(Rgba p) {
    const int a = p.a;
    const int ia = 255 - a;
    return Rgba{div255_round(p.r * a + 255 * ia),
                div255_round(p.g * a + 255 * ia),
                div255_round(p.b * a + 255 * ia), 255};
}

// round_half_up of (299 R + 587 G + 114 B) / 1000; weights sum to exactly 1000
inline std::uint8_t luma(Rgba p) {
    const int s = 299 * p.r + 587 * p.g + 114 * p.b;
    return static_cast<std::uint8_t>((s + 500) / 1000);
}

void check_blocksize(int blocksize) {
    if (blocksize < 3 || blocksize % 2 == 0)
        throw EvenOrTooSmallBlocksize("blocksize must be odd and >= 3, got " +
                                      std::to_string(blocksize));
}

// Integral image padded with a zero row/column so window sums need no guards.
// integral[(y+1)*(w+1) + (x+1)] = sum of img over [0..x] x [0..y].
void build_integral(const GreyImage& img, std::vector<std::int64_t>& integral, bool parallel) {
    const int w = img.width, h = img.height;
    integral.assign(static_cast<std::size_t>(w + 1) * (h + 1), 0);

#pragma omp parallel for schedule(static) if (parallel)
    for (int y = 0; y < h; ++y) {
        std::int64_t row_sum = 0;
        const std::uint8_t* src = img.pixels.data() + static_cast<std::size_t>(y) * w;
        std::int64_t* dst = integral.data() + static_cast<std::size_t>(y + 1) * (w + 1) + 1;
        for (int x = 0; x < w; ++x) {
            row_sum += src[x];
            dst[x] = row_sum;
        }
    }

    // column-wise accumulation; each column is an independent scan
#pragma omp parallel for schedule(static) if (parallel)
    for (int x = 1; x <= w; ++x) {
        std::int64_t acc = 0;
        for (int y = 1; y <= h; ++y) {
            acc += integral[static_cast<std::size_t>(y) * (w + 1) + x];
            integral[static_cast<std::size_t>(y) * (w + 1) + x] = acc;
        }
    }
}

BinaryImage binarize_impl(const GreyImage& img, int blocksize, int offset, bool parallel) {
    check_blocksize(blocksize);
    const int w = img.width, h = img.height;
    const int r = blocksize / 2;

    std::vector<std::int64_t> integral;
    build_integral(img, integral, parallel);

    BinaryImage out(w, h);
#pragma omp parallel for schedule(static) if (parallel)
    for (int y = 0; y < h; ++y) {
        const int y0 = y - r < 0 ? 0 : y - r;
        const int y1 = y + r >= h ? h - 1 : y + r;
        const std::int64_t* top = integral.data() + static_cast<std::size_t>(y0) * (w + 1);
        const std::int64_t* bot = integral.data() + static_cast<std::size_t>(y1 + 1) * (w + 1);
        for (int x = 0; x < w; ++x) {
            const int x0 = x - r < 0 ? 0 : x - r;
            const int x1 = x + r >= w ? w - 1 : x + r;
            const std::int64_t sum = bot[x1 + 1] - top[x1 + 1] - bot[x0] + top[x0];
            const std::int64_t count = static_cast<std::int64_t>(x1 - x0 + 1) * (y1 - y0 + 1);
            // p < sum/count - offset  <=>  (p + offset) * count < sum, exactly
            const std::int64_t lhs =
                (static_cast<std::int64_t>(img.at(x, y)) + offset) * count;
            out.at(x, y) = lhs < sum ? 1 : 0;
        }
    }
    return out;
}

// One Zhang-Suen subiteration: mark then delete simultaneously.
// Returns the number of deleted pixels. Subiteration 0 uses the
// (P2 P4 P6, P4 P6 P8) conditions, subiteration 1 uses (P2 P4 P8, P2 P6 P8).
std::size_t thin_subiter(BinaryImage& img, int sub, std::vector<std::uint8_t>& marks,
                         bool parallel) {
    const int w = img.width, h = img.height;
    marks.assign(img.pixels.size(), 0);
    std::int64_t deleted = 0;

#pragma omp parallel for schedule(static) reduction(+ : deleted) if (parallel)
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            if (!img.at(x, y)) continue;
            const auto n = [&](int dx, int dy) -> int {
                const int nx = x + dx, ny = y + dy;
                if (nx < 0 || nx >= w || ny < 0 || ny >= h) return 0;
                return img.at(nx, ny) ? 1 : 0;
            };
            // clockwise from north
            const int p2 = n(0, -1), p3 = n(1, -1), p4 = n(1, 0), p5 = n(1, 1);
            const int p6 = n(0, 1), p7 = n(-1, 1), p8 = n(-1, 0), p9 = n(-1, -1);

            const int b = p2 + p3 + p4 + p5 + p6 + p7 + p8 + p9;
            if (b < 2 || b > 6) continue;

            const int a = (p2 == 0 && p3 == 1) + (p3 == 0 && p4 == 1) +
                          (p4 == 0 && p5 == 1) + (p5 == 0 && p6 == 1) +
                          (p6 == 0 && p7 == 1) + (p7 == 0 && p8 == 1) +
                          (p8 == 0 && p9 == 1) + (p9 == 0 && p2 == 1);
            if (a != 1) continue;

            const int m1 = sub == 0 ? p2 * p4 * p6 : p2 * p4 * p8;
            const int m2 = sub == 0 ? p4 * p6 * p8 : p2 * p6 * p8;
            if (m1 != 0 || m2 != 0) continue;

            marks[static_cast<std::size_t>(y) * w + x] = 1;
            ++deleted;
        }
    }

    if (deleted > 0) {
        const std::size_t total = img.pixels.size();
#pragma omp parallel for schedule(static) if (parallel)
        for (std::int64_t i = 0; i < static_cast<std::int64_t>(total); ++i) {
            if (marks[static_cast<std::size_t>(i)]) img.pixels[static_cast<std::size_t>(i)] = 0;
        }
    }
    return static_cast<std::size_t>(deleted);
}

BinaryImage skeletonize_impl(const BinaryImage& img, bool parallel) {
    BinaryImage work = img;
    for (auto& p : work.pixels) p = p ? 1 : 0;

    std::vector<std::uint8_t> marks;
    while (true) {
        const std::size_t d1 = thin_subiter(work, 0, marks, parallel);
        const std::size_t d2 = thin_subiter(work, 1, marks, parallel);
        if (d1 + d2 == 0) break;
    }
    return work;
}

RasterImage composite_impl(const RasterImage& img, bool parallel) {
    RasterImage out;
    out.width = img.width;
    out.height = img.height;
    out.pixels.resize(img.pixels.size());
    const std::int64_t total = static_cast<std::int64_t>(img.pixels.size());
#pragma omp parallel for schedule(static) if (parallel)
    for (std::int64_t i = 0; i < total; ++i)
        out.pixels[static_cast<std::size_t>(i)] = blend_white(img.pixels[static_cast<std::size_t>(i)]);
    return out;
}

GreyImage to_grey_impl(const RasterImage& img, bool parallel) {
    GreyImage out;
    out.width = img.width;
    out.height = img.height;
    out.pixels.resize(img.pixels.size());
    const std::int64_t total = static_cast<std::int64_t>(img.pixels.size());
#pragma omp parallel for schedule(static) if (parallel)
    for (std::int64_t i = 0; i < total; ++i)
        out.pixels[static_cast<std::size_t>(i)] = luma(img.pixels[static_cast<std::size_t>(i)]);
    return out;
}

} // namespace

RasterImage composite_alpha(const RasterImage& img) { return composite_impl(img, true); }
GreyImage to_grey(const RasterImage& img) { return to_grey_impl(img, true); }
BinaryImage binarize_adaptive(const GreyImage& img, int blocksize, int offset) {
    return binarize_impl(img, blocksize, offset, true);
}
BinaryImage skeletonize(const BinaryImage& img) { return skeletonize_impl(img, true); }

namespace serial {

RasterImage composite_alpha(const RasterImage& img) { return composite_impl(img, false); }
GreyImage to_grey(const RasterImage& img) { return to_grey_impl(img, false); }
BinaryImage binarize_adaptive(const GreyImage& img, int blocksize, int offset) {
    return binarize_impl(img, blocksize, offset, false);
}
BinaryImage skeletonize(const BinaryImage& img) { return skeletonize_impl(img, false); }

} // namespace serial

} // namespace mve::imaging
