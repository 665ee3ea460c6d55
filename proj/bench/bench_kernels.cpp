// Compares the OpenMP kernels against their serial reference on large
// images and checks that outputs stay bit-identical while timing both.

#include <chrono>
#include <cstdio>
#include <string>

#include "mve/imaging.hpp"
#include "mve/rng.hpp"

namespace {

using Clock = std::chrono::steady_clock;

template <typename F>
double best_of(int repeats, F&& fn) {
    double best = 1e300;
    for (int i = 0; i < repeats; ++i) {
        const auto start = Clock::now();
        fn();
        const auto stop = Clock::now();
        best = std::min(best, std::chrono::duration<double, std::milli>(stop - start).count());
    }
    return best;
}

void report(const std::string& name, double serial_ms, double parallel_ms, bool identical) {
    std::printf("%-22s serial %9.2f ms   parallel %9.2f ms   speedup %5.2fx   %s\n", name.c_str(),
                serial_ms, parallel_ms, serial_ms / parallel_ms,
                identical ? "bit-identical" : "MISMATCH");
}

} // namespace

int main(int argc, char** argv) {
    const int side = argc > 1 ? std::stoi(argv[1]) : 2048;
    const int repeats = argc > 2 ? std::stoi(argv[2]) : 5;
    std::printf("image %dx%d, best of %d\n", side, side, repeats);

    mve::Rng rng(7);
    mve::RasterImage raster(side, side);
    for (auto& p : raster.pixels)
        p = mve::Rgba{static_cast<std::uint8_t>(rng.bounded(256)),
                      static_cast<std::uint8_t>(rng.bounded(256)),
                      static_cast<std::uint8_t>(rng.bounded(256)),
                      static_cast<std::uint8_t>(rng.bounded(256))};

    {
        mve::RasterImage serial_out, parallel_out;
        const double s = best_of(repeats, [&] { serial_out = mve::imaging::serial::composite_alpha(raster); });
        const double p = best_of(repeats, [&] { parallel_out = mve::imaging::composite_alpha(raster); });
        report("composite_alpha", s, p, serial_out == parallel_out);
    }
    {
        mve::GreyImage serial_out, parallel_out;
        const double s = best_of(repeats, [&] { serial_out = mve::imaging::serial::to_grey(raster); });
        const double p = best_of(repeats, [&] { parallel_out = mve::imaging::to_grey(raster); });
        report("to_grey", s, p, serial_out == parallel_out);
    }

    const mve::GreyImage grey = mve::imaging::to_grey(raster);
    {
        mve::BinaryImage serial_out, parallel_out;
        const double s =
            best_of(repeats, [&] { serial_out = mve::imaging::serial::binarize_adaptive(grey, 41, 2); });
        const double p =
            best_of(repeats, [&] { parallel_out = mve::imaging::binarize_adaptive(grey, 41, 2); });
        report("binarize_adaptive/41", s, p, serial_out == parallel_out);
    }

    // blobby binary image so thinning has real work to do
    mve::BinaryImage binary(side, side);
    for (int blob = 0; blob < side; ++blob) {
        const int cx = static_cast<int>(rng.bounded(static_cast<std::uint64_t>(side)));
        const int cy = static_cast<int>(rng.bounded(static_cast<std::uint64_t>(side)));
        const int r = 4 + static_cast<int>(rng.bounded(12));
        for (int y = std::max(0, cy - r); y < std::min(side, cy + r); ++y)
            for (int x = std::max(0, cx - r); x < std::min(side, cx + r); ++x)
                if ((x - cx) * (x - cx) + (y - cy) * (y - cy) <= r * r) binary.at(x, y) = 1;
    }
    {
        mve::BinaryImage serial_out, parallel_out;
        const double s = best_of(repeats, [&] { serial_out = mve::imaging::serial::skeletonize(binary); });
        const double p = best_of(repeats, [&] { parallel_out = mve::imaging::skeletonize(binary); });
        report("skeletonize", s, p, serial_out == parallel_out);
    }
    return 0;
}
