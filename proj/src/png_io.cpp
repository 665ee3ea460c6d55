#include "mve/png_io.hpp"

#include <png.h>

#include <cstdio>
#include <memory>
#include <vector>

#include "mve/errors.hpp"

namespace mve::png {

namespace {

struct FileCloser {
    void operator()(std::FILE* f) const {
        if (f) std::fclose(f);
    }
};
using FilePtr = std::unique_ptr<std::FILE, FileCloser>;

[[noreturn]] void fail_read(const std::filesystem::path& path, const char* why) {
    throw UnreadableImage("cannot read PNG '" + path.string() + "': " + why);
}

} // namespace

RasterImage read_rgba(const std::filesystem::path& path) {
    FilePtr file(std::fopen(path.string().c_str(), "rb"));
    if (!file) fail_read(path, "cannot open file");

    png_byte header[8];
    if (std::fread(header, 1, 8, file.get()) != 8 || png_sig_cmp(header, 0, 8) != 0)
        fail_read(path, "not a PNG file");

    png_structp png_ptr = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
    if (!png_ptr) fail_read(path, "png_create_read_struct failed");
    png_infop info_ptr = png_create_info_struct(png_ptr);
    if (!info_ptr) {
        png_destroy_read_struct(&png_ptr, nullptr, nullptr);
        fail_read(path, "png_create_info_struct failed");
    }

    if (setjmp(png_jmpbuf(png_ptr))) {
        png_destroy_read_struct(&png_ptr, &info_ptr, nullptr);
        fail_read(path, "libpng decode error");
    }

    png_init_io(png_ptr, file.get());
    png_set_sig_bytes(png_ptr, 8);
    png_read_info(png_ptr, info_ptr);

    // normalize everything to 8-bit RGBA
    png_set_palette_to_rgb(png_ptr);
    png_set_expand_gray_1_2_4_to_8(png_ptr);
    if (png_get_valid(png_ptr, info_ptr, PNG_INFO_tRNS)) png_set_tRNS_to_alpha(png_ptr);
    png_set_strip_16(png_ptr);
    png_set_gray_to_rgb(png_ptr);
    png_set_filler(png_ptr, 0xff, PNG_FILLER_AFTER);
    png_read_update_info(png_ptr, info_ptr);

    const png_uint_32 width = png_get_image_width(png_ptr, info_ptr);
    const png_uint_32 height = png_get_image_height(png_ptr, info_ptr);
    if (png_get_rowbytes(png_ptr, info_ptr) != width * 4) {
        png_destroy_read_struct(&png_ptr, &info_ptr, nullptr);
        fail_read(path, "unexpected row size after RGBA normalization");
    }

    RasterImage img(static_cast<int>(width), static_cast<int>(height));
    std::vector<png_bytep> rows(height);
    for (png_uint_32 y = 0; y < height; ++y)
        rows[y] = reinterpret_cast<png_bytep>(img.pixels.data() + static_cast<std::size_t>(y) * width);
    png_read_image(png_ptr, rows.data());
    png_read_end(png_ptr, nullptr);
    png_destroy_read_struct(&png_ptr, &info_ptr, nullptr);
    return img;
}

namespace {

void write_png(const std::filesystem::path& path, int width, int height, int color_type,
               const std::vector<png_bytep>& rows) {
    FilePtr file(std::fopen(path.string().c_str(), "wb"));
    if (!file) throw IoError("cannot open '" + path.string() + "' for writing");

    png_structp png_ptr = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
    if (!png_ptr) throw IoError("png_create_write_struct failed");
    png_infop info_ptr = png_create_info_struct(png_ptr);
    if (!info_ptr) {
        png_destroy_write_struct(&png_ptr, nullptr);
        throw IoError("png_create_info_struct failed");
    }
    if (setjmp(png_jmpbuf(png_ptr))) {
        png_destroy_write_struct(&png_ptr, &info_ptr);
        throw IoError("libpng encode error for '" + path.string() + "'");
    }

    png_init_io(png_ptr, file.get());
    png_set_IHDR(png_ptr, info_ptr, static_cast<png_uint_32>(width),
                 static_cast<png_uint_32>(height), 8, color_type, PNG_INTERLACE_NONE,
                 PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
    png_write_info(png_ptr, info_ptr);
    png_write_image(png_ptr, const_cast<png_bytepp>(rows.data()));
    png_write_end(png_ptr, nullptr);
    png_destroy_write_struct(&png_ptr, &info_ptr);
}

} // namespace

void write_rgba(const std::filesystem::path& path, const RasterImage& img) {
    std::vector<png_bytep> rows(img.height);
    for (int y = 0; y < img.height; ++y)
        rows[y] = reinterpret_cast<png_bytep>(
            const_cast<Rgba*>(img.pixels.data() + static_cast<std::size_t>(y) * img.width));
    write_png(path, img.width, img.height, PNG_COLOR_TYPE_RGBA, rows);
}

void write_grey(const std::filesystem::path& path, const GreyImage& img) {
    std::vector<png_bytep> rows(img.height);
    for (int y = 0; y < img.height; ++y)
        rows[y] = const_cast<png_bytep>(img.pixels.data() + static_cast<std::size_t>(y) * img.width);
    write_png(path, img.width, img.height, PNG_COLOR_TYPE_GRAY, rows);
}

void write_binary(const std::filesystem::path& path, const BinaryImage& img) {
    GreyImage grey(img.width, img.height);
    for (std::size_t i = 0; i < img.pixels.size(); ++i)
        grey.pixels[i] = img.pixels[i] ? 255 : 0;
    write_grey(path, grey);
}

} // namespace mve::png
