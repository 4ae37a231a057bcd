#include "lfrr/png_io.hpp"

#include <png.h>

#include <cmath>
#include <cstdio>
#include <memory>

namespace lfrr {

namespace {

struct FileCloser {
    void operator()(std::FILE* f) const {
        if (f) std::fclose(f);
    }
};
using FilePtr = std::unique_ptr<std::FILE, FileCloser>;

unsigned char quantize(double v) {
    double s = v * 255.0 + 0.5;
    if (s < 0.0) s = 0.0;
    if (s > 255.0) s = 255.0;
    return static_cast<unsigned char>(s);
}

}  // namespace

void write_png_mosaic(const std::filesystem::path& path, const LightField& lf) {
    if (lf.C() != 1 && lf.C() != 3)
        throw ChannelMismatch("PNG mosaic supports C=1 or C=3, got C=" +
                              std::to_string(lf.C()));

    const std::int64_t rows = lf.U() * lf.X();
    const std::int64_t cols = lf.V() * lf.Y();

    FilePtr fp(std::fopen(path.string().c_str(), "wb"));
    if (!fp) throw IoError("cannot open " + path.string() + " for writing");

    png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
    if (!png) throw IoError("png_create_write_struct failed");
    png_infop info = png_create_info_struct(png);
    if (!info) {
        png_destroy_write_struct(&png, nullptr);
        throw IoError("png_create_info_struct failed");
    }
    if (setjmp(png_jmpbuf(png))) {
        png_destroy_write_struct(&png, &info);
        throw IoError("libpng write error for " + path.string());
    }

    png_init_io(png, fp.get());
    png_set_IHDR(png, info, static_cast<png_uint_32>(cols), static_cast<png_uint_32>(rows),
                 8, lf.C() == 3 ? PNG_COLOR_TYPE_RGB : PNG_COLOR_TYPE_GRAY,
                 PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
    png_write_info(png, info);

    std::vector<unsigned char> row(static_cast<std::size_t>(cols * lf.C()));
    for (std::int64_t r = 0; r < rows; ++r) {
        const std::int64_t u = r / lf.X();
        const std::int64_t x = r % lf.X();
        std::size_t o = 0;
        for (std::int64_t v = 0; v < lf.V(); ++v)
            for (std::int64_t y = 0; y < lf.Y(); ++y)
                for (std::int64_t c = 0; c < lf.C(); ++c)
                    row[o++] = quantize(lf.at(u, v, x, y, c));
        png_write_row(png, row.data());
    }
    png_write_end(png, nullptr);
    png_destroy_write_struct(&png, &info);
}

LightField read_png_mosaic(const std::filesystem::path& path, std::int64_t U,
                           std::int64_t V) {
    if (U < 1 || V < 1)
        throw ValueOutOfRange("view grid must be at least 1x1");

    FilePtr fp(std::fopen(path.string().c_str(), "rb"));
    if (!fp) throw IoError("cannot open " + path.string() + " for reading");

    unsigned char sig[8] = {};
    if (std::fread(sig, 1, 8, fp.get()) != 8 || png_sig_cmp(sig, 0, 8))
        throw BadMagic(path.string() + ": not a PNG file");

    png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
    if (!png) throw IoError("png_create_read_struct failed");
    png_infop info = png_create_info_struct(png);
    if (!info) {
        png_destroy_read_struct(&png, nullptr, nullptr);
        throw IoError("png_create_info_struct failed");
    }
    if (setjmp(png_jmpbuf(png))) {
        png_destroy_read_struct(&png, &info, nullptr);
        throw IoError("libpng read error for " + path.string());
    }

    png_init_io(png, fp.get());
    png_set_sig_bytes(png, 8);
    png_read_info(png, info);

    const png_uint_32 cols = png_get_image_width(png, info);
    const png_uint_32 rows = png_get_image_height(png, info);
    const png_byte color = png_get_color_type(png, info);
    const png_byte depth = png_get_bit_depth(png, info);

    // Normalize everything to 8-bit gray or RGB.
    if (depth == 16) png_set_strip_16(png);
    if (color == PNG_COLOR_TYPE_PALETTE) png_set_palette_to_rgb(png);
    if (color == PNG_COLOR_TYPE_GRAY && depth < 8) png_set_expand_gray_1_2_4_to_8(png);
    if (png_get_valid(png, info, PNG_INFO_tRNS)) png_set_tRNS_to_alpha(png);
    if (color & PNG_COLOR_MASK_ALPHA) png_set_strip_alpha(png);
    png_read_update_info(png, info);

    const int channels = png_get_channels(png, info);
    if (channels != 1 && channels != 3) {
        png_destroy_read_struct(&png, &info, nullptr);
        throw ChannelMismatch("PNG decodes to " + std::to_string(channels) +
                              " channels, expected 1 or 3");
    }

    if (rows % U != 0 || cols % V != 0) {
        png_destroy_read_struct(&png, &info, nullptr);
        throw DimensionMismatch("image " + std::to_string(cols) + "x" + std::to_string(rows) +
                                " is not divisible by the " + std::to_string(U) + "x" +
                                std::to_string(V) + " view grid");
    }
    const std::int64_t X = rows / U;
    const std::int64_t Y = cols / V;
    const std::int64_t C = channels;

    LightField lf = LightField::zeros(U, V, X, Y, C);
    std::vector<unsigned char> row(static_cast<std::size_t>(cols) * channels);
    for (png_uint_32 r = 0; r < rows; ++r) {
        png_read_row(png, row.data(), nullptr);
        const std::int64_t u = r / X;
        const std::int64_t x = r % X;
        std::size_t o = 0;
        for (std::int64_t v = 0; v < V; ++v)
            for (std::int64_t y = 0; y < Y; ++y)
                for (std::int64_t c = 0; c < C; ++c)
                    lf.at(u, v, x, y, c) = static_cast<double>(row[o++]) / 255.0;
    }
    png_read_end(png, nullptr);
    png_destroy_read_struct(&png, &info, nullptr);
    return lf;
}

}  // namespace lfrr
