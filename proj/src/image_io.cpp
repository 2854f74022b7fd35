#include "depthgaze/image_io.hpp"

#include <cstdio>
#include <memory>
#include <vector>

#include <png.h>

#include "depthgaze/errors.hpp"

namespace depthgaze {

namespace {

struct FileCloser {
    void operator()(FILE* f) const {
        if (f) std::fclose(f);
    }
};
using FilePtr = std::unique_ptr<FILE, FileCloser>;

struct PngReader {
    png_structp png = nullptr;
    png_infop info = nullptr;
    ~PngReader() {
        if (png) png_destroy_read_struct(&png, info ? &info : nullptr, nullptr);
    }
};

struct PngWriter {
    png_structp png = nullptr;
    png_infop info = nullptr;
    ~PngWriter() {
        if (png) png_destroy_write_struct(&png, info ? &info : nullptr);
    }
};

// Decodes into 8 or 16 bit rows after normalizing the color type.
// want_rgb selects RGB8 output, otherwise GRAY at want_bit_depth.
std::vector<std::vector<png_byte>> decode_png(const std::string& path, bool want_rgb,
                                              int want_bit_depth, int* out_w, int* out_h) {
    FilePtr file(std::fopen(path.c_str(), "rb"));
    if (!file) throw CorruptFile("cannot open " + path);

    png_byte sig[8];
    if (std::fread(sig, 1, 8, file.get()) != 8 || png_sig_cmp(sig, 0, 8) != 0)
        throw CorruptFile("not a PNG file: " + path);

    PngReader rd;
    rd.png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
    if (!rd.png) throw CorruptFile("png read init failed: " + path);
    rd.info = png_create_info_struct(rd.png);
    if (!rd.info) throw CorruptFile("png info init failed: " + path);
    if (setjmp(png_jmpbuf(rd.png))) throw CorruptFile("png decode failed: " + path);

    png_init_io(rd.png, file.get());
    png_set_sig_bytes(rd.png, 8);
    png_read_info(rd.png, rd.info);

    const int width = png_get_image_width(rd.png, rd.info);
    const int height = png_get_image_height(rd.png, rd.info);
    const int bit_depth = png_get_bit_depth(rd.png, rd.info);
    const int color_type = png_get_color_type(rd.png, rd.info);

    if (want_rgb) {
        if (color_type == PNG_COLOR_TYPE_PALETTE) png_set_palette_to_rgb(rd.png);
        if (color_type == PNG_COLOR_TYPE_GRAY || color_type == PNG_COLOR_TYPE_GRAY_ALPHA)
            png_set_gray_to_rgb(rd.png);
        if (bit_depth == 16) png_set_strip_16(rd.png);
        if (color_type & PNG_COLOR_MASK_ALPHA) png_set_strip_alpha(rd.png);
    } else {
        if (color_type != PNG_COLOR_TYPE_GRAY)
            throw CorruptFile("expected single-channel PNG: " + path);
        if (want_bit_depth == 16 && bit_depth != 16)
            throw CorruptFile("expected 16-bit depth PNG: " + path);
        if (want_bit_depth == 8 && bit_depth == 16) png_set_strip_16(rd.png);
        if (bit_depth < 8) png_set_expand_gray_1_2_4_to_8(rd.png);
    }
    png_read_update_info(rd.png, rd.info);

    const size_t rowbytes = png_get_rowbytes(rd.png, rd.info);
    std::vector<std::vector<png_byte>> rows(height, std::vector<png_byte>(rowbytes));
    std::vector<png_bytep> row_ptrs(height);
    for (int y = 0; y < height; ++y) row_ptrs[y] = rows[y].data();
    png_read_image(rd.png, row_ptrs.data());
    png_read_end(rd.png, nullptr);

    *out_w = width;
    *out_h = height;
    return rows;
}

void encode_png(const std::string& path, int width, int height, int bit_depth,
                int color_type, const std::vector<png_bytep>& row_ptrs) {
    FilePtr file(std::fopen(path.c_str(), "wb"));
    if (!file) throw IoError("cannot write " + path);

    PngWriter wr;
    wr.png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
    if (!wr.png) throw IoError("png write init failed: " + path);
    wr.info = png_create_info_struct(wr.png);
    if (!wr.info) throw IoError("png info init failed: " + path);
    if (setjmp(png_jmpbuf(wr.png))) throw IoError("png encode failed: " + path);

    png_init_io(wr.png, file.get());
    png_set_IHDR(wr.png, wr.info, width, height, bit_depth, color_type,
                 PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
    png_write_info(wr.png, wr.info);
    png_write_image(wr.png, const_cast<png_bytep*>(row_ptrs.data()));
    png_write_end(wr.png, nullptr);
}

} // namespace

Rgb8Image read_png_rgb8(const std::string& path) {
    int w = 0, h = 0;
    auto rows = decode_png(path, true, 8, &w, &h);
    Rgb8Image img{Grid<uint8_t>(w, h), Grid<uint8_t>(w, h), Grid<uint8_t>(w, h)};
    for (int y = 0; y < h; ++y) {
        const png_byte* row = rows[y].data();
        for (int x = 0; x < w; ++x) {
            img.r.at(x, y) = row[3 * x + 0];
            img.g.at(x, y) = row[3 * x + 1];
            img.b.at(x, y) = row[3 * x + 2];
        }
    }
    return img;
}

void write_png_rgb8(const std::string& path, const Rgb8Image& img) {
    const int w = img.width();
    const int h = img.height();
    std::vector<std::vector<png_byte>> rows(h, std::vector<png_byte>(static_cast<size_t>(w) * 3));
    std::vector<png_bytep> ptrs(h);
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            rows[y][3 * x + 0] = img.r.at(x, y);
            rows[y][3 * x + 1] = img.g.at(x, y);
            rows[y][3 * x + 2] = img.b.at(x, y);
        }
        ptrs[y] = rows[y].data();
    }
    encode_png(path, w, h, 8, PNG_COLOR_TYPE_RGB, ptrs);
}

Grid<uint16_t> read_png_gray16(const std::string& path) {
    int w = 0, h = 0;
    auto rows = decode_png(path, false, 16, &w, &h);
    Grid<uint16_t> img(w, h);
    for (int y = 0; y < h; ++y) {
        const png_byte* row = rows[y].data();
        for (int x = 0; x < w; ++x) {
            // PNG stores 16-bit samples big-endian.
            img.at(x, y) = static_cast<uint16_t>((row[2 * x] << 8) | row[2 * x + 1]);
        }
    }
    return img;
}

void write_png_gray16(const std::string& path, const Grid<uint16_t>& img) {
    const int w = img.width();
    const int h = img.height();
    std::vector<std::vector<png_byte>> rows(h, std::vector<png_byte>(static_cast<size_t>(w) * 2));
    std::vector<png_bytep> ptrs(h);
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            rows[y][2 * x + 0] = static_cast<png_byte>(img.at(x, y) >> 8);
            rows[y][2 * x + 1] = static_cast<png_byte>(img.at(x, y) & 0xFF);
        }
        ptrs[y] = rows[y].data();
    }
    encode_png(path, w, h, 16, PNG_COLOR_TYPE_GRAY, ptrs);
}

Grid<uint8_t> read_png_gray8(const std::string& path) {
    int w = 0, h = 0;
    auto rows = decode_png(path, false, 8, &w, &h);
    Grid<uint8_t> img(w, h);
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) img.at(x, y) = rows[y][x];
    return img;
}

void write_png_gray8(const std::string& path, const Grid<uint8_t>& img) {
    const int w = img.width();
    const int h = img.height();
    std::vector<png_bytep> ptrs(h);
    std::vector<std::vector<png_byte>> rows(h, std::vector<png_byte>(w));
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) rows[y][x] = img.at(x, y);
        ptrs[y] = rows[y].data();
    }
    encode_png(path, w, h, 8, PNG_COLOR_TYPE_GRAY, ptrs);
}

} // namespace depthgaze
