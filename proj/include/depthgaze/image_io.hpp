#ifndef DEPTHGAZE_IMAGE_IO_HPP
#define DEPTHGAZE_IMAGE_IO_HPP

#include <array>
#include <cstdint>
#include <string>

#include "depthgaze/grid.hpp"

namespace depthgaze {

struct Rgb8Image {
    Grid<uint8_t> r, g, b;
    int width() const { return r.width(); }
    int height() const { return r.height(); }
};

// 8-bit RGB PNG. Grayscale or paletted sources are rejected; RGBA alpha is
// dropped. Throws CorruptFile on undecodable input.
Rgb8Image read_png_rgb8(const std::string& path);
void write_png_rgb8(const std::string& path, const Rgb8Image& img);

// 16-bit single-channel PNG (the raw depth encoding; value 0 = invalid).
Grid<uint16_t> read_png_gray16(const std::string& path);
void write_png_gray16(const std::string& path, const Grid<uint16_t>& img);

// 8-bit grayscale PNG (saliency prediction rasters; 255 = map maximum).
Grid<uint8_t> read_png_gray8(const std::string& path);
void write_png_gray8(const std::string& path, const Grid<uint8_t>& img);

} // namespace depthgaze

#endif
