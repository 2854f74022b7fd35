#ifndef DEPTHGAZE_GRID_HPP
#define DEPTHGAZE_GRID_HPP

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <vector>

#include "depthgaze/errors.hpp"

namespace depthgaze {

// Row-major 2D raster. Pixel (x, y) sits at integer coordinates with
// x in [0, width) and y in [0, height); subpixel positions refer to
// pixel centers, so (0, 0) is the center of the top-left pixel.
template <typename T>
class Grid {
public:
    Grid() = default;
    Grid(int width, int height, T fill = T{})
        : width_(width), height_(height),
          data_(static_cast<size_t>(width) * height, fill) {}

    int width() const { return width_; }
    int height() const { return height_; }
    size_t size() const { return data_.size(); }
    bool empty() const { return data_.empty(); }

    T& at(int x, int y) { return data_[static_cast<size_t>(y) * width_ + x]; }
    const T& at(int x, int y) const { return data_[static_cast<size_t>(y) * width_ + x]; }
    T& operator[](size_t i) { return data_[i]; }
    const T& operator[](size_t i) const { return data_[i]; }

    T* data() { return data_.data(); }
    const T* data() const { return data_.data(); }
    std::vector<T>& raw() { return data_; }
    const std::vector<T>& raw() const { return data_; }

    bool same_dims(const Grid& other) const {
        return width_ == other.width_ && height_ == other.height_;
    }

    void fill(T v) { std::fill(data_.begin(), data_.end(), v); }

private:
    int width_ = 0;
    int height_ = 0;
    std::vector<T> data_;
};

using GridD = Grid<double>;

inline double grid_sum(const GridD& g) {
    double s = 0.0;
    for (size_t i = 0; i < g.size(); ++i) s += g[i];
    return s;
}

inline double grid_max(const GridD& g) {
    double m = g.empty() ? 0.0 : g[0];
    for (size_t i = 1; i < g.size(); ++i) m = std::max(m, g[i]);
    return m;
}

inline double grid_min(const GridD& g) {
    double m = g.empty() ? 0.0 : g[0];
    for (size_t i = 1; i < g.size(); ++i) m = std::min(m, g[i]);
    return m;
}

inline bool grid_finite(const GridD& g) {
    for (size_t i = 0; i < g.size(); ++i)
        if (!std::isfinite(g[i])) return false;
    return true;
}

// Bilinear sample at a subpixel position; coordinates are clamped to the
// valid pixel-center range first.
inline double bilinear_sample(const GridD& g, double x, double y) {
    x = std::clamp(x, 0.0, static_cast<double>(g.width() - 1));
    y = std::clamp(y, 0.0, static_cast<double>(g.height() - 1));
    const int x0 = static_cast<int>(std::floor(x));
    const int y0 = static_cast<int>(std::floor(y));
    const int x1 = std::min(x0 + 1, g.width() - 1);
    const int y1 = std::min(y0 + 1, g.height() - 1);
    const double fx = x - x0;
    const double fy = y - y0;
    return (1 - fy) * ((1 - fx) * g.at(x0, y0) + fx * g.at(x1, y0)) +
           fy * ((1 - fx) * g.at(x0, y1) + fx * g.at(x1, y1));
}

// Bilinear resample with pixel-center alignment: identical dimensions give
// back the input values exactly.
inline GridD resample_bilinear(const GridD& src, int width, int height) {
    if (src.width() == width && src.height() == height) return src;
    GridD dst(width, height);
    const double sx = static_cast<double>(src.width()) / width;
    const double sy = static_cast<double>(src.height()) / height;
    for (int y = 0; y < height; ++y) {
        const double fy = (y + 0.5) * sy - 0.5;
        for (int x = 0; x < width; ++x) {
            const double fx = (x + 0.5) * sx - 0.5;
            dst.at(x, y) = bilinear_sample(src, fx, fy);
        }
    }
    return dst;
}

template <typename T>
Grid<T> resample_nearest(const Grid<T>& src, int width, int height) {
    if (src.width() == width && src.height() == height) return src;
    Grid<T> dst(width, height);
    const double sx = static_cast<double>(src.width()) / width;
    const double sy = static_cast<double>(src.height()) / height;
    for (int y = 0; y < height; ++y) {
        int syi = std::clamp(static_cast<int>(std::floor((y + 0.5) * sy)), 0, src.height() - 1);
        for (int x = 0; x < width; ++x) {
            int sxi = std::clamp(static_cast<int>(std::floor((x + 0.5) * sx)), 0, src.width() - 1);
            dst.at(x, y) = src.at(sxi, syi);
        }
    }
    return dst;
}

// Separable Gaussian blur with a truncated kernel renormalized at the
// borders, so constants are preserved exactly.
GridD gaussian_blur(const GridD& src, double sigma);

// Mean over the pixels inside a disk; falls back to a bilinear sample when
// the disk covers no pixel center.
double disk_mean(const GridD& g, double cx, double cy, double radius);

inline GridD mirror_horizontal(const GridD& src) {
    GridD dst(src.width(), src.height());
    for (int y = 0; y < src.height(); ++y)
        for (int x = 0; x < src.width(); ++x)
            dst.at(x, y) = src.at(src.width() - 1 - x, y);
    return dst;
}

} // namespace depthgaze

#endif
