#include "depthgaze/grid.hpp"
#include "depthgaze/maps.hpp"

#include <cmath>

namespace depthgaze {

GridD gaussian_blur(const GridD& src, double sigma) {
    if (sigma <= 0.0) return src;
    const int radius = std::max(1, static_cast<int>(std::ceil(3.0 * sigma)));
    std::vector<double> kernel(2 * radius + 1);
    for (int i = -radius; i <= radius; ++i)
        kernel[i + radius] = std::exp(-0.5 * (i * i) / (sigma * sigma));

    const int w = src.width();
    const int h = src.height();
    GridD tmp(w, h);
    GridD dst(w, h);

    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            double acc = 0.0, wsum = 0.0;
            const int lo = std::max(-radius, -x);
            const int hi = std::min(radius, w - 1 - x);
            for (int i = lo; i <= hi; ++i) {
                acc += kernel[i + radius] * src.at(x + i, y);
                wsum += kernel[i + radius];
            }
            tmp.at(x, y) = acc / wsum;
        }
    }
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            double acc = 0.0, wsum = 0.0;
            const int lo = std::max(-radius, -y);
            const int hi = std::min(radius, h - 1 - y);
            for (int i = lo; i <= hi; ++i) {
                acc += kernel[i + radius] * tmp.at(x, y + i);
                wsum += kernel[i + radius];
            }
            dst.at(x, y) = acc / wsum;
        }
    }
    return dst;
}

double disk_mean(const GridD& g, double cx, double cy, double radius) {
    double sum = 0.0;
    int n = 0;
    const int x0 = std::max(0, static_cast<int>(std::ceil(cx - radius)));
    const int x1 = std::min(g.width() - 1, static_cast<int>(std::floor(cx + radius)));
    const int y0 = std::max(0, static_cast<int>(std::ceil(cy - radius)));
    const int y1 = std::min(g.height() - 1, static_cast<int>(std::floor(cy + radius)));
    for (int y = y0; y <= y1; ++y)
        for (int x = x0; x <= x1; ++x) {
            const double dx = x - cx, dy = y - cy;
            if (dx * dx + dy * dy > radius * radius) continue;
            sum += g.at(x, y);
            ++n;
        }
    if (n == 0) return bilinear_sample(g, cx, cy);
    return sum / n;
}

GridD gaussian_bump(int width, int height, double cx, double cy, double sigma) {
    GridD g(width, height);
    const double inv = 1.0 / (2.0 * sigma * sigma);
    for (int y = 0; y < height; ++y) {
        for (int x = 0; x < width; ++x) {
            const double dx = x - cx;
            const double dy = y - cy;
            g.at(x, y) = std::exp(-(dx * dx + dy * dy) * inv);
        }
    }
    return g;
}

SaliencyMap center_prior(int width, int height) {
    const double sigma = diag_sigma(width, height);
    GridD g = gaussian_bump(width, height, width / 2.0, height / 2.0, sigma);
    return make_saliency_max1(std::move(g));
}

} // namespace depthgaze
