#ifndef DEPTHGAZE_MAPS_HPP
#define DEPTHGAZE_MAPS_HPP

#include "depthgaze/grid.hpp"

namespace depthgaze {

enum class MapNorm { kSum1, kMax1, kRaw };

// Per-pixel non-negative saliency scores with a declared normalization.
struct SaliencyMap {
    GridD grid;
    MapNorm norm = MapNorm::kMax1;

    int width() const { return grid.width(); }
    int height() const { return grid.height(); }
};

// Dense fixation density; values are non-negative and sum to 1.
struct ProbabilityMap {
    GridD grid;

    int width() const { return grid.width(); }
    int height() const { return grid.height(); }
};

inline GridD normalized_sum1(GridD g) {
    const double s = grid_sum(g);
    if (s > 0.0) {
        for (size_t i = 0; i < g.size(); ++i) g[i] /= s;
    }
    return g;
}

inline GridD normalized_max1(GridD g) {
    const double m = grid_max(g);
    if (m > 0.0) {
        for (size_t i = 0; i < g.size(); ++i) g[i] /= m;
    }
    return g;
}

inline SaliencyMap make_saliency_max1(GridD g) {
    return SaliencyMap{normalized_max1(std::move(g)), MapNorm::kMax1};
}

inline SaliencyMap make_saliency_sum1(GridD g) {
    return SaliencyMap{normalized_sum1(std::move(g)), MapNorm::kSum1};
}

inline ProbabilityMap make_probability(GridD g) {
    return ProbabilityMap{normalized_sum1(std::move(g))};
}

// Isotropic Gaussian centered at (cx, cy), max-normalized (value 1 at the
// center when it is in-bounds).
GridD gaussian_bump(int width, int height, double cx, double cy, double sigma);

// 5% of the frame diagonal; the constant kernel size used for fixation
// densification, the center prior, and transition rendering.
inline double diag_sigma(int width, int height, double fraction = 0.05) {
    return fraction * std::sqrt(static_cast<double>(width) * width +
                                static_cast<double>(height) * height);
}

SaliencyMap center_prior(int width, int height);

} // namespace depthgaze

#endif
