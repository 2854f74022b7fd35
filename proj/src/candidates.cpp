#include "depthgaze/candidates.hpp"

#include <algorithm>
#include <cmath>

#include "depthgaze/errors.hpp"
#include "depthgaze/maps.hpp"

namespace depthgaze {

namespace {

struct WeightedCentroid {
    double x = 0.0, y = 0.0, mass = 0.0;
};

WeightedCentroid window_centroid(const GridD& map, double cx, double cy, double radius) {
    WeightedCentroid c;
    int x0 = std::max(0, static_cast<int>(std::ceil(cx - radius)));
    int x1 = std::min(map.width() - 1, static_cast<int>(std::floor(cx + radius)));
    int y0 = std::max(0, static_cast<int>(std::ceil(cy - radius)));
    int y1 = std::min(map.height() - 1, static_cast<int>(std::floor(cy + radius)));
    const double r2 = radius * radius;
    for (int y = y0; y <= y1; ++y)
        for (int x = x0; x <= x1; ++x) {
            double dx = x - cx, dy = y - cy;
            if (dx * dx + dy * dy > r2) continue;
            double w = map.at(x, y);
            if (w <= 0.0) continue;
            c.x += w * x;
            c.y += w * y;
            c.mass += w;
        }
    if (c.mass > 0.0) {
        c.x /= c.mass;
        c.y /= c.mass;
    }
    return c;
}

} // namespace

std::vector<std::pair<double, double>> mean_shift_modes(const GridD& map, double bandwidth) {
    if (map.empty() || grid_max(map) <= 0.0)
        throw DegenerateMap("mean_shift_modes: map carries no mass");

    struct Converged {
        double x, y, amp;
    };
    std::vector<Converged> points;
    const double step = bandwidth / 2.0;
    for (double sy = bandwidth / 4.0; sy < map.height(); sy += step)
        for (double sx = bandwidth / 4.0; sx < map.width(); sx += step) {
            double px = sx, py = sy;
            bool alive = true;
            for (int it = 0; it < 200; ++it) {
                WeightedCentroid c = window_centroid(map, px, py, bandwidth);
                if (c.mass <= 0.0) {
                    alive = false;
                    break;
                }
                double shift = std::hypot(c.x - px, c.y - py);
                px = c.x;
                py = c.y;
                if (shift < 0.1) break;
            }
            if (alive) points.push_back({px, py, bilinear_sample(map, px, py)});
        }

    std::sort(points.begin(), points.end(), [](const Converged& a, const Converged& b) {
        if (a.amp != b.amp) return a.amp > b.amp;
        if (a.y != b.y) return a.y < b.y;
        return a.x < b.x;
    });

    std::vector<std::pair<double, double>> modes;
    const double merge2 = (bandwidth / 2.0) * (bandwidth / 2.0);
    for (const Converged& p : points) {
        bool taken = false;
        for (const auto& m : modes) {
            double dx = m.first - p.x, dy = m.second - p.y;
            if (dx * dx + dy * dy < merge2) {
                taken = true;
                break;
            }
        }
        if (!taken) modes.emplace_back(p.x, p.y);
    }
    return modes;
}

namespace {

// Mean squared distance from the center of an isotropic Gaussian of the
// given sigma, restricted to a disk of radius R.
double truncated_second_moment(double sigma, double R) {
    const double z = R * R / (2.0 * sigma * sigma);
    const double denom = 1.0 - std::exp(-z);
    if (denom <= 0.0) return R * R / 2.0;
    return 2.0 * sigma * sigma * (1.0 - std::exp(-z) * (1.0 + z)) / denom;
}

} // namespace

GaussianFit fit_gaussian(const GridD& map, double mode_x, double mode_y, double bandwidth) {
    GaussianFit fit;
    fit.amplitude = bilinear_sample(map, mode_x, mode_y);

    const double R = 2.0 * bandwidth;
    const double r2max = R * R;
    double m2 = 0.0, mass = 0.0;
    int x0 = std::max(0, static_cast<int>(std::ceil(mode_x - R)));
    int x1 = std::min(map.width() - 1, static_cast<int>(std::floor(mode_x + R)));
    int y0 = std::max(0, static_cast<int>(std::ceil(mode_y - R)));
    int y1 = std::min(map.height() - 1, static_cast<int>(std::floor(mode_y + R)));
    for (int y = y0; y <= y1; ++y)
        for (int x = x0; x <= x1; ++x) {
            double dx = x - mode_x, dy = y - mode_y;
            double d2 = dx * dx + dy * dy;
            if (d2 > r2max) continue;
            double w = std::max(0.0, map.at(x, y));
            m2 += w * d2;
            mass += w;
        }
    if (mass <= 0.0) {
        fit.sigma = 1.0;
        return fit;
    }
    m2 /= mass;

    // truncated_second_moment is increasing in sigma with supremum R^2/2;
    // beyond that the window looks flat and the size is capped at R.
    double lo = 0.25, hi = R;
    if (m2 >= truncated_second_moment(hi, R)) {
        fit.sigma = std::max(1.0, hi);
        return fit;
    }
    for (int it = 0; it < 80; ++it) {
        double mid = 0.5 * (lo + hi);
        if (truncated_second_moment(mid, R) < m2)
            lo = mid;
        else
            hi = mid;
    }
    fit.sigma = std::max(1.0, 0.5 * (lo + hi));
    return fit;
}

namespace {

bool within(const Candidate& a, const Candidate& b, double radius) {
    double dx = a.x - b.x, dy = a.y - b.y;
    return dx * dx + dy * dy < radius * radius;
}

} // namespace

CandidateSet extract_candidates(const GridD& static_map, const MotionFeatures& motion,
                                const GridD& depth,
                                const std::vector<AnnotationRecord>& annotations,
                                int frame_index, const CandidateParams& params) {
    if (!static_map.same_dims(motion.dog_mag) || !static_map.same_dims(depth))
        throw DimensionMismatch("extract_candidates: input rasters disagree");

    const int w = static_map.width(), h = static_map.height();
    const double merge = params.bandwidth / 2.0;

    std::vector<Candidate> from_maps;
    auto harvest = [&](const GridD& raw, CandidateSource src) {
        GridD rect(w, h);
        for (size_t i = 0; i < rect.size(); ++i) rect[i] = std::max(0.0, raw[i]);
        if (grid_max(rect) <= 0.0) return;
        GridD norm = normalized_max1(std::move(rect));
        for (const auto& [mx, my] : mean_shift_modes(norm, params.bandwidth)) {
            GaussianFit fit = fit_gaussian(norm, mx, my, params.bandwidth);
            Candidate c;
            c.x = mx;
            c.y = my;
            c.sigma = fit.sigma;
            c.saliency = std::clamp(fit.amplitude, 0.0, 1.0);
            c.mean_depth = disk_mean(depth, mx, my, fit.sigma);
            c.source = src;
            from_maps.push_back(c);
        }
    };
    harvest(static_map, CandidateSource::kStatic);
    harvest(motion.dog_mag, CandidateSource::kMotion);

    // Cross-source merge keeps the stronger blob.
    std::sort(from_maps.begin(), from_maps.end(), [](const Candidate& a, const Candidate& b) {
        if (a.saliency != b.saliency) return a.saliency > b.saliency;
        if (a.x != b.x) return a.x < b.x;
        return a.y < b.y;
    });
    std::vector<Candidate> merged;
    for (const Candidate& c : from_maps) {
        bool close = false;
        for (const Candidate& m : merged)
            if (within(c, m, merge)) {
                close = true;
                break;
            }
        if (!close) merged.push_back(c);
    }

    // Annotations carry labels, so they displace plain blobs they overlap.
    std::vector<Candidate> keep;
    std::vector<Candidate> annotated;
    for (const AnnotationRecord& a : annotations) {
        if (a.frame_index != frame_index) continue;
        Candidate c;
        c.x = a.x * (w - 1);
        c.y = a.y * (h - 1);
        c.sigma = std::max(1.0, a.sigma);
        c.saliency = 1.0;
        c.mean_depth = disk_mean(depth, c.x, c.y, c.sigma);
        c.face = a.label == "face";
        c.body = a.label == "body";
        c.source = CandidateSource::kAnnotation;
        bool dup = false;
        for (const Candidate& other : annotated)
            if (within(c, other, merge)) {
                dup = true;
                break;
            }
        if (!dup) annotated.push_back(c);
    }
    for (const Candidate& c : merged) {
        bool close = false;
        for (const Candidate& a : annotated)
            if (within(c, a, merge)) {
                close = true;
                break;
            }
        if (!close) keep.push_back(c);
    }
    keep.insert(keep.end(), annotated.begin(), annotated.end());

    Candidate center;
    center.x = (w - 1) / 2.0;
    center.y = (h - 1) / 2.0;
    center.sigma = params.center_sigma;
    center.saliency = std::clamp(bilinear_sample(static_map, center.x, center.y), 0.0, 1.0);
    center.mean_depth = disk_mean(depth, center.x, center.y, center.sigma);
    center.center = true;
    center.source = CandidateSource::kCenter;

    std::vector<Candidate> final_set;
    for (const Candidate& c : keep)
        if (!within(c, center, merge)) final_set.push_back(c);

    std::sort(final_set.begin(), final_set.end(), [](const Candidate& a, const Candidate& b) {
        if (a.saliency != b.saliency) return a.saliency > b.saliency;
        if (a.x != b.x) return a.x < b.x;
        return a.y < b.y;
    });
    if (static_cast<int>(final_set.size()) > params.k_max - 1)
        final_set.resize(static_cast<size_t>(params.k_max - 1));
    final_set.push_back(center);

    CandidateSet set;
    set.frame_index = frame_index;
    set.candidates = std::move(final_set);
    return set;
}

} // namespace depthgaze
