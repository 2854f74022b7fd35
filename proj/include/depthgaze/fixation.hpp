#ifndef DEPTHGAZE_FIXATION_HPP
#define DEPTHGAZE_FIXATION_HPP

#include <string>
#include <vector>

#include "depthgaze/dataset.hpp"
#include "depthgaze/maps.hpp"

namespace depthgaze {

struct Point {
    double x = 0.0;
    double y = 0.0;
};

// One frame's fixations, grouped by viewer; coordinates are pixels at the
// working resolution.
struct FixationSet {
    struct Viewer {
        std::string id;
        std::vector<Point> points;
    };
    std::vector<Viewer> viewers;

    size_t viewer_count() const { return viewers.size(); }
    size_t point_count() const {
        size_t n = 0;
        for (const auto& v : viewers) n += v.points.size();
        return n;
    }
    std::vector<Point> all_points() const {
        std::vector<Point> out;
        for (const auto& v : viewers) out.insert(out.end(), v.points.begin(), v.points.end());
        return out;
    }
};

struct HomogeneityConfig {
    int num_splits = 10;
    uint64_t rng_seed = 0;
    // Average over every balanced viewer split instead of sampling them.
    bool exhaustive = false;
};

// Groups records into per-frame sets, mapping normalized coordinates onto
// pixel centers: px = x·(W−1), py = y·(H−1).
std::vector<FixationSet> collect_fixation_sets(const std::vector<FixationRecord>& records,
                                               int frame_count, int width, int height);

// Dense probability map: one truncated isotropic Gaussian per fixation
// (σ = sigma_fraction × frame diagonal), summed and normalized to sum 1.
ProbabilityMap densify(const FixationSet& fixations, int width, int height,
                       double sigma_fraction = 0.05);
ProbabilityMap densify_points(const std::vector<Point>& points, int width, int height,
                              double sigma_fraction = 0.05);

// The viewer-index halves used by split-half scoring: every balanced
// split in exhaustive mode, num_splits seeded draws otherwise. Half size
// is ⌊V/2⌋; the complement carries the rest.
std::vector<std::pair<std::vector<int>, std::vector<int>>> balanced_viewer_splits(
    int viewer_count, const HomogeneityConfig& cfg);

std::vector<Point> viewer_points(const FixationSet& set, const std::vector<int>& viewer_idx);

// Split-half agreement for one frame: 1 minus the mean χ² between maps
// densified from complementary viewer halves.
double homogeneity_score(const FixationSet& fixations, int width, int height,
                         const HomogeneityConfig& cfg);

// Mean over the frames with at least two viewers; per-frame rng streams
// are derived from the seed and the frame index. skipped_frames, when
// given, receives the number of unscorable frames.
double video_quality(const std::vector<FixationSet>& frames, int width, int height,
                     const HomogeneityConfig& cfg, int* skipped_frames = nullptr);

} // namespace depthgaze

#endif
