#include "depthgaze/fixation.hpp"

#include <algorithm>
#include <cmath>
#include <map>

#include "depthgaze/evaluation.hpp"
#include "depthgaze/rng.hpp"

namespace depthgaze {

std::vector<FixationSet> collect_fixation_sets(const std::vector<FixationRecord>& records,
                                               int frame_count, int width, int height) {
    std::vector<FixationSet> out(static_cast<size_t>(frame_count));
    // Records arrive sorted by (frame, viewer); consecutive rows of one
    // viewer land in one Viewer entry.
    for (const auto& rec : records) {
        if (rec.frame_index >= frame_count)
            throw OutOfRange("fixation references frame " + std::to_string(rec.frame_index) +
                             " beyond the video length " + std::to_string(frame_count));
        FixationSet& set = out[static_cast<size_t>(rec.frame_index)];
        if (set.viewers.empty() || set.viewers.back().id != rec.viewer_id) {
            FixationSet::Viewer v;
            v.id = rec.viewer_id;
            set.viewers.push_back(std::move(v));
        }
        set.viewers.back().points.push_back(
            Point{rec.x * (width - 1), rec.y * (height - 1)});
    }
    return out;
}

ProbabilityMap densify_points(const std::vector<Point>& points, int width, int height,
                              double sigma_fraction) {
    if (points.empty()) throw EmptyFixationSet("cannot densify an empty fixation set");
    const double sigma = diag_sigma(width, height, sigma_fraction);
    const double inv = 1.0 / (2.0 * sigma * sigma);
    GridD g(width, height);
    for (const Point& p : points) {
        for (int y = 0; y < height; ++y) {
            const double dy = y - p.y;
            for (int x = 0; x < width; ++x) {
                const double dx = x - p.x;
                g.at(x, y) += std::exp(-(dx * dx + dy * dy) * inv);
            }
        }
    }
    return make_probability(std::move(g));
}

ProbabilityMap densify(const FixationSet& fixations, int width, int height,
                       double sigma_fraction) {
    return densify_points(fixations.all_points(), width, height, sigma_fraction);
}

std::vector<Point> viewer_points(const FixationSet& set, const std::vector<int>& viewer_idx) {
    std::vector<Point> pts;
    for (int i : viewer_idx) {
        const auto& v = set.viewers[static_cast<size_t>(i)];
        pts.insert(pts.end(), v.points.begin(), v.points.end());
    }
    return pts;
}

namespace {

// All size-k index subsets of {0..n-1}, visited in lexicographic order.
template <typename Fn>
void for_each_subset(int n, int k, Fn&& fn) {
    std::vector<int> idx(static_cast<size_t>(k));
    for (int i = 0; i < k; ++i) idx[i] = i;
    while (true) {
        fn(idx);
        int i = k - 1;
        while (i >= 0 && idx[i] == n - k + i) --i;
        if (i < 0) break;
        ++idx[i];
        for (int j = i + 1; j < k; ++j) idx[j] = idx[j - 1] + 1;
    }
}

} // namespace

std::vector<std::pair<std::vector<int>, std::vector<int>>> balanced_viewer_splits(
    int viewer_count, const HomogeneityConfig& cfg) {
    const int v = viewer_count;
    if (v < 2) throw TooFewViewers("split-half scoring needs at least 2 viewers, got " +
                                   std::to_string(v));
    const int k = v / 2;
    std::vector<std::pair<std::vector<int>, std::vector<int>>> out;
    if (cfg.exhaustive) {
        for_each_subset(v, k, [&](const std::vector<int>& half) {
            std::vector<int> rest;
            size_t hi = 0;
            for (int i = 0; i < v; ++i) {
                if (hi < half.size() && half[hi] == i)
                    ++hi;
                else
                    rest.push_back(i);
            }
            out.emplace_back(half, std::move(rest));
        });
    } else {
        for (int s = 0; s < cfg.num_splits; ++s) {
            Rng rng(mix_seed(cfg.rng_seed, static_cast<uint64_t>(s)));
            std::vector<int> order(static_cast<size_t>(v));
            for (int i = 0; i < v; ++i) order[i] = i;
            for (int i = v - 1; i > 0; --i)
                std::swap(order[i], order[rng.uniform_index(static_cast<size_t>(i + 1))]);
            std::vector<int> half(order.begin(), order.begin() + k);
            std::vector<int> rest(order.begin() + k, order.end());
            std::sort(half.begin(), half.end());
            std::sort(rest.begin(), rest.end());
            out.emplace_back(std::move(half), std::move(rest));
        }
    }
    return out;
}

double homogeneity_score(const FixationSet& fixations, int width, int height,
                         const HomogeneityConfig& cfg) {
    const auto splits = balanced_viewer_splits(static_cast<int>(fixations.viewer_count()), cfg);
    double chi_sum = 0.0;
    for (const auto& [half, rest] : splits) {
        const ProbabilityMap a = densify_points(viewer_points(fixations, half), width, height);
        const ProbabilityMap b = densify_points(viewer_points(fixations, rest), width, height);
        chi_sum += chi2_distance(a, b);
    }
    return 1.0 - chi_sum / static_cast<double>(splits.size());
}

double video_quality(const std::vector<FixationSet>& frames, int width, int height,
                     const HomogeneityConfig& cfg, int* skipped_frames) {
    double sum = 0.0;
    int scored = 0, skipped = 0;
    for (size_t f = 0; f < frames.size(); ++f) {
        if (frames[f].viewer_count() < 2) {
            ++skipped;
            continue;
        }
        HomogeneityConfig frame_cfg = cfg;
        frame_cfg.rng_seed = mix_seed(cfg.rng_seed, static_cast<uint64_t>(f));
        sum += homogeneity_score(frames[f], width, height, frame_cfg);
        ++scored;
    }
    if (skipped_frames) *skipped_frames = skipped;
    if (scored == 0) throw NoScorableFrames("no frame has two or more viewers");
    return sum / scored;
}

} // namespace depthgaze
