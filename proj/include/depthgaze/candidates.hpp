#ifndef DEPTHGAZE_CANDIDATES_HPP
#define DEPTHGAZE_CANDIDATES_HPP

#include <utility>
#include <vector>

#include "depthgaze/dataset.hpp"
#include "depthgaze/flow.hpp"
#include "depthgaze/grid.hpp"

namespace depthgaze {

enum class CandidateSource { kStatic, kMotion, kAnnotation, kCenter };

// One Gaussian blob hypothesis for where gaze might land.
struct Candidate {
    double x = 0.0, y = 0.0; // pixels at working resolution
    double sigma = 1.0;      // pixels, floored at 1
    double saliency = 0.0;   // normalized map value at the mode, in [0,1]
    double mean_depth = 0.0; // mean normalized depth within one sigma
    bool face = false, body = false, center = false;
    CandidateSource source = CandidateSource::kStatic;
};

struct CandidateSet {
    int frame_index = 0;
    std::vector<Candidate> candidates; // non-empty, at most k_max entries
};

struct CandidateParams {
    double bandwidth = 8.0; // pixels at 128x96
    int k_max = 10;
    double center_sigma = 16.0;
};

// Modes of flat-kernel mean-shift seeded on a bandwidth/2 grid, iterated to
// displacement < 0.1 px, merged when closer than bandwidth/2. Deterministic.
std::vector<std::pair<double, double>> mean_shift_modes(const GridD& map, double bandwidth);

struct GaussianFit {
    double sigma = 1.0;
    double amplitude = 0.0;
};

// Isotropic sigma from the second moment of map mass within 2x bandwidth of
// the mode, corrected for the truncation of the window; amplitude is the map
// value at the mode.
GaussianFit fit_gaussian(const GridD& map, double mode_x, double mode_y, double bandwidth);

// Union of blob candidates from the static map and the rectified motion
// response, plus per-frame annotation entries and an always-present center
// candidate; truncated to k_max by descending saliency (center exempt).
CandidateSet extract_candidates(const GridD& static_map, const MotionFeatures& motion,
                                const GridD& depth,
                                const std::vector<AnnotationRecord>& annotations,
                                int frame_index, const CandidateParams& params = {});

} // namespace depthgaze

#endif
