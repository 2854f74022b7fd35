#ifndef DEPTHGAZE_SYNTH_HPP
#define DEPTHGAZE_SYNTH_HPP

#include <string>
#include <vector>

#include "depthgaze/dataset.hpp"
#include "depthgaze/fixation.hpp"

namespace depthgaze {

// One rendered disk with a piecewise-linear trajectory. Colors, like all
// scene colors, are [0,1]; depth is the normalized scene depth the dataset
// loader would recover.
struct BlobSpec {
    std::vector<Point> path; // waypoints in pixels; one entry = static blob
    double radius = 6.0;
    double r = 1.0, g = 1.0, b = 1.0;
    double depth = 0.5;
};

struct FixationPolicy {
    enum class Kind { kFollowBlob, kCenter, kTwoCluster };
    Kind kind = Kind::kFollowBlob;
    int blob_index = 0;      // which blob the viewers track
    int viewers = 3;         // total; per cluster for kTwoCluster
    double separation = 0.0; // px between the two cluster centers
};

struct SceneSpec {
    std::string video_id = "synth00";
    std::string split = "train";
    int frames = 20;
    int width = kWorkWidth;
    int height = kWorkHeight;
    std::vector<BlobSpec> blobs;
    double bg_r = 0.2, bg_g = 0.2, bg_b = 0.2;
    double bg_depth = 0.8;
    FixationPolicy policy;
    double noise = 0.0; // uniform color noise amplitude
    uint64_t seed = 0;
};

// Piecewise-linear position over the frame range, clamped so the full disk
// stays in-bounds.
Point blob_position(const BlobSpec& blob, int frame, int frame_count, int width, int height);

// Writes one video in the dataset layout (rgb/, depth/, fixations.csv) plus
// exact frame-to-frame flow sidecars (flow/%06d_u.dgfl, _v.dgfl describing
// frame i -> i+1), and merges the root manifest. Identical spec -> identical
// bytes.
void generate_scene(const SceneSpec& spec, const std::string& out_root);

// Spec file: a single scene object or {"version":1,"scenes":[...]}.
std::vector<SceneSpec> load_scene_specs(const std::string& path);

} // namespace depthgaze

#endif
