#ifndef DEPTHGAZE_DATASET_HPP
#define DEPTHGAZE_DATASET_HPP

#include <map>
#include <string>
#include <vector>

#include "depthgaze/grid.hpp"

namespace depthgaze {

// Working resolution shared by the whole pipeline.
inline constexpr int kWorkWidth = 128;
inline constexpr int kWorkHeight = 96;

struct RgbdFrame {
    int index = 0;
    GridD r, g, b;            // [0,1]
    GridD depth;              // [0,1], per-video min-max over valid pixels
    Grid<uint8_t> valid_mask; // 1 where the source depth was present
};

struct VideoSequence {
    std::string video_id;
    std::vector<RgbdFrame> frames;
    double fps = 30.0;
    int width = kWorkWidth;
    int height = kWorkHeight;
};

struct FixationRecord {
    int frame_index = 0;
    std::string viewer_id;
    double x = 0.0; // normalized [0,1]
    double y = 0.0;
};

struct AnnotationRecord {
    int frame_index = 0;
    std::string label; // face | body
    double x = 0.0;    // normalized [0,1]
    double y = 0.0;
    double sigma = 0.0; // pixels at working resolution
};

struct ManifestVideo {
    std::string id;
    int frames = 0;
    std::string depth_unit;  // mm | disparity | normalized
    std::string annotations; // file name relative to the video directory, empty if none
};

struct DatasetManifest {
    std::vector<ManifestVideo> videos;
    std::map<std::string, std::string> split; // id -> train | test

    std::vector<std::string> ids_in_split(const std::string& which) const {
        std::vector<std::string> out;
        for (const auto& v : videos) {
            auto it = split.find(v.id);
            if (it != split.end() && it->second == which) out.push_back(v.id);
        }
        return out;
    }
};

// Loads one video, resamples every frame to the working resolution
// (bilinear rgb, nearest depth) and normalizes depth per-video.
VideoSequence load_video(const std::string& root, const std::string& video_id);

// Parses fixations.csv; records come back sorted by (frame, viewer).
std::vector<FixationRecord> load_fixations(const std::string& root, const std::string& video_id);

// Parses the named annotation file from the video directory; empty name
// gives an empty list.
std::vector<AnnotationRecord> load_annotations(const std::string& root,
                                               const std::string& video_id,
                                               const std::string& file_name);

// Parses manifest.json and checks the on-disk layout against it: frame
// files contiguous and fully paired, split covering exactly the declared
// video set.
DatasetManifest validate_manifest(const std::string& root);

std::string video_dir(const std::string& root, const std::string& video_id);
std::string frame_file_name(int index);

} // namespace depthgaze

#endif
