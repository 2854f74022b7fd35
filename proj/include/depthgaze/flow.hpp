#ifndef DEPTHGAZE_FLOW_HPP
#define DEPTHGAZE_FLOW_HPP

#include <cstdint>
#include <string>

#include "depthgaze/dataset.hpp"
#include "depthgaze/grid.hpp"

namespace depthgaze {

// Dense displacement from the earlier frame to the later one, in pixels
// per frame interval.
struct FlowField {
    GridD u, v;
    int channels_used = 3;
};

struct FlowParams {
    double alpha = 15.0;         // smoothness weight on the 0..255 channel scale
    double channel_scale = 255.0;
    int levels = 3;
    int warps_per_level = 5;
    int iters_per_warp = 20;
    double presmooth_sigma = 0.8;
    double depth_weight = 1.0; // relative to one color channel
};

// Variational multichannel flow: squared brightness-constancy residuals
// summed over the color channels (plus depth when enabled) with quadratic
// smoothness, solved coarse-to-fine with warping and a per-pixel coupled
// 2x2 update.
FlowField optical_flow(const RgbdFrame& frame_a, const RgbdFrame& frame_b, bool use_depth);
FlowField optical_flow(const RgbdFrame& frame_a, const RgbdFrame& frame_b, bool use_depth,
                       const FlowParams& params);

struct MotionFeatures {
    GridD dog_u, dog_v, dog_mag;
};

// Difference-of-Gaussians (sigma, 2*sigma) of the current flow components
// and of the magnitude change between the two fields.
MotionFeatures motion_features(const FlowField& flow_prev, const FlowField& flow_curr,
                               double sigma = 2.0);

// One flow component as a little-endian 32-bit float raster:
// "DGFL" + width + height + channel id, then row-major values.
void write_flow_channel(const std::string& path, const GridD& g, uint32_t channel_id);
GridD read_flow_channel(const std::string& path, uint32_t* channel_id = nullptr);

} // namespace depthgaze

#endif
