#ifndef DEPTHGAZE_AUTOENCODER_HPP
#define DEPTHGAZE_AUTOENCODER_HPP

#include <string>
#include <vector>

#include "depthgaze/dataset.hpp"
#include "depthgaze/flow.hpp"
#include "depthgaze/maps.hpp"
#include "depthgaze/tensor.hpp"

namespace depthgaze {

// Channel order of the network input stack.
enum StackChannel {
    kStackR = 0,
    kStackG,
    kStackB,
    kStackFlowU,
    kStackFlowV,
    kStackDepth,
    kStackPrevSaliency,
    kStackChannels
};

// Width profile of the network. Spatial dims must survive three rounds of
// 2x2 pooling, so both must be divisible by 8.
struct NetShape {
    int width = 128;
    int height = 96;
    int conv1 = 32, conv2 = 64, conv3 = 64;
    int latent = 256;
    int k1 = 5, k2 = 3, k3 = 3;

    int pooled_width() const { return width / 8; }
    int pooled_height() const { return height / 8; }
    int flat() const { return conv3 * pooled_width() * pooled_height(); }
};

// Encoder convolutions run at full, half, and quarter resolution with a
// pool after each; a dense pair squeezes through the latent code; the
// decoder unpools back up and finishes with a single linear output map.
// Decoder kernels are independent parameters, not transposed encoder ones.
struct Autoencoder {
    NetShape shape;
    ConvLayer enc1, enc2, enc3;
    DenseLayer to_latent, from_latent;
    ConvLayer dec3, dec2, dec1;

    Autoencoder() = default;
    Autoencoder(const NetShape& s, uint64_t seed);
};

// 7xHxW input: [R, G, B, flow_u, flow_v, depth, S(t-1)]. Flow channels are
// scaled by 1/width so every channel lands in [-1, 1].
Tensor assemble_stack(const RgbdFrame& frame, const FlowField& flow,
                      const SaliencyMap& prev_saliency);

// Linear-output pass returning the raw 1xHxW estimate; records the op chain
// when graph is given so gradients can be pulled.
Tensor forward_raw(Autoencoder& net, const Tensor& stack, OpGraph* graph = nullptr);

// Inference pass: raw output clamped to [0,1], then max-normalized.
SaliencyMap forward(Autoencoder& net, const Tensor& stack);

// One step frame of one video, ready for stacking. The saliency input
// channel is not stored here; it comes from the recursion.
struct StepSample {
    int frame = 0;
    RgbdFrame rgbd;
    FlowField flow;     // from the previous step frame; zero at step 0
    SaliencyMap target; // max-normalized dense gaze map; empty grid when absent
};

struct TrainSequence {
    std::string video_id;
    std::vector<StepSample> steps;
};

// Step samples every `interval` frames. With use_depth=false the depth
// channel is zeroed and the flow runs on color only, so depth content
// cannot leak into any downstream result. Nonzero width/height resample
// every channel to that profile (flow is computed on the resampled frames,
// so displacements are in profile pixels); 0 keeps the video resolution.
TrainSequence collect_step_samples(const VideoSequence& video,
                                   const std::vector<FixationRecord>& fixations,
                                   int interval, bool use_depth,
                                   const FlowParams& flow_params = {}, int width = 0,
                                   int height = 0);

struct AutoTrainConfig {
    double momentum = 0.9;
    double base_lr = 1e-4;
    int epochs = 400;
    int flat_epochs = 200; // constant-rate prefix of the schedule
    int halve_every = 50;
    uint64_t seed = 0;
    std::string log_path; // when set, per-epoch CSV rows "epoch,lr,loss"
};

// Learning rate for a 1-based epoch index: base for the flat prefix, then
// halved every halve_every epochs.
double schedule_lr(const AutoTrainConfig& cfg, int epoch);

// Recursive-batch SGD with momentum. Batch k holds every sequence's step k;
// its saliency inputs are the previous batch's predictions (constants, no
// gradient through the recursion) and batch 0 sees the center Gaussian.
Autoencoder train_autoencoder(const std::vector<TrainSequence>& sequences,
                              const NetShape& shape, const AutoTrainConfig& cfg);

// Center Gaussian for frames [0, interval); a fresh prediction at every
// subsequent step frame, carried across its span and fed back as the next
// saliency input. Videos at other resolutions are resampled to the network
// profile on the way in; maps come back at the video resolution.
std::vector<SaliencyMap> predict_sequence(Autoencoder& net, const VideoSequence& video,
                                          bool use_depth, int interval = 10,
                                          const FlowParams& flow_params = {});

// Mean-shift modes + Gaussian refits re-rendered as a max-normalized
// mixture. Degenerate maps fall back to the center Gaussian.
SaliencyMap sharpen(const SaliencyMap& map, double bandwidth = 8.0);

void write_autoencoder(const std::string& path, const Autoencoder& net);
Autoencoder read_autoencoder(const std::string& path);

} // namespace depthgaze

#endif
