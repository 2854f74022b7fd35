#ifndef DEPTHGAZE_TRANSITION_HPP
#define DEPTHGAZE_TRANSITION_HPP

#include <array>
#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "depthgaze/candidates.hpp"
#include "depthgaze/dataset.hpp"
#include "depthgaze/fixation.hpp"
#include "depthgaze/flow.hpp"
#include "depthgaze/maps.hpp"
#include "depthgaze/static_saliency.hpp"

namespace depthgaze {

// Feature layout for one candidate transition. Each one-hot block covers
// (face, body, center) for one endpoint; neighborhood means use a disk of
// one candidate sigma.
inline constexpr int kTransitionDim = 14;
enum TransitionFeatureIndex : int {
    kSrcMeanSaliency = 0,
    kDstMeanSaliency = 1,
    kDstDogU = 2,
    kDstDogV = 3,
    kDstDogMag = 4,
    kSrcFace = 5,
    kSrcBody = 6,
    kSrcCenter = 7,
    kDstFace = 8,
    kDstBody = 9,
    kDstCenter = 10,
    kPairDistance = 11,
    kDstCenterDistance = 12,
    kDepthDifference = 13,
};

using TransitionFeatures = std::array<double, kTransitionDim>;

// The depth entry is zeroed when use_depth is off so the whole pipeline
// stays depth-blind under the ablation toggle.
TransitionFeatures build_features(const Candidate& src, const Candidate& dst,
                                  const GridD& src_static, const GridD& dst_static,
                                  const MotionFeatures& dst_motion, bool use_depth);

// +1/-1 per pair: positive iff the ground-truth density reaches
// threshold_fraction of its max at both endpoints (destination on the
// current map, source on the previous one); ties count as positive.
std::vector<int> label_transitions(const std::vector<std::pair<Candidate, Candidate>>& pairs,
                                   const ProbabilityMap& gt_prev, const ProbabilityMap& gt_curr,
                                   double threshold_fraction = 0.5);

struct LinearSvmModel {
    std::vector<double> weights;
    double bias = 0.0;
    std::vector<double> means, stds; // z-normalization; zero-variance dims get std 1
};

struct SvmTrainConfig {
    double c_reg = 1.0;
    int epochs = 200;
    uint64_t seed = 0;
};

// Soft-margin linear SVM by subgradient descent on the regularized hinge
// loss (regularization weight 1/c_reg); keeps the best epoch-end iterate
// by full objective. Deterministic for a fixed seed.
LinearSvmModel train_svm(const std::vector<std::vector<double>>& features,
                         const std::vector<int>& labels, const SvmTrainConfig& cfg = {});

// Signed distance from the separating hyper-plane, in normalized space.
double svm_confidence(const LinearSvmModel& model, const std::vector<double>& x);

// 0.5*lambda*|w|^2 + mean hinge over already-normalized rows; the training
// objective, exposed for optimality checks.
double hinge_objective(const std::vector<double>& w, double bias,
                       const std::vector<std::vector<double>>& rows,
                       const std::vector<int>& labels, double lambda);

void write_svm_model(const std::string& path, const LinearSvmModel& model);
LinearSvmModel read_svm_model(const std::string& path);

// P(d): mean over sources of S(s) * max(C(s,d), 0).
double destination_probability(const std::vector<std::pair<Candidate, double>>& sources);

// S(p) = (1/|N_D|) * sum_d P(d) * exp(-|p-d|^2 / (2 sigma^2)); unnormalized.
SaliencyMap render_saliency(const std::vector<Candidate>& dests, const std::vector<double>& probs,
                            double sigma, int width, int height);

struct BaselineConfig {
    int interval = 10; // pipeline step, frames
    bool use_depth = true;
    double threshold_fraction = 0.5;
    double sigma_fraction = 0.05; // render kernel, fraction of the frame diagonal
    CandidateParams cand;
    FlowParams flow;
    GraphSaliencyParams saliency;
};

// Everything the pipeline needs at one step frame.
struct StepFrame {
    int frame = 0;
    SaliencyMap static_map;
    MotionFeatures motion;
    CandidateSet cands;
};

std::vector<StepFrame> baseline_step_frames(const VideoSequence& video,
                                            const std::vector<AnnotationRecord>& annotations,
                                            const BaselineConfig& cfg);

struct TransitionDataset {
    std::vector<std::vector<double>> features;
    std::vector<int> labels;
};

// Feature/label pairs from every step transition whose endpoints both have
// fixations; steps without ground truth are skipped.
TransitionDataset collect_transition_examples(const VideoSequence& video,
                                              const std::vector<FixationRecord>& fixations,
                                              const std::vector<AnnotationRecord>& annotations,
                                              const BaselineConfig& cfg);

// One map per frame: candidate transitions scored by the model, aggregated
// per destination, rendered as a Gaussian mixture. Source saliencies are
// read recursively from the previous step's destination probabilities
// (nearest destination within one bandwidth, else 0); the recursion starts
// from a virtual center candidate with probability 1, so frames before the
// first computed step get the center prior.
std::vector<SaliencyMap> run_baseline(const VideoSequence& video, const LinearSvmModel& model,
                                      const std::vector<AnnotationRecord>& annotations,
                                      const BaselineConfig& cfg);

} // namespace depthgaze

#endif
