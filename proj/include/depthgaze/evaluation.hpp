#ifndef DEPTHGAZE_EVALUATION_HPP
#define DEPTHGAZE_EVALUATION_HPP

#include <functional>
#include <string>
#include <vector>

#include "depthgaze/fixation.hpp"

namespace depthgaze {

// Symmetric χ² distance in [0,1]: ½ Σ (a−b)²/(a+b), empty-mass cells
// contributing 0. Inputs drifted off sum 1 by more than 1e-6 are
// renormalized first.
double chi2_distance(const ProbabilityMap& a, const ProbabilityMap& b);

// Rank-statistic AUC with ½ ties. Positives are saliency values at the
// fixation pixels; negatives are values at n_neg_per_pos × |positives|
// seeded uniform pixels.
double auc_score(const SaliencyMap& sal, const FixationSet& fixations, int n_neg_per_pos,
                 uint64_t seed);

struct FrameScore {
    std::string method;
    std::string video;
    int frame = 0;
    std::string metric; // one_minus_chi2 | auc
    double value = 0.0;
};

struct SummaryRow {
    std::string method;
    std::string metric;
    double mean = 0.0;
    double stddev = 0.0;
    int count = 0;
};

struct MetricReport {
    std::vector<FrameScore> rows;
    std::vector<SummaryRow> summary;
};

// Produces the saliency map one method predicts for one frame.
using MapProducer = std::function<SaliencyMap(const std::string& video_id, int frame_index)>;

struct EvalConfig {
    int n_neg_per_pos = 10;
    uint64_t seed = 0;
    HomogeneityConfig gt_cfg;
    // Adds the split-half ground-truth upper-bound row named "gt".
    bool with_gt_row = true;
};

// Scores every method on every test-split frame that has fixations;
// aggregates are mean ± standard deviation across frames.
MetricReport evaluate_split(const std::vector<std::pair<std::string, MapProducer>>& methods,
                            const std::string& root, const DatasetManifest& manifest,
                            const EvalConfig& cfg);

// Recomputes the summary block from the per-frame rows.
std::vector<SummaryRow> summarize(const std::vector<FrameScore>& rows);

// "method,video,frame,metric,value" rows, then a
// "method,metric,mean,std" block.
void write_report_csv(const std::string& path, const MetricReport& report);

// Prediction directories hold 8-bit grayscale PNGs named %06d.png with
// 255 at the map maximum.
void write_prediction_png(const std::string& path, const SaliencyMap& map);
SaliencyMap read_prediction_png(const std::string& path);

} // namespace depthgaze

#endif
