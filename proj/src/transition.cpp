#include "depthgaze/transition.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <numeric>

#include "depthgaze/errors.hpp"
#include "depthgaze/rng.hpp"

namespace depthgaze {

TransitionFeatures build_features(const Candidate& src, const Candidate& dst,
                                  const GridD& src_static, const GridD& dst_static,
                                  const MotionFeatures& dst_motion, bool use_depth) {
    const int w = dst_static.width(), h = dst_static.height();
    TransitionFeatures f{};
    f[kSrcMeanSaliency] = disk_mean(src_static, src.x, src.y, src.sigma);
    f[kDstMeanSaliency] = disk_mean(dst_static, dst.x, dst.y, dst.sigma);
    f[kDstDogU] = disk_mean(dst_motion.dog_u, dst.x, dst.y, dst.sigma);
    f[kDstDogV] = disk_mean(dst_motion.dog_v, dst.x, dst.y, dst.sigma);
    f[kDstDogMag] = disk_mean(dst_motion.dog_mag, dst.x, dst.y, dst.sigma);
    f[kSrcFace] = src.face ? 1.0 : 0.0;
    f[kSrcBody] = src.body ? 1.0 : 0.0;
    f[kSrcCenter] = src.center ? 1.0 : 0.0;
    f[kDstFace] = dst.face ? 1.0 : 0.0;
    f[kDstBody] = dst.body ? 1.0 : 0.0;
    f[kDstCenter] = dst.center ? 1.0 : 0.0;
    f[kPairDistance] = std::hypot(dst.x - src.x, dst.y - src.y);
    f[kDstCenterDistance] = std::hypot(dst.x - (w - 1) / 2.0, dst.y - (h - 1) / 2.0);
    f[kDepthDifference] = use_depth ? dst.mean_depth - src.mean_depth : 0.0;
    return f;
}

std::vector<int> label_transitions(const std::vector<std::pair<Candidate, Candidate>>& pairs,
                                   const ProbabilityMap& gt_prev, const ProbabilityMap& gt_curr,
                                   double threshold_fraction) {
    if (gt_prev.grid.empty() || gt_curr.grid.empty())
        throw MissingGroundTruth("label_transitions: empty density map");
    const double cut_prev = threshold_fraction * grid_max(gt_prev.grid);
    const double cut_curr = threshold_fraction * grid_max(gt_curr.grid);
    std::vector<int> labels;
    labels.reserve(pairs.size());
    for (const auto& [src, dst] : pairs) {
        const bool src_on = bilinear_sample(gt_prev.grid, src.x, src.y) >= cut_prev;
        const bool dst_on = bilinear_sample(gt_curr.grid, dst.x, dst.y) >= cut_curr;
        labels.push_back(src_on && dst_on ? 1 : -1);
    }
    return labels;
}

double hinge_objective(const std::vector<double>& w, double bias,
                       const std::vector<std::vector<double>>& rows,
                       const std::vector<int>& labels, double lambda) {
    double obj = 0.0;
    for (double x : w) obj += x * x;
    obj *= 0.5 * lambda;
    double hinge = 0.0;
    for (size_t i = 0; i < rows.size(); ++i) {
        double m = bias;
        for (size_t j = 0; j < w.size(); ++j) m += w[j] * rows[i][j];
        hinge += std::max(0.0, 1.0 - labels[i] * m);
    }
    return obj + hinge / rows.size();
}

LinearSvmModel train_svm(const std::vector<std::vector<double>>& features,
                         const std::vector<int>& labels, const SvmTrainConfig& cfg) {
    if (features.empty() || features.size() != labels.size())
        throw DimensionMismatch("train_svm: features and labels disagree");
    const size_t dim = features[0].size();
    bool has_pos = false, has_neg = false;
    for (size_t i = 0; i < features.size(); ++i) {
        if (features[i].size() != dim)
            throw DimensionMismatch("train_svm: ragged feature rows");
        for (double v : features[i])
            if (!std::isfinite(v)) throw NonFiniteFeature("train_svm: bad value in row");
        (labels[i] > 0 ? has_pos : has_neg) = true;
    }
    if (!has_pos || !has_neg) throw SingleClass("train_svm: need both labels");

    LinearSvmModel model;
    model.means.assign(dim, 0.0);
    model.stds.assign(dim, 0.0);
    const double n = static_cast<double>(features.size());
    for (const auto& row : features)
        for (size_t j = 0; j < dim; ++j) model.means[j] += row[j];
    for (size_t j = 0; j < dim; ++j) model.means[j] /= n;
    for (const auto& row : features)
        for (size_t j = 0; j < dim; ++j) {
            const double d = row[j] - model.means[j];
            model.stds[j] += d * d;
        }
    for (size_t j = 0; j < dim; ++j) {
        model.stds[j] = std::sqrt(model.stds[j] / n);
        if (model.stds[j] < 1e-12) model.stds[j] = 1.0;
    }

    std::vector<std::vector<double>> z(features.size(), std::vector<double>(dim));
    for (size_t i = 0; i < features.size(); ++i)
        for (size_t j = 0; j < dim; ++j)
            z[i][j] = (features[i][j] - model.means[j]) / model.stds[j];

    // c_reg follows the usual C-SVM convention, so the mean-hinge form of the
    // objective carries lambda = 1 / (C * n).
    const double lambda = 1.0 / (cfg.c_reg * n);
    std::vector<double> w(dim, 0.0), best_w(dim, 0.0);
    double b = 0.0, best_b = 0.0;
    double best_obj = hinge_objective(w, b, z, labels, lambda);

    Rng rng(cfg.seed);
    std::vector<size_t> order(features.size());
    std::iota(order.begin(), order.end(), size_t{0});
    // The step schedule starts one epoch in, so eta never exceeds c_reg; the
    // projection keeps the iterate inside the ball that contains the optimum.
    const double radius = 1.0 / std::sqrt(lambda);
    uint64_t t = features.size();
    for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
        for (size_t i = order.size(); i > 1; --i)
            std::swap(order[i - 1], order[rng.uniform_index(i)]);
        for (size_t i : order) {
            ++t;
            const double eta = 1.0 / (lambda * static_cast<double>(t));
            double m = b;
            for (size_t j = 0; j < dim; ++j) m += w[j] * z[i][j];
            const double shrink = 1.0 - eta * lambda;
            if (labels[i] * m < 1.0) {
                for (size_t j = 0; j < dim; ++j)
                    w[j] = shrink * w[j] + eta * labels[i] * z[i][j];
                b += eta * labels[i];
            } else {
                for (size_t j = 0; j < dim; ++j) w[j] *= shrink;
            }
            double norm2 = 0.0;
            for (double v : w) norm2 += v * v;
            if (norm2 > radius * radius) {
                const double scale = radius / std::sqrt(norm2);
                for (double& v : w) v *= scale;
            }
        }
        const double obj = hinge_objective(w, b, z, labels, lambda);
        if (obj < best_obj) {
            best_obj = obj;
            best_w = w;
            best_b = b;
        }
    }
    model.weights = std::move(best_w);
    model.bias = best_b;
    return model;
}

double svm_confidence(const LinearSvmModel& model, const std::vector<double>& x) {
    if (x.size() != model.weights.size())
        throw DimensionMismatch("svm_confidence: feature size differs from model");
    double m = model.bias;
    for (size_t j = 0; j < x.size(); ++j)
        m += model.weights[j] * (x[j] - model.means[j]) / model.stds[j];
    return m;
}

namespace {

void put_u32_le(std::FILE* f, uint32_t v) {
    unsigned char b[4] = {static_cast<unsigned char>(v & 0xff),
                          static_cast<unsigned char>((v >> 8) & 0xff),
                          static_cast<unsigned char>((v >> 16) & 0xff),
                          static_cast<unsigned char>((v >> 24) & 0xff)};
    std::fwrite(b, 1, 4, f);
}

uint32_t get_u32_le(std::FILE* f, const std::string& path) {
    unsigned char b[4];
    if (std::fread(b, 1, 4, f) != 4) throw CorruptFile(path + ": truncated header");
    return uint32_t(b[0]) | uint32_t(b[1]) << 8 | uint32_t(b[2]) << 16 | uint32_t(b[3]) << 24;
}

void put_f64_le(std::FILE* f, double v) {
    uint64_t bits;
    std::memcpy(&bits, &v, 8);
    unsigned char b[8];
    for (int i = 0; i < 8; ++i) b[i] = static_cast<unsigned char>((bits >> (8 * i)) & 0xff);
    std::fwrite(b, 1, 8, f);
}

double get_f64_le(std::FILE* f, const std::string& path) {
    unsigned char b[8];
    if (std::fread(b, 1, 8, f) != 8) throw CorruptFile(path + ": truncated parameters");
    uint64_t bits = 0;
    for (int i = 0; i < 8; ++i) bits |= uint64_t(b[i]) << (8 * i);
    double v;
    std::memcpy(&v, &bits, 8);
    return v;
}

constexpr uint32_t kSvmVersion = 1;

} // namespace

void write_svm_model(const std::string& path, const LinearSvmModel& model) {
    std::FILE* f = std::fopen(path.c_str(), "wb");
    if (!f) throw CorruptFile(path + ": cannot open for writing");
    std::fwrite("DGSV", 1, 4, f);
    put_u32_le(f, kSvmVersion);
    put_u32_le(f, static_cast<uint32_t>(model.weights.size()));
    put_u32_le(f, 0u);
    for (double v : model.weights) put_f64_le(f, v);
    put_f64_le(f, model.bias);
    for (double v : model.means) put_f64_le(f, v);
    for (double v : model.stds) put_f64_le(f, v);
    std::fclose(f);
}

LinearSvmModel read_svm_model(const std::string& path) {
    std::FILE* f = std::fopen(path.c_str(), "rb");
    if (!f) throw CorruptFile(path + ": cannot open");
    LinearSvmModel model;
    try {
        char magic[4];
        if (std::fread(magic, 1, 4, f) != 4 || std::string(magic, 4) != "DGSV")
            throw CorruptFile(path + ": bad magic");
        const uint32_t version = get_u32_le(f, path);
        if (version != kSvmVersion) throw CorruptFile(path + ": unknown version");
        const uint32_t dim = get_u32_le(f, path);
        get_u32_le(f, path); // reserved
        if (dim == 0 || dim > 4096) throw CorruptFile(path + ": implausible dimension");
        model.weights.resize(dim);
        for (double& v : model.weights) v = get_f64_le(f, path);
        model.bias = get_f64_le(f, path);
        model.means.resize(dim);
        for (double& v : model.means) v = get_f64_le(f, path);
        model.stds.resize(dim);
        for (double& v : model.stds) v = get_f64_le(f, path);
    } catch (...) {
        std::fclose(f);
        throw;
    }
    std::fclose(f);
    return model;
}

double destination_probability(const std::vector<std::pair<Candidate, double>>& sources) {
    if (sources.empty()) throw EmptySourceSet("destination_probability: no sources");
    double p = 0.0;
    for (const auto& [cand, conf] : sources) p += cand.saliency * std::max(conf, 0.0);
    return p / sources.size();
}

SaliencyMap render_saliency(const std::vector<Candidate>& dests, const std::vector<double>& probs,
                            double sigma, int width, int height) {
    if (dests.empty()) throw EmptyDestinationSet("render_saliency: no destinations");
    if (dests.size() != probs.size())
        throw DimensionMismatch("render_saliency: probability count differs");
    if (sigma <= 0.0) throw OutOfRange("render_saliency: sigma must be positive");
    GridD g(width, height);
    const double inv = 1.0 / (2.0 * sigma * sigma);
    for (size_t d = 0; d < dests.size(); ++d) {
        if (probs[d] == 0.0) continue;
        for (int y = 0; y < height; ++y)
            for (int x = 0; x < width; ++x) {
                const double dx = x - dests[d].x, dy = y - dests[d].y;
                g.at(x, y) += probs[d] * std::exp(-(dx * dx + dy * dy) * inv);
            }
    }
    for (size_t i = 0; i < g.size(); ++i) g[i] /= dests.size();
    return SaliencyMap{std::move(g), MapNorm::kRaw};
}

std::vector<StepFrame> baseline_step_frames(const VideoSequence& video,
                                            const std::vector<AnnotationRecord>& annotations,
                                            const BaselineConfig& cfg) {
    const int n = static_cast<int>(video.frames.size());
    const int w = video.width, h = video.height;
    std::vector<StepFrame> steps;
    FlowField prev_flow, curr_flow;
    prev_flow.u = GridD(w, h);
    prev_flow.v = GridD(w, h);
    curr_flow = prev_flow;
    for (int t = 0; t < n; t += cfg.interval) {
        StepFrame sf;
        sf.frame = t;
        if (t > 0) {
            prev_flow = curr_flow;
            curr_flow = optical_flow(video.frames[static_cast<size_t>(t - cfg.interval)],
                                     video.frames[static_cast<size_t>(t)], cfg.use_depth,
                                     cfg.flow);
        }
        sf.motion = motion_features(prev_flow, curr_flow);
        sf.static_map = graph_saliency(video.frames[static_cast<size_t>(t)], cfg.use_depth,
                                       cfg.saliency);
        sf.cands = extract_candidates(sf.static_map.grid, sf.motion,
                                      video.frames[static_cast<size_t>(t)].depth, annotations,
                                      t, cfg.cand);
        steps.push_back(std::move(sf));
    }
    return steps;
}

TransitionDataset collect_transition_examples(const VideoSequence& video,
                                              const std::vector<FixationRecord>& fixations,
                                              const std::vector<AnnotationRecord>& annotations,
                                              const BaselineConfig& cfg) {
    const int n = static_cast<int>(video.frames.size());
    const int w = video.width, h = video.height;
    const auto sets = collect_fixation_sets(fixations, n, w, h);
    const auto steps = baseline_step_frames(video, annotations, cfg);

    TransitionDataset data;
    for (size_t k = 1; k < steps.size(); ++k) {
        const StepFrame& a = steps[k - 1];
        const StepFrame& d = steps[k];
        if (sets[static_cast<size_t>(a.frame)].point_count() == 0 ||
            sets[static_cast<size_t>(d.frame)].point_count() == 0)
            continue;
        const ProbabilityMap gt_prev = densify(sets[static_cast<size_t>(a.frame)], w, h);
        const ProbabilityMap gt_curr = densify(sets[static_cast<size_t>(d.frame)], w, h);

        std::vector<std::pair<Candidate, Candidate>> pairs;
        for (const Candidate& s : a.cands.candidates)
            for (const Candidate& t : d.cands.candidates) pairs.emplace_back(s, t);
        const std::vector<int> labels =
            label_transitions(pairs, gt_prev, gt_curr, cfg.threshold_fraction);

        for (size_t i = 0; i < pairs.size(); ++i) {
            TransitionFeatures f =
                build_features(pairs[i].first, pairs[i].second, a.static_map.grid,
                               d.static_map.grid, d.motion, cfg.use_depth);
            data.features.emplace_back(f.begin(), f.end());
            data.labels.push_back(labels[i]);
        }
    }
    return data;
}

std::vector<SaliencyMap> run_baseline(const VideoSequence& video, const LinearSvmModel& model,
                                      const std::vector<AnnotationRecord>& annotations,
                                      const BaselineConfig& cfg) {
    const int n = static_cast<int>(video.frames.size());
    const int w = video.width, h = video.height;
    const auto steps = baseline_step_frames(video, annotations, cfg);
    const double sigma = diag_sigma(w, h, cfg.sigma_fraction);

    std::vector<SaliencyMap> maps(static_cast<size_t>(n), center_prior(w, h));

    // Virtual step behind frame 0: one center candidate with probability 1.
    Candidate seed;
    seed.x = (w - 1) / 2.0;
    seed.y = (h - 1) / 2.0;
    seed.center = true;
    seed.source = CandidateSource::kCenter;
    std::vector<Candidate> prev_dests{seed};
    std::vector<double> prev_probs{1.0};

    for (size_t k = 1; k < steps.size(); ++k) {
        const StepFrame& a = steps[k - 1];
        const StepFrame& d = steps[k];

        // Source saliency = probability of the nearest prior destination.
        std::vector<Candidate> sources = a.cands.candidates;
        for (Candidate& s : sources) {
            double best_d2 = cfg.cand.bandwidth * cfg.cand.bandwidth;
            double p = 0.0;
            for (size_t j = 0; j < prev_dests.size(); ++j) {
                const double dx = prev_dests[j].x - s.x, dy = prev_dests[j].y - s.y;
                const double d2 = dx * dx + dy * dy;
                if (d2 < best_d2) {
                    best_d2 = d2;
                    p = prev_probs[j];
                }
            }
            s.saliency = std::clamp(p, 0.0, 1.0);
        }

        const std::vector<Candidate>& dests = d.cands.candidates;
        std::vector<double> probs(dests.size(), 0.0);
        for (size_t j = 0; j < dests.size(); ++j) {
            std::vector<std::pair<Candidate, double>> scored;
            scored.reserve(sources.size());
            for (const Candidate& s : sources) {
                TransitionFeatures f = build_features(s, dests[j], a.static_map.grid,
                                                      d.static_map.grid, d.motion,
                                                      cfg.use_depth);
                scored.emplace_back(s, svm_confidence(model, {f.begin(), f.end()}));
            }
            probs[j] = destination_probability(scored);
        }

        SaliencyMap rendered = render_saliency(dests, probs, sigma, w, h);
        const int from = d.frame;
        const int to = std::min(n, d.frame + cfg.interval);
        for (int t = from; t < to; ++t) maps[static_cast<size_t>(t)] = rendered;

        prev_dests = dests;
        prev_probs = std::move(probs);
    }
    return maps;
}

} // namespace depthgaze
