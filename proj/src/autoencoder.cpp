#include "depthgaze/autoencoder.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

#include "depthgaze/candidates.hpp"
#include "depthgaze/errors.hpp"
#include "depthgaze/fixation.hpp"

namespace depthgaze {

namespace {

void require_shape(bool cond, const char* msg) {
    if (!cond) throw ShapeMismatch(msg);
}

// Clamped, max-normalized view of a raw network output.
SaliencyMap squash_output(const Tensor& raw) {
    GridD g(raw.dim(2), raw.dim(1));
    for (int y = 0; y < g.height(); ++y)
        for (int x = 0; x < g.width(); ++x)
            g.at(x, y) = std::clamp(raw.at3(0, y, x), 0.0, 1.0);
    return make_saliency_max1(std::move(g));
}

RgbdFrame depth_blind_copy(const RgbdFrame& frame, bool use_depth) {
    RgbdFrame out = frame;
    if (!use_depth) out.depth.fill(0.0);
    return out;
}

// Matches the loader's convention: bilinear color, nearest depth.
RgbdFrame resample_frame(const RgbdFrame& f, int w, int h) {
    if (f.r.width() == w && f.r.height() == h) return f;
    RgbdFrame out;
    out.index = f.index;
    out.r = resample_bilinear(f.r, w, h);
    out.g = resample_bilinear(f.g, w, h);
    out.b = resample_bilinear(f.b, w, h);
    out.depth = resample_nearest(f.depth, w, h);
    out.valid_mask = resample_nearest(f.valid_mask, w, h);
    return out;
}

} // namespace

Autoencoder::Autoencoder(const NetShape& s, uint64_t seed) : shape(s) {
    if (s.width <= 0 || s.height <= 0 || s.width % 8 != 0 || s.height % 8 != 0)
        throw OddDimension("net input dims must be positive multiples of 8");
    Rng rng(seed);
    enc1 = ConvLayer(s.conv1, kStackChannels, s.k1, rng);
    enc2 = ConvLayer(s.conv2, s.conv1, s.k2, rng);
    enc3 = ConvLayer(s.conv3, s.conv2, s.k3, rng);
    to_latent = DenseLayer(s.latent, s.flat(), rng);
    from_latent = DenseLayer(s.flat(), s.latent, rng);
    dec3 = ConvLayer(s.conv2, s.conv3, s.k3, rng);
    dec2 = ConvLayer(s.conv1, s.conv2, s.k2, rng);
    dec1 = ConvLayer(1, s.conv1, s.k1, rng);
}

Tensor assemble_stack(const RgbdFrame& frame, const FlowField& flow,
                      const SaliencyMap& prev_saliency) {
    const int w = frame.r.width(), h = frame.r.height();
    require_shape(w > 0 && h > 0, "assemble_stack: empty frame");
    require_shape(frame.depth.same_dims(frame.r) && flow.u.same_dims(frame.r) &&
                      flow.v.same_dims(frame.r) && prev_saliency.grid.same_dims(frame.r),
                  "assemble_stack: input rasters disagree");

    Tensor stack({kStackChannels, h, w});
    const double flow_scale = 1.0 / static_cast<double>(w);
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) {
            stack.at3(kStackR, y, x) = frame.r.at(x, y);
            stack.at3(kStackG, y, x) = frame.g.at(x, y);
            stack.at3(kStackB, y, x) = frame.b.at(x, y);
            stack.at3(kStackFlowU, y, x) = flow.u.at(x, y) * flow_scale;
            stack.at3(kStackFlowV, y, x) = flow.v.at(x, y) * flow_scale;
            stack.at3(kStackDepth, y, x) = frame.depth.at(x, y);
            stack.at3(kStackPrevSaliency, y, x) = prev_saliency.grid.at(x, y);
        }
    return stack;
}

Tensor forward_raw(Autoencoder& net, const Tensor& stack, OpGraph* graph) {
    const NetShape& s = net.shape;
    require_shape(stack.rank() == 3 && stack.dim(0) == kStackChannels &&
                      stack.dim(1) == s.height && stack.dim(2) == s.width,
                  "forward: stack shape differs from the network profile");

    OpGraph scratch;
    OpGraph& g = graph ? *graph : scratch;
    Tensor t = g.relu(g.conv(net.enc1, stack));
    t = g.maxpool(t);
    t = g.relu(g.conv(net.enc2, t));
    t = g.maxpool(t);
    t = g.relu(g.conv(net.enc3, t));
    t = g.maxpool(t);
    t = g.relu(g.dense(net.to_latent, t));
    t = g.relu(g.dense(net.from_latent, t));
    t = g.reshape(t, {s.conv3, s.pooled_height(), s.pooled_width()});
    t = g.unpool(t);
    t = g.relu(g.conv(net.dec3, t));
    t = g.unpool(t);
    t = g.relu(g.conv(net.dec2, t));
    t = g.unpool(t);
    return g.conv(net.dec1, t);
}

SaliencyMap forward(Autoencoder& net, const Tensor& stack) {
    return squash_output(forward_raw(net, stack));
}

TrainSequence collect_step_samples(const VideoSequence& video,
                                   const std::vector<FixationRecord>& fixations,
                                   int interval, bool use_depth,
                                   const FlowParams& flow_params, int width, int height) {
    if (interval <= 0) throw OutOfRange("step interval must be positive");
    TrainSequence seq;
    seq.video_id = video.video_id;
    const int n = static_cast<int>(video.frames.size());
    if (n == 0) return seq;

    const int w = width > 0 ? width : video.frames[0].r.width();
    const int h = height > 0 ? height : video.frames[0].r.height();
    const auto sets = collect_fixation_sets(fixations, n, w, h);

    for (int t = 0; t < n; t += interval) {
        StepSample s;
        s.frame = t;
        s.rgbd = depth_blind_copy(resample_frame(video.frames[t], w, h), use_depth);
        if (t == 0) {
            s.flow.u = GridD(w, h);
            s.flow.v = GridD(w, h);
        } else {
            s.flow = optical_flow(resample_frame(video.frames[t - interval], w, h),
                                  resample_frame(video.frames[t], w, h), use_depth,
                                  flow_params);
        }
        if (!sets[static_cast<size_t>(t)].all_points().empty())
            s.target = SaliencyMap{
                normalized_max1(densify(sets[static_cast<size_t>(t)], w, h).grid),
                MapNorm::kMax1};
        seq.steps.push_back(std::move(s));
    }
    return seq;
}

double schedule_lr(const AutoTrainConfig& cfg, int epoch) {
    if (epoch <= cfg.flat_epochs) return cfg.base_lr;
    const int past = epoch - cfg.flat_epochs - 1;
    return cfg.base_lr / std::pow(2.0, past / cfg.halve_every + 1);
}

namespace {

struct ParamSlot {
    Tensor* value;
    Tensor* grad;
    Tensor vel;
};

std::vector<ParamSlot> parameter_slots(Autoencoder& net) {
    std::vector<ParamSlot> slots;
    auto add_conv = [&](ConvLayer& l) {
        slots.push_back({&l.kernels, &l.grad_kernels, Tensor(l.kernels.shape)});
        slots.push_back({&l.bias, &l.grad_bias, Tensor(l.bias.shape)});
    };
    auto add_dense = [&](DenseLayer& l) {
        slots.push_back({&l.weights, &l.grad_weights, Tensor(l.weights.shape)});
        slots.push_back({&l.bias, &l.grad_bias, Tensor(l.bias.shape)});
    };
    add_conv(net.enc1);
    add_conv(net.enc2);
    add_conv(net.enc3);
    add_dense(net.to_latent);
    add_dense(net.from_latent);
    add_conv(net.dec3);
    add_conv(net.dec2);
    add_conv(net.dec1);
    return slots;
}

} // namespace

Autoencoder train_autoencoder(const std::vector<TrainSequence>& sequences,
                              const NetShape& shape, const AutoTrainConfig& cfg) {
    size_t max_steps = 0;
    for (const auto& seq : sequences) max_steps = std::max(max_steps, seq.steps.size());
    if (sequences.empty() || max_steps == 0)
        throw EmptyTrainingSet("training needs at least one step sample");
    for (const auto& seq : sequences)
        for (const auto& s : seq.steps) {
            if (s.target.grid.empty())
                throw GroundTruthMissing("no gaze target for a step frame of " + seq.video_id);
            require_shape(s.rgbd.r.width() == shape.width &&
                              s.rgbd.r.height() == shape.height &&
                              s.target.grid.same_dims(s.rgbd.r),
                          "train: sample dims differ from the network profile");
        }

    Autoencoder net(shape, cfg.seed);
    std::vector<ParamSlot> slots = parameter_slots(net);

    std::ofstream log;
    if (!cfg.log_path.empty()) {
        log.open(cfg.log_path);
        if (!log) throw IoError("cannot write training log " + cfg.log_path);
        log << "epoch,lr,loss\n";
    }

    const double npix = static_cast<double>(shape.width) * shape.height;
    std::vector<SaliencyMap> carried(sequences.size());

    for (int epoch = 1; epoch <= cfg.epochs; ++epoch) {
        const double lr = schedule_lr(cfg, epoch);
        for (auto& m : carried) m = center_prior(shape.width, shape.height);

        double loss_sum = 0.0;
        int batches = 0;
        for (size_t k = 0; k < max_steps; ++k) {
            size_t members = 0;
            for (const auto& seq : sequences) members += (k < seq.steps.size());
            if (members == 0) continue;

            for (auto& slot : slots) slot.grad->zero();
            double batch_loss = 0.0;
            const double grad_norm = 1.0 / (npix * static_cast<double>(members));

            for (size_t v = 0; v < sequences.size(); ++v) {
                if (k >= sequences[v].steps.size()) continue;
                const StepSample& s = sequences[v].steps[k];
                Tensor stack = assemble_stack(s.rgbd, s.flow, carried[v]);
                OpGraph graph;
                Tensor out = forward_raw(net, stack, &graph);

                Tensor upstream(out.shape);
                for (int y = 0; y < shape.height; ++y)
                    for (int x = 0; x < shape.width; ++x) {
                        const double e = out.at3(0, y, x) - s.target.grid.at(x, y);
                        batch_loss += e * e * grad_norm;
                        upstream.at3(0, y, x) = 2.0 * e * grad_norm;
                    }
                graph.backward(upstream);
                carried[v] = squash_output(out);
            }
            if (!std::isfinite(batch_loss))
                throw NumericError("training loss became non-finite at epoch " +
                                   std::to_string(epoch) + ", step " + std::to_string(k));

            for (auto& slot : slots) {
                for (size_t i = 0; i < slot.vel.numel(); ++i) {
                    slot.vel.data[i] =
                        cfg.momentum * slot.vel.data[i] - lr * slot.grad->data[i];
                    slot.value->data[i] += slot.vel.data[i];
                }
            }
            loss_sum += batch_loss;
            ++batches;
        }
        if (log)
            log << epoch << ',' << lr << ',' << loss_sum / std::max(batches, 1) << '\n';
    }
    return net;
}

std::vector<SaliencyMap> predict_sequence(Autoencoder& net, const VideoSequence& video,
                                          bool use_depth, int interval,
                                          const FlowParams& flow_params) {
    if (interval <= 0) throw OutOfRange("step interval must be positive");
    const int n = static_cast<int>(video.frames.size());
    const int w = net.shape.width, h = net.shape.height;
    const int vw = n > 0 ? video.frames[0].r.width() : w;
    const int vh = n > 0 ? video.frames[0].r.height() : h;

    std::vector<SaliencyMap> maps(static_cast<size_t>(std::max(n, 0)),
                                  center_prior(vw, vh));
    SaliencyMap prev = center_prior(w, h);
    for (int t = interval; t < n; t += interval) {
        FlowField flow = optical_flow(resample_frame(video.frames[t - interval], w, h),
                                      resample_frame(video.frames[t], w, h), use_depth,
                                      flow_params);
        RgbdFrame frame = depth_blind_copy(resample_frame(video.frames[t], w, h), use_depth);
        SaliencyMap pred = forward(net, assemble_stack(frame, flow, prev));
        SaliencyMap out = pred;
        if (vw != w || vh != h)
            out = SaliencyMap{normalized_max1(resample_bilinear(pred.grid, vw, vh)),
                              MapNorm::kMax1};
        const int last = std::min(n, t + interval);
        for (int i = t; i < last; ++i) maps[static_cast<size_t>(i)] = out;
        prev = std::move(pred);
    }
    return maps;
}

SaliencyMap sharpen(const SaliencyMap& map, double bandwidth) {
    const int w = map.width(), h = map.height();
    if (w == 0 || h == 0) return center_prior(w, h);
    if (grid_max(map.grid) - grid_min(map.grid) < 1e-9) return center_prior(w, h);

    std::vector<std::pair<double, double>> modes;
    try {
        modes = mean_shift_modes(map.grid, bandwidth);
    } catch (const DegenerateMap&) {
        return center_prior(w, h);
    }

    GridD out(w, h);
    for (const auto& [mx, my] : modes) {
        const GaussianFit fit = fit_gaussian(map.grid, mx, my, bandwidth);
        if (fit.amplitude <= 0.0) continue;
        const double inv = 1.0 / (2.0 * fit.sigma * fit.sigma);
        for (int y = 0; y < h; ++y)
            for (int x = 0; x < w; ++x) {
                const double dx = x - mx, dy = y - my;
                out.at(x, y) += fit.amplitude * std::exp(-(dx * dx + dy * dy) * inv);
            }
    }
    if (grid_max(out) <= 0.0) return center_prior(w, h);
    return make_saliency_max1(std::move(out));
}

void write_autoencoder(const std::string& path, const Autoencoder& net) {
    const NetShape& s = net.shape;
    const std::vector<uint32_t> config = {
        static_cast<uint32_t>(s.width),  static_cast<uint32_t>(s.height),
        static_cast<uint32_t>(s.conv1),  static_cast<uint32_t>(s.conv2),
        static_cast<uint32_t>(s.conv3),  static_cast<uint32_t>(s.latent),
        static_cast<uint32_t>(s.k1),     static_cast<uint32_t>(s.k2),
        static_cast<uint32_t>(s.k3)};
    const std::vector<const Tensor*> tensors = {
        &net.enc1.kernels,       &net.enc1.bias,       &net.enc2.kernels,
        &net.enc2.bias,          &net.enc3.kernels,    &net.enc3.bias,
        &net.to_latent.weights,  &net.to_latent.bias,  &net.from_latent.weights,
        &net.from_latent.bias,   &net.dec3.kernels,    &net.dec3.bias,
        &net.dec2.kernels,       &net.dec2.bias,       &net.dec1.kernels,
        &net.dec1.bias};
    write_weights_file(path, config, tensors);
}

Autoencoder read_autoencoder(const std::string& path) {
    std::vector<uint32_t> config;
    std::vector<Tensor> tensors;
    read_weights_file(path, &config, &tensors);
    if (config.size() != 9 || tensors.size() != 16)
        throw CorruptFile("unexpected network layout in " + path);

    NetShape s;
    s.width = static_cast<int>(config[0]);
    s.height = static_cast<int>(config[1]);
    s.conv1 = static_cast<int>(config[2]);
    s.conv2 = static_cast<int>(config[3]);
    s.conv3 = static_cast<int>(config[4]);
    s.latent = static_cast<int>(config[5]);
    s.k1 = static_cast<int>(config[6]);
    s.k2 = static_cast<int>(config[7]);
    s.k3 = static_cast<int>(config[8]);

    Autoencoder net(s, 0);
    Tensor* const dests[16] = {
        &net.enc1.kernels,       &net.enc1.bias,       &net.enc2.kernels,
        &net.enc2.bias,          &net.enc3.kernels,    &net.enc3.bias,
        &net.to_latent.weights,  &net.to_latent.bias,  &net.from_latent.weights,
        &net.from_latent.bias,   &net.dec3.kernels,    &net.dec3.bias,
        &net.dec2.kernels,       &net.dec2.bias,       &net.dec1.kernels,
        &net.dec1.bias};
    for (size_t i = 0; i < 16; ++i) {
        if (tensors[i].shape != dests[i]->shape)
            throw CorruptFile("tensor shape drift in " + path);
        *dests[i] = std::move(tensors[i]);
    }
    return net;
}

} // namespace depthgaze
