#include "depthgaze/cli.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "depthgaze/autoencoder.hpp"
#include "depthgaze/config.hpp"
#include "depthgaze/errors.hpp"
#include "depthgaze/evaluation.hpp"
#include "depthgaze/fixation.hpp"
#include "depthgaze/image_io.hpp"
#include "depthgaze/synth.hpp"
#include "depthgaze/transition.hpp"

#include "CLI11.hpp"

namespace fs = std::filesystem;

namespace depthgaze {

namespace {

RunConfig config_or_default(const std::string& path) {
    return path.empty() ? RunConfig{} : load_config(path);
}

std::string annotation_file(const DatasetManifest& m, const std::string& id) {
    for (const auto& v : m.videos)
        if (v.id == id) return v.annotations;
    return "";
}

int do_ingest(const std::string& root) {
    const DatasetManifest m = validate_manifest(root);
    std::printf("video,frames,split,depth_unit,fixations\n");
    for (const auto& v : m.videos) {
        const VideoSequence video = load_video(root, v.id);
        const auto fixes = load_fixations(root, v.id);
        std::printf("%s,%d,%s,%s,%zu\n", v.id.c_str(), static_cast<int>(video.frames.size()),
                    m.split.at(v.id).c_str(), v.depth_unit.c_str(), fixes.size());
    }
    return 0;
}

int do_quality(const std::string& root, int splits, uint64_t seed) {
    const DatasetManifest m = validate_manifest(root);
    HomogeneityConfig cfg;
    cfg.num_splits = splits;
    cfg.rng_seed = seed;
    std::printf("video,frames_scored,q\n");
    for (const auto& v : m.videos) {
        const auto records = load_fixations(root, v.id);
        const auto sets = collect_fixation_sets(records, v.frames, kWorkWidth, kWorkHeight);
        int skipped = 0;
        const double q = video_quality(sets, kWorkWidth, kWorkHeight, cfg, &skipped);
        std::printf("%s,%d,%.9g\n", v.id.c_str(), v.frames - skipped, q);
    }
    return 0;
}

int do_train_baseline(const std::string& root, const std::string& cfg_path,
                      const std::string& out, bool no_depth) {
    RunConfig cfg = config_or_default(cfg_path);
    cfg.baseline.use_depth = !no_depth;
    const DatasetManifest m = validate_manifest(root);

    TransitionDataset all;
    for (const std::string& id : m.ids_in_split("train")) {
        const VideoSequence video = load_video(root, id);
        const auto fixes = load_fixations(root, id);
        const auto anns = load_annotations(root, id, annotation_file(m, id));
        TransitionDataset d = collect_transition_examples(video, fixes, anns, cfg.baseline);
        all.features.insert(all.features.end(), d.features.begin(), d.features.end());
        all.labels.insert(all.labels.end(), d.labels.begin(), d.labels.end());
    }

    const LinearSvmModel model = train_svm(all.features, all.labels, cfg.svm);
    size_t correct = 0, positives = 0;
    for (size_t i = 0; i < all.features.size(); ++i) {
        const int pred = svm_confidence(model, all.features[i]) > 0.0 ? 1 : -1;
        correct += (pred == all.labels[i]);
        positives += (all.labels[i] > 0);
    }
    write_svm_model(out, model);
    std::printf("examples=%zu positives=%zu train_accuracy=%.4f\n", all.features.size(),
                positives, static_cast<double>(correct) / all.features.size());
    std::printf("wrote %s\n", out.c_str());
    return 0;
}

int do_train_cnn(const std::string& root, const std::string& cfg_path, const std::string& out,
                 bool no_depth, int epochs_override) {
    RunConfig cfg = config_or_default(cfg_path);
    if (epochs_override > 0) cfg.cnn.epochs = epochs_override;
    const DatasetManifest m = validate_manifest(root);

    std::vector<TrainSequence> sequences;
    size_t steps = 0;
    for (const std::string& id : m.ids_in_split("train")) {
        const VideoSequence video = load_video(root, id);
        const auto fixes = load_fixations(root, id);
        sequences.push_back(collect_step_samples(video, fixes, cfg.baseline.interval,
                                                 !no_depth, cfg.baseline.flow, cfg.net.width,
                                                 cfg.net.height));
        steps += sequences.back().steps.size();
    }

    Autoencoder net = train_autoencoder(sequences, cfg.net, cfg.cnn);
    write_autoencoder(out, net);
    std::printf("trained %zu videos, %zu steps, %d epochs\n", sequences.size(), steps,
                cfg.cnn.epochs);
    std::printf("wrote %s\n", out.c_str());
    return 0;
}

int do_predict(const std::string& weights, const std::string& root, const std::string& video_id,
               const std::string& out, bool no_depth, const std::string& kind,
               const std::string& cfg_path) {
    RunConfig cfg = config_or_default(cfg_path);
    const VideoSequence video = load_video(root, video_id);

    std::vector<SaliencyMap> maps;
    if (kind == "cnn") {
        Autoencoder net = read_autoencoder(weights);
        maps = predict_sequence(net, video, !no_depth, cfg.baseline.interval,
                                cfg.baseline.flow);
    } else {
        cfg.baseline.use_depth = !no_depth;
        const DatasetManifest m = validate_manifest(root);
        const auto anns = load_annotations(root, video_id, annotation_file(m, video_id));
        const LinearSvmModel model = read_svm_model(weights);
        maps = run_baseline(video, model, anns, cfg.baseline);
    }

    try {
        fs::create_directories(out);
    } catch (const fs::filesystem_error& e) {
        throw IoError(e.what());
    }
    for (size_t i = 0; i < maps.size(); ++i)
        write_prediction_png((fs::path(out) / frame_file_name(static_cast<int>(i))).string(),
                             maps[i]);
    std::printf("wrote %zu maps to %s\n", maps.size(), out.c_str());
    return 0;
}

int do_evaluate(const std::string& root, const std::string& preds, const std::string& metrics,
                bool seed_given, uint64_t seed, const std::string& out,
                const std::string& cfg_path) {
    RunConfig cfg = config_or_default(cfg_path);
    if (seed_given) {
        cfg.eval.seed = seed;
        cfg.eval.gt_cfg.rng_seed = seed;
    }

    std::set<std::string> wanted;
    {
        std::string tok;
        for (size_t i = 0; i <= metrics.size(); ++i) {
            if (i == metrics.size() || metrics[i] == ',') {
                if (tok == "auc")
                    wanted.insert("auc");
                else if (tok == "chi2")
                    wanted.insert("one_minus_chi2");
                else if (!tok.empty()) {
                    std::fprintf(stderr, "unknown metric \"%s\" (expected auc, chi2)\n",
                                 tok.c_str());
                    return 1;
                }
                tok.clear();
            } else {
                tok += metrics[i];
            }
        }
        if (wanted.empty()) {
            std::fprintf(stderr, "no metrics requested\n");
            return 1;
        }
    }

    std::vector<std::pair<std::string, MapProducer>> methods;
    {
        std::string dir;
        for (size_t i = 0; i <= preds.size(); ++i) {
            if (i == preds.size() || preds[i] == ',') {
                if (!dir.empty()) {
                    fs::path p(dir);
                    if (!p.has_filename()) p = p.parent_path();
                    methods.emplace_back(p.filename().string(),
                                         [dir](const std::string& vid, int frame) {
                                             const fs::path f =
                                                 fs::path(dir) / vid / frame_file_name(frame);
                                             if (!fs::exists(f))
                                                 throw MissingPredictions(f.string());
                                             return read_prediction_png(f.string());
                                         });
                }
                dir.clear();
            } else {
                dir += preds[i];
            }
        }
        if (methods.empty()) {
            std::fprintf(stderr, "no prediction directories given\n");
            return 1;
        }
    }

    const DatasetManifest m = validate_manifest(root);
    MetricReport report = evaluate_split(methods, root, m, cfg.eval);

    MetricReport filtered;
    for (const auto& r : report.rows)
        if (wanted.count(r.metric)) filtered.rows.push_back(r);
    for (const auto& s : report.summary)
        if (wanted.count(s.metric)) filtered.summary.push_back(s);

    write_report_csv(out, filtered);
    std::printf("method,metric,mean,std\n");
    for (const auto& s : filtered.summary)
        std::printf("%s,%s,%.9g,%.9g\n", s.method.c_str(), s.metric.c_str(), s.mean, s.stddev);
    std::printf("wrote %s\n", out.c_str());
    return 0;
}

int do_overlay(const std::string& root, const std::string& video_id, const std::string& pred,
               const std::string& out) {
    const VideoSequence video = load_video(root, video_id);
    const int n = static_cast<int>(video.frames.size());

    if (!fs::is_directory(pred)) throw MissingPredictions(pred + ": not a directory");
    int present = 0;
    for (const auto& e : fs::directory_iterator(pred)) {
        const std::string name = e.path().filename().string();
        if (name.size() == 10 && name.substr(6) == ".png") ++present;
    }
    if (present != n)
        throw MissingPredictions(pred + ": " + std::to_string(present) + " predictions for " +
                                 std::to_string(n) + " frames");

    std::vector<SaliencyMap> maps;
    maps.reserve(static_cast<size_t>(n));
    for (int i = 0; i < n; ++i) {
        SaliencyMap m = read_prediction_png((fs::path(pred) / frame_file_name(i)).string());
        if (!m.grid.same_dims(video.frames[0].r))
            m = SaliencyMap{resample_bilinear(m.grid, video.frames[0].r.width(),
                                              video.frames[0].r.height()),
                            m.norm};
        maps.push_back(std::move(m));
    }

    render_overlays(video, maps, out);
    std::printf("wrote %d overlays to %s\n", n, out.c_str());
    return 0;
}

int do_synth(const std::string& spec_path, const std::string& out) {
    const auto specs = load_scene_specs(spec_path);
    for (const SceneSpec& s : specs) {
        generate_scene(s, out);
        std::printf("generated %s: %d frames\n", s.video_id.c_str(), s.frames);
    }
    return 0;
}

} // namespace

void render_overlays(const VideoSequence& video, const std::vector<SaliencyMap>& predictions,
                     const std::string& out_dir) {
    if (predictions.size() != video.frames.size())
        throw MissingPredictions(std::to_string(predictions.size()) + " predictions for " +
                                 std::to_string(video.frames.size()) + " frames");
    try {
        fs::create_directories(out_dir);
    } catch (const fs::filesystem_error& e) {
        throw IoError(e.what());
    }

    for (size_t i = 0; i < video.frames.size(); ++i) {
        const RgbdFrame& f = video.frames[i];
        const SaliencyMap& sal = predictions[i];
        if (!sal.grid.same_dims(f.r))
            throw DimensionMismatch("overlay frame " + std::to_string(i) +
                                    ": prediction size differs from the video");
        Rgb8Image img;
        img.r = Grid<uint8_t>(f.r.width(), f.r.height(), 0);
        img.g = Grid<uint8_t>(f.r.width(), f.r.height(), 0);
        img.b = Grid<uint8_t>(f.r.width(), f.r.height(), 0);
        for (size_t p = 0; p < f.r.size(); ++p) {
            const double s = std::clamp(sal.grid[p], 0.0, 1.0);
            const double a = 0.5 * s;
            const double hr = std::min(1.0, 2.0 * s);
            const double hg = std::clamp(2.0 * s - 1.0, 0.0, 1.0);
            img.r[p] = static_cast<uint8_t>(std::lround(255.0 * ((1 - a) * f.r[p] + a * hr)));
            img.g[p] = static_cast<uint8_t>(std::lround(255.0 * ((1 - a) * f.g[p] + a * hg)));
            img.b[p] = static_cast<uint8_t>(std::lround(255.0 * (1 - a) * f.b[p]));
        }
        write_png_rgb8((fs::path(out_dir) / frame_file_name(static_cast<int>(i))).string(),
                       img);
    }
}

int cli_dispatch(int argc, char** argv) {
    CLI::App app{"depth-aware video saliency toolkit"};
    app.require_subcommand(1);
    int threads = 1;
    app.add_option("--threads", threads, "worker cap; every setting gives identical results")
        ->check(CLI::PositiveNumber);

    auto* ing = app.add_subcommand("ingest", "validate a dataset and print a per-video table");
    std::string ing_root;
    ing->add_option("--root", ing_root, "dataset root")->required();

    auto* qual = app.add_subcommand("quality", "per-video fixation homogeneity scores");
    std::string q_root;
    int q_splits = 10;
    uint64_t q_seed = 0;
    qual->add_option("--root", q_root, "dataset root")->required();
    qual->add_option("--splits", q_splits, "balanced viewer splits per frame")
        ->check(CLI::PositiveNumber);
    qual->add_option("--seed", q_seed, "split sampling seed");

    auto* tb = app.add_subcommand("train-baseline", "fit the transition SVM on the train split");
    std::string tb_root, tb_cfg, tb_out;
    bool tb_nodepth = false;
    tb->add_option("--root", tb_root, "dataset root")->required();
    tb->add_option("--config", tb_cfg, "run configuration JSON");
    tb->add_option("--out", tb_out, "model file to write")->required();
    tb->add_flag("--no-depth", tb_nodepth, "zero the depth feature");

    auto* tc = app.add_subcommand("train-cnn", "train the autoencoder on the train split");
    std::string tc_root, tc_cfg, tc_out;
    bool tc_nodepth = false;
    int tc_epochs = 0;
    tc->add_option("--root", tc_root, "dataset root")->required();
    tc->add_option("--config", tc_cfg, "run configuration JSON");
    tc->add_option("--out", tc_out, "weights file to write")->required();
    tc->add_flag("--no-depth", tc_nodepth, "zero the depth channel");
    tc->add_option("--epochs", tc_epochs, "override the configured epoch count")
        ->check(CLI::PositiveNumber);

    auto* pr = app.add_subcommand("predict", "write per-frame saliency maps for one video");
    std::string pr_weights, pr_root, pr_video, pr_out, pr_model = "cnn", pr_cfg;
    bool pr_nodepth = false;
    pr->add_option("--weights", pr_weights, "model or weights file")->required();
    pr->add_option("--root", pr_root, "dataset root")->required();
    pr->add_option("--video", pr_video, "video id")->required();
    pr->add_option("--out", pr_out, "prediction directory to write")->required();
    pr->add_flag("--no-depth", pr_nodepth, "zero the depth channel");
    pr->add_option("--model", pr_model, "predictor kind")
        ->check(CLI::IsMember({"baseline", "cnn"}));
    pr->add_option("--config", pr_cfg, "run configuration JSON");

    auto* ev = app.add_subcommand("evaluate", "score prediction directories on the test split");
    std::string ev_root, ev_pred, ev_metrics = "auc,chi2", ev_out, ev_cfg;
    uint64_t ev_seed = 0;
    ev->add_option("--root", ev_root, "dataset root")->required();
    ev->add_option("--pred", ev_pred, "prediction directories, comma separated")->required();
    ev->add_option("--metrics", ev_metrics, "metrics to report: auc,chi2");
    auto* ev_seed_opt = ev->add_option("--seed", ev_seed, "negative sampling seed");
    ev->add_option("--out", ev_out, "report file to write")->required();
    ev->add_option("--config", ev_cfg, "run configuration JSON");

    auto* ov = app.add_subcommand("overlay", "blend saliency onto the frames of one video");
    std::string ov_root, ov_video, ov_pred, ov_out;
    ov->add_option("--root", ov_root, "dataset root")->required();
    ov->add_option("--video", ov_video, "video id")->required();
    ov->add_option("--pred", ov_pred, "prediction directory")->required();
    ov->add_option("--out", ov_out, "overlay directory to write")->required();

    auto* sy = app.add_subcommand("synth", "generate a synthetic dataset from a scene spec");
    std::string sy_spec, sy_out;
    sy->add_option("--spec", sy_spec, "scene spec JSON")->required();
    sy->add_option("--out", sy_out, "dataset root to write")->required();

    for (auto* sc : app.get_subcommands({})) sc->fallthrough();

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 1;
    }

    try {
        if (*ing) return do_ingest(ing_root);
        if (*qual) return do_quality(q_root, q_splits, q_seed);
        if (*tb) return do_train_baseline(tb_root, tb_cfg, tb_out, tb_nodepth);
        if (*tc) return do_train_cnn(tc_root, tc_cfg, tc_out, tc_nodepth, tc_epochs);
        if (*pr)
            return do_predict(pr_weights, pr_root, pr_video, pr_out, pr_nodepth, pr_model,
                              pr_cfg);
        if (*ev)
            return do_evaluate(ev_root, ev_pred, ev_metrics, ev_seed_opt->count() > 0, ev_seed,
                               ev_out, ev_cfg);
        if (*ov) return do_overlay(ov_root, ov_video, ov_pred, ov_out);
        if (*sy) return do_synth(sy_spec, sy_out);
    } catch (const NumericError& e) {
        std::fprintf(stderr, "%s\n", e.what());
        return 3;
    } catch (const DataError& e) {
        std::fprintf(stderr, "%s\n", e.what());
        return 2;
    } catch (const Error& e) {
        std::fprintf(stderr, "%s\n", e.what());
        return 2;
    } catch (const fs::filesystem_error& e) {
        std::fprintf(stderr, "%s\n", e.what());
        return 2;
    }
    return 1;
}

} // namespace depthgaze
