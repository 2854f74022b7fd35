#include "depthgaze/config.hpp"

#include <fstream>

#include "depthgaze/errors.hpp"

#include "json.hpp"

using nlohmann::json;
using nlohmann::ordered_json;

namespace depthgaze {

namespace {

void reject_unknown(const json& obj, std::initializer_list<const char*> known,
                    const std::string& where) {
    if (!obj.is_object()) throw ParseError(where + ": expected an object");
    for (auto& [key, _] : obj.items()) {
        bool ok = false;
        for (const char* k : known) ok = ok || key == k;
        if (!ok) throw ParseError(where + ": unknown key \"" + key + "\"");
    }
}

template <typename T>
void take(const json& obj, const char* key, T& into, const std::string& where) {
    if (!obj.contains(key)) return;
    try {
        into = obj.at(key).get<T>();
    } catch (const json::exception&) {
        throw ParseError(where + "." + key + ": wrong type");
    }
}

void parse_candidates(const json& j, CandidateParams& c, const std::string& w) {
    reject_unknown(j, {"bandwidth", "k_max", "center_sigma"}, w);
    take(j, "bandwidth", c.bandwidth, w);
    take(j, "k_max", c.k_max, w);
    take(j, "center_sigma", c.center_sigma, w);
}

void parse_saliency(const json& j, GraphSaliencyParams& s, const std::string& w) {
    reject_unknown(j, {"lattice_factor", "sigma", "eps", "residual", "max_iters"}, w);
    take(j, "lattice_factor", s.lattice_factor, w);
    take(j, "sigma", s.sigma, w);
    take(j, "eps", s.eps, w);
    take(j, "residual", s.residual, w);
    take(j, "max_iters", s.max_iters, w);
}

void parse_flow(const json& j, FlowParams& f, const std::string& w) {
    reject_unknown(j,
                   {"alpha", "channel_scale", "levels", "warps_per_level", "iters_per_warp",
                    "presmooth_sigma", "depth_weight"},
                   w);
    take(j, "alpha", f.alpha, w);
    take(j, "channel_scale", f.channel_scale, w);
    take(j, "levels", f.levels, w);
    take(j, "warps_per_level", f.warps_per_level, w);
    take(j, "iters_per_warp", f.iters_per_warp, w);
    take(j, "presmooth_sigma", f.presmooth_sigma, w);
    take(j, "depth_weight", f.depth_weight, w);
}

} // namespace

RunConfig load_config(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot read config " + path);
    json doc;
    try {
        doc = json::parse(in);
    } catch (const json::parse_error& e) {
        throw ParseError(path + ": " + e.what());
    }

    RunConfig cfg;
    reject_unknown(doc, {"version", "interval", "threads", "baseline", "flow", "svm", "cnn",
                         "eval"},
                   path);
    if (!doc.contains("version")) throw ParseError(path + ": missing \"version\"");
    if (!doc.at("version").is_number_integer() || doc.at("version").get<int>() != 1)
        throw ParseError(path + ": unsupported version (expected 1)");

    take(doc, "interval", cfg.baseline.interval, path);
    take(doc, "threads", cfg.threads, path);
    if (cfg.threads < 1) throw ParseError(path + ": threads must be >= 1");

    if (doc.contains("baseline")) {
        const json& b = doc.at("baseline");
        const std::string w = path + ".baseline";
        reject_unknown(b, {"threshold_fraction", "sigma_fraction", "candidates", "saliency"}, w);
        take(b, "threshold_fraction", cfg.baseline.threshold_fraction, w);
        take(b, "sigma_fraction", cfg.baseline.sigma_fraction, w);
        if (b.contains("candidates")) parse_candidates(b.at("candidates"), cfg.baseline.cand, w + ".candidates");
        if (b.contains("saliency")) parse_saliency(b.at("saliency"), cfg.baseline.saliency, w + ".saliency");
    }
    if (doc.contains("flow")) parse_flow(doc.at("flow"), cfg.baseline.flow, path + ".flow");

    if (doc.contains("svm")) {
        const json& s = doc.at("svm");
        const std::string w = path + ".svm";
        reject_unknown(s, {"c_reg", "epochs", "seed"}, w);
        take(s, "c_reg", cfg.svm.c_reg, w);
        take(s, "epochs", cfg.svm.epochs, w);
        take(s, "seed", cfg.svm.seed, w);
    }

    if (doc.contains("cnn")) {
        const json& c = doc.at("cnn");
        const std::string w = path + ".cnn";
        reject_unknown(c,
                       {"width", "height", "conv1", "conv2", "conv3", "latent", "k1", "k2",
                        "k3", "momentum", "base_lr", "epochs", "flat_epochs", "halve_every",
                        "seed", "log_path"},
                       w);
        take(c, "width", cfg.net.width, w);
        take(c, "height", cfg.net.height, w);
        take(c, "conv1", cfg.net.conv1, w);
        take(c, "conv2", cfg.net.conv2, w);
        take(c, "conv3", cfg.net.conv3, w);
        take(c, "latent", cfg.net.latent, w);
        take(c, "k1", cfg.net.k1, w);
        take(c, "k2", cfg.net.k2, w);
        take(c, "k3", cfg.net.k3, w);
        take(c, "momentum", cfg.cnn.momentum, w);
        take(c, "base_lr", cfg.cnn.base_lr, w);
        take(c, "epochs", cfg.cnn.epochs, w);
        take(c, "flat_epochs", cfg.cnn.flat_epochs, w);
        take(c, "halve_every", cfg.cnn.halve_every, w);
        take(c, "seed", cfg.cnn.seed, w);
        take(c, "log_path", cfg.cnn.log_path, w);
    }

    if (doc.contains("eval")) {
        const json& e = doc.at("eval");
        const std::string w = path + ".eval";
        reject_unknown(e, {"n_neg_per_pos", "seed", "splits", "exhaustive", "gt_row"}, w);
        take(e, "n_neg_per_pos", cfg.eval.n_neg_per_pos, w);
        take(e, "seed", cfg.eval.seed, w);
        take(e, "splits", cfg.eval.gt_cfg.num_splits, w);
        take(e, "exhaustive", cfg.eval.gt_cfg.exhaustive, w);
        take(e, "gt_row", cfg.eval.with_gt_row, w);
        cfg.eval.gt_cfg.rng_seed = cfg.eval.seed;
    }
    return cfg;
}

std::string config_json(const RunConfig& cfg) {
    ordered_json doc;
    doc["version"] = 1;
    doc["interval"] = cfg.baseline.interval;
    doc["threads"] = cfg.threads;
    doc["baseline"] = {
        {"threshold_fraction", cfg.baseline.threshold_fraction},
        {"sigma_fraction", cfg.baseline.sigma_fraction},
        {"candidates",
         {{"bandwidth", cfg.baseline.cand.bandwidth},
          {"k_max", cfg.baseline.cand.k_max},
          {"center_sigma", cfg.baseline.cand.center_sigma}}},
        {"saliency",
         {{"lattice_factor", cfg.baseline.saliency.lattice_factor},
          {"sigma", cfg.baseline.saliency.sigma},
          {"eps", cfg.baseline.saliency.eps},
          {"residual", cfg.baseline.saliency.residual},
          {"max_iters", cfg.baseline.saliency.max_iters}}}};
    doc["flow"] = {{"alpha", cfg.baseline.flow.alpha},
                   {"channel_scale", cfg.baseline.flow.channel_scale},
                   {"levels", cfg.baseline.flow.levels},
                   {"warps_per_level", cfg.baseline.flow.warps_per_level},
                   {"iters_per_warp", cfg.baseline.flow.iters_per_warp},
                   {"presmooth_sigma", cfg.baseline.flow.presmooth_sigma},
                   {"depth_weight", cfg.baseline.flow.depth_weight}};
    doc["svm"] = {{"c_reg", cfg.svm.c_reg}, {"epochs", cfg.svm.epochs}, {"seed", cfg.svm.seed}};
    doc["cnn"] = {{"width", cfg.net.width},
                  {"height", cfg.net.height},
                  {"conv1", cfg.net.conv1},
                  {"conv2", cfg.net.conv2},
                  {"conv3", cfg.net.conv3},
                  {"latent", cfg.net.latent},
                  {"k1", cfg.net.k1},
                  {"k2", cfg.net.k2},
                  {"k3", cfg.net.k3},
                  {"momentum", cfg.cnn.momentum},
                  {"base_lr", cfg.cnn.base_lr},
                  {"epochs", cfg.cnn.epochs},
                  {"flat_epochs", cfg.cnn.flat_epochs},
                  {"halve_every", cfg.cnn.halve_every},
                  {"seed", cfg.cnn.seed},
                  {"log_path", cfg.cnn.log_path}};
    doc["eval"] = {{"n_neg_per_pos", cfg.eval.n_neg_per_pos},
                   {"seed", cfg.eval.seed},
                   {"splits", cfg.eval.gt_cfg.num_splits},
                   {"exhaustive", cfg.eval.gt_cfg.exhaustive},
                   {"gt_row", cfg.eval.with_gt_row}};
    return doc.dump(2) + "\n";
}

} // namespace depthgaze
