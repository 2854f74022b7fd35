#include "depthgaze/evaluation.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>

#include "depthgaze/image_io.hpp"
#include "depthgaze/rng.hpp"

namespace depthgaze {

namespace {

double chi2_grids(const GridD& a, const GridD& b) {
    double chi = 0.0;
    for (size_t i = 0; i < a.size(); ++i) {
        const double s = a[i] + b[i];
        if (s <= 0.0) continue;
        const double d = a[i] - b[i];
        chi += d * d / s;
    }
    return 0.5 * chi;
}

GridD renormalized_if_drifted(const GridD& g) {
    const double s = grid_sum(g);
    if (s > 0.0 && std::abs(s - 1.0) > 1e-6) {
        GridD out = g;
        for (size_t i = 0; i < out.size(); ++i) out[i] /= s;
        return out;
    }
    return g;
}

} // namespace

double chi2_distance(const ProbabilityMap& a, const ProbabilityMap& b) {
    if (!a.grid.same_dims(b.grid))
        throw ShapeMismatch("chi2 inputs must share dimensions");
    return chi2_grids(renormalized_if_drifted(a.grid), renormalized_if_drifted(b.grid));
}

double auc_score(const SaliencyMap& sal, const FixationSet& fixations, int n_neg_per_pos,
                 uint64_t seed) {
    const std::vector<Point> pts = fixations.all_points();
    if (pts.empty()) throw NoFixations("auc needs at least one fixation");
    if (!grid_finite(sal.grid)) throw NumericError("auc input saliency is not finite");

    const int w = sal.width(), h = sal.height();
    std::vector<double> pos;
    pos.reserve(pts.size());
    for (const Point& p : pts) {
        const int px = std::clamp(static_cast<int>(std::lround(p.x)), 0, w - 1);
        const int py = std::clamp(static_cast<int>(std::lround(p.y)), 0, h - 1);
        pos.push_back(sal.grid.at(px, py));
    }

    Rng rng(seed);
    std::vector<double> neg;
    neg.reserve(pos.size() * static_cast<size_t>(n_neg_per_pos));
    for (size_t i = 0; i < pos.size() * static_cast<size_t>(n_neg_per_pos); ++i) {
        const int x = static_cast<int>(rng.uniform_index(static_cast<size_t>(w)));
        const int y = static_cast<int>(rng.uniform_index(static_cast<size_t>(h)));
        neg.push_back(sal.grid.at(x, y));
    }

    // Rank statistic: AUC = (R_pos − P(P+1)/2) / (P·N) with midranks on
    // ties, identical to pairwise counting with ½ credit for ties.
    struct Entry {
        double value;
        bool positive;
    };
    std::vector<Entry> all;
    all.reserve(pos.size() + neg.size());
    for (double v : pos) all.push_back({v, true});
    for (double v : neg) all.push_back({v, false});
    std::sort(all.begin(), all.end(),
              [](const Entry& a, const Entry& b) { return a.value < b.value; });

    double rank_sum_pos = 0.0;
    size_t i = 0;
    while (i < all.size()) {
        size_t j = i;
        while (j < all.size() && all[j].value == all[i].value) ++j;
        const double midrank = 0.5 * (static_cast<double>(i + 1) + static_cast<double>(j));
        for (size_t t = i; t < j; ++t)
            if (all[t].positive) rank_sum_pos += midrank;
        i = j;
    }
    const double p = static_cast<double>(pos.size());
    const double n = static_cast<double>(neg.size());
    return (rank_sum_pos - p * (p + 1) / 2.0) / (p * n);
}

std::vector<SummaryRow> summarize(const std::vector<FrameScore>& rows) {
    std::vector<SummaryRow> out;
    auto find = [&](const std::string& method, const std::string& metric) -> SummaryRow& {
        for (auto& s : out)
            if (s.method == method && s.metric == metric) return s;
        out.push_back(SummaryRow{method, metric, 0.0, 0.0, 0});
        return out.back();
    };
    for (const auto& r : rows) {
        SummaryRow& s = find(r.method, r.metric);
        s.mean += r.value;
        ++s.count;
    }
    for (auto& s : out) s.mean /= s.count;
    for (const auto& r : rows) {
        SummaryRow& s = find(r.method, r.metric);
        const double d = r.value - s.mean;
        s.stddev += d * d;
    }
    for (auto& s : out) s.stddev = s.count > 1 ? std::sqrt(s.stddev / (s.count - 1)) : 0.0;
    return out;
}

MetricReport evaluate_split(const std::vector<std::pair<std::string, MapProducer>>& methods,
                            const std::string& root, const DatasetManifest& manifest,
                            const EvalConfig& cfg) {
    MetricReport report;

    if (manifest.ids_in_split("test").empty())
        throw SplitIncomplete("manifest lists no test videos");

    for (const auto& mv : manifest.videos) {
        auto it = manifest.split.find(mv.id);
        if (it == manifest.split.end() || it->second != "test") continue;

        const auto records = load_fixations(root, mv.id);
        const auto sets = collect_fixation_sets(records, mv.frames, kWorkWidth, kWorkHeight);

        for (int f = 0; f < mv.frames; ++f) {
            const FixationSet& set = sets[static_cast<size_t>(f)];
            if (set.point_count() == 0) continue;

            const ProbabilityMap gt = densify(set, kWorkWidth, kWorkHeight);
            const uint64_t frame_seed =
                mix_seed(mix_seed(cfg.seed, hash_string(mv.id)), static_cast<uint64_t>(f));

            for (const auto& [name, producer] : methods) {
                SaliencyMap pred = producer(mv.id, f);
                if (pred.width() != kWorkWidth || pred.height() != kWorkHeight) {
                    pred.grid = resample_bilinear(pred.grid, kWorkWidth, kWorkHeight);
                }
                const double chi = chi2_distance(make_probability(pred.grid), gt);
                report.rows.push_back({name, mv.id, f, "one_minus_chi2", 1.0 - chi});
                report.rows.push_back(
                    {name, mv.id, f, "auc",
                     auc_score(pred, set, cfg.n_neg_per_pos, frame_seed)});
            }

            if (cfg.with_gt_row && set.viewer_count() >= 2) {
                HomogeneityConfig hcfg = cfg.gt_cfg;
                hcfg.rng_seed =
                    mix_seed(mix_seed(cfg.gt_cfg.rng_seed, hash_string(mv.id)),
                             static_cast<uint64_t>(f));
                report.rows.push_back({"gt", mv.id, f, "one_minus_chi2",
                                       homogeneity_score(set, kWorkWidth, kWorkHeight, hcfg)});

                // Split-half AUC: the map from one viewer half scored
                // against the fixations of the other half.
                const auto splits =
                    balanced_viewer_splits(static_cast<int>(set.viewer_count()), hcfg);
                double auc_sum = 0.0;
                for (const auto& [half, rest] : splits) {
                    const ProbabilityMap m =
                        densify_points(viewer_points(set, half), kWorkWidth, kWorkHeight);
                    FixationSet other;
                    for (int vi : rest) other.viewers.push_back(set.viewers[vi]);
                    auc_sum += auc_score(SaliencyMap{m.grid, MapNorm::kSum1}, other,
                                         cfg.n_neg_per_pos, frame_seed);
                }
                report.rows.push_back(
                    {"gt", mv.id, f, "auc", auc_sum / static_cast<double>(splits.size())});
            }
        }
    }

    report.summary = summarize(report.rows);
    return report;
}

void write_report_csv(const std::string& path, const MetricReport& report) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write " + path);
    out << "method,video,frame,metric,value\n";
    char buf[64];
    for (const auto& r : report.rows) {
        std::snprintf(buf, sizeof(buf), "%.9g", r.value);
        out << r.method << ',' << r.video << ',' << r.frame << ',' << r.metric << ',' << buf
            << '\n';
    }
    out << "method,metric,mean,std\n";
    for (const auto& s : report.summary) {
        char mbuf[64], sbuf[64];
        std::snprintf(mbuf, sizeof(mbuf), "%.9g", s.mean);
        std::snprintf(sbuf, sizeof(sbuf), "%.9g", s.stddev);
        out << s.method << ',' << s.metric << ',' << mbuf << ',' << sbuf << '\n';
    }
}

void write_prediction_png(const std::string& path, const SaliencyMap& map) {
    const double m = grid_max(map.grid);
    Grid<uint8_t> img(map.width(), map.height(), 0);
    if (m > 0.0) {
        for (size_t i = 0; i < img.size(); ++i) {
            const double v = std::clamp(map.grid[i] / m, 0.0, 1.0);
            img[i] = static_cast<uint8_t>(std::lround(v * 255.0));
        }
    }
    write_png_gray8(path, img);
}

SaliencyMap read_prediction_png(const std::string& path) {
    const Grid<uint8_t> img = read_png_gray8(path);
    GridD g(img.width(), img.height());
    for (size_t i = 0; i < g.size(); ++i) g[i] = img[i] / 255.0;
    return make_saliency_max1(std::move(g));
}

} // namespace depthgaze
