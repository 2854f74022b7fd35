#include "depthgaze/synth.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>

#include "depthgaze/errors.hpp"
#include "depthgaze/flow.hpp"
#include "depthgaze/image_io.hpp"
#include "depthgaze/rng.hpp"

#include "json.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using nlohmann::ordered_json;

namespace depthgaze {

namespace {

double clamp01(double v) { return std::clamp(v, 0.0, 1.0); }

void validate_spec(const SceneSpec& spec) {
    if (spec.video_id.empty()) throw OutOfRange("scene: empty video id");
    if (spec.frames < 1) throw OutOfRange("scene " + spec.video_id + ": frames < 1");
    if (spec.split != "train" && spec.split != "test")
        throw OutOfRange("scene " + spec.video_id + ": split must be train or test");
    if (spec.width < 8 || spec.height < 8)
        throw OutOfRange("scene " + spec.video_id + ": frame smaller than 8x8");
    for (const auto& blob : spec.blobs) {
        if (!(blob.radius > 0.0)) throw OutOfRange(spec.video_id + ": blob radius must be > 0");
        if (2.0 * blob.radius >= std::min(spec.width, spec.height))
            throw OutOfRange(spec.video_id + ": blob diameter exceeds the frame");
    }
    const FixationPolicy& p = spec.policy;
    if (p.viewers < 1) throw OutOfRange(spec.video_id + ": viewers < 1");
    if (p.kind == FixationPolicy::Kind::kFollowBlob &&
        (p.blob_index < 0 || p.blob_index >= static_cast<int>(spec.blobs.size())))
        throw OutOfRange(spec.video_id + ": follow-blob index out of range");
    if (p.separation < 0.0) throw OutOfRange(spec.video_id + ": negative cluster separation");
}

// Disk with a 1 px anti-aliased rim.
double coverage(double dist, double radius) {
    if (dist <= radius - 1.0) return 1.0;
    if (dist >= radius) return 0.0;
    return radius - dist;
}

struct RenderedFrame {
    Rgb8Image rgb;
    Grid<uint16_t> depth;
    Grid<int> owner; // topmost covering blob, -1 = background
};

RenderedFrame render_frame(const SceneSpec& spec, int t, Rng& noise_rng) {
    const int W = spec.width, H = spec.height;
    GridD r(W, H, spec.bg_r), g(W, H, spec.bg_g), b(W, H, spec.bg_b);
    GridD d(W, H, spec.bg_depth);
    Grid<int> owner(W, H, -1);

    for (size_t k = 0; k < spec.blobs.size(); ++k) {
        const BlobSpec& blob = spec.blobs[k];
        const Point pos = blob_position(blob, t, spec.frames, W, H);
        const int x0 = std::max(0, static_cast<int>(std::floor(pos.x - blob.radius - 1)));
        const int x1 = std::min(W - 1, static_cast<int>(std::ceil(pos.x + blob.radius + 1)));
        const int y0 = std::max(0, static_cast<int>(std::floor(pos.y - blob.radius - 1)));
        const int y1 = std::min(H - 1, static_cast<int>(std::ceil(pos.y + blob.radius + 1)));
        for (int y = y0; y <= y1; ++y)
            for (int x = x0; x <= x1; ++x) {
                const double cov = coverage(std::hypot(x - pos.x, y - pos.y), blob.radius);
                if (cov <= 0.0) continue;
                r.at(x, y) += cov * (blob.r - r.at(x, y));
                g.at(x, y) += cov * (blob.g - g.at(x, y));
                b.at(x, y) += cov * (blob.b - b.at(x, y));
                if (cov > 0.5) {
                    d.at(x, y) = blob.depth;
                    owner.at(x, y) = static_cast<int>(k);
                }
            }
    }

    RenderedFrame out;
    out.rgb.r = Grid<uint8_t>(W, H, 0);
    out.rgb.g = Grid<uint8_t>(W, H, 0);
    out.rgb.b = Grid<uint8_t>(W, H, 0);
    out.depth = Grid<uint16_t>(W, H, 0);
    out.owner = owner;
    for (size_t p = 0; p < r.size(); ++p) {
        double rv = r[p], gv = g[p], bv = b[p];
        if (spec.noise > 0.0) {
            rv += noise_rng.uniform(-spec.noise, spec.noise);
            gv += noise_rng.uniform(-spec.noise, spec.noise);
            bv += noise_rng.uniform(-spec.noise, spec.noise);
        }
        out.rgb.r[p] = static_cast<uint8_t>(std::lround(255.0 * clamp01(rv)));
        out.rgb.g[p] = static_cast<uint8_t>(std::lround(255.0 * clamp01(gv)));
        out.rgb.b[p] = static_cast<uint8_t>(std::lround(255.0 * clamp01(bv)));
        out.depth[p] = static_cast<uint16_t>(1 + std::lround(65534.0 * clamp01(d[p])));
    }
    return out;
}

// Fixation jitter: sigma 2 px, radially truncated at 2.5 sigma so every
// sample lands within 3 sigma of the tracked center regardless of seed.
Point jittered(const Point& center, Rng& rng) {
    double dx = 2.0 * rng.normal();
    double dy = 2.0 * rng.normal();
    const double r = std::hypot(dx, dy);
    if (r > 5.0) {
        dx *= 5.0 / r;
        dy *= 5.0 / r;
    }
    return {center.x + dx, center.y + dy};
}

void write_fixations(const SceneSpec& spec, const fs::path& dir, Rng& rng) {
    std::ofstream out(dir / "fixations.csv", std::ios::binary);
    if (!out) throw IoError("cannot write " + (dir / "fixations.csv").string());
    out << "frame,viewer,x,y\n";
    const int W = spec.width, H = spec.height;
    char buf[96];
    auto emit = [&](int frame, const std::string& viewer, Point p) {
        p.x = std::clamp(p.x, 0.0, W - 1.0);
        p.y = std::clamp(p.y, 0.0, H - 1.0);
        std::snprintf(buf, sizeof(buf), "%d,%s,%.17g,%.17g\n", frame, viewer.c_str(),
                      p.x / (W - 1.0), p.y / (H - 1.0));
        out << buf;
    };

    const FixationPolicy& pol = spec.policy;
    for (int t = 0; t < spec.frames; ++t) {
        switch (pol.kind) {
        case FixationPolicy::Kind::kFollowBlob: {
            const Point c =
                blob_position(spec.blobs[pol.blob_index], t, spec.frames, W, H);
            for (int v = 0; v < pol.viewers; ++v)
                emit(t, "v" + std::to_string(v), jittered(c, rng));
            break;
        }
        case FixationPolicy::Kind::kCenter: {
            const Point c{static_cast<double>(W / 2), static_cast<double>(H / 2)};
            for (int v = 0; v < pol.viewers; ++v) emit(t, "v" + std::to_string(v), c);
            break;
        }
        case FixationPolicy::Kind::kTwoCluster: {
            const double cx = W / 2.0, cy = H / 2.0;
            for (int side = 0; side < 2; ++side) {
                const double off = (side == 0 ? -0.5 : 0.5) * pol.separation;
                for (int v = 0; v < pol.viewers; ++v)
                    emit(t, "c" + std::to_string(side) + "v" + std::to_string(v),
                         {cx + off, cy});
            }
            break;
        }
        }
    }
}

void merge_manifest(const SceneSpec& spec, const fs::path& root) {
    ordered_json m;
    const fs::path path = root / "manifest.json";
    if (fs::exists(path)) {
        std::ifstream in(path, std::ios::binary);
        try {
            m = ordered_json::parse(in);
        } catch (const json::parse_error& e) {
            throw ParseError(path.string() + ": " + e.what());
        }
    } else {
        m = ordered_json{{"videos", ordered_json::array()}, {"split", ordered_json::object()}};
    }

    std::vector<ordered_json> videos;
    for (auto& v : m["videos"])
        if (v.value("id", "") != spec.video_id) videos.push_back(v);
    videos.push_back(ordered_json{{"id", spec.video_id},
                                  {"frames", spec.frames},
                                  {"depth_unit", "normalized"},
                                  {"annotations", nullptr}});
    std::sort(videos.begin(), videos.end(), [](const ordered_json& a, const ordered_json& b) {
        return a.at("id").get<std::string>() < b.at("id").get<std::string>();
    });

    std::map<std::string, std::string> split; // sorted keys keep the bytes canonical
    for (auto& [id, s] : m["split"].items()) split[id] = s.get<std::string>();
    split[spec.video_id] = spec.split;

    ordered_json out;
    out["videos"] = videos;
    out["split"] = ordered_json::object();
    for (const auto& [id, s] : split) out["split"][id] = s;

    std::ofstream os(path, std::ios::binary);
    if (!os) throw IoError("cannot write " + path.string());
    os << out.dump(2) << '\n';
}

} // namespace

Point blob_position(const BlobSpec& blob, int frame, int frame_count, int width, int height) {
    Point p{width / 2.0, height / 2.0};
    if (!blob.path.empty()) {
        if (blob.path.size() == 1 || frame_count <= 1) {
            p = blob.path.front();
        } else {
            const double s = static_cast<double>(frame) / (frame_count - 1);
            const double pos = s * (blob.path.size() - 1);
            const size_t seg = std::min(blob.path.size() - 2, static_cast<size_t>(pos));
            const double f = pos - static_cast<double>(seg);
            p.x = blob.path[seg].x + f * (blob.path[seg + 1].x - blob.path[seg].x);
            p.y = blob.path[seg].y + f * (blob.path[seg + 1].y - blob.path[seg].y);
        }
    }
    p.x = std::clamp(p.x, blob.radius, width - 1.0 - blob.radius);
    p.y = std::clamp(p.y, blob.radius, height - 1.0 - blob.radius);
    return p;
}

void generate_scene(const SceneSpec& spec, const std::string& out_root) {
    validate_spec(spec);
    const fs::path root(out_root);
    const fs::path dir = root / "videos" / spec.video_id;
    try {
        fs::create_directories(dir / "rgb");
        fs::create_directories(dir / "depth");
        fs::create_directories(dir / "flow");
    } catch (const fs::filesystem_error& e) {
        throw IoError(e.what());
    }

    // Independent streams keep the fixation track invariant under the noise
    // setting, so ablation corpora share ground truth across noise levels.
    Rng noise_rng(spec.seed);
    Rng fix_rng(spec.seed ^ 0x9e3779b97f4a7c15ULL);

    std::vector<Grid<int>> owners;
    owners.reserve(static_cast<size_t>(spec.frames));
    for (int t = 0; t < spec.frames; ++t) {
        const RenderedFrame f = render_frame(spec, t, noise_rng);
        const std::string name = frame_file_name(t);
        write_png_rgb8((dir / "rgb" / name).string(), f.rgb);
        write_png_gray16((dir / "depth" / name).string(), f.depth);
        owners.push_back(f.owner);
    }

    for (int t = 0; t + 1 < spec.frames; ++t) {
        GridD u(spec.width, spec.height, 0.0), v(spec.width, spec.height, 0.0);
        std::vector<Point> motion(spec.blobs.size());
        for (size_t k = 0; k < spec.blobs.size(); ++k) {
            const Point a = blob_position(spec.blobs[k], t, spec.frames, spec.width, spec.height);
            const Point b =
                blob_position(spec.blobs[k], t + 1, spec.frames, spec.width, spec.height);
            motion[k] = {b.x - a.x, b.y - a.y};
        }
        for (size_t p = 0; p < u.size(); ++p) {
            const int k = owners[t][p];
            if (k < 0) continue;
            u[p] = motion[k].x;
            v[p] = motion[k].y;
        }
        char base[32];
        std::snprintf(base, sizeof(base), "%06d", t);
        write_flow_channel((dir / "flow" / (std::string(base) + "_u.dgfl")).string(), u, 0);
        write_flow_channel((dir / "flow" / (std::string(base) + "_v.dgfl")).string(), v, 1);
    }

    write_fixations(spec, dir, fix_rng);
    merge_manifest(spec, root);
}

namespace {

void reject_unknown(const json& obj, std::initializer_list<const char*> known,
                    const std::string& where) {
    for (auto& [key, _] : obj.items()) {
        bool ok = false;
        for (const char* k : known) ok = ok || key == k;
        if (!ok) throw ParseError(where + ": unknown key \"" + key + "\"");
    }
}

std::vector<Point> parse_path(const json& j, const std::string& where) {
    std::vector<Point> path;
    if (!j.is_array()) throw ParseError(where + ": path must be an array of [x,y]");
    for (const auto& e : j) {
        if (!e.is_array() || e.size() != 2)
            throw ParseError(where + ": path entries must be [x,y]");
        path.push_back({e[0].get<double>(), e[1].get<double>()});
    }
    return path;
}

SceneSpec parse_scene(const json& j, const std::string& where) {
    if (!j.is_object()) throw ParseError(where + ": scene must be an object");
    reject_unknown(j,
                   {"id", "split", "frames", "width", "height", "background", "blobs",
                    "fixations", "noise", "seed"},
                   where);
    SceneSpec s;
    if (!j.contains("id")) throw ParseError(where + ": missing \"id\"");
    s.video_id = j.at("id").get<std::string>();
    s.split = j.value("split", s.split);
    s.frames = j.value("frames", s.frames);
    s.width = j.value("width", s.width);
    s.height = j.value("height", s.height);
    s.noise = j.value("noise", s.noise);
    s.seed = j.value("seed", s.seed);

    if (j.contains("background")) {
        const json& bg = j.at("background");
        reject_unknown(bg, {"color", "depth"}, where + ".background");
        if (bg.contains("color")) {
            const json& c = bg.at("color");
            if (!c.is_array() || c.size() != 3)
                throw ParseError(where + ".background: color must be [r,g,b]");
            s.bg_r = c[0].get<double>();
            s.bg_g = c[1].get<double>();
            s.bg_b = c[2].get<double>();
        }
        s.bg_depth = bg.value("depth", s.bg_depth);
    }

    if (j.contains("blobs")) {
        const json& arr = j.at("blobs");
        if (!arr.is_array()) throw ParseError(where + ": blobs must be an array");
        for (size_t i = 0; i < arr.size(); ++i) {
            const std::string bw = where + ".blobs[" + std::to_string(i) + "]";
            const json& b = arr[i];
            reject_unknown(b, {"path", "radius", "color", "depth"}, bw);
            BlobSpec blob;
            if (b.contains("path")) blob.path = parse_path(b.at("path"), bw);
            blob.radius = b.value("radius", blob.radius);
            if (b.contains("color")) {
                const json& c = b.at("color");
                if (!c.is_array() || c.size() != 3)
                    throw ParseError(bw + ": color must be [r,g,b]");
                blob.r = c[0].get<double>();
                blob.g = c[1].get<double>();
                blob.b = c[2].get<double>();
            }
            blob.depth = b.value("depth", blob.depth);
            s.blobs.push_back(blob);
        }
    }

    if (j.contains("fixations")) {
        const json& f = j.at("fixations");
        reject_unknown(f, {"policy", "blob", "viewers", "separation"}, where + ".fixations");
        const std::string kind = f.value("policy", std::string("follow-blob"));
        if (kind == "follow-blob")
            s.policy.kind = FixationPolicy::Kind::kFollowBlob;
        else if (kind == "center")
            s.policy.kind = FixationPolicy::Kind::kCenter;
        else if (kind == "two-cluster")
            s.policy.kind = FixationPolicy::Kind::kTwoCluster;
        else
            throw ParseError(where + ".fixations: unknown policy \"" + kind + "\"");
        s.policy.blob_index = f.value("blob", s.policy.blob_index);
        s.policy.viewers = f.value("viewers", s.policy.viewers);
        s.policy.separation = f.value("separation", s.policy.separation);
    }
    return s;
}

} // namespace

std::vector<SceneSpec> load_scene_specs(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot read " + path);
    json doc;
    try {
        doc = json::parse(in);
    } catch (const json::parse_error& e) {
        throw ParseError(path + ": " + e.what());
    }

    std::vector<SceneSpec> specs;
    if (doc.is_object() && doc.contains("scenes")) {
        reject_unknown(doc, {"version", "scenes"}, path);
        if (doc.value("version", 1) != 1)
            throw ParseError(path + ": unsupported spec version");
        const json& arr = doc.at("scenes");
        if (!arr.is_array()) throw ParseError(path + ": scenes must be an array");
        for (size_t i = 0; i < arr.size(); ++i)
            specs.push_back(parse_scene(arr[i], path + " scene " + std::to_string(i)));
    } else {
        specs.push_back(parse_scene(doc, path));
    }
    if (specs.empty()) throw ParseError(path + ": no scenes");
    return specs;
}

} // namespace depthgaze
