#include "depthgaze/dataset.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cstdio>
#include <deque>
#include <filesystem>
#include <fstream>
#include <limits>
#include <set>
#include <sstream>

#include "json.hpp"

#include "depthgaze/image_io.hpp"

namespace fs = std::filesystem;

namespace depthgaze {

namespace {

std::string trim(const std::string& s) {
    size_t a = 0, b = s.size();
    while (a < b && std::isspace(static_cast<unsigned char>(s[a]))) ++a;
    while (b > a && std::isspace(static_cast<unsigned char>(s[b - 1]))) --b;
    return s.substr(a, b - a);
}

std::vector<std::string> split_fields(const std::string& line) {
    std::vector<std::string> out;
    std::string cur;
    for (char ch : line) {
        if (ch == ',') {
            out.push_back(cur);
            cur.clear();
        } else {
            cur.push_back(ch);
        }
    }
    out.push_back(cur);
    return out;
}

int parse_nonneg_int(const std::string& s, const std::string& ctx) {
    const std::string t = trim(s);
    int value = 0;
    const auto [ptr, ec] = std::from_chars(t.data(), t.data() + t.size(), value);
    if (ec != std::errc{} || ptr != t.data() + t.size() || value < 0)
        throw ParseError(ctx + ": bad integer '" + s + "'");
    return value;
}

double parse_real(const std::string& s, const std::string& ctx) {
    const std::string t = trim(s);
    if (t.empty()) throw ParseError(ctx + ": empty number");
    char* end = nullptr;
    const double v = std::strtod(t.c_str(), &end);
    if (end != t.c_str() + t.size() || !std::isfinite(v))
        throw ParseError(ctx + ": bad number '" + s + "'");
    return v;
}

std::vector<std::string> read_csv_lines(const std::string& path, const std::string& header) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open " + path);
    std::vector<std::string> lines;
    std::string line;
    while (std::getline(in, line)) lines.push_back(line);
    if (lines.empty() || trim(lines.front()) != header)
        throw ParseError(path + ": expected header '" + header + "'");
    lines.erase(lines.begin());
    return lines;
}

// Sorted frame indices present in a directory; anything that is not
// %06d.png is ignored.
std::vector<int> frame_indices(const fs::path& dir) {
    std::vector<int> idx;
    if (!fs::is_directory(dir)) return idx;
    for (const auto& e : fs::directory_iterator(dir)) {
        const std::string name = e.path().filename().string();
        if (name.size() != 10 || name.substr(6) != ".png") continue;
        bool digits = true;
        for (int i = 0; i < 6; ++i)
            if (!std::isdigit(static_cast<unsigned char>(name[i]))) digits = false;
        if (!digits) continue;
        idx.push_back(std::stoi(name.substr(0, 6)));
    }
    std::sort(idx.begin(), idx.end());
    return idx;
}

void require_contiguous(const std::vector<int>& idx, const std::string& what) {
    if (idx.empty()) throw MissingFrame("no frames found in " + what);
    for (size_t i = 0; i < idx.size(); ++i)
        if (idx[i] != static_cast<int>(i))
            throw MissingFrame(what + ": frame " + frame_file_name(static_cast<int>(i)) +
                               " missing from sequence");
}

// Multi-source BFS fill: every invalid pixel takes the value of its
// nearest valid pixel (4-neighborhood distance).
void fill_from_nearest_valid(GridD& depth, const Grid<uint8_t>& valid) {
    const int w = depth.width(), h = depth.height();
    std::deque<std::pair<int, int>> queue;
    Grid<uint8_t> done(w, h, 0);
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x)
            if (valid.at(x, y)) {
                done.at(x, y) = 1;
                queue.emplace_back(x, y);
            }
    if (queue.empty()) return; // no valid pixels anywhere; leave zeros
    const int dx[4] = {1, -1, 0, 0};
    const int dy[4] = {0, 0, 1, -1};
    while (!queue.empty()) {
        const auto [x, y] = queue.front();
        queue.pop_front();
        for (int k = 0; k < 4; ++k) {
            const int nx = x + dx[k], ny = y + dy[k];
            if (nx < 0 || nx >= w || ny < 0 || ny >= h || done.at(nx, ny)) continue;
            depth.at(nx, ny) = depth.at(x, y);
            done.at(nx, ny) = 1;
            queue.emplace_back(nx, ny);
        }
    }
}

} // namespace

std::string video_dir(const std::string& root, const std::string& video_id) {
    return (fs::path(root) / "videos" / video_id).string();
}

std::string frame_file_name(int index) {
    char buf[16];
    std::snprintf(buf, sizeof(buf), "%06d.png", index);
    return buf;
}

VideoSequence load_video(const std::string& root, const std::string& video_id) {
    const fs::path dir = video_dir(root, video_id);
    const fs::path rgb_dir = dir / "rgb";
    const fs::path depth_dir = dir / "depth";

    const std::vector<int> rgb_idx = frame_indices(rgb_dir);
    require_contiguous(rgb_idx, rgb_dir.string());
    const int n = static_cast<int>(rgb_idx.size());

    std::vector<Rgb8Image> rgb_raw(static_cast<size_t>(n));
    std::vector<Grid<uint16_t>> depth_raw(static_cast<size_t>(n));
    uint16_t dmin = std::numeric_limits<uint16_t>::max();
    uint16_t dmax = 0;

    for (int i = 0; i < n; ++i) {
        const std::string name = frame_file_name(i);
        rgb_raw[i] = read_png_rgb8((rgb_dir / name).string());
        const fs::path dpath = depth_dir / name;
        if (!fs::exists(dpath))
            throw MissingFrame(depth_dir.string() + ": frame " + name + " missing from sequence");
        depth_raw[i] = read_png_gray16(dpath.string());
        if (depth_raw[i].width() != rgb_raw[i].r.width() ||
            depth_raw[i].height() != rgb_raw[i].r.height())
            throw DimensionMismatch(video_id + " frame " + name +
                                    ": rgb and depth sizes differ");
        for (size_t p = 0; p < depth_raw[i].size(); ++p) {
            const uint16_t v = depth_raw[i][p];
            if (v == 0) continue;
            dmin = std::min(dmin, v);
            dmax = std::max(dmax, v);
        }
    }

    const bool flat = dmax <= dmin; // covers the no-valid-pixel case too
    const double range = flat ? 1.0 : static_cast<double>(dmax) - dmin;

    VideoSequence seq;
    seq.video_id = video_id;
    seq.frames.reserve(static_cast<size_t>(n));
    for (int i = 0; i < n; ++i) {
        const Rgb8Image& src = rgb_raw[i];
        const int sw = src.r.width(), sh = src.r.height();
        GridD r(sw, sh), g(sw, sh), b(sw, sh), d(sw, sh);
        Grid<uint8_t> valid(sw, sh, 0);
        for (size_t p = 0; p < src.r.size(); ++p) {
            r[p] = src.r[p] / 255.0;
            g[p] = src.g[p] / 255.0;
            b[p] = src.b[p] / 255.0;
            const uint16_t raw = depth_raw[i][p];
            if (raw != 0) {
                valid[p] = 1;
                d[p] = flat ? 0.0 : (raw - dmin) / range;
            }
        }
        fill_from_nearest_valid(d, valid);

        RgbdFrame f;
        f.index = i;
        f.r = resample_bilinear(r, kWorkWidth, kWorkHeight);
        f.g = resample_bilinear(g, kWorkWidth, kWorkHeight);
        f.b = resample_bilinear(b, kWorkWidth, kWorkHeight);
        f.depth = resample_nearest(d, kWorkWidth, kWorkHeight);
        f.valid_mask = resample_nearest(valid, kWorkWidth, kWorkHeight);
        seq.frames.push_back(std::move(f));
    }
    return seq;
}

std::vector<FixationRecord> load_fixations(const std::string& root, const std::string& video_id) {
    const std::string path = (fs::path(video_dir(root, video_id)) / "fixations.csv").string();
    const std::vector<std::string> lines = read_csv_lines(path, "frame,viewer,x,y");

    std::vector<FixationRecord> out;
    for (size_t li = 0; li < lines.size(); ++li) {
        const std::string line = trim(lines[li]);
        if (line.empty()) continue;
        const std::string ctx = path + " line " + std::to_string(li + 2);
        const auto fields = split_fields(line);
        if (fields.size() != 4) throw ParseError(ctx + ": expected 4 fields");
        FixationRecord rec;
        rec.frame_index = parse_nonneg_int(fields[0], ctx);
        rec.viewer_id = trim(fields[1]);
        if (rec.viewer_id.empty()) throw ParseError(ctx + ": empty viewer id");
        rec.x = parse_real(fields[2], ctx);
        rec.y = parse_real(fields[3], ctx);
        if (rec.x < 0.0 || rec.x > 1.0 || rec.y < 0.0 || rec.y > 1.0)
            throw OutOfRange(ctx + ": fixation coordinates outside [0,1]");
        out.push_back(std::move(rec));
    }
    std::sort(out.begin(), out.end(), [](const FixationRecord& a, const FixationRecord& b) {
        if (a.frame_index != b.frame_index) return a.frame_index < b.frame_index;
        return a.viewer_id < b.viewer_id;
    });
    return out;
}

std::vector<AnnotationRecord> load_annotations(const std::string& root,
                                               const std::string& video_id,
                                               const std::string& file_name) {
    if (file_name.empty()) return {};
    const std::string path = (fs::path(video_dir(root, video_id)) / file_name).string();
    const std::vector<std::string> lines = read_csv_lines(path, "frame,label,x,y,sigma");

    std::vector<AnnotationRecord> out;
    for (size_t li = 0; li < lines.size(); ++li) {
        const std::string line = trim(lines[li]);
        if (line.empty()) continue;
        const std::string ctx = path + " line " + std::to_string(li + 2);
        const auto fields = split_fields(line);
        if (fields.size() != 5) throw ParseError(ctx + ": expected 5 fields");
        AnnotationRecord rec;
        rec.frame_index = parse_nonneg_int(fields[0], ctx);
        rec.label = trim(fields[1]);
        if (rec.label != "face" && rec.label != "body")
            throw ParseError(ctx + ": label must be face or body");
        rec.x = parse_real(fields[2], ctx);
        rec.y = parse_real(fields[3], ctx);
        rec.sigma = parse_real(fields[4], ctx);
        if (rec.x < 0.0 || rec.x > 1.0 || rec.y < 0.0 || rec.y > 1.0)
            throw OutOfRange(ctx + ": annotation coordinates outside [0,1]");
        if (rec.sigma <= 0.0) throw OutOfRange(ctx + ": sigma must be positive");
        out.push_back(std::move(rec));
    }
    std::sort(out.begin(), out.end(), [](const AnnotationRecord& a, const AnnotationRecord& b) {
        return a.frame_index < b.frame_index;
    });
    return out;
}

DatasetManifest validate_manifest(const std::string& root) {
    const fs::path mpath = fs::path(root) / "manifest.json";
    std::ifstream in(mpath);
    if (!in) throw IoError("cannot open " + mpath.string());

    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw ParseError(mpath.string() + ": " + e.what());
    }

    DatasetManifest m;
    try {
        for (const auto& jv : j.at("videos")) {
            ManifestVideo v;
            v.id = jv.at("id").get<std::string>();
            v.frames = jv.at("frames").get<int>();
            v.depth_unit = jv.at("depth_unit").get<std::string>();
            if (jv.contains("annotations") && !jv.at("annotations").is_null())
                v.annotations = jv.at("annotations").get<std::string>();
            m.videos.push_back(std::move(v));
        }
        for (const auto& [id, side] : j.at("split").items())
            m.split[id] = side.get<std::string>();
    } catch (const nlohmann::json::exception& e) {
        throw ParseError(mpath.string() + ": " + e.what());
    }

    std::set<std::string> ids;
    for (const auto& v : m.videos) {
        if (!ids.insert(v.id).second)
            throw ParseError(mpath.string() + ": duplicate video id " + v.id);
        if (v.depth_unit != "mm" && v.depth_unit != "disparity" && v.depth_unit != "normalized")
            throw ParseError(mpath.string() + ": bad depth_unit for " + v.id);

        const fs::path dir = video_dir(root, v.id);
        const std::vector<int> rgb_idx = frame_indices(dir / "rgb");
        if (static_cast<int>(rgb_idx.size()) != v.frames)
            throw CountMismatch(v.id + ": manifest declares " + std::to_string(v.frames) +
                                " frames, found " + std::to_string(rgb_idx.size()));
        for (size_t i = 0; i < rgb_idx.size(); ++i)
            if (rgb_idx[i] != static_cast<int>(i))
                throw MissingFrame(v.id + ": rgb frame sequence has a gap at index " +
                                   std::to_string(i));
        for (int i = 0; i < v.frames; ++i)
            if (!fs::exists(dir / "depth" / frame_file_name(i)))
                throw MissingFrame(v.id + ": depth frame " + frame_file_name(i) + " missing");
        if (!fs::exists(dir / "fixations.csv"))
            throw CountMismatch(v.id + ": fixations.csv missing");
        if (!v.annotations.empty() && !fs::exists(dir / v.annotations))
            throw CountMismatch(v.id + ": annotation file " + v.annotations + " missing");
    }

    for (const auto& v : m.videos) {
        auto it = m.split.find(v.id);
        if (it == m.split.end())
            throw SplitIncomplete("split does not cover video " + v.id);
        if (it->second != "train" && it->second != "test")
            throw SplitIncomplete("split value for " + v.id + " must be train or test");
    }
    for (const auto& [id, side] : m.split)
        if (!ids.count(id)) throw SplitIncomplete("split names unknown video " + id);

    return m;
}

} // namespace depthgaze
