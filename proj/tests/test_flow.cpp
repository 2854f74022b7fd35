#include "doctest.h"

#include <cmath>
#include <fstream>

#include "depthgaze/errors.hpp"
#include "depthgaze/flow.hpp"
#include "depthgaze/maps.hpp"
#include "depthgaze/rng.hpp"
#include "test_support.hpp"

using namespace depthgaze;

namespace {

GridD make_texture(int w, int h, uint64_t seed) {
    GridD t(w, h);
    Rng rng(seed);
    for (size_t i = 0; i < t.size(); ++i) t[i] = rng.uniform();
    t = gaussian_blur(t, 1.2);
    double lo = grid_min(t), hi = grid_max(t);
    for (size_t i = 0; i < t.size(); ++i) t[i] = (t[i] - lo) / (hi - lo);
    return t;
}

RgbdFrame frame_from(const GridD& r, const GridD& g, const GridD& b, const GridD& d) {
    RgbdFrame f;
    f.r = r;
    f.g = g;
    f.b = b;
    f.depth = d;
    f.valid_mask = Grid<uint8_t>(r.width(), r.height(), 1);
    return f;
}

RgbdFrame mirror_frame(const RgbdFrame& f) {
    return frame_from(mirror_horizontal(f.r), mirror_horizontal(f.g),
                      mirror_horizontal(f.b), mirror_horizontal(f.depth));
}

// Frame pair where every pixel of the earlier frame reappears exactly one
// pixel to the right: each channel is a (w+1)-wide texture viewed through
// two windows offset by one column.
void shifted_pair(int w, int h, RgbdFrame& a, RgbdFrame& b) {
    GridD ca[3], cb[3];
    for (int c = 0; c < 3; ++c) {
        GridD wide = make_texture(w + 1, h, 100 + static_cast<uint64_t>(c));
        GridD ga(w, h), gb(w, h);
        for (int y = 0; y < h; ++y)
            for (int x = 0; x < w; ++x) {
                ga.at(x, y) = wide.at(x + 1, y);
                gb.at(x, y) = wide.at(x, y);
            }
        ca[c] = ga;
        cb[c] = gb;
    }
    GridD d(w, h, 0.5);
    a = frame_from(ca[0], ca[1], ca[2], d);
    b = frame_from(cb[0], cb[1], cb[2], d);
}

double mean_epe(const FlowField& f, double gu, double gv) {
    double s = 0.0;
    for (size_t i = 0; i < f.u.size(); ++i) s += std::hypot(f.u[i] - gu, f.v[i] - gv);
    return s / f.u.size();
}

double flow_variance(const FlowField& f) {
    double mu = 0.0, mv = 0.0;
    for (size_t i = 0; i < f.u.size(); ++i) {
        mu += f.u[i];
        mv += f.v[i];
    }
    mu /= f.u.size();
    mv /= f.v.size();
    double s = 0.0;
    for (size_t i = 0; i < f.u.size(); ++i) {
        double du = f.u[i] - mu, dv = f.v[i] - mv;
        s += du * du + dv * dv;
    }
    return s / f.u.size();
}

} // namespace

TEST_CASE("flow of identical frames is zero") {
    GridD tex = make_texture(64, 48, 7);
    RgbdFrame a = frame_from(tex, tex, tex, tex);
    for (bool with_depth : {false, true}) {
        FlowField f = optical_flow(a, a, with_depth);
        double mean_mag = 0.0;
        for (size_t i = 0; i < f.u.size(); ++i) mean_mag += std::hypot(f.u[i], f.v[i]);
        mean_mag /= f.u.size();
        CHECK(mean_mag < 1e-3);
        CHECK(f.channels_used == (with_depth ? 4 : 3));
    }
}

TEST_CASE("one pixel shift of texture is recovered") {
    RgbdFrame a, b;
    shifted_pair(64, 48, a, b);
    FlowField f = optical_flow(a, b, false);
    CHECK(grid_finite(f.u));
    CHECK(grid_finite(f.v));
    CHECK(mean_epe(f, 1.0, 0.0) < 0.5);
}

TEST_CASE("depth contrast rescues iso-color motion") {
    const int w = 64, h = 48;
    GridD flat(w, h, 0.5);
    GridD bump_a = gaussian_bump(w, h, 28.0, 24.0, 5.0);
    GridD bump_b = gaussian_bump(w, h, 30.0, 24.0, 5.0);
    double peak = grid_max(bump_a);
    GridD da(w, h), db(w, h);
    for (size_t i = 0; i < da.size(); ++i) {
        da[i] = 0.2 + 0.6 * bump_a[i] / peak;
        db[i] = 0.2 + 0.6 * bump_b[i] / peak;
    }
    RgbdFrame a = frame_from(flat, flat, flat, da);
    RgbdFrame b = frame_from(flat, flat, flat, db);

    FlowField with_depth = optical_flow(a, b, true);
    FlowField without = optical_flow(a, b, false);

    double e4 = 0.0, e3 = 0.0;
    int n = 0;
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) {
            if (bump_a.at(x, y) < 0.3 * peak) continue;
            e4 += std::hypot(with_depth.u.at(x, y) - 2.0, with_depth.v.at(x, y));
            e3 += std::hypot(without.u.at(x, y) - 2.0, without.v.at(x, y));
            ++n;
        }
    REQUIRE(n > 0);
    e4 /= n;
    e3 /= n;
    CHECK(e3 > 1.5); // the color channels carry no signal here
    CHECK(e4 < 1.0);
    CHECK(e4 < 0.5 * e3);
}

TEST_CASE("motion features vanish for zero flow") {
    FlowField z;
    z.u = GridD(32, 24);
    z.v = GridD(32, 24);
    MotionFeatures mf = motion_features(z, z);
    CHECK(grid_max(mf.dog_u) == 0.0);
    CHECK(grid_min(mf.dog_u) == 0.0);
    CHECK(grid_max(mf.dog_v) == 0.0);
    CHECK(grid_max(mf.dog_mag) == 0.0);
    CHECK(grid_min(mf.dog_mag) == 0.0);
}

TEST_CASE("uniform pan leaves no feature response") {
    FlowField pan;
    pan.u = GridD(40, 30, 3.0);
    pan.v = GridD(40, 30, -1.0);
    MotionFeatures mf = motion_features(pan, pan);
    for (const GridD* g : {&mf.dog_u, &mf.dog_v, &mf.dog_mag}) {
        CHECK(grid_max(*g) < 1e-12);
        CHECK(grid_min(*g) > -1e-12);
    }
}

TEST_CASE("blob response peaks at its boundary") {
    // A blob moving right at 2 px/interval: the magnitude change lives in
    // thin crescents along the leading and trailing edges, so the bandpass
    // peak must land on the current boundary.
    const int w = 64, h = 48;
    const double cy = 24.0, radius = 10.0;
    const double cx_prev = 30.0, cx_curr = 32.0;
    FlowField prev, curr;
    prev.u = GridD(w, h);
    prev.v = GridD(w, h);
    curr.u = GridD(w, h);
    curr.v = GridD(w, h);
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) {
            if (std::hypot(x - cx_prev, y - cy) <= radius) prev.u.at(x, y) = 2.0;
            if (std::hypot(x - cx_curr, y - cy) <= radius) curr.u.at(x, y) = 2.0;
        }

    MotionFeatures mf = motion_features(prev, curr);
    int bx = 0, by = 0;
    double best = -1e30;
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x)
            if (mf.dog_mag.at(x, y) > best) {
                best = mf.dog_mag.at(x, y);
                bx = x;
                by = y;
            }
    CHECK(best > 0.0);
    CHECK(std::abs(std::hypot(bx - cx_curr, by - cy) - radius) <= 2.0);
}

TEST_CASE("mirrored pair gives mirrored flow") {
    RgbdFrame a, b;
    shifted_pair(64, 48, a, b);
    FlowField f = optical_flow(a, b, false);
    FlowField m = optical_flow(mirror_frame(a), mirror_frame(b), false);
    double worst = 0.0;
    for (int y = 0; y < 48; ++y)
        for (int x = 0; x < 64; ++x) {
            worst = std::max(worst, std::abs(m.u.at(x, y) + f.u.at(63 - x, y)));
            worst = std::max(worst, std::abs(m.v.at(x, y) - f.v.at(63 - x, y)));
        }
    CHECK(worst < 1e-3);
}

TEST_CASE("stiffer smoothness flattens the field") {
    const int w = 64, h = 48;
    GridD wide = make_texture(w + 4, h, 55);
    GridD ga(w, h), gb(w, h);
    for (int y = 0; y < h; ++y) {
        double shift = 1.0 + 0.8 * std::sin(2.0 * 3.14159265358979 * y / h);
        for (int x = 0; x < w; ++x) {
            ga.at(x, y) = wide.at(x + 2, y);
            gb.at(x, y) = bilinear_sample(wide, x + 2 - shift, y);
        }
    }
    GridD d(w, h, 0.5);
    RgbdFrame a = frame_from(ga, ga, ga, d);
    RgbdFrame b = frame_from(gb, gb, gb, d);

    double prev_var = 0.0;
    bool first = true;
    for (double alpha : {15.0, 150.0, 1500.0}) {
        FlowParams p;
        p.alpha = alpha;
        double var = flow_variance(optical_flow(a, b, false, p));
        if (!first) CHECK(var < prev_var);
        prev_var = var;
        first = false;
    }
}

TEST_CASE("flow channel files round trip") {
    dgtest::TempDir tmp("flow");
    GridD g = make_texture(33, 17, 99);
    for (size_t i = 0; i < g.size(); ++i) g[i] = g[i] * 20.0 - 10.0;
    std::string path = tmp.str() + "/flow_u.dgfl";
    write_flow_channel(path, g, 0);

    uint32_t cid = 123;
    GridD back = read_flow_channel(path, &cid);
    CHECK(cid == 0);
    REQUIRE(back.same_dims(g));
    double worst = 0.0;
    for (size_t i = 0; i < g.size(); ++i) worst = std::max(worst, std::abs(back[i] - g[i]));
    CHECK(worst < 1e-5);

    SUBCASE("bad magic is rejected") {
        std::string bad = tmp.str() + "/bad.dgfl";
        std::ofstream(bad, std::ios::binary) << "nope and then some bytes";
        CHECK_THROWS_AS(read_flow_channel(bad), CorruptFile);
    }
    SUBCASE("truncated payload is rejected") {
        std::ifstream in(path, std::ios::binary);
        std::string full((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
        std::string cut = tmp.str() + "/cut.dgfl";
        std::ofstream(cut, std::ios::binary) << full.substr(0, 16 + 40);
        CHECK_THROWS_AS(read_flow_channel(cut), CorruptFile);
    }
}

TEST_CASE("mismatched inputs are rejected") {
    GridD small = make_texture(32, 24, 1), big = make_texture(64, 48, 2);
    RgbdFrame a = frame_from(small, small, small, small);
    RgbdFrame b = frame_from(big, big, big, big);
    CHECK_THROWS_AS(optical_flow(a, b, false), DimensionMismatch);

    FlowField fs, fb;
    fs.u = GridD(32, 24);
    fs.v = GridD(32, 24);
    fb.u = GridD(64, 48);
    fb.v = GridD(64, 48);
    CHECK_THROWS_AS(motion_features(fs, fb), DimensionMismatch);
}
