#include "doctest.h"

#include <cmath>

#include "depthgaze/evaluation.hpp"
#include "depthgaze/fixation.hpp"

using namespace depthgaze;

namespace {

FixationSet one_viewer_at(double x, double y) {
    FixationSet s;
    s.viewers.push_back({"v1", {Point{x, y}}});
    return s;
}

std::pair<int, int> grid_argmax(const GridD& g) {
    int bx = 0, by = 0;
    double best = g.at(0, 0);
    for (int y = 0; y < g.height(); ++y)
        for (int x = 0; x < g.width(); ++x)
            if (g.at(x, y) > best) {
                best = g.at(x, y);
                bx = x;
                by = y;
            }
    return {bx, by};
}

} // namespace

TEST_CASE("single central fixation gives a unimodal unit-mass map") {
    const FixationSet set = one_viewer_at(64.0, 48.0);
    ProbabilityMap m = densify(set, 128, 96);
    CHECK(grid_sum(m.grid) == doctest::Approx(1.0).epsilon(1e-9));
    auto [bx, by] = grid_argmax(m.grid);
    CHECK(bx == 64);
    CHECK(by == 48);
    CHECK(grid_min(m.grid) >= 0.0);
}

TEST_CASE("empty fixation set is rejected") {
    FixationSet empty;
    CHECK_THROWS_AS(densify(empty, 128, 96), EmptyFixationSet);
}

TEST_CASE("corner fixations match per-pixel summation") {
    FixationSet set;
    set.viewers.push_back({"v1", {Point{0.0, 0.0}}});
    set.viewers.push_back({"v2", {Point{127.0, 95.0}}});
    ProbabilityMap m = densify(set, 128, 96);

    // Direct summation of the two truncated Gaussians, renormalized.
    const double sigma = 0.05 * std::sqrt(128.0 * 128.0 + 96.0 * 96.0);
    GridD ref(128, 96);
    double total = 0.0;
    for (int y = 0; y < 96; ++y)
        for (int x = 0; x < 128; ++x) {
            double v = std::exp(-(x * x + y * y) / (2 * sigma * sigma)) +
                       std::exp(-((x - 127.0) * (x - 127.0) + (y - 95.0) * (y - 95.0)) /
                                (2 * sigma * sigma));
            ref.at(x, y) = v;
            total += v;
        }
    for (size_t i = 0; i < ref.size(); ++i) ref[i] /= total;

    double max_err = 0.0;
    for (size_t i = 0; i < ref.size(); ++i)
        max_err = std::max(max_err, std::abs(ref[i] - m.grid[i]));
    CHECK(max_err < 1e-12);

    // Bimodal: both corners are local maxima with equal mass halves.
    double left = 0.0, right = 0.0;
    for (int y = 0; y < 96; ++y)
        for (int x = 0; x < 128; ++x) (x < 64 ? left : right) += m.grid.at(x, y);
    CHECK(left == doctest::Approx(right).epsilon(1e-6));
}

TEST_CASE("densify ignores fixation order") {
    FixationSet a, b;
    a.viewers.push_back({"v1", {Point{20, 20}, Point{90, 70}}});
    b.viewers.push_back({"v1", {Point{90, 70}, Point{20, 20}}});
    ProbabilityMap ma = densify(a, 128, 96);
    ProbabilityMap mb = densify(b, 128, 96);
    for (size_t i = 0; i < ma.grid.size(); ++i)
        CHECK(ma.grid[i] == doctest::Approx(mb.grid[i]).epsilon(1e-12));
}

TEST_CASE("shifting fixations shifts the argmax") {
    const FixationSet base = one_viewer_at(50.0, 40.0);
    const FixationSet moved = one_viewer_at(57.0, 45.0);
    auto [x0, y0] = grid_argmax(densify(base, 128, 96).grid);
    auto [x1, y1] = grid_argmax(densify(moved, 128, 96).grid);
    CHECK(std::abs((x1 - x0) - 7) <= 1);
    CHECK(std::abs((y1 - y0) - 5) <= 1);
}

TEST_CASE("identical viewers give perfect homogeneity") {
    FixationSet set;
    for (int v = 0; v < 4; ++v)
        set.viewers.push_back({"v" + std::to_string(v), {Point{64, 48}}});
    HomogeneityConfig cfg;
    cfg.num_splits = 5;
    cfg.rng_seed = 42;
    CHECK(homogeneity_score(set, 128, 96, cfg) == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("fewer than two viewers is rejected") {
    HomogeneityConfig cfg;
    CHECK_THROWS_AS(homogeneity_score(one_viewer_at(10, 10), 128, 96, cfg), TooFewViewers);
}

TEST_CASE("exhaustive homogeneity equals direct enumeration") {
    // Two viewers at A, two at B: the six balanced splits decompose into
    // 2 pure splits (chi2 of A-map vs B-map) and 4 mixed splits (chi2 0).
    FixationSet set;
    set.viewers.push_back({"a1", {Point{30, 48}}});
    set.viewers.push_back({"a2", {Point{30, 48}}});
    set.viewers.push_back({"b1", {Point{100, 48}}});
    set.viewers.push_back({"b2", {Point{100, 48}}});

    const ProbabilityMap ma = densify_points({Point{30, 48}}, 128, 96);
    const ProbabilityMap mb = densify_points({Point{100, 48}}, 128, 96);
    const double pure = chi2_distance(ma, mb);
    const double expected = 1.0 - (2.0 * pure + 4.0 * 0.0) / 6.0;

    HomogeneityConfig cfg;
    cfg.exhaustive = true;
    CHECK(homogeneity_score(set, 128, 96, cfg) == doctest::Approx(expected).epsilon(1e-12));
}

TEST_CASE("sampled homogeneity is seed-deterministic and converges to exhaustive") {
    FixationSet set;
    set.viewers.push_back({"a1", {Point{40, 40}}});
    set.viewers.push_back({"a2", {Point{42, 44}}});
    set.viewers.push_back({"b1", {Point{90, 50}}});
    set.viewers.push_back({"b2", {Point{88, 55}}});

    HomogeneityConfig cfg;
    cfg.num_splits = 10;
    cfg.rng_seed = 42;
    const double q1 = homogeneity_score(set, 128, 96, cfg);
    const double q2 = homogeneity_score(set, 128, 96, cfg);
    CHECK(q1 == q2);

    HomogeneityConfig ex;
    ex.exhaustive = true;
    const double qex = homogeneity_score(set, 128, 96, ex);
    HomogeneityConfig big;
    big.num_splits = 400;
    big.rng_seed = 7;
    CHECK(homogeneity_score(set, 128, 96, big) == doctest::Approx(qex).epsilon(0.05));
}

TEST_CASE("homogeneity decreases as viewer clusters separate") {
    HomogeneityConfig cfg;
    cfg.exhaustive = true;
    double prev = 2.0;
    for (double sep : {0.0, 10.0, 20.0, 40.0}) {
        FixationSet set;
        set.viewers.push_back({"a1", {Point{64 - sep / 2, 48}}});
        set.viewers.push_back({"a2", {Point{64 - sep / 2, 48}}});
        set.viewers.push_back({"b1", {Point{64 + sep / 2, 48}}});
        set.viewers.push_back({"b2", {Point{64 + sep / 2, 48}}});
        const double q = homogeneity_score(set, 128, 96, cfg);
        CHECK(q < prev + 1e-12);
        if (sep > 0.0) CHECK(q < prev);
        prev = q;
    }
}

TEST_CASE("homogeneity ignores viewer labels") {
    FixationSet a, b;
    a.viewers.push_back({"x", {Point{40, 40}}});
    a.viewers.push_back({"y", {Point{80, 60}}});
    a.viewers.push_back({"z", {Point{60, 50}}});
    b.viewers.push_back({"p", {Point{40, 40}}});
    b.viewers.push_back({"q", {Point{80, 60}}});
    b.viewers.push_back({"r", {Point{60, 50}}});
    HomogeneityConfig cfg;
    cfg.exhaustive = true;
    CHECK(homogeneity_score(a, 128, 96, cfg) ==
          doctest::Approx(homogeneity_score(b, 128, 96, cfg)).epsilon(1e-12));
}

TEST_CASE("video quality averages the scorable frames and skips the rest") {
    FixationSet good;
    for (int v = 0; v < 3; ++v)
        good.viewers.push_back({"v" + std::to_string(v), {Point{64, 48}}});
    FixationSet lonely = {{{"solo", {Point{10, 10}}}}};

    HomogeneityConfig cfg;
    cfg.exhaustive = true;
    std::vector<FixationSet> frames = {good, lonely, good};
    int skipped = -1;
    const double q = video_quality(frames, 128, 96, cfg, &skipped);
    CHECK(skipped == 1);
    const double expected =
        0.5 * (homogeneity_score(good, 128, 96, cfg) + homogeneity_score(good, 128, 96, cfg));
    CHECK(q == doctest::Approx(expected).epsilon(1e-12));

    std::vector<FixationSet> hopeless = {lonely, lonely};
    CHECK_THROWS_AS(video_quality(hopeless, 128, 96, cfg, nullptr), NoScorableFrames);
}

TEST_CASE("collect groups records per frame and maps to pixel coordinates") {
    std::vector<FixationRecord> recs;
    recs.push_back({0, "a", 0.0, 0.0});
    recs.push_back({0, "a", 1.0, 1.0});
    recs.push_back({0, "b", 0.5, 0.5});
    recs.push_back({2, "a", 0.25, 0.75});
    auto sets = collect_fixation_sets(recs, 3, 128, 96);
    REQUIRE(sets.size() == 3);
    REQUIRE(sets[0].viewers.size() == 2);
    CHECK(sets[0].viewers[0].points[0].x == 0.0);
    CHECK(sets[0].viewers[0].points[1].x == 127.0);
    CHECK(sets[0].viewers[0].points[1].y == 95.0);
    CHECK(sets[0].viewers[1].points[0].x == doctest::Approx(63.5));
    CHECK(sets[1].viewers.empty());
    CHECK(sets[2].viewers.size() == 1);

    std::vector<FixationRecord> bad;
    bad.push_back({5, "a", 0.5, 0.5});
    CHECK_THROWS_AS(collect_fixation_sets(bad, 3, 128, 96), OutOfRange);
}
