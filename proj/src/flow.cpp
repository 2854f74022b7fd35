#include "depthgaze/flow.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <vector>

#include "depthgaze/errors.hpp"

namespace depthgaze {

namespace {

std::vector<GridD> frame_channels(const RgbdFrame& f, bool use_depth, const FlowParams& p) {
    std::vector<GridD> ch;
    for (const GridD* src : {&f.r, &f.g, &f.b}) {
        GridD c = *src;
        for (size_t i = 0; i < c.size(); ++i) c[i] *= p.channel_scale;
        ch.push_back(gaussian_blur(c, p.presmooth_sigma));
    }
    if (use_depth) {
        GridD c = f.depth;
        for (size_t i = 0; i < c.size(); ++i) c[i] *= p.channel_scale * p.depth_weight;
        ch.push_back(gaussian_blur(c, p.presmooth_sigma));
    }
    return ch;
}

GridD downsample_half(const GridD& g) {
    int nw = std::max(4, (g.width() + 1) / 2);
    int nh = std::max(4, (g.height() + 1) / 2);
    return resample_bilinear(gaussian_blur(g, 0.8), nw, nh);
}

// dst(x, y) = src(x + u(x, y), y + v(x, y)), sampling clamped to the frame.
GridD warp(const GridD& src, const GridD& u, const GridD& v) {
    GridD out(src.width(), src.height());
    for (int y = 0; y < src.height(); ++y)
        for (int x = 0; x < src.width(); ++x)
            out.at(x, y) = bilinear_sample(src, x + u.at(x, y), y + v.at(x, y));
    return out;
}

GridD gradient_x(const GridD& g) {
    GridD out(g.width(), g.height());
    for (int y = 0; y < g.height(); ++y)
        for (int x = 0; x < g.width(); ++x) {
            int x0 = std::max(0, x - 1), x1 = std::min(g.width() - 1, x + 1);
            out.at(x, y) = x1 == x0 ? 0.0 : (g.at(x1, y) - g.at(x0, y)) / (x1 - x0);
        }
    return out;
}

GridD gradient_y(const GridD& g) {
    GridD out(g.width(), g.height());
    for (int y = 0; y < g.height(); ++y)
        for (int x = 0; x < g.width(); ++x) {
            int y0 = std::max(0, y - 1), y1 = std::min(g.height() - 1, y + 1);
            out.at(x, y) = y1 == y0 ? 0.0 : (g.at(x, y1) - g.at(x, y0)) / (y1 - y0);
        }
    return out;
}

// 1/6 edge + 1/12 diagonal weights, indices clamped at the frame border.
double neighbor_average(const GridD& g, int x, int y) {
    auto v = [&](int xx, int yy) {
        return g.at(std::clamp(xx, 0, g.width() - 1), std::clamp(yy, 0, g.height() - 1));
    };
    double edge = v(x - 1, y) + v(x + 1, y) + v(x, y - 1) + v(x, y + 1);
    double diag = v(x - 1, y - 1) + v(x + 1, y - 1) + v(x - 1, y + 1) + v(x + 1, y + 1);
    return edge / 6.0 + diag / 12.0;
}

// One pyramid level: per warp, linearize the residual around the current
// flow and run Jacobi sweeps of the coupled per-pixel 2x2 system. Jacobi,
// not in-place sweeps, so mirrored inputs give exactly mirrored flow.
void solve_level(const std::vector<GridD>& a, const std::vector<GridD>& b,
                 GridD& u, GridD& v, const FlowParams& p) {
    const int w = u.width(), h = u.height();
    const double a2 = p.alpha * p.alpha;
    const size_t nc = a.size();

    std::vector<GridD> bx(nc), by(nc);
    for (size_t c = 0; c < nc; ++c) {
        bx[c] = gradient_x(b[c]);
        by[c] = gradient_y(b[c]);
    }

    GridD dxx(w, h), dyy(w, h), dxy(w, h), bu(w, h), bv(w, h);
    GridD nu(w, h), nv(w, h);

    for (int warp_i = 0; warp_i < p.warps_per_level; ++warp_i) {
        dxx.fill(0); dyy.fill(0); dxy.fill(0); bu.fill(0); bv.fill(0);
        for (size_t c = 0; c < nc; ++c) {
            GridD bw = warp(b[c], u, v);
            GridD bxw = warp(bx[c], u, v);
            GridD byw = warp(by[c], u, v);
            for (size_t i = 0; i < bw.size(); ++i) {
                double ix = bxw[i], iy = byw[i];
                double d = a[c][i] - bw[i] + ix * u[i] + iy * v[i];
                dxx[i] += ix * ix;
                dyy[i] += iy * iy;
                dxy[i] += ix * iy;
                bu[i] += d * ix;
                bv[i] += d * iy;
            }
        }
        for (int it = 0; it < p.iters_per_warp; ++it) {
            for (int y = 0; y < h; ++y)
                for (int x = 0; x < w; ++x) {
                    size_t i = static_cast<size_t>(y) * w + x;
                    double ru = bu[i] + a2 * neighbor_average(u, x, y);
                    double rv = bv[i] + a2 * neighbor_average(v, x, y);
                    double auu = dxx[i] + a2, avv = dyy[i] + a2;
                    double auv = dxy[i];
                    double det = auu * avv - auv * auv;
                    nu[i] = (ru * avv - auv * rv) / det;
                    nv[i] = (auu * rv - auv * ru) / det;
                }
            std::swap(u.raw(), nu.raw());
            std::swap(v.raw(), nv.raw());
        }
    }
}

} // namespace

FlowField optical_flow(const RgbdFrame& a, const RgbdFrame& b, bool use_depth) {
    return optical_flow(a, b, use_depth, FlowParams{});
}

FlowField optical_flow(const RgbdFrame& frame_a, const RgbdFrame& frame_b, bool use_depth,
                       const FlowParams& params) {
    if (!frame_a.r.same_dims(frame_b.r))
        throw DimensionMismatch("optical_flow: frame sizes differ");

    std::vector<std::vector<GridD>> pyr_a, pyr_b;
    pyr_a.push_back(frame_channels(frame_a, use_depth, params));
    pyr_b.push_back(frame_channels(frame_b, use_depth, params));
    for (int l = 1; l < params.levels; ++l) {
        const auto& pa = pyr_a.back();
        if (std::min(pa[0].width(), pa[0].height()) / 2 < 8) break;
        std::vector<GridD> la, lb;
        for (size_t c = 0; c < pa.size(); ++c) {
            la.push_back(downsample_half(pyr_a.back()[c]));
            lb.push_back(downsample_half(pyr_b.back()[c]));
        }
        pyr_a.push_back(std::move(la));
        pyr_b.push_back(std::move(lb));
    }

    int cl = static_cast<int>(pyr_a.size()) - 1;
    GridD u(pyr_a[cl][0].width(), pyr_a[cl][0].height());
    GridD v(u.width(), u.height());
    for (int l = cl; l >= 0; --l) {
        if (l != cl) {
            int nw = pyr_a[l][0].width(), nh = pyr_a[l][0].height();
            double sx = static_cast<double>(nw) / u.width();
            double sy = static_cast<double>(nh) / u.height();
            u = resample_bilinear(u, nw, nh);
            v = resample_bilinear(v, nw, nh);
            for (size_t i = 0; i < u.size(); ++i) u[i] *= sx;
            for (size_t i = 0; i < v.size(); ++i) v[i] *= sy;
        }
        solve_level(pyr_a[l], pyr_b[l], u, v, params);
    }

    for (size_t i = 0; i < u.size(); ++i)
        u[i] = std::isfinite(u[i]) ? std::clamp(u[i], -double(u.width()), double(u.width())) : 0.0;
    for (size_t i = 0; i < v.size(); ++i)
        v[i] = std::isfinite(v[i]) ? std::clamp(v[i], -double(v.height()), double(v.height())) : 0.0;

    FlowField f;
    f.u = std::move(u);
    f.v = std::move(v);
    f.channels_used = use_depth ? 4 : 3;
    return f;
}

MotionFeatures motion_features(const FlowField& flow_prev, const FlowField& flow_curr,
                               double sigma) {
    if (!flow_prev.u.same_dims(flow_curr.u))
        throw DimensionMismatch("motion_features: flow sizes differ");

    auto dog = [&](const GridD& g) {
        GridD fine = gaussian_blur(g, sigma);
        GridD coarse = gaussian_blur(g, 2.0 * sigma);
        GridD out(g.width(), g.height());
        for (size_t i = 0; i < g.size(); ++i) out[i] = fine[i] - coarse[i];
        return out;
    };

    GridD mag_diff(flow_curr.u.width(), flow_curr.u.height());
    for (size_t i = 0; i < mag_diff.size(); ++i) {
        double mc = std::hypot(flow_curr.u[i], flow_curr.v[i]);
        double mp = std::hypot(flow_prev.u[i], flow_prev.v[i]);
        mag_diff[i] = mc - mp;
    }

    MotionFeatures mf;
    mf.dog_u = dog(flow_curr.u);
    mf.dog_v = dog(flow_curr.v);
    mf.dog_mag = dog(mag_diff);
    return mf;
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

} // namespace

void write_flow_channel(const std::string& path, const GridD& g, uint32_t channel_id) {
    std::FILE* f = std::fopen(path.c_str(), "wb");
    if (!f) throw CorruptFile(path + ": cannot open for writing");
    std::fwrite("DGFL", 1, 4, f);
    put_u32_le(f, static_cast<uint32_t>(g.width()));
    put_u32_le(f, static_cast<uint32_t>(g.height()));
    put_u32_le(f, channel_id);
    std::vector<float> row(static_cast<size_t>(g.width()));
    for (int y = 0; y < g.height(); ++y) {
        for (int x = 0; x < g.width(); ++x) row[static_cast<size_t>(x)] = static_cast<float>(g.at(x, y));
        std::fwrite(row.data(), 4, row.size(), f);
    }
    std::fclose(f);
}

GridD read_flow_channel(const std::string& path, uint32_t* channel_id) {
    std::FILE* f = std::fopen(path.c_str(), "rb");
    if (!f) throw CorruptFile(path + ": cannot open");
    char magic[4];
    if (std::fread(magic, 1, 4, f) != 4 || std::string(magic, 4) != "DGFL") {
        std::fclose(f);
        throw CorruptFile(path + ": bad magic");
    }
    uint32_t w = 0, h = 0, cid = 0;
    try {
        w = get_u32_le(f, path);
        h = get_u32_le(f, path);
        cid = get_u32_le(f, path);
    } catch (...) {
        std::fclose(f);
        throw;
    }
    if (w == 0 || h == 0 || w > (1u << 16) || h > (1u << 16)) {
        std::fclose(f);
        throw CorruptFile(path + ": implausible dimensions");
    }
    GridD g(static_cast<int>(w), static_cast<int>(h));
    std::vector<float> row(static_cast<size_t>(w));
    for (uint32_t y = 0; y < h; ++y) {
        if (std::fread(row.data(), 4, row.size(), f) != row.size()) {
            std::fclose(f);
            throw CorruptFile(path + ": truncated data");
        }
        for (uint32_t x = 0; x < w; ++x)
            g.at(static_cast<int>(x), static_cast<int>(y)) = row[static_cast<size_t>(x)];
    }
    std::fclose(f);
    if (channel_id) *channel_id = cid;
    return g;
}

} // namespace depthgaze
