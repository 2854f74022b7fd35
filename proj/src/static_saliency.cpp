#include "depthgaze/static_saliency.hpp"

#include <cmath>
#include <vector>

namespace depthgaze {

namespace {

// Stationary distribution of the random walk whose symmetric weights are
// (|F_a − F_b| + eps) · exp(−d²/2σ²) with d the toroidal lattice distance.
GridD channel_equilibrium(const GridD& feat, const GraphSaliencyParams& p) {
    const int lw = feat.width(), lh = feat.height();
    const int n = lw * lh;

    // Spatial decay lookup over wrapped offsets.
    std::vector<double> decay(static_cast<size_t>(lw) * lh);
    for (int dy = 0; dy < lh; ++dy) {
        const int wy = std::min(dy, lh - dy);
        for (int dx = 0; dx < lw; ++dx) {
            const int wx = std::min(dx, lw - dx);
            decay[static_cast<size_t>(dy) * lw + dx] =
                std::exp(-0.5 * (wx * wx + wy * wy) / (p.sigma * p.sigma));
        }
    }

    std::vector<double> w(static_cast<size_t>(n) * n);
    for (int a = 0; a < n; ++a) {
        const int ax = a % lw, ay = a / lw;
        for (int b = a; b < n; ++b) {
            const int bx = b % lw, by = b / lw;
            const double d = decay[static_cast<size_t>((by - ay + lh) % lh) * lw +
                                   (bx - ax + lw) % lw];
            const double ww = (std::abs(feat[a] - feat[b]) + p.eps) * d;
            w[static_cast<size_t>(a) * n + b] = ww;
            w[static_cast<size_t>(b) * n + a] = ww;
        }
    }

    std::vector<double> deg(static_cast<size_t>(n), 0.0);
    for (int a = 0; a < n; ++a) {
        double s = 0.0;
        const double* row = &w[static_cast<size_t>(a) * n];
        for (int b = 0; b < n; ++b) s += row[b];
        deg[a] = s;
    }

    std::vector<double> v(static_cast<size_t>(n), 1.0 / n), u(static_cast<size_t>(n)),
        next(static_cast<size_t>(n));
    for (int iter = 0; iter < p.max_iters; ++iter) {
        for (int b = 0; b < n; ++b) u[b] = v[b] / deg[b];
        double sum = 0.0;
        for (int a = 0; a < n; ++a) {
            double s = 0.0;
            const double* row = &w[static_cast<size_t>(a) * n];
            for (int b = 0; b < n; ++b) s += row[b] * u[b];
            next[a] = s;
            sum += s;
        }
        double resid = 0.0;
        for (int a = 0; a < n; ++a) {
            next[a] /= sum;
            resid += std::abs(next[a] - v[a]);
        }
        v.swap(next);
        if (resid < p.residual) break;
    }

    GridD out(lw, lh);
    for (int i = 0; i < n; ++i) out[i] = v[i];
    return out;
}

} // namespace

SaliencyMap graph_saliency(const RgbdFrame& frame, bool use_depth) {
    return graph_saliency(frame, use_depth, GraphSaliencyParams{});
}

SaliencyMap graph_saliency(const RgbdFrame& frame, bool use_depth,
                           const GraphSaliencyParams& params) {
    const int w = frame.r.width(), h = frame.r.height();
    const int lw = std::max(1, w / params.lattice_factor);
    const int lh = std::max(1, h / params.lattice_factor);

    std::vector<GridD> channels;
    {
        GridD intensity(w, h), rg(w, h), by(w, h);
        for (size_t i = 0; i < intensity.size(); ++i) {
            intensity[i] = (frame.r[i] + frame.g[i] + frame.b[i]) / 3.0;
            rg[i] = frame.r[i] - frame.g[i];
            by[i] = frame.b[i] - (frame.r[i] + frame.g[i]) / 2.0;
        }
        channels.push_back(resample_bilinear(intensity, lw, lh));
        channels.push_back(resample_bilinear(rg, lw, lh));
        channels.push_back(resample_bilinear(by, lw, lh));
        if (use_depth) channels.push_back(resample_bilinear(frame.depth, lw, lh));
    }

    GridD acc(lw, lh);
    for (const GridD& feat : channels) {
        const GridD eq = channel_equilibrium(feat, params);
        for (size_t i = 0; i < acc.size(); ++i) acc[i] += eq[i];
    }

    return make_saliency_max1(resample_bilinear(acc, w, h));
}

} // namespace depthgaze
