#include "depthgaze/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <memory>

namespace depthgaze {

namespace {

void require(bool cond, const char* msg) {
    if (!cond) throw ShapeMismatch(msg);
}

// Zero-padded copy, pad cells on every spatial side.
Tensor pad_spatial(const Tensor& t, int pad) {
    const int c = t.dim(0), h = t.dim(1), w = t.dim(2);
    Tensor out({c, h + 2 * pad, w + 2 * pad});
    for (int ci = 0; ci < c; ++ci)
        for (int y = 0; y < h; ++y)
            std::memcpy(&out.at3(ci, y + pad, pad),
                        &t.data[(static_cast<size_t>(ci) * h + y) * w], sizeof(double) * w);
    return out;
}

} // namespace

Tensor conv2d_forward(const Tensor& input, const Tensor& kernels, const Tensor& bias) {
    require(input.rank() == 3, "conv2d input must be C×H×W");
    require(kernels.rank() == 4, "conv2d kernels must be F×C×k×k");
    require(bias.rank() == 1, "conv2d bias must be rank 1");
    const int c = input.dim(0), h = input.dim(1), w = input.dim(2);
    const int f = kernels.dim(0), k = kernels.dim(2);
    require(kernels.dim(1) == c, "conv2d kernel channel count mismatch");
    require(kernels.dim(3) == k && k % 2 == 1, "conv2d kernel must be square and odd");
    require(bias.dim(0) == f, "conv2d bias length mismatch");

    const int pad = k / 2;
    const Tensor xp = pad_spatial(input, pad);
    const int wp = w + 2 * pad;

    Tensor out({f, h, w});
    for (int fi = 0; fi < f; ++fi) {
        for (int y = 0; y < h; ++y) {
            double* orow = &out.at3(fi, y, 0);
            for (int x = 0; x < w; ++x) orow[x] = bias.data[fi];
            for (int ci = 0; ci < c; ++ci) {
                for (int ky = 0; ky < k; ++ky) {
                    const double* irow = &xp.data[(static_cast<size_t>(ci) * (h + 2 * pad) + y + ky) * wp];
                    const double* krow =
                        &kernels.data[((static_cast<size_t>(fi) * c + ci) * k + ky) * k];
                    for (int kx = 0; kx < k; ++kx) {
                        const double kv = krow[kx];
                        if (kv == 0.0) continue;
                        const double* ip = irow + kx;
                        for (int x = 0; x < w; ++x) orow[x] += kv * ip[x];
                    }
                }
            }
        }
    }
    return out;
}

void conv2d_backward(const Tensor& input, const Tensor& kernels, const Tensor& grad_out,
                     Tensor* grad_input, Tensor* grad_kernels, Tensor* grad_bias) {
    const int c = input.dim(0), h = input.dim(1), w = input.dim(2);
    const int f = kernels.dim(0), k = kernels.dim(2);
    require(grad_out.rank() == 3 && grad_out.dim(0) == f && grad_out.dim(1) == h &&
                grad_out.dim(2) == w,
            "conv2d grad_out shape mismatch");

    const int pad = k / 2;
    const Tensor xp = pad_spatial(input, pad);
    const int hp = h + 2 * pad, wp = w + 2 * pad;

    if (grad_bias) {
        for (int fi = 0; fi < f; ++fi) {
            double acc = 0.0;
            const double* gp = &grad_out.data[static_cast<size_t>(fi) * h * w];
            for (int i = 0; i < h * w; ++i) acc += gp[i];
            grad_bias->data[fi] += acc;
        }
    }
    if (grad_kernels) {
        for (int fi = 0; fi < f; ++fi) {
            for (int ci = 0; ci < c; ++ci) {
                for (int ky = 0; ky < k; ++ky) {
                    for (int kx = 0; kx < k; ++kx) {
                        double acc = 0.0;
                        for (int y = 0; y < h; ++y) {
                            const double* gp =
                                &grad_out.data[(static_cast<size_t>(fi) * h + y) * w];
                            const double* ip = &xp.data[(static_cast<size_t>(ci) * hp + y + ky) * wp + kx];
                            for (int x = 0; x < w; ++x) acc += gp[x] * ip[x];
                        }
                        grad_kernels->at4(fi, ci, ky, kx) += acc;
                    }
                }
            }
        }
    }
    if (grad_input) {
        Tensor gxp({c, hp, wp});
        for (int fi = 0; fi < f; ++fi) {
            for (int ci = 0; ci < c; ++ci) {
                for (int ky = 0; ky < k; ++ky) {
                    const double* krow =
                        &kernels.data[((static_cast<size_t>(fi) * c + ci) * k + ky) * k];
                    for (int y = 0; y < h; ++y) {
                        const double* gp = &grad_out.data[(static_cast<size_t>(fi) * h + y) * w];
                        double* xrow = &gxp.data[(static_cast<size_t>(ci) * hp + y + ky) * wp];
                        for (int kx = 0; kx < k; ++kx) {
                            const double kv = krow[kx];
                            if (kv == 0.0) continue;
                            double* xp2 = xrow + kx;
                            for (int x = 0; x < w; ++x) xp2[x] += kv * gp[x];
                        }
                    }
                }
            }
        }
        if (grad_input->shape != input.shape) *grad_input = Tensor(input.shape);
        for (int ci = 0; ci < c; ++ci)
            for (int y = 0; y < h; ++y)
                for (int x = 0; x < w; ++x)
                    grad_input->at3(ci, y, x) += gxp.at3(ci, y + pad, x + pad);
    }
}

std::pair<Tensor, PoolIndexMap> maxpool2x2(const Tensor& input) {
    require(input.rank() == 3, "maxpool input must be C×H×W");
    const int c = input.dim(0), h = input.dim(1), w = input.dim(2);
    if (h % 2 != 0 || w % 2 != 0)
        throw OddDimension("maxpool2x2 requires even spatial dims");

    Tensor out({c, h / 2, w / 2});
    PoolIndexMap idx;
    idx.out_shape = out.shape;
    idx.in_shape = input.shape;
    idx.argmax.resize(out.numel());

    size_t o = 0;
    for (int ci = 0; ci < c; ++ci) {
        for (int y = 0; y < h; y += 2) {
            for (int x = 0; x < w; x += 2) {
                // Scan order = upper-left first, strict > keeps the first
                // maximal cell on ties.
                int best_dy = 0, best_dx = 0;
                double best = input.at3(ci, y, x);
                for (int dy = 0; dy < 2; ++dy) {
                    for (int dx = 0; dx < 2; ++dx) {
                        const double v = input.at3(ci, y + dy, x + dx);
                        if (v > best) {
                            best = v;
                            best_dy = dy;
                            best_dx = dx;
                        }
                    }
                }
                out.data[o] = best;
                idx.argmax[o] = static_cast<int32_t>(
                    (static_cast<size_t>(ci) * h + y + best_dy) * w + x + best_dx);
                ++o;
            }
        }
    }
    return {std::move(out), std::move(idx)};
}

Tensor maxpool2x2_backward(const PoolIndexMap& indices, const Tensor& grad_out) {
    if (indices.argmax.empty()) throw GraphNotRecorded("no pooling indices recorded");
    require(grad_out.shape == indices.out_shape, "maxpool grad_out shape mismatch");
    Tensor grad_in(indices.in_shape);
    for (size_t i = 0; i < indices.argmax.size(); ++i)
        grad_in.data[indices.argmax[i]] += grad_out.data[i];
    return grad_in;
}

Tensor unpool2x2(const Tensor& input) {
    require(input.rank() == 3, "unpool input must be C×H×W");
    const int c = input.dim(0), h = input.dim(1), w = input.dim(2);
    Tensor out({c, 2 * h, 2 * w});
    for (int ci = 0; ci < c; ++ci)
        for (int y = 0; y < h; ++y)
            for (int x = 0; x < w; ++x) out.at3(ci, 2 * y, 2 * x) = input.at3(ci, y, x);
    return out;
}

Tensor unpool2x2_backward(const Tensor& grad_out) {
    require(grad_out.rank() == 3, "unpool grad must be C×H×W");
    const int c = grad_out.dim(0), h = grad_out.dim(1), w = grad_out.dim(2);
    require(h % 2 == 0 && w % 2 == 0, "unpool grad spatial dims must be even");
    Tensor grad_in({c, h / 2, w / 2});
    for (int ci = 0; ci < c; ++ci)
        for (int y = 0; y < h / 2; ++y)
            for (int x = 0; x < w / 2; ++x)
                grad_in.at3(ci, y, x) = grad_out.at3(ci, 2 * y, 2 * x);
    return grad_in;
}

Tensor dense_forward(const Tensor& input, const Tensor& weights, const Tensor& bias) {
    require(weights.rank() == 2, "dense weights must be out×in");
    const int out_n = weights.dim(0), in_n = weights.dim(1);
    require(static_cast<int>(input.numel()) == in_n, "dense input length mismatch");
    require(bias.rank() == 1 && bias.dim(0) == out_n, "dense bias length mismatch");

    Tensor out({out_n});
    for (int i = 0; i < out_n; ++i) {
        const double* wrow = &weights.data[static_cast<size_t>(i) * in_n];
        double acc = bias.data[i];
        for (int j = 0; j < in_n; ++j) acc += wrow[j] * input.data[j];
        out.data[i] = acc;
    }
    return out;
}

void dense_backward(const Tensor& input, const Tensor& weights, const Tensor& grad_out,
                    Tensor* grad_input, Tensor* grad_weights, Tensor* grad_bias) {
    const int out_n = weights.dim(0), in_n = weights.dim(1);
    require(static_cast<int>(grad_out.numel()) == out_n, "dense grad_out length mismatch");

    if (grad_bias)
        for (int i = 0; i < out_n; ++i) grad_bias->data[i] += grad_out.data[i];
    if (grad_weights) {
        for (int i = 0; i < out_n; ++i) {
            const double g = grad_out.data[i];
            if (g == 0.0) continue;
            double* wrow = &grad_weights->data[static_cast<size_t>(i) * in_n];
            for (int j = 0; j < in_n; ++j) wrow[j] += g * input.data[j];
        }
    }
    if (grad_input) {
        if (grad_input->shape != input.shape) *grad_input = Tensor(input.shape);
        for (int i = 0; i < out_n; ++i) {
            const double g = grad_out.data[i];
            if (g == 0.0) continue;
            const double* wrow = &weights.data[static_cast<size_t>(i) * in_n];
            for (int j = 0; j < in_n; ++j) grad_input->data[j] += g * wrow[j];
        }
    }
}

Tensor relu_forward(const Tensor& input) {
    Tensor out = input;
    for (double& v : out.data) v = v > 0.0 ? v : 0.0;
    return out;
}

Tensor relu_backward(const Tensor& input, const Tensor& grad_out) {
    require(input.same_shape(grad_out), "relu grad shape mismatch");
    Tensor grad_in = grad_out;
    for (size_t i = 0; i < grad_in.numel(); ++i)
        if (input.data[i] <= 0.0) grad_in.data[i] = 0.0;
    return grad_in;
}

void glorot_init(Tensor& t, int fan_in, int fan_out, Rng& rng) {
    const double bound = std::sqrt(6.0 / (fan_in + fan_out));
    for (double& v : t.data) v = rng.uniform(-bound, bound);
}

ConvLayer::ConvLayer(int out_channels, int in_channels, int kernel_size, Rng& rng)
    : kernels(Tensor({out_channels, in_channels, kernel_size, kernel_size})),
      bias(Tensor({out_channels})),
      grad_kernels(Tensor(kernels.shape)),
      grad_bias(Tensor(bias.shape)) {
    const int fan = in_channels * kernel_size * kernel_size;
    glorot_init(kernels, fan, out_channels * kernel_size * kernel_size, rng);
}

void ConvLayer::zero_grad() {
    grad_kernels.zero();
    grad_bias.zero();
}

DenseLayer::DenseLayer(int out_features, int in_features, Rng& rng)
    : weights(Tensor({out_features, in_features})),
      bias(Tensor({out_features})),
      grad_weights(Tensor(weights.shape)),
      grad_bias(Tensor(bias.shape)) {
    glorot_init(weights, in_features, out_features, rng);
}

void DenseLayer::zero_grad() {
    grad_weights.zero();
    grad_bias.zero();
}

Tensor OpGraph::conv(ConvLayer& layer, const Tensor& x) {
    Tensor out = conv2d_forward(x, layer.kernels, layer.bias);
    ConvLayer* lp = &layer;
    Tensor saved = x;
    nodes_.push_back([lp, saved = std::move(saved)](const Tensor& gout) {
        Tensor gin;
        conv2d_backward(saved, lp->kernels, gout, &gin, &lp->grad_kernels, &lp->grad_bias);
        return gin;
    });
    return out;
}

Tensor OpGraph::dense(DenseLayer& layer, const Tensor& x) {
    Tensor out = dense_forward(x, layer.weights, layer.bias);
    DenseLayer* lp = &layer;
    Tensor saved = x;
    nodes_.push_back([lp, saved = std::move(saved)](const Tensor& gout) {
        Tensor gin;
        dense_backward(saved, lp->weights, gout, &gin, &lp->grad_weights, &lp->grad_bias);
        return gin;
    });
    return out;
}

Tensor OpGraph::maxpool(const Tensor& x) {
    auto [out, idx] = maxpool2x2(x);
    nodes_.push_back([idx = std::move(idx)](const Tensor& gout) {
        return maxpool2x2_backward(idx, gout);
    });
    return out;
}

Tensor OpGraph::unpool(const Tensor& x) {
    Tensor out = unpool2x2(x);
    nodes_.push_back([](const Tensor& gout) { return unpool2x2_backward(gout); });
    return out;
}

Tensor OpGraph::relu(const Tensor& x) {
    Tensor out = relu_forward(x);
    Tensor saved = x;
    nodes_.push_back([saved = std::move(saved)](const Tensor& gout) {
        return relu_backward(saved, gout);
    });
    return out;
}

Tensor OpGraph::reshape(const Tensor& x, std::vector<int> shape) {
    size_t n = 1;
    for (int d : shape) n *= static_cast<size_t>(d);
    require(n == x.numel(), "reshape element count mismatch");
    Tensor out = x;
    out.shape = shape;
    std::vector<int> old_shape = x.shape;
    nodes_.push_back([old_shape](const Tensor& gout) {
        Tensor gin = gout;
        gin.shape = old_shape;
        return gin;
    });
    return out;
}

Tensor OpGraph::backward(const Tensor& upstream) {
    if (nodes_.empty()) throw GraphNotRecorded("backward called before any forward pass");
    Tensor g = upstream;
    for (auto it = nodes_.rbegin(); it != nodes_.rend(); ++it) g = (*it)(g);
    return g;
}

// ---- weight file ---------------------------------------------------------

namespace {

void put_u32(std::vector<unsigned char>& buf, uint32_t v) {
    buf.push_back(v & 0xFF);
    buf.push_back((v >> 8) & 0xFF);
    buf.push_back((v >> 16) & 0xFF);
    buf.push_back((v >> 24) & 0xFF);
}

uint32_t get_u32(const unsigned char* p) {
    return static_cast<uint32_t>(p[0]) | (static_cast<uint32_t>(p[1]) << 8) |
           (static_cast<uint32_t>(p[2]) << 16) | (static_cast<uint32_t>(p[3]) << 24);
}

} // namespace

void write_weights_file(const std::string& path, const std::vector<uint32_t>& config,
                        const std::vector<const Tensor*>& tensors) {
    std::vector<unsigned char> buf;
    buf.push_back('D');
    buf.push_back('G');
    buf.push_back('N');
    buf.push_back('N');
    put_u32(buf, 1); // version
    put_u32(buf, static_cast<uint32_t>(tensors.size()));
    put_u32(buf, static_cast<uint32_t>(config.size()));
    for (uint32_t v : config) put_u32(buf, v);
    for (const Tensor* t : tensors) {
        put_u32(buf, static_cast<uint32_t>(t->shape.size()));
        for (int d : t->shape) put_u32(buf, static_cast<uint32_t>(d));
    }
    for (const Tensor* t : tensors) {
        for (double v : t->data) {
            float f = static_cast<float>(v);
            uint32_t bits;
            std::memcpy(&bits, &f, 4);
            put_u32(buf, bits);
        }
    }
    FILE* fp = std::fopen(path.c_str(), "wb");
    if (!fp) throw IoError("cannot write weights file " + path);
    const size_t written = std::fwrite(buf.data(), 1, buf.size(), fp);
    std::fclose(fp);
    if (written != buf.size()) throw IoError("short write to " + path);
}

void read_weights_file(const std::string& path, std::vector<uint32_t>* config,
                       std::vector<Tensor>* tensors) {
    FILE* fp = std::fopen(path.c_str(), "rb");
    if (!fp) throw CorruptFile("cannot open weights file " + path);
    std::fseek(fp, 0, SEEK_END);
    const long len = std::ftell(fp);
    std::fseek(fp, 0, SEEK_SET);
    std::vector<unsigned char> buf(static_cast<size_t>(len));
    const size_t got = std::fread(buf.data(), 1, buf.size(), fp);
    std::fclose(fp);
    if (got != buf.size() || buf.size() < 16 || std::memcmp(buf.data(), "DGNN", 4) != 0)
        throw CorruptFile("bad weights file header: " + path);

    size_t off = 4;
    const uint32_t version = get_u32(&buf[off]);
    off += 4;
    if (version != 1) throw CorruptFile("unsupported weights file version");
    const uint32_t count = get_u32(&buf[off]);
    off += 4;
    const uint32_t cfg_len = get_u32(&buf[off]);
    off += 4;

    auto need = [&](size_t n) {
        if (off + n > buf.size()) throw CorruptFile("truncated weights file: " + path);
    };

    config->clear();
    need(size_t{4} * cfg_len);
    for (uint32_t i = 0; i < cfg_len; ++i) {
        config->push_back(get_u32(&buf[off]));
        off += 4;
    }
    tensors->clear();
    tensors->reserve(count);
    for (uint32_t i = 0; i < count; ++i) {
        need(4);
        const uint32_t rank = get_u32(&buf[off]);
        off += 4;
        std::vector<int> shape(rank);
        need(size_t{4} * rank);
        for (uint32_t d = 0; d < rank; ++d) {
            shape[d] = static_cast<int>(get_u32(&buf[off]));
            off += 4;
        }
        tensors->emplace_back(shape);
    }
    for (Tensor& t : *tensors) {
        need(4 * t.numel());
        for (double& v : t.data) {
            const uint32_t bits = get_u32(&buf[off]);
            off += 4;
            float f;
            std::memcpy(&f, &bits, 4);
            v = static_cast<double>(f);
        }
    }
}

} // namespace depthgaze
