#include "doctest.h"

#include <cmath>

#include "depthgaze/tensor.hpp"

using namespace depthgaze;

namespace {

Tensor random_tensor(std::vector<int> shape, Rng& rng, double lo = -1.0, double hi = 1.0) {
    Tensor t(std::move(shape));
    for (double& v : t.data) v = rng.uniform(lo, hi);
    return t;
}

// Reference convolution written as the definition: four explicit loops,
// zero padding handled by bounds checks.
Tensor conv_reference(const Tensor& in, const Tensor& kern, const Tensor& bias) {
    const int c = in.dim(0), h = in.dim(1), w = in.dim(2);
    const int f = kern.dim(0), k = kern.dim(2), p = k / 2;
    Tensor out({f, h, w});
    for (int fi = 0; fi < f; ++fi)
        for (int y = 0; y < h; ++y)
            for (int x = 0; x < w; ++x) {
                double acc = bias.data[fi];
                for (int ci = 0; ci < c; ++ci)
                    for (int ky = 0; ky < k; ++ky)
                        for (int kx = 0; kx < k; ++kx) {
                            const int sy = y + ky - p, sx = x + kx - p;
                            if (sy < 0 || sy >= h || sx < 0 || sx >= w) continue;
                            acc += in.at3(ci, sy, sx) * kern.at4(fi, ci, ky, kx);
                        }
                out.at3(fi, y, x) = acc;
            }
    return out;
}

double max_abs_diff(const Tensor& a, const Tensor& b) {
    REQUIRE(a.same_shape(b));
    double m = 0.0;
    for (size_t i = 0; i < a.numel(); ++i) m = std::max(m, std::abs(a.data[i] - b.data[i]));
    return m;
}

bool all_finite(const Tensor& t) {
    for (double v : t.data)
        if (!std::isfinite(v)) return false;
    return true;
}

} // namespace

TEST_CASE("conv identity kernel reproduces input") {
    Rng rng(11);
    Tensor in = random_tensor({3, 6, 7}, rng);
    Tensor kern({3, 3, 3, 3});
    for (int f = 0; f < 3; ++f) kern.at4(f, f, 1, 1) = 1.0;
    Tensor bias({3});
    Tensor out = conv2d_forward(in, kern, bias);
    CHECK(max_abs_diff(out, in) == 0.0);
}

TEST_CASE("conv zero kernels give constant bias output") {
    Rng rng(12);
    Tensor in = random_tensor({2, 5, 5}, rng);
    Tensor kern({4, 2, 3, 3});
    Tensor bias({4});
    bias.data = {0.5, -1.0, 2.0, 0.0};
    Tensor out = conv2d_forward(in, kern, bias);
    for (int f = 0; f < 4; ++f)
        for (int y = 0; y < 5; ++y)
            for (int x = 0; x < 5; ++x) CHECK(out.at3(f, y, x) == bias.data[f]);
}

TEST_CASE("conv matches reference loops on random input") {
    Rng rng(13);
    Tensor in = random_tensor({3, 5, 5}, rng);
    Tensor kern = random_tensor({2, 3, 5, 5}, rng);
    Tensor bias = random_tensor({2}, rng);
    Tensor got = conv2d_forward(in, kern, bias);
    Tensor want = conv_reference(in, kern, bias);
    CHECK(max_abs_diff(got, want) < 1e-12);
    CHECK(all_finite(got));
}

TEST_CASE("conv is linear in its input with zero bias") {
    Rng rng(14);
    Tensor x = random_tensor({2, 6, 6}, rng);
    Tensor y = random_tensor({2, 6, 6}, rng);
    Tensor kern = random_tensor({3, 2, 3, 3}, rng);
    Tensor bias({3});
    const double a = 0.7, b = -1.3;
    Tensor mix({2, 6, 6});
    for (size_t i = 0; i < mix.numel(); ++i) mix.data[i] = a * x.data[i] + b * y.data[i];
    Tensor fx = conv2d_forward(x, kern, bias);
    Tensor fy = conv2d_forward(y, kern, bias);
    Tensor fmix = conv2d_forward(mix, kern, bias);
    Tensor want(fx.shape);
    for (size_t i = 0; i < want.numel(); ++i) want.data[i] = a * fx.data[i] + b * fy.data[i];
    CHECK(max_abs_diff(fmix, want) < 1e-10);
}

TEST_CASE("conv rejects mismatched shapes") {
    Tensor in({2, 4, 4});
    Tensor kern({1, 3, 3, 3});
    Tensor bias({1});
    CHECK_THROWS_AS(conv2d_forward(in, kern, bias), ShapeMismatch);
}

TEST_CASE("maxpool ties break to the upper-left cell") {
    Tensor in({1, 2, 2});
    in.data = {4.0, 4.0, 4.0, 4.0};
    auto [out, idx] = maxpool2x2(in);
    CHECK(out.data[0] == 4.0);
    CHECK(idx.argmax[0] == 0);
}

TEST_CASE("maxpool records argmax inside each window") {
    Rng rng(15);
    Tensor in = random_tensor({2, 8, 6}, rng);
    auto [out, idx] = maxpool2x2(in);
    CHECK(out.dim(1) == 4);
    CHECK(out.dim(2) == 3);
    size_t o = 0;
    for (int c = 0; c < 2; ++c)
        for (int y = 0; y < 4; ++y)
            for (int x = 0; x < 3; ++x) {
                const int32_t lin = idx.argmax[o];
                const int ic = lin / (8 * 6);
                const int iy = (lin / 6) % 8;
                const int ix = lin % 6;
                CHECK(ic == c);
                CHECK(iy / 2 == y);
                CHECK(ix / 2 == x);
                CHECK(in.data[lin] == out.data[o]);
                ++o;
            }
}

TEST_CASE("maxpool rejects odd spatial dims") {
    Tensor in({1, 3, 4});
    CHECK_THROWS_AS(maxpool2x2(in), OddDimension);
}

TEST_CASE("unpool places each value at the upper-left of its block") {
    Tensor in({1, 1, 1});
    in.data = {7.5};
    Tensor out = unpool2x2(in);
    CHECK(out.dim(1) == 2);
    CHECK(out.dim(2) == 2);
    CHECK(out.data[0] == 7.5);
    CHECK(out.data[1] == 0.0);
    CHECK(out.data[2] == 0.0);
    CHECK(out.data[3] == 0.0);
}

TEST_CASE("pool after unpool is the identity on non-negative input") {
    Rng rng(16);
    Tensor in = random_tensor({3, 4, 5}, rng, 0.0, 2.0);
    auto [roundtrip, idx] = maxpool2x2(unpool2x2(in));
    CHECK(max_abs_diff(roundtrip, in) == 0.0);
}

TEST_CASE("dense identity weights reproduce input") {
    Rng rng(17);
    Tensor in = random_tensor({6}, rng);
    Tensor w({6, 6});
    for (int i = 0; i < 6; ++i) w.data[static_cast<size_t>(i) * 6 + i] = 1.0;
    Tensor b({6});
    Tensor out = dense_forward(in, w, b);
    CHECK(max_abs_diff(out, in) == 0.0);
}

TEST_CASE("dense zero weights return the bias") {
    Rng rng(18);
    Tensor in = random_tensor({5}, rng);
    Tensor w({3, 5});
    Tensor b = random_tensor({3}, rng);
    Tensor out = dense_forward(in, w, b);
    CHECK(max_abs_diff(out, b) == 0.0);
}

TEST_CASE("dense matches naive loop on random input") {
    Rng rng(19);
    Tensor in = random_tensor({7}, rng);
    Tensor w = random_tensor({4, 7}, rng);
    Tensor b = random_tensor({4}, rng);
    Tensor got = dense_forward(in, w, b);
    for (int i = 0; i < 4; ++i) {
        double acc = b.data[i];
        for (int j = 0; j < 7; ++j) acc += w.data[static_cast<size_t>(i) * 7 + j] * in.data[j];
        CHECK(std::abs(got.data[i] - acc) < 1e-12);
    }
}

TEST_CASE("dense is linear with zero bias") {
    Rng rng(20);
    Tensor x = random_tensor({9}, rng);
    Tensor y = random_tensor({9}, rng);
    Tensor w = random_tensor({5, 9}, rng);
    Tensor b({5});
    const double a = -0.4, c = 2.1;
    Tensor mix({9});
    for (int i = 0; i < 9; ++i) mix.data[i] = a * x.data[i] + c * y.data[i];
    Tensor fx = dense_forward(x, w, b);
    Tensor fy = dense_forward(y, w, b);
    Tensor fmix = dense_forward(mix, w, b);
    for (int i = 0; i < 5; ++i)
        CHECK(std::abs(fmix.data[i] - (a * fx.data[i] + c * fy.data[i])) < 1e-10);
}

TEST_CASE("backward of identity conv passes the upstream gradient through") {
    Rng rng(21);
    Tensor in = random_tensor({2, 4, 4}, rng);
    ConvLayer layer(2, 2, 3, rng);
    layer.kernels.zero();
    layer.bias.zero();
    for (int f = 0; f < 2; ++f) layer.kernels.at4(f, f, 1, 1) = 1.0;

    OpGraph g;
    g.conv(layer, in);
    Tensor up = random_tensor({2, 4, 4}, rng);
    Tensor gin = g.backward(up);
    CHECK(max_abs_diff(gin, up) == 0.0);
}

TEST_CASE("backward through maxpool routes gradient only to argmax cells") {
    Tensor in({1, 2, 2});
    in.data = {1.0, 3.0, 2.0, 0.0};
    auto [out, idx] = maxpool2x2(in);
    Tensor up({1, 1, 1});
    up.data = {5.0};
    Tensor gin = maxpool2x2_backward(idx, up);
    CHECK(gin.data[0] == 0.0);
    CHECK(gin.data[1] == 5.0);
    CHECK(gin.data[2] == 0.0);
    CHECK(gin.data[3] == 0.0);
}

TEST_CASE("backward before any forward throws") {
    OpGraph g;
    Tensor up({1});
    CHECK_THROWS_AS(g.backward(up), GraphNotRecorded);
}

namespace {

// Small but complete encoder/decoder chain exercising every op type.
struct TinyNet {
    ConvLayer c1, c2;
    DenseLayer d1, d2;

    explicit TinyNet(Rng& rng) : c1(3, 2, 3, rng), c2(1, 3, 3, rng), d1(10, 48, rng), d2(48, 10, rng) {}

    Tensor forward(OpGraph& g, const Tensor& x) {
        Tensor h = g.relu(g.conv(c1, x));        // 3×8×8
        h = g.maxpool(h);                        // 3×4×4
        h = g.reshape(h, {48});
        h = g.relu(g.dense(d1, h));              // 10
        h = g.relu(g.dense(d2, h));              // 48
        h = g.reshape(h, {3, 4, 4});
        h = g.unpool(h);                         // 3×8×8
        return g.conv(c2, h);                    // 1×8×8
    }

    std::vector<Tensor*> params() { return {&c1.kernels, &c1.bias, &c2.kernels, &c2.bias,
                                            &d1.weights, &d1.bias, &d2.weights, &d2.bias}; }
    std::vector<Tensor*> grads() { return {&c1.grad_kernels, &c1.grad_bias, &c2.grad_kernels,
                                           &c2.grad_bias, &d1.grad_weights, &d1.grad_bias,
                                           &d2.grad_weights, &d2.grad_bias}; }
    void zero_grad() {
        c1.zero_grad();
        c2.zero_grad();
        d1.zero_grad();
        d2.zero_grad();
    }
};

double probe_loss(TinyNet& net, const Tensor& x, const Tensor& probe) {
    OpGraph g;
    Tensor out = net.forward(g, x);
    double loss = 0.0;
    for (size_t i = 0; i < out.numel(); ++i) loss += out.data[i] * probe.data[i];
    return loss;
}

} // namespace

TEST_CASE("parameter gradients match central finite differences") {
    Rng rng(22);
    TinyNet net(rng);
    Tensor x = random_tensor({2, 8, 8}, rng);
    Tensor probe = random_tensor({1, 8, 8}, rng);

    net.zero_grad();
    OpGraph g;
    net.forward(g, x);
    Tensor gin = g.backward(probe);

    const double h = 1e-5;
    auto params = net.params();
    auto grads = net.grads();
    int checked = 0;
    for (size_t p = 0; p < params.size(); ++p) {
        Tensor& par = *params[p];
        const Tensor& grad = *grads[p];
        // Probe a deterministic subset; full sweep over the dense layers is slow.
        const size_t stride = std::max<size_t>(1, par.numel() / 17);
        for (size_t i = 0; i < par.numel(); i += stride) {
            const double keep = par.data[i];
            par.data[i] = keep + h;
            const double up = probe_loss(net, x, probe);
            par.data[i] = keep - h;
            const double dn = probe_loss(net, x, probe);
            par.data[i] = keep;
            const double fd = (up - dn) / (2 * h);
            const double an = grad.data[i];
            const double denom = std::max({std::abs(fd), std::abs(an), 1e-6});
            CHECK(std::abs(fd - an) / denom < 1e-4);
            ++checked;
        }
    }
    CHECK(checked > 50);

    // Input gradient from the same pass, against the same oracle.
    const size_t stride = std::max<size_t>(1, x.numel() / 13);
    for (size_t i = 0; i < x.numel(); i += stride) {
        const double keep = x.data[i];
        x.data[i] = keep + h;
        const double up = probe_loss(net, x, probe);
        x.data[i] = keep - h;
        const double dn = probe_loss(net, x, probe);
        x.data[i] = keep;
        const double fd = (up - dn) / (2 * h);
        const double denom = std::max({std::abs(fd), std::abs(gin.data[i]), 1e-6});
        CHECK(std::abs(fd - gin.data[i]) / denom < 1e-4);
    }
}

TEST_CASE("forward passes are deterministic across repeats") {
    Rng rng(23);
    TinyNet net(rng);
    Tensor x = random_tensor({2, 8, 8}, rng);
    OpGraph g1, g2;
    Tensor a = net.forward(g1, x);
    Tensor b = net.forward(g2, x);
    CHECK(max_abs_diff(a, b) == 0.0);
}

TEST_CASE("weight file round-trips config and parameters") {
    Rng rng(24);
    Tensor a = random_tensor({2, 3, 3, 3}, rng);
    Tensor b = random_tensor({7}, rng);
    std::vector<uint32_t> cfg = {128, 96, 7, 256};
    const std::string path = "tensor_roundtrip.dgnn";
    write_weights_file(path, cfg, {&a, &b});

    std::vector<uint32_t> cfg2;
    std::vector<Tensor> back;
    read_weights_file(path, &cfg2, &back);
    REQUIRE(cfg2 == cfg);
    REQUIRE(back.size() == 2);
    CHECK(back[0].shape == a.shape);
    CHECK(back[1].shape == b.shape);
    // Storage is 32-bit; float rounding is the only allowed difference.
    for (size_t i = 0; i < a.numel(); ++i)
        CHECK(back[0].data[i] == doctest::Approx(a.data[i]).epsilon(1e-6));
    std::remove(path.c_str());
}

TEST_CASE("truncated weight file is rejected") {
    Rng rng(25);
    Tensor a = random_tensor({4, 4}, rng);
    const std::string path = "tensor_truncated.dgnn";
    write_weights_file(path, {}, {&a});
    FILE* fp = std::fopen(path.c_str(), "rb");
    REQUIRE(fp != nullptr);
    std::fseek(fp, 0, SEEK_END);
    long len = std::ftell(fp);
    std::fseek(fp, 0, SEEK_SET);
    std::vector<char> buf(static_cast<size_t>(len));
    REQUIRE(std::fread(buf.data(), 1, buf.size(), fp) == buf.size());
    std::fclose(fp);
    fp = std::fopen(path.c_str(), "wb");
    REQUIRE(fp != nullptr);
    std::fwrite(buf.data(), 1, buf.size() / 2, fp);
    std::fclose(fp);

    std::vector<uint32_t> cfg;
    std::vector<Tensor> back;
    CHECK_THROWS_AS(read_weights_file(path, &cfg, &back), CorruptFile);
    std::remove(path.c_str());
}
