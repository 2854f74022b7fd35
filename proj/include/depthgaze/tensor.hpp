#ifndef DEPTHGAZE_TENSOR_HPP
#define DEPTHGAZE_TENSOR_HPP

#include <cstdint>
#include <functional>
#include <string>
#include <utility>
#include <vector>

#include "depthgaze/errors.hpp"
#include "depthgaze/rng.hpp"

namespace depthgaze {

// Dense row-major multi-dimensional array, 64-bit values throughout.
struct Tensor {
    std::vector<int> shape;
    std::vector<double> data;

    Tensor() = default;
    explicit Tensor(std::vector<int> s) : shape(std::move(s)) {
        size_t n = 1;
        for (int d : shape) n *= static_cast<size_t>(d);
        data.assign(n, 0.0);
    }

    size_t numel() const { return data.size(); }
    int dim(int i) const { return shape[static_cast<size_t>(i)]; }
    int rank() const { return static_cast<int>(shape.size()); }

    double& at3(int c, int y, int x) {
        return data[(static_cast<size_t>(c) * shape[1] + y) * shape[2] + x];
    }
    double at3(int c, int y, int x) const {
        return data[(static_cast<size_t>(c) * shape[1] + y) * shape[2] + x];
    }
    double& at4(int f, int c, int y, int x) {
        return data[((static_cast<size_t>(f) * shape[1] + c) * shape[2] + y) * shape[3] + x];
    }
    double at4(int f, int c, int y, int x) const {
        return data[((static_cast<size_t>(f) * shape[1] + c) * shape[2] + y) * shape[3] + x];
    }

    bool same_shape(const Tensor& o) const { return shape == o.shape; }
    void zero() { std::fill(data.begin(), data.end(), 0.0); }
};

// Argmax bookkeeping from a forward 2x2 max-pool; one linear input index
// per output cell.
struct PoolIndexMap {
    std::vector<int> out_shape;
    std::vector<int> in_shape;
    std::vector<int32_t> argmax;
};

// ---- stateless ops ------------------------------------------------------

// Cross-correlation with zero same-padding. input C×H×W, kernels F×C×k×k
// (odd k), bias F; output F×H×W.
Tensor conv2d_forward(const Tensor& input, const Tensor& kernels, const Tensor& bias);
void conv2d_backward(const Tensor& input, const Tensor& kernels, const Tensor& grad_out,
                     Tensor* grad_input, Tensor* grad_kernels, Tensor* grad_bias);

// 2x2 max-pool; ties resolved to the upper-left cell.
std::pair<Tensor, PoolIndexMap> maxpool2x2(const Tensor& input);
Tensor maxpool2x2_backward(const PoolIndexMap& indices, const Tensor& grad_out);

// Fixed-location unpooling: each value lands in the upper-left cell of its
// 2x2 block, zeros elsewhere.
Tensor unpool2x2(const Tensor& input);
Tensor unpool2x2_backward(const Tensor& grad_out);

// Affine map W·x + b with W out×in, x flat.
Tensor dense_forward(const Tensor& input, const Tensor& weights, const Tensor& bias);
void dense_backward(const Tensor& input, const Tensor& weights, const Tensor& grad_out,
                    Tensor* grad_input, Tensor* grad_weights, Tensor* grad_bias);

Tensor relu_forward(const Tensor& input);
Tensor relu_backward(const Tensor& input, const Tensor& grad_out);

// ---- parameterized layers with gradient accumulators --------------------

struct ConvLayer {
    Tensor kernels; // F×C×k×k
    Tensor bias;    // F
    Tensor grad_kernels;
    Tensor grad_bias;

    ConvLayer() = default;
    ConvLayer(int out_channels, int in_channels, int kernel_size, Rng& rng);
    void zero_grad();
};

struct DenseLayer {
    Tensor weights; // out×in
    Tensor bias;    // out
    Tensor grad_weights;
    Tensor grad_bias;

    DenseLayer() = default;
    DenseLayer(int out_features, int in_features, Rng& rng);
    void zero_grad();
};

// Records a composition of ops so exact reverse-mode gradients of the
// recorded chain can be pulled afterwards. Parameter gradients accumulate
// into the layers; backward() returns the gradient wrt the chain input.
class OpGraph {
public:
    Tensor conv(ConvLayer& layer, const Tensor& x);
    Tensor dense(DenseLayer& layer, const Tensor& x);
    Tensor maxpool(const Tensor& x);
    Tensor unpool(const Tensor& x);
    Tensor relu(const Tensor& x);
    Tensor reshape(const Tensor& x, std::vector<int> shape);

    Tensor backward(const Tensor& upstream);
    void clear() { nodes_.clear(); }
    bool recorded() const { return !nodes_.empty(); }

private:
    std::vector<std::function<Tensor(const Tensor&)>> nodes_;
};

// Uniform Glorot initialization in ±sqrt(6/(fan_in+fan_out)).
void glorot_init(Tensor& t, int fan_in, int fan_out, Rng& rng);

// ---- weight file --------------------------------------------------------

// "DGNN" container: magic + version + record count, a config block of
// 32-bit LE integers, per-tensor shape records, then all parameters as
// 32-bit LE floats in declaration order.
void write_weights_file(const std::string& path, const std::vector<uint32_t>& config,
                        const std::vector<const Tensor*>& tensors);
void read_weights_file(const std::string& path, std::vector<uint32_t>* config,
                       std::vector<Tensor>* tensors);

} // namespace depthgaze

#endif
