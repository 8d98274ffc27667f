#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "imfas/linalg.hpp"

namespace imfas {

enum class Activation { Identity, Relu, Tanh, Sigmoid };

const char* activation_name(Activation a);
Activation activation_from_name(const std::string& name);

// One dense layer: y = act(W x + b).
struct DenseLayer {
    Mat weights;  // out_dim x in_dim
    Vec bias;     // out_dim
    Activation activation = Activation::Identity;

    int in_dim() const { return static_cast<int>(weights.cols()); }
    int out_dim() const { return static_cast<int>(weights.rows()); }
};

using MlpParams = std::vector<DenseLayer>;

// Layer widths (input dim first) plus one activation per transition.
struct MlpSpec {
    std::vector<int> layer_dims;
    std::vector<Activation> activations;

    void validate() const;  // throws SpecError
};

// Spec with ReLU on hidden transitions and identity on the output.
MlpSpec mlp_spec(int input_dim, const std::vector<int>& widths);

struct MlpGrads {
    std::vector<Mat> weights;
    std::vector<Vec> bias;
};

// Pre/post activations per layer, batched: every column is one instance.
struct MlpCache {
    Mat input;
    std::vector<Mat> pre;
    std::vector<Mat> post;
};

// Forward pass through the whole stack. Columns of x are instances.
Mat mlp_forward(const MlpParams& params, const Mat& x, MlpCache* cache = nullptr);
Vec mlp_forward(const MlpParams& params, const Vec& x, MlpCache* cache = nullptr);

// Exact analytic backward. Accumulates parameter gradients into `grads`
// (shape-checked against params) and returns the gradient wrt the input.
Mat mlp_backward(const MlpParams& params, const MlpCache& cache, const Mat& grad_y,
                 MlpGrads& grads);

MlpGrads zero_grads_like(const MlpParams& params);

// Uniform Glorot weights (bound sqrt(6/(fan_in+fan_out))), zero biases.
// Deterministic for a given seed.
MlpParams init_params(const MlpSpec& spec, std::uint64_t seed);

std::vector<Span> tensor_spans(MlpParams& params);
std::vector<ConstSpan> tensor_spans(const MlpParams& params);
std::vector<Span> tensor_spans(MlpGrads& grads);
std::vector<ConstSpan> tensor_spans(const MlpGrads& grads);

// Central-difference gradient of a scalar function of a flat vector.
Vec finite_diff_grad(const std::function<double(const Vec&)>& f, const Vec& at, double eps);

// Same, over a whole MLP parameter struct.
MlpGrads finite_diff_grad(const std::function<double(const MlpParams&)>& f,
                          const MlpParams& params, double eps);

}  // namespace imfas
