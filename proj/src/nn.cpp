#include "imfas/nn.hpp"

#include <cmath>
#include <sstream>

#include "imfas/errors.hpp"
#include "imfas/rng.hpp"

namespace imfas {

namespace {

Mat apply_activation(Activation act, const Mat& z) {
    switch (act) {
        case Activation::Identity:
            return z;
        case Activation::Relu:
            return z.cwiseMax(0.0);
        case Activation::Tanh:
            return z.array().tanh().matrix();
        case Activation::Sigmoid:
            // 0.5*(1+tanh(z/2)) stays finite for large |z|.
            return ((z.array() * 0.5).tanh() * 0.5 + 0.5).matrix();
    }
    throw SpecError("unknown activation");
}

// Derivative from pre-activation z and post-activation y.
Mat activation_grad(Activation act, const Mat& z, const Mat& y) {
    switch (act) {
        case Activation::Identity:
            return Mat::Ones(z.rows(), z.cols());
        case Activation::Relu:
            return (z.array() > 0.0).cast<double>().matrix();
        case Activation::Tanh:
            return (1.0 - y.array().square()).matrix();
        case Activation::Sigmoid:
            return (y.array() * (1.0 - y.array())).matrix();
    }
    throw SpecError("unknown activation");
}

}  // namespace

const char* activation_name(Activation a) {
    switch (a) {
        case Activation::Identity: return "identity";
        case Activation::Relu: return "relu";
        case Activation::Tanh: return "tanh";
        case Activation::Sigmoid: return "sigmoid";
    }
    throw SpecError("unknown activation");
}

Activation activation_from_name(const std::string& name) {
    if (name == "identity") return Activation::Identity;
    if (name == "relu") return Activation::Relu;
    if (name == "tanh") return Activation::Tanh;
    if (name == "sigmoid") return Activation::Sigmoid;
    throw SpecError("unknown activation name: " + name);
}

void MlpSpec::validate() const {
    if (layer_dims.size() < 2) {
        throw SpecError("MlpSpec needs at least an input and an output dim");
    }
    for (int d : layer_dims) {
        if (d <= 0) throw SpecError("MlpSpec has a zero-width layer");
    }
    if (activations.size() != layer_dims.size() - 1) {
        throw SpecError("MlpSpec needs one activation per layer transition");
    }
}

MlpSpec mlp_spec(int input_dim, const std::vector<int>& widths) {
    MlpSpec spec;
    spec.layer_dims.push_back(input_dim);
    for (int w : widths) spec.layer_dims.push_back(w);
    for (std::size_t i = 0; i + 1 < spec.layer_dims.size(); ++i) {
        const bool last = (i + 2 == spec.layer_dims.size());
        spec.activations.push_back(last ? Activation::Identity : Activation::Relu);
    }
    spec.validate();
    return spec;
}

Mat mlp_forward(const MlpParams& params, const Mat& x, MlpCache* cache) {
    if (params.empty()) throw SpecError("empty MLP");
    if (x.rows() != params.front().weights.cols()) {
        std::ostringstream msg;
        msg << "mlp_forward: input dim " << x.rows() << " does not match layer input dim "
            << params.front().weights.cols();
        throw ShapeError(msg.str());
    }
    if (cache) {
        cache->input = x;
        cache->pre.clear();
        cache->post.clear();
    }
    Mat h = x;
    for (const auto& layer : params) {
        if (layer.weights.cols() != h.rows()) {
            throw ShapeError("mlp_forward: inter-layer dim mismatch");
        }
        Mat z = (layer.weights * h).colwise() + layer.bias;
        Mat y = apply_activation(layer.activation, z);
        if (cache) {
            cache->pre.push_back(std::move(z));
            cache->post.push_back(y);
        }
        h = std::move(y);
    }
    return h;
}

Vec mlp_forward(const MlpParams& params, const Vec& x, MlpCache* cache) {
    return mlp_forward(params, Mat(x), cache).col(0);
}

Mat mlp_backward(const MlpParams& params, const MlpCache& cache, const Mat& grad_y,
                 MlpGrads& grads) {
    if (cache.pre.size() != params.size() || cache.post.size() != params.size()) {
        throw CacheError("mlp_backward: cache does not match the parameter stack");
    }
    if (grads.weights.size() != params.size() || grads.bias.size() != params.size()) {
        throw ShapeError("mlp_backward: gradient store does not match the parameter stack");
    }
    if (grad_y.rows() != params.back().weights.rows() || grad_y.cols() != cache.input.cols()) {
        throw ShapeError("mlp_backward: upstream gradient shape mismatch");
    }
    Mat g = grad_y;
    for (int k = static_cast<int>(params.size()) - 1; k >= 0; --k) {
        const auto& layer = params[k];
        if (cache.pre[k].rows() != layer.weights.rows()) {
            throw CacheError("mlp_backward: cached layer shape mismatch");
        }
        Mat dz = g.cwiseProduct(activation_grad(layer.activation, cache.pre[k], cache.post[k]));
        const Mat& layer_in = (k == 0) ? cache.input : cache.post[k - 1];
        grads.weights[k].noalias() += dz * layer_in.transpose();
        grads.bias[k].noalias() += dz.rowwise().sum();
        g.noalias() = layer.weights.transpose() * dz;
    }
    return g;
}

MlpGrads zero_grads_like(const MlpParams& params) {
    MlpGrads grads;
    for (const auto& layer : params) {
        grads.weights.push_back(Mat::Zero(layer.weights.rows(), layer.weights.cols()));
        grads.bias.push_back(Vec::Zero(layer.bias.size()));
    }
    return grads;
}

MlpParams init_params(const MlpSpec& spec, std::uint64_t seed) {
    spec.validate();
    Rng rng(seed, /*stream=*/0xd15e);
    MlpParams params;
    for (std::size_t k = 0; k + 1 < spec.layer_dims.size(); ++k) {
        const int fan_in = spec.layer_dims[k];
        const int fan_out = spec.layer_dims[k + 1];
        const double bound = std::sqrt(6.0 / (fan_in + fan_out));
        DenseLayer layer;
        layer.weights.resize(fan_out, fan_in);
        for (Eigen::Index i = 0; i < layer.weights.size(); ++i) {
            layer.weights.data()[i] = rng.uniform(-bound, bound);
        }
        layer.bias = Vec::Zero(fan_out);
        layer.activation = spec.activations[k];
        params.push_back(std::move(layer));
    }
    return params;
}

std::vector<Span> tensor_spans(MlpParams& params) {
    std::vector<Span> spans;
    for (auto& layer : params) {
        spans.push_back({layer.weights.data(), layer.weights.size()});
        spans.push_back({layer.bias.data(), layer.bias.size()});
    }
    return spans;
}

std::vector<ConstSpan> tensor_spans(const MlpParams& params) {
    std::vector<ConstSpan> spans;
    for (const auto& layer : params) {
        spans.push_back({layer.weights.data(), layer.weights.size()});
        spans.push_back({layer.bias.data(), layer.bias.size()});
    }
    return spans;
}

std::vector<Span> tensor_spans(MlpGrads& grads) {
    std::vector<Span> spans;
    for (std::size_t k = 0; k < grads.weights.size(); ++k) {
        spans.push_back({grads.weights[k].data(), grads.weights[k].size()});
        spans.push_back({grads.bias[k].data(), grads.bias[k].size()});
    }
    return spans;
}

std::vector<ConstSpan> tensor_spans(const MlpGrads& grads) {
    std::vector<ConstSpan> spans;
    for (std::size_t k = 0; k < grads.weights.size(); ++k) {
        spans.push_back({grads.weights[k].data(), grads.weights[k].size()});
        spans.push_back({grads.bias[k].data(), grads.bias[k].size()});
    }
    return spans;
}

Vec finite_diff_grad(const std::function<double(const Vec&)>& f, const Vec& at, double eps) {
    if (eps <= 0.0) throw SpecError("finite_diff_grad: eps must be positive");
    Vec grad(at.size());
    Vec x = at;
    for (Eigen::Index i = 0; i < at.size(); ++i) {
        const double saved = x[i];
        x[i] = saved + eps;
        const double up = f(x);
        x[i] = saved - eps;
        const double down = f(x);
        x[i] = saved;
        if (!std::isfinite(up) || !std::isfinite(down)) {
            throw NumericError("finite_diff_grad: non-finite function evaluation");
        }
        grad[i] = (up - down) / (2.0 * eps);
    }
    return grad;
}

MlpGrads finite_diff_grad(const std::function<double(const MlpParams&)>& f,
                          const MlpParams& params, double eps) {
    MlpParams probe = params;
    const auto spans = tensor_spans(probe);
    const Vec at = flatten(tensor_spans(std::as_const(probe)));
    Vec flat_grad = finite_diff_grad(
        [&](const Vec& flat) {
            unflatten(flat, spans);
            return f(probe);
        },
        at, eps);
    unflatten(at, spans);  // restore probe
    MlpGrads grads = zero_grads_like(params);
    unflatten(flat_grad, tensor_spans(grads));
    return grads;
}

}  // namespace imfas
