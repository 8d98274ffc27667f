#include "imfas/lstm.hpp"

#include <cmath>
#include <sstream>

#include "imfas/errors.hpp"
#include "imfas/rng.hpp"

namespace imfas {

namespace {

Mat sigmoid(const Mat& z) {
    return ((z.array() * 0.5).tanh() * 0.5 + 0.5).matrix();
}

}  // namespace

LstmState zero_state(const LstmStack& stack, int batch) {
    LstmState state;
    for (const auto& layer : stack.layers) {
        state.h.push_back(Mat::Zero(layer.hidden_dim(), batch));
        state.c.push_back(Mat::Zero(layer.hidden_dim(), batch));
    }
    return state;
}

CellOut cell_forward(const LstmLayerParams& params, const Mat& x, const Mat& h, const Mat& c,
                     LstmCellCache* cache) {
    const int d = params.hidden_dim();
    if (x.rows() != params.input_dim()) {
        std::ostringstream msg;
        msg << "cell_forward: input dim " << x.rows() << " != " << params.input_dim();
        throw ShapeError(msg.str());
    }
    if (h.rows() != d || c.rows() != d || h.cols() != x.cols() || c.cols() != x.cols()) {
        throw ShapeError("cell_forward: state shape mismatch");
    }

    Mat a = (params.w_ih * x + params.w_hh * h).colwise() + params.bias;
    Mat gate_i = sigmoid(a.topRows(d));
    Mat gate_f = sigmoid(a.middleRows(d, d));
    Mat gate_g = a.middleRows(2 * d, d).array().tanh().matrix();
    Mat gate_o = sigmoid(a.bottomRows(d));

    CellOut out;
    out.c = gate_f.cwiseProduct(c) + gate_i.cwiseProduct(gate_g);
    Mat tanh_c = out.c.array().tanh().matrix();
    out.h = gate_o.cwiseProduct(tanh_c);

    if (cache) {
        cache->x = x;
        cache->h_prev = h;
        cache->c_prev = c;
        cache->gate_i = std::move(gate_i);
        cache->gate_f = std::move(gate_f);
        cache->gate_g = std::move(gate_g);
        cache->gate_o = std::move(gate_o);
        cache->c_next = out.c;
        cache->tanh_c_next = std::move(tanh_c);
    }
    return out;
}

CellBackOut cell_backward(const LstmLayerParams& params, const LstmCellCache& cache,
                          const Mat& grad_h, const Mat& grad_c, LstmLayerGrads& grads) {
    const int d = params.hidden_dim();
    if (cache.gate_i.rows() != d || cache.x.rows() != params.input_dim()) {
        throw CacheError("cell_backward: cache does not match the parameters");
    }
    if (grad_h.rows() != d || grad_c.rows() != d || grad_h.cols() != cache.x.cols()) {
        throw ShapeError("cell_backward: upstream gradient shape mismatch");
    }

    // Through h' = o * tanh(c') and c' = f*c + i*g.
    Mat dc_total =
        grad_c + grad_h.cwiseProduct(cache.gate_o)
                     .cwiseProduct((1.0 - cache.tanh_c_next.array().square()).matrix());
    Mat d_o = grad_h.cwiseProduct(cache.tanh_c_next);
    Mat d_i = dc_total.cwiseProduct(cache.gate_g);
    Mat d_f = dc_total.cwiseProduct(cache.c_prev);
    Mat d_g = dc_total.cwiseProduct(cache.gate_i);

    // Pre-activation gate gradients, packed (i, f, g, o).
    Mat da(4 * d, cache.x.cols());
    da.topRows(d) = d_i.cwiseProduct(
        (cache.gate_i.array() * (1.0 - cache.gate_i.array())).matrix());
    da.middleRows(d, d) = d_f.cwiseProduct(
        (cache.gate_f.array() * (1.0 - cache.gate_f.array())).matrix());
    da.middleRows(2 * d, d) =
        d_g.cwiseProduct((1.0 - cache.gate_g.array().square()).matrix());
    da.bottomRows(d) = d_o.cwiseProduct(
        (cache.gate_o.array() * (1.0 - cache.gate_o.array())).matrix());

    grads.w_ih.noalias() += da * cache.x.transpose();
    grads.w_hh.noalias() += da * cache.h_prev.transpose();
    grads.bias.noalias() += da.rowwise().sum();

    CellBackOut out;
    out.x.noalias() = params.w_ih.transpose() * da;
    out.h.noalias() = params.w_hh.transpose() * da;
    out.c = dc_total.cwiseProduct(cache.gate_f);
    return out;
}

std::vector<LstmState> unroll(const LstmStack& stack, const LstmState& init,
                              const std::vector<Mat>& inputs, UnrollCache* cache) {
    if (stack.layers.empty()) throw SpecError("unroll: empty LSTM stack");
    if (init.h.size() != stack.layers.size() || init.c.size() != stack.layers.size()) {
        throw ShapeError("unroll: init state must have one (h, c) pair per layer");
    }
    if (cache) cache->steps.clear();

    std::vector<LstmState> states;
    const LstmState* prev = &init;
    for (const Mat& input : inputs) {
        if (input.rows() != stack.layers.front().input_dim()) {
            throw ShapeError("unroll: ragged input dims");
        }
        LstmState next;
        std::vector<LstmCellCache> step_caches(cache ? stack.layers.size() : 0);
        const Mat* layer_in = &input;
        for (std::size_t k = 0; k < stack.layers.size(); ++k) {
            CellOut out = cell_forward(stack.layers[k], *layer_in, prev->h[k], prev->c[k],
                                       cache ? &step_caches[k] : nullptr);
            next.h.push_back(std::move(out.h));
            next.c.push_back(std::move(out.c));
            layer_in = &next.h[k];
        }
        if (cache) cache->steps.push_back(std::move(step_caches));
        states.push_back(std::move(next));
        prev = &states.back();
    }
    return states;
}

LstmGrads zero_grads_like(const LstmStack& stack) {
    LstmGrads grads;
    for (const auto& layer : stack.layers) {
        LstmLayerGrads g;
        g.w_ih = Mat::Zero(layer.w_ih.rows(), layer.w_ih.cols());
        g.w_hh = Mat::Zero(layer.w_hh.rows(), layer.w_hh.cols());
        g.bias = Vec::Zero(layer.bias.size());
        grads.layers.push_back(std::move(g));
    }
    return grads;
}

LstmState unroll_backward(const LstmStack& stack, const UnrollCache& cache,
                          const Mat& grad_h_final, LstmGrads& grads,
                          std::vector<Mat>* grad_inputs) {
    const std::size_t layers = stack.layers.size();
    const std::size_t steps = cache.steps.size();
    if (grads.layers.size() != layers) {
        throw ShapeError("unroll_backward: gradient store does not match the stack");
    }
    if (steps == 0) {
        throw CacheError("unroll_backward: empty unroll cache");
    }
    const int batch = static_cast<int>(grad_h_final.cols());

    // Running (dh, dc) per layer, flowing backward through time.
    std::vector<Mat> dh(layers), dc(layers);
    for (std::size_t k = 0; k < layers; ++k) {
        const int d = stack.layers[k].hidden_dim();
        dh[k] = Mat::Zero(d, batch);
        dc[k] = Mat::Zero(d, batch);
    }
    dh[layers - 1] = grad_h_final;

    if (grad_inputs) grad_inputs->assign(steps, Mat());

    LstmState grad_init;
    grad_init.h.resize(layers);
    grad_init.c.resize(layers);

    for (std::size_t t = steps; t-- > 0;) {
        for (std::size_t k = layers; k-- > 0;) {
            CellBackOut back = cell_backward(stack.layers[k], cache.steps[t][k], dh[k], dc[k],
                                             grads.layers[k]);
            dh[k] = std::move(back.h);
            dc[k] = std::move(back.c);
            if (k > 0) {
                // Layer input was the hidden state of the layer below.
                dh[k - 1] += back.x;
            } else if (grad_inputs) {
                (*grad_inputs)[t] = std::move(back.x);
            }
        }
    }
    for (std::size_t k = 0; k < layers; ++k) {
        grad_init.h[k] = std::move(dh[k]);
        grad_init.c[k] = std::move(dc[k]);
    }
    return grad_init;
}

LstmStack init_lstm(int input_dim, int hidden_dim, int num_layers, std::uint64_t seed) {
    if (input_dim <= 0 || hidden_dim <= 0 || num_layers <= 0) {
        throw SpecError("init_lstm: dims and layer count must be positive");
    }
    Rng rng(seed, /*stream=*/0x157e);
    LstmStack stack;
    for (int k = 0; k < num_layers; ++k) {
        const int in = (k == 0) ? input_dim : hidden_dim;
        LstmLayerParams layer;
        layer.w_ih.resize(4 * hidden_dim, in);
        const double bound_ih = std::sqrt(6.0 / (in + hidden_dim));
        for (Eigen::Index i = 0; i < layer.w_ih.size(); ++i) {
            layer.w_ih.data()[i] = rng.uniform(-bound_ih, bound_ih);
        }
        layer.w_hh.resize(4 * hidden_dim, hidden_dim);
        const double bound_hh = std::sqrt(6.0 / (2 * hidden_dim));
        for (Eigen::Index i = 0; i < layer.w_hh.size(); ++i) {
            layer.w_hh.data()[i] = rng.uniform(-bound_hh, bound_hh);
        }
        layer.bias = Vec::Zero(4 * hidden_dim);
        layer.bias.segment(hidden_dim, hidden_dim).setOnes();  // forget gate
        stack.layers.push_back(std::move(layer));
    }
    return stack;
}

std::vector<Span> tensor_spans(LstmStack& stack) {
    std::vector<Span> spans;
    for (auto& layer : stack.layers) {
        spans.push_back({layer.w_ih.data(), layer.w_ih.size()});
        spans.push_back({layer.w_hh.data(), layer.w_hh.size()});
        spans.push_back({layer.bias.data(), layer.bias.size()});
    }
    return spans;
}

std::vector<ConstSpan> tensor_spans(const LstmStack& stack) {
    std::vector<ConstSpan> spans;
    for (const auto& layer : stack.layers) {
        spans.push_back({layer.w_ih.data(), layer.w_ih.size()});
        spans.push_back({layer.w_hh.data(), layer.w_hh.size()});
        spans.push_back({layer.bias.data(), layer.bias.size()});
    }
    return spans;
}

std::vector<Span> tensor_spans(LstmGrads& grads) {
    std::vector<Span> spans;
    for (auto& layer : grads.layers) {
        spans.push_back({layer.w_ih.data(), layer.w_ih.size()});
        spans.push_back({layer.w_hh.data(), layer.w_hh.size()});
        spans.push_back({layer.bias.data(), layer.bias.size()});
    }
    return spans;
}

std::vector<ConstSpan> tensor_spans(const LstmGrads& grads) {
    std::vector<ConstSpan> spans;
    for (const auto& layer : grads.layers) {
        spans.push_back({layer.w_ih.data(), layer.w_ih.size()});
        spans.push_back({layer.w_hh.data(), layer.w_hh.size()});
        spans.push_back({layer.bias.data(), layer.bias.size()});
    }
    return spans;
}

}  // namespace imfas
