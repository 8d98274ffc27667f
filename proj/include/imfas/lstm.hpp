#pragma once

#include <cstdint>
#include <vector>

#include "imfas/linalg.hpp"

namespace imfas {

// One LSTM layer. Gate rows are packed (input, forget, cell, output), each
// block `hidden_dim` rows tall; this ordering is part of the checkpoint
// format and must not change.
struct LstmLayerParams {
    Mat w_ih;  // 4*hidden x input
    Mat w_hh;  // 4*hidden x hidden
    Vec bias;  // 4*hidden

    int input_dim() const { return static_cast<int>(w_ih.cols()); }
    int hidden_dim() const { return static_cast<int>(w_hh.cols()); }
};

struct LstmStack {
    std::vector<LstmLayerParams> layers;
};

// Per-layer hidden and cell state; columns are batch instances.
struct LstmState {
    std::vector<Mat> h;
    std::vector<Mat> c;
};

LstmState zero_state(const LstmStack& stack, int batch);

struct LstmCellCache {
    Mat x, h_prev, c_prev;
    Mat gate_i, gate_f, gate_g, gate_o;  // post-nonlinearity
    Mat c_next, tanh_c_next;
};

struct CellOut {
    Mat h, c;
};

// c' = sig(f)*c + sig(i)*tanh(g); h' = sig(o)*tanh(c').
CellOut cell_forward(const LstmLayerParams& params, const Mat& x, const Mat& h, const Mat& c,
                     LstmCellCache* cache = nullptr);

struct LstmLayerGrads {
    Mat w_ih, w_hh;
    Vec bias;
};

struct LstmGrads {
    std::vector<LstmLayerGrads> layers;
};

struct CellBackOut {
    Mat x, h, c;
};

// Exact analytic backward of one cell step. Accumulates into `grads`.
CellBackOut cell_backward(const LstmLayerParams& params, const LstmCellCache& cache,
                          const Mat& grad_h, const Mat& grad_c, LstmLayerGrads& grads);

struct UnrollCache {
    // steps[t][layer]
    std::vector<std::vector<LstmCellCache>> steps;
};

// Unrolls the stack over the input sequence. Layer k>0 consumes layer k-1's
// hidden state at the same step. Returns one state per consumed input; an
// empty input sequence returns no states (the caller keeps `init`).
std::vector<LstmState> unroll(const LstmStack& stack, const LstmState& init,
                              const std::vector<Mat>& inputs, UnrollCache* cache = nullptr);

LstmGrads zero_grads_like(const LstmStack& stack);

// Backward through time from a gradient at the final top-layer hidden state.
// Returns the gradient wrt the initial state; optionally fills per-step input
// gradients.
LstmState unroll_backward(const LstmStack& stack, const UnrollCache& cache,
                          const Mat& grad_h_final, LstmGrads& grads,
                          std::vector<Mat>* grad_inputs = nullptr);

// Glorot weights; forget-gate bias 1, all other biases 0.
LstmStack init_lstm(int input_dim, int hidden_dim, int num_layers, std::uint64_t seed);

std::vector<Span> tensor_spans(LstmStack& stack);
std::vector<ConstSpan> tensor_spans(const LstmStack& stack);
std::vector<Span> tensor_spans(LstmGrads& grads);
std::vector<ConstSpan> tensor_spans(const LstmGrads& grads);

}  // namespace imfas
