#pragma once

#include <cstdint>
#include <vector>

#include "imfas/linalg.hpp"
#include "imfas/lstm.hpp"
#include "imfas/nn.hpp"
#include "imfas/softrank.hpp"

namespace imfas {

// Model dimensions. The encoder output width doubles as the LSTM hidden size
// and the readout input width.
struct ImfasDims {
    int meta_features = 0;  // F
    int algorithms = 0;     // |A|
    std::vector<int> encoder_hidden = {300, 200};
    int lstm_layers = 2;
    int lstm_hidden = 200;

    void validate() const;  // throws SpecError
};

struct ImfasParams {
    ImfasDims dims;
    MlpParams encoder;  // F -> encoder_hidden
    LstmStack lstm;     // input |A|, hidden lstm_hidden
    MlpParams readout;  // lstm_hidden -> |A|

    void validate() const;
};

struct ImfasGrads {
    MlpGrads encoder;
    LstmGrads lstm;
    MlpGrads readout;
};

// Meta-features plus the first g observed fidelity performance vectors.
struct PartialObservation {
    Vec meta_features;
    std::vector<Vec> fidelity_seq;  // f_1..f_g, each of dim |A|
};

struct RankingPrediction {
    Vec scores;      // expectation of the final-fidelity performances
    Vec soft_ranks;  // sum to |A|(|A|+1)/2
};

struct ModelCache {
    MlpCache encoder;
    UnrollCache lstm;
    MlpCache readout;
    std::vector<SoftRankCache> soft_rank;  // one per batch column
    int steps = 0;
    int batch = 0;
};

ImfasParams init_imfas(const ImfasDims& dims, std::uint64_t seed);

// Batched pipeline: meta-feature columns are encoded into the initial hidden
// state of every LSTM layer (cells start at zero), the LSTM consumes one
// performance matrix per step, and the readout of the final hidden state is
// differentiably ranked per column. With no steps the readout applies to the
// encoded state directly.
struct BatchPrediction {
    Mat scores;      // |A| x B
    Mat soft_ranks;  // |A| x B
};

BatchPrediction batch_forward(const ImfasParams& params, const Mat& meta_features,
                              const std::vector<Mat>& step_inputs, const SoftRankConfig& cfg,
                              ModelCache* cache = nullptr);

// Chains soft-rank -> readout -> BPTT -> encoder. loss_grad holds dL/d(soft
// ranks) per column.
ImfasGrads batch_backward(const ImfasParams& params, const ModelCache& cache,
                          const Mat& loss_grad);

// Single-observation wrappers over the batched pipeline.
RankingPrediction model_forward(const ImfasParams& params, const PartialObservation& obs,
                                const SoftRankConfig& cfg, ModelCache* cache = nullptr);
ImfasGrads model_backward(const ImfasParams& params, const ModelCache& cache,
                          const Vec& loss_grad);

// Consumes g = floor(fraction * (n-1)) fidelity columns of the |A| x n curve
// matrix and predicts the ranking of the final column.
RankingPrediction predict_partial(const ImfasParams& params, const Vec& meta_features,
                                  const Mat& curves, double fraction, const SoftRankConfig& cfg);

int partial_steps(double fraction, int num_fidelities);

ImfasGrads zero_grads_like(const ImfasParams& params);

std::vector<Span> tensor_spans(ImfasParams& params);
std::vector<ConstSpan> tensor_spans(const ImfasParams& params);
std::vector<Span> tensor_spans(ImfasGrads& grads);
std::vector<ConstSpan> tensor_spans(const ImfasGrads& grads);

}  // namespace imfas
