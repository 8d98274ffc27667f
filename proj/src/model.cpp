#include "imfas/model.hpp"

#include <cmath>
#include <sstream>

#include "imfas/errors.hpp"
#include "imfas/rng.hpp"

namespace imfas {

void ImfasDims::validate() const {
    if (meta_features <= 0) throw SpecError("ImfasDims: meta_features must be positive");
    if (algorithms < 2) throw SpecError("ImfasDims: need at least two algorithms");
    if (encoder_hidden.empty()) throw SpecError("ImfasDims: encoder needs at least one layer");
    for (int w : encoder_hidden) {
        if (w <= 0) throw SpecError("ImfasDims: encoder widths must be positive");
    }
    if (lstm_layers <= 0 || lstm_hidden <= 0) {
        throw SpecError("ImfasDims: LSTM dims must be positive");
    }
    if (encoder_hidden.back() != lstm_hidden) {
        throw SpecError("ImfasDims: encoder output width must equal the LSTM hidden size");
    }
}

void ImfasParams::validate() const {
    dims.validate();
    if (encoder.empty() || readout.empty() || lstm.layers.empty()) {
        throw SpecError("ImfasParams: missing component");
    }
    if (encoder.front().in_dim() != dims.meta_features ||
        encoder.back().out_dim() != dims.lstm_hidden) {
        throw SpecError("ImfasParams: encoder dims inconsistent");
    }
    if (lstm.layers.front().input_dim() != dims.algorithms ||
        lstm.layers.front().hidden_dim() != dims.lstm_hidden) {
        throw SpecError("ImfasParams: LSTM dims inconsistent");
    }
    if (readout.front().in_dim() != dims.lstm_hidden ||
        readout.back().out_dim() != dims.algorithms) {
        throw SpecError("ImfasParams: readout dims inconsistent");
    }
}

ImfasParams init_imfas(const ImfasDims& dims, std::uint64_t seed) {
    dims.validate();
    ImfasParams params;
    params.dims = dims;
    params.encoder = init_params(mlp_spec(dims.meta_features, dims.encoder_hidden),
                                 splitmix64(seed ^ 0xe0c0de));
    params.lstm = init_lstm(dims.algorithms, dims.lstm_hidden, dims.lstm_layers,
                            splitmix64(seed ^ 0x15717));
    params.readout = init_params(mlp_spec(dims.lstm_hidden, {dims.algorithms}),
                                 splitmix64(seed ^ 0x0127ead));
    return params;
}

BatchPrediction batch_forward(const ImfasParams& params, const Mat& meta_features,
                              const std::vector<Mat>& step_inputs, const SoftRankConfig& cfg,
                              ModelCache* cache) {
    const int batch = static_cast<int>(meta_features.cols());
    if (meta_features.rows() != params.dims.meta_features) {
        std::ostringstream msg;
        msg << "batch_forward: meta-feature dim " << meta_features.rows() << " != "
            << params.dims.meta_features;
        throw ShapeError(msg.str());
    }
    for (const Mat& x : step_inputs) {
        if (x.rows() != params.dims.algorithms || x.cols() != batch) {
            throw ShapeError("batch_forward: fidelity input shape mismatch");
        }
    }

    Mat encoded = mlp_forward(params.encoder, meta_features, cache ? &cache->encoder : nullptr);

    // The encoded meta-features seed h0 of every layer; cells start at zero.
    LstmState init = zero_state(params.lstm, batch);
    for (auto& h : init.h) h = encoded;

    const Mat* final_h = &encoded;
    std::vector<LstmState> states =
        unroll(params.lstm, init, step_inputs, cache ? &cache->lstm : nullptr);
    if (!states.empty()) final_h = &states.back().h.back();

    BatchPrediction pred;
    pred.scores = mlp_forward(params.readout, *final_h, cache ? &cache->readout : nullptr);

    pred.soft_ranks.resize(pred.scores.rows(), batch);
    if (cache) cache->soft_rank.assign(batch, SoftRankCache{});
    for (int j = 0; j < batch; ++j) {
        pred.soft_ranks.col(j) =
            soft_rank(pred.scores.col(j), cfg, cache ? &cache->soft_rank[j] : nullptr);
    }
    if (cache) {
        cache->steps = static_cast<int>(step_inputs.size());
        cache->batch = batch;
    }
    return pred;
}

ImfasGrads batch_backward(const ImfasParams& params, const ModelCache& cache,
                          const Mat& loss_grad) {
    if (static_cast<int>(cache.soft_rank.size()) != cache.batch ||
        loss_grad.cols() != cache.batch || loss_grad.rows() != params.dims.algorithms) {
        throw CacheError("batch_backward: cache/gradient shape mismatch");
    }

    ImfasGrads grads = zero_grads_like(params);

    Mat d_scores(params.dims.algorithms, cache.batch);
    for (int j = 0; j < cache.batch; ++j) {
        d_scores.col(j) = soft_rank_backward(cache.soft_rank[j], loss_grad.col(j));
    }

    Mat d_final_h = mlp_backward(params.readout, cache.readout, d_scores, grads.readout);

    Mat d_encoded;
    if (cache.steps > 0) {
        LstmState grad_init = unroll_backward(params.lstm, cache.lstm, d_final_h, grads.lstm);
        d_encoded = grad_init.h.front();
        for (std::size_t k = 1; k < grad_init.h.size(); ++k) d_encoded += grad_init.h[k];
    } else {
        d_encoded = std::move(d_final_h);
    }

    mlp_backward(params.encoder, cache.encoder, d_encoded, grads.encoder);
    return grads;
}

RankingPrediction model_forward(const ImfasParams& params, const PartialObservation& obs,
                                const SoftRankConfig& cfg, ModelCache* cache) {
    std::vector<Mat> steps;
    steps.reserve(obs.fidelity_seq.size());
    for (const Vec& f : obs.fidelity_seq) steps.emplace_back(f);
    BatchPrediction batch = batch_forward(params, Mat(obs.meta_features), steps, cfg, cache);
    return {batch.scores.col(0), batch.soft_ranks.col(0)};
}

ImfasGrads model_backward(const ImfasParams& params, const ModelCache& cache,
                          const Vec& loss_grad) {
    return batch_backward(params, cache, Mat(loss_grad));
}

int partial_steps(double fraction, int num_fidelities) {
    if (fraction < 0.0 || fraction > 1.0) {
        throw SpecError("fraction must lie in [0, 1]");
    }
    if (num_fidelities < 2) {
        throw SpecError("need at least two fidelity steps to predict the final one");
    }
    return static_cast<int>(std::floor(fraction * (num_fidelities - 1)));
}

RankingPrediction predict_partial(const ImfasParams& params, const Vec& meta_features,
                                  const Mat& curves, double fraction,
                                  const SoftRankConfig& cfg) {
    if (curves.rows() != params.dims.algorithms) {
        throw ShapeError("predict_partial: curve rows must equal the algorithm count");
    }
    const int g = partial_steps(fraction, static_cast<int>(curves.cols()));
    PartialObservation obs;
    obs.meta_features = meta_features;
    for (int k = 0; k < g; ++k) obs.fidelity_seq.push_back(curves.col(k));
    return model_forward(params, obs, cfg);
}

ImfasGrads zero_grads_like(const ImfasParams& params) {
    return {zero_grads_like(params.encoder), zero_grads_like(params.lstm),
            zero_grads_like(params.readout)};
}

namespace {

template <class SpanT, class P>
std::vector<SpanT> collect_spans(P& p) {
    std::vector<SpanT> spans;
    for (auto s : tensor_spans(p.encoder)) spans.push_back({s.data, s.size});
    for (auto s : tensor_spans(p.lstm)) spans.push_back({s.data, s.size});
    for (auto s : tensor_spans(p.readout)) spans.push_back({s.data, s.size});
    return spans;
}

}  // namespace

std::vector<Span> tensor_spans(ImfasParams& params) {
    return collect_spans<Span>(params);
}

std::vector<ConstSpan> tensor_spans(const ImfasParams& params) {
    return collect_spans<ConstSpan>(params);
}

std::vector<Span> tensor_spans(ImfasGrads& grads) {
    return collect_spans<Span>(grads);
}

std::vector<ConstSpan> tensor_spans(const ImfasGrads& grads) {
    return collect_spans<ConstSpan>(grads);
}

}  // namespace imfas
