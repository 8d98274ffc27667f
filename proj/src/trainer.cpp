#include "imfas/trainer.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <sstream>

#include "imfas/errors.hpp"
#include "imfas/parallel.hpp"
#include "imfas/ranking_loss.hpp"
#include "imfas/rng.hpp"
#include "imfas/softrank.hpp"

namespace imfas {

namespace {

// Adam with bias correction, walking all tensors in fixed declaration order.
class Adam {
  public:
    Adam(const ImfasParams& params, const AdamConfig& cfg, double learning_rate)
        : cfg_(cfg),
          lr_(learning_rate),
          m_(zero_grads_like(params)),
          v_(zero_grads_like(params)) {}

    void step(ImfasParams& params, const ImfasGrads& grads) {
        ++t_;
        const double bc1 = 1.0 - std::pow(cfg_.beta1, t_);
        const double bc2 = 1.0 - std::pow(cfg_.beta2, t_);
        auto p_spans = tensor_spans(params);
        auto g_spans = tensor_spans(grads);
        auto m_spans = tensor_spans(m_);
        auto v_spans = tensor_spans(v_);
        for (std::size_t s = 0; s < p_spans.size(); ++s) {
            double* p = p_spans[s].data;
            const double* g = g_spans[s].data;
            double* m = m_spans[s].data;
            double* v = v_spans[s].data;
            for (std::ptrdiff_t i = 0; i < p_spans[s].size; ++i) {
                m[i] = cfg_.beta1 * m[i] + (1.0 - cfg_.beta1) * g[i];
                v[i] = cfg_.beta2 * v[i] + (1.0 - cfg_.beta2) * g[i] * g[i];
                const double m_hat = m[i] / bc1;
                const double v_hat = v[i] / bc2;
                p[i] -= lr_ * m_hat / (std::sqrt(v_hat) + cfg_.epsilon);
            }
        }
    }

  private:
    AdamConfig cfg_;
    double lr_;
    ImfasGrads m_, v_;
    long t_ = 0;
};

double global_norm(const ImfasGrads& grads) {
    double sq = 0.0;
    for (const auto& span : tensor_spans(grads)) {
        for (std::ptrdiff_t i = 0; i < span.size; ++i) sq += span.data[i] * span.data[i];
    }
    return std::sqrt(sq);
}

void scale_grads(ImfasGrads& grads, double factor) {
    for (const auto& span : tensor_spans(grads)) {
        for (std::ptrdiff_t i = 0; i < span.size; ++i) span.data[i] *= factor;
    }
}

double validation_spearman(const ImfasParams& params, const MetaDataset& val,
                           const SoftRankConfig& cfg) {
    std::vector<double> rhos;
    for (int d = 0; d < val.num_datasets(); ++d) {
        const Vec truth = hard_rank(val.final_performances(d), RankDirection::Descending);
        if ((truth.array() - truth.mean()).square().sum() <= 1e-12) continue;
        RankingPrediction pred = predict_partial(
            params, val.meta_features.row(d).transpose(), val.performances[d], 1.0, cfg);
        const auto rho =
            try_spearman_eval(hard_rank(pred.scores, RankDirection::Descending), truth);
        if (rho) rhos.push_back(*rho);
    }
    if (rhos.empty()) return std::numeric_limits<double>::quiet_NaN();
    return std::accumulate(rhos.begin(), rhos.end(), 0.0) / static_cast<double>(rhos.size());
}

}  // namespace

void TrainConfig::validate(int train_set_size) const {
    if (epochs < 0) throw SpecError("train config: epochs must be >= 0");
    if (batch_size < 1) throw SpecError("train config: batch_size must be >= 1");
    if (batch_size > train_set_size) {
        throw SpecError("train config: batch_size exceeds the training set size");
    }
    if (learning_rate <= 0.0) throw SpecError("train config: learning_rate must be positive");
    if (softrank_epsilon <= 0.0) {
        throw SpecError("train config: softrank_epsilon must be positive");
    }
    if (grad_clip_norm <= 0.0) throw SpecError("train config: grad_clip_norm must be positive");
    if (adam.beta1 <= 0.0 || adam.beta1 >= 1.0 || adam.beta2 <= 0.0 || adam.beta2 >= 1.0 ||
        adam.epsilon <= 0.0) {
        throw SpecError("train config: invalid Adam hyperparameters");
    }
}

TrainResult train(const MetaDataset& ds_train, const TrainConfig& cfg,
                  const MetaDataset* ds_val) {
    ds_train.validate();
    cfg.validate(ds_train.num_datasets());

    const int n = ds_train.num_fidelities();
    const int algos = ds_train.num_algorithms();
    const int steps = n - 1;

    // Ground-truth ranks come from the final fidelity column, which is never
    // part of the LSTM inputs. Datasets whose final column is fully tied have
    // no usable ranking signal and are skipped up front.
    TrainResult result;
    std::vector<int> usable;
    std::vector<Vec> truth;
    for (int d = 0; d < ds_train.num_datasets(); ++d) {
        Vec ranks = hard_rank(ds_train.final_performances(d), RankDirection::Descending);
        if ((ranks.array() - ranks.mean()).square().sum() <= 1e-12) {
            result.skipped_datasets.push_back(ds_train.dataset_ids[d]);
            continue;
        }
        usable.push_back(d);
        truth.push_back(std::move(ranks));
    }
    if (usable.empty()) {
        throw ValidationError("train: every dataset has degenerate ground truth");
    }

    ImfasDims dims;
    dims.meta_features = ds_train.num_meta_features();
    dims.algorithms = algos;
    dims.encoder_hidden = cfg.encoder_hidden;
    dims.lstm_layers = cfg.lstm_layers;
    dims.lstm_hidden = cfg.lstm_hidden;

    ImfasParams params = init_imfas(dims, splitmix64(cfg.seed ^ 0x9a7a));
    Adam adam(params, cfg.adam, cfg.learning_rate);
    Rng shuffle_rng(cfg.seed, /*stream=*/0x5481);

    const SoftRankConfig rank_cfg{cfg.softrank_epsilon, RankDirection::Descending};

    std::vector<int> order(usable.size());
    std::iota(order.begin(), order.end(), 0);

    for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
        const auto epoch_start = std::chrono::steady_clock::now();
        shuffle_rng.shuffle(order);

        double loss_sum = 0.0;
        int loss_count = 0;
        for (std::size_t at = 0; at < order.size(); at += cfg.batch_size) {
            const int b = static_cast<int>(
                std::min<std::size_t>(cfg.batch_size, order.size() - at));

            Mat meta(ds_train.num_meta_features(), b);
            std::vector<Mat> inputs(steps, Mat(algos, b));
            for (int j = 0; j < b; ++j) {
                const int d = usable[order[at + j]];
                meta.col(j) = ds_train.meta_features.row(d).transpose();
                for (int t = 0; t < steps; ++t) {
                    inputs[t].col(j) = ds_train.performances[d].col(t);
                }
            }

            ModelCache cache;
            BatchPrediction pred = batch_forward(params, meta, inputs, rank_cfg, &cache);

            Mat loss_grad(algos, b);
            for (int j = 0; j < b; ++j) {
                const int u = order[at + j];
                RankPair pair{pred.soft_ranks.col(j), truth[u]};
                SpearmanLossCache loss_cache;
                double loss;
                try {
                    loss = spearman_loss(pair, &loss_cache);
                } catch (const NumericError& err) {
                    std::ostringstream msg;
                    msg << "training aborted at epoch " << epoch << ", batch "
                        << (at / cfg.batch_size) << ", dataset "
                        << ds_train.dataset_ids[usable[u]] << ": " << err.what();
                    throw NumericError(msg.str());
                }
                if (!std::isfinite(loss)) {
                    std::ostringstream msg;
                    msg << "training aborted: non-finite loss at epoch " << epoch << ", batch "
                        << (at / cfg.batch_size) << ", dataset "
                        << ds_train.dataset_ids[usable[u]];
                    throw NumericError(msg.str());
                }
                loss_sum += loss;
                ++loss_count;
                // Mean over the batch.
                loss_grad.col(j) = spearman_loss_backward(pair, loss_cache) / b;
            }

            ImfasGrads grads = batch_backward(params, cache, loss_grad);
            const double norm = global_norm(grads);
            if (!std::isfinite(norm)) {
                std::ostringstream msg;
                msg << "training aborted: non-finite gradient at epoch " << epoch << ", batch "
                    << (at / cfg.batch_size);
                throw NumericError(msg.str());
            }
            if (norm > cfg.grad_clip_norm) scale_grads(grads, cfg.grad_clip_norm / norm);
            adam.step(params, grads);
        }

        result.history.train_loss.push_back(loss_sum / std::max(1, loss_count));
        result.history.val_spearman.push_back(
            ds_val ? validation_spearman(params, *ds_val, rank_cfg)
                   : std::numeric_limits<double>::quiet_NaN());
        result.history.seconds.push_back(
            std::chrono::duration<double>(std::chrono::steady_clock::now() - epoch_start)
                .count());
    }

    result.params = std::move(params);
    return result;
}

std::string history_to_csv(const TrainHistory& history) {
    std::ostringstream out;
    out << "epoch,train_loss,val_spearman,seconds\n";
    char buf[32];
    for (std::size_t e = 0; e < history.train_loss.size(); ++e) {
        out << e << ',';
        std::snprintf(buf, sizeof(buf), "%.17g", history.train_loss[e]);
        out << buf << ',';
        if (e < history.val_spearman.size() && std::isfinite(history.val_spearman[e])) {
            std::snprintf(buf, sizeof(buf), "%.17g", history.val_spearman[e]);
            out << buf;
        }
        out << ',';
        std::snprintf(buf, sizeof(buf), "%.3f", history.seconds[e]);
        out << buf << '\n';
    }
    return out.str();
}

SeedRun run_one_seed(const MetaDataset& ds, const ExperimentConfig& cfg, std::uint64_t seed) {
    auto [train_raw, test_raw] = split(ds, cfg.test_fraction, seed);

    SeedRun run;
    run.scaler = fit_feature_scaler(train_raw);
    const MetaDataset train_norm = apply_feature_scaler(run.scaler, train_raw);
    const MetaDataset test_norm = apply_feature_scaler(run.scaler, test_raw);

    TrainConfig train_cfg = cfg.train;
    train_cfg.seed = seed;
    TrainResult trained = train(train_norm, train_cfg);

    const SoftRankConfig rank_cfg{cfg.train.softrank_epsilon, RankDirection::Descending};
    SeedEval eval;
    eval.seed = seed;
    eval.n_train = train_raw.num_datasets();
    eval.n_test = test_raw.num_datasets();
    eval.fractions = evaluate_model(trained.params, test_norm, cfg.fractions, rank_cfg,
                                    &eval.excluded_datasets, &eval.test_dataset_ids);

    // SH only consumes the raw performance curves.
    ShEvalResult sh = sh_eval(test_raw, cfg.sh);
    eval.sh_per_dataset = sh.per_dataset;
    eval.sh_mean = sh.mean;

    run.eval = std::move(eval);
    run.params = std::move(trained.params);
    run.history = std::move(trained.history);
    return run;
}

EvalReport run_seeds(const MetaDataset& ds, const ExperimentConfig& cfg,
                     const std::vector<std::uint64_t>& seeds) {
    if (seeds.empty()) throw SpecError("run_seeds: need at least one seed");
    std::vector<double> sorted_fractions = cfg.fractions;
    std::sort(sorted_fractions.begin(), sorted_fractions.end());

    ExperimentConfig run_cfg = cfg;
    run_cfg.fractions = sorted_fractions;

    EvalReport report;
    report.name = cfg.name;
    report.fractions = sorted_fractions;
    report.seeds = seeds;
    report.sh_schedule = sh_schedule_description(cfg.sh);
    report.per_seed.resize(seeds.size());

    // Seeds are independent runs; evaluate them in parallel with results
    // landing in per-seed slots so the report is identical for any worker
    // count.
    parallel_for(seeds.size(), [&](std::size_t i) {
        report.per_seed[i] = run_one_seed(ds, run_cfg, seeds[i]).eval;
    });

    aggregate_report(report);
    return report;
}

}  // namespace imfas
