#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "imfas/eval_report.hpp"
#include "imfas/meta_data.hpp"
#include "imfas/model.hpp"

namespace imfas {

struct AdamConfig {
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-8;
};

struct TrainConfig {
    int epochs = 300;
    int batch_size = 10;
    double learning_rate = 1e-3;
    std::uint64_t seed = 0;
    double softrank_epsilon = 1.0;
    AdamConfig adam;
    double grad_clip_norm = 5.0;
    // Model widths; the defaults follow the standard encoder (300, 200),
    // two-layer LSTM with hidden size 200 and a single readout layer.
    std::vector<int> encoder_hidden = {300, 200};
    int lstm_layers = 2;
    int lstm_hidden = 200;

    void validate(int train_set_size) const;  // throws SpecError
};

struct TrainHistory {
    std::vector<double> train_loss;    // per-epoch mean over updates
    std::vector<double> val_spearman;  // NaN when no validation set was given
    std::vector<double> seconds;       // wall clock per epoch (not reproducible)
};

struct TrainResult {
    ImfasParams params;
    TrainHistory history;
    std::vector<std::string> skipped_datasets;  // degenerate ground truth
};

// Meta-training: every step feeds fidelity columns 1..n-1 and supervises the
// Spearman-complement loss against the hard ranking of the final column.
// Losses are averaged over the batch before each Adam update. Deterministic
// for fixed (data, config).
TrainResult train(const MetaDataset& ds_train, const TrainConfig& cfg,
                  const MetaDataset* ds_val = nullptr);

// One history row per epoch: `epoch,train_loss,val_spearman,seconds`.
// Payload columns use round-trip formatting; a missing validation column is
// left empty.
std::string history_to_csv(const TrainHistory& history);

struct ExperimentConfig {
    TrainConfig train;
    double test_fraction = 0.2;
    std::vector<double> fractions = {0.1, 0.2, 0.5, 1.0};
    ShConfig sh;
    std::string name = "synthetic";
};

// Per seed: dataset-level split, meta-feature normalization fitted on the
// train side, training, model evaluation at every fraction and the SH
// baseline on the raw test curves. Aggregates carry mean +/- sd over seeds.
EvalReport run_seeds(const MetaDataset& ds, const ExperimentConfig& cfg,
                     const std::vector<std::uint64_t>& seeds);

// Single-seed unit of run_seeds, exposed for the CLI's per-seed artifacts.
struct SeedRun {
    SeedEval eval;
    ImfasParams params;
    FeatureScaler scaler;
    TrainHistory history;
};

SeedRun run_one_seed(const MetaDataset& ds, const ExperimentConfig& cfg, std::uint64_t seed);

}  // namespace imfas
