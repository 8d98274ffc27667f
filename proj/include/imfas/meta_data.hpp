#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "imfas/linalg.hpp"

namespace imfas {

// The universe one run operates on: per-dataset meta-features plus a dense
// (datasets x algorithms x fidelities) performance tensor with values in
// [0, 1]. Immutable after validation.
struct MetaDataset {
    Mat meta_features;                  // M x F
    std::vector<Mat> performances;      // M matrices, |A| x n
    std::vector<double> fidelity_grid;  // n labels, strictly increasing
    std::vector<std::string> algorithm_ids;
    std::vector<std::string> dataset_ids;

    int num_datasets() const { return static_cast<int>(dataset_ids.size()); }
    int num_algorithms() const { return static_cast<int>(algorithm_ids.size()); }
    int num_fidelities() const { return static_cast<int>(fidelity_grid.size()); }
    int num_meta_features() const { return static_cast<int>(meta_features.cols()); }

    Vec final_performances(int dataset) const;

    void validate() const;  // throws ValidationError with a located message
};

// Synthetic benchmark generator spec. Curves follow exponential saturation
// p_inf - (p_inf - p0) * exp(-rate * k) toward a dataset/algorithm dependent
// asymptote; a crossing_fraction of algorithms get slow rates with boosted
// asymptotes so early-fidelity ranks are misleading.
struct SyntheticSpec {
    int num_datasets = 50;      // M
    int num_algorithms = 10;    // |A|
    int num_fidelities = 8;     // n
    int num_meta_features = 6;  // F
    int latent_dim = 3;
    double noise_sd = 0.02;
    double crossing_fraction = 0.0;
    std::uint64_t seed = 0;
    // Optional override of the built-in per-class rate ranges; both must be
    // set (> 0) to take effect.
    double rate_min = 0.0;
    double rate_max = 0.0;

    void validate() const;  // throws SpecError
};

// Long-format curves CSV (dataset_id,algorithm_id,fidelity_index,performance)
// plus a meta-features CSV (dataset_id,f_0,...). The grid must be complete;
// a missing cell is rejected with an error naming the triple.
MetaDataset load_csv(const std::string& curves_path, const std::string& meta_path);
void save_csv(const MetaDataset& ds, const std::string& curves_path,
              const std::string& meta_path);

MetaDataset generate_synthetic(const SyntheticSpec& spec);

// Per-feature z-scoring statistics fitted on a training set. Constant
// features map to zero.
struct FeatureScaler {
    Vec mean;
    Vec inv_sd;  // 0 for constant features
};

FeatureScaler fit_feature_scaler(const MetaDataset& train);
MetaDataset apply_feature_scaler(const FeatureScaler& scaler, const MetaDataset& ds);
MetaDataset normalize_meta_features(const MetaDataset& train, const MetaDataset& apply_to);

// Disjoint dataset-level split, deterministic per seed.
std::pair<MetaDataset, MetaDataset> split(const MetaDataset& ds, double test_fraction,
                                          std::uint64_t seed);

// Subset by dataset indices (kept in the given order).
MetaDataset subset(const MetaDataset& ds, const std::vector<int>& indices);

}  // namespace imfas
