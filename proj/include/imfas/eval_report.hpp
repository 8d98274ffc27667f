#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "imfas/baseline_sh.hpp"
#include "imfas/meta_data.hpp"
#include "imfas/model.hpp"

namespace imfas {

// Per-dataset Spearman correlations of the model's prediction at one
// fidelity fraction against the final-fidelity ground truth.
struct FractionEval {
    double fraction = 0.0;
    std::vector<double> per_dataset;
    double mean = 0.0;
};

struct SeedEval {
    std::uint64_t seed = 0;
    std::vector<FractionEval> fractions;
    std::vector<double> sh_per_dataset;
    double sh_mean = 0.0;
    std::vector<std::string> test_dataset_ids;
    std::vector<std::string> excluded_datasets;
    int n_train = 0;
    int n_test = 0;
};

struct AggregateStat {
    double mean = 0.0;
    double sd = 0.0;  // population sd over seeds
};

struct EvalReport {
    std::string name;
    std::vector<double> fractions;  // sorted ascending
    std::vector<std::uint64_t> seeds;
    std::vector<SeedEval> per_seed;
    std::vector<AggregateStat> aggregate;  // one per fraction, over per-seed means
    AggregateStat sh;
    std::vector<std::string> excluded_datasets;  // union over seeds
    std::string sh_schedule;
    std::string config_hash;
};

// Scores every test dataset at every fraction: predict_partial, hard-rank the
// scores, Spearman against the hard ranks of the final fidelity column.
// Datasets with degenerate ground truth are excluded and listed.
std::vector<FractionEval> evaluate_model(const ImfasParams& params, const MetaDataset& test,
                                         const std::vector<double>& fractions,
                                         const SoftRankConfig& cfg,
                                         std::vector<std::string>* excluded = nullptr,
                                         std::vector<std::string>* included_ids = nullptr);

// Recomputes the per-fraction and SH aggregates of `report` from its per-seed
// payload (population sd over seeds).
void aggregate_report(EvalReport& report);

enum class ReportFormat { Json, Markdown };

// Markdown: one row per experiment, one column per fraction plus SH, cells
// "mean +/- sd" to 3 decimals, bold on the first fraction whose mean exceeds
// the SH mean. JSON: lossless, stable key order, byte-stable re-render.
std::string render_report(const EvalReport& report, ReportFormat format);

// CSV series `fraction,mean_spearman,sd,sh_mean` for external plotting.
std::string export_fraction_curve(const EvalReport& report);

AggregateStat mean_sd(const std::vector<double>& values);

}  // namespace imfas
