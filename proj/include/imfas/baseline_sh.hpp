#pragma once

#include <string>
#include <vector>

#include "imfas/linalg.hpp"
#include "imfas/meta_data.hpp"

namespace imfas {

// Successive Halving adapted to emit an absolute ranking: the elimination
// level gives a tied ordinal ranking and each level's ties are broken by the
// performances observed at that level. Higher performance is better.
struct ShConfig {
    int eta = 2;  // elimination factor, >= 2
};

struct ShOutcome {
    // Fidelity level at which each algorithm was eliminated; survivors carry
    // the last level that was actually read.
    std::vector<int> elimination_level;
    // Performances of the surviving set at the stopping level.
    std::vector<double> survivor_performance;
    std::vector<int> survivors;
    // Absolute 1-based ranking, strict total order (exact performance ties
    // broken by stable algorithm index).
    Vec ranking;
    int levels_read = 0;
};

// Rounds advance one fidelity column at a time, each keeping the top
// ceil(survivors/eta) by current-level performance; stops when one survivor
// remains or the columns are exhausted. Later columns are never read.
ShOutcome sh_rank(const Mat& curves, const ShConfig& cfg);

struct ShEvalResult {
    std::vector<std::string> dataset_ids;
    std::vector<double> per_dataset;  // Spearman vs final-fidelity ground truth
    std::vector<std::string> excluded_datasets;
    double mean = 0.0;
    double sd = 0.0;
};

ShEvalResult sh_eval(const MetaDataset& test, const ShConfig& cfg);

// Human-readable disclosure of the configured schedule, included in reports.
std::string sh_schedule_description(const ShConfig& cfg);

}  // namespace imfas
