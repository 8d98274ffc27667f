#include "imfas/baseline_sh.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include "imfas/errors.hpp"
#include "imfas/ranking_loss.hpp"
#include "imfas/softrank.hpp"

namespace imfas {

ShOutcome sh_rank(const Mat& curves, const ShConfig& cfg) {
    const int a = static_cast<int>(curves.rows());
    const int n = static_cast<int>(curves.cols());
    if (a < 1 || n < 1) throw ShapeError("sh_rank: empty performance matrix");
    if (!curves.allFinite()) throw NumericError("sh_rank: non-finite performance");
    if (cfg.eta < 2) throw SpecError("sh_rank: eta must be >= 2");

    ShOutcome outcome;
    outcome.elimination_level.assign(a, 0);
    outcome.ranking.resize(a);

    std::vector<int> survivors(a);
    std::iota(survivors.begin(), survivors.end(), 0);

    // Blocks of eliminated algorithms, one per level, each already ordered
    // best-first within the level.
    std::vector<std::vector<int>> eliminated_blocks;
    int level = 0;

    auto order_by_level = [&](std::vector<int>& group, int lvl) {
        std::stable_sort(group.begin(), group.end(), [&](int lhs, int rhs) {
            if (curves(lhs, lvl) != curves(rhs, lvl)) return curves(lhs, lvl) > curves(rhs, lvl);
            return lhs < rhs;
        });
    };

    for (;;) {
        if (survivors.size() == 1) {
            // No need to read another column for a single survivor.
            break;
        }
        order_by_level(survivors, level);
        outcome.levels_read = level + 1;
        if (level == n - 1) break;  // columns exhausted: rank survivors here

        const int keep = static_cast<int>(
            std::ceil(static_cast<double>(survivors.size()) / cfg.eta));
        std::vector<int> dropped(survivors.begin() + keep, survivors.end());
        for (int idx : dropped) outcome.elimination_level[idx] = level;
        eliminated_blocks.push_back(std::move(dropped));
        survivors.resize(keep);
        ++level;
    }

    for (int idx : survivors) outcome.elimination_level[idx] = level;
    outcome.survivors = survivors;
    if (outcome.levels_read > 0) {
        const int last_level = outcome.levels_read - 1;
        for (int idx : survivors) {
            outcome.survivor_performance.push_back(curves(idx, last_level));
        }
    }

    // Survivors take the best ranks, then eliminated blocks in reverse
    // elimination order (later elimination means a strictly better block).
    double next_rank = 1.0;
    for (int idx : survivors) outcome.ranking[idx] = next_rank++;
    for (auto it = eliminated_blocks.rbegin(); it != eliminated_blocks.rend(); ++it) {
        for (int idx : *it) outcome.ranking[idx] = next_rank++;
    }
    return outcome;
}

ShEvalResult sh_eval(const MetaDataset& test, const ShConfig& cfg) {
    test.validate();
    ShEvalResult result;
    for (int d = 0; d < test.num_datasets(); ++d) {
        const Vec final_col = test.final_performances(d);
        const Vec truth = hard_rank(final_col, RankDirection::Descending);
        ShOutcome outcome = sh_rank(test.performances[d], cfg);
        // Both vectors use rank 1 = best.
        const auto rho = try_spearman_eval(outcome.ranking, truth);
        if (!rho) {
            result.excluded_datasets.push_back(test.dataset_ids[d]);
            continue;
        }
        result.dataset_ids.push_back(test.dataset_ids[d]);
        result.per_dataset.push_back(*rho);
    }
    if (result.per_dataset.empty()) {
        throw ValidationError("sh_eval: every test dataset has degenerate ground truth");
    }
    const int k = static_cast<int>(result.per_dataset.size());
    double mean = 0.0;
    for (double v : result.per_dataset) mean += v;
    mean /= k;
    double var = 0.0;
    for (double v : result.per_dataset) var += (v - mean) * (v - mean);
    result.mean = mean;
    result.sd = std::sqrt(var / k);
    return result;
}

std::string sh_schedule_description(const ShConfig& cfg) {
    std::ostringstream out;
    out << "successive halving, eta=" << cfg.eta
        << ", one fidelity column per elimination round, keep ceil(survivors/eta)";
    return out.str();
}

}  // namespace imfas
