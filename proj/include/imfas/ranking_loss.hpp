#pragma once

#include <optional>

#include "imfas/linalg.hpp"

namespace imfas {

// Predicted (soft) ranks and ground-truth (hard) ranks of equal length n >= 2.
struct RankPair {
    Vec predicted;
    Vec ground_truth;
};

struct SpearmanLossCache {
    Vec pred_centered;
    Vec truth_centered;
    double sd_pred = 0.0;
    double sd_truth = 0.0;
    double rho = 0.0;
    int n = 0;
};

// L = 1 - Cov(r_p, r_g) / (sd_{r_p} sd_{r_g}); 0 on perfect correlation, 2 on
// perfect anti-correlation. Throws NumericError when the predicted ranks have
// (numerically) zero variance: a collapsed prediction is a training pathology
// worth surfacing, not something to clamp over.
double spearman_loss(const RankPair& pair, SpearmanLossCache* cache = nullptr);

// Exact gradient of the loss wrt the predicted ranks (ground truth constant).
Vec spearman_loss_backward(const RankPair& pair, const SpearmanLossCache& cache);

// Spearman correlation on average-tie hard ranks of x and y. Throws
// NumericError when either rank vector has zero variance (the correlation is
// undefined, and must be reported as missing rather than 0).
double spearman_eval(const Vec& x, const Vec& y);

// As above, but degenerate inputs yield nullopt.
std::optional<double> try_spearman_eval(const Vec& x, const Vec& y);

}  // namespace imfas
