#include "imfas/ranking_loss.hpp"

#include <cmath>

#include "imfas/errors.hpp"
#include "imfas/softrank.hpp"

namespace imfas {

namespace {

constexpr double kVarianceFloor = 1e-12;

}  // namespace

double spearman_loss(const RankPair& pair, SpearmanLossCache* cache) {
    const int n = static_cast<int>(pair.predicted.size());
    if (n < 2 || pair.ground_truth.size() != n) {
        throw ShapeError("spearman_loss: rank vectors must have equal length >= 2");
    }
    if (!pair.predicted.allFinite() || !pair.ground_truth.allFinite()) {
        throw NumericError("spearman_loss: non-finite rank");
    }

    Vec pc = pair.predicted.array() - pair.predicted.mean();
    Vec tc = pair.ground_truth.array() - pair.ground_truth.mean();
    const double sd_pred = std::sqrt(pc.squaredNorm() / n);
    const double sd_truth = std::sqrt(tc.squaredNorm() / n);
    if (sd_truth <= kVarianceFloor) {
        throw NumericError("spearman_loss: ground-truth ranks have zero variance");
    }
    if (sd_pred <= kVarianceFloor) {
        throw NumericError("spearman_loss: predicted ranks collapsed to zero variance");
    }

    const double rho = pc.dot(tc) / (n * sd_pred * sd_truth);
    if (cache) {
        cache->pred_centered = std::move(pc);
        cache->truth_centered = std::move(tc);
        cache->sd_pred = sd_pred;
        cache->sd_truth = sd_truth;
        cache->rho = rho;
        cache->n = n;
    }
    return 1.0 - rho;
}

Vec spearman_loss_backward(const RankPair& pair, const SpearmanLossCache& cache) {
    const int n = static_cast<int>(pair.predicted.size());
    if (cache.n != n || cache.pred_centered.size() != n) {
        throw CacheError("spearman_loss_backward: cache does not match the pair");
    }
    // dL/dr_p = (rho * pc / sd_p^2 - tc / (sd_p sd_t)) / n.
    const double sp2 = cache.sd_pred * cache.sd_pred;
    return (cache.rho * cache.pred_centered / sp2 -
            cache.truth_centered / (cache.sd_pred * cache.sd_truth)) /
           static_cast<double>(n);
}

double spearman_eval(const Vec& x, const Vec& y) {
    const int n = static_cast<int>(x.size());
    if (n < 2 || y.size() != n) {
        throw ShapeError("spearman_eval: vectors must have equal length >= 2");
    }
    Vec rx = hard_rank(x, RankDirection::Ascending);
    Vec ry = hard_rank(y, RankDirection::Ascending);

    Vec xc = rx.array() - rx.mean();
    Vec yc = ry.array() - ry.mean();
    const double vx = xc.squaredNorm();
    const double vy = yc.squaredNorm();
    if (vx <= kVarianceFloor || vy <= kVarianceFloor) {
        throw NumericError("spearman_eval: undefined correlation (zero rank variance)");
    }
    return xc.dot(yc) / std::sqrt(vx * vy);
}

std::optional<double> try_spearman_eval(const Vec& x, const Vec& y) {
    try {
        return spearman_eval(x, y);
    } catch (const NumericError&) {
        return std::nullopt;
    }
}

}  // namespace imfas
