#pragma once

#include <vector>

#include "imfas/linalg.hpp"

namespace imfas {

enum class RankDirection { Ascending, Descending };

struct SoftRankConfig {
    // Regularization strength of the projection; larger values give smoother
    // (more pooled) ranks, epsilon -> 0 recovers hard ranks on distinct input.
    double regularization_strength = 1.0;
    RankDirection direction = RankDirection::Descending;
};

// Contiguous partition of sorted indices produced by the isotonic solver.
// Within a block the fitted values all equal the block mean, and block means
// are non-increasing.
struct IsotonicBlocks {
    std::vector<int> sizes;
};

struct IsotonicResult {
    Vec fit;
    IsotonicBlocks blocks;
};

// L2 projection of y onto the non-increasing cone (pool adjacent violators).
IsotonicResult isotonic_l2(const Vec& y);

struct SoftRankCache {
    std::vector<int> permutation;  // descending sort order of the scaled input
    IsotonicBlocks blocks;
    double scale = 1.0;  // sign / epsilon
    int n = 0;
};

// Differentiable ranking: the regularized projection of scores/epsilon onto
// the permutohedron of (n, ..., 1), computed via sorting plus isotonic
// regression. Soft ranks always sum to n(n+1)/2. With direction Descending a
// higher score receives a better (lower) rank.
Vec soft_rank(const Vec& scores, const SoftRankConfig& cfg, SoftRankCache* cache = nullptr);

// Exact Jacobian-vector product through the sort and the isotonic block
// structure.
Vec soft_rank_backward(const SoftRankCache& cache, const Vec& grad_out);

// Hard ranks with the average rule on exact ties; ranks sum to n(n+1)/2.
Vec hard_rank(const Vec& values, RankDirection direction);

}  // namespace imfas
