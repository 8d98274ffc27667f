#include "imfas/softrank.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "imfas/errors.hpp"

namespace imfas {

IsotonicResult isotonic_l2(const Vec& y) {
    const int n = static_cast<int>(y.size());
    if (n == 0) throw ShapeError("isotonic_l2: empty input");
    if (!y.allFinite()) throw NumericError("isotonic_l2: non-finite input");

    // Single-pass PAV with backtracking. `target` links the endpoints of each
    // active block: for a block [i..j], target[i] == j and target[j] == i.
    Vec sol = y;
    Vec sums = y;
    Vec counts = Vec::Ones(n);
    std::vector<int> target(n);
    std::iota(target.begin(), target.end(), 0);

    int i = 0;
    while (i < n) {
        int k = target[i] + 1;
        if (k == n) break;
        if (sol[i] > sol[k]) {
            i = k;
            continue;
        }
        double sum_y = sums[i];
        double sum_c = counts[i];
        for (;;) {
            // Merge the increasing run starting at k into the block at i.
            const double prev = sol[k];
            sum_y += sums[k];
            sum_c += counts[k];
            k = target[k] + 1;
            if (k == n || prev > sol[k]) {
                sol[i] = sum_y / sum_c;
                sums[i] = sum_y;
                counts[i] = sum_c;
                target[i] = k - 1;
                target[k - 1] = i;
                if (i > 0) i = target[i - 1];
                break;
            }
        }
    }

    IsotonicResult result;
    result.fit.resize(n);
    i = 0;
    while (i < n) {
        const int j = target[i];
        result.fit.segment(i, j - i + 1).setConstant(sol[i]);
        result.blocks.sizes.push_back(j - i + 1);
        i = j + 1;
    }
    return result;
}

Vec soft_rank(const Vec& scores, const SoftRankConfig& cfg, SoftRankCache* cache) {
    const int n = static_cast<int>(scores.size());
    if (n == 0) throw ShapeError("soft_rank: empty input");
    if (!scores.allFinite()) throw NumericError("soft_rank: non-finite score");
    if (cfg.regularization_strength <= 0.0) {
        throw SpecError("soft_rank: regularization strength must be positive");
    }

    const double sign = (cfg.direction == RankDirection::Descending) ? -1.0 : 1.0;
    const double scale = sign / cfg.regularization_strength;
    Vec z = scores * scale;

    std::vector<int> perm(n);
    std::iota(perm.begin(), perm.end(), 0);
    std::stable_sort(perm.begin(), perm.end(), [&](int a, int b) { return z[a] > z[b]; });

    // Sorted input minus the permutohedron anchor (n, n-1, ..., 1); the
    // projection equals sorted input minus the isotonic fit of this vector.
    Vec shifted(n);
    for (int r = 0; r < n; ++r) {
        shifted[r] = z[perm[r]] - static_cast<double>(n - r);
    }
    IsotonicResult iso = isotonic_l2(shifted);

    Vec ranks(n);
    for (int r = 0; r < n; ++r) {
        ranks[perm[r]] = z[perm[r]] - iso.fit[r];
    }

    if (cache) {
        cache->permutation = std::move(perm);
        cache->blocks = std::move(iso.blocks);
        cache->scale = scale;
        cache->n = n;
    }
    return ranks;
}

Vec soft_rank_backward(const SoftRankCache& cache, const Vec& grad_out) {
    const int n = cache.n;
    if (static_cast<int>(grad_out.size()) != n || static_cast<int>(cache.permutation.size()) != n) {
        throw CacheError("soft_rank_backward: cache/gradient size mismatch");
    }
    // d ranks / d z = P^T (I - B) P with B the block-averaging operator of the
    // isotonic solution; within a pooled block the mean is invariant to moves
    // inside the block, so only the deviation from the block mean passes.
    Vec g_sorted(n);
    for (int r = 0; r < n; ++r) g_sorted[r] = grad_out[cache.permutation[r]];

    Vec jv(n);
    int start = 0;
    for (int size : cache.blocks.sizes) {
        const double mean = g_sorted.segment(start, size).mean();
        jv.segment(start, size) = g_sorted.segment(start, size).array() - mean;
        start += size;
    }
    if (start != n) throw CacheError("soft_rank_backward: block partition does not cover input");

    Vec grad(n);
    for (int r = 0; r < n; ++r) grad[cache.permutation[r]] = cache.scale * jv[r];
    return grad;
}

Vec hard_rank(const Vec& values, RankDirection direction) {
    const int n = static_cast<int>(values.size());
    if (n == 0) throw ShapeError("hard_rank: empty input");
    if (!values.allFinite()) throw NumericError("hard_rank: non-finite input");

    std::vector<int> order(n);
    std::iota(order.begin(), order.end(), 0);
    if (direction == RankDirection::Descending) {
        std::stable_sort(order.begin(), order.end(),
                         [&](int a, int b) { return values[a] > values[b]; });
    } else {
        std::stable_sort(order.begin(), order.end(),
                         [&](int a, int b) { return values[a] < values[b]; });
    }

    Vec ranks(n);
    int pos = 0;
    while (pos < n) {
        int end = pos + 1;
        while (end < n && values[order[end]] == values[order[pos]]) ++end;
        // Positions pos..end-1 (0-based) share the average of ranks pos+1..end.
        const double avg = (static_cast<double>(pos + 1) + static_cast<double>(end)) / 2.0;
        for (int r = pos; r < end; ++r) ranks[order[r]] = avg;
        pos = end;
    }
    return ranks;
}

}  // namespace imfas
