#include "oracles.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>

namespace oracles {

Vec naive_mlp_forward(const imfas::MlpParams& params, const Vec& x) {
    std::vector<double> h(x.data(), x.data() + x.size());
    for (const auto& layer : params) {
        std::vector<double> z(layer.out_dim(), 0.0);
        for (int r = 0; r < layer.out_dim(); ++r) {
            double acc = layer.bias[r];
            for (int c = 0; c < layer.in_dim(); ++c) acc += layer.weights(r, c) * h[c];
            switch (layer.activation) {
                case imfas::Activation::Identity: z[r] = acc; break;
                case imfas::Activation::Relu: z[r] = acc > 0.0 ? acc : 0.0; break;
                case imfas::Activation::Tanh: z[r] = std::tanh(acc); break;
                case imfas::Activation::Sigmoid: z[r] = 1.0 / (1.0 + std::exp(-acc)); break;
            }
        }
        h = std::move(z);
    }
    Vec out(static_cast<int>(h.size()));
    for (std::size_t i = 0; i < h.size(); ++i) out[static_cast<int>(i)] = h[i];
    return out;
}

Vec isotonic_bruteforce(const Vec& y) {
    const int n = static_cast<int>(y.size());
    double best_sse = std::numeric_limits<double>::infinity();
    Vec best = y;
    // Bit b of `mask` set means a block boundary after position b.
    for (unsigned mask = 0; mask < (1u << (n - 1)); ++mask) {
        Vec fit(n);
        int start = 0;
        bool feasible = true;
        double prev_mean = std::numeric_limits<double>::infinity();
        for (int i = 0; i < n; ++i) {
            const bool boundary = (i == n - 1) || (mask & (1u << i));
            if (!boundary) continue;
            double mean = 0.0;
            for (int j = start; j <= i; ++j) mean += y[j];
            mean /= (i - start + 1);
            if (mean > prev_mean + 1e-12) {
                feasible = false;
                break;
            }
            for (int j = start; j <= i; ++j) fit[j] = mean;
            prev_mean = mean;
            start = i + 1;
        }
        if (!feasible) continue;
        const double sse = (fit - y).squaredNorm();
        if (sse < best_sse) {
            best_sse = sse;
            best = fit;
        }
    }
    return best;
}

Vec project_permutohedron(const Vec& z) {
    const int n = static_cast<int>(z.size());
    if (n > 5) throw std::runtime_error("project_permutohedron: oracle limited to n <= 5");

    // Sum of the k largest anchor values (n, n-1, ..., 1).
    auto top_sum = [&](int k) {
        double s = 0.0;
        for (int i = 0; i < k; ++i) s += n - i;
        return s;
    };

    const unsigned subsets = (1u << n);
    std::vector<unsigned> proper;
    for (unsigned s = 1; s + 1 < subsets; ++s) proper.push_back(s);

    const double tol = 1e-9;
    for (unsigned active_mask = 0; active_mask < (1u << proper.size()); ++active_mask) {
        std::vector<unsigned> active;
        for (std::size_t i = 0; i < proper.size(); ++i) {
            if (active_mask & (1u << i)) active.push_back(proper[i]);
        }
        const int m = static_cast<int>(active.size()) + 1;  // + global equality

        // KKT: [I C^T; C 0] [x; mu] = [z; b].
        Mat kkt = Mat::Zero(n + m, n + m);
        Vec rhs = Vec::Zero(n + m);
        kkt.topLeftCorner(n, n).setIdentity();
        rhs.head(n) = z;
        for (int j = 0; j < n; ++j) kkt(n, j) = kkt(j, n) = 1.0;
        rhs[n] = top_sum(n);
        for (int r = 1; r < m; ++r) {
            const unsigned s = active[r - 1];
            int size = 0;
            for (int j = 0; j < n; ++j) {
                if (s & (1u << j)) {
                    kkt(n + r, j) = kkt(j, n + r) = 1.0;
                    ++size;
                }
            }
            rhs[n + r] = top_sum(size);
        }

        Eigen::FullPivLU<Mat> lu(kkt);
        if (!lu.isInvertible()) continue;
        const Vec sol = lu.solve(rhs);
        const Vec x = sol.head(n);

        // Dual feasibility of the active inequality multipliers.
        bool ok = true;
        for (int r = 1; r < m && ok; ++r) {
            if (sol[n + r] < -tol) ok = false;
        }
        // Primal feasibility over every proper subset.
        for (unsigned s : proper) {
            if (!ok) break;
            double sum = 0.0;
            int size = 0;
            for (int j = 0; j < n; ++j) {
                if (s & (1u << j)) {
                    sum += x[j];
                    ++size;
                }
            }
            if (sum > top_sum(size) + tol) ok = false;
        }
        if (ok) return x;
    }
    throw std::runtime_error("project_permutohedron: no KKT point found");
}

Vec soft_rank_bruteforce(const Vec& scores, double epsilon, bool descending) {
    const double sign = descending ? -1.0 : 1.0;
    return project_permutohedron(scores * (sign / epsilon));
}

Vec rank_by_double_argsort(const Vec& values, bool descending) {
    const int n = static_cast<int>(values.size());
    std::vector<int> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](int a, int b) {
        return descending ? values[a] > values[b] : values[a] < values[b];
    });
    std::vector<int> inverse(n);
    for (int r = 0; r < n; ++r) inverse[order[r]] = r;
    Vec ranks(n);
    for (int i = 0; i < n; ++i) ranks[i] = inverse[i] + 1;
    return ranks;
}

std::vector<double> rankify_average(const std::vector<double>& v) {
    std::vector<double> sorted = v;
    std::sort(sorted.begin(), sorted.end());
    std::vector<double> result(v.size());
    for (std::size_t i = 0; i < v.size(); ++i) {
        const auto lb = std::lower_bound(sorted.begin(), sorted.end(), v[i]);
        const auto ub = std::upper_bound(sorted.begin(), sorted.end(), v[i]);
        const auto r = 1 + (lb - sorted.begin());
        const auto s = ub - lb;
        result[i] = r + (s - 1) * 0.5;
    }
    return result;
}

double pearson(const std::vector<double>& a, const std::vector<double>& b) {
    const std::size_t n = a.size();
    double sum_a = 0, sum_b = 0, sum_ab = 0, sq_a = 0, sq_b = 0;
    for (std::size_t i = 0; i < n; ++i) {
        sum_a += a[i];
        sum_b += b[i];
        sum_ab += a[i] * b[i];
        sq_a += a[i] * a[i];
        sq_b += b[i] * b[i];
    }
    const double var_a = n * sq_a - sum_a * sum_a;
    const double var_b = n * sq_b - sum_b * sum_b;
    return (n * sum_ab - sum_a * sum_b) / std::sqrt(var_a * var_b);
}

double spearman_closed_form(const Vec& x, const Vec& y) {
    const int n = static_cast<int>(x.size());
    const Vec rx = rank_by_double_argsort(x, false);
    const Vec ry = rank_by_double_argsort(y, false);
    double d2 = 0.0;
    for (int i = 0; i < n; ++i) d2 += (rx[i] - ry[i]) * (rx[i] - ry[i]);
    return 1.0 - 6.0 * d2 / (static_cast<double>(n) * (static_cast<double>(n) * n - 1.0));
}

Vec sh_bruteforce(const Mat& curves, int eta) {
    const int a = static_cast<int>(curves.rows());
    const int n = static_cast<int>(curves.cols());

    std::vector<int> alive(a);
    std::iota(alive.begin(), alive.end(), 0);
    std::vector<std::vector<int>> history;  // elimination blocks, chronological

    int level = 0;
    while (static_cast<int>(alive.size()) > 1 && level < n - 1) {
        std::sort(alive.begin(), alive.end(), [&](int lhs, int rhs) {
            if (curves(lhs, level) != curves(rhs, level)) {
                return curves(lhs, level) > curves(rhs, level);
            }
            return lhs < rhs;
        });
        const int keep = (static_cast<int>(alive.size()) + eta - 1) / eta;
        history.emplace_back(alive.begin() + keep, alive.end());
        alive.erase(alive.begin() + keep, alive.end());
        ++level;
    }
    if (alive.size() > 1) {
        std::sort(alive.begin(), alive.end(), [&](int lhs, int rhs) {
            if (curves(lhs, level) != curves(rhs, level)) {
                return curves(lhs, level) > curves(rhs, level);
            }
            return lhs < rhs;
        });
    }

    // Assign ranks from the worst end: earliest eliminations take the worst
    // ranks, each block already ordered best-first.
    Vec ranks(a);
    double next_worst = a;
    for (const auto& block : history) {
        for (auto it = block.rbegin(); it != block.rend(); ++it) ranks[*it] = next_worst--;
    }
    for (auto it = alive.rbegin(); it != alive.rend(); ++it) ranks[*it] = next_worst--;
    return ranks;
}

double max_rel_gap(const Vec& a, const Vec& b, double floor_scale) {
    const double scale =
        std::max({floor_scale, a.cwiseAbs().maxCoeff(), b.cwiseAbs().maxCoeff()});
    return (a - b).cwiseAbs().maxCoeff() / scale;
}

}  // namespace oracles
