#pragma once

// Independent reference implementations used to check the library. Everything
// here is deliberately written with different mechanics than the production
// code (plain loops, exhaustive enumeration, KKT systems) so the two sides
// cannot share a bug.

#include <vector>

#include "imfas/linalg.hpp"
#include "imfas/nn.hpp"

namespace oracles {

using imfas::Mat;
using imfas::Vec;

// Straight-line MLP evaluation with scalar loops only.
Vec naive_mlp_forward(const imfas::MlpParams& params, const Vec& x);

// Exact isotonic (non-increasing) L2 fit by enumerating every contiguous
// block partition and keeping the feasible one with the smallest error.
Vec isotonic_bruteforce(const Vec& y);

// Euclidean projection of z onto the permutohedron of (n, ..., 1), solved by
// enumerating KKT active sets over the subset constraints. Exact for small n.
Vec project_permutohedron(const Vec& z);

// Soft rank via the projection definition only.
Vec soft_rank_bruteforce(const Vec& scores, double epsilon, bool descending);

// Hard ranks of a tie-free vector via double argsort.
Vec rank_by_double_argsort(const Vec& values, bool descending);

// Tie-aware average ranks via lower/upper bound counting (ascending).
std::vector<double> rankify_average(const std::vector<double>& v);

double pearson(const std::vector<double>& a, const std::vector<double>& b);

// 1 - 6 sum d^2 / (n (n^2 - 1)); valid only without ties.
double spearman_closed_form(const Vec& x, const Vec& y);

// Literal simulation of the successive-halving ranking rule, assigning ranks
// from the worst algorithm upward.
Vec sh_bruteforce(const Mat& curves, int eta);

// Max-norm relative gap between two gradients, floored to avoid blowups on
// all-zero gradients.
double max_rel_gap(const Vec& a, const Vec& b, double floor_scale = 1e-6);

}  // namespace oracles
