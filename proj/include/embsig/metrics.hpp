#pragma once

// Geometry metrics over embedding/unembedding columns: order structure,
// similarity-matrix agreement, per-token alignment, decile curves, and
// per-snapshot timelines.

#include <cstddef>
#include <vector>

#include "embsig/linalg.hpp"
#include "embsig/model.hpp"

namespace embsig {

// Copies the selected columns of `m` into a new matrix, in the given order.
Matrix columns_subset(const Matrix& m, const std::vector<std::size_t>& cols);

// Pearson correlation between pairwise cosine similarity and index distance
// |i - j| over the strict upper triangle.  Columns of `vectors` are the
// ordered items.  Strongly negative values mean "nearby items are more
// similar".  Throws numeric_error when either side has zero variance.
double r_order(const Matrix& vectors);

// Same, but with circular index distance min(|i-j|, n-|i-j|).
double r_order_circular(const Matrix& vectors);

// Pearson correlation between the strict upper triangles of two symmetric
// similarity matrices of equal size.
double r_cos(const Matrix& sim_a, const Matrix& sim_b);

// Mean of the off-diagonal entries of a symmetric similarity matrix.
double mean_offdiagonal(const Matrix& sim);

struct PerTokenAlignment {
    Vector r_d;       // per-token Pearson of sim_a row vs sim_b row (diag excluded);
                      // NaN where a row is degenerate
    Vector mean_cos;  // per-token mean of sim_a row, diag excluded
};

PerTokenAlignment per_token_alignment(const Matrix& sim_a, const Matrix& sim_b);

// Equal-count decile curve: pairs (i<j) are ranked by sim_ref, split into 10
// contiguous groups, and the mean of sim_probe is reported per group.
Vector alignment_decile_curve(const Matrix& sim_probe, const Matrix& sim_ref);

// Longest monotone (non-strict increasing or decreasing) subsequence length.
std::size_t longest_monotone_subsequence(const Vector& values);

struct StructurePoint {
    std::size_t epoch = 0;
    std::size_t step = 0;
    double order_score = 0.0;  // NaN when the cosine pattern is degenerate
    double mean_cos = 0.0;     // mean off-diagonal cosine over the token set
};

// Evaluates order structure of the selected embedding columns across
// training snapshots.
std::vector<StructurePoint> structure_timeline(const std::vector<Snapshot>& snapshots,
                                               const std::vector<std::size_t>& token_ids);

} // namespace embsig
