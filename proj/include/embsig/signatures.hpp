#pragma once

#include <map>

#include "embsig/corpus.hpp"
#include "embsig/linalg.hpp"
#include "embsig/taskgen.hpp"

namespace embsig {

// Distribution profiles ("signatures") of how tokens co-occur with inputs
// and labels.  All vectors and matrix rows/columns are indexed by the
// dataset/task vocabulary id order.  Membership is set-based: a token that
// fills two slots of one sample still counts once.

// --- counting estimators over a sampled dataset ---

// Label distribution among samples whose input contains x.
Vector empirical_phi_y(const Dataset& ds, int x_raw);

// Co-occurrence profile: entry x' = P(x' in X | x in X); entry at x is 1.
Vector empirical_phi_X(const Dataset& ds, int x_raw);

// Label-resolved co-occurrence: row nu, column x' = P(x' in X | x in X, y = nu).
// Rows whose conditioning event never occurs are all-zero.
Matrix empirical_phi_X_given_y(const Dataset& ds, int x_raw);

// Input profile of a label: entry x = P(x in X | y = nu).
Vector empirical_varphi_X(const Dataset& ds, int label_raw);

// --- exact laws of the generative process ---
// Computed by enumerating every (a1, a2, z) outcome with its sampling
// probability, so they agree with the estimators above in the large-N limit
// and satisfy the Bayes identity exactly.

Vector analytic_phi_y(const TaskSpec& spec, int x_raw);
Vector analytic_phi_X(const TaskSpec& spec, int x_raw);
Matrix analytic_phi_X_given_y(const TaskSpec& spec, int x_raw);
Vector analytic_varphi_X(const TaskSpec& spec, int label_raw);

// Marginals of the same process, per vocab id.
Vector analytic_membership_rate(const TaskSpec& spec); // P(x in X)
Vector analytic_label_rate(const TaskSpec& spec);      // P(y = nu)

// Sum laws of the anchor/key sets that shape the addition tasks.
struct ConvolutionTable {
    std::map<int, double> sum_az; // law of A + Z (A, Z independent uniforms)
    std::map<int, double> sum_aa; // law of A + A
    Vector mod_az;                // law of (A + Z) mod |Z|, indexed by residue
    Vector mod_aa;                // law of (A + A) mod |Z|
};

ConvolutionTable convolution_table(const TaskSpec& spec);

// --- pooled bigram conditionals of a corpus ---
// Token ids index the vectors directly; vocab_size fixes the length.

// Successor distribution of s among its non-final occurrences.
Vector corpus_phi_next(const BigramCounts& counts, std::uint32_t s, std::size_t vocab_size);

// Predecessor distribution of s among its non-initial occurrences.
Vector corpus_varphi_pre(const BigramCounts& counts, std::uint32_t s, std::size_t vocab_size);

// Sum of the two, the signature a tied embedding/unembedding model tracks.
Vector tilde_phi(const BigramCounts& counts, std::uint32_t s, std::size_t vocab_size);

} // namespace embsig
