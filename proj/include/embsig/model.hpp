#pragma once

#include <cstdint>
#include <vector>

#include "embsig/corpus.hpp"
#include "embsig/linalg.hpp"
#include "embsig/taskgen.hpp"

namespace embsig {

enum class Activation {
    Identity,      // bag-of-embeddings linear model
    Relu,          // one-hidden-layer network (subgradient 0 at 0)
    QuadraticTest, // x + x^2/2, the analysis surrogate
};

std::string activation_name(Activation a);
Activation activation_from_name(const std::string& name);

double apply_activation(Activation a, double x);
double activation_derivative(Activation a, double x);

// Embedding/unembedding pair.  Columns of w_e and rows of w_u are tokens.
// In tied mode w_u is not stored; it is w_e transposed by definition.
struct ModelParams {
    std::size_t d = 0;
    std::size_t d_vob = 0;
    Activation activation = Activation::Identity;
    bool tied = false;
    Matrix w_e; // d x d_vob
    Matrix w_u; // d_vob x d (empty when tied)

    Matrix unembedding() const; // w_u, or transpose(w_e) when tied
};

struct InitConfig {
    std::size_t d = 200;
    std::size_t d_vob = 0;
    Activation activation = Activation::Identity;
    bool tied = false;
    double init_exponent = 0.8; // entry variance d^(-init_exponent)
    bool fan_in_init = false;   // language-model convention: variance 1/fan_in
    std::uint64_t seed = 1;
};

// Gaussian init, filling w_e then w_u row-major so a fixed seed gives a
// fixed byte pattern.
ModelParams init_params(const InitConfig& cfg);

// Inputs are bags of token ids (multiplicity matters); the model scores
// every vocabulary token.
Vector forward_logits(const ModelParams& params, const std::vector<std::uint32_t>& tokens);

struct GradResult {
    double loss = 0.0;        // mean cross-entropy
    double accuracy = 0.0;    // argmax match rate (ties to the lowest id)
    Matrix d_w_e;             // d(loss)/d(w_e)
    Matrix d_w_u;             // d(loss)/d(w_u); in tied mode folded into d_w_e
};

// Mean loss and exact gradients over an encoded dataset: `inputs` is
// n * arity token ids, `targets` is n label ids.
GradResult loss_and_grads(const ModelParams& params, const std::vector<std::uint32_t>& inputs,
                          std::size_t arity, const std::vector<std::uint32_t>& targets);

struct EvalResult {
    double loss = 0.0;
    double accuracy = 0.0;
};

EvalResult evaluate(const ModelParams& params, const std::vector<std::uint32_t>& inputs,
                    std::size_t arity, const std::vector<std::uint32_t>& targets);

// Decoupled AdamW.  The multiplicative decay hits the parameter before the
// moment update, so zero gradient + zero moments still shrinks weights.
struct AdamConfig {
    double lr = 1e-5;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
    double weight_decay = 0.01;
};

struct AdamState {
    std::uint64_t step = 0;
    Matrix m, v; // first/second moments, same shape as the parameter
};

void adamw_step(Matrix& param, AdamState& state, const Matrix& grad, const AdamConfig& cfg);

enum class LrSchedule { Constant, Cosine };

struct TrainConfig {
    std::size_t d = 200;
    double init_exponent = 0.8;
    bool fan_in_init = false;
    Activation activation = Activation::Identity;
    bool tied = false;
    double lr = 1e-5;
    double weight_decay = 0.01;
    std::size_t batch = 100;
    std::size_t epochs = 1000;
    std::uint64_t seed = 1;
    LrSchedule schedule = LrSchedule::Constant;
    // Epochs whose end-state is kept (1-based).  Empty selects the default
    // cadence: every 10th epoch plus {1, 2, 5, 120} plus the final epoch.
    std::vector<std::size_t> snapshot_epochs;
    std::size_t log_every = 0; // extra intra-epoch logging in steps; 0 = per epoch
};

std::vector<std::size_t> default_snapshot_epochs(std::size_t epochs);

struct TimelinePoint {
    std::size_t step = 0;  // optimizer steps completed
    std::size_t epoch = 0; // 1-based
    double loss = 0.0;
    double accuracy = 0.0;
};

struct Snapshot {
    std::size_t epoch = 0;
    std::size_t step = 0;
    Matrix w_e;
    Matrix w_u;
};

struct TrainResult {
    ModelParams params;
    std::vector<TimelinePoint> timeline;
    std::vector<Snapshot> snapshots;
    double final_loss = 0.0;     // full-dataset evaluation of the final state
    double final_accuracy = 0.0;
};

// Encodes samples as vocab ids: inputs n*3 ([z, a1, a2] per sample).
void encode_dataset(const Dataset& ds, std::vector<std::uint32_t>& inputs,
                    std::vector<std::uint32_t>& targets);

// Within-sequence bigram pairs as single-token inputs with next-token targets.
void encode_bigrams(const TokenStream& stream, std::vector<std::uint32_t>& inputs,
                    std::vector<std::uint32_t>& targets);

// Mini-batch training with per-epoch reshuffling.  Aborts with a numeric
// error naming the step if the loss leaves the finite range.
TrainResult train(const Dataset& ds, const TrainConfig& cfg);
TrainResult train_bigram_lm(const TokenStream& stream, std::size_t vocab_size,
                            const TrainConfig& cfg);

} // namespace embsig
