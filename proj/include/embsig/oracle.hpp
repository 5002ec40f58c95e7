#pragma once

// Closed-form predictors for gradient-flow directions, plus exact
// per-sample decompositions used to validate the training gradients.
//
// "Flow" of a parameter block means the negative gradient of the mean
// cross-entropy loss with respect to it: the direction training moves it.

#include <cstdint>
#include <string>
#include <vector>

#include "embsig/linalg.hpp"
#include "embsig/model.hpp"

namespace embsig {

// --- measured flows -------------------------------------------------------

// Column `token` of -d_w_e: the update direction of that embedding column.
Vector measured_embedding_flow(const GradResult& grads, std::size_t token);

// Row `label` of -d_w_u: the update direction of that unembedding row.
Vector measured_unembedding_flow(const GradResult& grads, std::size_t label);

// --- exact decomposition ---------------------------------------------------

// Splits each flow into a label-attraction term and a prediction-repulsion
// term, computed independently sample by sample.  For untied models,
//   -d_w_e     == emb_label   - emb_pred      (entrywise, up to roundoff)
//   -d_w_u     == unemb_label - unemb_pred
// For tied models the single gradient combines both paths:
//   -d_w_e == (emb_label - emb_pred) + transpose(unemb_label - unemb_pred).
struct FlowDecomposition {
    Matrix emb_label;    // d x d_vob
    Matrix emb_pred;     // d x d_vob
    Matrix unemb_label;  // d_vob x d
    Matrix unemb_pred;   // d_vob x d
};

FlowDecomposition flow_decomposition(const ModelParams& params,
                                     const std::vector<std::uint32_t>& inputs, std::size_t arity,
                                     const std::vector<std::uint32_t>& targets);

// --- signature-based predictors --------------------------------------------

// Sign of the co-occurrence correction in the linear embedding predictor.
enum class CooccurrenceSign { Minus, Plus };

std::string cooccurrence_sign_name(CooccurrenceSign s);
CooccurrenceSign cooccurrence_sign_from_name(const std::string& name);

// Linear model, embedding column of a token with membership rate `rate`,
// label signature `phi_y` and co-occurrence signature `phi_x` (self entry 1):
//   rate * W_U^T (phi_y -/+ (1/d_vob) W_U W_E phi_x)
Vector predict_emb_linear(const Matrix& w_e, const Matrix& w_u, const Vector& phi_y,
                          const Vector& phi_x, double rate,
                          CooccurrenceSign sign = CooccurrenceSign::Minus);

// Quadratic-activation model, embedding column.  `phi_x_given_y` holds one
// co-occurrence row per label (self entry 1).  The prediction contracts the
// label-conditional co-occurrence against both weight matrices:
//   sum_nu rate*phi_y(nu) * (W_U[nu,:] elementwise* (W_E phi_x_given_y[nu,:]))
// plus, when `include_linear_term`, the first-order part rate * W_U^T phi_y.
Vector predict_emb_ffn(const Matrix& w_e, const Matrix& w_u, const Matrix& phi_x_given_y,
                       const Vector& phi_y, double rate, bool include_linear_term);

// Linear model, unembedding row of a label with output rate `rate` and
// membership signature `varphi_x`:  arity * rate * (W_E varphi_x).
Vector predict_unemb_linear(const Matrix& w_e, const Vector& varphi_x, double rate,
                            std::size_t arity = 3);

// Bigram language model predictors.
Vector predict_lm_embedding(const Matrix& w_u, const Vector& phi_next, double rate_in);
Vector predict_lm_unembedding(const Matrix& w_e, const Vector& varphi_pre, double rate_out);
Vector predict_lm_tied(const Matrix& w_e, const Vector& tilde_phi, double rate);

// --- comparison ------------------------------------------------------------

struct OracleComparison {
    double cosine = 0.0;               // alignment of predicted vs measured
    double relative_norm_error = 0.0;  // | ||pred|| - ||meas|| | / ||meas||
    double pred_norm = 0.0;
    double measured_norm = 0.0;
};

OracleComparison compare_flows(const Vector& predicted, const Vector& measured);

// --- numerical checks -------------------------------------------------------

// Max entrywise gap between softmax(f) and its first-order expansion
// around the uniform point: 1/n + f_i/n - mean(f)/n.
double softmax_linearization_gap(const Vector& logits);

// Central finite-difference check of loss_and_grads over every parameter
// entry.  Returns the max relative error; intended for small models.
double finite_difference_max_error(const ModelParams& params,
                                   const std::vector<std::uint32_t>& inputs, std::size_t arity,
                                   const std::vector<std::uint32_t>& targets,
                                   double epsilon = 1e-5);

} // namespace embsig
