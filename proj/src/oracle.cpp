#include "embsig/oracle.hpp"

#include <algorithm>
#include <cmath>

#include "embsig/error.hpp"

namespace embsig {

Vector measured_embedding_flow(const GradResult& grads, std::size_t token) {
    if (token >= grads.d_w_e.cols) {
        throw data_error("measured_embedding_flow: token " + std::to_string(token) +
                         " outside gradient with " + std::to_string(grads.d_w_e.cols) +
                         " columns");
    }
    Vector flow(grads.d_w_e.rows);
    for (std::size_t r = 0; r < grads.d_w_e.rows; ++r) flow[r] = -grads.d_w_e(r, token);
    return flow;
}

Vector measured_unembedding_flow(const GradResult& grads, std::size_t label) {
    if (grads.d_w_u.data.empty()) {
        throw data_error("measured_unembedding_flow: no unembedding gradient (tied model?)");
    }
    if (label >= grads.d_w_u.rows) {
        throw data_error("measured_unembedding_flow: label " + std::to_string(label) +
                         " outside gradient with " + std::to_string(grads.d_w_u.rows) + " rows");
    }
    Vector flow(grads.d_w_u.cols);
    for (std::size_t c = 0; c < grads.d_w_u.cols; ++c) flow[c] = -grads.d_w_u(label, c);
    return flow;
}

FlowDecomposition flow_decomposition(const ModelParams& params,
                                     const std::vector<std::uint32_t>& inputs, std::size_t arity,
                                     const std::vector<std::uint32_t>& targets) {
    if (arity == 0 || inputs.size() != targets.size() * arity || targets.empty()) {
        throw data_error("flow_decomposition: inputs/targets size mismatch");
    }
    const std::size_t d = params.d, v = params.d_vob, n = targets.size();
    const Matrix w_u = params.unembedding();

    FlowDecomposition out;
    out.emb_label = Matrix(d, v, 0.0);
    out.emb_pred = Matrix(d, v, 0.0);
    out.unemb_label = Matrix(v, d, 0.0);
    out.unemb_pred = Matrix(v, d, 0.0);

    Vector hidden(d), act(d), dact(d), logits(v), probs(v);
    Vector gamma_label(d), gamma_pred(d);
    const double inv_n = 1.0 / static_cast<double>(n);

    for (std::size_t i = 0; i < n; ++i) {
        const std::uint32_t* toks = &inputs[i * arity];
        std::fill(hidden.begin(), hidden.end(), 0.0);
        for (std::size_t t = 0; t < arity; ++t) {
            for (std::size_t r = 0; r < d; ++r) hidden[r] += params.w_e(r, toks[t]);
        }
        for (std::size_t r = 0; r < d; ++r) {
            act[r] = apply_activation(params.activation, hidden[r]);
            dact[r] = activation_derivative(params.activation, hidden[r]);
        }
        for (std::size_t nu = 0; nu < v; ++nu) {
            double s = 0.0;
            for (std::size_t r = 0; r < d; ++r) s += w_u(nu, r) * act[r];
            logits[nu] = s;
        }
        probs = softmax(logits);
        const std::size_t y = targets[i];

        // Unembedding rows: label term collects act at the true label,
        // prediction term collects probability-weighted act everywhere.
        for (std::size_t r = 0; r < d; ++r) {
            out.unemb_label(y, r) += act[r] * inv_n;
        }
        for (std::size_t nu = 0; nu < v; ++nu) {
            const double w = probs[nu] * inv_n;
            for (std::size_t r = 0; r < d; ++r) out.unemb_pred(nu, r) += w * act[r];
        }

        // Embedding columns: back through the activation, split by source.
        for (std::size_t r = 0; r < d; ++r) {
            gamma_label[r] = w_u(y, r) * dact[r];
            double s = 0.0;
            for (std::size_t nu = 0; nu < v; ++nu) s += probs[nu] * w_u(nu, r);
            gamma_pred[r] = s * dact[r];
        }
        for (std::size_t t = 0; t < arity; ++t) {
            const std::uint32_t tok = toks[t];
            for (std::size_t r = 0; r < d; ++r) {
                out.emb_label(r, tok) += gamma_label[r] * inv_n;
                out.emb_pred(r, tok) += gamma_pred[r] * inv_n;
            }
        }
    }
    return out;
}

std::string cooccurrence_sign_name(CooccurrenceSign s) {
    return s == CooccurrenceSign::Minus ? "minus" : "plus";
}

CooccurrenceSign cooccurrence_sign_from_name(const std::string& name) {
    if (name == "minus") return CooccurrenceSign::Minus;
    if (name == "plus") return CooccurrenceSign::Plus;
    throw data_error("unknown co-occurrence sign '" + name + "' (expected minus or plus)");
}

namespace {

Vector matvec(const Matrix& m, const Vector& x, const char* who) {
    if (m.cols != x.size()) {
        throw data_error(std::string(who) + ": matrix " + shape_string(m) +
                         " incompatible with vector of length " + std::to_string(x.size()));
    }
    Vector y(m.rows, 0.0);
    for (std::size_t r = 0; r < m.rows; ++r) {
        double s = 0.0;
        for (std::size_t c = 0; c < m.cols; ++c) s += m(r, c) * x[c];
        y[r] = s;
    }
    return y;
}

Vector matvec_transposed(const Matrix& m, const Vector& x, const char* who) {
    if (m.rows != x.size()) {
        throw data_error(std::string(who) + ": matrix " + shape_string(m) +
                         " incompatible with transposed vector of length " +
                         std::to_string(x.size()));
    }
    Vector y(m.cols, 0.0);
    for (std::size_t r = 0; r < m.rows; ++r) {
        const double xr = x[r];
        if (xr == 0.0) continue;
        for (std::size_t c = 0; c < m.cols; ++c) y[c] += xr * m(r, c);
    }
    return y;
}

} // namespace

Vector predict_emb_linear(const Matrix& w_e, const Matrix& w_u, const Vector& phi_y,
                          const Vector& phi_x, double rate, CooccurrenceSign sign) {
    if (phi_y.size() != w_u.rows || phi_x.size() != w_e.cols) {
        throw data_error("predict_emb_linear: signature lengths do not match vocab size");
    }
    const double scale = 1.0 / static_cast<double>(w_u.rows);
    const Vector we_phi = matvec(w_e, phi_x, "predict_emb_linear");
    const Vector correction = matvec(w_u, we_phi, "predict_emb_linear");
    Vector inner(phi_y.size());
    const double s = sign == CooccurrenceSign::Minus ? -1.0 : 1.0;
    for (std::size_t i = 0; i < inner.size(); ++i) inner[i] = phi_y[i] + s * scale * correction[i];
    Vector pred = matvec_transposed(w_u, inner, "predict_emb_linear");
    for (double& x : pred) x *= rate;
    return pred;
}

Vector predict_emb_ffn(const Matrix& w_e, const Matrix& w_u, const Matrix& phi_x_given_y,
                       const Vector& phi_y, double rate, bool include_linear_term) {
    const std::size_t v = w_u.rows, d = w_u.cols;
    if (phi_y.size() != v || phi_x_given_y.rows != v || phi_x_given_y.cols != w_e.cols) {
        throw data_error("predict_emb_ffn: signature shapes do not match vocab size");
    }
    Vector pred(d, 0.0);
    Vector row(w_e.cols);
    for (std::size_t nu = 0; nu < v; ++nu) {
        const double weight = rate * phi_y[nu];
        if (weight == 0.0) continue;
        for (std::size_t x = 0; x < w_e.cols; ++x) row[x] = phi_x_given_y(nu, x);
        const Vector we_row = matvec(w_e, row, "predict_emb_ffn");
        for (std::size_t r = 0; r < d; ++r) pred[r] += weight * w_u(nu, r) * we_row[r];
    }
    if (include_linear_term) {
        Vector scaled = phi_y;
        for (double& x : scaled) x *= rate;
        const Vector linear = matvec_transposed(w_u, scaled, "predict_emb_ffn");
        for (std::size_t r = 0; r < d; ++r) pred[r] += linear[r];
    }
    return pred;
}

Vector predict_unemb_linear(const Matrix& w_e, const Vector& varphi_x, double rate,
                            std::size_t arity) {
    Vector pred = matvec(w_e, varphi_x, "predict_unemb_linear");
    const double scale = rate * static_cast<double>(arity);
    for (double& x : pred) x *= scale;
    return pred;
}

Vector predict_lm_embedding(const Matrix& w_u, const Vector& phi_next, double rate_in) {
    Vector pred = matvec_transposed(w_u, phi_next, "predict_lm_embedding");
    for (double& x : pred) x *= rate_in;
    return pred;
}

Vector predict_lm_unembedding(const Matrix& w_e, const Vector& varphi_pre, double rate_out) {
    Vector pred = matvec(w_e, varphi_pre, "predict_lm_unembedding");
    for (double& x : pred) x *= rate_out;
    return pred;
}

Vector predict_lm_tied(const Matrix& w_e, const Vector& tilde_phi, double rate) {
    Vector pred = matvec(w_e, tilde_phi, "predict_lm_tied");
    for (double& x : pred) x *= rate;
    return pred;
}

OracleComparison compare_flows(const Vector& predicted, const Vector& measured) {
    if (predicted.size() != measured.size()) {
        throw data_error("compare_flows: prediction length " + std::to_string(predicted.size()) +
                         " != measured length " + std::to_string(measured.size()));
    }
    OracleComparison cmp;
    cmp.pred_norm = norm2(predicted);
    cmp.measured_norm = norm2(measured);
    cmp.cosine = cosine(predicted, measured);
    if (cmp.measured_norm == 0.0) throw numeric_error("compare_flows: measured flow has zero norm");
    cmp.relative_norm_error = std::abs(cmp.pred_norm - cmp.measured_norm) / cmp.measured_norm;
    return cmp;
}

double softmax_linearization_gap(const Vector& logits) {
    if (logits.empty()) throw data_error("softmax_linearization_gap: empty logits");
    const Vector p = softmax(logits);
    const double n = static_cast<double>(logits.size());
    double mean = 0.0;
    for (double x : logits) mean += x;
    mean /= n;
    double gap = 0.0;
    for (std::size_t i = 0; i < logits.size(); ++i) {
        const double lin = 1.0 / n + logits[i] / n - mean / n;
        gap = std::max(gap, std::abs(p[i] - lin));
    }
    return gap;
}

double finite_difference_max_error(const ModelParams& params,
                                   const std::vector<std::uint32_t>& inputs, std::size_t arity,
                                   const std::vector<std::uint32_t>& targets, double epsilon) {
    const GradResult analytic = loss_and_grads(params, inputs, arity, targets);
    ModelParams probe = params;
    double worst = 0.0;

    auto check_block = [&](Matrix& block, const Matrix& grad) {
        for (std::size_t i = 0; i < block.data.size(); ++i) {
            const double saved = block.data[i];
            block.data[i] = saved + epsilon;
            const double up = evaluate(probe, inputs, arity, targets).loss;
            block.data[i] = saved - epsilon;
            const double down = evaluate(probe, inputs, arity, targets).loss;
            block.data[i] = saved;
            const double fd = (up - down) / (2.0 * epsilon);
            const double g = grad.data[i];
            const double scale = std::max({std::abs(fd), std::abs(g), 1e-8});
            worst = std::max(worst, std::abs(fd - g) / scale);
        }
    };

    check_block(probe.w_e, analytic.d_w_e);
    if (!params.tied) check_block(probe.w_u, analytic.d_w_u);
    return worst;
}

} // namespace embsig
