#include "embsig/model.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <set>

#include "embsig/error.hpp"
#include "embsig/rng.hpp"

namespace embsig {

std::string activation_name(Activation a) {
    switch (a) {
        case Activation::Identity: return "identity";
        case Activation::Relu: return "relu";
        case Activation::QuadraticTest: return "quadratic";
    }
    throw data_error("activation_name: unknown activation");
}

Activation activation_from_name(const std::string& name) {
    if (name == "identity") return Activation::Identity;
    if (name == "relu") return Activation::Relu;
    if (name == "quadratic") return Activation::QuadraticTest;
    throw data_error("unknown activation '" + name + "' (expected identity, relu or quadratic)");
}

double apply_activation(Activation a, double x) {
    switch (a) {
        case Activation::Identity: return x;
        case Activation::Relu: return x > 0.0 ? x : 0.0;
        case Activation::QuadraticTest: return x + 0.5 * x * x;
    }
    return x;
}

double activation_derivative(Activation a, double x) {
    switch (a) {
        case Activation::Identity: return 1.0;
        case Activation::Relu: return x > 0.0 ? 1.0 : 0.0;
        case Activation::QuadraticTest: return 1.0 + x;
    }
    return 1.0;
}

Matrix ModelParams::unembedding() const { return tied ? transpose(w_e) : w_u; }

ModelParams init_params(const InitConfig& cfg) {
    if (cfg.d == 0 || cfg.d_vob == 0) throw data_error("init_params: d and d_vob must be positive");
    ModelParams p;
    p.d = cfg.d;
    p.d_vob = cfg.d_vob;
    p.activation = cfg.activation;
    p.tied = cfg.tied;
    Rng rng(cfg.seed);
    const double std_e = cfg.fan_in_init
                             ? 1.0 / std::sqrt(static_cast<double>(cfg.d_vob))
                             : std::pow(static_cast<double>(cfg.d), -0.5 * cfg.init_exponent);
    const double std_u = cfg.fan_in_init
                             ? 1.0 / std::sqrt(static_cast<double>(cfg.d))
                             : std_e;
    p.w_e = Matrix(cfg.d, cfg.d_vob);
    for (double& x : p.w_e.data) x = std_e * gaussian(rng);
    if (!cfg.tied) {
        p.w_u = Matrix(cfg.d_vob, cfg.d);
        for (double& x : p.w_u.data) x = std_u * gaussian(rng);
    }
    return p;
}

namespace {

// Scratch buffers for one mini-batch; reused across steps.
struct BatchWork {
    std::vector<double> hidden;  // B x d, pre-activation
    std::vector<double> act;     // B x d
    std::vector<double> dact;    // B x d, activation derivative at hidden
    std::vector<double> logits;  // B x d_vob; overwritten with probabilities
    std::vector<double> delta;   // B x d_vob, p - onehot(target)

    void resize(std::size_t b, std::size_t d, std::size_t d_vob) {
        hidden.assign(b * d, 0.0);
        act.assign(b * d, 0.0);
        dact.assign(b * d, 0.0);
        logits.assign(b * d_vob, 0.0);
        delta.assign(b * d_vob, 0.0);
    }
};

// Forward/backward over one index set.  Grad sums (not means) accumulate
// into grads; loss_sum / correct accumulate likewise.  grads may be null
// for evaluation-only passes.
void run_chunk(const ModelParams& params, const std::vector<std::uint32_t>& inputs,
               std::size_t arity, const std::vector<std::uint32_t>& targets,
               const std::uint32_t* index, std::size_t count, BatchWork& w, GradResult* grads,
               double& loss_sum, std::size_t& correct) {
    const std::size_t d = params.d, v = params.d_vob;
    w.resize(count, d, v);

    for (std::size_t b = 0; b < count; ++b) {
        const std::size_t row = index ? index[b] : b;
        const std::uint32_t* toks = &inputs[row * arity];
        double* h = &w.hidden[b * d];
        for (std::size_t t = 0; t < arity; ++t) {
            const std::uint32_t tok = toks[t];
            const double* col = &params.w_e.data[tok];
            for (std::size_t r = 0; r < d; ++r) h[r] += col[r * v];
        }
        double* a = &w.act[b * d];
        double* da = &w.dact[b * d];
        for (std::size_t r = 0; r < d; ++r) {
            a[r] = apply_activation(params.activation, h[r]);
            da[r] = activation_derivative(params.activation, h[r]);
        }
        double* l = &w.logits[b * v];
        if (params.tied) {
            for (std::size_t r = 0; r < d; ++r) {
                const double ar = a[r];
                if (ar == 0.0) continue;
                const double* erow = &params.w_e.data[r * v];
                for (std::size_t nu = 0; nu < v; ++nu) l[nu] += ar * erow[nu];
            }
        } else {
            for (std::size_t nu = 0; nu < v; ++nu) {
                const double* urow = &params.w_u.data[nu * d];
                double s = 0.0;
                for (std::size_t r = 0; r < d; ++r) s += urow[r] * a[r];
                l[nu] = s;
            }
        }

        // Stable cross-entropy: loss = logsumexp(l) - l[target].
        const std::size_t target = targets[row];
        double mx = l[0];
        std::size_t argmax = 0;
        for (std::size_t nu = 1; nu < v; ++nu) {
            if (l[nu] > mx) {
                mx = l[nu];
                argmax = nu;
            }
        }
        const double target_shifted = l[target] - mx;
        double z = 0.0;
        for (std::size_t nu = 0; nu < v; ++nu) {
            l[nu] = std::exp(l[nu] - mx);
            z += l[nu];
        }
        loss_sum += std::log(z) - target_shifted;
        if (argmax == target) ++correct;

        if (!grads) continue;
        double* dl = &w.delta[b * v];
        for (std::size_t nu = 0; nu < v; ++nu) dl[nu] = l[nu] / z;
        dl[target] -= 1.0;
    }

    if (!grads) return;

    if (params.tied) {
        // Unembedding path: column nu of w_e gains delta[nu] * act.
        for (std::size_t b = 0; b < count; ++b) {
            const double* a = &w.act[b * d];
            const double* dl = &w.delta[b * v];
            for (std::size_t r = 0; r < d; ++r) {
                const double ar = a[r];
                if (ar == 0.0) continue;
                double* grow = &grads->d_w_e.data[r * v];
                for (std::size_t nu = 0; nu < v; ++nu) grow[nu] += ar * dl[nu];
            }
        }
    } else {
        for (std::size_t b = 0; b < count; ++b) {
            const double* a = &w.act[b * d];
            const double* dl = &w.delta[b * v];
            for (std::size_t nu = 0; nu < v; ++nu) {
                const double dnu = dl[nu];
                if (dnu == 0.0) continue;
                double* urow = &grads->d_w_u.data[nu * d];
                for (std::size_t r = 0; r < d; ++r) urow[r] += dnu * a[r];
            }
        }
    }

    // Embedding path: back through the activation into each input column.
    for (std::size_t b = 0; b < count; ++b) {
        const std::size_t row = index ? index[b] : b;
        const double* dl = &w.delta[b * v];
        const double* da = &w.dact[b * d];
        double* gamma = &w.hidden[b * d]; // reuse as scratch
        if (params.tied) {
            for (std::size_t r = 0; r < d; ++r) {
                const double* erow = &params.w_e.data[r * v];
                double s = 0.0;
                for (std::size_t nu = 0; nu < v; ++nu) s += dl[nu] * erow[nu];
                gamma[r] = s * da[r];
            }
        } else {
            std::fill(gamma, gamma + d, 0.0);
            for (std::size_t nu = 0; nu < v; ++nu) {
                const double dnu = dl[nu];
                if (dnu == 0.0) continue;
                const double* urow = &params.w_u.data[nu * d];
                for (std::size_t r = 0; r < d; ++r) gamma[r] += dnu * urow[r];
            }
            for (std::size_t r = 0; r < d; ++r) gamma[r] *= da[r];
        }
        const std::uint32_t* toks = &inputs[row * arity];
        for (std::size_t t = 0; t < arity; ++t) {
            double* col = &grads->d_w_e.data[toks[t]];
            for (std::size_t r = 0; r < d; ++r) col[r * v] += gamma[r];
        }
    }
}

void check_encoding(const ModelParams& params, const std::vector<std::uint32_t>& inputs,
                    std::size_t arity, const std::vector<std::uint32_t>& targets,
                    const char* who) {
    if (arity == 0 || inputs.size() != targets.size() * arity) {
        throw data_error(std::string(who) + ": inputs/targets size mismatch (" +
                         std::to_string(inputs.size()) + " ids, arity " + std::to_string(arity) +
                         ", " + std::to_string(targets.size()) + " targets)");
    }
    if (targets.empty()) throw data_error(std::string(who) + ": empty dataset");
    for (std::uint32_t t : inputs) {
        if (t >= params.d_vob) {
            throw data_error(std::string(who) + ": token id " + std::to_string(t) +
                             " outside vocab of size " + std::to_string(params.d_vob));
        }
    }
    for (std::uint32_t t : targets) {
        if (t >= params.d_vob) {
            throw data_error(std::string(who) + ": target id " + std::to_string(t) +
                             " outside vocab of size " + std::to_string(params.d_vob));
        }
    }
}

constexpr std::size_t kEvalChunk = 256;

} // namespace

Vector forward_logits(const ModelParams& params, const std::vector<std::uint32_t>& tokens) {
    for (std::uint32_t t : tokens) {
        if (t >= params.d_vob) {
            throw data_error("forward_logits: token id " + std::to_string(t) +
                             " outside vocab of size " + std::to_string(params.d_vob));
        }
    }
    Vector hidden(params.d, 0.0);
    for (std::uint32_t t : tokens)
        for (std::size_t r = 0; r < params.d; ++r) hidden[r] += params.w_e(r, t);
    Vector act(params.d);
    for (std::size_t r = 0; r < params.d; ++r) act[r] = apply_activation(params.activation, hidden[r]);
    Vector logits(params.d_vob, 0.0);
    if (params.tied) {
        for (std::size_t r = 0; r < params.d; ++r)
            for (std::size_t nu = 0; nu < params.d_vob; ++nu) logits[nu] += act[r] * params.w_e(r, nu);
    } else {
        for (std::size_t nu = 0; nu < params.d_vob; ++nu) {
            double s = 0.0;
            for (std::size_t r = 0; r < params.d; ++r) s += params.w_u(nu, r) * act[r];
            logits[nu] = s;
        }
    }
    return logits;
}

GradResult loss_and_grads(const ModelParams& params, const std::vector<std::uint32_t>& inputs,
                          std::size_t arity, const std::vector<std::uint32_t>& targets) {
    check_encoding(params, inputs, arity, targets, "loss_and_grads");
    GradResult res;
    res.d_w_e = Matrix(params.d, params.d_vob, 0.0);
    if (!params.tied) res.d_w_u = Matrix(params.d_vob, params.d, 0.0);
    const std::size_t n = targets.size();
    BatchWork work;
    double loss_sum = 0.0;
    std::size_t correct = 0;
    std::vector<std::uint32_t> index(kEvalChunk);
    for (std::size_t start = 0; start < n; start += kEvalChunk) {
        const std::size_t count = std::min(kEvalChunk, n - start);
        for (std::size_t i = 0; i < count; ++i) index[i] = static_cast<std::uint32_t>(start + i);
        run_chunk(params, inputs, arity, targets, index.data(), count, work, &res, loss_sum,
                  correct);
    }
    const double inv = 1.0 / static_cast<double>(n);
    res.loss = loss_sum * inv;
    res.accuracy = static_cast<double>(correct) * inv;
    for (double& x : res.d_w_e.data) x *= inv;
    for (double& x : res.d_w_u.data) x *= inv;
    return res;
}

EvalResult evaluate(const ModelParams& params, const std::vector<std::uint32_t>& inputs,
                    std::size_t arity, const std::vector<std::uint32_t>& targets) {
    check_encoding(params, inputs, arity, targets, "evaluate");
    const std::size_t n = targets.size();
    BatchWork work;
    double loss_sum = 0.0;
    std::size_t correct = 0;
    std::vector<std::uint32_t> index(kEvalChunk);
    for (std::size_t start = 0; start < n; start += kEvalChunk) {
        const std::size_t count = std::min(kEvalChunk, n - start);
        for (std::size_t i = 0; i < count; ++i) index[i] = static_cast<std::uint32_t>(start + i);
        run_chunk(params, inputs, arity, targets, index.data(), count, work, nullptr, loss_sum,
                  correct);
    }
    return {loss_sum / static_cast<double>(n), static_cast<double>(correct) / static_cast<double>(n)};
}

void adamw_step(Matrix& param, AdamState& state, const Matrix& grad, const AdamConfig& cfg) {
    if (!param.same_shape(grad)) {
        throw data_error("adamw_step: gradient shape " + shape_string(grad) +
                         " != parameter shape " + shape_string(param));
    }
    if (state.m.data.empty()) {
        state.m = Matrix(param.rows, param.cols, 0.0);
        state.v = Matrix(param.rows, param.cols, 0.0);
    }
    ++state.step;
    const double decay = 1.0 - cfg.lr * cfg.weight_decay;
    const double bc1 = 1.0 - std::pow(cfg.beta1, static_cast<double>(state.step));
    const double bc2 = 1.0 - std::pow(cfg.beta2, static_cast<double>(state.step));
    for (std::size_t i = 0; i < param.data.size(); ++i) {
        param.data[i] *= decay;
        const double g = grad.data[i];
        state.m.data[i] = cfg.beta1 * state.m.data[i] + (1.0 - cfg.beta1) * g;
        state.v.data[i] = cfg.beta2 * state.v.data[i] + (1.0 - cfg.beta2) * g * g;
        const double mhat = state.m.data[i] / bc1;
        const double vhat = state.v.data[i] / bc2;
        param.data[i] -= cfg.lr * mhat / (std::sqrt(vhat) + cfg.eps);
    }
}

std::vector<std::size_t> default_snapshot_epochs(std::size_t epochs) {
    std::set<std::size_t> at;
    for (std::size_t e : {std::size_t{1}, std::size_t{2}, std::size_t{5}, std::size_t{120}}) {
        if (e <= epochs) at.insert(e);
    }
    for (std::size_t e = 10; e <= epochs; e += 10) at.insert(e);
    at.insert(epochs);
    return {at.begin(), at.end()};
}

void encode_dataset(const Dataset& ds, std::vector<std::uint32_t>& inputs,
                    std::vector<std::uint32_t>& targets) {
    inputs.clear();
    targets.clear();
    inputs.reserve(ds.samples.size() * 3);
    targets.reserve(ds.samples.size());
    for (const Sample& s : ds.samples) {
        inputs.push_back(static_cast<std::uint32_t>(ds.vocab.to_id(s.z)));
        inputs.push_back(static_cast<std::uint32_t>(ds.vocab.to_id(s.a1)));
        inputs.push_back(static_cast<std::uint32_t>(ds.vocab.to_id(s.a2)));
        targets.push_back(static_cast<std::uint32_t>(ds.vocab.to_id(s.label)));
    }
}

void encode_bigrams(const TokenStream& stream, std::vector<std::uint32_t>& inputs,
                    std::vector<std::uint32_t>& targets) {
    inputs.clear();
    targets.clear();
    for (const auto& seq : stream.sequences) {
        for (std::size_t i = 0; i + 1 < seq.size(); ++i) {
            inputs.push_back(seq[i]);
            targets.push_back(seq[i + 1]);
        }
    }
    if (targets.empty()) throw data_error("encode_bigrams: stream has no bigrams");
}

namespace {

TrainResult train_core(const std::vector<std::uint32_t>& inputs, std::size_t arity,
                       const std::vector<std::uint32_t>& targets, std::size_t d_vob,
                       const TrainConfig& cfg) {
    if (cfg.batch == 0) throw data_error("train: batch size must be positive");
    if (cfg.epochs == 0) throw data_error("train: epochs must be positive");

    InitConfig init;
    init.d = cfg.d;
    init.d_vob = d_vob;
    init.activation = cfg.activation;
    init.tied = cfg.tied;
    init.init_exponent = cfg.init_exponent;
    init.fan_in_init = cfg.fan_in_init;
    init.seed = cfg.seed;

    TrainResult result;
    result.params = init_params(init);
    check_encoding(result.params, inputs, arity, targets, "train");

    const std::size_t n = targets.size();
    const std::size_t steps_per_epoch = (n + cfg.batch - 1) / cfg.batch;
    const std::size_t total_steps = steps_per_epoch * cfg.epochs;

    std::vector<std::size_t> snapshot_epochs =
        cfg.snapshot_epochs.empty() ? default_snapshot_epochs(cfg.epochs) : cfg.snapshot_epochs;
    std::sort(snapshot_epochs.begin(), snapshot_epochs.end());

    AdamConfig adam;
    adam.lr = cfg.lr;
    adam.weight_decay = cfg.weight_decay;
    AdamState state_e, state_u;

    // Separate stream from the init draw so the two concerns stay decoupled.
    Rng shuffle_rng(cfg.seed ^ 0xda3e39cb94b95bdbULL);
    std::vector<std::uint32_t> perm(n);
    for (std::size_t i = 0; i < n; ++i) perm[i] = static_cast<std::uint32_t>(i);

    BatchWork work;
    GradResult grads;
    grads.d_w_e = Matrix(cfg.d, d_vob, 0.0);
    if (!cfg.tied) grads.d_w_u = Matrix(d_vob, cfg.d, 0.0);

    std::size_t global_step = 0;
    double window_loss = 0.0;
    std::size_t window_n = 0, window_correct = 0;

    for (std::size_t epoch = 1; epoch <= cfg.epochs; ++epoch) {
        shuffle(perm, shuffle_rng);
        double epoch_loss = 0.0;
        std::size_t epoch_correct = 0;

        for (std::size_t start = 0; start < n; start += cfg.batch) {
            const std::size_t count = std::min(cfg.batch, n - start);
            std::fill(grads.d_w_e.data.begin(), grads.d_w_e.data.end(), 0.0);
            std::fill(grads.d_w_u.data.begin(), grads.d_w_u.data.end(), 0.0);
            double loss_sum = 0.0;
            std::size_t correct = 0;
            run_chunk(result.params, inputs, arity, targets, &perm[start], count, work, &grads,
                      loss_sum, correct);
            if (!std::isfinite(loss_sum)) {
                throw numeric_error("training diverged: non-finite loss at step " +
                                    std::to_string(global_step + 1) + " (epoch " +
                                    std::to_string(epoch) + ")");
            }
            const double inv = 1.0 / static_cast<double>(count);
            for (double& x : grads.d_w_e.data) x *= inv;
            for (double& x : grads.d_w_u.data) x *= inv;

            AdamConfig step_cfg = adam;
            if (cfg.schedule == LrSchedule::Cosine) {
                step_cfg.lr = adam.lr * 0.5 *
                              (1.0 + std::cos(std::numbers::pi * static_cast<double>(global_step) /
                                              static_cast<double>(total_steps)));
            }
            adamw_step(result.params.w_e, state_e, grads.d_w_e, step_cfg);
            if (!cfg.tied) adamw_step(result.params.w_u, state_u, grads.d_w_u, step_cfg);

            ++global_step;
            epoch_loss += loss_sum;
            epoch_correct += correct;
            window_loss += loss_sum;
            window_correct += correct;
            window_n += count;
            if (cfg.log_every > 0 && global_step % cfg.log_every == 0 &&
                !(start + count >= n)) {
                result.timeline.push_back({global_step, epoch,
                                           window_loss / static_cast<double>(window_n),
                                           static_cast<double>(window_correct) /
                                               static_cast<double>(window_n)});
                window_loss = 0.0;
                window_n = 0;
                window_correct = 0;
            }
        }

        result.timeline.push_back({global_step, epoch, epoch_loss / static_cast<double>(n),
                                   static_cast<double>(epoch_correct) / static_cast<double>(n)});
        window_loss = 0.0;
        window_n = 0;
        window_correct = 0;

        if (std::binary_search(snapshot_epochs.begin(), snapshot_epochs.end(), epoch)) {
            result.snapshots.push_back(
                {epoch, global_step, result.params.w_e, result.params.unembedding()});
        }
    }

    const EvalResult final_eval = evaluate(result.params, inputs, arity, targets);
    result.final_loss = final_eval.loss;
    result.final_accuracy = final_eval.accuracy;
    return result;
}

} // namespace

TrainResult train(const Dataset& ds, const TrainConfig& cfg) {
    std::vector<std::uint32_t> inputs, targets;
    encode_dataset(ds, inputs, targets);
    return train_core(inputs, 3, targets, ds.vocab.size(), cfg);
}

TrainResult train_bigram_lm(const TokenStream& stream, std::size_t vocab_size,
                            const TrainConfig& cfg) {
    std::vector<std::uint32_t> inputs, targets;
    encode_bigrams(stream, inputs, targets);
    return train_core(inputs, 1, targets, vocab_size, cfg);
}

} // namespace embsig
