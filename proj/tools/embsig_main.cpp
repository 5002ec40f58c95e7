// embsig: a desk-scale laboratory for studying how co-occurrence structure in
// training data shapes the geometry of learned embedding matrices.
//
// Subcommands generate synthetic tasks and corpora, train small
// embedding/unembedding models, tabulate distribution signatures, compare
// closed-form flow predictions against measured gradients, evaluate geometry
// metrics over checkpoints, and collate a run directory into a static report.
//
// Every run directory receives the merged effective configuration, a manifest
// with content checksums, and a lock file while a command owns it.  Exit
// codes: 0 success, 1 usage error, 2 data error, 3 numeric failure.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <deque>
#include <filesystem>
#include <iostream>
#include <limits>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "embsig/corpus.hpp"
#include "embsig/error.hpp"
#include "embsig/io.hpp"
#include "embsig/linalg.hpp"
#include "embsig/metrics.hpp"
#include "embsig/model.hpp"
#include "embsig/oracle.hpp"
#include "embsig/report.hpp"
#include "embsig/signatures.hpp"
#include "embsig/svg.hpp"
#include "embsig/taskgen.hpp"

namespace fs = std::filesystem;

namespace {

using namespace embsig;

constexpr const char* kToolVersion = "0.1.0";

// --- small formatting helpers ----------------------------------------------

std::string g12(double v) {
    char b[48];
    std::snprintf(b, sizeof(b), "%.12g", v);
    return b;
}

std::string g4(double v) {
    char b[48];
    std::snprintf(b, sizeof(b), "%.4f", v);
    return b;
}

std::vector<std::string> token_labels(const std::vector<int>& tokens) {
    std::vector<std::string> out;
    out.reserve(tokens.size());
    for (int t : tokens) out.push_back(std::to_string(t));
    return out;
}

std::vector<std::string> index_labels(std::size_t n) {
    std::vector<std::string> out;
    out.reserve(n);
    for (std::size_t i = 0; i < n; ++i) out.push_back(std::to_string(i));
    return out;
}

std::vector<std::string> u32_labels(const std::vector<std::uint32_t>& tokens) {
    std::vector<std::string> out;
    out.reserve(tokens.size());
    for (std::uint32_t t : tokens) out.push_back(std::to_string(t));
    return out;
}

void write_csv_rows(const std::string& path, const std::string& header,
                    const std::vector<std::string>& rows) {
    std::string text = header + "\n";
    for (const std::string& r : rows) text += r + "\n";
    write_text_file(path, text);
}

// --- typed access into the resolved key=value configuration -----------------

// Anything wrong with a flag or config value is a usage problem, including
// enum names the library itself rejects as data errors.
template <typename F>
auto usage_wrap(F&& f) -> decltype(f()) {
    try {
        return std::forward<F>(f)();
    } catch (const Error& e) {
        throw usage_error(e.what());
    }
}

std::uint64_t to_u64(const std::map<std::string, std::string>& cfg, const std::string& key) {
    const std::string& v = cfg.at(key);
    try {
        std::size_t pos = 0;
        const unsigned long long out = std::stoull(v, &pos);
        if (pos != v.size()) throw std::invalid_argument("trailing characters");
        return out;
    } catch (const std::exception&) {
        throw usage_error(key + " must be a non-negative integer, got '" + v + "'");
    }
}

std::size_t to_size(const std::map<std::string, std::string>& cfg, const std::string& key) {
    return static_cast<std::size_t>(to_u64(cfg, key));
}

double to_f64(const std::map<std::string, std::string>& cfg, const std::string& key) {
    const std::string& v = cfg.at(key);
    try {
        std::size_t pos = 0;
        const double out = std::stod(v, &pos);
        if (pos != v.size()) throw std::invalid_argument("trailing characters");
        return out;
    } catch (const std::exception&) {
        throw usage_error(key + " must be a number, got '" + v + "'");
    }
}

bool to_bool(const std::map<std::string, std::string>& cfg, const std::string& key) {
    const std::string& v = cfg.at(key);
    if (v == "1" || v == "true") return true;
    if (v == "0" || v == "false") return false;
    throw usage_error(key + " must be 0/1/true/false, got '" + v + "'");
}

int to_token(const std::map<std::string, std::string>& cfg, const std::string& key) {
    const std::string& v = cfg.at(key);
    try {
        std::size_t pos = 0;
        const int out = std::stoi(v, &pos);
        if (pos != v.size()) throw std::invalid_argument("trailing characters");
        return out;
    } catch (const std::exception&) {
        throw usage_error(key + " must be a token value, got '" + v + "'");
    }
}

std::vector<int> to_token_set(const std::map<std::string, std::string>& cfg,
                              const std::string& key) {
    const std::string& v = cfg.at(key);
    if (v.empty()) return {};
    return usage_wrap([&] { return parse_token_set(v); });
}

// --- declarative per-subcommand parameters ----------------------------------
//
// Each parameter is addressable three ways with one precedence order:
// built-in default < config-file key < explicit command-line flag.  The
// resolved map is what gets persisted as effective_config.txt.

struct Param {
    std::string key;      // config-file key, e.g. "train.lr"
    std::string flag;     // flag name without dashes, e.g. "lr"
    std::string fallback; // default; flags ("is_flag") use "0"/"1"
    std::string help;
    bool is_flag = false;
};

class ParamSet {
  public:
    ParamSet(CLI::App* cmd, std::vector<Param> params) : params_(std::move(params)) {
        values_.resize(params_.size());
        bools_.resize(params_.size());
        for (std::size_t i = 0; i < params_.size(); ++i) {
            const Param& p = params_[i];
            const std::string name = "--" + p.flag;
            if (p.is_flag) {
                bools_[i] = false;
                options_.push_back(cmd->add_flag(name, bools_[i], p.help));
            } else {
                values_[i] = p.fallback;
                CLI::Option* opt = cmd->add_option(name, values_[i], p.help);
                if (!p.fallback.empty()) opt->default_str(p.fallback);
                options_.push_back(opt);
            }
        }
        cmd->add_option("--config", config_path_,
                        "key=value config file; explicit flags take precedence");
    }

    std::map<std::string, std::string> resolve() const {
        std::map<std::string, std::string> cfg;
        for (const Param& p : params_) cfg[p.key] = p.fallback;
        if (!config_path_.empty()) {
            for (const auto& [key, value] : parse_config_file(config_path_)) {
                if (cfg.find(key) == cfg.end()) {
                    throw usage_error("unknown config key '" + key + "' in " + config_path_);
                }
                cfg[key] = value;
            }
        }
        for (std::size_t i = 0; i < params_.size(); ++i) {
            if (options_[i]->count() == 0) continue;
            cfg[params_[i].key] = params_[i].is_flag ? (bools_[i] ? "1" : "0") : values_[i];
        }
        return cfg;
    }

  private:
    std::vector<Param> params_;
    std::deque<std::string> values_; // stable addresses for CLI11 bindings
    std::deque<bool> bools_;
    std::vector<CLI::Option*> options_;
    std::string config_path_;
};

std::string run_directory(const std::map<std::string, std::string>& cfg,
                          const std::string& default_name) {
    std::string name = cfg.at("name");
    if (name.empty()) name = default_name;
    return resolve_out_root(cfg.at("out")) + "/" + name;
}

// --- run-directory lifecycle -------------------------------------------------

class RunContext {
  public:
    RunContext(std::string dir, bool force, std::string command,
               const std::map<std::string, std::string>& effective)
        : dir_(std::move(dir)), t0_(std::chrono::steady_clock::now()) {
        prepare_run_dir(dir_, force);
        lock_.emplace(dir_);
        manifest_.command = std::move(command);
        const std::string text = config_to_text(effective);
        write_text_file(path("effective_config.txt"), text);
        add("effective_config.txt");
        manifest_.info["tool_version"] = kToolVersion;
        manifest_.info["config_fnv1a64"] = fnv1a64_hex(text);
    }

    const std::string& dir() const { return dir_; }
    std::string path(const std::string& rel) const { return dir_ + "/" + rel; }
    void add(const std::string& rel) { manifest_.add_file(dir_, rel); }
    void note(const std::string& key, const std::string& value) { manifest_.info[key] = value; }

    void finish() {
        const std::chrono::duration<double> dt = std::chrono::steady_clock::now() - t0_;
        char b[32];
        std::snprintf(b, sizeof(b), "%.1f", dt.count());
        manifest_.info["wall_seconds"] = b;
        write_manifest(path("manifest.json"), manifest_);
    }

  private:
    std::string dir_;
    std::optional<RunLock> lock_;
    RunManifest manifest_;
    std::chrono::steady_clock::time_point t0_;
};

// --- shared computations ------------------------------------------------------

double l1_gap(const Vector& a, const Vector& b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += std::abs(a[i] - b[i]);
    return s;
}

// How often each raw token appears in at least one input slot of a sample.
std::map<int, std::size_t> presence_counts(const Dataset& ds) {
    std::map<int, std::size_t> counts;
    for (const Sample& s : ds.samples) {
        int toks[3] = {s.z, s.a1, s.a2};
        std::sort(std::begin(toks), std::end(toks));
        int* last = std::unique(std::begin(toks), std::end(toks));
        for (int* it = std::begin(toks); it != last; ++it) ++counts[*it];
    }
    return counts;
}

std::map<int, std::size_t> label_counts(const Dataset& ds) {
    std::map<int, std::size_t> counts;
    for (const Sample& s : ds.samples) ++counts[s.label];
    return counts;
}

// Norm ratio of the two terms inside the linear embedding prediction: the
// label signature against the scaled co-occurrence correction.
double leading_term_dominance(const ModelParams& params, const Vector& phi_y,
                              const Vector& phi_x) {
    Vector tmp(params.w_e.rows, 0.0);
    for (std::size_t r = 0; r < params.w_e.rows; ++r) {
        double s = 0.0;
        for (std::size_t c = 0; c < params.w_e.cols; ++c) s += params.w_e(r, c) * phi_x[c];
        tmp[r] = s;
    }
    const double inv_v = 1.0 / static_cast<double>(params.d_vob);
    Vector correction(params.d_vob, 0.0);
    for (std::size_t r = 0; r < params.w_u.rows; ++r) {
        double s = 0.0;
        for (std::size_t c = 0; c < params.w_u.cols; ++c) s += params.w_u(r, c) * tmp[c];
        correction[r] = inv_v * s;
    }
    return norm2(phi_y) / norm2(correction);
}

// Pairs (i<j) ranked by sim_ref; per decile, the mean joint-percentile of the
// matching sim_probe entries.
Vector percentile_decile_curve(const Matrix& sim_ref, const Matrix& sim_probe) {
    Vector ref_vals, probe_vals;
    for (std::size_t i = 0; i < sim_ref.rows; ++i) {
        for (std::size_t j = i + 1; j < sim_ref.cols; ++j) {
            ref_vals.push_back(sim_ref(i, j));
            probe_vals.push_back(sim_probe(i, j));
        }
    }
    const Vector probe_pct = percentile_rank(probe_vals);
    std::vector<std::size_t> order(ref_vals.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    std::sort(order.begin(), order.end(),
              [&](std::size_t a, std::size_t b) { return ref_vals[a] < ref_vals[b]; });
    Vector curve(10, 0.0);
    const std::size_t m = order.size();
    for (std::size_t dec = 0; dec < 10; ++dec) {
        const std::size_t lo = dec * m / 10, hi = (dec + 1) * m / 10;
        double sum = 0.0;
        for (std::size_t k = lo; k < hi; ++k) sum += probe_pct[order[k]];
        curve[dec] = sum / static_cast<double>(hi - lo);
    }
    return curve;
}

// ============================================================================
// gen-task
// ============================================================================

int run_gen_task(const std::map<std::string, std::string>& cfg, bool force) {
    const TaskKind kind = usage_wrap([&] { return task_kind_from_name(cfg.at("task.kind")); });
    const TaskSpec spec =
        usage_wrap([&] { return make_task(kind, to_token_set(cfg, "task.anchors"),
                                          to_token_set(cfg, "task.keys")); });
    const std::size_t n = to_size(cfg, "task.n");
    if (n == 0) throw usage_error("task.n must be positive");
    const std::uint64_t seed = to_u64(cfg, "task.seed");

    const std::string dir = run_directory(cfg, "gen-" + task_kind_name(kind));
    RunContext ctx(dir, force, "gen-task", cfg);

    const Dataset ds = generate_dataset(spec, n, seed);
    write_dataset_csv(ctx.path("dataset.csv"), ds);
    ctx.add("dataset.csv");
    write_vocab_json(ctx.path("vocab.json"), ds.vocab);
    ctx.add("vocab.json");

    ctx.note("task", task_kind_name(kind));
    ctx.note("samples", std::to_string(n));
    ctx.note("vocab_size", std::to_string(ds.vocab.size()));
    ctx.note("label_count", std::to_string(spec.labels.size()));
    ctx.finish();

    std::cout << "gen-task: " << n << " samples of task " << task_kind_name(kind) << " (anchors "
              << format_token_set(spec.anchors) << ", keys " << format_token_set(spec.keys)
              << "), vocab " << ds.vocab.size() << " tokens\n"
              << "run directory: " << dir << "\n";
    return 0;
}

// ============================================================================
// train
// ============================================================================

int run_train(const std::map<std::string, std::string>& cfg, bool force) {
    const std::string data = cfg.at("data");
    const std::string corpus = cfg.at("corpus");
    if (data.empty() == corpus.empty()) {
        throw usage_error(
            "train needs exactly one of --data (task dataset) or --corpus (token file)");
    }

    const std::string arch = cfg.at("model.arch");
    std::string act_name = cfg.at("model.activation");
    if (arch == "linear") {
        if (act_name.empty()) act_name = "identity";
        if (act_name != "identity") {
            throw usage_error("--arch linear implies the identity activation");
        }
    } else if (arch == "ffn") {
        if (act_name.empty()) act_name = "relu";
        if (act_name == "identity") {
            throw usage_error(
                "--arch ffn needs a nonlinearity (relu or quadratic); use --arch linear instead");
        }
    } else {
        throw usage_error("unknown arch '" + arch + "' (expected linear or ffn)");
    }

    TrainConfig tc;
    tc.d = to_size(cfg, "model.d");
    tc.init_exponent = to_f64(cfg, "model.init-exponent");
    tc.fan_in_init = to_bool(cfg, "model.fan-in-init");
    tc.activation = usage_wrap([&] { return activation_from_name(act_name); });
    tc.tied = to_bool(cfg, "model.tied");
    tc.lr = to_f64(cfg, "train.lr");
    tc.weight_decay = to_f64(cfg, "train.weight-decay");
    tc.batch = to_size(cfg, "train.batch");
    tc.epochs = to_size(cfg, "train.epochs");
    tc.seed = to_u64(cfg, "train.seed");
    tc.log_every = to_size(cfg, "train.log-every");
    const std::string schedule = cfg.at("train.schedule");
    if (schedule == "constant") {
        tc.schedule = LrSchedule::Constant;
    } else if (schedule == "cosine") {
        tc.schedule = LrSchedule::Cosine;
    } else {
        throw usage_error("unknown schedule '" + schedule + "' (expected constant or cosine)");
    }
    for (int e : to_token_set(cfg, "train.snapshots")) {
        if (e < 1) throw usage_error("snapshot epochs are 1-based; got " + std::to_string(e));
        tc.snapshot_epochs.push_back(static_cast<std::size_t>(e));
    }

    // Load inputs before claiming the run directory so data problems leave
    // nothing half-written behind.
    std::optional<Dataset> ds;
    std::optional<TokenStream> stream;
    std::size_t dropped = 0;
    std::size_t vocab_size = 0;
    if (!data.empty()) {
        ds = read_dataset_csv(data);
        vocab_size = ds->vocab.size();
    } else {
        const StreamFormat format =
            usage_wrap([&] { return stream_format_from_name(cfg.at("corpus.format")); });
        IngestResult in = ingest_tokens(corpus, format, to_size(cfg, "corpus.seq-len"));
        dropped = in.dropped_tokens;
        stream = std::move(in.stream);
        vocab_size = static_cast<std::size_t>(stream->max_token()) + 1;
    }

    const std::string dir = run_directory(cfg, "train");
    RunContext ctx(dir, force, "train", cfg);

    ModelParams final_params;
    std::vector<TimelinePoint> timeline;
    std::vector<Snapshot> snaps;
    double final_loss = 0.0, final_acc = 0.0;

    if (tc.epochs == 0) {
        // Persist and evaluate the initialization without taking a step.
        InitConfig ic;
        ic.d = tc.d;
        ic.d_vob = vocab_size;
        ic.activation = tc.activation;
        ic.tied = tc.tied;
        ic.init_exponent = tc.init_exponent;
        ic.fan_in_init = tc.fan_in_init;
        ic.seed = tc.seed;
        final_params = init_params(ic);
        std::vector<std::uint32_t> inputs, targets;
        std::size_t arity = 1;
        if (ds) {
            encode_dataset(*ds, inputs, targets);
            arity = 3;
        } else {
            encode_bigrams(*stream, inputs, targets);
        }
        const EvalResult ev = evaluate(final_params, inputs, arity, targets);
        final_loss = ev.loss;
        final_acc = ev.accuracy;
        timeline.push_back({0, 0, ev.loss, ev.accuracy});
        snaps.push_back({0, 0, final_params.w_e, final_params.w_u});
    } else {
        TrainResult tr = ds ? train(*ds, tc) : train_bigram_lm(*stream, vocab_size, tc);
        final_params = std::move(tr.params);
        timeline = std::move(tr.timeline);
        snaps = std::move(tr.snapshots);
        final_loss = tr.final_loss;
        final_acc = tr.final_accuracy;
    }

    write_checkpoint(ctx.path("final.ckpt"), final_params);
    ctx.add("final.ckpt");
    write_timeline_jsonl(ctx.path("timeline.jsonl"), timeline);
    ctx.add("timeline.jsonl");
    for (const Snapshot& s : snaps) {
        char name[32];
        std::snprintf(name, sizeof(name), "snap_%06zu.ckpt", s.epoch);
        ModelParams p;
        p.d = final_params.d;
        p.d_vob = final_params.d_vob;
        p.activation = final_params.activation;
        p.tied = final_params.tied;
        p.w_e = s.w_e;
        p.w_u = s.w_u;
        write_checkpoint(ctx.path(name), p);
        ctx.add(name);
    }

    ctx.note("mode", ds ? "task" : "corpus");
    ctx.note("final_loss", g12(final_loss));
    ctx.note("final_accuracy", g12(final_acc));
    ctx.note("vocab_size", std::to_string(vocab_size));
    ctx.note("snapshot_count", std::to_string(snaps.size()));
    if (!timeline.empty()) ctx.note("steps", std::to_string(timeline.back().step));
    if (!data.empty()) {
        ctx.note("dataset", data);
    } else {
        ctx.note("corpus", corpus);
        ctx.note("dropped_tokens", std::to_string(dropped));
    }
    ctx.finish();

    std::cout << "train: " << (ds ? "task" : "corpus") << " mode, " << tc.epochs
              << " epochs; final loss=" << g4(final_loss) << ", accuracy=" << g4(final_acc)
              << ", snapshots=" << snaps.size() << "\n"
              << "run directory: " << dir << "\n";
    return 0;
}

// ============================================================================
// signatures
// ============================================================================

int run_signatures(const std::map<std::string, std::string>& cfg, bool force) {
    const std::string data = cfg.at("data");
    std::optional<Dataset> ds;
    TaskSpec spec;
    if (!data.empty()) {
        ds = read_dataset_csv(data);
        spec = ds->spec;
    } else {
        const TaskKind kind = usage_wrap([&] { return task_kind_from_name(cfg.at("task.kind")); });
        spec = usage_wrap([&] { return make_task(kind, to_token_set(cfg, "task.anchors"),
                                                 to_token_set(cfg, "task.keys")); });
    }
    const Vocabulary vocab = ds ? ds->vocab : task_vocabulary(spec);
    const std::vector<std::string> vocab_cols = token_labels(vocab.raw_tokens());
    const std::vector<std::string> anchor_rows = token_labels(spec.anchors);
    const std::vector<std::string> label_rows = token_labels(spec.labels);

    const std::string dir = run_directory(cfg, "signatures");
    RunContext ctx(dir, force, "signatures", cfg);

    // Exact laws of the generative process.
    Matrix phi_y(spec.anchors.size(), vocab.size());
    Matrix phi_x(spec.anchors.size(), vocab.size());
    for (std::size_t i = 0; i < spec.anchors.size(); ++i) {
        const Vector y = analytic_phi_y(spec, spec.anchors[i]);
        const Vector x = analytic_phi_X(spec, spec.anchors[i]);
        for (std::size_t c = 0; c < vocab.size(); ++c) {
            phi_y(i, c) = y[c];
            phi_x(i, c) = x[c];
        }
    }
    Matrix varphi(spec.labels.size(), vocab.size());
    for (std::size_t i = 0; i < spec.labels.size(); ++i) {
        const Vector v = analytic_varphi_X(spec, spec.labels[i]);
        for (std::size_t c = 0; c < vocab.size(); ++c) varphi(i, c) = v[c];
    }
    Matrix rates(2, vocab.size());
    {
        const Vector membership = analytic_membership_rate(spec);
        const Vector label = analytic_label_rate(spec);
        for (std::size_t c = 0; c < vocab.size(); ++c) {
            rates(0, c) = membership[c];
            rates(1, c) = label[c];
        }
    }

    write_matrix_csv(ctx.path("analytic_phi_y.csv"), phi_y, anchor_rows, vocab_cols);
    ctx.add("analytic_phi_y.csv");
    write_matrix_csv(ctx.path("analytic_phi_x.csv"), phi_x, anchor_rows, vocab_cols);
    ctx.add("analytic_phi_x.csv");
    write_matrix_csv(ctx.path("analytic_varphi_x.csv"), varphi, label_rows, vocab_cols);
    ctx.add("analytic_varphi_x.csv");
    write_matrix_csv(ctx.path("analytic_rates.csv"), rates, {"membership", "label"}, vocab_cols);
    ctx.add("analytic_rates.csv");

    HeatmapOptions vopt;
    vopt.title = "input-membership signature per label";
    vopt.row_labels = label_rows;
    vopt.col_labels = vocab_cols;
    vopt.symmetric_scale = false;
    write_heatmap_svg(ctx.path("varphi_x.svg"), varphi, vopt);
    ctx.add("varphi_x.svg");
    HeatmapOptions yopt;
    yopt.title = "label signature per anchor";
    yopt.row_labels = anchor_rows;
    yopt.col_labels = vocab_cols;
    yopt.symmetric_scale = false;
    write_heatmap_svg(ctx.path("phi_y.svg"), phi_y, yopt);
    ctx.add("phi_y.svg");

    if (ds) {
        const std::map<int, std::size_t> presence = presence_counts(*ds);
        const std::map<int, std::size_t> labels = label_counts(*ds);
        Matrix e_phi_y(spec.anchors.size(), vocab.size());
        Matrix e_phi_x(spec.anchors.size(), vocab.size());
        double worst_phi_y = 0.0, worst_phi_x = 0.0;
        std::size_t skipped = 0;
        for (std::size_t i = 0; i < spec.anchors.size(); ++i) {
            const int a = spec.anchors[i];
            if (presence.find(a) == presence.end()) {
                ++skipped; // row stays zero: the token never occurred
                continue;
            }
            const Vector y = empirical_phi_y(*ds, a);
            const Vector x = empirical_phi_X(*ds, a);
            for (std::size_t c = 0; c < vocab.size(); ++c) {
                e_phi_y(i, c) = y[c];
                e_phi_x(i, c) = x[c];
            }
            worst_phi_y = std::max(worst_phi_y, l1_gap(y, analytic_phi_y(spec, a)));
            worst_phi_x = std::max(worst_phi_x, l1_gap(x, analytic_phi_X(spec, a)));
        }
        Matrix e_varphi(spec.labels.size(), vocab.size());
        double worst_varphi = 0.0;
        for (std::size_t i = 0; i < spec.labels.size(); ++i) {
            const int nu = spec.labels[i];
            if (labels.find(nu) == labels.end()) {
                ++skipped;
                continue;
            }
            const Vector v = empirical_varphi_X(*ds, nu);
            for (std::size_t c = 0; c < vocab.size(); ++c) e_varphi(i, c) = v[c];
            worst_varphi = std::max(worst_varphi, l1_gap(v, analytic_varphi_X(spec, nu)));
        }
        write_matrix_csv(ctx.path("empirical_phi_y.csv"), e_phi_y, anchor_rows, vocab_cols);
        ctx.add("empirical_phi_y.csv");
        write_matrix_csv(ctx.path("empirical_phi_x.csv"), e_phi_x, anchor_rows, vocab_cols);
        ctx.add("empirical_phi_x.csv");
        write_matrix_csv(ctx.path("empirical_varphi_x.csv"), e_varphi, label_rows, vocab_cols);
        ctx.add("empirical_varphi_x.csv");
        ctx.note("max_l1_phi_y", g12(worst_phi_y));
        ctx.note("max_l1_phi_x", g12(worst_phi_x));
        ctx.note("max_l1_varphi_x", g12(worst_varphi));
        ctx.note("skipped_rows", std::to_string(skipped));
        std::cout << "signatures: max L1 gap empirical vs analytic: phi_y=" << g4(worst_phi_y)
                  << ", phi_x=" << g4(worst_phi_x) << ", varphi_x=" << g4(worst_varphi)
                  << " over n=" << ds->samples.size() << " samples";
        if (skipped > 0) std::cout << " (" << skipped << " unseen rows skipped)";
        std::cout << "\n";
    }

    if (!cfg.at("anchor").empty()) {
        const int a = to_token(cfg, "anchor");
        const std::string suffix = std::to_string(a) + ".csv";
        const Matrix ana = analytic_phi_X_given_y(spec, a);
        write_matrix_csv(ctx.path("analytic_phi_x_given_y_" + suffix), ana, vocab_cols,
                         vocab_cols);
        ctx.add("analytic_phi_x_given_y_" + suffix);
        if (ds) {
            const Matrix emp = empirical_phi_X_given_y(*ds, a);
            write_matrix_csv(ctx.path("empirical_phi_x_given_y_" + suffix), emp, vocab_cols,
                             vocab_cols);
            ctx.add("empirical_phi_x_given_y_" + suffix);
        }
    }

    ctx.finish();
    std::cout << "signatures: task " << task_kind_name(spec.kind) << ", vocab " << vocab.size()
              << " tokens, " << spec.labels.size() << " labels"
              << (ds ? " (analytic + empirical tables)" : " (analytic tables)") << "\n"
              << "run directory: " << dir << "\n";
    return 0;
}

// ============================================================================
// metrics
// ============================================================================

struct SnapshotFile {
    std::size_t epoch;
    std::string path;
};

std::vector<SnapshotFile> list_snapshots(const std::string& run) {
    std::vector<SnapshotFile> files;
    for (const fs::directory_entry& entry : fs::directory_iterator(run)) {
        const std::string name = entry.path().filename().string();
        if (name.rfind("snap_", 0) != 0 || name.size() <= 10 ||
            name.substr(name.size() - 5) != ".ckpt") {
            continue;
        }
        const std::string digits = name.substr(5, name.size() - 10);
        if (digits.empty() ||
            digits.find_first_not_of("0123456789") != std::string::npos) {
            continue;
        }
        files.push_back({static_cast<std::size_t>(std::stoull(digits)), entry.path().string()});
    }
    std::sort(files.begin(), files.end(),
              [](const SnapshotFile& a, const SnapshotFile& b) { return a.epoch < b.epoch; });
    return files;
}

int run_metrics(const std::map<std::string, std::string>& cfg, bool force) {
    const std::string run = cfg.at("run");
    if (run.empty()) throw usage_error("metrics needs --run <train run directory>");
    const std::string data = cfg.at("data");
    if (data.empty()) throw usage_error("metrics needs --data <dataset csv>");

    bool want_order = to_bool(cfg, "sections.r-order");
    bool want_sim = to_bool(cfg, "sections.similarity");
    bool want_unemb = to_bool(cfg, "sections.unemb");
    bool want_pca = to_bool(cfg, "sections.pca");
    if (!want_order && !want_sim && !want_unemb && !want_pca) {
        want_order = want_sim = want_unemb = want_pca = true;
    }

    const Dataset ds = read_dataset_csv(data);
    const ModelParams final_params = read_checkpoint(run + "/final.ckpt");
    if (final_params.d_vob != ds.vocab.size()) {
        throw data_error("vocabulary mismatch: checkpoint " + run + "/final.ckpt has " +
                         std::to_string(final_params.d_vob) + " tokens, dataset " + data +
                         " has " + std::to_string(ds.vocab.size()));
    }

    std::vector<int> tracked = to_token_set(cfg, "tokens");
    if (tracked.empty()) tracked = ds.spec.anchors;
    std::vector<std::size_t> ids;
    ids.reserve(tracked.size());
    for (int t : tracked) ids.push_back(ds.vocab.to_id(t));
    const std::vector<std::string> tracked_labels = token_labels(tracked);

    const std::string dir = run_directory(cfg, "metrics");
    RunContext ctx(dir, force, "metrics", cfg);

    const Matrix emb_cols = columns_subset(final_params.w_e, ids);

    if (want_order) {
        std::map<std::size_t, std::size_t> step_of_epoch;
        if (fs::exists(run + "/timeline.jsonl")) {
            for (const TimelinePoint& p : read_timeline_jsonl(run + "/timeline.jsonl")) {
                step_of_epoch[p.epoch] = p.step;
            }
        }
        const std::vector<SnapshotFile> files = list_snapshots(run);
        if (files.empty()) {
            throw data_error("no snapshot checkpoints (snap_*.ckpt) in '" + run + "'");
        }
        std::vector<Snapshot> snaps;
        snaps.reserve(files.size());
        for (const SnapshotFile& f : files) {
            ModelParams p = read_checkpoint(f.path);
            const auto it = step_of_epoch.find(f.epoch);
            snaps.push_back(
                {f.epoch, it == step_of_epoch.end() ? 0 : it->second, std::move(p.w_e),
                 std::move(p.w_u)});
        }
        const std::vector<StructurePoint> series = structure_timeline(snaps, ids);
        std::vector<std::string> rows;
        rows.reserve(series.size());
        for (const StructurePoint& p : series) {
            rows.push_back(std::to_string(p.epoch) + "," + std::to_string(p.step) + "," +
                           g12(p.order_score) + "," + g12(p.mean_cos));
        }
        write_csv_rows(ctx.path("order_timeline.csv"), "epoch,step,order_score,mean_cos", rows);
        ctx.add("order_timeline.csv");
        const StructurePoint& last = series.back();
        ctx.note("final_order_score", g12(last.order_score));
        ctx.note("final_mean_cos", g12(last.mean_cos));
        std::cout << "metrics: order timeline over " << series.size()
                  << " snapshots; final order score=" << g4(last.order_score)
                  << ", mean cos=" << g4(last.mean_cos) << "\n";
    }

    if (want_sim) {
        const Matrix sim = cosine_matrix(emb_cols);
        write_matrix_csv(ctx.path("emb_similarity.csv"), sim, tracked_labels, tracked_labels);
        ctx.add("emb_similarity.csv");
        HeatmapOptions opt;
        opt.title = "embedding cosine similarity (tracked tokens)";
        opt.row_labels = tracked_labels;
        opt.col_labels = tracked_labels;
        write_heatmap_svg(ctx.path("emb_similarity.svg"), sim, opt);
        ctx.add("emb_similarity.svg");
        ctx.note("emb_mean_offdiag_cos", g12(mean_offdiagonal(sim)));
        std::string order_text = "degenerate";
        try {
            order_text = g12(r_order(emb_cols));
        } catch (const Error& e) {
            if (e.kind() != ErrorKind::Numeric) throw;
        }
        ctx.note("emb_order_score", order_text);
        std::cout << "metrics: embedding similarity mean off-diagonal="
                  << g4(mean_offdiagonal(sim)) << ", order score=" << order_text << "\n";
        if (ds.spec.kind == TaskKind::ModAdd) {
            std::string ring_text = "degenerate";
            try {
                ring_text = g12(r_order_circular(emb_cols));
            } catch (const Error& e) {
                if (e.kind() != ErrorKind::Numeric) throw;
            }
            ctx.note("emb_circular_order_score", ring_text);
        }
    }

    if (want_unemb) {
        const Matrix w_u = final_params.unembedding();
        std::vector<std::size_t> label_ids;
        label_ids.reserve(ds.spec.labels.size());
        for (int nu : ds.spec.labels) label_ids.push_back(ds.vocab.to_id(nu));
        Matrix rows(w_u.cols, label_ids.size());
        for (std::size_t j = 0; j < label_ids.size(); ++j) {
            for (std::size_t r = 0; r < w_u.cols; ++r) rows(r, j) = w_u(label_ids[j], r);
        }
        const Matrix sim_u = cosine_matrix(rows);
        const std::vector<std::string> label_names = token_labels(ds.spec.labels);
        write_matrix_csv(ctx.path("unemb_similarity.csv"), sim_u, label_names, label_names);
        ctx.add("unemb_similarity.csv");
        HeatmapOptions opt;
        opt.title = "unembedding row cosine similarity (labels)";
        opt.row_labels = label_names;
        opt.col_labels = label_names;
        write_heatmap_svg(ctx.path("unemb_similarity.svg"), sim_u, opt);
        ctx.add("unemb_similarity.svg");

        Matrix sigs(ds.vocab.size(), label_ids.size());
        for (std::size_t j = 0; j < ds.spec.labels.size(); ++j) {
            const Vector v = analytic_varphi_X(ds.spec, ds.spec.labels[j]);
            for (std::size_t r = 0; r < v.size(); ++r) sigs(r, j) = v[r];
        }
        const Matrix sim_sig = cosine_matrix(sigs);
        write_matrix_csv(ctx.path("signature_similarity.csv"), sim_sig, label_names,
                         label_names);
        ctx.add("signature_similarity.csv");
        const double rc = r_cos(sim_u, sim_sig);
        ctx.note("unemb_signature_pearson", g12(rc));
        std::cout << "metrics: pearson(unembedding row cosines, signature cosines)=" << g4(rc)
                  << "\n";
        if (ds.spec.kind == TaskKind::ModAdd) {
            Vector offdiag;
            for (std::size_t i = 0; i < sim_u.rows; ++i) {
                for (std::size_t j = i + 1; j < sim_u.cols; ++j) offdiag.push_back(sim_u(i, j));
            }
            std::sort(offdiag.begin(), offdiag.end());
            const double wrap = sim_u(0, sim_u.cols - 1);
            const double median = offdiag[offdiag.size() / 2];
            ctx.note("ring_wrap_cos", g12(wrap));
            ctx.note("ring_median_offdiag", g12(median));
            std::cout << "metrics: ring wrap cosine=" << g4(wrap)
                      << " vs median off-diagonal=" << g4(median) << "\n";
        }
    }

    if (want_pca) {
        const PcaResult pca = pca_project(emb_cols, 1);
        Vector scores(pca.scores.cols);
        for (std::size_t i = 0; i < scores.size(); ++i) scores[i] = pca.scores(0, i);
        std::vector<std::string> rows;
        rows.reserve(scores.size());
        for (std::size_t i = 0; i < scores.size(); ++i) {
            rows.push_back(tracked_labels[i] + "," + g12(scores[i]));
        }
        write_csv_rows(ctx.path("pca.csv"), "token,score", rows);
        ctx.add("pca.csv");
        const std::size_t run_len = longest_monotone_subsequence(scores);
        ctx.note("pca_monotone_run", std::to_string(run_len));
        std::cout << "metrics: 1-D PCA longest monotone run " << run_len << "/" << scores.size()
                  << "\n";
    }

    ctx.finish();
    std::cout << "run directory: " << dir << "\n";
    return 0;
}

// ============================================================================
// oracle
// ============================================================================

std::string oracle_row(const std::string& token, const OracleComparison& cmp) {
    return token + "," + g12(cmp.cosine) + "," + g12(cmp.relative_norm_error) + "," +
           g12(cmp.pred_norm) + "," + g12(cmp.measured_norm);
}

int run_oracle(const std::map<std::string, std::string>& cfg, bool force) {
    const std::string basis = cfg.at("basis");
    const bool lm = basis == "cor4" || basis == "tied";
    if (!lm && basis != "cor1" && basis != "cor2" && basis != "cor3") {
        throw usage_error("unknown basis '" + basis +
                          "' (expected cor1, cor2, cor3, cor4 or tied)");
    }
    const std::string sign = cfg.at("sign");
    if (sign != "minus" && sign != "plus" && sign != "both") {
        throw usage_error("sign must be minus, plus or both, got '" + sign + "'");
    }
    const std::string sig_source = cfg.at("sig");
    if (sig_source != "analytic" && sig_source != "empirical") {
        throw usage_error("sig must be analytic or empirical, got '" + sig_source + "'");
    }
    const bool empirical = sig_source == "empirical";
    const std::size_t d = to_size(cfg, "model.d");
    const double exponent = to_f64(cfg, "model.init-exponent");
    const std::uint64_t seed = to_u64(cfg, "model.seed");

    const std::string data = cfg.at("data");
    const std::string corpus = cfg.at("corpus");
    if (lm && corpus.empty()) {
        throw usage_error("--basis " + basis + " needs --corpus <token file>");
    }
    if (!lm && data.empty()) {
        throw usage_error("--basis " + basis + " needs --data <dataset csv>");
    }

    if (!lm) {
        const Dataset ds = read_dataset_csv(data);
        const TaskSpec& spec = ds.spec;
        InitConfig ic;
        ic.d = d;
        ic.d_vob = ds.vocab.size();
        ic.activation = basis == "cor2" ? Activation::QuadraticTest : Activation::Identity;
        ic.init_exponent = exponent;
        ic.seed = seed;
        const ModelParams params = init_params(ic);
        std::vector<std::uint32_t> inputs, targets;
        encode_dataset(ds, inputs, targets);
        const GradResult grads = loss_and_grads(params, inputs, 3, targets);
        const double n = static_cast<double>(ds.samples.size());

        const std::string dir = run_directory(cfg, "oracle-" + basis);
        RunContext ctx(dir, force, "oracle", cfg);
        ctx.note("basis", basis);
        ctx.note("signatures", sig_source);

        if (basis == "cor1" || basis == "cor2") {
            const Vector ana_rates = analytic_membership_rate(spec);
            const std::map<int, std::size_t> presence = presence_counts(ds);
            std::map<std::string, std::vector<std::string>> rows; // per report file
            std::map<std::string, double> mean_cos;
            double dom_mean = 0.0, dom_min = std::numeric_limits<double>::infinity();
            std::size_t used = 0;
            for (int a : spec.anchors) {
                const std::size_t id = ds.vocab.to_id(a);
                const auto seen = presence.find(a);
                if (empirical && seen == presence.end()) continue;
                const double rate = empirical
                                        ? static_cast<double>(seen->second) / n
                                        : ana_rates[id];
                const Vector phi_y =
                    empirical ? empirical_phi_y(ds, a) : analytic_phi_y(spec, a);
                const Vector measured = measured_embedding_flow(grads, id);
                ++used;
                if (basis == "cor1") {
                    const Vector phi_x =
                        empirical ? empirical_phi_X(ds, a) : analytic_phi_X(spec, a);
                    const double dom = leading_term_dominance(params, phi_y, phi_x);
                    dom_mean += dom;
                    dom_min = std::min(dom_min, dom);
                    for (const std::string& s : {std::string("minus"), std::string("plus")}) {
                        if (sign != "both" && sign != s) continue;
                        const CooccurrenceSign cs = s == "minus" ? CooccurrenceSign::Minus
                                                                 : CooccurrenceSign::Plus;
                        const OracleComparison cmp = compare_flows(
                            predict_emb_linear(params.w_e, params.w_u, phi_y, phi_x, rate, cs),
                            measured);
                        rows["cor1_" + s + ".csv"].push_back(oracle_row(std::to_string(a), cmp) +
                                                             "," + g12(dom));
                        mean_cos["cor1_" + s + ".csv"] += cmp.cosine;
                    }
                } else {
                    const Matrix phi_xy = empirical ? empirical_phi_X_given_y(ds, a)
                                                    : analytic_phi_X_given_y(spec, a);
                    const OracleComparison cmp = compare_flows(
                        predict_emb_ffn(params.w_e, params.w_u, phi_xy, phi_y, rate, true),
                        measured);
                    rows["cor2.csv"].push_back(oracle_row(std::to_string(a), cmp));
                    mean_cos["cor2.csv"] += cmp.cosine;
                }
            }
            if (used == 0) throw data_error("no anchor of the task occurs in the dataset");
            const std::string header =
                basis == "cor1"
                    ? "token,cosine,relative_norm_error,pred_norm,measured_norm,dominance"
                    : "token,cosine,relative_norm_error,pred_norm,measured_norm";
            for (const auto& [file, file_rows] : rows) {
                write_csv_rows(ctx.path(file), header, file_rows);
                ctx.add(file);
                const double mean = mean_cos[file] / static_cast<double>(used);
                ctx.note("mean_cos_" + file.substr(0, file.size() - 4), g12(mean));
                std::cout << "oracle: " << file.substr(0, file.size() - 4)
                          << " mean cosine=" << g4(mean) << " over " << used << " anchors\n";
            }
            if (basis == "cor1") {
                dom_mean /= static_cast<double>(used);
                ctx.note("dominance_mean", g12(dom_mean));
                ctx.note("dominance_min", g12(dom_min));
                std::cout << "oracle: leading-term dominance mean=" << g4(dom_mean)
                          << "x, min=" << g4(dom_min) << "x\n";
            }
        } else { // cor3
            const Vector ana_rates = analytic_label_rate(spec);
            const std::map<int, std::size_t> counts = label_counts(ds);
            std::vector<std::string> rows;
            double mean = 0.0, weighted = 0.0, total_rate = 0.0;
            std::size_t used = 0;
            for (int nu : spec.labels) {
                const std::size_t id = ds.vocab.to_id(nu);
                const auto seen = counts.find(nu);
                if (empirical && seen == counts.end()) continue;
                const double rate =
                    empirical ? static_cast<double>(seen->second) / n : ana_rates[id];
                if (rate == 0.0) continue;
                const Vector varphi =
                    empirical ? empirical_varphi_X(ds, nu) : analytic_varphi_X(spec, nu);
                const OracleComparison cmp =
                    compare_flows(predict_unemb_linear(params.w_e, varphi, rate, 3),
                                  measured_unembedding_flow(grads, id));
                rows.push_back(oracle_row(std::to_string(nu), cmp));
                mean += cmp.cosine;
                weighted += rate * cmp.cosine;
                total_rate += rate;
                ++used;
            }
            if (used == 0) throw data_error("no label of the task occurs in the dataset");
            write_csv_rows(ctx.path("cor3.csv"),
                           "token,cosine,relative_norm_error,pred_norm,measured_norm", rows);
            ctx.add("cor3.csv");
            ctx.note("mean_cos_cor3", g12(mean / static_cast<double>(used)));
            ctx.note("rate_weighted_mean_cos_cor3", g12(weighted / total_rate));
            std::cout << "oracle: cor3 mean cosine=" << g4(mean / static_cast<double>(used))
                      << " (rate-weighted " << g4(weighted / total_rate) << ") over " << used
                      << " labels\n";
        }
        ctx.finish();
        std::cout << "run directory: " << ctx.dir() << "\n";
        return 0;
    }

    // Bigram language-model bases: cor4 (untied embedding/unembedding rows)
    // and tied (single shared matrix, summed signature).
    const StreamFormat format =
        usage_wrap([&] { return stream_format_from_name(cfg.at("corpus.format")); });
    const TokenStream stream = ingest_tokens(corpus, format, to_size(cfg, "corpus.seq-len")).stream;
    const std::size_t vocab = static_cast<std::size_t>(stream.max_token()) + 1;
    const BigramCounts counts = count_bigrams(stream);
    InitConfig ic;
    ic.d = d;
    ic.d_vob = vocab;
    ic.activation = Activation::Identity;
    ic.tied = basis == "tied";
    ic.init_exponent = exponent;
    ic.seed = seed;
    const ModelParams params = init_params(ic);
    std::vector<std::uint32_t> inputs, targets;
    encode_bigrams(stream, inputs, targets);
    const GradResult grads = loss_and_grads(params, inputs, 1, targets);
    const double total = static_cast<double>(counts.total_pairs);

    const std::string dir = run_directory(cfg, "oracle-" + basis);
    RunContext ctx(dir, force, "oracle", cfg);
    ctx.note("basis", basis);
    ctx.note("vocab_size", std::to_string(vocab));

    if (basis == "cor4") {
        std::vector<std::string> emb_rows, unemb_rows;
        double emb_mean = 0.0, unemb_mean = 0.0;
        std::size_t emb_used = 0, unemb_used = 0;
        for (std::uint32_t s = 0; s < vocab; ++s) {
            const double r_in = static_cast<double>(counts.nonfinal_count(s)) / total;
            const double r_out = static_cast<double>(counts.noninitial_count(s)) / total;
            if (r_in > 0.0) {
                const OracleComparison cmp = compare_flows(
                    predict_lm_embedding(params.w_u, corpus_phi_next(counts, s, vocab), r_in),
                    measured_embedding_flow(grads, s));
                emb_rows.push_back(oracle_row(std::to_string(s), cmp));
                emb_mean += cmp.cosine;
                ++emb_used;
            }
            if (r_out > 0.0) {
                const OracleComparison cmp = compare_flows(
                    predict_lm_unembedding(params.w_e, corpus_varphi_pre(counts, s, vocab),
                                           r_out),
                    measured_unembedding_flow(grads, s));
                unemb_rows.push_back(oracle_row(std::to_string(s), cmp));
                unemb_mean += cmp.cosine;
                ++unemb_used;
            }
        }
        if (emb_used == 0 || unemb_used == 0) {
            throw data_error("corpus has no usable bigram pairs");
        }
        const std::string header = "token,cosine,relative_norm_error,pred_norm,measured_norm";
        write_csv_rows(ctx.path("cor4_embedding.csv"), header, emb_rows);
        ctx.add("cor4_embedding.csv");
        write_csv_rows(ctx.path("cor4_unembedding.csv"), header, unemb_rows);
        ctx.add("cor4_unembedding.csv");
        emb_mean /= static_cast<double>(emb_used);
        unemb_mean /= static_cast<double>(unemb_used);
        ctx.note("mean_cos_cor4_embedding", g12(emb_mean));
        ctx.note("mean_cos_cor4_unembedding", g12(unemb_mean));
        std::cout << "oracle: cor4 embedding mean cosine=" << g4(emb_mean)
                  << ", unembedding mean cosine=" << g4(unemb_mean) << " over " << vocab
                  << " tokens\n";
    } else { // tied
        std::vector<std::string> rows;
        double mean = 0.0;
        std::size_t used = 0;
        for (std::uint32_t s = 0; s < vocab; ++s) {
            const double r_in = static_cast<double>(counts.nonfinal_count(s)) / total;
            const double r_out = static_cast<double>(counts.noninitial_count(s)) / total;
            if (r_in + r_out == 0.0) continue;
            const OracleComparison cmp = compare_flows(
                predict_lm_tied(params.w_e, tilde_phi(counts, s, vocab), 0.5 * (r_in + r_out)),
                measured_embedding_flow(grads, s));
            rows.push_back(oracle_row(std::to_string(s), cmp));
            mean += cmp.cosine;
            ++used;
        }
        if (used == 0) throw data_error("corpus has no usable bigram pairs");
        write_csv_rows(ctx.path("tied.csv"),
                       "token,cosine,relative_norm_error,pred_norm,measured_norm", rows);
        ctx.add("tied.csv");
        mean /= static_cast<double>(used);
        ctx.note("mean_cos_tied", g12(mean));
        std::cout << "oracle: tied-flow mean cosine=" << g4(mean) << " over " << used
                  << " tokens\n";
    }
    ctx.finish();
    std::cout << "run directory: " << ctx.dir() << "\n";
    return 0;
}

// ============================================================================
// corpus-sig
// ============================================================================

int run_corpus_sig(const std::map<std::string, std::string>& cfg, bool force) {
    const std::string input = cfg.at("input");
    const std::string generate = cfg.at("generate");
    if (input.empty() == generate.empty()) {
        throw usage_error("corpus-sig needs exactly one of --input (token file) or --generate "
                          "(example chain name)");
    }
    const std::size_t seq_len = to_size(cfg, "corpus.seq-len");

    TokenStream stream;
    std::optional<MarkovSpec> chain;
    std::size_t dropped = 0;
    if (!generate.empty()) {
        chain = usage_wrap([&] { return example_chain(generate); });
        stream = generate_markov(*chain, to_size(cfg, "gen.tokens"), seq_len,
                                 to_u64(cfg, "gen.seed"));
    } else {
        const StreamFormat format =
            usage_wrap([&] { return stream_format_from_name(cfg.at("corpus.format")); });
        IngestResult in = ingest_tokens(input, format, seq_len);
        dropped = in.dropped_tokens;
        stream = std::move(in.stream);
    }
    const std::size_t vocab = static_cast<std::size_t>(stream.max_token()) + 1;
    const BigramCounts counts = count_bigrams(stream);

    const std::string dir = run_directory(cfg, "corpus-sig");
    RunContext ctx(dir, force, "corpus-sig", cfg);

    if (chain) {
        std::ostringstream text;
        for (const std::vector<std::uint32_t>& seq : stream.sequences) {
            for (std::size_t i = 0; i < seq.size(); ++i) {
                if (i > 0) text << ' ';
                text << seq[i];
            }
            text << '\n';
        }
        write_text_file(ctx.path("tokens.txt"), text.str());
        ctx.add("tokens.txt");
        const std::vector<std::string> states = index_labels(chain->transition.rows);
        write_matrix_csv(ctx.path("transition.csv"), chain->transition, states, states);
        ctx.add("transition.csv");
    }
    write_bigram_counts_csv(ctx.path("bigram_counts.csv"), counts);
    ctx.add("bigram_counts.csv");

    const std::size_t top = to_size(cfg, "top");
    std::vector<std::uint32_t> selected;
    if (top > 0) {
        selected = top_frequent(stream, top);
    } else {
        selected.resize(vocab);
        for (std::size_t i = 0; i < vocab; ++i) selected[i] = static_cast<std::uint32_t>(i);
    }
    const std::vector<std::string> sel_labels = u32_labels(selected);
    const std::vector<std::string> vocab_labels = index_labels(vocab);
    Matrix next_m(selected.size(), vocab), pre_m(selected.size(), vocab),
        tilde_m(selected.size(), vocab);
    for (std::size_t i = 0; i < selected.size(); ++i) {
        const Vector next = corpus_phi_next(counts, selected[i], vocab);
        const Vector pre = corpus_varphi_pre(counts, selected[i], vocab);
        const Vector tilde = tilde_phi(counts, selected[i], vocab);
        for (std::size_t c = 0; c < vocab; ++c) {
            next_m(i, c) = next[c];
            pre_m(i, c) = pre[c];
            tilde_m(i, c) = tilde[c];
        }
    }
    write_matrix_csv(ctx.path("phi_next.csv"), next_m, sel_labels, vocab_labels);
    ctx.add("phi_next.csv");
    write_matrix_csv(ctx.path("varphi_pre.csv"), pre_m, sel_labels, vocab_labels);
    ctx.add("varphi_pre.csv");
    write_matrix_csv(ctx.path("tilde_phi.csv"), tilde_m, sel_labels, vocab_labels);
    ctx.add("tilde_phi.csv");
    HeatmapOptions opt;
    opt.title = "successor signature per token";
    opt.row_labels = sel_labels;
    opt.col_labels = vocab_labels;
    opt.symmetric_scale = false;
    write_heatmap_svg(ctx.path("phi_next.svg"), next_m, opt);
    ctx.add("phi_next.svg");

    ctx.note("total_tokens", std::to_string(stream.total_tokens()));
    ctx.note("sequences", std::to_string(stream.sequences.size()));
    ctx.note("bigram_pairs", std::to_string(counts.total_pairs));
    ctx.note("vocab_size", std::to_string(vocab));
    ctx.note("dropped_tokens", std::to_string(dropped));
    if (!generate.empty()) ctx.note("chain", generate);
    ctx.finish();

    std::cout << "corpus-sig: " << stream.total_tokens() << " tokens in "
              << stream.sequences.size() << " sequences, " << counts.total_pairs
              << " bigram pairs, vocab " << vocab << "\n"
              << "run directory: " << dir << "\n";
    return 0;
}

// ============================================================================
// align
// ============================================================================

int run_align(const std::map<std::string, std::string>& cfg, bool force) {
    const std::string run = cfg.at("run");
    if (run.empty()) throw usage_error("align needs --run <train run directory>");
    const std::string counts_path = cfg.at("counts");
    if (counts_path.empty()) throw usage_error("align needs --counts <bigram counts csv>");

    const ModelParams params = read_checkpoint(run + "/final.ckpt");
    const BigramCounts counts = read_bigram_counts_csv(counts_path);
    const std::size_t vocab = params.d_vob;

    std::vector<std::uint32_t> tokens;
    if (cfg.at("tokens").empty()) {
        tokens.resize(vocab);
        for (std::size_t i = 0; i < vocab; ++i) tokens[i] = static_cast<std::uint32_t>(i);
    } else {
        for (int t : to_token_set(cfg, "tokens")) {
            if (t < 0 || static_cast<std::size_t>(t) >= vocab) {
                throw usage_error("token " + std::to_string(t) +
                                  " is outside the checkpoint vocabulary [0, " +
                                  std::to_string(vocab) + ")");
            }
            tokens.push_back(static_cast<std::uint32_t>(t));
        }
    }
    if (tokens.size() * (tokens.size() - 1) / 2 < 10) {
        throw usage_error("align needs at least 5 tokens to form the decile curve");
    }

    std::vector<std::size_t> ids(tokens.begin(), tokens.end());
    const Matrix sim_emb = cosine_matrix(columns_subset(params.w_e, ids));
    Matrix sig(vocab, tokens.size());
    for (std::size_t j = 0; j < tokens.size(); ++j) {
        const Vector phi = corpus_phi_next(counts, tokens[j], vocab);
        for (std::size_t r = 0; r < vocab; ++r) sig(r, j) = phi[r];
    }
    const Matrix sim_sig = cosine_matrix(sig);

    const std::string dir = run_directory(cfg, "align");
    RunContext ctx(dir, force, "align", cfg);

    const std::vector<std::string> names = u32_labels(tokens);
    write_matrix_csv(ctx.path("emb_similarity.csv"), sim_emb, names, names);
    ctx.add("emb_similarity.csv");
    write_matrix_csv(ctx.path("signature_similarity.csv"), sim_sig, names, names);
    ctx.add("signature_similarity.csv");
    HeatmapOptions eopt;
    eopt.title = "embedding cosine similarity";
    eopt.row_labels = names;
    eopt.col_labels = names;
    write_heatmap_svg(ctx.path("emb_similarity.svg"), sim_emb, eopt);
    ctx.add("emb_similarity.svg");
    HeatmapOptions sopt;
    sopt.title = "successor-signature cosine similarity";
    sopt.row_labels = names;
    sopt.col_labels = names;
    write_heatmap_svg(ctx.path("signature_similarity.svg"), sim_sig, sopt);
    ctx.add("signature_similarity.svg");

    const double rc = r_cos(sim_emb, sim_sig);
    const PerTokenAlignment pta = per_token_alignment(sim_emb, sim_sig);
    std::vector<std::string> token_rows;
    token_rows.reserve(tokens.size());
    for (std::size_t i = 0; i < tokens.size(); ++i) {
        token_rows.push_back(names[i] + "," + g12(pta.r_d[i]) + "," + g12(pta.mean_cos[i]));
    }
    write_csv_rows(ctx.path("per_token.csv"), "token,r_d,mean_emb_cos", token_rows);
    ctx.add("per_token.csv");

    const Vector pct_curve = percentile_decile_curve(sim_emb, sim_sig);
    const Vector raw_curve = alignment_decile_curve(sim_sig, sim_emb);
    std::vector<std::string> curve_rows;
    for (std::size_t dec = 0; dec < 10; ++dec) {
        curve_rows.push_back(std::to_string(dec + 1) + "," + g12(pct_curve[dec]) + "," +
                             g12(raw_curve[dec]));
    }
    write_csv_rows(ctx.path("decile_curve.csv"), "decile,mean_sig_percentile,mean_sig_cos",
                   curve_rows);
    ctx.add("decile_curve.csv");

    ctx.note("similarity_pattern_pearson", g12(rc));
    ctx.note("decile_bottom", g12(pct_curve[0]));
    ctx.note("decile_top", g12(pct_curve[9]));
    ctx.finish();

    std::cout << "align: similarity-pattern pearson=" << g4(rc) << " over " << tokens.size()
              << " tokens\n"
              << "align: signature-percentile decile curve bottom=" << g4(pct_curve[0])
              << ", top=" << g4(pct_curve[9]) << "\n"
              << "run directory: " << dir << "\n";
    return 0;
}

// ============================================================================
// report
// ============================================================================

int run_report(const std::map<std::string, std::string>& cfg) {
    const std::string dir = cfg.at("run");
    if (dir.empty()) throw usage_error("report needs --run <run directory>");
    const std::string manifest_path = dir + "/manifest.json";
    if (!fs::exists(manifest_path)) {
        throw data_error("no manifest.json in '" + dir + "' (not a finished run directory?)");
    }
    RunLock lock(dir);

    nlohmann::json doc;
    try {
        doc = nlohmann::json::parse(read_text_file(manifest_path));
    } catch (const nlohmann::json::exception& e) {
        throw data_error("manifest.json: " + std::string(e.what()));
    }
    if (doc.value("format", "") != "embsig-manifest") {
        throw data_error("manifest.json in '" + dir + "' is not an embsig manifest");
    }
    const std::string command = doc.value("command", "unknown");

    std::vector<ReportSection> sections;
    std::vector<std::string> warnings;

    if (fs::exists(dir + "/effective_config.txt")) {
        sections.push_back(
            {"Configuration", "```\n" + read_text_file(dir + "/effective_config.txt") + "```\n"});
    } else {
        warnings.push_back("effective_config.txt is missing");
    }

    if (doc.contains("info") && doc["info"].is_object()) {
        std::ostringstream body;
        for (const auto& [key, value] : doc["info"].items()) {
            if (key == "wall_seconds") continue; // timing varies run to run
            body << "- " << key << ": " << value.get<std::string>() << "\n";
        }
        sections.push_back({"Results", body.str()});
    }

    std::size_t n_files = 0;
    std::vector<std::string> figures;
    {
        std::ostringstream body;
        body << "| file | bytes | checksum | status |\n|---|---:|---|---|\n";
        for (const nlohmann::json& f : doc.value("files", nlohmann::json::array())) {
            const std::string name = f.value("name", "");
            const std::string recorded = f.value("fnv1a64", "");
            ++n_files;
            std::string status = "ok";
            if (!fs::exists(dir + "/" + name)) {
                status = "missing";
                warnings.push_back("missing artifact: " + name);
            } else if (file_fnv1a64(dir + "/" + name) != recorded) {
                status = "modified";
                warnings.push_back("artifact changed since the manifest was written: " + name);
            } else if (name.size() > 4 && name.substr(name.size() - 4) == ".svg") {
                figures.push_back(name);
            }
            body << "| " << name << " | " << f.value("bytes", 0ULL) << " | " << recorded
                 << " | " << status << " |\n";
        }
        sections.push_back({"Files", body.str()});
    }

    if (!figures.empty()) {
        std::ostringstream body;
        for (const std::string& name : figures) body << "![" << name << "](" << name << ")\n\n";
        sections.push_back({"Figures", body.str()});
    }

    if (fs::exists(dir + "/timeline.jsonl")) {
        const std::vector<TimelinePoint> timeline = read_timeline_jsonl(dir + "/timeline.jsonl");
        if (!timeline.empty()) {
            const TimelinePoint& last = timeline.back();
            std::ostringstream body;
            body << "- points: " << timeline.size() << "\n- final: epoch " << last.epoch
                 << ", step " << last.step << ", loss " << g12(last.loss) << ", accuracy "
                 << g12(last.accuracy) << "\n";
            sections.push_back({"Timeline", body.str()});
        }
    }

    if (!warnings.empty()) {
        std::ostringstream body;
        for (const std::string& w : warnings) body << "- " << w << "\n";
        sections.push_back({"Warnings", body.str()});
    }

    write_run_index(dir, "embsig run: " + command, sections);
    for (const std::string& w : warnings) std::cerr << "warning: " << w << "\n";
    std::cout << "report: wrote " << dir << "/index.md (" << n_files << " files, "
              << warnings.size() << " warnings)\n";
    return 0;
}

// ============================================================================
// command registration
// ============================================================================

struct Command {
    CLI::App* app = nullptr;
    std::optional<ParamSet> params;
    bool force = false;
};

Param out_param() { return {"out", "out", "", "output root (default: $EMBSIG_OUT or 'runs')"}; }
Param name_param(const std::string& fallback) {
    return {"name", "name", "", "run directory name under the output root [" + fallback + "]"};
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"desk-scale laboratory for embedding-geometry experiments"};
    app.set_version_flag("--version", kToolVersion);
    app.require_subcommand(1);

    Command gen;
    gen.app = app.add_subcommand("gen-task", "generate a synthetic three-token task dataset");
    gen.params.emplace(gen.app, std::vector<Param>{
        {"task.kind", "task", "add", "task kind: add, add-same or mod"},
        {"task.anchors", "anchors", "", "anchor token set, e.g. 11:20 (default 11:20)"},
        {"task.keys", "keys", "", "key token set, e.g. 101:140 (default 101:140)"},
        {"task.n", "n", "50000", "number of samples"},
        {"task.seed", "seed", "7", "sampling seed"},
        out_param(), name_param("gen-<task>")});
    gen.app->add_flag("--force", gen.force, "write into a non-empty run directory");

    Command train_cmd;
    train_cmd.app = app.add_subcommand("train", "train an embedding/unembedding model");
    train_cmd.params.emplace(train_cmd.app, std::vector<Param>{
        {"data", "data", "", "task dataset CSV (task mode)"},
        {"corpus", "corpus", "", "token file (bigram language-model mode)"},
        {"corpus.format", "format", "text-int", "token file format: text-int or binary-u32"},
        {"corpus.seq-len", "seq-len", "512", "sequence length for corpus ingestion"},
        {"model.arch", "arch", "linear", "architecture: linear or ffn"},
        {"model.activation", "activation", "", "ffn activation: relu or quadratic [relu]"},
        {"model.tied", "tied", "0", "tie the unembedding to the embedding transpose", true},
        {"model.d", "d", "200", "embedding dimension"},
        {"model.init-exponent", "init-exponent", "0.8",
         "init scale: entry variance d^-exponent"},
        {"model.fan-in-init", "fan-in-init", "0", "use 1/fan-in init variance instead", true},
        {"train.lr", "lr", "1e-5", "AdamW learning rate"},
        {"train.weight-decay", "weight-decay", "0.01", "AdamW decoupled weight decay"},
        {"train.batch", "batch", "100", "mini-batch size"},
        {"train.epochs", "epochs", "1000", "training epochs (0: persist the init only)"},
        {"train.seed", "seed", "1", "init and shuffling seed"},
        {"train.schedule", "schedule", "constant", "lr schedule: constant or cosine"},
        {"train.snapshots", "snapshots", "",
         "epochs to snapshot, e.g. 1,2,10:12 (default cadence when empty)"},
        {"train.log-every", "log-every", "0", "extra timeline points every N steps"},
        out_param(), name_param("train")});
    train_cmd.app->add_flag("--force", train_cmd.force, "write into a non-empty run directory");

    Command sig;
    sig.app = app.add_subcommand("signatures",
                                 "tabulate analytic (and empirical) distribution signatures");
    sig.params.emplace(sig.app, std::vector<Param>{
        {"data", "data", "", "dataset CSV; adds empirical tables and L1 gaps"},
        {"task.kind", "task", "add", "task kind when no dataset is given"},
        {"task.anchors", "anchors", "", "anchor token set (default 11:20)"},
        {"task.keys", "keys", "", "key token set (default 101:140)"},
        {"anchor", "anchor", "", "also emit the label-conditional table of this token"},
        out_param(), name_param("signatures")});
    sig.app->add_flag("--force", sig.force, "write into a non-empty run directory");

    Command met;
    met.app = app.add_subcommand("metrics", "geometry metrics over a trained task run");
    met.params.emplace(met.app, std::vector<Param>{
        {"run", "run", "", "train run directory (final.ckpt, snap_*.ckpt)"},
        {"data", "data", "", "dataset CSV the run was trained on"},
        {"tokens", "tokens", "", "tracked token set (default: the task anchors)"},
        {"sections.r-order", "r-order", "0", "order-structure timeline over snapshots", true},
        {"sections.similarity", "similarity", "0", "final embedding similarity matrix", true},
        {"sections.unemb", "unemb", "0", "unembedding rows vs membership signatures", true},
        {"sections.pca", "pca", "0", "1-D PCA of tracked embeddings", true},
        out_param(), name_param("metrics")});
    met.app->add_flag("--force", met.force, "write into a non-empty run directory");

    Command ora;
    ora.app = app.add_subcommand("oracle",
                                 "compare closed-form flow predictions with measured gradients");
    ora.params.emplace(ora.app, std::vector<Param>{
        {"basis", "basis", "cor1",
         "predictor family: cor1, cor2, cor3 (task), cor4 or tied (corpus)"},
        {"sign", "sign", "minus", "cor1 co-occurrence correction sign: minus, plus or both"},
        {"sig", "sig", "analytic", "signature source: analytic or empirical"},
        {"data", "data", "", "dataset CSV (cor1/cor2/cor3)"},
        {"corpus", "corpus", "", "token file (cor4/tied)"},
        {"corpus.format", "format", "text-int", "token file format"},
        {"corpus.seq-len", "seq-len", "512", "sequence length for corpus ingestion"},
        {"model.d", "d", "200", "probe model embedding dimension"},
        {"model.init-exponent", "init-exponent", "0.8", "probe init exponent"},
        {"model.seed", "seed", "1", "probe init seed"},
        out_param(), name_param("oracle-<basis>")});
    ora.app->add_flag("--force", ora.force, "write into a non-empty run directory");

    Command cor;
    cor.app = app.add_subcommand("corpus-sig",
                                 "bigram statistics and signatures of a token corpus");
    cor.params.emplace(cor.app, std::vector<Param>{
        {"input", "input", "", "existing token file to ingest"},
        {"corpus.format", "format", "text-int", "token file format"},
        {"corpus.seq-len", "seq-len", "512", "sequence length"},
        {"generate", "generate", "",
         "sample an example chain instead: cycle10, blocks10 or involution10"},
        {"gen.tokens", "tokens", "1000000", "tokens to sample when generating"},
        {"gen.seed", "seed", "31", "sampling seed when generating"},
        {"top", "top", "0", "restrict signature tables to the N most frequent tokens (0: all)"},
        out_param(), name_param("corpus-sig")});
    cor.app->add_flag("--force", cor.force, "write into a non-empty run directory");

    Command ali;
    ali.app = app.add_subcommand("align",
                                 "embedding geometry vs successor signatures of a bigram LM");
    ali.params.emplace(ali.app, std::vector<Param>{
        {"run", "run", "", "train run directory holding final.ckpt"},
        {"counts", "counts", "", "bigram counts CSV (from corpus-sig)"},
        {"tokens", "tokens", "", "token set to compare (default: the whole vocabulary)"},
        out_param(), name_param("align")});
    ali.app->add_flag("--force", ali.force, "write into a non-empty run directory");

    Command rep;
    rep.app = app.add_subcommand("report", "collate a run directory into index.md");
    rep.params.emplace(rep.app, std::vector<Param>{
        {"run", "run", "", "run directory holding manifest.json"}});

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : 1; // anything but help/version is a usage error
    }

    try {
        if (gen.app->parsed()) return run_gen_task(gen.params->resolve(), gen.force);
        if (train_cmd.app->parsed())
            return run_train(train_cmd.params->resolve(), train_cmd.force);
        if (sig.app->parsed()) return run_signatures(sig.params->resolve(), sig.force);
        if (met.app->parsed()) return run_metrics(met.params->resolve(), met.force);
        if (ora.app->parsed()) return run_oracle(ora.params->resolve(), ora.force);
        if (cor.app->parsed()) return run_corpus_sig(cor.params->resolve(), cor.force);
        if (ali.app->parsed()) return run_align(ali.params->resolve(), ali.force);
        if (rep.app->parsed()) return run_report(rep.params->resolve());
        throw usage_error("no subcommand given");
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return static_cast<int>(e.kind());
    } catch (const std::exception& e) {
        std::cerr << "internal error: " << e.what() << "\n";
        return 3;
    }
}
