#include "embsig/signatures.hpp"

#include <algorithm>
#include <array>

namespace embsig {

namespace {

// Distinct tokens of one input, as vocab ids.
std::array<std::size_t, 3> sample_token_ids(const Vocabulary& vocab, const Sample& s,
                                            std::size_t& count) {
    std::array<std::size_t, 3> ids{};
    count = 0;
    const int raw[3] = {s.z, s.a1, s.a2};
    for (int r : raw) {
        const std::size_t id = vocab.to_id(r);
        bool seen = false;
        for (std::size_t k = 0; k < count; ++k) seen = seen || ids[k] == id;
        if (!seen) ids[count++] = id;
    }
    return ids;
}

struct Outcome {
    int z, a1, a2, label;
    double p;
};

// Every possible input with its sampling probability.  The anchor pair is
// ordered and uniform; the key is uniform on the pair's domain.
std::vector<Outcome> enumerate_outcomes(const TaskSpec& spec) {
    std::vector<Outcome> outcomes;
    const double pair_p = 1.0 / (static_cast<double>(spec.anchors.size()) *
                                 static_cast<double>(spec.anchors.size()));
    for (int a1 : spec.anchors) {
        for (int a2 : spec.anchors) {
            const std::vector<int> domain = key_domain(spec, a1, a2);
            const double p = pair_p / static_cast<double>(domain.size());
            for (int z : domain) outcomes.push_back({z, a1, a2, eval_task(spec, z, a1, a2), p});
        }
    }
    return outcomes;
}

std::array<std::size_t, 3> outcome_token_ids(const Vocabulary& vocab, const Outcome& o,
                                             std::size_t& count) {
    Sample s{o.z, o.a1, o.a2, o.label};
    return sample_token_ids(vocab, s, count);
}

bool outcome_contains(const Outcome& o, int x_raw) {
    return o.z == x_raw || o.a1 == x_raw || o.a2 == x_raw;
}

} // namespace

Vector empirical_phi_y(const Dataset& ds, int x_raw) {
    ds.vocab.to_id(x_raw); // reject unknown tokens early
    Vector hist(ds.vocab.size(), 0.0);
    std::size_t denom = 0;
    for (const Sample& s : ds.samples) {
        if (s.z != x_raw && s.a1 != x_raw && s.a2 != x_raw) continue;
        ++denom;
        hist[ds.vocab.to_id(s.label)] += 1.0;
    }
    if (denom == 0) {
        throw data_error("empirical_phi_y: token " + std::to_string(x_raw) +
                         " appears in no sample");
    }
    for (double& v : hist) v /= static_cast<double>(denom);
    return hist;
}

Vector empirical_phi_X(const Dataset& ds, int x_raw) {
    ds.vocab.to_id(x_raw);
    Vector hits(ds.vocab.size(), 0.0);
    std::size_t denom = 0;
    for (const Sample& s : ds.samples) {
        if (s.z != x_raw && s.a1 != x_raw && s.a2 != x_raw) continue;
        ++denom;
        std::size_t count = 0;
        const auto ids = sample_token_ids(ds.vocab, s, count);
        for (std::size_t k = 0; k < count; ++k) hits[ids[k]] += 1.0;
    }
    if (denom == 0) {
        throw data_error("empirical_phi_X: token " + std::to_string(x_raw) +
                         " appears in no sample");
    }
    for (double& v : hits) v /= static_cast<double>(denom);
    return hits;
}

Matrix empirical_phi_X_given_y(const Dataset& ds, int x_raw) {
    ds.vocab.to_id(x_raw);
    const std::size_t v = ds.vocab.size();
    Matrix counts(v, v, 0.0);
    Vector row_totals(v, 0.0);
    bool any = false;
    for (const Sample& s : ds.samples) {
        if (s.z != x_raw && s.a1 != x_raw && s.a2 != x_raw) continue;
        any = true;
        const std::size_t row = ds.vocab.to_id(s.label);
        row_totals[row] += 1.0;
        std::size_t count = 0;
        const auto ids = sample_token_ids(ds.vocab, s, count);
        for (std::size_t k = 0; k < count; ++k) counts(row, ids[k]) += 1.0;
    }
    if (!any) {
        throw data_error("empirical_phi_X_given_y: token " + std::to_string(x_raw) +
                         " appears in no sample");
    }
    for (std::size_t r = 0; r < v; ++r) {
        if (row_totals[r] == 0.0) continue; // unsupported label: explicit zero row
        for (std::size_t c = 0; c < v; ++c) counts(r, c) /= row_totals[r];
    }
    return counts;
}

Vector empirical_varphi_X(const Dataset& ds, int label_raw) {
    ds.vocab.to_id(label_raw);
    Vector hits(ds.vocab.size(), 0.0);
    std::size_t denom = 0;
    for (const Sample& s : ds.samples) {
        if (s.label != label_raw) continue;
        ++denom;
        std::size_t count = 0;
        const auto ids = sample_token_ids(ds.vocab, s, count);
        for (std::size_t k = 0; k < count; ++k) hits[ids[k]] += 1.0;
    }
    if (denom == 0) {
        throw data_error("empirical_varphi_X: " + std::to_string(label_raw) +
                         " is never a label");
    }
    for (double& v : hits) v /= static_cast<double>(denom);
    return hits;
}

Vector analytic_phi_y(const TaskSpec& spec, int x_raw) {
    const Vocabulary vocab = task_vocabulary(spec);
    vocab.to_id(x_raw);
    Vector hist(vocab.size(), 0.0);
    double denom = 0.0;
    for (const Outcome& o : enumerate_outcomes(spec)) {
        if (!outcome_contains(o, x_raw)) continue;
        denom += o.p;
        hist[vocab.to_id(o.label)] += o.p;
    }
    if (denom == 0.0) {
        throw data_error("analytic_phi_y: token " + std::to_string(x_raw) +
                         " can never appear in an input");
    }
    for (double& v : hist) v /= denom;
    return hist;
}

Vector analytic_phi_X(const TaskSpec& spec, int x_raw) {
    const Vocabulary vocab = task_vocabulary(spec);
    vocab.to_id(x_raw);
    Vector hits(vocab.size(), 0.0);
    double denom = 0.0;
    for (const Outcome& o : enumerate_outcomes(spec)) {
        if (!outcome_contains(o, x_raw)) continue;
        denom += o.p;
        std::size_t count = 0;
        const auto ids = outcome_token_ids(vocab, o, count);
        for (std::size_t k = 0; k < count; ++k) hits[ids[k]] += o.p;
    }
    if (denom == 0.0) {
        throw data_error("analytic_phi_X: token " + std::to_string(x_raw) +
                         " can never appear in an input");
    }
    for (double& v : hits) v /= denom;
    return hits;
}

Matrix analytic_phi_X_given_y(const TaskSpec& spec, int x_raw) {
    const Vocabulary vocab = task_vocabulary(spec);
    vocab.to_id(x_raw);
    const std::size_t v = vocab.size();
    Matrix mass(v, v, 0.0);
    Vector row_totals(v, 0.0);
    bool any = false;
    for (const Outcome& o : enumerate_outcomes(spec)) {
        if (!outcome_contains(o, x_raw)) continue;
        any = true;
        const std::size_t row = vocab.to_id(o.label);
        row_totals[row] += o.p;
        std::size_t count = 0;
        const auto ids = outcome_token_ids(vocab, o, count);
        for (std::size_t k = 0; k < count; ++k) mass(row, ids[k]) += o.p;
    }
    if (!any) {
        throw data_error("analytic_phi_X_given_y: token " + std::to_string(x_raw) +
                         " can never appear in an input");
    }
    for (std::size_t r = 0; r < v; ++r) {
        if (row_totals[r] == 0.0) continue;
        for (std::size_t c = 0; c < v; ++c) mass(r, c) /= row_totals[r];
    }
    return mass;
}

Vector analytic_varphi_X(const TaskSpec& spec, int label_raw) {
    const Vocabulary vocab = task_vocabulary(spec);
    vocab.to_id(label_raw);
    Vector hits(vocab.size(), 0.0);
    double denom = 0.0;
    for (const Outcome& o : enumerate_outcomes(spec)) {
        if (o.label != label_raw) continue;
        denom += o.p;
        std::size_t count = 0;
        const auto ids = outcome_token_ids(vocab, o, count);
        for (std::size_t k = 0; k < count; ++k) hits[ids[k]] += o.p;
    }
    if (denom == 0.0) {
        throw data_error("analytic_varphi_X: " + std::to_string(label_raw) +
                         " is not an attainable label");
    }
    for (double& v : hits) v /= denom;
    return hits;
}

Vector analytic_membership_rate(const TaskSpec& spec) {
    const Vocabulary vocab = task_vocabulary(spec);
    Vector rate(vocab.size(), 0.0);
    for (const Outcome& o : enumerate_outcomes(spec)) {
        std::size_t count = 0;
        const auto ids = outcome_token_ids(vocab, o, count);
        for (std::size_t k = 0; k < count; ++k) rate[ids[k]] += o.p;
    }
    return rate;
}

Vector analytic_label_rate(const TaskSpec& spec) {
    const Vocabulary vocab = task_vocabulary(spec);
    Vector rate(vocab.size(), 0.0);
    for (const Outcome& o : enumerate_outcomes(spec)) rate[vocab.to_id(o.label)] += o.p;
    return rate;
}

ConvolutionTable convolution_table(const TaskSpec& spec) {
    ConvolutionTable t;
    const double pa = 1.0 / static_cast<double>(spec.anchors.size());
    const double pz = 1.0 / static_cast<double>(spec.keys.size());
    const std::size_t m = spec.keys.size();
    t.mod_az.assign(m, 0.0);
    t.mod_aa.assign(m, 0.0);
    for (int a : spec.anchors) {
        for (int z : spec.keys) {
            t.sum_az[a + z] += pa * pz;
            t.mod_az[static_cast<std::size_t>((a + z) % static_cast<int>(m))] += pa * pz;
        }
        for (int a2 : spec.anchors) {
            t.sum_aa[a + a2] += pa * pa;
            t.mod_aa[static_cast<std::size_t>((a + a2) % static_cast<int>(m))] += pa * pa;
        }
    }
    return t;
}

Vector corpus_phi_next(const BigramCounts& counts, std::uint32_t s, std::size_t vocab_size) {
    const std::uint64_t denom = counts.nonfinal_count(s);
    if (denom == 0) {
        throw data_error("corpus_phi_next: token " + std::to_string(s) +
                         " never occurs with a successor");
    }
    Vector out(vocab_size, 0.0);
    for (auto it = counts.pairs.lower_bound({s, 0}); it != counts.pairs.end(); ++it) {
        if (it->first.first != s) break;
        if (it->first.second >= vocab_size) {
            throw data_error("corpus_phi_next: token " + std::to_string(it->first.second) +
                             " outside vocab of size " + std::to_string(vocab_size));
        }
        out[it->first.second] = static_cast<double>(it->second) / static_cast<double>(denom);
    }
    return out;
}

Vector corpus_varphi_pre(const BigramCounts& counts, std::uint32_t s, std::size_t vocab_size) {
    const std::uint64_t denom = counts.noninitial_count(s);
    if (denom == 0) {
        throw data_error("corpus_varphi_pre: token " + std::to_string(s) +
                         " never occurs with a predecessor");
    }
    Vector out(vocab_size, 0.0);
    for (const auto& [key, n] : counts.pairs) {
        if (key.second != s) continue;
        if (key.first >= vocab_size) {
            throw data_error("corpus_varphi_pre: token " + std::to_string(key.first) +
                             " outside vocab of size " + std::to_string(vocab_size));
        }
        out[key.first] = static_cast<double>(n) / static_cast<double>(denom);
    }
    return out;
}

Vector tilde_phi(const BigramCounts& counts, std::uint32_t s, std::size_t vocab_size) {
    Vector next = corpus_phi_next(counts, s, vocab_size);
    const Vector pre = corpus_varphi_pre(counts, s, vocab_size);
    for (std::size_t i = 0; i < vocab_size; ++i) next[i] += pre[i];
    return next;
}

} // namespace embsig
