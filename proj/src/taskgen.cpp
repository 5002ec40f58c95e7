#include "embsig/taskgen.hpp"

#include <algorithm>
#include <set>

#include "embsig/rng.hpp"

namespace embsig {

namespace {

std::vector<int> range_set(int lo, int hi) {
    std::vector<int> out;
    for (int v = lo; v <= hi; ++v) out.push_back(v);
    return out;
}

void validate_set(const std::vector<int>& s, const std::string& name) {
    if (s.empty()) throw data_error("make_task: " + name + " set is empty");
    for (std::size_t i = 0; i < s.size(); ++i) {
        if (s[i] <= 0) throw data_error("make_task: " + name + " contains non-positive token");
        if (i > 0 && s[i] <= s[i - 1]) {
            throw data_error("make_task: " + name + " must be strictly increasing");
        }
    }
}

bool contains(const std::vector<int>& s, int v) {
    return std::binary_search(s.begin(), s.end(), v);
}

} // namespace

std::string task_kind_name(TaskKind kind) {
    switch (kind) {
        case TaskKind::Add: return "add";
        case TaskKind::AddSameDomain: return "add-same";
        case TaskKind::ModAdd: return "mod";
    }
    throw data_error("task_kind_name: unknown kind");
}

TaskKind task_kind_from_name(const std::string& name) {
    if (name == "add") return TaskKind::Add;
    if (name == "add-same") return TaskKind::AddSameDomain;
    if (name == "mod") return TaskKind::ModAdd;
    throw data_error("unknown task kind '" + name + "' (expected add, add-same or mod)");
}

bool TaskSpec::is_anchor(int token) const { return contains(anchors, token); }
bool TaskSpec::is_key_value(int token) const { return contains(keys, token); }

TaskSpec make_task(TaskKind kind, std::vector<int> anchors, std::vector<int> keys) {
    TaskSpec spec;
    spec.kind = kind;
    spec.anchors = anchors.empty() ? range_set(11, 20) : std::move(anchors);
    spec.keys = keys.empty() ? range_set(101, 140) : std::move(keys);
    validate_set(spec.anchors, "anchor");
    validate_set(spec.keys, "key");

    std::set<int> label_set;
    switch (kind) {
        case TaskKind::Add:
            for (int a1 : spec.anchors)
                for (int a2 : spec.anchors)
                    for (int z : spec.keys) label_set.insert(z + a1 + a2);
            break;
        case TaskKind::AddSameDomain:
        case TaskKind::ModAdd:
            label_set.insert(spec.keys.begin(), spec.keys.end());
            break;
    }
    spec.labels.assign(label_set.begin(), label_set.end());

    // Anchors must be disjoint from everything that can occupy the key slot.
    for (int a1 : spec.anchors) {
        for (int a2 : spec.anchors) {
            for (int z : key_domain(spec, a1, a2)) {
                if (spec.is_anchor(z)) {
                    throw data_error("make_task: anchor set overlaps key domain at token " +
                                     std::to_string(z));
                }
            }
        }
    }
    return spec;
}

std::vector<int> key_domain(const TaskSpec& spec, int a1, int a2) {
    if (!spec.is_anchor(a1) || !spec.is_anchor(a2)) {
        throw data_error("key_domain: (" + std::to_string(a1) + "," + std::to_string(a2) +
                         ") is not an anchor pair");
    }
    switch (spec.kind) {
        case TaskKind::Add:
        case TaskKind::ModAdd:
            return spec.keys;
        case TaskKind::AddSameDomain: {
            std::vector<int> out;
            out.reserve(spec.keys.size());
            for (int y : spec.keys) out.push_back(y - a1 - a2);
            return out;
        }
    }
    throw data_error("key_domain: unknown task kind");
}

int eval_task(const TaskSpec& spec, int z, int a1, int a2) {
    const std::vector<int> domain = key_domain(spec, a1, a2);
    if (!std::binary_search(domain.begin(), domain.end(), z)) {
        throw data_error("eval_task: key " + std::to_string(z) +
                         " outside the domain of anchor pair (" + std::to_string(a1) + "," +
                         std::to_string(a2) + ")");
    }
    const long long sum = static_cast<long long>(z) + a1 + a2;
    switch (spec.kind) {
        case TaskKind::Add:
        case TaskKind::AddSameDomain:
            return static_cast<int>(sum);
        case TaskKind::ModAdd: {
            // Wrap the sum back into the key window, measured from its base.
            const long long size = static_cast<long long>(spec.keys.size());
            const long long base = spec.keys.front();
            const long long offset = ((sum - base) % size + size) % size;
            return spec.keys[static_cast<std::size_t>(offset)];
        }
    }
    throw data_error("eval_task: unknown task kind");
}

Vocabulary Vocabulary::from_values(std::vector<int> values) {
    std::sort(values.begin(), values.end());
    values.erase(std::unique(values.begin(), values.end()), values.end());
    Vocabulary v;
    v.id_to_raw_ = std::move(values);
    for (std::size_t i = 0; i < v.id_to_raw_.size(); ++i) v.raw_to_id_[v.id_to_raw_[i]] = i;
    return v;
}

int Vocabulary::raw(std::size_t id) const {
    if (id >= id_to_raw_.size()) {
        throw data_error("Vocabulary: id " + std::to_string(id) + " out of range (size " +
                         std::to_string(id_to_raw_.size()) + ")");
    }
    return id_to_raw_[id];
}

std::size_t Vocabulary::to_id(int raw) const {
    auto it = raw_to_id_.find(raw);
    if (it == raw_to_id_.end()) {
        throw data_error("Vocabulary: unknown raw token " + std::to_string(raw));
    }
    return it->second;
}

Vocabulary task_vocabulary(const TaskSpec& spec) {
    std::vector<int> values(spec.anchors);
    for (int a1 : spec.anchors)
        for (int a2 : spec.anchors)
            for (int z : key_domain(spec, a1, a2)) values.push_back(z);
    values.insert(values.end(), spec.labels.begin(), spec.labels.end());
    return Vocabulary::from_values(std::move(values));
}

Dataset generate_dataset(const TaskSpec& spec, std::size_t n, std::uint64_t seed) {
    if (n == 0) throw data_error("generate_dataset: n must be positive");
    Dataset ds;
    ds.spec = spec;
    ds.seed = seed;
    ds.vocab = task_vocabulary(spec);
    ds.samples.reserve(n);
    Rng rng(seed);
    const std::size_t na = spec.anchors.size();
    for (std::size_t i = 0; i < n; ++i) {
        const int a1 = spec.anchors[uniform_index(rng, na)];
        const int a2 = spec.anchors[uniform_index(rng, na)];
        const std::vector<int> domain = key_domain(spec, a1, a2);
        const int z = domain[uniform_index(rng, domain.size())];
        ds.samples.push_back({z, a1, a2, eval_task(spec, z, a1, a2)});
    }
    return ds;
}

std::vector<int> parse_token_set(const std::string& text) {
    std::vector<int> out;
    const auto parse_int = [&](const std::string& s) {
        std::size_t pos = 0;
        int v = 0;
        try {
            v = std::stoi(s, &pos);
        } catch (const std::exception&) {
            throw data_error("parse_token_set: bad integer '" + s + "' in '" + text + "'");
        }
        if (pos != s.size()) {
            throw data_error("parse_token_set: bad integer '" + s + "' in '" + text + "'");
        }
        return v;
    };
    const auto colon = text.find(':');
    if (colon != std::string::npos) {
        const int lo = parse_int(text.substr(0, colon));
        const int hi = parse_int(text.substr(colon + 1));
        if (hi < lo) throw data_error("parse_token_set: empty range '" + text + "'");
        for (int v = lo; v <= hi; ++v) out.push_back(v);
        return out;
    }
    std::size_t start = 0;
    while (start <= text.size()) {
        const auto comma = text.find(',', start);
        const std::string piece =
            text.substr(start, comma == std::string::npos ? std::string::npos : comma - start);
        if (!piece.empty()) out.push_back(parse_int(piece));
        if (comma == std::string::npos) break;
        start = comma + 1;
    }
    std::sort(out.begin(), out.end());
    out.erase(std::unique(out.begin(), out.end()), out.end());
    if (out.empty()) throw data_error("parse_token_set: no tokens in '" + text + "'");
    return out;
}

} // namespace embsig
