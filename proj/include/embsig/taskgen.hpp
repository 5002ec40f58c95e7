#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "embsig/error.hpp"

namespace embsig {

// Three-token tasks: every input is [z, a1, a2] with a key token z and two
// anchor tokens, and the target is a single label token.
enum class TaskKind {
    Add,           // label = z + a1 + a2, key domain fixed
    AddSameDomain, // label = z + a1 + a2 with labels confined to the key range
    ModAdd,        // label = minK + ((z + a1 + a2) mod |K|)
};

std::string task_kind_name(TaskKind kind);
TaskKind task_kind_from_name(const std::string& name);

struct TaskSpec {
    TaskKind kind = TaskKind::Add;
    std::vector<int> anchors; // sorted, distinct
    std::vector<int> keys;    // sorted, distinct; for AddSameDomain this is the
                              // shared key/label value range
    std::vector<int> labels;  // derived, sorted

    bool is_anchor(int token) const;
    bool is_key_value(int token) const;
};

// Builds a validated TaskSpec.  Empty vectors select the defaults
// (anchors 11..20, keys 101..140).
TaskSpec make_task(TaskKind kind, std::vector<int> anchors = {}, std::vector<int> keys = {});

// Admissible key values for the given ordered anchor pair.
std::vector<int> key_domain(const TaskSpec& spec, int a1, int a2);

// Label for one input; validates membership of all three tokens.
int eval_task(const TaskSpec& spec, int z, int a1, int a2);

// Bijection between raw token values and compact ids 0..size-1, assigned in
// ascending raw order.
class Vocabulary {
public:
    Vocabulary() = default;
    // Builds from any collection of raw values (duplicates fine).
    static Vocabulary from_values(std::vector<int> values);

    std::size_t size() const { return id_to_raw_.size(); }
    int raw(std::size_t id) const;
    std::size_t to_id(int raw) const; // throws data_error for unknown tokens
    bool contains(int raw) const { return raw_to_id_.count(raw) != 0; }
    const std::vector<int>& raw_tokens() const { return id_to_raw_; }

private:
    std::vector<int> id_to_raw_;
    std::map<int, std::size_t> raw_to_id_;
};

struct Sample {
    int z = 0;
    int a1 = 0;
    int a2 = 0;
    int label = 0;
};

struct Dataset {
    TaskSpec spec;
    std::uint64_t seed = 0;
    std::vector<Sample> samples;
    Vocabulary vocab;
};

// n i.i.d. samples: the ordered anchor pair uniform on A x A (with
// replacement), the key uniform on the pair's key domain.  Deterministic for
// a fixed seed, independent of platform.
Dataset generate_dataset(const TaskSpec& spec, std::size_t n, std::uint64_t seed);

// Vocabulary over every token that can appear in inputs or labels.
Vocabulary task_vocabulary(const TaskSpec& spec);

// Parses "11:20" (inclusive range) or "11,12,13" into a sorted distinct set.
std::vector<int> parse_token_set(const std::string& text);

} // namespace embsig
