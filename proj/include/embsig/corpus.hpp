#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "embsig/linalg.hpp"

namespace embsig {

// Pre-tokenized corpus: integer token ids grouped into sequences.  Bigram
// statistics never cross a sequence boundary.
struct TokenStream {
    std::vector<std::vector<std::uint32_t>> sequences;

    std::size_t total_tokens() const;
    std::uint32_t max_token() const; // throws data_error when empty
};

enum class StreamFormat { TextInt, BinaryU32 };

StreamFormat stream_format_from_name(const std::string& name);

struct IngestResult {
    TokenStream stream;
    std::size_t total_tokens = 0;
    std::size_t dropped_tokens = 0; // trailing remainder shorter than seq_len
};

// Reads a token file ("text-int": whitespace-separated decimals,
// "binary-u32": little-endian 32-bit words) and chunks it into sequences of
// exactly seq_len tokens.  The remainder is dropped and counted.
IngestResult ingest_tokens(const std::string& path, StreamFormat format, std::size_t seq_len);

// Sparse within-sequence bigram counts plus the positional marginals needed
// to normalize them.
struct BigramCounts {
    std::map<std::pair<std::uint32_t, std::uint32_t>, std::uint64_t> pairs;
    std::map<std::uint32_t, std::uint64_t> nonfinal;   // occurrences with a successor
    std::map<std::uint32_t, std::uint64_t> noninitial; // occurrences with a predecessor
    std::uint64_t total_pairs = 0;

    // Records `count` observations of the adjacent pair (s, next), updating
    // the positional marginals to match.
    void add(std::uint32_t s, std::uint32_t next, std::uint64_t count = 1);

    std::uint64_t pair_count(std::uint32_t s, std::uint32_t next) const;
    std::uint64_t nonfinal_count(std::uint32_t s) const;
    std::uint64_t noninitial_count(std::uint32_t s) const;

    // Pointwise sum; counting shards then merging equals counting the whole.
    void merge(const BigramCounts& other);
};

BigramCounts count_bigrams(const TokenStream& stream);

// First-order Markov chain over states 0..S-1.
struct MarkovSpec {
    Matrix transition; // S x S, rows sum to 1 within 1e-9, entries >= 0
    Vector initial;    // length S, sums to 1 within 1e-9
};

void validate_markov(const MarkovSpec& spec);

// Samples one chain of n_tokens states and chunks it into sequences of
// seq_len (the trailing remainder becomes a short final sequence).
// Deterministic for a fixed seed.
TokenStream generate_markov(const MarkovSpec& spec, std::size_t n_tokens, std::size_t seq_len,
                            std::uint64_t seed);

// The c most frequent tokens (all positions); ties broken toward the
// smaller id.  c is clamped to the number of distinct tokens.
std::vector<std::uint32_t> top_frequent(const TokenStream& stream, std::size_t c);

// Test helper: random row-stochastic matrix; sharpness > 1 concentrates each
// row's mass onto fewer columns.
Matrix random_stochastic_matrix(std::size_t states, std::uint64_t seed, double sharpness = 1.0);

// Named 10-state example chains with uniform initial distribution:
//   "cycle10"       near-deterministic cycle; successor profiles are sharp
//                   and pairwise distinct
//   "blocks10"      three groups handing off to the next group, with a
//                   per-state leak so within-group profiles are similar but
//                   never exactly tied
//   "involution10"  five 2-cycles with a dominant hop to the partner state
MarkovSpec example_chain(const std::string& name);

} // namespace embsig
