#include "embsig/corpus.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>

#include "embsig/error.hpp"
#include "embsig/rng.hpp"

namespace embsig {

std::size_t TokenStream::total_tokens() const {
    std::size_t n = 0;
    for (const auto& s : sequences) n += s.size();
    return n;
}

std::uint32_t TokenStream::max_token() const {
    bool any = false;
    std::uint32_t m = 0;
    for (const auto& s : sequences) {
        for (std::uint32_t t : s) {
            m = std::max(m, t);
            any = true;
        }
    }
    if (!any) throw data_error("TokenStream: empty stream");
    return m;
}

StreamFormat stream_format_from_name(const std::string& name) {
    if (name == "text-int") return StreamFormat::TextInt;
    if (name == "binary-u32") return StreamFormat::BinaryU32;
    throw data_error("unknown stream format '" + name + "' (expected text-int or binary-u32)");
}

namespace {

std::vector<std::uint32_t> read_text_tokens(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw data_error("ingest_tokens: cannot open '" + path + "'");
    std::vector<std::uint32_t> tokens;
    std::string word;
    std::size_t index = 0;
    while (in >> word) {
        ++index;
        std::size_t pos = 0;
        long long v = 0;
        try {
            v = std::stoll(word, &pos);
        } catch (const std::exception&) {
            pos = 0;
        }
        if (pos != word.size() || v < 0 || v > 0xFFFFFFFFll) {
            throw data_error("ingest_tokens: malformed token '" + word + "' at position " +
                             std::to_string(index) + " in '" + path + "'");
        }
        tokens.push_back(static_cast<std::uint32_t>(v));
    }
    return tokens;
}

std::vector<std::uint32_t> read_binary_tokens(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw data_error("ingest_tokens: cannot open '" + path + "'");
    in.seekg(0, std::ios::end);
    const std::streamoff bytes = in.tellg();
    in.seekg(0, std::ios::beg);
    if (bytes % 4 != 0) {
        throw data_error("ingest_tokens: '" + path + "' has " + std::to_string(bytes) +
                         " bytes, not a multiple of 4");
    }
    std::vector<std::uint32_t> tokens(static_cast<std::size_t>(bytes / 4));
    std::vector<unsigned char> buf(static_cast<std::size_t>(bytes));
    in.read(reinterpret_cast<char*>(buf.data()), bytes);
    if (!in) throw data_error("ingest_tokens: short read from '" + path + "'");
    for (std::size_t i = 0; i < tokens.size(); ++i) {
        tokens[i] = static_cast<std::uint32_t>(buf[4 * i]) |
                    (static_cast<std::uint32_t>(buf[4 * i + 1]) << 8) |
                    (static_cast<std::uint32_t>(buf[4 * i + 2]) << 16) |
                    (static_cast<std::uint32_t>(buf[4 * i + 3]) << 24);
    }
    return tokens;
}

} // namespace

IngestResult ingest_tokens(const std::string& path, StreamFormat format, std::size_t seq_len) {
    if (seq_len < 2) throw data_error("ingest_tokens: seq_len must be at least 2");
    const std::vector<std::uint32_t> tokens =
        format == StreamFormat::TextInt ? read_text_tokens(path) : read_binary_tokens(path);
    IngestResult res;
    res.total_tokens = tokens.size();
    const std::size_t full = tokens.size() / seq_len;
    res.dropped_tokens = tokens.size() - full * seq_len;
    res.stream.sequences.reserve(full);
    for (std::size_t i = 0; i < full; ++i) {
        res.stream.sequences.emplace_back(tokens.begin() + static_cast<std::ptrdiff_t>(i * seq_len),
                                          tokens.begin() +
                                              static_cast<std::ptrdiff_t>((i + 1) * seq_len));
    }
    if (res.stream.sequences.empty()) {
        throw data_error("ingest_tokens: '" + path + "' holds " + std::to_string(tokens.size()) +
                         " tokens, fewer than one sequence of " + std::to_string(seq_len));
    }
    return res;
}

std::uint64_t BigramCounts::pair_count(std::uint32_t s, std::uint32_t next) const {
    auto it = pairs.find({s, next});
    return it == pairs.end() ? 0 : it->second;
}

std::uint64_t BigramCounts::nonfinal_count(std::uint32_t s) const {
    auto it = nonfinal.find(s);
    return it == nonfinal.end() ? 0 : it->second;
}

std::uint64_t BigramCounts::noninitial_count(std::uint32_t s) const {
    auto it = noninitial.find(s);
    return it == noninitial.end() ? 0 : it->second;
}

void BigramCounts::add(std::uint32_t s, std::uint32_t next, std::uint64_t count) {
    pairs[{s, next}] += count;
    nonfinal[s] += count;
    noninitial[next] += count;
    total_pairs += count;
}

void BigramCounts::merge(const BigramCounts& other) {
    for (const auto& [key, n] : other.pairs) pairs[key] += n;
    for (const auto& [key, n] : other.nonfinal) nonfinal[key] += n;
    for (const auto& [key, n] : other.noninitial) noninitial[key] += n;
    total_pairs += other.total_pairs;
}

BigramCounts count_bigrams(const TokenStream& stream) {
    BigramCounts counts;
    for (const auto& seq : stream.sequences) {
        for (std::size_t i = 0; i + 1 < seq.size(); ++i) {
            ++counts.pairs[{seq[i], seq[i + 1]}];
            ++counts.nonfinal[seq[i]];
            ++counts.noninitial[seq[i + 1]];
            ++counts.total_pairs;
        }
    }
    return counts;
}

void validate_markov(const MarkovSpec& spec) {
    const std::size_t s = spec.transition.rows;
    if (s == 0 || spec.transition.cols != s) {
        throw data_error("validate_markov: transition must be square, got " +
                         shape_string(spec.transition));
    }
    if (spec.initial.size() != s) {
        throw data_error("validate_markov: initial length " + std::to_string(spec.initial.size()) +
                         " != states " + std::to_string(s));
    }
    for (std::size_t i = 0; i < s; ++i) {
        double row = 0.0;
        for (std::size_t j = 0; j < s; ++j) {
            if (spec.transition(i, j) < 0.0) {
                throw data_error("validate_markov: negative entry in transition row " +
                                 std::to_string(i));
            }
            row += spec.transition(i, j);
        }
        if (std::abs(row - 1.0) > 1e-9) {
            throw data_error("validate_markov: transition row " + std::to_string(i) +
                             " sums to " + std::to_string(row));
        }
    }
    double init = 0.0;
    for (double p : spec.initial) {
        if (p < 0.0) throw data_error("validate_markov: negative initial probability");
        init += p;
    }
    if (std::abs(init - 1.0) > 1e-9) {
        throw data_error("validate_markov: initial distribution sums to " + std::to_string(init));
    }
}

namespace {

std::size_t sample_cdf(const double* weights, std::size_t n, double u) {
    double acc = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        acc += weights[i];
        if (u < acc) return i;
    }
    return n - 1; // u landed in the rounding slack at the top
}

} // namespace

TokenStream generate_markov(const MarkovSpec& spec, std::size_t n_tokens, std::size_t seq_len,
                            std::uint64_t seed) {
    validate_markov(spec);
    if (n_tokens < 2) throw data_error("generate_markov: need at least 2 tokens");
    if (seq_len < 2) throw data_error("generate_markov: seq_len must be at least 2");
    Rng rng(seed);
    const std::size_t s = spec.transition.rows;
    std::vector<std::uint32_t> chain(n_tokens);
    chain[0] = static_cast<std::uint32_t>(sample_cdf(spec.initial.data(), s, uniform_real01(rng)));
    for (std::size_t i = 1; i < n_tokens; ++i) {
        const double* row = &spec.transition.data[chain[i - 1] * s];
        chain[i] = static_cast<std::uint32_t>(sample_cdf(row, s, uniform_real01(rng)));
    }
    TokenStream stream;
    for (std::size_t start = 0; start < n_tokens; start += seq_len) {
        const std::size_t end = std::min(start + seq_len, n_tokens);
        if (end - start < 2) break; // a single trailing token carries no bigram
        stream.sequences.emplace_back(chain.begin() + static_cast<std::ptrdiff_t>(start),
                                      chain.begin() + static_cast<std::ptrdiff_t>(end));
    }
    return stream;
}

std::vector<std::uint32_t> top_frequent(const TokenStream& stream, std::size_t c) {
    std::map<std::uint32_t, std::uint64_t> freq;
    for (const auto& seq : stream.sequences)
        for (std::uint32_t t : seq) ++freq[t];
    if (freq.empty()) throw data_error("top_frequent: empty stream");
    std::vector<std::pair<std::uint32_t, std::uint64_t>> items(freq.begin(), freq.end());
    std::sort(items.begin(), items.end(), [](const auto& a, const auto& b) {
        if (a.second != b.second) return a.second > b.second;
        return a.first < b.first;
    });
    const std::size_t n = std::min(c, items.size());
    std::vector<std::uint32_t> out;
    out.reserve(n);
    for (std::size_t i = 0; i < n; ++i) out.push_back(items[i].first);
    return out;
}

Matrix random_stochastic_matrix(std::size_t states, std::uint64_t seed, double sharpness) {
    if (states == 0) throw data_error("random_stochastic_matrix: states must be positive");
    Rng rng(seed);
    Matrix t(states, states);
    for (std::size_t i = 0; i < states; ++i) {
        double row = 0.0;
        for (std::size_t j = 0; j < states; ++j) {
            const double u = uniform_real01(rng);
            t(i, j) = std::pow(u + 1e-12, sharpness);
            row += t(i, j);
        }
        for (std::size_t j = 0; j < states; ++j) t(i, j) /= row;
    }
    return t;
}

namespace {

MarkovSpec cycle_chain_10() {
    MarkovSpec spec;
    spec.transition = Matrix(10, 10, 0.01);
    for (std::size_t s = 0; s < 10; ++s) spec.transition(s, (s + 1) % 10) = 1.0 - 0.01 * 9.0;
    spec.initial = Vector(10, 0.1);
    return spec;
}

MarkovSpec blocks_chain_10() {
    const std::vector<std::vector<std::size_t>> groups = {{0, 1, 2, 3}, {4, 5, 6}, {7, 8, 9}};
    MarkovSpec spec;
    spec.transition = Matrix(10, 10, 0.0);
    for (std::size_t g = 0; g < groups.size(); ++g) {
        const auto& next = groups[(g + 1) % groups.size()];
        for (std::size_t s : groups[g]) {
            const double leak = 0.10 + 0.015 * static_cast<double>(s);
            for (std::size_t t = 0; t < 10; ++t) {
                const bool in_next = std::find(next.begin(), next.end(), t) != next.end();
                spec.transition(s, t) = in_next
                                            ? (1.0 - leak) / static_cast<double>(next.size())
                                            : leak / static_cast<double>(10 - next.size());
            }
        }
    }
    spec.initial = Vector(10, 0.1);
    return spec;
}

MarkovSpec involution_chain_10() {
    MarkovSpec spec;
    spec.transition = Matrix(10, 10, 0.01);
    for (std::size_t s = 0; s < 10; ++s) {
        const std::size_t partner = s ^ 1U;
        spec.transition(s, partner) = 1.0 - 0.01 * 9.0;
    }
    spec.initial = Vector(10, 0.1);
    return spec;
}

} // namespace

MarkovSpec example_chain(const std::string& name) {
    if (name == "cycle10") return cycle_chain_10();
    if (name == "blocks10") return blocks_chain_10();
    if (name == "involution10") return involution_chain_10();
    throw data_error("unknown example chain '" + name +
                     "' (expected cycle10, blocks10 or involution10)");
}

} // namespace embsig
