#pragma once

// File formats:
//  - dataset CSV:      "# task=<kind> seed=<s> n=<n> anchors=<set> keys=<set>"
//                      header row "z,a1,a2,label", then one sample per line
//  - vocabulary JSON:  {"format":"embsig-vocab", "tokens":[raw0, raw1, ...]}
//  - checkpoint:       one JSON header line, '\n', then raw little-endian
//                      float64 payload (w_e row-major, then w_u row-major)
//  - timeline JSONL:   one {"step","epoch","loss","accuracy"} object per line
//  - matrix CSV:       first row/column hold labels; 12-significant-digit values
//  - bigram counts CSV: header "s,s_next,count", one pair per line

#include <string>
#include <vector>

#include "embsig/corpus.hpp"
#include "embsig/linalg.hpp"
#include "embsig/model.hpp"
#include "embsig/taskgen.hpp"

namespace embsig {

// Renders a token set as "lo:hi" when contiguous, else comma-separated.
std::string format_token_set(const std::vector<int>& tokens);

void write_dataset_csv(const std::string& path, const Dataset& ds);
Dataset read_dataset_csv(const std::string& path);

void write_vocab_json(const std::string& path, const Vocabulary& vocab);
Vocabulary read_vocab_json(const std::string& path);

void write_checkpoint(const std::string& path, const ModelParams& params);
ModelParams read_checkpoint(const std::string& path);

void write_timeline_jsonl(const std::string& path, const std::vector<TimelinePoint>& timeline);
std::vector<TimelinePoint> read_timeline_jsonl(const std::string& path);

struct LabeledMatrix {
    Matrix values;
    std::vector<std::string> row_labels;
    std::vector<std::string> col_labels;
};

// Empty label vectors fall back to 0-based indices.
void write_matrix_csv(const std::string& path, const Matrix& m,
                      const std::vector<std::string>& row_labels = {},
                      const std::vector<std::string>& col_labels = {});
LabeledMatrix read_matrix_csv(const std::string& path);

void write_bigram_counts_csv(const std::string& path, const BigramCounts& counts);
BigramCounts read_bigram_counts_csv(const std::string& path);

void write_text_file(const std::string& path, const std::string& content);
std::string read_text_file(const std::string& path);

} // namespace embsig
