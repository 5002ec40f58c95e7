#include "embsig/io.hpp"

#include <bit>
#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <map>
#include <sstream>

#include "json.hpp"

#include "embsig/error.hpp"

namespace embsig {

namespace {

std::ofstream open_out(const std::string& path, bool binary = false) {
    std::ofstream out(path, binary ? std::ios::binary : std::ios::out);
    if (!out) throw data_error("cannot open '" + path + "' for writing");
    return out;
}

std::ifstream open_in(const std::string& path, bool binary = false) {
    std::ifstream in(path, binary ? std::ios::binary : std::ios::in);
    if (!in) throw data_error("cannot open '" + path + "' for reading");
    return in;
}

std::string format_double(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.12g", v);
    return buf;
}

double parse_double(const std::string& text, const std::string& where) {
    const char* begin = text.c_str();
    char* end = nullptr;
    const double v = std::strtod(begin, &end);
    if (end == begin || *end != '\0') {
        throw data_error(where + ": cannot parse number from '" + text + "'");
    }
    return v;
}

long long parse_int(const std::string& text, const std::string& where) {
    const char* begin = text.c_str();
    char* end = nullptr;
    const long long v = std::strtoll(begin, &end, 10);
    if (end == begin || *end != '\0') {
        throw data_error(where + ": cannot parse integer from '" + text + "'");
    }
    return v;
}

std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> cells;
    std::string cell;
    std::stringstream ss(line);
    while (std::getline(ss, cell, ',')) cells.push_back(cell);
    if (!line.empty() && line.back() == ',') cells.emplace_back();
    return cells;
}

void write_f64_le(std::ofstream& out, const double* data, std::size_t count) {
    std::vector<unsigned char> bytes(count * 8);
    for (std::size_t i = 0; i < count; ++i) {
        const auto u = std::bit_cast<std::uint64_t>(data[i]);
        for (int b = 0; b < 8; ++b) bytes[i * 8 + b] = static_cast<unsigned char>(u >> (8 * b));
    }
    out.write(reinterpret_cast<const char*>(bytes.data()),
              static_cast<std::streamsize>(bytes.size()));
}

void read_f64_le(std::ifstream& in, double* data, std::size_t count, const std::string& path) {
    std::vector<unsigned char> bytes(count * 8);
    in.read(reinterpret_cast<char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    if (static_cast<std::size_t>(in.gcount()) != bytes.size()) {
        throw data_error("checkpoint '" + path + "' is truncated: expected " +
                         std::to_string(bytes.size()) + " payload bytes");
    }
    for (std::size_t i = 0; i < count; ++i) {
        std::uint64_t u = 0;
        for (int b = 0; b < 8; ++b) u |= static_cast<std::uint64_t>(bytes[i * 8 + b]) << (8 * b);
        data[i] = std::bit_cast<double>(u);
    }
}

} // namespace

std::string format_token_set(const std::vector<int>& tokens) {
    if (tokens.empty()) throw data_error("format_token_set: empty token set");
    bool contiguous = true;
    for (std::size_t i = 1; i < tokens.size(); ++i) {
        if (tokens[i] != tokens[i - 1] + 1) {
            contiguous = false;
            break;
        }
    }
    if (contiguous && tokens.size() > 1) {
        return std::to_string(tokens.front()) + ":" + std::to_string(tokens.back());
    }
    std::string out;
    for (std::size_t i = 0; i < tokens.size(); ++i) {
        if (i) out += ',';
        out += std::to_string(tokens[i]);
    }
    return out;
}

void write_dataset_csv(const std::string& path, const Dataset& ds) {
    std::ofstream out = open_out(path);
    out << "# task=" << task_kind_name(ds.spec.kind) << " seed=" << ds.seed
        << " n=" << ds.samples.size() << " anchors=" << format_token_set(ds.spec.anchors)
        << " keys=" << format_token_set(ds.spec.keys) << "\n";
    out << "z,a1,a2,label\n";
    for (const Sample& s : ds.samples) {
        out << s.z << ',' << s.a1 << ',' << s.a2 << ',' << s.label << '\n';
    }
    if (!out) throw data_error("failed while writing dataset to '" + path + "'");
}

Dataset read_dataset_csv(const std::string& path) {
    std::ifstream in = open_in(path);
    std::string line;
    if (!std::getline(in, line) || line.rfind("# ", 0) != 0) {
        throw data_error("dataset '" + path + "': missing '# task=...' metadata line");
    }
    std::map<std::string, std::string> meta;
    {
        std::stringstream ss(line.substr(2));
        std::string word;
        while (ss >> word) {
            const auto eq = word.find('=');
            if (eq == std::string::npos) {
                throw data_error("dataset '" + path + "': bad metadata token '" + word + "'");
            }
            meta[word.substr(0, eq)] = word.substr(eq + 1);
        }
    }
    for (const char* key : {"task", "seed", "n", "anchors", "keys"}) {
        if (!meta.count(key)) {
            throw data_error("dataset '" + path + "': metadata is missing '" + key + "'");
        }
    }

    Dataset ds;
    ds.spec = make_task(task_kind_from_name(meta["task"]), parse_token_set(meta["anchors"]),
                        parse_token_set(meta["keys"]));
    ds.seed = static_cast<std::uint64_t>(parse_int(meta["seed"], "dataset '" + path + "' seed"));
    ds.vocab = task_vocabulary(ds.spec);
    const long long expected_n = parse_int(meta["n"], "dataset '" + path + "' n");

    if (!std::getline(in, line) || line != "z,a1,a2,label") {
        throw data_error("dataset '" + path + "': expected header 'z,a1,a2,label'");
    }
    std::size_t lineno = 2;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        const auto cells = split_csv_line(line);
        const std::string where = "dataset '" + path + "' line " + std::to_string(lineno);
        if (cells.size() != 4) {
            throw data_error(where + ": expected 4 fields, got " + std::to_string(cells.size()));
        }
        Sample s;
        s.z = static_cast<int>(parse_int(cells[0], where));
        s.a1 = static_cast<int>(parse_int(cells[1], where));
        s.a2 = static_cast<int>(parse_int(cells[2], where));
        s.label = static_cast<int>(parse_int(cells[3], where));
        const int expect = eval_task(ds.spec, s.z, s.a1, s.a2);
        if (expect != s.label) {
            throw data_error(where + ": label " + std::to_string(s.label) +
                             " does not match task output " + std::to_string(expect));
        }
        ds.samples.push_back(s);
    }
    if (static_cast<long long>(ds.samples.size()) != expected_n) {
        throw data_error("dataset '" + path + "': metadata says n=" + std::to_string(expected_n) +
                         " but found " + std::to_string(ds.samples.size()) + " samples");
    }
    return ds;
}

void write_vocab_json(const std::string& path, const Vocabulary& vocab) {
    nlohmann::json doc;
    doc["format"] = "embsig-vocab";
    doc["version"] = 1;
    doc["tokens"] = vocab.raw_tokens();
    std::ofstream out = open_out(path);
    out << doc.dump(2) << '\n';
    if (!out) throw data_error("failed while writing vocabulary to '" + path + "'");
}

Vocabulary read_vocab_json(const std::string& path) {
    std::ifstream in = open_in(path);
    nlohmann::json doc;
    try {
        in >> doc;
    } catch (const nlohmann::json::exception& e) {
        throw data_error("vocabulary '" + path + "': invalid JSON: " + e.what());
    }
    if (!doc.is_object() || doc.value("format", "") != "embsig-vocab" ||
        !doc.contains("tokens") || !doc["tokens"].is_array()) {
        throw data_error("vocabulary '" + path + "': not an embsig-vocab document");
    }
    std::vector<int> tokens;
    for (const auto& t : doc["tokens"]) {
        if (!t.is_number_integer()) {
            throw data_error("vocabulary '" + path + "': non-integer token entry");
        }
        tokens.push_back(t.get<int>());
    }
    Vocabulary vocab = Vocabulary::from_values(tokens);
    if (vocab.raw_tokens() != tokens) {
        throw data_error("vocabulary '" + path + "': tokens must be sorted and distinct");
    }
    return vocab;
}

void write_checkpoint(const std::string& path, const ModelParams& params) {
    nlohmann::json header;
    header["format"] = "embsig-checkpoint";
    header["version"] = 1;
    header["d"] = params.d;
    header["d_vob"] = params.d_vob;
    header["activation"] = activation_name(params.activation);
    header["tied"] = params.tied;
    header["dtype"] = "f64-le";
    std::ofstream out = open_out(path, true);
    const std::string head = header.dump();
    out.write(head.data(), static_cast<std::streamsize>(head.size()));
    out.put('\n');
    write_f64_le(out, params.w_e.data.data(), params.w_e.data.size());
    if (!params.tied) write_f64_le(out, params.w_u.data.data(), params.w_u.data.size());
    if (!out) throw data_error("failed while writing checkpoint to '" + path + "'");
}

ModelParams read_checkpoint(const std::string& path) {
    std::ifstream in = open_in(path, true);
    std::string head;
    if (!std::getline(in, head)) {
        throw data_error("checkpoint '" + path + "': missing header line");
    }
    nlohmann::json header;
    try {
        header = nlohmann::json::parse(head);
    } catch (const nlohmann::json::exception& e) {
        throw data_error("checkpoint '" + path + "': invalid header JSON: " + e.what());
    }
    if (header.value("format", "") != "embsig-checkpoint" ||
        header.value("dtype", "") != "f64-le") {
        throw data_error("checkpoint '" + path + "': not an embsig-checkpoint (f64-le) file");
    }
    ModelParams params;
    params.d = header.value("d", std::size_t{0});
    params.d_vob = header.value("d_vob", std::size_t{0});
    params.tied = header.value("tied", false);
    params.activation = activation_from_name(header.value("activation", std::string{}));
    if (params.d == 0 || params.d_vob == 0) {
        throw data_error("checkpoint '" + path + "': header has invalid dimensions");
    }
    params.w_e = Matrix(params.d, params.d_vob);
    read_f64_le(in, params.w_e.data.data(), params.w_e.data.size(), path);
    if (!params.tied) {
        params.w_u = Matrix(params.d_vob, params.d);
        read_f64_le(in, params.w_u.data.data(), params.w_u.data.size(), path);
    }
    char extra;
    if (in.read(&extra, 1); in.gcount() != 0) {
        throw data_error("checkpoint '" + path + "': trailing bytes after payload");
    }
    require_finite(params.w_e, "checkpoint '" + path + "' w_e");
    if (!params.tied) require_finite(params.w_u, "checkpoint '" + path + "' w_u");
    return params;
}

void write_timeline_jsonl(const std::string& path, const std::vector<TimelinePoint>& timeline) {
    std::ofstream out = open_out(path);
    for (const TimelinePoint& p : timeline) {
        nlohmann::json rec;
        rec["step"] = p.step;
        rec["epoch"] = p.epoch;
        rec["loss"] = p.loss;
        rec["accuracy"] = p.accuracy;
        out << rec.dump() << '\n';
    }
    if (!out) throw data_error("failed while writing timeline to '" + path + "'");
}

std::vector<TimelinePoint> read_timeline_jsonl(const std::string& path) {
    std::ifstream in = open_in(path);
    std::vector<TimelinePoint> timeline;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        nlohmann::json rec;
        try {
            rec = nlohmann::json::parse(line);
        } catch (const nlohmann::json::exception& e) {
            throw data_error("timeline '" + path + "' line " + std::to_string(lineno) +
                             ": invalid JSON: " + e.what());
        }
        TimelinePoint p;
        p.step = rec.value("step", std::size_t{0});
        p.epoch = rec.value("epoch", std::size_t{0});
        p.loss = rec.value("loss", 0.0);
        p.accuracy = rec.value("accuracy", 0.0);
        timeline.push_back(p);
    }
    return timeline;
}

void write_matrix_csv(const std::string& path, const Matrix& m,
                      const std::vector<std::string>& row_labels,
                      const std::vector<std::string>& col_labels) {
    if (!row_labels.empty() && row_labels.size() != m.rows) {
        throw data_error("write_matrix_csv: " + std::to_string(row_labels.size()) +
                         " row labels for matrix " + shape_string(m));
    }
    if (!col_labels.empty() && col_labels.size() != m.cols) {
        throw data_error("write_matrix_csv: " + std::to_string(col_labels.size()) +
                         " column labels for matrix " + shape_string(m));
    }
    std::ofstream out = open_out(path);
    out << "label";
    for (std::size_t c = 0; c < m.cols; ++c) {
        out << ',' << (col_labels.empty() ? std::to_string(c) : col_labels[c]);
    }
    out << '\n';
    for (std::size_t r = 0; r < m.rows; ++r) {
        out << (row_labels.empty() ? std::to_string(r) : row_labels[r]);
        for (std::size_t c = 0; c < m.cols; ++c) out << ',' << format_double(m(r, c));
        out << '\n';
    }
    if (!out) throw data_error("failed while writing matrix to '" + path + "'");
}

LabeledMatrix read_matrix_csv(const std::string& path) {
    std::ifstream in = open_in(path);
    std::string line;
    if (!std::getline(in, line)) throw data_error("matrix '" + path + "': empty file");
    auto head = split_csv_line(line);
    if (head.size() < 2) throw data_error("matrix '" + path + "': header has no columns");
    LabeledMatrix out;
    out.col_labels.assign(head.begin() + 1, head.end());
    std::vector<double> values;
    std::size_t lineno = 1;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        const auto cells = split_csv_line(line);
        const std::string where = "matrix '" + path + "' line " + std::to_string(lineno);
        if (cells.size() != head.size()) {
            throw data_error(where + ": expected " + std::to_string(head.size()) +
                             " fields, got " + std::to_string(cells.size()));
        }
        out.row_labels.push_back(cells[0]);
        for (std::size_t c = 1; c < cells.size(); ++c) values.push_back(parse_double(cells[c], where));
    }
    if (out.row_labels.empty()) throw data_error("matrix '" + path + "': no data rows");
    out.values = Matrix(out.row_labels.size(), out.col_labels.size());
    out.values.data = std::move(values);
    return out;
}

void write_bigram_counts_csv(const std::string& path, const BigramCounts& counts) {
    std::ofstream out = open_out(path);
    out << "s,s_next,count\n";
    for (const auto& [pair, count] : counts.pairs) {
        out << pair.first << ',' << pair.second << ',' << count << '\n';
    }
    if (!out) throw data_error("failed while writing bigram counts to '" + path + "'");
}

BigramCounts read_bigram_counts_csv(const std::string& path) {
    std::ifstream in = open_in(path);
    std::string line;
    if (!std::getline(in, line) || line != "s,s_next,count") {
        throw data_error("bigram counts '" + path + "': expected header 's,s_next,count'");
    }
    BigramCounts counts;
    std::size_t lineno = 1;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        const auto cells = split_csv_line(line);
        const std::string where = "bigram counts '" + path + "' line " + std::to_string(lineno);
        if (cells.size() != 3) {
            throw data_error(where + ": expected 3 fields, got " + std::to_string(cells.size()));
        }
        const long long s = parse_int(cells[0], where);
        const long long t = parse_int(cells[1], where);
        const long long c = parse_int(cells[2], where);
        if (s < 0 || t < 0 || c <= 0) {
            throw data_error(where + ": tokens must be non-negative and count positive");
        }
        counts.add(static_cast<std::uint32_t>(s), static_cast<std::uint32_t>(t),
                   static_cast<std::uint64_t>(c));
    }
    return counts;
}

void write_text_file(const std::string& path, const std::string& content) {
    std::ofstream out = open_out(path);
    out << content;
    if (!out) throw data_error("failed while writing '" + path + "'");
}

std::string read_text_file(const std::string& path) {
    std::ifstream in = open_in(path);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

} // namespace embsig
