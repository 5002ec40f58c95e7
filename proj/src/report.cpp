#include "embsig/report.hpp"

#include <fcntl.h>
#include <unistd.h>

#include <cerrno>
#include <cstdlib>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "json.hpp"

#include "embsig/error.hpp"
#include "embsig/io.hpp"

namespace fs = std::filesystem;

namespace embsig {

std::string fnv1a64_hex(const void* data, std::size_t len) {
    const auto* bytes = static_cast<const unsigned char*>(data);
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (std::size_t i = 0; i < len; ++i) {
        h ^= bytes[i];
        h *= 0x100000001b3ULL;
    }
    char buf[17];
    std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

std::string fnv1a64_hex(const std::string& bytes) { return fnv1a64_hex(bytes.data(), bytes.size()); }

std::string file_fnv1a64(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw data_error("cannot open '" + path + "' for checksumming");
    std::uint64_t h = 0xcbf29ce484222325ULL;
    char buf[1 << 16];
    while (in.read(buf, sizeof(buf)) || in.gcount() > 0) {
        const std::streamsize got = in.gcount();
        for (std::streamsize i = 0; i < got; ++i) {
            h ^= static_cast<unsigned char>(buf[i]);
            h *= 0x100000001b3ULL;
        }
        if (got < static_cast<std::streamsize>(sizeof(buf))) break;
    }
    char hex[17];
    std::snprintf(hex, sizeof(hex), "%016llx", static_cast<unsigned long long>(h));
    return hex;
}

std::map<std::string, std::string> parse_config_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw data_error("cannot open config file '" + path + "'");
    std::map<std::string, std::string> values;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        // Trim both ends.
        const auto first = line.find_first_not_of(" \t\r");
        if (first == std::string::npos) continue;
        const auto last = line.find_last_not_of(" \t\r");
        line = line.substr(first, last - first + 1);
        const auto eq = line.find('=');
        if (eq == std::string::npos || eq == 0) {
            throw data_error("config '" + path + "' line " + std::to_string(lineno) +
                             ": expected key=value, got '" + line + "'");
        }
        std::string key = line.substr(0, eq);
        std::string value = line.substr(eq + 1);
        const auto key_end = key.find_last_not_of(" \t");
        key = key.substr(0, key_end + 1);
        const auto val_start = value.find_first_not_of(" \t");
        value = val_start == std::string::npos ? "" : value.substr(val_start);
        values[key] = value;
    }
    return values;
}

std::string config_to_text(const std::map<std::string, std::string>& values) {
    std::ostringstream out;
    for (const auto& [key, value] : values) out << key << '=' << value << '\n';
    return out.str();
}

std::string resolve_out_root(const std::string& cli_value) {
    if (!cli_value.empty()) return cli_value;
    if (const char* env = std::getenv("EMBSIG_OUT"); env && *env) return env;
    return "runs";
}

void prepare_run_dir(const std::string& dir, bool force) {
    std::error_code ec;
    if (fs::exists(dir, ec)) {
        if (!fs::is_directory(dir, ec)) {
            throw data_error("output path '" + dir + "' exists and is not a directory");
        }
        bool empty = true;
        for (const auto& entry : fs::directory_iterator(dir, ec)) {
            (void)entry;
            empty = false;
            break;
        }
        if (!empty && !force) {
            throw data_error("output directory '" + dir +
                             "' is not empty (pass --force to write into it)");
        }
        return;
    }
    fs::create_directories(dir, ec);
    if (ec) {
        throw data_error("cannot create output directory '" + dir + "': " + ec.message());
    }
}

RunLock::RunLock(const std::string& dir) : path_(dir + "/.lock") {
    const int fd = ::open(path_.c_str(), O_CREAT | O_EXCL | O_WRONLY, 0644);
    if (fd < 0) {
        if (errno == EEXIST) {
            throw data_error("run directory '" + dir +
                             "' is locked by another process (remove " + path_ + " if stale)");
        }
        throw data_error("cannot create lock file '" + path_ + "': " + std::strerror(errno));
    }
    const std::string pid = std::to_string(::getpid()) + "\n";
    if (::write(fd, pid.data(), pid.size()) < 0) {
        // Lock still holds; the pid note is advisory only.
    }
    ::close(fd);
}

RunLock::~RunLock() { ::unlink(path_.c_str()); }

void RunManifest::add_file(const std::string& run_dir, const std::string& rel_name) {
    const std::string full = run_dir + "/" + rel_name;
    std::error_code ec;
    const auto bytes = fs::file_size(full, ec);
    if (ec) throw data_error("manifest: cannot stat '" + full + "': " + ec.message());
    files.push_back({rel_name, static_cast<std::uint64_t>(bytes), file_fnv1a64(full)});
}

void write_manifest(const std::string& path, const RunManifest& manifest) {
    nlohmann::json doc;
    doc["format"] = "embsig-manifest";
    doc["version"] = 1;
    doc["command"] = manifest.command;
    doc["info"] = manifest.info;
    doc["files"] = nlohmann::json::array();
    for (const ManifestEntry& e : manifest.files) {
        doc["files"].push_back({{"name", e.name}, {"bytes", e.bytes}, {"fnv1a64", e.fnv1a64}});
    }
    write_text_file(path, doc.dump(2) + "\n");
}

void write_run_index(const std::string& dir, const std::string& title,
                     const std::vector<ReportSection>& sections) {
    std::ostringstream md;
    md << "# " << title << "\n";
    for (const ReportSection& s : sections) {
        md << "\n## " << s.heading << "\n\n" << s.body_markdown;
        if (!s.body_markdown.empty() && s.body_markdown.back() != '\n') md << '\n';
    }
    write_text_file(dir + "/index.md", md.str());
}

} // namespace embsig
