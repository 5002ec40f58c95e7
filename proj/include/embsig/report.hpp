#pragma once

// Run-directory bookkeeping: output location resolution, config capture,
// content checksums, a manifest of produced files, a simple lock file, and
// a human-readable index page.

#include <cstdint>
#include <map>
#include <string>
#include <vector>

namespace embsig {

// FNV-1a 64-bit hash, rendered as 16 lowercase hex digits.
std::string fnv1a64_hex(const void* data, std::size_t len);
std::string fnv1a64_hex(const std::string& bytes);
std::string file_fnv1a64(const std::string& path);

// Reads a flat "key=value" file; '#' starts a comment, blank lines ignored.
std::map<std::string, std::string> parse_config_file(const std::string& path);

// Sorted "key=value" lines; the exact text persisted as effective_config.txt.
std::string config_to_text(const std::map<std::string, std::string>& values);

// Output root: explicit CLI value > EMBSIG_OUT environment variable > "runs".
std::string resolve_out_root(const std::string& cli_value);

// Creates the run directory (and parents).  Refuses a non-empty existing
// directory unless force is set.
void prepare_run_dir(const std::string& dir, bool force);

// Exclusive lock file <dir>/.lock; freed on destruction.
class RunLock {
  public:
    explicit RunLock(const std::string& dir);
    ~RunLock();
    RunLock(const RunLock&) = delete;
    RunLock& operator=(const RunLock&) = delete;

  private:
    std::string path_;
};

struct ManifestEntry {
    std::string name; // path relative to the run directory
    std::uint64_t bytes = 0;
    std::string fnv1a64;
};

struct RunManifest {
    std::string command;                      // subcommand that produced the run
    std::map<std::string, std::string> info;  // free-form run metadata
    std::vector<ManifestEntry> files;

    // Checksums <run_dir>/<rel_name> and records it.
    void add_file(const std::string& run_dir, const std::string& rel_name);
};

void write_manifest(const std::string& path, const RunManifest& manifest);

struct ReportSection {
    std::string heading;
    std::string body_markdown;
};

// Writes <dir>/index.md with a title and sections.
void write_run_index(const std::string& dir, const std::string& title,
                     const std::vector<ReportSection>& sections);

} // namespace embsig
