#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "chaoslab/errors.hpp"

namespace chaoslab {

// 17 significant digits; round-trips double -> text -> double exactly.
std::string format_double(double v);

// Refuses to clobber an existing file unless force is set.
void write_text_file(const std::filesystem::path& path, const std::string& content, bool force);

void ensure_output_dir(const std::filesystem::path& dir);

// Run manifest: config echo, seed, version, timestamps, host. The echoed
// config alone reproduces the run; timestamps and host are provenance only.
nlohmann::json make_manifest(const nlohmann::json& config_echo, std::uint64_t master_seed,
                             int threads);
void stamp_finished(nlohmann::json& manifest);

// Minimal CSV writer with deterministic formatting.
class CsvWriter {
public:
    explicit CsvWriter(std::vector<std::string> columns);
    void add_row(const std::vector<std::string>& cells);
    const std::string& content() const { return buffer_; }

private:
    std::size_t n_columns_;
    std::string buffer_;
};

std::string csv_cell(double v);
std::string csv_cell(long long v);

}  // namespace chaoslab
