#include "chaoslab/io.hpp"

#include <sys/utsname.h>

#include <chrono>
#include <cstdio>
#include <fstream>

#include "chaoslab/version.hpp"

namespace chaoslab {

std::string format_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

void write_text_file(const std::filesystem::path& path, const std::string& content, bool force) {
    if (!force && std::filesystem::exists(path))
        throw IoError("refusing to overwrite " + path.string() + " (pass --force)");
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot write " + path.string());
    out << content;
    if (!out) throw IoError("write failed for " + path.string());
}

void ensure_output_dir(const std::filesystem::path& dir) {
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    if (ec) throw IoError("cannot create output directory " + dir.string() + ": " + ec.message());
}

namespace {

std::string utc_now() {
    const auto now = std::chrono::system_clock::now();
    const std::time_t tt = std::chrono::system_clock::to_time_t(now);
    char buf[32];
    std::tm tm{};
    gmtime_r(&tt, &tm);
    std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

}  // namespace

nlohmann::json make_manifest(const nlohmann::json& config_echo, std::uint64_t master_seed,
                             int threads) {
    nlohmann::json m;
    m["config"] = config_echo;
    m["master_seed"] = master_seed;
    m["version"] = kVersion;
    m["started_utc"] = utc_now();
    m["threads"] = threads;
    utsname u{};
    if (uname(&u) == 0) {
        m["host"]["sysname"] = u.sysname;
        m["host"]["release"] = u.release;
        m["host"]["machine"] = u.machine;
    }
    return m;
}

void stamp_finished(nlohmann::json& manifest) { manifest["finished_utc"] = utc_now(); }

CsvWriter::CsvWriter(std::vector<std::string> columns) : n_columns_(columns.size()) {
    for (std::size_t i = 0; i < columns.size(); ++i) {
        if (i) buffer_ += ',';
        buffer_ += columns[i];
    }
    buffer_ += '\n';
}

void CsvWriter::add_row(const std::vector<std::string>& cells) {
    if (cells.size() != n_columns_)
        throw IoError("csv row has " + std::to_string(cells.size()) + " cells, expected " +
                      std::to_string(n_columns_));
    for (std::size_t i = 0; i < cells.size(); ++i) {
        if (i) buffer_ += ',';
        buffer_ += cells[i];
    }
    buffer_ += '\n';
}

std::string csv_cell(double v) { return format_double(v); }
std::string csv_cell(long long v) { return std::to_string(v); }

}  // namespace chaoslab
