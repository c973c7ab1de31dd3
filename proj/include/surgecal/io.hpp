#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

namespace surgecal {

/// Writes content to path via a temp file + rename, creating parent
/// directories as needed. Interrupted runs never leave partial files.
void write_file_atomic(const std::filesystem::path& path, const std::string& content);

std::string read_file(const std::filesystem::path& path);

/// Formats a double with enough digits to round-trip exactly.
std::string format_double(double v);

/// A parsed CSV table with a header row. Cells are raw strings; no quoting
/// support (none of the artifact's formats need it).
struct CsvTable {
    std::vector<std::string> header;
    std::vector<std::vector<std::string>> rows;

    int column(const std::string& name) const;  // -1 when absent
};

CsvTable read_csv(const std::filesystem::path& path);

std::string to_csv_line(const std::vector<std::string>& cells);

}  // namespace surgecal
