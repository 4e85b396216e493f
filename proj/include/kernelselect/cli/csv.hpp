#pragma once

// CSV dialect: comma separated, '.' decimal point, lines starting with '#' are
// comments, blank lines ignored, the first remaining line is the header.

#include <filesystem>
#include <string>
#include <vector>

namespace ksel::cli {

struct CsvTable {
    std::string source;
    std::vector<std::string> header;
    std::vector<std::vector<double>> rows;
    /// 1-based source line of each row.
    std::vector<std::size_t> lines;

    std::size_t column(const std::string& name) const;
};

/// IngestionError with "source:line: message" on malformed content.
CsvTable parse_csv(const std::string& text, const std::string& source);
CsvTable read_csv(const std::filesystem::path& path);

std::string read_file(const std::filesystem::path& path);

/// Shortest round-trip text of a double.
std::string format_double(double v);

}  // namespace ksel::cli
