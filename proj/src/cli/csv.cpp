#include "kernelselect/cli/csv.hpp"

#include <charconv>
#include <fstream>
#include <sstream>

#include <fmt/format.h>

#include "kernelselect/common.hpp"

namespace ksel::cli {

namespace {

std::string trim(std::string_view s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string_view::npos) return {};
    const auto e = s.find_last_not_of(" \t\r");
    return std::string(s.substr(b, e - b + 1));
}

std::vector<std::string> split(const std::string& line) {
    std::vector<std::string> out;
    std::size_t start = 0;
    while (true) {
        const auto pos = line.find(',', start);
        out.push_back(trim(std::string_view(line).substr(start, pos == std::string::npos ? std::string::npos : pos - start)));
        if (pos == std::string::npos) break;
        start = pos + 1;
    }
    return out;
}

[[noreturn]] void fail(const std::string& source, std::size_t line, const std::string& msg) {
    throw IngestionError(fmt::format("{}:{}: {}", source, line, msg));
}

}  // namespace

std::size_t CsvTable::column(const std::string& name) const {
    for (std::size_t i = 0; i < header.size(); ++i)
        if (header[i] == name) return i;
    throw IngestionError(fmt::format("{}: missing column '{}'", source, name));
}

CsvTable parse_csv(const std::string& text, const std::string& source) {
    CsvTable t;
    t.source = source;
    std::istringstream in(text);
    std::string raw;
    std::size_t line_no = 0;
    bool have_header = false;
    while (std::getline(in, raw)) {
        ++line_no;
        const std::string line = trim(raw);
        if (line.empty() || line.front() == '#') continue;
        const auto fields = split(line);
        if (!have_header) {
            for (const auto& f : fields)
                if (f.empty()) fail(source, line_no, "empty column name in header");
            t.header = fields;
            have_header = true;
            continue;
        }
        if (fields.size() != t.header.size())
            fail(source, line_no, fmt::format("expected {} fields, found {}", t.header.size(), fields.size()));
        std::vector<double> row;
        row.reserve(fields.size());
        for (const auto& f : fields) {
            double v = 0.0;
            const char* first = f.data();
            const char* last = f.data() + f.size();
            if (!f.empty() && *first == '+') ++first;
            const auto [ptr, ec] = std::from_chars(first, last, v);
            if (f.empty() || ec != std::errc() || ptr != last) fail(source, line_no, fmt::format("not a number: '{}'", f));
            if (!std::isfinite(v)) fail(source, line_no, fmt::format("non-finite value '{}'", f));
            row.push_back(v);
        }
        t.rows.push_back(std::move(row));
        t.lines.push_back(line_no);
    }
    if (!have_header) throw IngestionError(source + ": no header line");
    return t;
}

std::string read_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IngestionError("cannot open '" + path.string() + "'");
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

CsvTable read_csv(const std::filesystem::path& path) { return parse_csv(read_file(path), path.string()); }

std::string format_double(double v) { return fmt::format("{}", v); }

}  // namespace ksel::cli
