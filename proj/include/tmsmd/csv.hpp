#pragma once

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstddef>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>
#include <string>
#include <string_view>
#include <system_error>
#include <vector>

#include "tmsmd/error.hpp"

namespace tmsmd::csv {

/// Shortest round-trip text for a double. Deterministic across runs, which
/// the byte-identical replay contract relies on.
inline std::string format(double value) {
    if (std::isnan(value)) return "nan";
    if (std::isinf(value)) return value > 0 ? "inf" : "-inf";
    if (value == 0.0) return "0";  // folds -0
    char buf[32];
    auto [end, ec] = std::to_chars(buf, buf + sizeof(buf), value);
    return std::string(buf, end);
}

inline std::string_view trim(std::string_view s) {
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
    return s;
}

inline std::vector<std::string_view> split(std::string_view line, char sep = ',') {
    std::vector<std::string_view> out;
    std::size_t start = 0;
    for (;;) {
        const auto pos = line.find(sep, start);
        if (pos == std::string_view::npos) {
            out.push_back(trim(line.substr(start)));
            return out;
        }
        out.push_back(trim(line.substr(start, pos - start)));
        start = pos + 1;
    }
}

inline bool parse_double(std::string_view s, double& out) {
    s = trim(s);
    if (s.empty()) return false;
    if (s.front() == '+') s.remove_prefix(1);
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
    return ec == std::errc{} && ptr == s.data() + s.size() && std::isfinite(out);
}

inline bool parse_int(std::string_view s, long long& out) {
    s = trim(s);
    if (s.empty()) return false;
    if (s.front() == '+') s.remove_prefix(1);
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
    return ec == std::errc{} && ptr == s.data() + s.size();
}

/// Minimal table: header names plus raw text cells.
struct Table {
    std::vector<std::string> header;
    std::vector<std::vector<std::string>> rows;
    std::vector<std::size_t> line_numbers;  // 1-based file line of each row

    [[nodiscard]] std::ptrdiff_t column(std::string_view name) const {
        auto it = std::find(header.begin(), header.end(), name);
        return it == header.end() ? -1 : std::distance(header.begin(), it);
    }
};

inline Table read_table(std::istream& in) {
    Table table;
    std::string line;
    std::size_t line_no = 0;
    bool have_header = false;
    while (std::getline(in, line)) {
        ++line_no;
        std::string_view view = trim(line);
        if (line_no == 1 && view.size() >= 3 && view.substr(0, 3) == "\xEF\xBB\xBF") view.remove_prefix(3);
        if (view.empty() || view.front() == '#') continue;
        auto cells = split(view);
        if (!have_header) {
            for (auto c : cells) table.header.emplace_back(c);
            have_header = true;
            continue;
        }
        if (cells.size() != table.header.size())
            throw ParseError(line_no, "expected " + std::to_string(table.header.size()) + " fields, got " +
                                          std::to_string(cells.size()));
        std::vector<std::string> row;
        row.reserve(cells.size());
        for (auto c : cells) row.emplace_back(c);
        table.rows.push_back(std::move(row));
        table.line_numbers.push_back(line_no);
    }
    return table;
}

inline Table read_table(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open " + path);
    return read_table(in);
}

/// Reads one numeric column. With an empty `name` the first column is used.
inline std::vector<double> read_column(const std::string& path, std::string_view name = {}) {
    const Table table = read_table(path);
    if (table.header.empty()) return {};
    std::ptrdiff_t col = name.empty() ? 0 : table.column(name);
    if (col < 0) throw DataError(path + ": no column named " + std::string(name));
    std::vector<double> values;
    values.reserve(table.rows.size());
    for (std::size_t r = 0; r < table.rows.size(); ++r) {
        double v = 0.0;
        if (!parse_double(table.rows[r][col], v))
            throw ParseError(table.line_numbers[r], "non-numeric value '" + table.rows[r][col] + "'");
        values.push_back(v);
    }
    return values;
}

class Writer {
public:
    explicit Writer(std::ostream& out) : out_(out) {}

    template <typename... Cells>
    Writer& row(const Cells&... cells) {
        bool first = true;
        ((emit(cells, first)), ...);
        out_ << '\n';
        return *this;
    }

private:
    void sep(bool& first) {
        if (!first) out_ << ',';
        first = false;
    }
    void emit(double v, bool& first) { sep(first); out_ << format(v); }
    void emit(float v, bool& first) { emit(static_cast<double>(v), first); }
    template <typename Int>
        requires std::is_integral_v<Int>
    void emit(Int v, bool& first) { sep(first); out_ << v; }
    void emit(std::string_view v, bool& first) { sep(first); out_ << v; }
    void emit(const std::string& v, bool& first) { emit(std::string_view(v), first); }
    void emit(const char* v, bool& first) { emit(std::string_view(v), first); }

    std::ostream& out_;
};

}  // namespace tmsmd::csv
