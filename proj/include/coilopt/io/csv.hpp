#pragma once

#include "coilopt/errors.hpp"
#include "coilopt/rtd/rtd.hpp"

#include <charconv>
#include <cmath>
#include <limits>
#include <string>
#include <string_view>
#include <system_error>
#include <vector>

namespace coilopt::io {

/// Shortest decimal that parses back to the same double; "nan"/"inf" for
/// non-finite values.
inline std::string format_double(double v) {
    if (std::isnan(v)) return "nan";
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    char buf[32];
    const auto r = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, r.ptr);
}

inline double parse_double(std::string_view s) {
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
    if (s == "nan") return std::numeric_limits<double>::quiet_NaN();
    if (s == "inf") return std::numeric_limits<double>::infinity();
    if (s == "-inf") return -std::numeric_limits<double>::infinity();
    if (!s.empty() && s.front() == '+') s.remove_prefix(1);
    double v = 0.0;
    const auto r = std::from_chars(s.data(), s.data() + s.size(), v);
    if (r.ec != std::errc() || r.ptr != s.data() + s.size())
        throw InvalidArgument("not a number: '" + std::string(s) + "'");
    return v;
}

struct CsvTable {
    std::vector<std::string> header;
    std::vector<std::vector<std::string>> rows;

    std::size_t column(const std::string& name) const {
        for (std::size_t i = 0; i < header.size(); ++i)
            if (header[i] == name) return i;
        throw InvalidArgument("missing CSV column '" + name + "'");
    }
};

/// Comma-separated, first line is the header. No quoting; blank lines and
/// lines starting with '#' are skipped.
inline CsvTable parse_csv(std::string_view text) {
    CsvTable t;
    std::size_t line_no = 0;
    while (!text.empty()) {
        const auto nl = text.find('\n');
        std::string_view line = text.substr(0, nl);
        text = nl == std::string_view::npos ? std::string_view{} : text.substr(nl + 1);
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
        if (line.empty() || line.front() == '#') continue;
        std::vector<std::string> cells;
        std::size_t start = 0;
        for (;;) {
            const auto comma = line.find(',', start);
            std::string_view cell = line.substr(start, comma == std::string_view::npos ? std::string_view::npos : comma - start);
            while (!cell.empty() && cell.front() == ' ') cell.remove_prefix(1);
            while (!cell.empty() && cell.back() == ' ') cell.remove_suffix(1);
            cells.emplace_back(cell);
            if (comma == std::string_view::npos) break;
            start = comma + 1;
        }
        if (t.header.empty()) {
            t.header = std::move(cells);
        } else {
            if (cells.size() != t.header.size())
                throw InvalidArgument("CSV line " + std::to_string(line_no) + " has " + std::to_string(cells.size()) +
                                      " fields, expected " + std::to_string(t.header.size()));
            t.rows.push_back(std::move(cells));
        }
    }
    if (t.header.empty()) throw InvalidArgument("empty CSV");
    return t;
}

/// Trace CSV with columns time,concentration.
inline rtd::TimeSeries parse_trace_csv(std::string_view text) {
    const auto t = parse_csv(text);
    const auto ct = t.column("time");
    const auto cc = t.column("concentration");
    rtd::TimeSeries s;
    for (const auto& r : t.rows) {
        s.time.push_back(parse_double(r[ct]));
        s.concentration.push_back(parse_double(r[cc]));
    }
    return s;
}

inline std::string trace_csv(const rtd::TimeSeries& s) {
    std::string out = "time,concentration\n";
    for (std::size_t i = 0; i < s.time.size(); ++i)
        out += format_double(s.time[i]) + "," + format_double(s.concentration[i]) + "\n";
    return out;
}

}  // namespace coilopt::io
