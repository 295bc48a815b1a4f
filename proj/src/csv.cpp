#include "sopfx/csv.hpp"

#include "sopfx/error.hpp"

#include <charconv>
#include <cmath>
#include <sstream>

namespace sopfx::csv {

std::string fmt(double v) {
    if (std::isnan(v)) return "nan";
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, res.ptr);
}

std::string fmt(std::int64_t v) {
    char buf[32];
    const auto res = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, res.ptr);
}

std::string fmt(std::uint64_t v) {
    char buf[32];
    const auto res = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, res.ptr);
}

Writer::Writer(const std::filesystem::path& path, const std::vector<std::string>& header)
    : out_(path, std::ios::binary), path_(path), columns_(header.size()) {
    if (!out_) throw InvalidInput("cannot create " + path.string());
    row(header);
}

void Writer::row(const std::vector<std::string>& cells) {
    if (cells.size() != columns_) {
        throw InvalidInput(path_.string() + ": row has " + std::to_string(cells.size()) + " cells, expected " +
                           std::to_string(columns_));
    }
    for (std::size_t i = 0; i < cells.size(); ++i) {
        if (i) out_ << ',';
        out_ << cells[i];
    }
    out_ << '\n';
}

Writer& Writer::operator<<(const std::string& cell) {
    pending_.push_back(cell);
    return *this;
}

void Writer::end_row() {
    row(pending_);
    pending_.clear();
}

std::size_t Table::column(std::string_view name) const {
    for (std::size_t i = 0; i < header.size(); ++i) {
        if (header[i] == name) return i;
    }
    throw InvalidInput("missing column '" + std::string(name) + "'");
}

Table read(const std::filesystem::path& path, bool has_header) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw InvalidInput("missing file " + path.string());
    Table t;
    std::string line;
    std::size_t line_no = 0;
    std::size_t width = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        std::vector<std::string> cells;
        std::stringstream ss(line);
        std::string cell;
        while (std::getline(ss, cell, ',')) cells.push_back(cell);
        if (line.back() == ',') cells.emplace_back();
        if (has_header && t.header.empty()) {
            t.header = std::move(cells);
            width = t.header.size();
            continue;
        }
        if (width == 0) width = cells.size();
        if (cells.size() != width) {
            throw InvalidInput(path.string() + ":" + std::to_string(line_no) + ": expected " + std::to_string(width) +
                               " fields, found " + std::to_string(cells.size()));
        }
        t.rows.push_back(std::move(cells));
    }
    return t;
}

double parse_double(std::string_view s, std::string_view what) {
    if (s == "nan") return std::nan("");
    if (s == "inf") return INFINITY;
    if (s == "-inf") return -INFINITY;
    double v = 0.0;
    const char* b = s.data();
    const char* e = s.data() + s.size();
    if (!s.empty() && *b == '+') ++b;
    const auto res = std::from_chars(b, e, v);
    if (res.ec != std::errc{} || res.ptr != e || s.empty()) {
        throw InvalidInput("cannot parse '" + std::string(s) + "' as a number in " + std::string(what));
    }
    return v;
}

} // namespace sopfx::csv
