#pragma once

// Minimal CSV reading/writing with shortest round-trip number formatting.

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <string>
#include <string_view>
#include <vector>

namespace sopfx::csv {

/// Shortest decimal that parses back to the same double.
std::string fmt(double v);
std::string fmt(std::int64_t v);
std::string fmt(std::uint64_t v);
inline std::string fmt(int v) { return fmt(static_cast<std::int64_t>(v)); }

class Writer {
public:
    /// Throws InvalidInput if the file cannot be created.
    Writer(const std::filesystem::path& path, const std::vector<std::string>& header);

    void row(const std::vector<std::string>& cells);
    /// Appends one cell to the pending row.
    Writer& operator<<(const std::string& cell);
    Writer& operator<<(double v) { return *this << fmt(v); }
    void end_row();

private:
    std::ofstream out_;
    std::filesystem::path path_;
    std::size_t columns_;
    std::vector<std::string> pending_;
};

struct Table {
    std::vector<std::string> header;
    std::vector<std::vector<std::string>> rows;

    /// Throws InvalidInput for an unknown column.
    std::size_t column(std::string_view name) const;
};

/// Comma-separated, no quoting. Throws InvalidInput if missing or ragged.
Table read(const std::filesystem::path& path, bool has_header = true);

/// Strict full-string parse; throws InvalidInput naming `what`.
double parse_double(std::string_view s, std::string_view what);

} // namespace sopfx::csv
