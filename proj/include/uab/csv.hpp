#pragma once

#include <cstddef>
#include <filesystem>
#include <optional>
#include <ostream>
#include <string>
#include <string_view>
#include <vector>

namespace uab {

/// Minimal RFC 4180 table: quoted fields, "" escapes, CRLF tolerant. Every
/// row must have as many fields as the header.
struct CsvTable {
    std::vector<std::string> header;
    std::vector<std::vector<std::string>> rows;
    std::vector<std::size_t> line_numbers;  // 1-based source line of each row

    [[nodiscard]] std::optional<std::size_t> find_column(std::string_view name) const;
    /// Throws ParseError naming the missing column.
    [[nodiscard]] std::size_t column(std::string_view name) const;
};

[[nodiscard]] CsvTable parse_csv(std::string_view text);
[[nodiscard]] CsvTable read_csv(const std::filesystem::path& path);

/// Quotes a field only when it needs it.
[[nodiscard]] std::string csv_escape(std::string_view field);
void write_csv_row(std::ostream& out, const std::vector<std::string>& fields);

/// Shortest representation that round-trips; stable across runs.
[[nodiscard]] std::string format_real(double v);
/// Empty string for a missing value.
[[nodiscard]] std::string format_real(const std::optional<double>& v);

/// Strict number parsing; the whole field must be consumed.
[[nodiscard]] std::optional<double> parse_real(std::string_view field);
[[nodiscard]] std::optional<long long> parse_integer(std::string_view field);

}  // namespace uab
