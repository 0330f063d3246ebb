// csv.hpp: result tables: '#'-prefixed "key: value" metadata lines, one
// header row, then data rows. Doubles are written in shortest round-trip form
// so a reread table compares bit-for-bit equal.

#pragma once

#include <cstdint>
#include <fstream>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace ppk::csv {

using Metadata = std::vector<std::pair<std::string, std::string>>;
using Row = std::vector<std::string>;

std::string format(double v);
std::string format(std::int64_t v);
std::string format(std::uint64_t v);
inline std::string format(int v) { return format(static_cast<std::int64_t>(v)); }
inline std::string format(long long v) { return format(static_cast<std::int64_t>(v)); }
inline std::string format(std::string s) { return s; }
inline std::string format(const char* s) { return s; }

// Throws std::invalid_argument on anything but a complete number.
double parse_double(std::string_view s);
std::int64_t parse_int(std::string_view s);

struct Table {
    Metadata metadata;
    std::vector<std::string> columns;
    std::vector<Row> rows;

    std::size_t column(std::string_view name) const;  // throws std::out_of_range
    const std::string* meta(std::string_view key) const;
    std::vector<double> numeric_column(std::string_view name) const;
};

// Writes header immediately; every write_row is flushed so an interrupted
// run leaves a valid prefix.
class Writer {
public:
    Writer(const std::string& path, const Metadata& metadata, const std::vector<std::string>& columns);
    // Reopens an existing file keeping its first `keep_rows` data rows.
    static Writer resume(const std::string& path, std::size_t keep_rows);

    void write_row(const Row& row);
    std::size_t rows_written() const noexcept { return rows_; }

private:
    Writer() = default;
    std::ofstream out_;
    std::size_t columns_ = 0;
    std::size_t rows_ = 0;
};

Table read(const std::string& path);
void write(const std::string& path, const Table& table);

}  // namespace ppk::csv
