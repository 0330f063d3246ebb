#include "ppk/csv.hpp"

#include <array>
#include <charconv>
#include <cmath>
#include <sstream>
#include <stdexcept>

namespace ppk::csv {

std::string format(double v) {
    if (std::isnan(v)) return "nan";
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    std::array<char, 64> buf{};
    const auto res = std::to_chars(buf.data(), buf.data() + buf.size(), v);
    return std::string(buf.data(), res.ptr);
}

std::string format(std::int64_t v) { return std::to_string(v); }
std::string format(std::uint64_t v) { return std::to_string(v); }

double parse_double(std::string_view s) {
    if (s == "nan") return std::nan("");
    if (s == "inf") return INFINITY;
    if (s == "-inf") return -INFINITY;
    double v = 0.0;
    const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
    if (res.ec != std::errc() || res.ptr != s.data() + s.size())
        throw std::invalid_argument("csv: not a number: '" + std::string(s) + "'");
    return v;
}

std::int64_t parse_int(std::string_view s) {
    std::int64_t v = 0;
    const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
    if (res.ec != std::errc() || res.ptr != s.data() + s.size())
        throw std::invalid_argument("csv: not an integer: '" + std::string(s) + "'");
    return v;
}

std::size_t Table::column(std::string_view name) const {
    for (std::size_t i = 0; i < columns.size(); ++i)
        if (columns[i] == name) return i;
    throw std::out_of_range("csv: no column '" + std::string(name) + "'");
}

const std::string* Table::meta(std::string_view key) const {
    for (const auto& [k, v] : metadata)
        if (k == key) return &v;
    return nullptr;
}

std::vector<double> Table::numeric_column(std::string_view name) const {
    const std::size_t c = column(name);
    std::vector<double> out;
    out.reserve(rows.size());
    for (const auto& r : rows) out.push_back(parse_double(r.at(c)));
    return out;
}

namespace {

std::vector<std::string> split(const std::string& line) {
    std::vector<std::string> cells;
    std::string cell;
    std::istringstream is(line);
    while (std::getline(is, cell, ',')) cells.push_back(cell);
    if (!line.empty() && line.back() == ',') cells.emplace_back();
    return cells;
}

void write_line(std::ostream& os, const std::vector<std::string>& cells) {
    for (std::size_t i = 0; i < cells.size(); ++i) {
        if (cells[i].find_first_of(",\n") != std::string::npos)
            throw std::invalid_argument("csv: cell contains a separator: '" + cells[i] + "'");
        if (i) os << ',';
        os << cells[i];
    }
    os << '\n';
}

}  // namespace

Writer::Writer(const std::string& path, const Metadata& metadata, const std::vector<std::string>& columns)
    : out_(path, std::ios::out | std::ios::trunc), columns_(columns.size()) {
    if (!out_) throw std::runtime_error("csv: cannot open '" + path + "' for writing");
    for (const auto& [k, v] : metadata) out_ << "# " << k << ": " << v << '\n';
    write_line(out_, columns);
    out_.flush();
}

Writer Writer::resume(const std::string& path, std::size_t keep_rows) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("csv: cannot resume, '" + path + "' does not exist");
    std::string kept, line;
    std::size_t columns = 0;
    bool header = false;
    std::size_t rows = 0;
    while (std::getline(in, line)) {
        if (!header) {
            kept += line + '\n';
            if (!line.empty() && line[0] != '#') {
                header = true;
                columns = split(line).size();
            }
            continue;
        }
        if (rows == keep_rows) break;
        kept += line + '\n';
        ++rows;
    }
    if (!header) throw std::runtime_error("csv: cannot resume, '" + path + "' has no header row");
    if (rows < keep_rows) throw std::runtime_error("csv: cannot resume, '" + path + "' has fewer rows than recorded");
    in.close();
    Writer w;
    w.out_.open(path, std::ios::out | std::ios::trunc);
    if (!w.out_) throw std::runtime_error("csv: cannot open '" + path + "' for writing");
    w.out_ << kept;
    w.out_.flush();
    w.columns_ = columns;
    w.rows_ = rows;
    return w;
}

void Writer::write_row(const Row& row) {
    if (row.size() != columns_) {
        std::ostringstream os;
        os << "csv: row has " << row.size() << " cells, header has " << columns_;
        throw std::invalid_argument(os.str());
    }
    write_line(out_, row);
    out_.flush();
    ++rows_;
}

Table read(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("csv: cannot open '" + path + "'");
    Table t;
    std::string line;
    bool header = false;
    while (std::getline(in, line)) {
        if (!header && !line.empty() && line[0] == '#') {
            std::string body = line.substr(1);
            if (!body.empty() && body[0] == ' ') body.erase(0, 1);
            const auto colon = body.find(": ");
            if (colon == std::string::npos) t.metadata.emplace_back(body, "");
            else t.metadata.emplace_back(body.substr(0, colon), body.substr(colon + 2));
            continue;
        }
        if (line.empty()) continue;
        if (!header) {
            t.columns = split(line);
            header = true;
            continue;
        }
        auto cells = split(line);
        if (cells.size() != t.columns.size()) {
            std::ostringstream os;
            os << "csv: '" << path << "' row " << t.rows.size() + 1 << " has " << cells.size() << " cells, expected "
               << t.columns.size();
            throw std::runtime_error(os.str());
        }
        t.rows.push_back(std::move(cells));
    }
    if (!header) throw std::runtime_error("csv: '" + path + "' has no header row");
    return t;
}

void write(const std::string& path, const Table& table) {
    Writer w(path, table.metadata, table.columns);
    for (const auto& r : table.rows) w.write_row(r);
}

}  // namespace ppk::csv
