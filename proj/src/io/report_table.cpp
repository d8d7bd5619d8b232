#include "qdm/io/report_table.hpp"

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>

#include "qdm/common.hpp"

namespace qdm {

namespace {

std::vector<std::string> split_row(const std::string& line) {
    std::vector<std::string> out;
    std::string cell;
    std::stringstream ss(line);
    while (std::getline(ss, cell, ',')) out.push_back(cell);
    if (!line.empty() && line.back() == ',') out.emplace_back();
    return out;
}

std::string check_text(const std::string& s) {
    if (s.find_first_of(",\n\r") != std::string::npos) throw InvalidArgument("report cells must not contain commas or newlines");
    return s;
}

}  // namespace

ReportTable::ReportTable(std::vector<std::string> columns, std::vector<std::string> units)
    : columns_(std::move(columns)), units_(std::move(units)) {
    if (columns_.empty() || columns_.size() != units_.size())
        throw InvalidArgument("report table needs one unit per column");
    for (const auto& c : columns_) check_text(c);
    for (const auto& u : units_) check_text(u);
}

std::string ReportTable::format_number(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

void ReportTable::add_row(const std::vector<Cell>& row) {
    if (row.size() != columns_.size()) throw InvalidArgument("report row has the wrong number of cells");
    std::vector<std::string> out;
    for (const auto& c : row) {
        if (const double* d = std::get_if<double>(&c)) out.push_back(format_number(*d));
        else if (const long long* i = std::get_if<long long>(&c)) out.push_back(std::to_string(*i));
        else out.push_back(check_text(std::get<std::string>(c)));
    }
    rows_.push_back(std::move(out));
}

std::size_t ReportTable::column_index(const std::string& name) const {
    for (std::size_t i = 0; i < columns_.size(); ++i)
        if (columns_[i] == name) return i;
    throw DataError("report has no column '" + name + "'");
}

double ReportTable::number(std::size_t row, const std::string& column) const {
    const std::string& s = cell(row, column_index(column));
    char* end = nullptr;
    const double v = std::strtod(s.c_str(), &end);
    if (end == s.c_str() || *end != '\0') throw DataError("report cell '" + s + "' is not a number");
    return v;
}

void ReportTable::write(std::ostream& out) const {
    auto line = [&out](const std::vector<std::string>& cells) {
        for (std::size_t i = 0; i < cells.size(); ++i) out << (i ? "," : "") << cells[i];
        out << "\n";
    };
    line(columns_);
    line(units_);
    for (const auto& r : rows_) line(r);
}

void ReportTable::save(const std::string& path) const {
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw DataError("cannot write '" + path + "'");
    write(out);
}

ReportTable ReportTable::parse(std::istream& in) {
    std::string header, units;
    if (!std::getline(in, header) || !std::getline(in, units)) throw DataError("report table lacks header and units rows");
    ReportTable t(split_row(header), split_row(units));
    std::string line;
    std::size_t n = 2;
    while (std::getline(in, line)) {
        ++n;
        if (line.empty()) continue;
        auto cells = split_row(line);
        if (cells.size() != t.columns_.size())
            throw DataError("report line " + std::to_string(n) + " has " + std::to_string(cells.size()) + " cells, expected " +
                            std::to_string(t.columns_.size()));
        t.rows_.push_back(std::move(cells));
    }
    return t;
}

ReportTable ReportTable::load(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open '" + path + "'");
    return parse(in);
}

}  // namespace qdm
