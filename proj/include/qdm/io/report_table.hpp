#pragma once

#include <iosfwd>
#include <string>
#include <variant>
#include <vector>

namespace qdm {

// Comma-separated text: header row, units row, then records.
// Numbers are written with 17 significant digits so they re-parse exactly.
class ReportTable {
public:
    using Cell = std::variant<double, long long, std::string>;

    ReportTable() = default;
    ReportTable(std::vector<std::string> columns, std::vector<std::string> units);

    void add_row(const std::vector<Cell>& row);

    const std::vector<std::string>& columns() const { return columns_; }
    const std::vector<std::string>& units() const { return units_; }
    std::size_t rows() const { return rows_.size(); }
    const std::string& cell(std::size_t row, std::size_t col) const { return rows_.at(row).at(col); }
    double number(std::size_t row, const std::string& column) const;
    std::size_t column_index(const std::string& name) const;

    void write(std::ostream& out) const;
    void save(const std::string& path) const;
    static ReportTable parse(std::istream& in);
    static ReportTable load(const std::string& path);

    static std::string format_number(double v);

private:
    std::vector<std::string> columns_;
    std::vector<std::string> units_;
    std::vector<std::vector<std::string>> rows_;
};

}  // namespace qdm
