#pragma once

#include <cstddef>
#include <map>
#include <string>
#include <vector>

namespace slope {

/// Rectangular numeric CSV: comma separated, one header row, UTF-8, '.'
/// decimal, no missing values. Parse errors carry 1-based line numbers.
struct CsvTable {
    std::vector<std::string> columns;
    std::vector<std::vector<double>> rows;

    std::size_t ncols() const { return columns.size(); }
    std::size_t nrows() const { return rows.size(); }
    std::size_t column_index(const std::string& name) const;  // throws if absent
};

CsvTable read_csv(const std::string& path);
void write_csv(const std::string& path, const std::vector<std::string>& columns,
               const std::vector<std::vector<double>>& rows);

/// Numbers are formatted with 9 significant digits everywhere.
std::string format_number(double v);

/// Flat key=value config with [section] headers and '#' comments. Keys are
/// addressed as "section.key".
class Config {
  public:
    static Config parse_file(const std::string& path);
    static Config parse_string(const std::string& text, const std::string& origin = "<inline>");

    bool has(const std::string& key) const;
    std::string get(const std::string& key) const;
    std::string get_or(const std::string& key, const std::string& fallback) const;
    double get_double(const std::string& key) const;
    double get_double_or(const std::string& key, double fallback) const;
    long get_int(const std::string& key) const;
    long get_int_or(const std::string& key, long fallback) const;
    void set(const std::string& key, const std::string& value);

    const std::map<std::string, std::string>& entries() const { return entries_; }

  private:
    std::map<std::string, std::string> entries_;
};

std::vector<std::string> split_list(const std::string& text, char sep = ',');

}  // namespace slope
