#include "slope/csv.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace slope {
namespace {

std::string trim(const std::string& s) {
    std::size_t a = 0, b = s.size();
    while (a < b && std::isspace(static_cast<unsigned char>(s[a]))) ++a;
    while (b > a && std::isspace(static_cast<unsigned char>(s[b - 1]))) --b;
    return s.substr(a, b - a);
}

double parse_number(const std::string& cell, const std::string& path, std::size_t line) {
    const std::string t = trim(cell);
    if (t.empty()) {
        throw std::runtime_error(path + ":" + std::to_string(line) + ": missing value");
    }
    try {
        std::size_t used = 0;
        const double v = std::stod(t, &used);
        if (used != t.size()) throw std::invalid_argument(t);
        return v;
    } catch (const std::exception&) {
        throw std::runtime_error(path + ":" + std::to_string(line) + ": non-numeric cell '" + t +
                                 "'");
    }
}

}  // namespace

std::size_t CsvTable::column_index(const std::string& name) const {
    const auto it = std::find(columns.begin(), columns.end(), name);
    if (it == columns.end()) throw std::runtime_error("csv: no column named '" + name + "'");
    return static_cast<std::size_t>(it - columns.begin());
}

CsvTable read_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("csv: cannot open '" + path + "'");
    CsvTable table;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (lineno == 1 && !line.empty() && static_cast<unsigned char>(line[0]) == 0xEF &&
            line.size() >= 3) {
            line = line.substr(3);  // strip a UTF-8 BOM
        }
        std::vector<std::string> cells;
        std::stringstream ss(line);
        std::string cell;
        while (std::getline(ss, cell, ',')) cells.push_back(cell);
        if (!line.empty() && line.back() == ',') cells.push_back("");
        if (lineno == 1) {
            for (auto& c : cells) table.columns.push_back(trim(c));
            if (table.columns.empty())
                throw std::runtime_error(path + ":1: empty header row");
            continue;
        }
        if (trim(line).empty()) continue;
        if (cells.size() != table.columns.size()) {
            throw std::runtime_error(path + ":" + std::to_string(lineno) + ": expected " +
                                     std::to_string(table.columns.size()) + " cells, got " +
                                     std::to_string(cells.size()));
        }
        std::vector<double> row(cells.size());
        for (std::size_t j = 0; j < cells.size(); ++j) row[j] = parse_number(cells[j], path, lineno);
        table.rows.push_back(std::move(row));
    }
    if (lineno == 0) throw std::runtime_error(path + ": empty file");
    return table;
}

std::string format_number(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.9g", v);
    return buf;
}

void write_csv(const std::string& path, const std::vector<std::string>& columns,
               const std::vector<std::vector<double>>& rows) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("csv: cannot write '" + path + "'");
    for (std::size_t j = 0; j < columns.size(); ++j) {
        if (j > 0) out << ',';
        out << columns[j];
    }
    out << '\n';
    for (const auto& row : rows) {
        if (row.size() != columns.size())
            throw std::runtime_error("csv: row width does not match header");
        for (std::size_t j = 0; j < row.size(); ++j) {
            if (j > 0) out << ',';
            out << format_number(row[j]);
        }
        out << '\n';
    }
    if (!out) throw std::runtime_error("csv: write failed for '" + path + "'");
}

Config Config::parse_string(const std::string& text, const std::string& origin) {
    Config cfg;
    std::stringstream in(text);
    std::string line;
    std::string section;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const std::string t = trim(line);
        if (t.empty() || t[0] == '#') continue;
        if (t.front() == '[') {
            if (t.back() != ']')
                throw std::runtime_error(origin + ":" + std::to_string(lineno) +
                                         ": malformed section header");
            section = trim(t.substr(1, t.size() - 2));
            continue;
        }
        const auto eq = t.find('=');
        if (eq == std::string::npos)
            throw std::runtime_error(origin + ":" + std::to_string(lineno) +
                                     ": expected key=value");
        const std::string key = trim(t.substr(0, eq));
        const std::string value = trim(t.substr(eq + 1));
        if (key.empty())
            throw std::runtime_error(origin + ":" + std::to_string(lineno) + ": empty key");
        cfg.entries_[section.empty() ? key : section + "." + key] = value;
    }
    return cfg;
}

Config Config::parse_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("config: cannot open '" + path + "'");
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_string(ss.str(), path);
}

bool Config::has(const std::string& key) const { return entries_.count(key) > 0; }

std::string Config::get(const std::string& key) const {
    const auto it = entries_.find(key);
    if (it == entries_.end()) throw std::runtime_error("config: missing key '" + key + "'");
    return it->second;
}

std::string Config::get_or(const std::string& key, const std::string& fallback) const {
    const auto it = entries_.find(key);
    return it == entries_.end() ? fallback : it->second;
}

double Config::get_double(const std::string& key) const {
    const std::string v = get(key);
    try {
        return std::stod(v);
    } catch (const std::exception&) {
        throw std::runtime_error("config: key '" + key + "' is not a number: '" + v + "'");
    }
}

double Config::get_double_or(const std::string& key, double fallback) const {
    return has(key) ? get_double(key) : fallback;
}

long Config::get_int(const std::string& key) const {
    const std::string v = get(key);
    try {
        return std::stol(v);
    } catch (const std::exception&) {
        throw std::runtime_error("config: key '" + key + "' is not an integer: '" + v + "'");
    }
}

long Config::get_int_or(const std::string& key, long fallback) const {
    return has(key) ? get_int(key) : fallback;
}

void Config::set(const std::string& key, const std::string& value) { entries_[key] = value; }

std::vector<std::string> split_list(const std::string& text, char sep) {
    std::vector<std::string> out;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, sep)) {
        const std::string t = trim(item);
        if (!t.empty()) out.push_back(t);
    }
    return out;
}

}  // namespace slope
