#include "rgflow/table.hpp"

#include <charconv>
#include <cmath>
#include <istream>
#include <ostream>
#include <stdexcept>
#include <system_error>

namespace rgflow::io {

void Table::add_row(std::vector<Cell> row) {
    if (row.size() != columns.size()) throw std::invalid_argument("row width does not match the table columns");
    rows.push_back(std::move(row));
}

std::string format_double(double x) {
    if (std::isnan(x)) return "nan";
    if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof buf, x);
    if (res.ec != std::errc{}) throw std::runtime_error("could not format double");
    return {buf, res.ptr};
}

namespace {

std::string cell_text(const Cell& c) {
    if (const auto* i = std::get_if<long long>(&c)) return std::to_string(*i);
    if (const auto* d = std::get_if<double>(&c)) return format_double(*d);
    return std::get<std::string>(c);
}

std::vector<std::string> split(const std::string& s, char sep) {
    std::vector<std::string> out;
    std::string cur;
    for (char ch : s) {
        if (ch == sep) {
            out.push_back(cur);
            cur.clear();
        } else {
            cur.push_back(ch);
        }
    }
    out.push_back(cur);
    return out;
}

Cell parse_cell(const std::string& s) {
    if (s == "nan") return std::nan("");
    if (s == "inf") return INFINITY;
    if (s == "-inf") return -INFINITY;
    double v = 0.0;
    const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
    if (res.ec == std::errc{} && res.ptr == s.data() + s.size() && !s.empty()) return v;
    return s;
}

}  // namespace

void write_csv(const Table& table, std::ostream& out) {
    out << "# " << kSchema << ' ' << table.kind << ": ";
    for (std::size_t i = 0; i < table.columns.size(); ++i) {
        if (i) out << ',';
        out << table.columns[i].name << '[' << table.columns[i].unit << ']';
    }
    out << '\n';
    for (const auto& row : table.rows) {
        for (std::size_t i = 0; i < row.size(); ++i) {
            if (i) out << ',';
            out << cell_text(row[i]);
        }
        out << '\n';
    }
}

Table read_csv(std::istream& in) {
    std::string line;
    if (!std::getline(in, line)) throw std::runtime_error("empty table");
    const std::string prefix = std::string("# ") + kSchema + ' ';
    if (line.rfind(prefix, 0) != 0) throw std::runtime_error("missing or unsupported table header");
    const auto colon = line.find(": ", prefix.size());
    if (colon == std::string::npos) throw std::runtime_error("table header has no column list");

    Table t;
    t.kind = line.substr(prefix.size(), colon - prefix.size());
    for (const auto& spec : split(line.substr(colon + 2), ',')) {
        const auto open = spec.find('[');
        if (open == std::string::npos || spec.back() != ']') throw std::runtime_error("column without unit: " + spec);
        t.columns.push_back({spec.substr(0, open), spec.substr(open + 1, spec.size() - open - 2)});
    }
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::vector<Cell> row;
        for (const auto& cell : split(line, ',')) row.push_back(parse_cell(cell));
        if (row.size() != t.columns.size()) throw std::runtime_error("row width mismatch: " + line);
        t.rows.push_back(std::move(row));
    }
    return t;
}

nlohmann::ordered_json to_json(const Table& table, const nlohmann::ordered_json& inputs) {
    nlohmann::ordered_json j;
    j["schema"] = kSchema;
    j["kind"] = table.kind;
    j["inputs"] = inputs;
    auto cols = nlohmann::ordered_json::array();
    for (const auto& c : table.columns) cols.push_back({{"name", c.name}, {"unit", c.unit}});
    j["columns"] = std::move(cols);
    auto rows = nlohmann::ordered_json::array();
    for (const auto& row : table.rows) {
        auto r = nlohmann::ordered_json::array();
        for (const auto& c : row) {
            if (const auto* i = std::get_if<long long>(&c))
                r.push_back(*i);
            else if (const auto* d = std::get_if<double>(&c))
                r.push_back(std::isfinite(*d) ? nlohmann::ordered_json(*d) : nlohmann::ordered_json(nullptr));
            else
                r.push_back(std::get<std::string>(c));
        }
        rows.push_back(std::move(r));
    }
    j["rows"] = std::move(rows);
    return j;
}

}  // namespace rgflow::io
