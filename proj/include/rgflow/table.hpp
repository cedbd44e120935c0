#pragma once

// Tabular output shared by the CLI: CSV with one '#'-prefixed header line
//
//     # rgflow/1 <kind>: name[unit],name[unit],...
//
// followed by comma-separated rows, and a JSON mirror that also carries the
// inputs that produced the table.

#include <iosfwd>
#include <json.hpp>
#include <string>
#include <variant>
#include <vector>

namespace rgflow::io {

inline constexpr const char* kSchema = "rgflow/1";

struct Column {
    std::string name;
    std::string unit;
};

using Cell = std::variant<long long, double, std::string>;

struct Table {
    std::string kind;
    std::vector<Column> columns;
    std::vector<std::vector<Cell>> rows;

    void add_row(std::vector<Cell> row);
};

/// Shortest decimal string that reads back to the same double; "nan",
/// "inf" and "-inf" for non-finite values.
std::string format_double(double x);

void write_csv(const Table& table, std::ostream& out);

/// Parses what write_csv produced. Numeric-looking cells become doubles,
/// everything else stays a string. Throws std::runtime_error on a
/// malformed header or a row with the wrong number of cells.
Table read_csv(std::istream& in);

/// Non-finite doubles become null.
nlohmann::ordered_json to_json(const Table& table, const nlohmann::ordered_json& inputs);

}  // namespace rgflow::io
