#pragma once

#include <cmath>
#include <cstdlib>
#include <fstream>
#include <limits>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "causalkit/util.hpp"

namespace causalkit {

struct IngestError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct Cell {
    enum class Kind { empty, number, text };
    Kind kind = Kind::empty;
    double number = 0.0;
    std::string text;  // trimmed raw content, kept for categorical coding
};

struct RawTable {
    std::vector<std::string> column_names;
    std::vector<std::vector<Cell>> rows;

    int column_count() const { return static_cast<int>(column_names.size()); }
    int row_count() const { return static_cast<int>(rows.size()); }
};

enum class VariableKind { likert7, numeric, categorical, excluded };

struct VariableSpec {
    std::string name;
    VariableKind kind = VariableKind::numeric;
    std::string category;
};

inline std::string variable_kind_name(VariableKind k) {
    switch (k) {
        case VariableKind::likert7: return "likert7";
        case VariableKind::numeric: return "numeric";
        case VariableKind::categorical: return "categorical";
        case VariableKind::excluded: return "excluded";
    }
    return "unknown";
}

inline VariableKind parse_variable_kind(const std::string &s) {
    if (s == "likert7") return VariableKind::likert7;
    if (s == "numeric") return VariableKind::numeric;
    if (s == "categorical") return VariableKind::categorical;
    if (s == "excluded") return VariableKind::excluded;
    throw IngestError("schema: unknown variable kind '" + s + "'");
}

/// Clean numeric table. Columns follow schema order; missing entries are NaN
/// with the mask set. Immutable by convention once built.
struct Dataset {
    int n = 0;
    int p = 0;
    std::vector<std::vector<double>> values;    // [p][n]
    std::vector<std::vector<uint8_t>> missing;  // [p][n]
    std::vector<VariableSpec> specs;            // excluded specs removed
    bool standardized = false;
    std::vector<std::string> provenance;  // one dropped item per line

    const std::string &name(int v) const { return specs.at(v).name; }

    std::vector<std::string> names() const {
        std::vector<std::string> out;
        out.reserve(specs.size());
        for (const auto &s : specs) out.push_back(s.name);
        return out;
    }

    bool has_missing() const {
        for (const auto &col : missing)
            for (uint8_t m : col)
                if (m) return true;
        return false;
    }

    int column_index(const std::string &name) const {
        for (int v = 0; v < p; ++v)
            if (specs[v].name == name) return v;
        return -1;
    }

    /// Sub-dataset with the given columns, in the given order.
    Dataset select_columns(const std::vector<int> &cols) const {
        Dataset out;
        out.n = n;
        out.p = static_cast<int>(cols.size());
        out.standardized = standardized;
        out.provenance = provenance;
        for (int c : cols) {
            out.values.push_back(values.at(c));
            out.missing.push_back(missing.at(c));
            out.specs.push_back(specs.at(c));
        }
        return out;
    }
};

namespace detail {

inline std::optional<double> parse_number(const std::string &s) {
    if (s.empty()) return std::nullopt;
    const char *begin = s.c_str();
    char *end = nullptr;
    errno = 0;
    const double v = std::strtod(begin, &end);
    if (end != begin + s.size() || errno == ERANGE) return std::nullopt;
    return v;
}

/// Splits one delimited record. Handles RFC4180-style quoting: quoted fields
/// may contain the delimiter and doubled quotes.
inline std::vector<std::string> split_record(const std::string &line, char delim) {
    std::vector<std::string> fields;
    std::string field;
    bool quoted = false;
    for (std::size_t i = 0; i < line.size(); ++i) {
        const char c = line[i];
        if (quoted) {
            if (c == '"') {
                if (i + 1 < line.size() && line[i + 1] == '"') {
                    field.push_back('"');
                    ++i;
                } else {
                    quoted = false;
                }
            } else {
                field.push_back(c);
            }
        } else if (c == '"' && field.empty()) {
            quoted = true;
        } else if (c == delim) {
            fields.push_back(field);
            field.clear();
        } else {
            field.push_back(c);
        }
    }
    fields.push_back(field);
    return fields;
}

inline std::string quote_if_needed(const std::string &s, char delim) {
    if (s.find(delim) == std::string::npos && s.find('"') == std::string::npos &&
        s.find('\n') == std::string::npos)
        return s;
    std::string out = "\"";
    for (char c : s) {
        if (c == '"') out += "\"\"";
        else out.push_back(c);
    }
    out += "\"";
    return out;
}

}  // namespace detail

/// Parses a delimited text table. The delimiter (comma or tab) is detected
/// from the header row; the first row is always the header.
inline RawTable load_table(const std::string &path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IngestError("load_table: cannot read file '" + path + "'");

    std::string header_line;
    int header_row = 0;
    do {  // leading '#' lines (artifact headers, comments) precede the header row
        if (!std::getline(in, header_line))
            throw IngestError("load_table: file '" + path + "' is empty");
        ++header_row;
        if (!header_line.empty() && header_line.back() == '\r') header_line.pop_back();
    } while (!header_line.empty() && header_line.front() == '#');

    const std::size_t commas = std::count(header_line.begin(), header_line.end(), ',');
    const std::size_t tabs = std::count(header_line.begin(), header_line.end(), '\t');
    const char delim = tabs > commas ? '\t' : ',';

    RawTable table;
    for (const std::string &raw : detail::split_record(header_line, delim)) {
        const std::string name = trim(raw);
        for (const std::string &existing : table.column_names)
            if (existing == name)
                throw IngestError("load_table: duplicate column name '" + name + "'");
        table.column_names.push_back(name);
    }
    const int m = table.column_count();

    std::string line;
    int row_number = header_row;
    while (std::getline(in, line)) {
        ++row_number;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty() && in.peek() == EOF) break;  // trailing newline
        const std::vector<std::string> fields = detail::split_record(line, delim);
        if (static_cast<int>(fields.size()) != m)
            throw IngestError("load_table: ragged row " + std::to_string(row_number) + " has " +
                              std::to_string(fields.size()) + " cells, expected " +
                              std::to_string(m));
        std::vector<Cell> cells;
        cells.reserve(m);
        for (const std::string &raw : fields) {
            Cell cell;
            cell.text = trim(raw);
            if (cell.text.empty()) {
                cell.kind = Cell::Kind::empty;
            } else if (auto num = detail::parse_number(cell.text)) {
                cell.kind = Cell::Kind::number;
                cell.number = *num;
            } else {
                cell.kind = Cell::Kind::text;
            }
            cells.push_back(std::move(cell));
        }
        table.rows.push_back(std::move(cells));
    }
    return table;
}

/// Schema file: one `column name = kind, category` entry per line.
/// Blank lines and lines starting with '#' are skipped.
inline std::vector<VariableSpec> load_schema(const std::string &path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IngestError("load_schema: cannot read file '" + path + "'");
    std::vector<VariableSpec> specs;
    std::string line;
    int line_number = 0;
    while (std::getline(in, line)) {
        ++line_number;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        const std::string stripped = trim(line);
        if (stripped.empty() || stripped.front() == '#') continue;
        const std::size_t eq = stripped.find('=');
        if (eq == std::string::npos)
            throw IngestError("load_schema: line " + std::to_string(line_number) +
                              " has no '=' separator");
        VariableSpec spec;
        spec.name = trim(stripped.substr(0, eq));
        std::string value = trim(stripped.substr(eq + 1));
        const std::size_t comma = value.find(',');
        if (comma == std::string::npos) {
            spec.kind = parse_variable_kind(trim(value));
        } else {
            spec.kind = parse_variable_kind(trim(value.substr(0, comma)));
            spec.category = trim(value.substr(comma + 1));
        }
        if (spec.name.empty())
            throw IngestError("load_schema: line " + std::to_string(line_number) +
                              " has an empty column name");
        specs.push_back(std::move(spec));
    }
    return specs;
}

/// Applies the schema: drops excluded columns, validates likert7 ranges,
/// integer-codes categoricals by first appearance. Output column order is
/// the schema order restricted to non-excluded specs.
inline Dataset apply_schema(const RawTable &table, const std::vector<VariableSpec> &specs) {
    std::map<std::string, int> column_of;
    for (int c = 0; c < table.column_count(); ++c) column_of[table.column_names[c]] = c;

    std::map<std::string, bool> spec_seen;
    for (const auto &spec : specs) {
        if (!column_of.count(spec.name))
            throw IngestError("apply_schema: spec column '" + spec.name +
                              "' not found in table");
        spec_seen[spec.name] = true;
    }
    for (const auto &name : table.column_names)
        if (!spec_seen.count(name))
            throw IngestError("apply_schema: table column '" + name + "' has no spec");

    Dataset data;
    data.n = table.row_count();
    for (const auto &spec : specs) {
        if (spec.kind == VariableKind::excluded) {
            data.provenance.push_back("column '" + spec.name + "' excluded by schema");
            continue;
        }
        const int c = column_of[spec.name];
        std::vector<double> column(data.n, std::numeric_limits<double>::quiet_NaN());
        std::vector<uint8_t> mask(data.n, 1);
        std::map<std::string, int> category_codes;  // value -> first-appearance code
        for (int r = 0; r < data.n; ++r) {
            const Cell &cell = table.rows[r][c];
            if (cell.kind == Cell::Kind::empty) continue;
            switch (spec.kind) {
                case VariableKind::likert7: {
                    if (cell.kind != Cell::Kind::number)
                        throw IngestError("apply_schema: column '" + spec.name + "' row " +
                                          std::to_string(r + 2) +
                                          ": likert7 cell is not numeric");
                    const double v = cell.number;
                    if (v != std::floor(v) || v < 1.0 || v > 7.0)
                        throw IngestError("apply_schema: column '" + spec.name + "' row " +
                                          std::to_string(r + 2) + ": likert7 value " +
                                          format_double(v) + " outside 1..7");
                    column[r] = v;
                    mask[r] = 0;
                    break;
                }
                case VariableKind::numeric: {
                    if (cell.kind != Cell::Kind::number)
                        throw IngestError("apply_schema: column '" + spec.name + "' row " +
                                          std::to_string(r + 2) + ": numeric cell is not numeric");
                    column[r] = cell.number;
                    mask[r] = 0;
                    break;
                }
                case VariableKind::categorical: {
                    auto [it, inserted] = category_codes.try_emplace(
                            cell.text, static_cast<int>(category_codes.size()));
                    column[r] = static_cast<double>(it->second);
                    mask[r] = 0;
                    break;
                }
                case VariableKind::excluded:
                    break;
            }
        }
        data.values.push_back(std::move(column));
        data.missing.push_back(std::move(mask));
        data.specs.push_back(spec);
    }
    data.p = static_cast<int>(data.specs.size());
    if (data.p == 0) throw IngestError("apply_schema: empty dataset (all columns excluded)");
    return data;
}

/// Drops variables whose missing fraction exceeds the threshold, then drops
/// rows with any remaining missing value. Dropped items go to provenance.
inline Dataset complete_cases(const Dataset &data, double max_missing_fraction) {
    if (max_missing_fraction < 0.0 || max_missing_fraction > 1.0)
        throw std::invalid_argument("complete_cases: threshold must be in [0,1]");

    Dataset out;
    out.standardized = data.standardized;
    out.provenance = data.provenance;

    std::vector<int> kept_cols;
    for (int v = 0; v < data.p; ++v) {
        int miss = 0;
        for (uint8_t m : data.missing[v]) miss += m;
        const double fraction = data.n > 0 ? static_cast<double>(miss) / data.n : 0.0;
        if (fraction > max_missing_fraction) {
            out.provenance.push_back("column '" + data.specs[v].name + "' dropped (missing fraction " +
                                     format_double(fraction) + " > " +
                                     format_double(max_missing_fraction) + ")");
        } else {
            kept_cols.push_back(v);
        }
    }

    std::vector<int> kept_rows;
    for (int r = 0; r < data.n; ++r) {
        bool complete = true;
        for (int v : kept_cols)
            if (data.missing[v][r]) {
                complete = false;
                break;
            }
        if (complete) kept_rows.push_back(r);
        else out.provenance.push_back("row " + std::to_string(r + 2) + " dropped (missing values)");
    }

    out.n = static_cast<int>(kept_rows.size());
    out.p = static_cast<int>(kept_cols.size());
    for (int v : kept_cols) {
        std::vector<double> column;
        column.reserve(out.n);
        for (int r : kept_rows) column.push_back(data.values[v][r]);
        out.values.push_back(std::move(column));
        out.missing.emplace_back(out.n, 0);
        out.specs.push_back(data.specs[v]);
    }

    if (out.n < 10 || out.p < 2)
        throw IngestError("complete_cases: insufficient data (" + std::to_string(out.n) +
                          " rows x " + std::to_string(out.p) + " columns after filtering)");
    return out;
}

/// Z-scores every column using the 1/n variance so standardized columns have
/// unit diagonal in the maximum-likelihood covariance. Zero-variance columns
/// are dropped with a provenance note.
inline Dataset standardize(const Dataset &data) {
    if (data.has_missing())
        throw std::invalid_argument("standardize: dataset has missing values");

    Dataset out;
    out.n = data.n;
    out.standardized = true;
    out.provenance = data.provenance;
    for (int v = 0; v < data.p; ++v) {
        double mean = 0.0;
        for (double x : data.values[v]) mean += x;
        mean /= data.n;
        double var = 0.0;
        for (double x : data.values[v]) var += (x - mean) * (x - mean);
        var /= data.n;
        if (var <= 0.0) {
            out.provenance.push_back("column '" + data.specs[v].name +
                                     "' dropped (zero variance)");
            continue;
        }
        const double sd = std::sqrt(var);
        std::vector<double> column;
        column.reserve(data.n);
        for (double x : data.values[v]) column.push_back((x - mean) / sd);
        out.values.push_back(std::move(column));
        out.missing.emplace_back(data.n, 0);
        out.specs.push_back(data.specs[v]);
    }
    out.p = static_cast<int>(out.specs.size());
    return out;
}

/// Writes the dataset as a delimited table. Finite values use the shortest
/// round-trip representation, so reloading reproduces them bit-exactly.
inline void write_table(const Dataset &data, const std::string &path, char delim = ',',
                        const std::string &header_comment = "") {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IngestError("write_table: cannot write file '" + path + "'");
    if (!header_comment.empty()) out << "# " << header_comment << "\n";
    for (int v = 0; v < data.p; ++v) {
        if (v > 0) out << delim;
        out << detail::quote_if_needed(data.specs[v].name, delim);
    }
    out << "\n";
    for (int r = 0; r < data.n; ++r) {
        for (int v = 0; v < data.p; ++v) {
            if (v > 0) out << delim;
            if (!data.missing[v][r]) out << format_double(data.values[v][r]);
        }
        out << "\n";
    }
}

}  // namespace causalkit
