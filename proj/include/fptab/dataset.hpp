#pragma once

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include "fptab/errors.hpp"

namespace fptab {

enum class AttrKind { numeric, categorical };
enum class AttrRole { primary_key, feature };

struct AttributeSchema {
    std::string name;
    AttrKind kind = AttrKind::categorical;
    AttrRole role = AttrRole::feature;
    // Numeric columns whose source contained only integers are written back
    // without a fractional part.
    bool integral = false;

    bool operator==(const AttributeSchema&) const = default;
};

struct Cell {
    enum class Kind { missing, number, category };
    Kind kind = Kind::missing;
    double num = 0.0;
    std::string cat;

    static Cell make_missing() { return Cell{}; }
    static Cell number(double v) { return Cell{Kind::number, v, {}}; }
    static Cell category(std::string t) { return Cell{Kind::category, 0.0, std::move(t)}; }

    bool missing() const { return kind == Kind::missing; }

    bool operator==(const Cell& o) const {
        if (kind != o.kind) return false;
        switch (kind) {
            case Kind::missing: return true;
            case Kind::number: return num == o.num;
            case Kind::category: return cat == o.cat;
        }
        return false;
    }
};

/// Mixed-type table with a designated primary key. Immutable after load by
/// convention: transformations copy.
class Dataset {
public:
    // Full column order including the primary key.
    std::vector<AttributeSchema> columns;
    std::size_t pk_column = 0;
    // Primary key values in their exact text form from the source.
    std::vector<std::string> pk;
    // Feature cells per row, in column order with the PK column skipped.
    std::vector<std::vector<Cell>> rows;

    std::size_t n() const { return rows.size(); }

    std::size_t feature_count() const { return columns.size() - 1; }

    /// Schema of the i-th feature attribute (PK excluded).
    const AttributeSchema& feature(std::size_t i) const {
        return columns[i < pk_column ? i : i + 1];
    }

    std::vector<std::string> feature_names() const {
        std::vector<std::string> out;
        out.reserve(feature_count());
        for (std::size_t i = 0; i < feature_count(); ++i) out.push_back(feature(i).name);
        return out;
    }

    std::optional<std::size_t> feature_index(std::string_view name) const {
        for (std::size_t i = 0; i < feature_count(); ++i)
            if (feature(i).name == name) return i;
        return std::nullopt;
    }

    std::unordered_map<std::string, std::size_t> pk_to_row() const {
        std::unordered_map<std::string, std::size_t> m;
        m.reserve(pk.size());
        for (std::size_t i = 0; i < pk.size(); ++i) m.emplace(pk[i], i);
        return m;
    }

    void validate() const {
        if (columns.empty()) throw SchemaMismatch("dataset has no columns");
        std::unordered_set<std::string> names;
        for (const auto& c : columns)
            if (!names.insert(c.name).second)
                throw SchemaMismatch("duplicate column name: " + c.name);
        std::unordered_set<std::string> keys;
        for (const auto& k : pk) {
            if (k.empty()) throw DuplicateKey("missing primary key value");
            if (!keys.insert(k).second) throw DuplicateKey("duplicate primary key: " + k);
        }
        for (const auto& r : rows)
            if (r.size() != feature_count())
                throw SchemaMismatch("row width does not match schema");
    }
};

namespace csv {

inline std::vector<std::vector<std::string>> parse(std::istream& in) {
    std::vector<std::vector<std::string>> out;
    std::vector<std::string> row;
    std::string field;
    bool quoted = false, any = false;
    char c;
    while (in.get(c)) {
        if (quoted) {
            if (c == '"') {
                if (in.peek() == '"') { field.push_back('"'); in.get(); }
                else quoted = false;
            } else field.push_back(c);
            continue;
        }
        switch (c) {
            case '"': quoted = true; any = true; break;
            case ',': row.push_back(std::move(field)); field.clear(); any = true; break;
            case '\r': break;
            case '\n':
                if (any || !field.empty() || !row.empty()) {
                    row.push_back(std::move(field));
                    field.clear();
                    out.push_back(std::move(row));
                    row.clear();
                    any = false;
                }
                break;
            default: field.push_back(c); any = true; break;
        }
    }
    if (any || !field.empty() || !row.empty()) {
        row.push_back(std::move(field));
        out.push_back(std::move(row));
    }
    return out;
}

inline void write_field(std::ostream& os, std::string_view f) {
    if (f.find_first_of(",\"\n\r") != std::string_view::npos) {
        os << '"';
        for (char ch : f) {
            if (ch == '"') os << "\"\"";
            else os << ch;
        }
        os << '"';
    } else {
        os << f;
    }
}

}  // namespace csv

inline bool is_missing_marker(std::string_view s) { return s.empty() || s == "?"; }

inline std::optional<double> parse_number(std::string_view s) {
    std::size_t a = s.find_first_not_of(" \t");
    if (a == std::string_view::npos) return std::nullopt;
    std::size_t b = s.find_last_not_of(" \t");
    s = s.substr(a, b - a + 1);
    double v = 0.0;
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc() || ptr != s.data() + s.size()) return std::nullopt;
    return v;
}

inline std::string format_number(double v, bool integral_column) {
    if (integral_column && std::isfinite(v) && v == std::floor(v) &&
        std::abs(v) < 9.0e15) {
        return std::to_string(static_cast<long long>(v));
    }
    char buf[32];
    auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
    (void)ec;
    return std::string(buf, ptr);
}

inline Dataset load_csv(const std::string& path, const std::string& pk_column,
                        const std::map<std::string, AttrKind>& type_hints = {}) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open " + path);
    auto table = csv::parse(in);
    if (table.empty()) throw IoError("empty file: " + path);

    const auto& header = table.front();
    std::size_t ncol = header.size();
    std::size_t pk_idx = ncol;
    for (std::size_t i = 0; i < ncol; ++i)
        if (header[i] == pk_column) pk_idx = i;
    if (pk_idx == ncol) throw SchemaMismatch("pk column not found: " + pk_column);

    std::size_t nrow = table.size() - 1;
    Dataset d;
    d.pk_column = pk_idx;
    d.columns.resize(ncol);

    // Type inference: numeric iff at least one non-missing cell and all
    // non-missing cells parse as numbers, unless a hint overrides.
    for (std::size_t j = 0; j < ncol; ++j) {
        auto& col = d.columns[j];
        col.name = header[j];
        if (j == pk_idx) {
            col.role = AttrRole::primary_key;
            col.kind = AttrKind::categorical;
            continue;
        }
        auto hint = type_hints.find(col.name);
        bool all_numeric = true, all_integral = true;
        std::size_t seen = 0;
        for (std::size_t r = 0; r < nrow; ++r) {
            const auto& row = table[r + 1];
            if (row.size() != ncol) throw IoError("ragged row in " + path);
            const std::string& s = row[j];
            if (is_missing_marker(s)) continue;
            ++seen;
            auto v = parse_number(s);
            if (!v) {
                all_numeric = false;
                break;
            }
            if (*v != std::floor(*v)) all_integral = false;
        }
        bool numeric = seen > 0 && all_numeric;
        if (hint != type_hints.end()) {
            if (hint->second == AttrKind::numeric && !all_numeric)
                throw TypeError("column " + col.name + " has non-numeric cells");
            numeric = hint->second == AttrKind::numeric;
        }
        col.kind = numeric ? AttrKind::numeric : AttrKind::categorical;
        col.integral = numeric && all_integral;
    }

    d.pk.reserve(nrow);
    d.rows.reserve(nrow);
    for (std::size_t r = 0; r < nrow; ++r) {
        const auto& src = table[r + 1];
        d.pk.push_back(src[pk_idx]);
        std::vector<Cell> row;
        row.reserve(ncol - 1);
        for (std::size_t j = 0; j < ncol; ++j) {
            if (j == pk_idx) continue;
            const std::string& s = src[j];
            const auto& col = d.columns[j];
            if (col.kind == AttrKind::numeric) {
                if (is_missing_marker(s)) {
                    row.push_back(Cell::make_missing());
                } else {
                    auto v = parse_number(s);
                    if (!v) throw TypeError("unparseable numeric cell in " + col.name);
                    row.push_back(Cell::number(*v));
                }
            } else {
                // Missing categorical values become the distinct token "?".
                row.push_back(Cell::category(is_missing_marker(s) ? "?" : s));
            }
        }
        d.rows.push_back(std::move(row));
    }
    d.validate();
    return d;
}

inline void write_csv(const Dataset& d, std::ostream& os) {
    for (std::size_t j = 0; j < d.columns.size(); ++j) {
        if (j) os << ',';
        csv::write_field(os, d.columns[j].name);
    }
    os << '\n';
    for (std::size_t r = 0; r < d.n(); ++r) {
        std::size_t f = 0;
        for (std::size_t j = 0; j < d.columns.size(); ++j) {
            if (j) os << ',';
            if (j == d.pk_column) {
                csv::write_field(os, d.pk[r]);
                continue;
            }
            const Cell& c = d.rows[r][f++];
            switch (c.kind) {
                case Cell::Kind::missing: break;
                case Cell::Kind::number:
                    os << format_number(c.num, d.columns[j].integral);
                    break;
                case Cell::Kind::category: csv::write_field(os, c.cat); break;
            }
        }
        os << '\n';
    }
}

inline void write_csv(const Dataset& d, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write " + path);
    write_csv(d, out);
}

/// Number of differing feature cells between two datasets with identical
/// schemas and PK sets. Rows are aligned by primary key.
inline std::size_t diff_cells(const Dataset& a, const Dataset& b) {
    if (a.columns != b.columns) throw SchemaMismatch("schemas differ");
    if (a.n() != b.n()) throw SchemaMismatch("PK sets differ in size");
    auto bmap = b.pk_to_row();
    std::size_t diff = 0;
    for (std::size_t r = 0; r < a.n(); ++r) {
        auto it = bmap.find(a.pk[r]);
        if (it == bmap.end()) throw SchemaMismatch("PK sets differ: " + a.pk[r]);
        const auto& ra = a.rows[r];
        const auto& rb = b.rows[it->second];
        for (std::size_t i = 0; i < ra.size(); ++i)
            if (!(ra[i] == rb[i])) ++diff;
    }
    return diff;
}

}  // namespace fptab
