// Copyright 2026 The loopcluster Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// Plot-ready tables: CSV with a header row, or JSON in a versioned envelope.
// Floats are written with 12 significant digits.

#pragma once

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <ostream>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "json.hpp"
#include "loopcluster/errors.hpp"

namespace loopcluster {

using Cell = std::variant<std::int64_t, double, std::string, bool>;

struct Table {
    std::vector<std::string> columns;
    std::vector<std::vector<Cell>> rows;
    /// Run parameters; CSV writes them as "# key=value" lines before the header.
    std::vector<std::pair<std::string, Cell>> meta;

    void add_row(std::vector<Cell> row) {
        if (row.size() != columns.size()) throw ArgumentError("row width does not match the column count");
        rows.push_back(std::move(row));
    }
};

enum class Format { kCsv, kJson };

inline Format parse_format(const std::string& s) {
    if (s == "csv") return Format::kCsv;
    if (s == "json") return Format::kJson;
    throw ArgumentError("unknown output format \"" + s + "\" (expected csv or json)");
}

inline constexpr const char* kOutputDirEnv = "LOOPCLUSTER_OUTPUT_DIR";

inline std::string format_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.12g", v);
    return buf;
}

/// v rounded to 12 significant digits.
inline double round12(double v) { return std::strtod(format_double(v).c_str(), nullptr); }

namespace detail {

inline std::string csv_field(const std::string& s) {
    if (s.find_first_of(",\"\n") == std::string::npos) return s;
    std::string out = "\"";
    for (char c : s) {
        if (c == '"') out += '"';
        out += c;
    }
    return out + "\"";
}

inline std::string cell_text(const Cell& c) {
    struct V {
        std::string operator()(std::int64_t v) const { return std::to_string(v); }
        std::string operator()(double v) const { return format_double(v); }
        std::string operator()(const std::string& v) const { return v; }
        std::string operator()(bool v) const { return v ? "true" : "false"; }
    };
    return std::visit(V{}, c);
}

inline nlohmann::ordered_json cell_json(const Cell& c) {
    struct V {
        nlohmann::ordered_json operator()(std::int64_t v) const { return v; }
        nlohmann::ordered_json operator()(double v) const {
            if (!std::isfinite(v)) return nullptr;
            return round12(v);
        }
        nlohmann::ordered_json operator()(const std::string& v) const { return v; }
        nlohmann::ordered_json operator()(bool v) const { return v; }
    };
    return std::visit(V{}, c);
}

}  // namespace detail

inline void write_table(std::ostream& os, const Table& t, Format format) {
    if (t.rows.empty()) throw EmptyDataError("refusing to write an empty table");
    if (format == Format::kCsv) {
        for (const auto& [k, v] : t.meta) os << "# " << k << "=" << detail::cell_text(v) << "\n";
        for (std::size_t i = 0; i < t.columns.size(); ++i) os << (i ? "," : "") << detail::csv_field(t.columns[i]);
        os << "\n";
        for (const auto& row : t.rows) {
            for (std::size_t i = 0; i < row.size(); ++i) os << (i ? "," : "") << detail::csv_field(detail::cell_text(row[i]));
            os << "\n";
        }
        return;
    }
    nlohmann::ordered_json doc;
    doc["schema"] = 1;
    nlohmann::ordered_json meta = nlohmann::ordered_json::object();
    for (const auto& [k, v] : t.meta) meta[k] = detail::cell_json(v);
    doc["meta"] = std::move(meta);
    nlohmann::ordered_json rows = nlohmann::ordered_json::array();
    for (const auto& row : t.rows) {
        nlohmann::ordered_json r = nlohmann::ordered_json::object();
        for (std::size_t i = 0; i < row.size(); ++i) r[t.columns[i]] = detail::cell_json(row[i]);
        rows.push_back(std::move(r));
    }
    doc["rows"] = std::move(rows);
    os << doc.dump(2) << "\n";
}

/// Relative paths are placed under $LOOPCLUSTER_OUTPUT_DIR when it is set.
inline std::filesystem::path resolve_output_path(const std::string& path) {
    std::filesystem::path p(path);
    if (p.is_relative()) {
        if (const char* dir = std::getenv(kOutputDirEnv); dir != nullptr && *dir != '\0') p = std::filesystem::path(dir) / p;
    }
    return p;
}

/// Writes the table to `path`; throws IoError naming the path on failure.
inline void emit_table(const Table& t, Format format, const std::string& path) {
    if (t.rows.empty()) throw EmptyDataError("refusing to write an empty table");
    const std::filesystem::path p = resolve_output_path(path);
    std::ofstream f(p, std::ios::binary | std::ios::trunc);
    if (!f) throw IoError("cannot open " + p.string() + " for writing");
    write_table(f, t, format);
    f.flush();
    if (!f) throw IoError("failed writing " + p.string());
}

}  // namespace loopcluster
