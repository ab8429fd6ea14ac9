#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <variant>
#include <vector>

namespace rabi::config {

/*
 * Reader for the TOML subset used by scenario files:
 *
 *   - comments, bare and quoted keys, dotted keys (a.b = 1)
 *   - [table], [a.b] and [[array.of.tables]] headers; a header below an
 *     array of tables (e.g. [tone.chirp] after [[tone]]) refers to its last
 *     element
 *   - basic "strings" with the usual escapes and 'literal' strings
 *   - integers, floats (with exponents, underscores, inf/nan), booleans
 *   - arrays (nested, multi-line, trailing comma) and inline tables
 *
 * Dates, multi-line strings and hexadecimal integers are rejected.
 */

struct Value;
using Array = std::vector<Value>;
using Table = std::map<std::string, Value>;

struct Value {
    std::variant<bool, std::int64_t, double, std::string, std::shared_ptr<Array>, std::shared_ptr<Table>> data;
    int line = 0;

    bool is_table() const { return std::holds_alternative<std::shared_ptr<Table>>(data); }
    bool is_array() const { return std::holds_alternative<std::shared_ptr<Array>>(data); }
    bool is_string() const { return std::holds_alternative<std::string>(data); }
    bool is_number() const {
        return std::holds_alternative<std::int64_t>(data) || std::holds_alternative<double>(data);
    }
    bool is_bool() const { return std::holds_alternative<bool>(data); }

    const Table& table() const { return *std::get<std::shared_ptr<Table>>(data); }
    Table& table() { return *std::get<std::shared_ptr<Table>>(data); }
    const Array& array() const { return *std::get<std::shared_ptr<Array>>(data); }
    Array& array() { return *std::get<std::shared_ptr<Array>>(data); }

    std::string type_name() const;
};

/// Throws ConfigError with "<origin>:<line>: message" on malformed input.
Table parse(const std::string& text, const std::string& origin = "<string>");
Table parse_file(const std::string& path);

/*
 * Typed access with field-level errors.  Paths are reported dotted
 * ("tone[0].epsilon_over_omega0") so schema errors name the offending field.
 */
class Section {
public:
    Section(const Table& table, std::string path) : table_(&table), path_(std::move(path)) {}

    bool has(const std::string& key) const { return table_->count(key) > 0; }
    const std::string& path() const { return path_; }
    std::string field(const std::string& key) const { return path_.empty() ? key : path_ + "." + key; }

    double number(const std::string& key) const;
    double number(const std::string& key, double fallback) const;
    std::optional<double> optional_number(const std::string& key) const;
    std::int64_t integer(const std::string& key) const;
    std::int64_t integer(const std::string& key, std::int64_t fallback) const;
    std::string string(const std::string& key) const;
    std::string string(const std::string& key, const std::string& fallback) const;
    bool boolean(const std::string& key, bool fallback) const;
    std::vector<double> numbers(const std::string& key) const;
    std::vector<std::vector<double>> number_pairs(const std::string& key) const;

    Section table(const std::string& key) const;
    std::optional<Section> optional_table(const std::string& key) const;
    /// Elements of an array of tables; empty when the key is absent.
    std::vector<Section> tables(const std::string& key) const;

    /// Throws ConfigError naming the first key not in `allowed`.
    void only(const std::vector<std::string>& allowed) const;

private:
    const Value& get(const std::string& key) const;
    const Table* table_;
    std::string path_;
};

}  // namespace rabi::config
