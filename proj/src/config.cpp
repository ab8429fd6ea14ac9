#include "rabi/config.hpp"

#include <cctype>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>

#include "rabi/error.hpp"

namespace rabi::config {

std::string Value::type_name() const {
    switch (data.index()) {
        case 0: return "boolean";
        case 1: return "integer";
        case 2: return "float";
        case 3: return "string";
        case 4: return "array";
        default: return "table";
    }
}

namespace {

Value make_table(int line) { return Value{std::make_shared<Table>(), line}; }
Value make_array(int line) { return Value{std::make_shared<Array>(), line}; }

class Parser {
public:
    Parser(const std::string& text, std::string origin) : s_(text), origin_(std::move(origin)) {}

    Table run() {
        Value root = make_table(1);
        Table* current = &root.table();
        while (true) {
            skip_blank_lines();
            if (eof()) break;
            if (peek() == '[') {
                current = header(root);
            } else {
                key_value(*current);
            }
            end_of_line();
        }
        return std::move(root.table());
    }

private:
    [[noreturn]] void fail(const std::string& msg) const {
        std::ostringstream out;
        out << origin_ << ":" << line_ << ": " << msg;
        throw ConfigError(out.str());
    }

    bool eof() const { return pos_ >= s_.size(); }
    char peek(std::size_t off = 0) const { return pos_ + off < s_.size() ? s_[pos_ + off] : '\0'; }
    char get() {
        const char c = s_[pos_++];
        if (c == '\n') ++line_;
        return c;
    }

    void skip_space() {
        while (!eof() && (peek() == ' ' || peek() == '\t')) ++pos_;
    }
    void skip_comment() {
        if (peek() == '#') {
            while (!eof() && peek() != '\n') ++pos_;
        }
    }
    void skip_blank_lines() {
        while (!eof()) {
            skip_space();
            skip_comment();
            if (peek() == '\r') ++pos_;
            if (peek() == '\n') {
                get();
                continue;
            }
            break;
        }
    }
    // whitespace, comments and newlines inside arrays
    void skip_all() {
        while (!eof()) {
            skip_space();
            skip_comment();
            if (peek() == '\n' || peek() == '\r') {
                get();
                continue;
            }
            break;
        }
    }
    void end_of_line() {
        skip_space();
        skip_comment();
        if (peek() == '\r') ++pos_;
        if (eof()) return;
        if (peek() != '\n') fail(std::string("unexpected character '") + peek() + "' after value");
        get();
    }

    std::string bare_key() {
        std::string key;
        while (!eof()) {
            const char c = peek();
            if (std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '-') {
                key += c;
                ++pos_;
            } else {
                break;
            }
        }
        if (key.empty()) fail("expected a key");
        return key;
    }

    std::vector<std::string> dotted_key() {
        std::vector<std::string> parts;
        while (true) {
            skip_space();
            if (peek() == '"') {
                parts.push_back(basic_string());
            } else if (peek() == '\'') {
                parts.push_back(literal_string());
            } else {
                parts.push_back(bare_key());
            }
            skip_space();
            if (peek() != '.') break;
            ++pos_;
        }
        return parts;
    }

    static std::string joined(const std::vector<std::string>& parts, std::size_t n) {
        std::string out;
        for (std::size_t i = 0; i < n; ++i) out += (i ? "." : "") + parts[i];
        return out;
    }

    // Walk to the table named by `parts`, creating intermediate tables; an
    // array of tables along the way resolves to its last element.
    Table* descend(Table* t, const std::vector<std::string>& parts, std::size_t n) {
        for (std::size_t i = 0; i < n; ++i) {
            auto it = t->find(parts[i]);
            if (it == t->end()) it = t->emplace(parts[i], make_table(line_)).first;
            Value& v = it->second;
            if (v.is_table()) {
                t = &v.table();
            } else if (v.is_array() && !v.array().empty() && v.array().back().is_table()) {
                t = &v.array().back().table();
            } else {
                fail("key '" + joined(parts, i + 1) + "' is not a table");
            }
        }
        return t;
    }

    Table* header(Value& root) {
        ++pos_;
        const bool array = peek() == '[';
        if (array) ++pos_;
        const auto parts = dotted_key();
        if (get() != ']') fail("expected ']' to close the table header");
        if (array && get() != ']') fail("expected ']]' to close the array-of-tables header");
        Table* parent = descend(&root.table(), parts, parts.size() - 1);
        const std::string& last = parts.back();
        auto it = parent->find(last);
        if (array) {
            if (it == parent->end()) it = parent->emplace(last, make_array(line_)).first;
            if (!it->second.is_array()) fail("'" + joined(parts, parts.size()) + "' is not an array of tables");
            it->second.array().push_back(make_table(line_));
            return &it->second.array().back().table();
        }
        if (it != parent->end()) {
            if (!it->second.is_table()) fail("'" + joined(parts, parts.size()) + "' is already defined");
            if (defined_.count(&it->second.table())) fail("table '" + joined(parts, parts.size()) + "' defined twice");
            defined_.insert({&it->second.table(), true});
            return &it->second.table();
        }
        it = parent->emplace(last, make_table(line_)).first;
        defined_.insert({&it->second.table(), true});
        return &it->second.table();
    }

    void key_value(Table& table) {
        const auto parts = dotted_key();
        skip_space();
        if (get() != '=') fail("expected '=' after key '" + joined(parts, parts.size()) + "'");
        skip_space();
        Value v = value();
        Table* t = descend(&table, parts, parts.size() - 1);
        if (t->count(parts.back())) fail("duplicate key '" + joined(parts, parts.size()) + "'");
        t->emplace(parts.back(), std::move(v));
    }

    Value value() {
        const int line = line_;
        const char c = peek();
        if (c == '"') {
            if (peek(1) == '"' && peek(2) == '"') fail("multi-line strings are not supported");
            return Value{basic_string(), line};
        }
        if (c == '\'') return Value{literal_string(), line};
        if (c == '[') return array();
        if (c == '{') return inline_table();
        if (s_.compare(pos_, 4, "true") == 0) {
            pos_ += 4;
            return Value{true, line};
        }
        if (s_.compare(pos_, 5, "false") == 0) {
            pos_ += 5;
            return Value{false, line};
        }
        return number();
    }

    Value number() {
        const int line = line_;
        std::string tok;
        while (!eof()) {
            const char c = peek();
            if (std::isalnum(static_cast<unsigned char>(c)) || c == '+' || c == '-' || c == '.' || c == '_') {
                tok += c;
                ++pos_;
            } else {
                break;
            }
        }
        if (tok.empty()) fail("expected a value");
        std::string clean;
        for (std::size_t i = 0; i < tok.size(); ++i) {
            if (tok[i] == '_') {
                if (i == 0 || i + 1 == tok.size() || !std::isdigit(static_cast<unsigned char>(tok[i - 1])) ||
                    !std::isdigit(static_cast<unsigned char>(tok[i + 1]))) {
                    fail("misplaced '_' in number '" + tok + "'");
                }
                continue;
            }
            clean += tok[i];
        }
        const std::string body = (clean[0] == '+' || clean[0] == '-') ? clean.substr(1) : clean;
        const double sign = clean[0] == '-' ? -1.0 : 1.0;
        if (body == "inf") return Value{sign * std::numeric_limits<double>::infinity(), line};
        if (body == "nan") return Value{std::numeric_limits<double>::quiet_NaN(), line};
        if (body.size() > 1 && body[0] == '0' && std::isalpha(static_cast<unsigned char>(body[1]))) {
            fail("only decimal numbers are supported: '" + tok + "'");
        }
        const bool is_float = clean.find_first_of(".eE") != std::string::npos;
        std::size_t used = 0;
        try {
            if (is_float) {
                const double d = std::stod(clean, &used);
                if (used == clean.size()) return Value{d, line};
            } else {
                const long long i = std::stoll(clean, &used);
                if (used == clean.size()) return Value{static_cast<std::int64_t>(i), line};
            }
        } catch (const std::exception&) {
        }
        fail("invalid value '" + tok + "'");
    }

    std::string basic_string() {
        ++pos_;
        std::string out;
        while (true) {
            if (eof() || peek() == '\n') fail("unterminated string");
            char c = get();
            if (c == '"') break;
            if (c != '\\') {
                out += c;
                continue;
            }
            c = get();
            switch (c) {
                case 'n': out += '\n'; break;
                case 't': out += '\t'; break;
                case 'r': out += '\r'; break;
                case '"': out += '"'; break;
                case '\\': out += '\\'; break;
                default: fail(std::string("unsupported escape '\\") + c + "'");
            }
        }
        return out;
    }

    std::string literal_string() {
        ++pos_;
        std::string out;
        while (true) {
            if (eof() || peek() == '\n') fail("unterminated string");
            const char c = get();
            if (c == '\'') break;
            out += c;
        }
        return out;
    }

    Value array() {
        Value out = make_array(line_);
        ++pos_;
        while (true) {
            skip_all();
            if (peek() == ']') {
                ++pos_;
                return out;
            }
            out.array().push_back(value());
            skip_all();
            if (peek() == ',') {
                ++pos_;
                continue;
            }
            if (peek() == ']') {
                ++pos_;
                return out;
            }
            fail("expected ',' or ']' in array");
        }
    }

    Value inline_table() {
        Value out = make_table(line_);
        ++pos_;
        skip_space();
        if (peek() == '}') {
            ++pos_;
            return out;
        }
        while (true) {
            skip_space();
            key_value(out.table());
            skip_space();
            const char c = get();
            if (c == '}') return out;
            if (c != ',') fail("expected ',' or '}' in inline table");
        }
    }

    const std::string& s_;
    std::string origin_;
    std::size_t pos_ = 0;
    int line_ = 1;
    std::map<const Table*, bool> defined_;
};

[[noreturn]] void schema_error(const std::string& field, const std::string& msg) {
    throw ConfigError("field '" + field + "': " + msg);
}

double as_number(const Value& v, const std::string& field) {
    if (const auto* i = std::get_if<std::int64_t>(&v.data)) return static_cast<double>(*i);
    if (const auto* d = std::get_if<double>(&v.data)) return *d;
    schema_error(field, "expected a number, found " + v.type_name());
}

}  // namespace

Table parse(const std::string& text, const std::string& origin) { return Parser(text, origin).run(); }

Table parse_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file '" + path + "'");
    std::stringstream buf;
    buf << in.rdbuf();
    return parse(buf.str(), path);
}

const Value& Section::get(const std::string& key) const {
    auto it = table_->find(key);
    if (it == table_->end()) schema_error(field(key), "required field is missing");
    return it->second;
}

double Section::number(const std::string& key) const { return as_number(get(key), field(key)); }

double Section::number(const std::string& key, double fallback) const {
    return has(key) ? number(key) : fallback;
}

std::optional<double> Section::optional_number(const std::string& key) const {
    if (!has(key)) return std::nullopt;
    return number(key);
}

std::int64_t Section::integer(const std::string& key) const {
    const Value& v = get(key);
    if (const auto* i = std::get_if<std::int64_t>(&v.data)) return *i;
    schema_error(field(key), "expected an integer, found " + v.type_name());
}

std::int64_t Section::integer(const std::string& key, std::int64_t fallback) const {
    return has(key) ? integer(key) : fallback;
}

std::string Section::string(const std::string& key) const {
    const Value& v = get(key);
    if (!v.is_string()) schema_error(field(key), "expected a string, found " + v.type_name());
    return std::get<std::string>(v.data);
}

std::string Section::string(const std::string& key, const std::string& fallback) const {
    return has(key) ? string(key) : fallback;
}

bool Section::boolean(const std::string& key, bool fallback) const {
    if (!has(key)) return fallback;
    const Value& v = get(key);
    if (!v.is_bool()) schema_error(field(key), "expected true or false, found " + v.type_name());
    return std::get<bool>(v.data);
}

std::vector<double> Section::numbers(const std::string& key) const {
    const Value& v = get(key);
    if (!v.is_array()) schema_error(field(key), "expected an array of numbers");
    std::vector<double> out;
    for (const Value& x : v.array()) out.push_back(as_number(x, field(key)));
    return out;
}

std::vector<std::vector<double>> Section::number_pairs(const std::string& key) const {
    const Value& v = get(key);
    if (!v.is_array()) schema_error(field(key), "expected an array of [start, end] pairs");
    std::vector<std::vector<double>> out;
    for (const Value& x : v.array()) {
        if (!x.is_array() || x.array().size() != 2) schema_error(field(key), "expected [start, end] pairs");
        out.push_back({as_number(x.array()[0], field(key)), as_number(x.array()[1], field(key))});
    }
    return out;
}

Section Section::table(const std::string& key) const {
    const Value& v = get(key);
    if (!v.is_table()) schema_error(field(key), "expected a table, found " + v.type_name());
    return Section(v.table(), field(key));
}

std::optional<Section> Section::optional_table(const std::string& key) const {
    if (!has(key)) return std::nullopt;
    return table(key);
}

std::vector<Section> Section::tables(const std::string& key) const {
    std::vector<Section> out;
    if (!has(key)) return out;
    const Value& v = get(key);
    if (v.is_table()) {
        out.emplace_back(v.table(), field(key));
        return out;
    }
    if (!v.is_array()) schema_error(field(key), "expected an array of tables");
    for (std::size_t i = 0; i < v.array().size(); ++i) {
        const Value& x = v.array()[i];
        if (!x.is_table()) schema_error(field(key), "expected an array of tables");
        out.emplace_back(x.table(), field(key) + "[" + std::to_string(i) + "]");
    }
    return out;
}

void Section::only(const std::vector<std::string>& allowed) const {
    for (const auto& [k, v] : *table_) {
        bool ok = false;
        for (const std::string& a : allowed) ok = ok || a == k;
        if (!ok) schema_error(field(k), "unknown field");
    }
}

}  // namespace rabi::config
