#pragma once

// A small TOML subset: `[section]` headers, `key = value` lines, `#`
// comments. Values are numbers, quoted strings, true/false, or flat arrays
// of those. Keys are addressed as "section.key".

#include <tmml/error.hpp>

#include <cctype>
#include <charconv>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <variant>
#include <vector>

namespace tmml {

class Config {
public:
    using Scalar = std::variant<double, std::string, bool>;
    using Value = std::variant<double, std::string, bool, std::vector<Scalar>>;

    static Config parse(std::istream& in, const std::string& source = "config")
    {
        Config cfg;
        std::string section;
        std::string line;
        int lineno = 0;
        while (std::getline(in, line)) {
            ++lineno;
            const auto fail = [&](const std::string& why) {
                throw ValidationError(source + ":" + std::to_string(lineno) + ": " + why);
            };
            std::string text = trim(strip_comment(line));
            if (text.empty()) {
                continue;
            }
            if (text.front() == '[') {
                if (text.back() != ']' || text.size() < 3) {
                    fail("malformed section header");
                }
                section = trim(text.substr(1, text.size() - 2));
                continue;
            }
            const auto eq = text.find('=');
            if (eq == std::string::npos) {
                fail("expected key = value");
            }
            const std::string key = trim(text.substr(0, eq));
            if (key.empty()) {
                fail("empty key");
            }
            const std::string full = section.empty() ? key : section + "." + key;
            if (cfg.values_.count(full)) {
                fail("duplicate key '" + full + "'");
            }
            Value v;
            if (!parse_value(trim(text.substr(eq + 1)), v)) {
                fail("cannot parse value for '" + full + "'");
            }
            cfg.values_[full] = std::move(v);
        }
        return cfg;
    }

    static Config parse_string(const std::string& text)
    {
        std::istringstream in(text);
        return parse(in);
    }

    static Config load(const std::string& path)
    {
        std::ifstream in(path);
        if (!in) {
            throw ValidationError("cannot open config file '" + path + "'");
        }
        return parse(in, path);
    }

    bool has(const std::string& key) const { return values_.count(key) > 0; }

    double number(const std::string& key, double fallback) const
    {
        const auto* v = find(key);
        if (!v) {
            return fallback;
        }
        if (const auto* d = std::get_if<double>(v)) {
            return *d;
        }
        throw ValidationError("config key '" + key + "' must be a number");
    }

    int integer(const std::string& key, int fallback) const
    {
        const double d = number(key, fallback);
        if (d != static_cast<double>(static_cast<long long>(d))) {
            throw ValidationError("config key '" + key + "' must be an integer");
        }
        return static_cast<int>(d);
    }

    bool boolean(const std::string& key, bool fallback) const
    {
        const auto* v = find(key);
        if (!v) {
            return fallback;
        }
        if (const auto* b = std::get_if<bool>(v)) {
            return *b;
        }
        throw ValidationError("config key '" + key + "' must be true or false");
    }

    std::string string(const std::string& key, const std::string& fallback) const
    {
        const auto* v = find(key);
        if (!v) {
            return fallback;
        }
        if (const auto* s = std::get_if<std::string>(v)) {
            return *s;
        }
        throw ValidationError("config key '" + key + "' must be a string");
    }

    std::vector<double> numbers(const std::string& key, std::vector<double> fallback) const
    {
        const auto* v = find(key);
        if (!v) {
            return fallback;
        }
        const auto* list = std::get_if<std::vector<Scalar>>(v);
        if (!list) {
            throw ValidationError("config key '" + key + "' must be an array");
        }
        std::vector<double> out;
        for (const auto& s : *list) {
            const auto* d = std::get_if<double>(&s);
            if (!d) {
                throw ValidationError("config key '" + key + "' must hold numbers");
            }
            out.push_back(*d);
        }
        return out;
    }

    std::vector<std::string> strings(const std::string& key, std::vector<std::string> fallback) const
    {
        const auto* v = find(key);
        if (!v) {
            return fallback;
        }
        const auto* list = std::get_if<std::vector<Scalar>>(v);
        if (!list) {
            throw ValidationError("config key '" + key + "' must be an array");
        }
        std::vector<std::string> out;
        for (const auto& s : *list) {
            const auto* str = std::get_if<std::string>(&s);
            if (!str) {
                throw ValidationError("config key '" + key + "' must hold strings");
            }
            out.push_back(*str);
        }
        return out;
    }

    void set(const std::string& key, Value v) { values_[key] = std::move(v); }
    const std::map<std::string, Value>& values() const noexcept { return values_; }

private:
    std::map<std::string, Value> values_;

    const Value* find(const std::string& key) const
    {
        const auto it = values_.find(key);
        return it == values_.end() ? nullptr : &it->second;
    }

    static std::string trim(const std::string& s)
    {
        std::size_t a = 0;
        std::size_t b = s.size();
        while (a < b && std::isspace(static_cast<unsigned char>(s[a]))) {
            ++a;
        }
        while (b > a && std::isspace(static_cast<unsigned char>(s[b - 1]))) {
            --b;
        }
        return s.substr(a, b - a);
    }

    // Drops a trailing comment, ignoring '#' inside quotes.
    static std::string strip_comment(const std::string& s)
    {
        bool quoted = false;
        for (std::size_t i = 0; i < s.size(); ++i) {
            if (s[i] == '"') {
                quoted = !quoted;
            } else if (s[i] == '#' && !quoted) {
                return s.substr(0, i);
            }
        }
        return s;
    }

    static bool parse_scalar(const std::string& text, Scalar& out)
    {
        if (text.empty()) {
            return false;
        }
        if (text.front() == '"') {
            if (text.size() < 2 || text.back() != '"') {
                return false;
            }
            out = text.substr(1, text.size() - 2);
            return true;
        }
        if (text == "true" || text == "false") {
            out = text == "true";
            return true;
        }
        std::string digits;
        for (char c : text) {
            if (c != '_') {
                digits += c;
            }
        }
        double d = 0.0;
        const auto* end = digits.data() + digits.size();
        const auto [ptr, ec] = std::from_chars(digits.data(), end, d);
        if (ec != std::errc() || ptr != end) {
            return false;
        }
        out = d;
        return true;
    }

    static bool parse_value(const std::string& text, Value& out)
    {
        if (!text.empty() && text.front() == '[') {
            if (text.back() != ']') {
                return false;
            }
            std::vector<Scalar> items;
            std::string body = trim(text.substr(1, text.size() - 2));
            std::string item;
            bool quoted = false;
            const auto flush = [&]() {
                const std::string t = trim(item);
                item.clear();
                if (t.empty()) {
                    return true;
                }
                Scalar s;
                if (!parse_scalar(t, s)) {
                    return false;
                }
                items.push_back(std::move(s));
                return true;
            };
            for (char c : body) {
                if (c == '"') {
                    quoted = !quoted;
                }
                if (c == ',' && !quoted) {
                    if (!flush()) {
                        return false;
                    }
                } else {
                    item += c;
                }
            }
            if (!flush()) {
                return false;
            }
            out = std::move(items);
            return true;
        }
        Scalar s;
        if (!parse_scalar(text, s)) {
            return false;
        }
        std::visit([&](auto&& v) { out = v; }, s);
        return true;
    }
};

} // namespace tmml
