#pragma once

// Flat "key = value" configuration files. Lines starting with '#' and blank
// lines are ignored; later keys override earlier ones.

#include "dualtpd/kernels.hpp"

#include <charconv>
#include <fstream>
#include <istream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

namespace dualtpd {

class KeyValueConfig {
public:
    KeyValueConfig() = default;

    static KeyValueConfig parse(std::istream& in)
    {
        KeyValueConfig cfg;
        std::string line;
        int lineno = 0;
        while (std::getline(in, line)) {
            ++lineno;
            const std::string t = trim(line);
            if (t.empty() || t.front() == '#') {
                continue;
            }
            const auto eq = t.find('=');
            if (eq == std::string::npos) {
                throw ConfigError("config line " + std::to_string(lineno) + ": expected key = value");
            }
            const std::string key = trim(t.substr(0, eq));
            if (key.empty()) {
                throw ConfigError("config line " + std::to_string(lineno) + ": empty key");
            }
            cfg.set(key, trim(t.substr(eq + 1)));
        }
        return cfg;
    }

    static KeyValueConfig parse_string(const std::string& text)
    {
        std::istringstream in(text);
        return parse(in);
    }

    static KeyValueConfig load(const std::string& path)
    {
        std::ifstream in(path);
        if (!in) {
            throw ConfigError("cannot open config file: " + path);
        }
        return parse(in);
    }

    void set(const std::string& key, const std::string& value)
    {
        if (values_.find(key) == values_.end()) {
            order_.push_back(key);
        }
        values_[key] = value;
    }

    [[nodiscard]] bool has(const std::string& key) const { return values_.count(key) != 0; }

    [[nodiscard]] std::string get_string(const std::string& key, const std::string& fallback) const
    {
        const auto it = values_.find(key);
        return it == values_.end() ? fallback : it->second;
    }

    [[nodiscard]] double get_double(const std::string& key, double fallback) const
    {
        const auto it = values_.find(key);
        return it == values_.end() ? fallback : to_double(key, it->second);
    }

    [[nodiscard]] long long get_int(const std::string& key, long long fallback) const
    {
        const auto it = values_.find(key);
        if (it == values_.end()) {
            return fallback;
        }
        long long v = 0;
        const auto& s = it->second;
        const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
        if (ec != std::errc() || ptr != s.data() + s.size()) {
            throw ConfigError("config key '" + key + "': not an integer: " + s);
        }
        return v;
    }

    [[nodiscard]] bool get_bool(const std::string& key, bool fallback) const
    {
        const auto it = values_.find(key);
        if (it == values_.end()) {
            return fallback;
        }
        const auto& s = it->second;
        if (s == "1" || s == "true" || s == "yes" || s == "on") {
            return true;
        }
        if (s == "0" || s == "false" || s == "no" || s == "off") {
            return false;
        }
        throw ConfigError("config key '" + key + "': not a boolean: " + s);
    }

    /// Comma-separated list; empty when the key is absent.
    [[nodiscard]] std::vector<std::string> get_list(const std::string& key) const
    {
        std::vector<std::string> out;
        const auto it = values_.find(key);
        if (it == values_.end()) {
            return out;
        }
        std::istringstream in(it->second);
        std::string item;
        while (std::getline(in, item, ',')) {
            item = trim(item);
            if (!item.empty()) {
                out.push_back(item);
            }
        }
        return out;
    }

    [[nodiscard]] std::vector<double> get_double_list(const std::string& key) const
    {
        std::vector<double> out;
        for (const auto& s : get_list(key)) {
            out.push_back(to_double(key, s));
        }
        return out;
    }

    /// Single-line "k=v; k=v" rendering in insertion order.
    [[nodiscard]] std::string to_line() const
    {
        std::string out;
        for (const auto& k : order_) {
            if (!out.empty()) {
                out += "; ";
            }
            out += k + "=" + values_.at(k);
        }
        return out;
    }

private:
    static std::string trim(const std::string& s)
    {
        const auto b = s.find_first_not_of(" \t\r\n");
        if (b == std::string::npos) {
            return {};
        }
        const auto e = s.find_last_not_of(" \t\r\n");
        return s.substr(b, e - b + 1);
    }

    static double to_double(const std::string& key, const std::string& s)
    {
        try {
            std::size_t pos = 0;
            const double v = std::stod(s, &pos);
            if (pos != s.size()) {
                throw ConfigError("");
            }
            return v;
        } catch (const std::exception&) {
            throw ConfigError("config key '" + key + "': not a number: " + s);
        }
    }

    std::map<std::string, std::string> values_;
    std::vector<std::string> order_;
};

} // namespace dualtpd
