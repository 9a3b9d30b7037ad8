#pragma once

// Flat key-value configuration with [section] headers.  Keys are addressed
// as "section.key"; values are plain text parsed on access.  Every access
// is recorded so reports can state which knobs were read and which fell
// back to defaults.

#include <cctype>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "bdssep/errors.hpp"
#include "bdssep/model.hpp"
#include "bdssep/profile.hpp"

namespace bdssep {

namespace detail {

inline std::string trim(const std::string& s) {
    std::size_t b = 0, e = s.size();
    while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
    while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
    return s.substr(b, e - b);
}

}  // namespace detail

class Config {
  public:
    Config() = default;

    static Config from_string(const std::string& text, const std::string& origin = "<inline>") {
        Config cfg;
        cfg.origin_ = origin;
        std::istringstream in(text);
        std::string line, section;
        std::size_t lineno = 0;
        while (std::getline(in, line)) {
            ++lineno;
            const std::string t = detail::trim(line);
            if (t.empty() || t[0] == '#' || t[0] == ';') continue;
            if (t.front() == '[') {
                require(t.back() == ']', errc::validation,
                        origin + ":" + std::to_string(lineno) + ": unterminated section header");
                section = detail::trim(t.substr(1, t.size() - 2));
                require(!section.empty(), errc::validation,
                        origin + ":" + std::to_string(lineno) + ": empty section name");
                continue;
            }
            const std::size_t eq = t.find('=');
            require(eq != std::string::npos, errc::validation,
                    origin + ":" + std::to_string(lineno) + ": expected key = value, got \"" + t + "\"");
            const std::string key = detail::trim(t.substr(0, eq));
            require(!key.empty(), errc::validation,
                    origin + ":" + std::to_string(lineno) + ": empty key");
            require(!section.empty(), errc::validation,
                    origin + ":" + std::to_string(lineno) + ": key \"" + key + "\" outside any [section]");
            std::string value = t.substr(eq + 1);
            const std::size_t cut = value.find_first_of(";#");
            if (cut != std::string::npos) value.erase(cut);
            cfg.entries_[section + "." + key] = detail::trim(value);
        }
        return cfg;
    }

    static Config from_file(const std::string& path) {
        std::ifstream in(path);
        require(in.good(), errc::validation, "cannot open config file " + path);
        std::ostringstream buf;
        buf << in.rdbuf();
        return from_string(buf.str(), path);
    }

    [[nodiscard]] bool has(const std::string& key) const { return entries_.count(key) > 0; }

    // Overrides from the command line; recorded like file entries.
    void set(const std::string& key, const std::string& value) { entries_[key] = value; }

    [[nodiscard]] std::string get_string(const std::string& key) const {
        auto it = entries_.find(key);
        require(it != entries_.end(), errc::validation, "missing required config key '" + key + "'");
        accessed_[key] = it->second;
        return it->second;
    }

    [[nodiscard]] std::string get_string(const std::string& key, const std::string& fallback) const {
        auto it = entries_.find(key);
        if (it == entries_.end()) {
            defaulted_[key] = fallback;
            return fallback;
        }
        accessed_[key] = it->second;
        return it->second;
    }

    [[nodiscard]] double get_double(const std::string& key) const { return parse_double(key, get_string(key)); }
    [[nodiscard]] double get_double(const std::string& key, double fallback) const {
        auto it = entries_.find(key);
        if (it == entries_.end()) {
            defaulted_[key] = format_number(fallback);
            return fallback;
        }
        accessed_[key] = it->second;
        return parse_double(key, it->second);
    }

    [[nodiscard]] std::int64_t get_int(const std::string& key) const { return parse_int(key, get_string(key)); }
    [[nodiscard]] std::int64_t get_int(const std::string& key, std::int64_t fallback) const {
        auto it = entries_.find(key);
        if (it == entries_.end()) {
            defaulted_[key] = std::to_string(fallback);
            return fallback;
        }
        accessed_[key] = it->second;
        return parse_int(key, it->second);
    }

    [[nodiscard]] bool get_bool(const std::string& key, bool fallback) const {
        auto it = entries_.find(key);
        if (it == entries_.end()) {
            defaulted_[key] = fallback ? "true" : "false";
            return fallback;
        }
        accessed_[key] = it->second;
        const std::string& v = it->second;
        if (v == "true" || v == "1" || v == "yes" || v == "on") return true;
        if (v == "false" || v == "0" || v == "no" || v == "off") return false;
        throw error(errc::validation, "config key '" + key + "': expected a boolean, got \"" + v + "\"");
    }

    [[nodiscard]] std::vector<double> get_doubles(const std::string& key) const {
        return split_doubles(key, get_string(key));
    }
    [[nodiscard]] std::vector<double> get_doubles(const std::string& key,
                                                  const std::vector<double>& fallback) const {
        auto it = entries_.find(key);
        if (it == entries_.end()) {
            std::string joined;
            for (double v : fallback) joined += (joined.empty() ? "" : ",") + format_number(v);
            defaulted_[key] = joined;
            return fallback;
        }
        accessed_[key] = it->second;
        return split_doubles(key, it->second);
    }

    [[nodiscard]] std::vector<std::int64_t> get_ints(const std::string& key) const {
        std::vector<std::int64_t> out;
        for (double v : split_doubles(key, get_string(key))) {
            require(std::abs(v - std::round(v)) < 1e-9, errc::validation,
                    "config key '" + key + "': expected integers");
            out.push_back(static_cast<std::int64_t>(std::llround(v)));
        }
        return out;
    }

    // Raw entries, the subset actually read, and the defaults that filled
    // gaps; all three feed report provenance.
    [[nodiscard]] const std::map<std::string, std::string>& entries() const { return entries_; }
    [[nodiscard]] const std::map<std::string, std::string>& accessed() const { return accessed_; }
    [[nodiscard]] const std::map<std::string, std::string>& defaulted() const { return defaulted_; }
    [[nodiscard]] const std::string& origin() const { return origin_; }

    // Canonical serialization: sorted key=value lines.  Comments and layout
    // do not affect it, so logically equal configs hash equal.
    [[nodiscard]] std::string canonical() const {
        std::string out;
        for (const auto& [k, v] : entries_) out += k + "=" + v + "\n";
        return out;
    }

  private:
    static double parse_double(const std::string& key, const std::string& v) {
        try {
            std::size_t pos = 0;
            const double d = std::stod(v, &pos);
            require(detail::trim(v.substr(pos)).empty(), errc::validation,
                    "config key '" + key + "': trailing characters in \"" + v + "\"");
            return d;
        } catch (const error&) {
            throw;
        } catch (const std::exception&) {
            throw error(errc::validation, "config key '" + key + "': expected a number, got \"" + v + "\"");
        }
    }

    static std::int64_t parse_int(const std::string& key, const std::string& v) {
        try {
            std::size_t pos = 0;
            const long long d = std::stoll(v, &pos);
            require(detail::trim(v.substr(pos)).empty(), errc::validation,
                    "config key '" + key + "': trailing characters in \"" + v + "\"");
            return d;
        } catch (const error&) {
            throw;
        } catch (const std::exception&) {
            throw error(errc::validation, "config key '" + key + "': expected an integer, got \"" + v + "\"");
        }
    }

    static std::vector<double> split_doubles(const std::string& key, const std::string& v) {
        std::vector<double> out;
        std::string item;
        std::istringstream in(v);
        while (std::getline(in, item, ',')) {
            item = detail::trim(item);
            if (item.empty()) continue;
            out.push_back(parse_double(key, item));
        }
        require(!out.empty(), errc::validation, "config key '" + key + "': empty list");
        return out;
    }

    static std::string format_number(double v) {
        std::ostringstream s;
        s.precision(17);
        s << v;
        return s.str();
    }

    std::map<std::string, std::string> entries_;
    mutable std::map<std::string, std::string> accessed_;
    mutable std::map<std::string, std::string> defaulted_;
    std::string origin_ = "<empty>";
};

// Profile expressions used in config values:
//   constant:c          the constant profile c
//   linear:a,b          a + (b - a) x
//   bump:base,amp,c,w   base + amp * exp(-((x - c) / w)^2)
//   stationary          alpha + (beta - alpha) x for the current model
//   file:path           mesh+1 whitespace-separated node values
inline DensityProfile parse_profile(const std::string& expr, int mesh, const ModelParams& p) {
    require(mesh >= 1, errc::validation, "profile mesh must be positive");
    const std::size_t colon = expr.find(':');
    const std::string head = detail::trim(expr.substr(0, colon));
    const std::string rest = colon == std::string::npos ? "" : detail::trim(expr.substr(colon + 1));

    auto args = [&](std::size_t want) {
        std::vector<double> vals;
        std::string item;
        std::istringstream in(rest);
        while (std::getline(in, item, ',')) vals.push_back(std::stod(detail::trim(item)));
        require(vals.size() == want, errc::validation,
                "profile expression '" + expr + "': expected " + std::to_string(want) + " arguments");
        return vals;
    };

    DensityProfile g(mesh, 0.0);
    if (head == "constant") {
        const auto a = args(1);
        for (auto& v : g.values) v = a[0];
    } else if (head == "linear") {
        const auto a = args(2);
        for (int j = 0; j <= mesh; ++j) g.values[static_cast<std::size_t>(j)] = a[0] + (a[1] - a[0]) * g.x(j);
    } else if (head == "bump") {
        const auto a = args(4);
        require(a[3] > 0.0, errc::validation, "profile expression '" + expr + "': width must be positive");
        for (int j = 0; j <= mesh; ++j) {
            const double z = (g.x(j) - a[2]) / a[3];
            g.values[static_cast<std::size_t>(j)] = a[0] + a[1] * std::exp(-z * z);
        }
    } else if (head == "stationary") {
        return stationary_profile(p, mesh);
    } else if (head == "file") {
        std::ifstream in(rest);
        require(in.good(), errc::validation, "cannot open profile grid file " + rest);
        std::vector<double> vals;
        double v;
        while (in >> v) vals.push_back(v);
        require(static_cast<std::int64_t>(vals.size()) == mesh + 1, errc::validation,
                "profile grid file " + rest + ": expected " + std::to_string(mesh + 1) + " values, found " +
                    std::to_string(vals.size()));
        g.values = std::move(vals);
    } else {
        throw error(errc::validation, "unknown profile expression '" + expr + "'");
    }
    g.check_unit_range();
    return g;
}

}  // namespace bdssep
