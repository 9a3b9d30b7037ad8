#pragma once

// Report emission: one JSON document per command plus named CSV blocks.
// Reports carry provenance (config hash, seeds, library version) and no
// clocks or environment state, so identical inputs give identical bytes.

#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "json.hpp"

#include "bdssep/config.hpp"
#include "bdssep/errors.hpp"
#include "bdssep/heat.hpp"
#include "bdssep/profile.hpp"

namespace bdssep {

inline constexpr std::string_view kLibraryVersion = "1.0.0";

inline std::uint64_t fnv1a(std::string_view s) {
    std::uint64_t h = 14695981039346656037ull;
    for (unsigned char c : s) {
        h ^= c;
        h *= 1099511628211ull;
    }
    return h;
}

inline std::string hex64(std::uint64_t v) {
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
    return buf;
}

// Shortest-representation formatting that round-trips doubles.
inline std::string format_g17(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

struct RunOptions {
    std::uint64_t seed = 1;
    unsigned workers = 1;
    std::int64_t cap = std::int64_t(1) << 20;
};

inline nlohmann::json provenance_block(const Config& cfg, const RunOptions& opts) {
    nlohmann::json j;
    j["config_hash"] = hex64(fnv1a(cfg.canonical()));
    j["config_origin"] = cfg.origin();
    j["defaulted_keys"] = cfg.defaulted();
    j["read_keys"] = cfg.accessed();
    j["seed"] = opts.seed;
    j["workers"] = opts.workers;
    j["state_cap"] = opts.cap;
    j["version"] = std::string(kLibraryVersion);
    return j;
}

class CsvWriter {
  public:
    explicit CsvWriter(const std::vector<std::string>& columns) : width_(columns.size()) {
        require(width_ > 0, errc::validation, "CsvWriter: no columns");
        for (std::size_t i = 0; i < columns.size(); ++i) {
            if (i) body_ += ',';
            body_ += columns[i];
        }
        body_ += '\n';
    }

    void row(const std::vector<double>& vals) {
        require(vals.size() == width_, errc::validation, "CsvWriter: row width mismatch");
        for (std::size_t i = 0; i < vals.size(); ++i) {
            if (i) body_ += ',';
            body_ += format_g17(vals[i]);
        }
        body_ += '\n';
    }

    void raw_row(const std::vector<std::string>& vals) {
        require(vals.size() == width_, errc::validation, "CsvWriter: row width mismatch");
        for (std::size_t i = 0; i < vals.size(); ++i) {
            if (i) body_ += ',';
            body_ += vals[i];
        }
        body_ += '\n';
    }

    [[nodiscard]] const std::string& str() const { return body_; }

  private:
    std::size_t width_;
    std::string body_;
};

// A finished command: the JSON report plus named CSV blocks, in emission
// order.  The writer places block `name` at <out>/<command>_<name>.csv.
struct CommandResult {
    std::string command;
    nlohmann::json report;
    std::vector<std::pair<std::string, std::string>> csv;

    void add_csv(const std::string& name, const CsvWriter& w) { csv.emplace_back(name, w.str()); }
};

inline void write_text_file(const std::filesystem::path& path, const std::string& content) {
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary);
    require(out.good(), errc::validation, "cannot open output file " + path.string());
    out << content;
    require(out.good(), errc::numerical, "failed writing " + path.string());
}

// Writes <out>/<command>.json and the CSV blocks; records the block file
// names inside the JSON before serializing it.
inline void write_command_result(CommandResult& result, const std::string& out_dir) {
    const std::filesystem::path base(out_dir);
    std::vector<std::string> block_files;
    for (const auto& [name, content] : result.csv) {
        const std::string fname = result.command + "_" + name + ".csv";
        write_text_file(base / fname, content);
        block_files.push_back(fname);
    }
    result.report["csv_blocks"] = block_files;
    write_text_file(base / (result.command + ".json"), result.report.dump(2) + "\n");
}

inline CsvWriter csv_of_profile(const DensityProfile& g) {
    CsvWriter w({"x", "value"});
    for (int j = 0; j <= g.mesh; ++j) w.row({g.x(j), g.values[static_cast<std::size_t>(j)]});
    return w;
}

// Space-time fields as long-form (t, x, value) rows.
inline CsvWriter csv_of_path(const SpaceTimePath& u) {
    CsvWriter w({"t", "x", "value"});
    for (int n = 0; n <= u.steps; ++n)
        for (int j = 0; j <= u.mesh; ++j)
            w.row({n * u.dt(), j * u.h(), u.at(n, j)});
    return w;
}

inline CsvWriter csv_of_field(const TestField& f, double horizon) {
    const double dt = horizon / f.steps;
    const double h = 1.0 / f.mesh;
    CsvWriter w({"t", "x", "value"});
    for (int n = 0; n <= f.steps; ++n)
        for (int j = 0; j <= f.mesh; ++j)
            w.row({n * dt, j * h, f.at(n, j)});
    return w;
}

}  // namespace bdssep
