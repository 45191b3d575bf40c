#pragma once

#include <cmath>
#include <cstdint>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "tmsmd/csv.hpp"
#include "tmsmd/error.hpp"
#include "tmsmd/json_io.hpp"

namespace tmsmd::cli {

namespace fs = std::filesystem;
using nlohmann::json;

inline constexpr const char* kToolVersion = "1.0.0";
inline constexpr const char* kOutDirEnv = "TMSMD_OUT_DIR";

/// Bad flags or parameter values. Exit code 2.
class UsageError : public Error {
public:
    using Error::Error;
};

/// Simulated support exceeds observed support and --clamp was not given. Exit code 3.
class SupportMismatch : public Error {
public:
    using Error::Error;
};

// ---------------------------------------------------------------------------
// Option registry: typed values that can be echoed into a manifest exactly.
// ---------------------------------------------------------------------------

using Slot = std::variant<double*, int*, std::int64_t*, std::uint64_t*, std::string*, bool*>;

struct Registered {
    std::string key;  // long name without dashes
    Slot slot;
    bool is_path = false;
};

class Options {
public:
    explicit Options(CLI::App* app) : app_(app) {}

    template <typename T>
    CLI::Option* add(const std::string& key, T& value, const std::string& help) {
        entries_.push_back({key, Slot{&value}, false});
        if constexpr (std::is_same_v<T, bool>) return app_->add_flag("--" + key, value, help);
        else return app_->add_option("--" + key, value, help)->capture_default_str();
    }

    /// Input file; echoed as an absolute path so a manifest replays from anywhere.
    CLI::Option* add_path(const std::string& key, std::string& value, const std::string& help) {
        entries_.push_back({key, Slot{&value}, true});
        return app_->add_option("--" + key, value, help);
    }

    [[nodiscard]] json resolved() const {
        json out = json::object();
        for (const auto& e : entries_) {
            std::visit(
                [&](auto* p) {
                    using T = std::remove_pointer_t<decltype(p)>;
                    if constexpr (std::is_same_v<T, double>) out[e.key] = csv::format(*p);
                    else if constexpr (std::is_same_v<T, std::string>)
                        out[e.key] = e.is_path && !p->empty() ? fs::absolute(*p).lexically_normal().string() : *p;
                    else if constexpr (std::is_same_v<T, bool>) out[e.key] = *p ? "true" : "false";
                    else out[e.key] = std::to_string(*p);
                },
                e.slot);
        }
        return out;
    }

    [[nodiscard]] bool is_flag(const std::string& key) const {
        for (const auto& e : entries_)
            if (e.key == key) return std::holds_alternative<bool*>(e.slot);
        return false;
    }

    [[nodiscard]] CLI::App* app() const noexcept { return app_; }

private:
    CLI::App* app_;
    std::vector<Registered> entries_;
};

// ---------------------------------------------------------------------------
// key=value config files, applied beneath explicit flags
// ---------------------------------------------------------------------------

inline std::map<std::string, std::string> read_config_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw UsageError("cannot open config file " + path);
    std::map<std::string, std::string> out;
    std::string line;
    std::size_t n = 0;
    while (std::getline(in, line)) {
        ++n;
        auto view = csv::trim(line);
        if (view.empty() || view.front() == '#') continue;
        const auto eq = view.find('=');
        if (eq == std::string_view::npos)
            throw UsageError(path + ":" + std::to_string(n) + ": expected key=value");
        std::string key(csv::trim(view.substr(0, eq)));
        if (key.rfind("--", 0) == 0) key.erase(0, 2);
        std::string value(csv::trim(view.substr(eq + 1)));
        if (value.size() >= 2 && value.front() == '"' && value.back() == '"') value = value.substr(1, value.size() - 2);
        out[key] = value;
    }
    return out;
}

/// Expands `--config FILE` into explicit flags placed before the command
/// line's own flags, so anything given on the command line wins.
inline std::vector<std::string> expand_config(std::vector<std::string> args, const Options& opts) {
    std::optional<std::string> config;
    std::vector<std::string> rest;
    for (std::size_t i = 0; i < args.size(); ++i) {
        if (args[i] == "--config") {
            if (i + 1 >= args.size()) throw UsageError("--config needs a file");
            config = args[++i];
        } else if (args[i].rfind("--config=", 0) == 0) {
            config = args[i].substr(9);
        } else {
            rest.push_back(args[i]);
        }
    }
    if (!config) return rest;

    auto given = [&](const std::string& key) {
        for (const auto& a : rest)
            if (a == "--" + key || a.rfind("--" + key + "=", 0) == 0) return true;
        return false;
    };
    std::vector<std::string> out;
    for (const auto& [key, value] : read_config_file(*config)) {
        if (!opts.app()->get_option_no_throw("--" + key)) throw UsageError("unknown config key '" + key + "'");
        if (given(key)) continue;
        if (opts.is_flag(key)) {
            if (value == "true" || value == "1") out.push_back("--" + key);
            else if (value != "false" && value != "0") throw UsageError("flag '" + key + "' needs true or false");
        } else {
            out.push_back("--" + key);
            out.push_back(value);
        }
    }
    out.insert(out.end(), rest.begin(), rest.end());
    return out;
}

// ---------------------------------------------------------------------------
// Tables in csv or json
// ---------------------------------------------------------------------------

using Cell = std::variant<double, long long, std::string>;

struct OutTable {
    std::vector<std::string> columns;
    std::vector<std::vector<Cell>> rows;

    template <typename... Cells>
    void add(Cells&&... cells) {
        rows.push_back({to_cell(std::forward<Cells>(cells))...});
    }

private:
    template <typename T>
    static Cell to_cell(T&& v) {
        using U = std::decay_t<T>;
        if constexpr (std::is_floating_point_v<U>) return static_cast<double>(v);
        else if constexpr (std::is_same_v<U, bool>) return std::string(v ? "true" : "false");
        else if constexpr (std::is_integral_v<U>) return static_cast<long long>(v);
        else return std::string(v);
    }
};

inline std::string render_csv(const OutTable& t) {
    std::ostringstream out;
    for (std::size_t i = 0; i < t.columns.size(); ++i) out << (i ? "," : "") << t.columns[i];
    out << '\n';
    for (const auto& row : t.rows) {
        for (std::size_t i = 0; i < row.size(); ++i) {
            if (i) out << ',';
            std::visit(
                [&](const auto& v) {
                    using V = std::decay_t<decltype(v)>;
                    if constexpr (std::is_same_v<V, double>) out << csv::format(v);
                    else out << v;
                },
                row[i]);
        }
        out << '\n';
    }
    return out.str();
}

inline std::string render_json(const OutTable& t) {
    json rows = json::array();
    for (const auto& row : t.rows) {
        json r = json::array();
        for (const auto& cell : row)
            std::visit(
                [&](const auto& v) {
                    using V = std::decay_t<decltype(v)>;
                    if constexpr (std::is_same_v<V, double>) r.push_back(json_io::number(v));
                    else r.push_back(v);
                },
                cell);
        rows.push_back(std::move(r));
    }
    return json{{"columns", t.columns}, {"rows", rows}}.dump(2) + "\n";
}

// ---------------------------------------------------------------------------
// Output staging: files become visible only when the whole run succeeds.
// ---------------------------------------------------------------------------

inline std::uint64_t fnv1a64(std::string_view bytes) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : bytes) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

inline std::string hex64(std::uint64_t v) {
    std::ostringstream s;
    s << std::hex;
    s.width(16);
    s.fill('0');
    s << v;
    return s.str();
}

class OutputSet {
public:
    OutputSet(std::string format) : format_(std::move(format)) {
        if (format_ != "csv" && format_ != "json") throw UsageError("--format must be csv or json");
    }

    void table(const std::string& stem, const OutTable& t) {
        if (format_ == "csv") text(stem + ".csv", render_csv(t));
        else text(stem + ".json", render_json(t));
    }

    void document(const std::string& name, const json& j) { text(name, j.dump(2) + "\n"); }

    void text(const std::string& name, std::string content) {
        for (const auto& [n, c] : files_)
            if (n == name) throw Error("output " + name + " written twice");
        files_.emplace_back(name, std::move(content));
    }

    [[nodiscard]] const std::vector<std::pair<std::string, std::string>>& files() const noexcept { return files_; }

    /// Writes everything into a staging directory, then moves each file into
    /// `dir`. On any failure the staging directory is removed and nothing is
    /// left behind.
    void commit(const fs::path& dir) const {
        fs::create_directories(dir);
        fs::path staging;
        for (int attempt = 0;; ++attempt) {
            staging = dir / (".tmsmd-staging-" + std::to_string(attempt));
            if (fs::create_directory(staging)) break;
            if (attempt > 1000) throw Error("cannot create a staging directory in " + dir.string());
        }
        std::vector<std::string> moved;
        try {
            for (const auto& [name, content] : files_) {
                std::ofstream out(staging / name, std::ios::binary);
                out << content;
                out.close();
                if (!out) throw Error("failed writing " + (staging / name).string());
            }
            for (const auto& [name, content] : files_) {
                fs::rename(staging / name, dir / name);
                moved.push_back(name);
            }
            fs::remove_all(staging);
        } catch (...) {
            std::error_code ec;
            for (const auto& name : moved) fs::remove(dir / name, ec);
            fs::remove_all(staging, ec);
            throw;
        }
    }

private:
    std::string format_;
    std::vector<std::pair<std::string, std::string>> files_;
};

inline json manifest(const std::string& command, const json& config, const OutputSet& outputs) {
    json files = json::array();
    for (const auto& [name, content] : outputs.files())
        files.push_back({{"file", name}, {"bytes", content.size()}, {"fnv1a64", hex64(fnv1a64(content))}});
    return {{"tool", "tmsmd"}, {"version", kToolVersion}, {"command", command}, {"config", config}, {"outputs", files}};
}

inline fs::path default_out_dir() {
    if (const char* env = std::getenv(kOutDirEnv); env && *env) return env;
    return ".";
}

// ---------------------------------------------------------------------------
// Small parsers for list-valued options
// ---------------------------------------------------------------------------

inline std::vector<double> parse_number_list(const std::string& text, const std::string& what) {
    std::vector<double> out;
    for (auto cell : csv::split(text)) {
        double v = 0.0;
        if (!csv::parse_double(cell, v)) throw UsageError("bad number '" + std::string(cell) + "' in --" + what);
        out.push_back(v);
    }
    if (out.empty()) throw UsageError("--" + what + " is empty");
    return out;
}

/// "a..b" into (a, b).
inline std::pair<double, double> parse_range(const std::string& text, const std::string& what) {
    const auto dots = text.find("..");
    double lo = 0.0, hi = 0.0;
    if (dots == std::string::npos || !csv::parse_double(std::string_view(text).substr(0, dots), lo) ||
        !csv::parse_double(std::string_view(text).substr(dots + 2), hi))
        throw UsageError("--" + what + " must look like LO..HI");
    if (!(lo <= hi)) throw UsageError("--" + what + " needs LO <= HI");
    return {lo, hi};
}

inline std::vector<int> parse_int_range(const std::string& text, const std::string& what) {
    const auto [lo, hi] = parse_range(text, what);
    if (lo != std::floor(lo) || hi != std::floor(hi)) throw UsageError("--" + what + " bounds must be integers");
    std::vector<int> out;
    for (int k = static_cast<int>(lo); k <= static_cast<int>(hi); ++k) out.push_back(k);
    return out;
}

}  // namespace tmsmd::cli
