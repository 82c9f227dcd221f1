// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "dsi/ci_engine.hpp"
#include "dsi/io.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <chrono>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace dsi::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitUsage = 1;
inline constexpr int kExitData = 2;
inline constexpr int kExitBlocked = 3;

inline constexpr const char* kNormsEnv = "DSI_NORMS";

struct Globals {
    unsigned threads = 1;
    std::vector<std::string> argv;
};

std::string sha256_hex(std::string_view bytes);
std::string read_file(const std::filesystem::path& path);
nlohmann::json read_json(const std::filesystem::path& path);

/// Norms from `path`, else $DSI_NORMS, else the corpus compiled into the binary.
struct LoadedNorms {
    ci::NormSet norms;
    std::string source;
    std::string sha256;
};
LoadedNorms load_norms(const std::string& path);

struct GateOptions {
    std::string flow;
    std::string norms;
    bool acknowledge_ambiguous = false;
};
void add_gate_options(CLI::App& cmd, GateOptions& opt);

struct InputOptions {
    bool strict = false;
    bool lenient = false;
    ParseMode mode() const { return lenient ? ParseMode::Lenient : ParseMode::Strict; }
};
void add_mode_options(CLI::App& cmd, InputOptions& opt);

/// One command invocation: collects configuration, input/output digests,
/// the gate decision and timings, and owns `manifest.json` in the output directory.
class Run {
public:
    Run(std::string command, const Globals& globals, std::filesystem::path out_dir);

    nlohmann::ordered_json& config() { return config_; }
    const Globals& globals() const { return globals_; }
    const std::filesystem::path& out_dir() const { return out_dir_; }

    /// Reads and digests an input in one pass.
    std::string read_input(const std::filesystem::path& path);

    /// Evaluates the declared flow and records the decision in the manifest
    /// before any output is written. Returns the exit code to use on block.
    std::optional<int> gate(const GateOptions& opt);

    void write_output(const std::string& name, std::string_view content);
    void note(const std::string& key, nlohmann::ordered_json value) { notes_[key] = std::move(value); }

    class Phase {
    public:
        Phase(Run& run, std::string name) : run_(run), name_(std::move(name)), start_(std::chrono::steady_clock::now()) {}
        ~Phase();
        Phase(const Phase&) = delete;
        Phase& operator=(const Phase&) = delete;

    private:
        Run& run_;
        std::string name_;
        std::chrono::steady_clock::time_point start_;
    };
    Phase phase(std::string name) { return Phase(*this, std::move(name)); }

    int finish(int code);

private:
    void write_manifest(std::string_view status);

    std::string command_;
    Globals globals_;
    std::filesystem::path out_dir_;
    nlohmann::ordered_json config_ = nlohmann::ordered_json::object();
    nlohmann::ordered_json inputs_ = nlohmann::ordered_json::array();
    nlohmann::ordered_json outputs_ = nlohmann::ordered_json::array();
    nlohmann::ordered_json gate_;
    nlohmann::ordered_json notes_ = nlohmann::ordered_json::object();
    nlohmann::ordered_json timings_ = nlohmann::ordered_json::object();
    std::chrono::steady_clock::time_point started_ = std::chrono::steady_clock::now();
};

std::vector<DetectionRecord> load_detections(Run& run, const std::string& path, ParseMode mode);
std::vector<EventRecord> load_events(Run& run, const std::string& path, ParseMode mode);

/// Prints the lenient-mode error report to stderr and records its size.
void report_errors(Run& run, std::string_view what, std::span<const LineError> errors);

std::string errors_csv(std::span<const LineError> errors);

// Subcommand registration; each returns the handler's exit code through `rc`.
void add_ingest(CLI::App& app, Globals& g, int& rc);
void add_coverage(CLI::App& app, Globals& g, int& rc);
void add_eval(CLI::App& app, Globals& g, int& rc);
void add_threshold(CLI::App& app, Globals& g, int& rc);
void add_match_events(CLI::App& app, Globals& g, int& rc);
void add_geofence(CLI::App& app, Globals& g, int& rc);
void add_hotspot(CLI::App& app, Globals& g, int& rc);
void add_cluster(CLI::App& app, Globals& g, int& rc);
void add_ci(CLI::App& app, Globals& g, int& rc);
void add_synth(CLI::App& app, Globals& g, int& rc);

} // namespace dsi::cli
