// SPDX-License-Identifier: Apache-2.0
#include "run.hpp"

#include "dsi/shipped_norms.hpp"

#include <openssl/evp.h>

#include <cstdlib>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <sstream>

namespace dsi::cli {

namespace fs = std::filesystem;

std::string sha256_hex(std::string_view bytes)
{
    unsigned char md[EVP_MAX_MD_SIZE];
    unsigned int len = 0;
    if (EVP_Digest(bytes.data(), bytes.size(), md, &len, EVP_sha256(), nullptr) != 1) {
        throw Error("SHA-256 digest failed");
    }
    std::ostringstream out;
    for (unsigned int i = 0; i < len; ++i) {
        out << std::hex << std::setw(2) << std::setfill('0') << static_cast<int>(md[i]);
    }
    return out.str();
}

std::string read_file(const fs::path& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw DataError("cannot open " + path.string());
    }
    std::ostringstream ss;
    ss << in.rdbuf();
    return std::move(ss).str();
}

nlohmann::json read_json(const fs::path& path)
{
    try {
        return nlohmann::json::parse(read_file(path));
    } catch (const nlohmann::json::parse_error& e) {
        throw DataError(path.string() + ": " + e.what());
    }
}

LoadedNorms load_norms(const std::string& path)
{
    std::string chosen = path;
    if (chosen.empty()) {
        if (const char* env = std::getenv(kNormsEnv); env && *env) {
            chosen = env;
        }
    }
    LoadedNorms out{ci::NormSet{}, "embedded", ""};
    std::string text;
    if (chosen.empty()) {
        text = std::string(ci::kShippedNormsJson);
    } else {
        text = read_file(chosen);
        out.source = chosen;
    }
    out.sha256 = sha256_hex(text);
    try {
        out.norms = ci::norms_from_json(nlohmann::json::parse(text));
    } catch (const nlohmann::json::parse_error& e) {
        throw DataError("norms " + out.source + ": " + e.what());
    }
    return out;
}

void add_gate_options(CLI::App& cmd, GateOptions& opt)
{
    cmd.add_option("--flow", opt.flow, "Declared information flow document")->check(CLI::ExistingFile);
    cmd.add_option("--norms", opt.norms, std::string("Norm rules document (default: $") + kNormsEnv + " or the shipped corpus)")
        ->check(CLI::ExistingFile);
    cmd.add_flag("--acknowledge-ambiguous", opt.acknowledge_ambiguous, "Proceed when the declared flow is Ambiguous");
}

void add_mode_options(CLI::App& cmd, InputOptions& opt)
{
    auto* s = cmd.add_flag("--strict", opt.strict, "Fail on the first invalid input line (default)");
    auto* l = cmd.add_flag("--lenient", opt.lenient, "Skip and report invalid input lines");
    s->excludes(l);
}

Run::Run(std::string command, const Globals& globals, fs::path out_dir)
    : command_(std::move(command)), globals_(globals), out_dir_(std::move(out_dir))
{
    if (!out_dir_.empty()) {
        fs::create_directories(out_dir_);
    }
}

std::string Run::read_input(const fs::path& path)
{
    auto text = read_file(path);
    inputs_.push_back({{"path", path.string()}, {"bytes", text.size()}, {"sha256", sha256_hex(text)}});
    return text;
}

std::optional<int> Run::gate(const GateOptions& opt)
{
    const auto norms = load_norms(opt.norms);
    gate_ = nlohmann::ordered_json::object();
    gate_["norms"] = {{"source", norms.source}, {"sha256", norms.sha256}};
    std::optional<ci::Declaration> decl;
    if (!opt.flow.empty()) {
        const auto text = read_file(opt.flow);
        gate_["flow_document"] = {{"path", opt.flow}, {"sha256", sha256_hex(text)}};
        try {
            decl = ci::declaration_from_json(nlohmann::json::parse(text));
        } catch (const nlohmann::json::parse_error& e) {
            throw DataError("flow " + opt.flow + ": " + e.what());
        }
        decl->acknowledge_ambiguous = decl->acknowledge_ambiguous || opt.acknowledge_ambiguous;
    }
    try {
        const auto d = ci::gate_analysis(command_, decl, norms.norms);
        gate_["declared_flow"] = ci::to_json(decl->flow);
        gate_["acknowledge_ambiguous"] = decl->acknowledge_ambiguous;
        gate_["verdict"] = ci::to_json(d.verdict);
        gate_["allowed"] = d.allowed;
        gate_["reason"] = d.reason;
        if (!d.allowed) {
            write_manifest("blocked");
            std::cerr << "dsi-audit " << command_ << ": blocked: " << d.reason << '\n';
            return kExitBlocked;
        }
        std::cout << "gate: " << ci::to_string(d.verdict.outcome);
        if (d.verdict.rule_id) {
            std::cout << " (" << *d.verdict.rule_id << ")";
        }
        std::cout << '\n';
    } catch (const ci::UndeclaredFlow& e) {
        gate_["declared_flow"] = nullptr;
        gate_["allowed"] = false;
        gate_["reason"] = e.what();
        write_manifest("blocked");
        std::cerr << "dsi-audit " << command_ << ": blocked: " << e.what() << " (pass --flow)\n";
        return kExitBlocked;
    }
    write_manifest("running");
    return std::nullopt;
}

void Run::write_output(const std::string& name, std::string_view content)
{
    if (out_dir_.empty()) {
        return;
    }
    const auto path = out_dir_ / name;
    std::ofstream out(path, std::ios::binary);
    out.write(content.data(), static_cast<std::streamsize>(content.size()));
    if (!out) {
        throw Error("cannot write " + path.string());
    }
    outputs_.push_back({{"name", name}, {"bytes", content.size()}, {"sha256", sha256_hex(content)}});
}

Run::Phase::~Phase()
{
    const auto ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start_).count();
    run_.timings_[name_] = ms;
}

int Run::finish(int code)
{
    write_manifest(code == kExitOk ? "ok" : "failed");
    return code;
}

void Run::write_manifest(std::string_view status)
{
    if (out_dir_.empty()) {
        return;
    }
    timings_["total"] = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - started_).count();
    nlohmann::ordered_json m;
    m["command"] = command_;
    m["argv"] = globals_.argv;
    m["status"] = status;
    m["config"] = config_;
    m["config_sha256"] = sha256_hex(nlohmann::ordered_json({{"command", command_}, {"config", config_}}).dump());
    m["inputs"] = inputs_;
    m["gate"] = gate_.is_null() ? nlohmann::ordered_json("not gated") : gate_;
    m["outputs"] = outputs_;
    if (!notes_.empty()) {
        m["notes"] = notes_;
    }
    m["timings_ms"] = timings_;
    const auto path = out_dir_ / "manifest.json";
    std::ofstream out(path, std::ios::binary);
    out << m.dump(2) << '\n';
    if (!out) {
        throw Error("cannot write " + path.string());
    }
}

void report_errors(Run& run, std::string_view what, std::span<const LineError> errors)
{
    if (errors.empty()) {
        return;
    }
    std::cerr << what << ": " << errors.size() << " invalid line(s) skipped\n";
    const std::size_t shown = std::min<std::size_t>(errors.size(), 5);
    for (std::size_t i = 0; i < shown; ++i) {
        std::cerr << "  " << describe(errors[i]) << '\n';
    }
    run.note(std::string(what) + "_errors", errors.size());
}

std::string errors_csv(std::span<const LineError> errors)
{
    std::ostringstream out;
    out << "line,field,message\n";
    for (const auto& e : errors) {
        out << e.line << ',' << csv_escape(e.field) << ',' << csv_escape(e.message) << '\n';
    }
    return std::move(out).str();
}

std::vector<DetectionRecord> load_detections(Run& run, const std::string& path, ParseMode mode)
{
    auto t = run.phase("parse_detections");
    const auto text = run.read_input(path);
    ParseOptions opt;
    opt.mode = mode;
    opt.threads = run.globals().threads;
    auto r = parse_detections(std::string_view(text), opt);
    report_errors(run, "detections", r.errors);
    return std::move(r.records);
}

std::vector<EventRecord> load_events(Run& run, const std::string& path, ParseMode mode)
{
    auto t = run.phase("parse_events");
    const auto text = run.read_input(path);
    ParseOptions opt;
    opt.mode = mode;
    auto r = parse_events(std::string_view(text), opt);
    report_errors(run, "events", r.errors);
    return std::move(r.records);
}

} // namespace dsi::cli
