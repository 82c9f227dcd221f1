// SPDX-License-Identifier: Apache-2.0
#include "run.hpp"

#include <iostream>
#include <sstream>
#include <unordered_set>

namespace dsi::cli {

namespace {

struct IngestOptions {
    std::string detections, events, annotations, out;
    std::string epoch_start, epoch_end;
    InputOptions input;
};

std::optional<Timestamp> parse_bound(const std::string& s, const char* flag)
{
    if (s.empty()) {
        return std::nullopt;
    }
    const auto t = parse_iso8601(s);
    if (!t) {
        throw CLI::ValidationError(flag, "not an ISO-8601 timestamp with offset: " + s);
    }
    return t;
}

int run_ingest(const IngestOptions& o, const Globals& g)
{
    if (o.detections.empty() && o.events.empty() && o.annotations.empty()) {
        std::cerr << "ingest: give at least one of --detections, --events, --annotations\n";
        return kExitUsage;
    }
    Run run("ingest", g, o.out);
    ParseOptions opt;
    opt.mode = o.input.mode();
    opt.threads = g.threads;
    opt.epoch_begin = parse_bound(o.epoch_start, "--epoch-start");
    opt.epoch_end = parse_bound(o.epoch_end, "--epoch-end");
    run.config() = {{"mode", opt.mode == ParseMode::Strict ? "strict" : "lenient"},
                    {"epoch_start", o.epoch_start},
                    {"epoch_end", o.epoch_end}};

    nlohmann::ordered_json summary;
    std::unordered_set<std::string> images;
    bool have_detections = false;
    if (!o.detections.empty()) {
        const auto text = run.read_input(o.detections);
        auto r = [&] {
            auto t = run.phase("parse_detections");
            return parse_detections(std::string_view(text), opt);
        }();
        for (const auto& d : r.records) {
            images.insert(d.image_id);
        }
        have_detections = true;
        report_errors(run, "detections", r.errors);
        summary["detections"] = {{"lines", r.lines}, {"records", r.records.size()}, {"errors", r.errors.size()}};
        std::cout << "detections: " << r.records.size() << " records, " << r.errors.size() << " errors\n";
        std::ostringstream canon;
        write_detections(canon, r.records);
        run.write_output("detections.jsonl", canon.str());
        if (!r.errors.empty()) {
            run.write_output("detections_errors.csv", errors_csv(r.errors));
        }
    }
    if (!o.events.empty()) {
        const auto text = run.read_input(o.events);
        const auto r = parse_events(std::string_view(text), opt);
        report_errors(run, "events", r.errors);
        summary["events"] = {{"rows", r.lines}, {"records", r.records.size()}, {"errors", r.errors.size()}};
        std::cout << "events: " << r.records.size() << " records, " << r.errors.size() << " errors\n";
        std::ostringstream canon;
        write_events_csv(canon, r.records);
        run.write_output("events.csv", canon.str());
        if (!r.errors.empty()) {
            run.write_output("events_errors.csv", errors_csv(r.errors));
        }
    }
    if (!o.annotations.empty()) {
        std::istringstream in(run.read_input(o.annotations));
        const auto r = parse_annotations(in, opt, have_detections ? &images : nullptr);
        report_errors(run, "annotations", r.errors);
        summary["annotations"] = {{"lines", r.lines},
                                  {"records", r.records.size()},
                                  {"errors", r.errors.size()},
                                  {"orphans", r.orphans.size()}};
        std::cout << "annotations: " << r.records.size() << " records, " << r.errors.size() << " errors, "
                  << r.orphans.size() << " orphans\n";
        std::ostringstream canon;
        for (const auto& a : r.records) {
            canon << to_json_line(a) << '\n';
        }
        run.write_output("annotations.jsonl", canon.str());
        if (!r.errors.empty()) {
            run.write_output("annotations_errors.csv", errors_csv(r.errors));
        }
    }
    run.write_output("summary.json", summary.dump(2) + "\n");
    return run.finish(kExitOk);
}

} // namespace

void add_ingest(CLI::App& app, Globals& g, int& rc)
{
    auto o = std::make_shared<IngestOptions>();
    auto* cmd = app.add_subcommand("ingest", "Validate inputs and write their canonical forms");
    cmd->add_option("--detections", o->detections, "Detection records (JSON lines)")->check(CLI::ExistingFile);
    cmd->add_option("--events", o->events, "Event table (CSV)")->check(CLI::ExistingFile);
    cmd->add_option("--annotations", o->annotations, "Annotation records (JSON lines)")->check(CLI::ExistingFile);
    cmd->add_option("--epoch-start", o->epoch_start, "Reject records before this instant");
    cmd->add_option("--epoch-end", o->epoch_end, "Reject records at or after this instant");
    cmd->add_option("--out", o->out, "Output directory for canonical files and the run manifest");
    add_mode_options(*cmd, o->input);
    cmd->callback([o, &g, &rc] { rc = run_ingest(*o, g); });
}

} // namespace dsi::cli
