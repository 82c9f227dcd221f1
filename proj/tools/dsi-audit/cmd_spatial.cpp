// SPDX-License-Identifier: Apache-2.0
#include "run.hpp"

#include "dsi/geojson.hpp"
#include "dsi/spatial.hpp"

#include <iostream>
#include <sstream>

namespace dsi::cli {

namespace {

struct SpatialOptions {
    std::string detections, events, polygons, out;
    std::string from, to;
    double min_conf = 0.7;
    std::optional<double> radius_ft;
    double half_window_min = 0.0;
    InputOptions input;
    GateOptions gate;
};

std::string distance_cell(double ft)
{
    return format_double(ft);
}

int run_match_events(const SpatialOptions& o, const Globals& g)
{
    Run run("match-events", g, o.out.empty() ? "dsi-out/match-events" : o.out);
    run.config() = {{"detections", o.detections},
                    {"events", o.events},
                    {"min_conf", o.min_conf},
                    {"radius_ft", o.radius_ft ? nlohmann::ordered_json(*o.radius_ft) : nlohmann::ordered_json()},
                    {"half_window_minutes", o.half_window_min}};
    if (auto blocked = run.gate(o.gate)) {
        return *blocked;
    }
    const auto detections = load_detections(run, o.detections, o.input.mode());
    const auto events = load_events(run, o.events, o.input.mode());
    std::optional<SpatialIndex> index;
    {
        auto t = run.phase("index");
        index.emplace(detections, o.min_conf);
    }
    auto t = run.phase("join");
    std::ostringstream csv;
    csv << "event_id,image_id,distance_ft,ts\n";
    nlohmann::ordered_json doc;
    doc["min_conf"] = o.min_conf;
    doc["index_size"] = index->size();
    doc["events"] = events.size();
    if (!o.radius_ft) {
        if (events.empty() || index->empty()) {
            throw DataError("nearest-detection join needs at least one event and one indexed detection");
        }
        const auto s = proximity_summary(*index, events);
        for (const auto& p : s.pairs) {
            csv << csv_escape(p.event->event_id) << ',' << csv_escape(p.nearest.record->image_id) << ','
                << distance_cell(p.nearest.distance_ft) << ',' << format_iso8601(p.nearest.record->ts) << '\n';
        }
        doc["mode"] = "nearest";
        doc["median_ft"] = s.median_ft;
        doc["min_ft"] = s.min_ft;
        doc["max_ft"] = s.max_ft;
        std::cout << "events: " << events.size() << ", indexed detections: " << index->size()
                  << ", nearest distance median " << s.median_ft << " ft (min " << s.min_ft << ", max " << s.max_ft
                  << ")\n";
    } else {
        const auto half = Micros{static_cast<std::int64_t>(o.half_window_min * static_cast<double>(kMicrosPerMinute))};
        std::size_t matched_events = 0, matches = 0;
        for (const auto& e : events) {
            const auto m = match_known_event(*index, e, *o.radius_ft, half);
            matched_events += !m.empty();
            matches += m.size();
            for (const auto& x : m) {
                csv << csv_escape(e.event_id) << ',' << csv_escape(x.record->image_id) << ','
                    << distance_cell(x.distance_ft) << ',' << format_iso8601(x.record->ts) << '\n';
            }
        }
        doc["mode"] = "known-event";
        doc["radius_ft"] = *o.radius_ft;
        doc["half_window_minutes"] = o.half_window_min;
        doc["matched_events"] = matched_events;
        doc["matches"] = matches;
        std::cout << "events: " << events.size() << ", with matches: " << matched_events << ", matches: " << matches
                  << '\n';
    }
    run.write_output("matches.csv", csv.str());
    run.write_output("summary.json", doc.dump(2) + "\n");
    return run.finish(kExitOk);
}

int run_geofence(const SpatialOptions& o, const Globals& g)
{
    Run run("geofence", g, o.out.empty() ? "dsi-out/geofence" : o.out);
    run.config() = {{"detections", o.detections}, {"polygons", o.polygons}, {"min_conf", o.min_conf},
                    {"from", o.from},             {"to", o.to}};
    std::optional<TimeWindow> window;
    if (!o.from.empty() || !o.to.empty()) {
        const auto b = parse_iso8601(o.from), e = parse_iso8601(o.to);
        if (!b || !e) {
            throw CLI::ValidationError("--from/--to", "both bounds must be ISO-8601 timestamps with offset");
        }
        window = TimeWindow{*b, *e};
    }
    if (auto blocked = run.gate(o.gate)) {
        return *blocked;
    }
    const auto regions = geojson::polygons_from_json(nlohmann::json::parse(run.read_input(o.polygons)));
    const auto detections = load_detections(run, o.detections, o.input.mode());
    std::optional<SpatialIndex> index;
    {
        auto t = run.phase("index");
        index.emplace(detections, o.min_conf);
    }
    auto t = run.phase("query");
    std::ostringstream csv;
    csv << "event_id,image_id,distance_ft,ts\n";
    nlohmann::ordered_json per_region = nlohmann::ordered_json::array();
    for (const auto& region : regions) {
        const auto hits = geofence(*index, region, window);
        for (const auto* r : hits) {
            csv << csv_escape(region.id()) << ',' << csv_escape(r->image_id) << ",," << format_iso8601(r->ts) << '\n';
        }
        per_region.push_back({{"region", region.id()}, {"count", hits.size()}});
        std::cout << region.id() << ": " << hits.size() << " detections\n";
    }
    nlohmann::ordered_json doc;
    doc["min_conf"] = o.min_conf;
    doc["index_size"] = index->size();
    doc["regions"] = per_region;
    run.write_output("geofence.csv", csv.str());
    run.write_output("summary.json", doc.dump(2) + "\n");
    return run.finish(kExitOk);
}

} // namespace

void add_match_events(CLI::App& app, Globals& g, int& rc)
{
    auto o = std::make_shared<SpatialOptions>();
    auto* cmd = app.add_subcommand("match-events", "Join known events to nearby high-confidence detections");
    cmd->add_option("--detections", o->detections, "Detection records (JSON lines)")->required()->check(CLI::ExistingFile);
    cmd->add_option("--events", o->events, "Event table (CSV)")->required()->check(CLI::ExistingFile);
    cmd->add_option("--min-conf", o->min_conf, "Index only detections with conf >= this")
        ->check(CLI::Range(0.0, 1.0))
        ->capture_default_str();
    cmd->add_option("--radius-ft", o->radius_ft, "Return every detection within this radius instead of the nearest")
        ->check(CLI::NonNegativeNumber);
    cmd->add_option("--half-window-min", o->half_window_min, "Time tolerance in minutes around each event (with --radius-ft)")
        ->check(CLI::NonNegativeNumber)
        ->capture_default_str();
    cmd->add_option("--out", o->out, "Output directory");
    add_mode_options(*cmd, o->input);
    add_gate_options(*cmd, o->gate);
    cmd->callback([o, &g, &rc] { rc = run_match_events(*o, g); });
}

void add_geofence(CLI::App& app, Globals& g, int& rc)
{
    auto o = std::make_shared<SpatialOptions>();
    o->min_conf = 0.0;
    auto* cmd = app.add_subcommand("geofence", "Retrieve detections inside regions of interest");
    cmd->add_option("--detections", o->detections, "Detection records (JSON lines)")->required()->check(CLI::ExistingFile);
    cmd->add_option("--polygons", o->polygons, "Region FeatureCollection")->required()->check(CLI::ExistingFile);
    cmd->add_option("--from", o->from, "Window start (inclusive)");
    cmd->add_option("--to", o->to, "Window end (exclusive)");
    cmd->add_option("--min-conf", o->min_conf, "Index only detections with conf >= this")
        ->check(CLI::Range(0.0, 1.0))
        ->capture_default_str();
    cmd->add_option("--out", o->out, "Output directory");
    add_mode_options(*cmd, o->input);
    add_gate_options(*cmd, o->gate);
    cmd->callback([o, &g, &rc] { rc = run_geofence(*o, g); });
}

} // namespace dsi::cli
