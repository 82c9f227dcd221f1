// SPDX-License-Identifier: Apache-2.0
#include "run.hpp"

#include "dsi/coverage.hpp"
#include "dsi/geojson.hpp"

#include <iostream>
#include <sstream>

namespace dsi::cli {

namespace {

struct CoverageOptions {
    std::string detections, polygons, out = "dsi-out/coverage";
    std::string epoch_start, epoch_end, clock = "local";
    int width = 15;
    double days = 0;
    bool reject_outside = false;
    InputOptions input;
    GateOptions gate;
};

Timestamp required_timestamp(const std::string& s, const char* flag)
{
    const auto t = parse_iso8601(s);
    if (!t) {
        throw CLI::ValidationError(flag, "not an ISO-8601 timestamp with offset: " + s);
    }
    return *t;
}

int run_coverage(const CoverageOptions& o, const Globals& g)
{
    Run run("coverage", g, o.out);
    run.config() = {{"detections", o.detections}, {"polygons", o.polygons}, {"width_minutes", o.width},
                    {"clock", o.clock},           {"epoch_start", o.epoch_start}, {"epoch_end", o.epoch_end},
                    {"days", o.days},             {"reject_outside", o.reject_outside}};
    if (auto blocked = run.gate(o.gate)) {
        return *blocked;
    }
    const auto records = load_detections(run, o.detections, o.input.mode());
    std::vector<Polygon> polygons;
    if (!o.polygons.empty()) {
        polygons = geojson::polygons_from_json(nlohmann::json::parse(run.read_input(o.polygons)));
    }

    std::optional<Run::Phase> t;
    t.emplace(run, "analysis");
    const auto stamps = timestamps_of(records);
    BinningOptions bo;
    bo.width_minutes = o.width;
    bo.clock = o.clock == "utc" ? ClockMode::Utc : ClockMode::CaptureLocal;
    bo.strict = o.reject_outside;
    if (!o.epoch_start.empty()) {
        bo.epoch.start = required_timestamp(o.epoch_start, "--epoch-start");
        if (!o.epoch_end.empty()) {
            bo.epoch.end = required_timestamp(o.epoch_end, "--epoch-end");
        } else if (o.days > 0) {
            bo.epoch.end = bo.epoch.start;
            bo.epoch.end.micros += static_cast<std::int64_t>(o.days * static_cast<double>(kMicrosPerDay));
        } else {
            throw CLI::ValidationError("--epoch-start", "needs --epoch-end or --days");
        }
    } else {
        if (stamps.empty()) {
            throw DataError("coverage: no records and no --epoch-start");
        }
        bo.epoch = covering_epoch(stamps, o.width);
    }
    const auto assignment = assign_bins(stamps, bo);
    const auto& bins = assignment.bins;
    const auto stats = interval_stats(bins);

    std::ostringstream bins_csv;
    bins_csv << "bin_start_iso,count\n";
    for (std::size_t k = 0; k < bins.size(); ++k) {
        bins_csv << format_iso8601(bins.slot_start(k)) << ',' << bins.counts[k] << '\n';
    }

    const auto points = points_of(records);
    nlohmann::ordered_json doc;
    doc["epoch_start"] = format_iso8601(bo.epoch.start);
    doc["epoch_end"] = format_iso8601(bo.epoch.end);
    doc["clock"] = o.clock == "utc" ? "utc" : "capture-local";
    doc["width_minutes"] = o.width;
    doc["n_bins"] = stats.n_bins;
    doc["n_empty"] = stats.n_empty;
    doc["total"] = stats.total;
    doc["mean_count"] = stats.mean_fixed(4);
    doc["max_count"] = stats.max_count;
    doc["rejected"] = bins.rejected;
    std::optional<HullCoverage> hull;
    if (!points.empty()) {
        hull = convex_hull_area(points);
        doc["hull_area_sq_miles"] = hull->area_sq_miles;
        doc["mean_interval_hull_area_sq_miles"] = mean_interval_hull_area(points, assignment);
    }
    std::ostringstream poly_csv;
    if (!polygons.empty()) {
        const auto pc = polygon_counts(records, polygons);
        poly_csv << "polygon_id,count\n";
        for (const auto& [id, c] : pc.counts) {
            poly_csv << csv_escape(id) << ',' << c << '\n';
        }
        doc["polygons"] = polygons.size();
        doc["unassigned"] = pc.unassigned;
    }
    t.emplace(run, "write");

    run.write_output("bins.csv", bins_csv.str());
    run.write_output("stats.json", doc.dump(2) + "\n");
    if (hull) {
        run.write_output("hull.geojson", geojson::hull_feature(*hull).dump(2) + "\n");
    }
    if (!polygons.empty()) {
        run.write_output("polygon_counts.csv", poly_csv.str());
    }

    std::cout << "bins: " << stats.n_bins << ", empty: " << stats.n_empty << ", mean: " << stats.mean_fixed(4)
              << ", max: " << stats.max_count << ", rejected: " << bins.rejected << '\n';
    if (hull) {
        std::cout << "hull area: " << hull->area_sq_miles << " sq mi\n";
    }
    return run.finish(kExitOk);
}

} // namespace

void add_coverage(CLI::App& app, Globals& g, int& rc)
{
    auto o = std::make_shared<CoverageOptions>();
    auto* cmd = app.add_subcommand("coverage", "Temporal bins, hull extent and polygon counts");
    cmd->add_option("--detections", o->detections, "Detection records (JSON lines)")->required()->check(CLI::ExistingFile);
    cmd->add_option("--polygons", o->polygons, "Polygon FeatureCollection for per-region counts")->check(CLI::ExistingFile);
    cmd->add_option("--width", o->width, "Bin width in minutes (must divide 60)")->capture_default_str();
    cmd->add_option("--clock", o->clock, "Bin by capture-local wall clock or UTC instant")
        ->check(CLI::IsMember({"local", "utc"}))
        ->capture_default_str();
    cmd->add_option("--epoch-start", o->epoch_start, "Epoch start (default: covering the records)");
    cmd->add_option("--epoch-end", o->epoch_end, "Epoch end, exclusive");
    cmd->add_option("--days", o->days, "Epoch length in days when --epoch-end is absent");
    cmd->add_flag("--reject-outside", o->reject_outside, "Fail on records outside the epoch instead of counting them");
    cmd->add_option("--out", o->out, "Output directory")->capture_default_str();
    add_mode_options(*cmd, o->input);
    add_gate_options(*cmd, o->gate);
    cmd->callback([o, &g, &rc] { rc = run_coverage(*o, g); });
}

} // namespace dsi::cli
