// SPDX-License-Identifier: Apache-2.0
#include "run.hpp"

#include "dsi/geojson.hpp"
#include "dsi/hotspot.hpp"

#include <iostream>
#include <sstream>

namespace dsi::cli {

namespace {

inline constexpr std::int64_t kMaxCells = 50'000'000;

struct HotspotOptions {
    std::string detections, window, label, out = "dsi-out/hotspot";
    double cell_size_m = kDefaultCellSizeM;
    double min_conf = 0.0;
    std::size_t k = 10;
    int blur = -1;
    InputOptions input;
    GateOptions gate;
};

int run_hotspot(const HotspotOptions& o, const Globals& g)
{
    Run run("hotspot", g, o.out);
    run.config() = {{"detections", o.detections}, {"window", o.window}, {"label", o.label},
                    {"cell_size_m", o.cell_size_m}, {"min_conf", o.min_conf}, {"k", o.k},
                    {"blur", o.blur}};
    std::optional<DailyWindow> window;
    if (!o.window.empty()) {
        window = parse_daily_window(o.window);
        if (!window) {
            throw CLI::ValidationError("--window", "expected HH:MM-HH:MM with start before end");
        }
    }
    if (auto blocked = run.gate(o.gate)) {
        return *blocked;
    }
    auto records = load_detections(run, o.detections, o.input.mode());
    auto t = run.phase("analysis");
    std::erase_if(records, [&](const DetectionRecord& r) {
        return r.conf < o.min_conf || (!o.label.empty() && r.label != o.label);
    });
    if (window) {
        records = filter_daily_window(records, window->start, window->end);
    }
    const auto grid = grid_covering(records, o.cell_size_m);
    if (grid.nx * grid.ny > kMaxCells) {
        throw DataError("hotspot grid would need " + std::to_string(grid.nx * grid.ny) +
                        " cells; raise --cell-size-m or narrow the input");
    }
    auto heat = grid_density(records, grid);
    heat.window = window;
    const auto zones = heat.cells.empty() ? std::vector<Zone>{} : top_zones(heat, o.k);

    std::ostringstream cells;
    cells << "cell_x,cell_y,count\n";
    for (std::int64_t y = 0; y < heat.grid.ny; ++y) {
        for (std::int64_t x = 0; x < heat.grid.nx; ++x) {
            if (const auto c = heat.at(x, y)) {
                cells << x << ',' << y << ',' << c << '\n';
            }
        }
    }
    std::ostringstream zones_csv;
    zones_csv << "rank,cell_x,cell_y,count,center_lat,center_lon\n";
    for (std::size_t i = 0; i < zones.size(); ++i) {
        const auto c = heat.grid.cell_center(zones[i].x, zones[i].y);
        zones_csv << i + 1 << ',' << zones[i].x << ',' << zones[i].y << ',' << zones[i].count << ','
                  << format_double(c.lat) << ',' << format_double(c.lon) << '\n';
    }
    nlohmann::ordered_json doc;
    doc["records"] = records.size();
    doc["origin"] = {{"lat", heat.grid.origin.lat}, {"lon", heat.grid.origin.lon}};
    doc["cell_size_m"] = heat.grid.cell_size_m;
    doc["nx"] = heat.grid.nx;
    doc["ny"] = heat.grid.ny;
    doc["overflow"] = heat.overflow;
    doc["window"] = o.window.empty() ? nlohmann::ordered_json() : nlohmann::ordered_json(o.window);

    run.write_output("heatmap.csv", cells.str());
    run.write_output("heatmap.geojson", geojson::heatmap_features(heat).dump() + "\n");
    run.write_output("zones.csv", zones_csv.str());
    if (o.blur >= 0) {
        const auto smooth = box_blur(heat, o.blur);
        std::ostringstream b;
        b << "cell_x,cell_y,value\n";
        for (std::size_t i = 0; i < smooth.size(); ++i) {
            if (smooth[i] > 0) {
                b << static_cast<std::int64_t>(i) % heat.grid.nx << ',' << static_cast<std::int64_t>(i) / heat.grid.nx
                  << ',' << format_double(smooth[i]) << '\n';
            }
        }
        run.write_output("heatmap_blurred.csv", b.str());
    }
    run.write_output("summary.json", doc.dump(2) + "\n");

    std::cout << "records: " << records.size() << ", grid " << heat.grid.nx << "x" << heat.grid.ny << " @ "
              << o.cell_size_m << " m\n";
    for (std::size_t i = 0; i < zones.size(); ++i) {
        const auto c = heat.grid.cell_center(zones[i].x, zones[i].y);
        std::cout << "  #" << i + 1 << " cell (" << zones[i].x << "," << zones[i].y << ") count " << zones[i].count
                  << " near " << c.lat << "," << c.lon << '\n';
    }
    return run.finish(kExitOk);
}

} // namespace

void add_hotspot(CLI::App& app, Globals& g, int& rc)
{
    auto o = std::make_shared<HotspotOptions>();
    auto* cmd = app.add_subcommand("hotspot", "Time-windowed density grid and deployment zones");
    cmd->add_option("--detections", o->detections, "Detection records (JSON lines)")->required()->check(CLI::ExistingFile);
    cmd->add_option("--window", o->window, "Daily capture-local window HH:MM-HH:MM");
    cmd->add_option("--label", o->label, "Keep only this label");
    cmd->add_option("--min-conf", o->min_conf, "Keep detections with conf >= this")
        ->check(CLI::Range(0.0, 1.0))
        ->capture_default_str();
    cmd->add_option("--cell-size-m", o->cell_size_m, "Grid cell size in meters")
        ->check(CLI::PositiveNumber)
        ->capture_default_str();
    cmd->add_option("--k", o->k, "Number of top zones")->check(CLI::PositiveNumber)->capture_default_str();
    cmd->add_option("--blur", o->blur, "Also write a box-blurred surface with this radius (display only)")
        ->check(CLI::NonNegativeNumber);
    cmd->add_option("--out", o->out, "Output directory")->capture_default_str();
    add_mode_options(*cmd, o->input);
    add_gate_options(*cmd, o->gate);
    cmd->callback([o, &g, &rc] { rc = run_hotspot(*o, g); });
}

} // namespace dsi::cli
