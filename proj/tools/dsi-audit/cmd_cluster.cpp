// SPDX-License-Identifier: Apache-2.0
#include "run.hpp"

#include "dsi/group_inference.hpp"
#include "dsi/synth.hpp"

#include <iostream>
#include <map>
#include <sstream>

namespace dsi::cli {

namespace {

struct ClusterOptions {
    std::string detections, truth, scenario, label, out = "dsi-out/cluster";
    std::vector<std::string> features;
    bool space = false, time = false;
    std::size_t k = 2;
    std::uint64_t seed = 0;
    double min_conf = 0.0;
    InputOptions input;
    GateOptions gate;
};

/// (image_id, label) -> planted group from a ground-truth table.
std::map<std::pair<std::string, std::string>, std::string> read_truth(const std::string& text)
{
    std::istringstream in(text);
    CsvReader reader(in);
    std::vector<std::string> row;
    std::size_t line = 0;
    if (!reader.next(row, line)) {
        throw DataError("truth: missing header");
    }
    int id = -1, lab = -1, grp = -1;
    for (std::size_t i = 0; i < row.size(); ++i) {
        const auto h = detail::trim(row[i]);
        if (h == "image_id") {
            id = static_cast<int>(i);
        } else if (h == "label") {
            lab = static_cast<int>(i);
        } else if (h == "group") {
            grp = static_cast<int>(i);
        }
    }
    if (id < 0 || lab < 0 || grp < 0) {
        throw DataError("truth: header needs image_id, label and group columns");
    }
    const auto width = static_cast<std::size_t>(std::max({id, lab, grp}));
    std::map<std::pair<std::string, std::string>, std::string> out;
    while (reader.next(row, line)) {
        if (row.size() == 1 && row[0].empty()) {
            continue;
        }
        if (row.size() <= width) {
            throw ParseError(LineError{line, "", "truth row has too few columns"});
        }
        out[{row[static_cast<std::size_t>(id)], row[static_cast<std::size_t>(lab)]}] = row[static_cast<std::size_t>(grp)];
    }
    return out;
}

std::map<FailureMode, std::string> scenario_notes(const nlohmann::json& j)
{
    std::map<FailureMode, std::string> notes;
    const auto s = synth::scenario_from_json(j);
    notes[FailureMode::FalsePositives] = "planted: " + format_double(1.0 - s.noise.tpr) +
                                         " of positive-classified records are decoys";
    notes[FailureMode::FalseNegatives] = "planted: " + format_double(s.noise.fnr) +
                                         " of negative-classified records are missed group members";
    if (j.contains("failure_notes")) {
        for (auto m : {FailureMode::StreisandEffect, FailureMode::ContextualIdentification}) {
            const std::string key(to_string(m));
            if (j["failure_notes"].contains(key)) {
                notes[m] = j["failure_notes"][key].get<std::string>();
            }
        }
    }
    return notes;
}

int run_cluster(const ClusterOptions& o, const Globals& g)
{
    Run run("cluster", g, o.out);
    run.config() = {{"detections", o.detections}, {"truth", o.truth}, {"scenario", o.scenario},
                    {"label", o.label},           {"features", o.features}, {"space", o.space},
                    {"time", o.time},             {"k", o.k},           {"seed", o.seed},
                    {"min_conf", o.min_conf}};
    if (o.features.empty() && !o.space && !o.time) {
        throw CLI::ValidationError("--features", "give attribute keys, --space or --time");
    }
    if (auto blocked = run.gate(o.gate)) {
        return *blocked;
    }
    auto records = load_detections(run, o.detections, o.input.mode());
    std::erase_if(records, [&](const DetectionRecord& r) {
        return r.conf < o.min_conf || (!o.label.empty() && r.label != o.label);
    });
    std::optional<std::map<std::pair<std::string, std::string>, std::string>> truth;
    if (!o.truth.empty()) {
        truth = read_truth(run.read_input(o.truth));
    }
    std::map<FailureMode, std::string> notes;
    if (!o.scenario.empty()) {
        notes = scenario_notes(nlohmann::json::parse(run.read_input(o.scenario)));
    }

    auto t = run.phase("analysis");
    const auto vectors = featurize(records, FeatureSpec{o.features, o.space, o.time});
    auto assignments = cluster(vectors, o.k, o.seed);

    std::ostringstream csv;
    csv << "image_id,label,cluster\n";
    for (std::size_t i = 0; i < records.size(); ++i) {
        csv << csv_escape(records[i].image_id) << ',' << csv_escape(records[i].label) << ',' << assignments[i] << '\n';
    }
    nlohmann::ordered_json doc;
    doc["records"] = records.size();
    doc["k"] = o.k;
    doc["seed"] = o.seed;
    if (truth) {
        std::vector<std::string> labels;
        labels.reserve(records.size());
        for (const auto& r : records) {
            const auto it = truth->find({r.image_id, r.label});
            if (it == truth->end()) {
                throw DataError("truth has no row for " + r.image_id + " / " + r.label);
            }
            labels.push_back(it->second.empty() ? std::string("(none)") : it->second);
        }
        const auto report = make_cluster_report(assignments, labels, notes);
        doc["purity"] = report.purity;
        auto clusters = nlohmann::ordered_json::array();
        for (const auto& c : report.clusters) {
            auto modes = nlohmann::ordered_json::array();
            for (auto m : c.failure_modes) {
                modes.push_back(std::string(to_string(m)));
            }
            clusters.push_back({{"id", c.id},
                                {"size", c.size},
                                {"dominant_label", c.dominant_label},
                                {"dominant_share", c.dominant_share},
                                {"failure_modes", modes}});
        }
        doc["clusters"] = clusters;
        auto ann = nlohmann::ordered_json::object();
        for (const auto& [m, text] : report.annotations) {
            ann[std::string(to_string(m))] = text;
        }
        doc["failure_mode_notes"] = ann;
        std::cout << "purity: " << report.purity << '\n';
        for (const auto& c : report.clusters) {
            std::cout << "  cluster " << c.id << ": " << c.size << " records, " << c.dominant_label << " "
                      << c.dominant_share << (c.failure_modes.empty() ? "" : " [Membership inference]") << '\n';
        }
    } else {
        std::map<std::size_t, std::size_t> sizes;
        for (auto a : assignments) {
            ++sizes[a];
        }
        auto clusters = nlohmann::ordered_json::array();
        for (const auto& [id, n] : sizes) {
            clusters.push_back({{"id", id}, {"size", n}});
            std::cout << "  cluster " << id << ": " << n << " records\n";
        }
        doc["clusters"] = clusters;
    }
    run.write_output("assignments.csv", csv.str());
    run.write_output("report.json", doc.dump(2) + "\n");
    return run.finish(kExitOk);
}

} // namespace

void add_cluster(CLI::App& app, Globals& g, int& rc)
{
    auto o = std::make_shared<ClusterOptions>();
    auto* cmd = app.add_subcommand("cluster", "Cluster detections by attributes and score group recovery");
    cmd->add_option("--detections", o->detections, "Detection records (JSON lines)")->required()->check(CLI::ExistingFile);
    cmd->add_option("--features", o->features, "Attribute keys, comma separated")->delimiter(',');
    cmd->add_flag("--space", o->space, "Append normalized position features");
    cmd->add_flag("--time", o->time, "Append a normalized time feature");
    cmd->add_option("--k", o->k, "Number of clusters")->check(CLI::PositiveNumber)->capture_default_str();
    cmd->add_option("--seed", o->seed, "Initialization seed")->capture_default_str();
    cmd->add_option("--truth", o->truth, "Ground-truth table (image_id,label,group) for purity")->check(CLI::ExistingFile);
    cmd->add_option("--scenario", o->scenario, "Scenario document supplying failure-mode notes")->check(CLI::ExistingFile);
    cmd->add_option("--label", o->label, "Keep only this label");
    cmd->add_option("--min-conf", o->min_conf, "Keep detections with conf >= this")
        ->check(CLI::Range(0.0, 1.0))
        ->capture_default_str();
    cmd->add_option("--out", o->out, "Output directory")->capture_default_str();
    add_mode_options(*cmd, o->input);
    add_gate_options(*cmd, o->gate);
    cmd->callback([o, &g, &rc] { rc = run_cluster(*o, g); });
}

} // namespace dsi::cli
