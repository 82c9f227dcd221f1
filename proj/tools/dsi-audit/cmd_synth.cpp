// SPDX-License-Identifier: Apache-2.0
#include "run.hpp"

#include "dsi/synth.hpp"

#include <iostream>
#include <sstream>

namespace dsi::cli {

namespace {

struct SynthOptions {
    std::string scenario, out;
    bool dst = false;
    std::optional<std::uint64_t> seed;
};

int run_synth(const SynthOptions& o, const Globals& g)
{
    Run run("synth", g, o.out);
    synth::Scenario s;
    if (o.dst) {
        s = synth::dst_fallback_scenario();
    } else {
        s = synth::scenario_from_json(nlohmann::json::parse(run.read_input(o.scenario)));
    }
    if (o.seed) {
        s.seed = *o.seed;
    }
    run.config() = {{"scenario", o.scenario}, {"dst", o.dst}, {"seed", s.seed}};

    const auto data = [&] {
        auto t = run.phase("generate");
        return synth::generate(s);
    }();
    auto t = run.phase("write");
    std::ostringstream det, ann, truth, ev;
    write_detections(det, data.detections);
    for (const auto& a : data.annotations) {
        ann << to_json_line(a) << '\n';
    }
    synth::write_truth_csv(truth, data.truth);
    write_events_csv(ev, data.events);
    run.write_output("detections.jsonl", det.str());
    run.write_output("annotations.jsonl", ann.str());
    run.write_output("ground_truth.csv", truth.str());
    run.write_output("events.csv", ev.str());

    std::size_t predicted = 0, actual = 0;
    for (const auto& x : data.truth) {
        predicted += x.predicted;
        actual += x.actual;
    }
    std::cout << "detections: " << data.detections.size() << " (" << predicted << " positive-classified, " << actual
              << " real), events: " << data.events.size() << ", bins: " << synth::bin_total(s) << '\n';
    return run.finish(kExitOk);
}

} // namespace

void add_synth(CLI::App& app, Globals& g, int& rc)
{
    auto o = std::make_shared<SynthOptions>();
    auto* cmd = app.add_subcommand("synth", "Generate a deterministic synthetic scenario with planted ground truth");
    auto* sc = cmd->add_option("--scenario", o->scenario, "Scenario document")->check(CLI::ExistingFile);
    auto* dst = cmd->add_flag("--dst", o->dst, "Built-in dense stream across a fall-back clock change");
    sc->excludes(dst);
    cmd->add_option("--seed", o->seed, "Override the scenario seed");
    cmd->add_option("--out", o->out, "Output directory")->required();
    cmd->callback([o, &g, &rc] {
        if (o->scenario.empty() && !o->dst) {
            std::cerr << "synth: give --scenario or --dst\n";
            rc = kExitUsage;
            return;
        }
        rc = run_synth(*o, g);
    });
}

} // namespace dsi::cli
