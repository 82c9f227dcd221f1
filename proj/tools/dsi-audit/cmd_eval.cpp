// SPDX-License-Identifier: Apache-2.0
#include "run.hpp"

#include "dsi/classifier_eval.hpp"

#include <iostream>
#include <sstream>
#include <unordered_map>

namespace dsi::cli {

namespace {

struct EvalOptions {
    std::string annotations, detections, label, curve, out;
    std::string policy = "max-f1";
    std::uint64_t negatives_full = 0;
    InputOptions input;
    GateOptions gate;
};

/// Joins annotations to detection confidences by image_id (and label).
std::vector<ScoredSample> scored_samples(std::span<const AnnotationRecord> annotations,
                                         std::span<const DetectionRecord> detections, const std::string& label)
{
    std::unordered_map<std::string_view, const DetectionRecord*> by_image;
    for (const auto& d : detections) {
        if (!label.empty() && d.label != label) {
            continue;
        }
        auto [it, inserted] = by_image.emplace(d.image_id, &d);
        if (!inserted) {
            throw DataError("image " + d.image_id + " has several labels; choose one with --label");
        }
    }
    std::vector<ScoredSample> out;
    out.reserve(annotations.size());
    for (const auto& a : annotations) {
        const auto it = by_image.find(a.image_id);
        if (it == by_image.end()) {
            throw DataError("annotation for " + a.image_id + " has no matching detection");
        }
        out.push_back({it->second->conf, a.actual});
    }
    return out;
}

std::string curve_csv(std::span<const CurvePoint> curve)
{
    std::ostringstream out;
    out << "threshold,precision,recall,fpr\n";
    for (const auto& p : curve) {
        out << format_double(p.threshold) << ',' << format_double(p.precision) << ',' << format_double(p.recall)
            << ',' << format_double(p.fpr) << '\n';
    }
    return std::move(out).str();
}

std::vector<CurvePoint> read_curve_csv(const std::string& text)
{
    std::istringstream in(text);
    CsvReader reader(in);
    std::vector<std::string> row;
    std::size_t line = 0;
    if (!reader.next(row, line)) {
        throw DataError("curve: missing header");
    }
    std::array<int, 4> col{-1, -1, -1, -1};
    const std::array<std::string_view, 4> names{"threshold", "precision", "recall", "fpr"};
    for (std::size_t i = 0; i < row.size(); ++i) {
        for (std::size_t k = 0; k < names.size(); ++k) {
            if (detail::trim(row[i]) == names[k]) {
                col[k] = static_cast<int>(i);
            }
        }
    }
    for (std::size_t k = 0; k < 3; ++k) {
        if (col[k] < 0) {
            throw DataError("curve: missing column " + std::string(names[k]));
        }
    }
    std::vector<CurvePoint> curve;
    while (reader.next(row, line)) {
        if (row.size() == 1 && row[0].empty()) {
            continue;
        }
        auto field = [&](std::size_t k) -> double {
            if (col[k] < 0) {
                return 0.0;
            }
            const auto idx = static_cast<std::size_t>(col[k]);
            const auto v = idx < row.size() ? parse_double(row[idx]) : std::nullopt;
            if (!v || !(*v >= 0.0 && *v <= 1.0)) {
                throw ParseError(LineError{line, std::string(names[k]), "expected a number in [0, 1]"});
            }
            return *v;
        };
        CurvePoint p;
        p.threshold = field(0);
        p.precision = field(1);
        p.recall = field(2);
        p.fpr = field(3);
        curve.push_back(p);
    }
    return curve;
}

int run_eval(const EvalOptions& o, const Globals& g)
{
    Run run("eval", g, o.out.empty() ? "dsi-out/eval" : o.out);
    run.config() = {{"annotations", o.annotations}, {"detections", o.detections}, {"label", o.label},
                    {"threshold_policy", o.policy},  {"negatives_full", o.negatives_full}};
    const auto policy = parse_threshold_policy(o.policy);
    if (auto blocked = run.gate(o.gate)) {
        return *blocked;
    }
    const auto detections = load_detections(run, o.detections, o.input.mode());
    std::istringstream ann_in(run.read_input(o.annotations));
    ParseOptions popt;
    popt.mode = o.input.mode();
    const auto ann = parse_annotations(ann_in, popt);
    report_errors(run, "annotations", ann.errors);

    auto t = run.phase("analysis");
    const auto cc = confusion_counts(ann.records);
    nlohmann::ordered_json doc;
    doc["confusion"] = {{"tp", cc.tp}, {"fp", cc.fp}, {"fn", cc.fn}, {"tn", cc.tn}};
    const nlohmann::ordered_json precision =
        cc.tp + cc.fp > 0 ? nlohmann::ordered_json(positive_sample_precision(cc.tp, cc.fp)) : nlohmann::ordered_json();
    const nlohmann::ordered_json fnr =
        cc.fn + cc.tn > 0 ? nlohmann::ordered_json(negative_sample_fnr(cc.fn, cc.fn + cc.tn)) : nlohmann::ordered_json();
    doc["positive_sample_precision"] = precision;
    doc["negative_sample_fnr"] = fnr;
    if (o.negatives_full > 0 && fnr.is_number()) {
        doc["extrapolated_missed"] = {{"negatives_full", o.negatives_full},
                                      {"missed", extrapolate_missed(fnr.get<double>(), o.negatives_full)}};
    }
    const auto samples = scored_samples(ann.records, detections, o.label);
    const auto curve = threshold_sweep(samples);
    doc["samples"] = samples.size();
    doc["average_precision"] = average_precision(curve);
    if (cc.fp + cc.tn > 0) {
        doc["roc_auc"] = roc_auc(curve);
    } else {
        doc["roc_auc"] = nullptr;
    }
    doc["threshold_policy"] = o.policy;
    try {
        doc["selected_threshold"] = select_threshold(curve, policy);
    } catch (const FloorUnattainable& e) {
        doc["selected_threshold"] = nullptr;
        doc["floor_unattainable"] = {{"max_precision", e.max_precision()}};
    }

    run.write_output("metrics.json", doc.dump(2) + "\n");
    run.write_output("curve.csv", curve_csv(curve));
    std::cout << "samples: " << samples.size() << ", AP: " << doc["average_precision"].dump()
              << ", ROC AUC: " << doc["roc_auc"].dump() << '\n'
              << "positive-sample precision: " << precision.dump() << ", negative-sample FNR: " << fnr.dump() << '\n'
              << "threshold (" << o.policy << "): " << doc["selected_threshold"].dump() << '\n';
    return run.finish(kExitOk);
}

int run_threshold(const EvalOptions& o, const Globals& g)
{
    Run run("threshold", g, o.out.empty() ? "dsi-out/threshold" : o.out);
    run.config() = {{"curve", o.curve}, {"annotations", o.annotations}, {"detections", o.detections},
                    {"label", o.label}, {"threshold_policy", o.policy}};
    const auto policy = parse_threshold_policy(o.policy);
    if (o.curve.empty() && (o.annotations.empty() || o.detections.empty())) {
        std::cerr << "threshold: give --curve, or --annotations with --detections\n";
        return kExitUsage;
    }
    if (auto blocked = run.gate(o.gate)) {
        return *blocked;
    }
    std::vector<CurvePoint> curve;
    if (!o.curve.empty()) {
        curve = read_curve_csv(run.read_input(o.curve));
    } else {
        const auto detections = load_detections(run, o.detections, o.input.mode());
        std::istringstream ann_in(run.read_input(o.annotations));
        ParseOptions popt;
        popt.mode = o.input.mode();
        const auto ann = parse_annotations(ann_in, popt);
        report_errors(run, "annotations", ann.errors);
        curve = threshold_sweep(scored_samples(ann.records, detections, o.label));
    }
    nlohmann::ordered_json doc;
    doc["threshold_policy"] = o.policy;
    doc["curve_points"] = curve.size();
    try {
        const double th = select_threshold(curve, policy);
        doc["threshold"] = th;
        run.write_output("threshold.json", doc.dump(2) + "\n");
        std::cout << "threshold (" << o.policy << "): " << format_double(th) << '\n';
    } catch (const FloorUnattainable& e) {
        doc["threshold"] = nullptr;
        doc["floor_unattainable"] = {{"max_precision", e.max_precision()}};
        run.write_output("threshold.json", doc.dump(2) + "\n");
        std::cerr << "threshold: " << e.what() << '\n';
        return run.finish(kExitData);
    }
    return run.finish(kExitOk);
}

void common(CLI::App& cmd, EvalOptions& o)
{
    cmd.add_option("--label", o.label, "Detection label to score when images carry several");
    cmd.add_option("--threshold-policy", o.policy, "max-f1 or precision-floor=P")->capture_default_str();
    cmd.add_option("--out", o.out, "Output directory");
    add_mode_options(cmd, o.input);
    add_gate_options(cmd, o.gate);
}

} // namespace

void add_eval(CLI::App& app, Globals& g, int& rc)
{
    auto o = std::make_shared<EvalOptions>();
    auto* cmd = app.add_subcommand("eval", "Classifier validation: sample rates, PR/ROC curves, AP and AUC");
    cmd->add_option("--annotations", o->annotations, "Annotation records (JSON lines)")->required()->check(CLI::ExistingFile);
    cmd->add_option("--detections", o->detections, "Detection records supplying scores")->required()->check(CLI::ExistingFile);
    cmd->add_option("--negatives-full", o->negatives_full, "Negative-classified population size for extrapolating misses");
    common(*cmd, *o);
    cmd->callback([o, &g, &rc] { rc = run_eval(*o, g); });
}

void add_threshold(CLI::App& app, Globals& g, int& rc)
{
    auto o = std::make_shared<EvalOptions>();
    auto* cmd = app.add_subcommand("threshold", "Select a confidence threshold from a precision-recall curve");
    cmd->add_option("--curve", o->curve, "Curve table (threshold,precision,recall[,fpr])")->check(CLI::ExistingFile);
    cmd->add_option("--annotations", o->annotations, "Annotation records (JSON lines)")->check(CLI::ExistingFile);
    cmd->add_option("--detections", o->detections, "Detection records supplying scores")->check(CLI::ExistingFile);
    common(*cmd, *o);
    cmd->callback([o, &g, &rc] { rc = run_threshold(*o, g); });
}

} // namespace dsi::cli
