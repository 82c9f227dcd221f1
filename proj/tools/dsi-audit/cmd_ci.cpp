// SPDX-License-Identifier: Apache-2.0
#include "run.hpp"

#include <iostream>

namespace dsi::cli {

namespace {

struct CiOptions {
    std::string flow, norms, domains;
    bool json = false;
};

void print_verdict(const ci::Verdict& v)
{
    std::cout << ci::to_string(v.outcome) << '\n';
    std::cout << "  rule: " << (v.rule_id ? *v.rule_id : std::string("(none)")) << '\n';
    if (!v.rationale.empty()) {
        std::cout << "  rationale: " << v.rationale << '\n';
    }
}

int run_ci_eval(const CiOptions& o)
{
    const auto norms = load_norms(o.norms);
    const auto decl = ci::declaration_from_json(read_json(o.flow));
    const auto v = ci::evaluate(decl.flow, norms.norms);
    if (o.json) {
        nlohmann::ordered_json j;
        j["flow"] = ci::to_json(decl.flow);
        j["verdict"] = ci::to_json(v);
        j["norms"] = {{"source", norms.source}, {"sha256", norms.sha256}};
        std::cout << j.dump(2) << '\n';
    } else {
        print_verdict(v);
    }
    return kExitOk;
}

int run_ci_perturb(const CiOptions& o)
{
    const auto norms = load_norms(o.norms);
    const auto decl = ci::declaration_from_json(read_json(o.flow));
    const auto domains = ci::domains_from_json(read_json(o.domains), decl.flow);
    const auto center = ci::evaluate(decl.flow, norms.norms);
    const auto ps = ci::perturbations(decl.flow, domains, norms.norms);
    if (o.json) {
        nlohmann::ordered_json j;
        j["flow"] = ci::to_json(decl.flow);
        j["verdict"] = ci::to_json(center);
        auto arr = nlohmann::ordered_json::array();
        for (const auto& p : ps) {
            arr.push_back({{"changed", std::string(ci::to_string(p.changed))},
                           {"value", p.flow.get(p.changed)},
                           {"verdict", ci::to_json(p.verdict)}});
        }
        j["perturbations"] = arr;
        std::cout << j.dump(2) << '\n';
        return kExitOk;
    }
    std::cout << "center: " << ci::to_string(center.outcome) << '\n';
    for (const auto& p : ps) {
        std::cout << ci::to_string(p.changed) << " -> \"" << p.flow.get(p.changed) << "\": "
                  << ci::to_string(p.verdict.outcome);
        if (p.verdict.rule_id) {
            std::cout << " (" << *p.verdict.rule_id << ")";
        }
        std::cout << '\n';
    }
    return kExitOk;
}

} // namespace

void add_ci(CLI::App& app, Globals&, int& rc)
{
    auto* ci_cmd = app.add_subcommand("ci", "Contextual-integrity flow evaluation");
    ci_cmd->require_subcommand(1);

    auto e = std::make_shared<CiOptions>();
    auto* eval = ci_cmd->add_subcommand("eval", "Evaluate one information flow against the norms");
    eval->add_option("--flow", e->flow, "Information flow document")->required()->check(CLI::ExistingFile);
    eval->add_option("--norms", e->norms, "Norm rules document")->check(CLI::ExistingFile);
    eval->add_flag("--json", e->json, "Print a JSON document");
    eval->callback([e, &rc] { rc = run_ci_eval(*e); });

    auto p = std::make_shared<CiOptions>();
    auto* perturb = ci_cmd->add_subcommand("perturb", "Evaluate every single-parameter variation of a flow");
    perturb->add_option("--flow", p->flow, "Information flow document")->required()->check(CLI::ExistingFile);
    perturb->add_option("--domains", p->domains, "Candidate values per parameter")->required()->check(CLI::ExistingFile);
    perturb->add_option("--norms", p->norms, "Norm rules document")->check(CLI::ExistingFile);
    perturb->add_flag("--json", p->json, "Print a JSON document");
    perturb->callback([p, &rc] { rc = run_ci_perturb(*p); });
}

} // namespace dsi::cli
