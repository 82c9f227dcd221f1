// SPDX-License-Identifier: Apache-2.0
//
// Contextual-integrity flow model. A flow is a fully specified five-parameter
// tuple; norms are prioritized wildcard patterns carrying a verdict. Flows no
// norm speaks to are Ambiguous, and the analysis gate fails closed on them.
#pragma once

#include "dsi/error.hpp"
#include "dsi/records.hpp"

#include <json.hpp>

#include <algorithm>
#include <array>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace dsi::ci {

enum class Parameter { Subject, Sender, Recipient, InfoType, Principle };
inline constexpr std::array kParameters{Parameter::Subject, Parameter::Sender, Parameter::Recipient,
                                        Parameter::InfoType, Parameter::Principle};

constexpr std::string_view to_string(Parameter p) noexcept
{
    switch (p) {
    case Parameter::Subject:
        return "subject";
    case Parameter::Sender:
        return "sender";
    case Parameter::Recipient:
        return "recipient";
    case Parameter::InfoType:
        return "info_type";
    case Parameter::Principle:
        return "principle";
    }
    return "";
}

struct InformationFlow {
    std::string subject;
    std::optional<GroupClass> subject_class;
    std::string sender;
    std::string recipient;
    std::string info_type;
    std::string principle;

    const std::string& get(Parameter p) const
    {
        switch (p) {
        case Parameter::Subject:
            return subject;
        case Parameter::Sender:
            return sender;
        case Parameter::Recipient:
            return recipient;
        case Parameter::InfoType:
            return info_type;
        case Parameter::Principle:
            break;
        }
        return principle;
    }
    std::string& get(Parameter p) { return const_cast<std::string&>(std::as_const(*this).get(p)); }

    bool fully_specified() const
    {
        return std::all_of(kParameters.begin(), kParameters.end(), [&](Parameter p) { return !get(p).empty(); });
    }

    friend bool operator==(const InformationFlow&, const InformationFlow&) = default;
};

enum class Outcome { Appropriate, Inappropriate, Ambiguous };

constexpr std::string_view to_string(Outcome o) noexcept
{
    switch (o) {
    case Outcome::Appropriate:
        return "Appropriate";
    case Outcome::Inappropriate:
        return "Inappropriate";
    case Outcome::Ambiguous:
        return "Ambiguous";
    }
    return "";
}

inline std::optional<Outcome> parse_outcome(std::string_view s) noexcept
{
    for (auto o : {Outcome::Appropriate, Outcome::Inappropriate, Outcome::Ambiguous}) {
        if (s == to_string(o)) {
            return o;
        }
    }
    return std::nullopt;
}

inline constexpr std::string_view kWildcard = "*";

/// One literal or "*" per parameter; matching is exact string equality.
struct FlowPattern {
    std::array<std::string, 5> fields{"*", "*", "*", "*", "*"};

    bool matches(const InformationFlow& f) const
    {
        for (std::size_t i = 0; i < kParameters.size(); ++i) {
            if (fields[i] != kWildcard && fields[i] != f.get(kParameters[i])) {
                return false;
            }
        }
        return true;
    }
};

struct NormRule {
    std::string id;
    int priority = 0; ///< higher wins
    FlowPattern match;
    Outcome verdict = Outcome::Ambiguous;
    std::string rationale;
};

/// Rules ordered by descending priority; ids and priorities are unique.
class NormSet {
public:
    NormSet() = default;
    explicit NormSet(std::vector<NormRule> rules) : rules_(std::move(rules))
    {
        std::set<int> priorities;
        std::set<std::string> ids;
        for (const auto& r : rules_) {
            if (r.id.empty()) {
                throw DataError("norm rule without an id");
            }
            if (!ids.insert(r.id).second) {
                throw DataError("duplicate norm rule id " + r.id);
            }
            if (!priorities.insert(r.priority).second) {
                throw DataError("duplicate norm rule priority " + std::to_string(r.priority) + " (rule " + r.id + ")");
            }
            for (const auto& f : r.match.fields) {
                if (f.empty()) {
                    throw DataError("norm rule " + r.id + " has an empty match field");
                }
            }
        }
        std::sort(rules_.begin(), rules_.end(), [](const NormRule& a, const NormRule& b) { return a.priority > b.priority; });
    }

    const std::vector<NormRule>& rules() const noexcept { return rules_; }

    /// Copy without the rule `id` (used to probe priority totality).
    NormSet without(std::string_view id) const
    {
        std::vector<NormRule> kept;
        for (const auto& r : rules_) {
            if (r.id != id) {
                kept.push_back(r);
            }
        }
        return NormSet(std::move(kept));
    }

private:
    std::vector<NormRule> rules_;
};

struct Verdict {
    Outcome outcome = Outcome::Ambiguous;
    std::optional<std::string> rule_id;
    std::string rationale;

    friend bool operator==(const Verdict&, const Verdict&) = default;
};

/// Raised for flows with an empty parameter.
class IncompleteFlow : public Error {
public:
    using Error::Error;
};

/// The highest-priority matching rule decides; no match is Ambiguous.
inline Verdict evaluate(const InformationFlow& flow, const NormSet& norms)
{
    if (!flow.fully_specified()) {
        for (auto p : kParameters) {
            if (flow.get(p).empty()) {
                throw IncompleteFlow("information flow is not fully specified: " + std::string(to_string(p)) + " is empty");
            }
        }
    }
    for (const auto& r : norms.rules()) {
        if (r.match.matches(flow)) {
            return Verdict{r.verdict, r.id, r.rationale};
        }
    }
    return Verdict{Outcome::Ambiguous, std::nullopt, "no norm addresses this flow"};
}

/// Candidate values per parameter, in kParameters order.
using FlowDomains = std::array<std::vector<std::string>, 5>;

struct Perturbation {
    Parameter changed = Parameter::Subject;
    InformationFlow flow;
    Verdict verdict;
};

/// Every flow differing from `flow` in exactly one parameter, drawn from
/// `domains`, in parameter order then domain order.
inline std::vector<Perturbation> perturbations(const InformationFlow& flow, const FlowDomains& domains,
                                               const NormSet& norms)
{
    for (std::size_t i = 0; i < kParameters.size(); ++i) {
        const auto& d = domains[i];
        if (std::find(d.begin(), d.end(), flow.get(kParameters[i])) == d.end()) {
            throw std::invalid_argument("domain for " + std::string(to_string(kParameters[i])) +
                                        " does not contain the flow's value \"" + flow.get(kParameters[i]) + "\"");
        }
    }
    std::vector<Perturbation> out;
    for (std::size_t i = 0; i < kParameters.size(); ++i) {
        std::set<std::string> seen{flow.get(kParameters[i])};
        for (const auto& v : domains[i]) {
            if (!seen.insert(v).second) {
                continue;
            }
            InformationFlow f = flow;
            f.get(kParameters[i]) = v;
            out.push_back({kParameters[i], f, evaluate(f, norms)});
        }
    }
    return out;
}

// ---------------------------------------------------------------- gate

/// A declared flow for one analysis run.
struct Declaration {
    InformationFlow flow;
    bool acknowledge_ambiguous = false;
};

struct GateDecision {
    std::string command;
    bool allowed = false;
    Verdict verdict;
    std::string reason;
};

/// Raised when an analysis runs without a declared flow.
class UndeclaredFlow : public Error {
public:
    using Error::Error;
};

/// Appropriate -> allow; Inappropriate -> block; Ambiguous -> block unless acknowledged.
inline GateDecision gate_analysis(std::string_view command, const std::optional<Declaration>& declared,
                                  const NormSet& norms)
{
    if (!declared) {
        throw UndeclaredFlow("analysis \"" + std::string(command) + "\" has no declared information flow");
    }
    GateDecision d;
    d.command = command;
    d.verdict = evaluate(declared->flow, norms);
    switch (d.verdict.outcome) {
    case Outcome::Appropriate:
        d.allowed = true;
        d.reason = "declared flow is appropriate";
        break;
    case Outcome::Inappropriate:
        d.reason = "declared flow is inappropriate: " + d.verdict.rationale;
        break;
    case Outcome::Ambiguous:
        d.allowed = declared->acknowledge_ambiguous;
        d.reason = d.allowed ? "ambiguous flow explicitly acknowledged" : "ambiguous flow requires explicit acknowledgement";
        break;
    }
    return d;
}

// ---------------------------------------------------------------- documents

namespace detail {

inline std::string required_string(const nlohmann::json& j, const char* key, std::string_view what)
{
    const auto it = j.find(key);
    if (it == j.end() || !it->is_string()) {
        throw DataError(std::string(what) + ": \"" + key + "\" must be a string");
    }
    return it->get<std::string>();
}

} // namespace detail

/// `{subject, subject_class?, sender, recipient, info_type, principle}`.
inline InformationFlow flow_from_json(const nlohmann::json& j)
{
    if (!j.is_object()) {
        throw DataError("information flow must be an object");
    }
    InformationFlow f;
    for (auto p : kParameters) {
        f.get(p) = detail::required_string(j, std::string(to_string(p)).c_str(), "information flow");
    }
    if (const auto it = j.find("subject_class"); it != j.end() && !it->is_null()) {
        const auto kind = it->is_string() ? parse_group_kind(it->get<std::string>()) : std::nullopt;
        if (!kind) {
            throw DataError("information flow: unknown subject_class");
        }
        f.subject_class = GroupClass{*kind, f.subject};
    }
    return f;
}

inline nlohmann::ordered_json to_json(const InformationFlow& f)
{
    nlohmann::ordered_json j;
    j["subject"] = f.subject;
    if (f.subject_class) {
        j["subject_class"] = std::string(to_string(f.subject_class->kind));
    }
    j["sender"] = f.sender;
    j["recipient"] = f.recipient;
    j["info_type"] = f.info_type;
    j["principle"] = f.principle;
    return j;
}

inline nlohmann::ordered_json to_json(const Verdict& v)
{
    nlohmann::ordered_json j;
    j["outcome"] = std::string(to_string(v.outcome));
    j["rule_id"] = v.rule_id ? nlohmann::ordered_json(*v.rule_id) : nlohmann::ordered_json(nullptr);
    j["rationale"] = v.rationale;
    return j;
}

/// Either a bare flow object or `{"flow": {...}, "acknowledge_ambiguous": bool}`.
inline Declaration declaration_from_json(const nlohmann::json& j)
{
    if (j.is_object() && j.contains("flow")) {
        Declaration d{flow_from_json(j.at("flow")), false};
        if (const auto it = j.find("acknowledge_ambiguous"); it != j.end()) {
            if (!it->is_boolean()) {
                throw DataError("acknowledge_ambiguous must be a boolean");
            }
            d.acknowledge_ambiguous = it->get<bool>();
        }
        return d;
    }
    return Declaration{flow_from_json(j), false};
}

/// `{rules: [{id, priority, match: {subject, sender, recipient, info_type, principle}, verdict, rationale}]}`.
inline NormSet norms_from_json(const nlohmann::json& j)
{
    if (!j.is_object() || !j.contains("rules") || !j.at("rules").is_array()) {
        throw DataError("norm document must contain a \"rules\" array");
    }
    std::vector<NormRule> rules;
    for (const auto& r : j.at("rules")) {
        NormRule rule;
        rule.id = detail::required_string(r, "id", "norm rule");
        const auto pr = r.find("priority");
        if (pr == r.end() || !pr->is_number_integer()) {
            throw DataError("norm rule " + rule.id + ": priority must be an integer");
        }
        rule.priority = pr->get<int>();
        const auto m = r.find("match");
        if (m == r.end() || !m->is_object()) {
            throw DataError("norm rule " + rule.id + ": match must be an object");
        }
        for (std::size_t i = 0; i < kParameters.size(); ++i) {
            rule.match.fields[i] = detail::required_string(*m, std::string(to_string(kParameters[i])).c_str(),
                                                           "norm rule " + rule.id + " match");
        }
        const auto verdict = parse_outcome(detail::required_string(r, "verdict", "norm rule " + rule.id));
        if (!verdict) {
            throw DataError("norm rule " + rule.id + ": verdict must be Appropriate, Inappropriate or Ambiguous");
        }
        rule.verdict = *verdict;
        if (r.contains("rationale")) {
            rule.rationale = detail::required_string(r, "rationale", "norm rule " + rule.id);
        }
        rules.push_back(std::move(rule));
    }
    return NormSet(std::move(rules));
}

/// `{subject: [...], sender: [...], recipient: [...], info_type: [...], principle: [...]}`;
/// a missing parameter contributes no alternatives beyond the flow's own value.
inline FlowDomains domains_from_json(const nlohmann::json& j, const InformationFlow& center)
{
    if (!j.is_object()) {
        throw DataError("flow domains must be an object");
    }
    FlowDomains d;
    for (std::size_t i = 0; i < kParameters.size(); ++i) {
        const std::string key(to_string(kParameters[i]));
        if (const auto it = j.find(key); it != j.end()) {
            if (!it->is_array()) {
                throw DataError("flow domain \"" + key + "\" must be an array");
            }
            for (const auto& v : *it) {
                if (!v.is_string()) {
                    throw DataError("flow domain \"" + key + "\" must hold strings");
                }
                d[i].push_back(v.get<std::string>());
            }
        } else {
            d[i].push_back(center.get(kParameters[i]));
        }
    }
    return d;
}

} // namespace dsi::ci
