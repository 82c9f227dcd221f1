// SPDX-License-Identifier: Apache-2.0
//
// Deterministic synthetic street-imagery scenarios with planted ground truth.
#pragma once

#include "dsi/coverage.hpp"
#include "dsi/error.hpp"
#include "dsi/hotspot.hpp"
#include "dsi/io.hpp"
#include "dsi/records.hpp"

#include <boost/random/bernoulli_distribution.hpp>
#include <boost/random/beta_distribution.hpp>
#include <boost/random/mersenne_twister.hpp>
#include <boost/random/normal_distribution.hpp>
#include <boost/random/poisson_distribution.hpp>
#include <boost/random/uniform_int_distribution.hpp>
#include <boost/random/uniform_real_distribution.hpp>

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <numbers>
#include <ostream>
#include <span>
#include <optional>
#include <stdexcept>
#include <string>
#include <tuple>
#include <vector>

namespace dsi::synth {

struct AttrModel {
    AttrMap mean;
    double noise = 0.0; ///< per-component standard deviation
};

struct GroupSpec {
    std::string name;
    GroupKind kind = GroupKind::RoleBased;
    std::string label;
    std::vector<GeoPoint> centers;
    double spatial_std_m = 50.0;
    DailyWindow window{{0}, {24 * 60}};
    double rate_per_bin = 1.0;            ///< predicted-positive detections per bin inside the window
    double background_rate_per_bin = 0.0; ///< predicted-negative inferences per bin, any time of day
    AttrModel attrs;
};

/// Operational classifier noise: `tpr` is the fraction of positive-classified
/// records that are real, `fnr` the fraction of negative-classified ones that are.
struct ClassifierNoise {
    double tpr = 1.0;
    double fnr = 0.0;
};

struct EventSpec {
    std::string group;
    std::size_t count = 0;
    double jitter_m = 0.0; ///< events land uniformly in a disc of this radius about a center
    std::string category = "event";
};

/// Capture-local offset, with an optional single change at an instant.
struct ClockSpec {
    std::int16_t utc_offset_minutes = 0;
    std::optional<std::int64_t> transition_at;
    std::int16_t offset_after_minutes = 0;

    std::int16_t offset_at(std::int64_t micros) const noexcept
    {
        return transition_at && micros >= *transition_at ? offset_after_minutes : utc_offset_minutes;
    }
};

struct Scenario {
    std::uint64_t seed = 0;
    Epoch epoch;
    int bin_minutes = 15;
    BoundingBox region;
    ClockSpec clock;
    ClassifierNoise noise;
    double positive_beta_a = 8, positive_beta_b = 2;
    double negative_beta_a = 2, negative_beta_b = 8;
    AttrModel background_attrs;
    std::vector<GroupSpec> groups;
    std::vector<EventSpec> events;
};

struct GroundTruth {
    std::string image_id;
    std::string label;
    std::string group; ///< planted group; empty for decoys and background
    bool predicted = false;
    bool actual = false;
};

struct Output {
    std::vector<DetectionRecord> detections; ///< ordered by (instant, image_id)
    std::vector<GroundTruth> truth;          ///< parallel to detections
    std::vector<AnnotationRecord> annotations;
    std::vector<EventRecord> events; ///< ordered by (instant, event_id)
};

namespace detail {

inline std::uint64_t splitmix64(std::uint64_t x) noexcept
{
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

inline std::uint64_t fnv1a(std::string_view s) noexcept
{
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : s) {
        h = (h ^ c) * 0x100000001b3ULL;
    }
    return h;
}

/// Independent stream per named purpose: adding a group leaves others untouched.
inline boost::random::mt19937_64 stream(std::uint64_t seed, std::string_view purpose)
{
    return boost::random::mt19937_64(splitmix64(seed ^ fnv1a(purpose)));
}

inline double uniform(boost::random::mt19937_64& rng, double lo, double hi)
{
    return boost::random::uniform_real_distribution<double>(lo, hi)(rng);
}

inline std::string numbered(std::string_view prefix, std::size_t n)
{
    char buf[24];
    std::snprintf(buf, sizeof buf, "-%08zu", n);
    return std::string(prefix) + buf;
}

inline void validate(const Scenario& s)
{
    if (!(s.region.max_lat > s.region.min_lat) || !(s.region.max_lon > s.region.min_lon)) {
        throw std::invalid_argument("scenario region is empty");
    }
    if (s.epoch.end.micros <= s.epoch.start.micros) {
        throw std::invalid_argument("scenario epoch is empty");
    }
    if (s.bin_minutes <= 0 || 60 % s.bin_minutes != 0) {
        throw std::invalid_argument("bin width must divide 60 minutes");
    }
    if (!(s.noise.tpr >= 0 && s.noise.tpr <= 1) || !(s.noise.fnr >= 0 && s.noise.fnr <= 1)) {
        throw std::invalid_argument("classifier noise rates must lie in [0, 1]");
    }
    for (const auto& g : s.groups) {
        if (g.name.empty() || g.label.empty()) {
            throw std::invalid_argument("group needs a name and a label");
        }
        if (g.centers.empty()) {
            throw std::invalid_argument("group " + g.name + " has no hotspot centers");
        }
        if (!(g.rate_per_bin >= 0) || !(g.background_rate_per_bin >= 0) || !(g.spatial_std_m >= 0)) {
            throw std::invalid_argument("group " + g.name + " has a negative rate or spread");
        }
    }
}

} // namespace detail

inline std::size_t bin_total(const Scenario& s)
{
    return bin_count(s.epoch, s.bin_minutes);
}

/// Bins whose start falls inside `w` in capture-local time.
inline std::vector<std::size_t> window_bins(const Scenario& s, const DailyWindow& w)
{
    std::vector<std::size_t> out;
    const std::int64_t width = std::int64_t{s.bin_minutes} * kMicrosPerMinute;
    for (std::size_t k = 0, n = bin_total(s); k < n; ++k) {
        const std::int64_t t = s.epoch.start.micros + static_cast<std::int64_t>(k) * width;
        if (w.contains(Timestamp{t, s.clock.offset_at(t)})) {
            out.push_back(k);
        }
    }
    return out;
}

/// Deterministic for a given scenario.
///
/// Per group, every in-window bin draws Poisson(rate_per_bin) positive-classified
/// records, each real with probability tpr (else a decoy placed uniformly in the
/// region); every bin draws Poisson(background_rate_per_bin) negative-classified
/// records, each a missed positive with probability fnr. Real records sit at a
/// Gaussian offset from a random hotspot center and carry the group's attribute
/// model; decoys and background carry the background model. Confidences follow
/// Beta(8,2) for positive-classified and Beta(2,8) for negative-classified records.
inline Output generate(const Scenario& s)
{
    detail::validate(s);
    Output out;
    const std::int64_t width = std::int64_t{s.bin_minutes} * kMicrosPerMinute;
    const std::size_t n_bins = bin_total(s);

    struct Row {
        DetectionRecord det;
        GroundTruth truth;
        std::optional<std::string> note;
    };
    std::vector<Row> rows;

    for (const auto& g : s.groups) {
        auto rng = detail::stream(s.seed, "group:" + g.name);
        boost::random::beta_distribution<double> pos_conf(s.positive_beta_a, s.positive_beta_b);
        boost::random::beta_distribution<double> neg_conf(s.negative_beta_a, s.negative_beta_b);
        boost::random::normal_distribution<double> gauss(0.0, 1.0);
        boost::random::uniform_int_distribution<std::size_t> pick_center(0, g.centers.size() - 1);
        std::size_t serial = 0;

        auto emit = [&](std::int64_t bin_start, bool predicted, bool actual) {
            Row row;
            auto& d = row.det;
            const std::int64_t t = bin_start + static_cast<std::int64_t>(detail::uniform(rng, 0.0, static_cast<double>(width)));
            d.ts = Timestamp{std::min(t, bin_start + width - 1), s.clock.offset_at(t)};
            d.label = g.label;
            d.image_id = detail::numbered(g.name, serial++);
            const AttrModel* model = &s.background_attrs;
            if (actual) {
                const LocalProjection proj{g.centers[pick_center(rng)]};
                const double dx = gauss(rng) * g.spatial_std_m;
                const double dy = gauss(rng) * g.spatial_std_m;
                d.point = proj.inverse({dx, dy});
                model = &g.attrs;
            } else {
                d.point = {detail::uniform(rng, s.region.min_lat, s.region.max_lat),
                           detail::uniform(rng, s.region.min_lon, s.region.max_lon)};
            }
            d.point.lat = std::clamp(d.point.lat, -90.0, 90.0);
            d.point.lon = std::clamp(d.point.lon, -180.0, 180.0);
            d.conf = predicted ? pos_conf(rng) : neg_conf(rng);
            for (const auto& [k, mean] : model->mean) {
                d.attrs[k] = mean + (model->noise > 0 ? gauss(rng) * model->noise : 0.0);
            }
            if (predicted && !actual) {
                row.note = "decoy";
            }
            row.truth = GroundTruth{d.image_id, d.label, actual ? g.name : std::string{}, predicted, actual};
            rows.push_back(std::move(row));
        };

        boost::random::poisson_distribution<int, double> pos_count(std::max(g.rate_per_bin, 1e-300));
        boost::random::poisson_distribution<int, double> neg_count(std::max(g.background_rate_per_bin, 1e-300));
        for (std::size_t k = 0; k < n_bins; ++k) {
            const std::int64_t bin_start = s.epoch.start.micros + static_cast<std::int64_t>(k) * width;
            const bool in_window = g.window.contains(Timestamp{bin_start, s.clock.offset_at(bin_start)});
            const int n_pos = in_window && g.rate_per_bin > 0 ? pos_count(rng) : 0;
            for (int i = 0; i < n_pos; ++i) {
                const bool real = boost::random::bernoulli_distribution<double>(s.noise.tpr)(rng);
                emit(bin_start, true, real);
            }
            const int n_neg = g.background_rate_per_bin > 0 ? neg_count(rng) : 0;
            for (int i = 0; i < n_neg; ++i) {
                const bool missed = boost::random::bernoulli_distribution<double>(s.noise.fnr)(rng);
                emit(bin_start, false, missed);
            }
        }
    }

    std::sort(rows.begin(), rows.end(), [](const Row& a, const Row& b) {
        return std::tie(a.det.ts.micros, a.det.image_id) < std::tie(b.det.ts.micros, b.det.image_id);
    });
    out.detections.reserve(rows.size());
    out.truth.reserve(rows.size());
    out.annotations.reserve(rows.size());
    for (auto& r : rows) {
        out.annotations.push_back({r.det.image_id, r.truth.predicted, r.truth.actual, r.note});
        out.truth.push_back(std::move(r.truth));
        out.detections.push_back(std::move(r.det));
    }

    for (const auto& e : s.events) {
        const auto git = std::find_if(s.groups.begin(), s.groups.end(), [&](const GroupSpec& g) { return g.name == e.group; });
        if (git == s.groups.end()) {
            throw std::invalid_argument("event spec references unknown group " + e.group);
        }
        auto rng = detail::stream(s.seed, "events:" + e.group + ":" + e.category);
        const auto bins = window_bins(s, git->window);
        if (bins.empty()) {
            throw std::invalid_argument("group " + e.group + " has no active bins for events");
        }
        boost::random::uniform_int_distribution<std::size_t> pick_center(0, git->centers.size() - 1);
        boost::random::uniform_int_distribution<std::size_t> pick_bin(0, bins.size() - 1);
        for (std::size_t i = 0; i < e.count; ++i) {
            EventRecord ev;
            ev.event_id = detail::numbered("evt-" + e.group, i);
            ev.category = e.category;
            const LocalProjection proj{git->centers[pick_center(rng)]};
            const double r = e.jitter_m * std::sqrt(detail::uniform(rng, 0.0, 1.0));
            const double theta = detail::uniform(rng, 0.0, 2.0 * std::numbers::pi);
            ev.point = proj.inverse({r * std::cos(theta), r * std::sin(theta)});
            const std::int64_t bin_start = s.epoch.start.micros + static_cast<std::int64_t>(bins[pick_bin(rng)]) * width;
            const std::int64_t t = bin_start + static_cast<std::int64_t>(detail::uniform(rng, 0.0, static_cast<double>(width)));
            ev.ts = Timestamp{std::min(t, bin_start + width - 1), s.clock.offset_at(t)};
            out.events.push_back(std::move(ev));
        }
    }
    std::sort(out.events.begin(), out.events.end(), [](const EventRecord& a, const EventRecord& b) {
        return std::tie(a.ts.micros, a.event_id) < std::tie(b.ts.micros, b.event_id);
    });
    return out;
}

// ---------------------------------------------------------------- documents

namespace detail {

inline GeoPoint point_from_json(const nlohmann::json& j)
{
    if (j.is_array() && j.size() == 2) {
        return {j[0].get<double>(), j[1].get<double>()};
    }
    return {j.at("lat").get<double>(), j.at("lon").get<double>()};
}

inline AttrModel attrs_from_json(const nlohmann::json& j)
{
    AttrModel m;
    if (j.contains("mean")) {
        for (const auto& [k, v] : j.at("mean").items()) {
            m.mean[k] = v.get<double>();
        }
    }
    m.noise = j.value("noise", 0.0);
    return m;
}

inline Timestamp timestamp_from_json(const nlohmann::json& j, const char* what)
{
    const auto t = parse_iso8601(j.get<std::string>());
    if (!t) {
        throw DataError(std::string("scenario: unparsable timestamp in ") + what);
    }
    return *t;
}

} // namespace detail

/// Scenario from its structured document form.
inline Scenario scenario_from_json(const nlohmann::json& j)
{
    try {
        Scenario s;
        s.seed = j.at("seed").get<std::uint64_t>();
        const auto& ep = j.at("epoch");
        s.epoch.start = detail::timestamp_from_json(ep.at("start"), "epoch.start");
        if (ep.contains("end")) {
            s.epoch.end = detail::timestamp_from_json(ep.at("end"), "epoch.end");
        } else {
            s.epoch.end = s.epoch.start;
            s.epoch.end.micros += ep.at("days").get<std::int64_t>() * kMicrosPerDay;
        }
        s.bin_minutes = j.value("bin_minutes", 15);
        const auto& r = j.at("region");
        s.region = {r.at("min_lat").get<double>(), r.at("min_lon").get<double>(), r.at("max_lat").get<double>(),
                    r.at("max_lon").get<double>()};
        s.clock.utc_offset_minutes = s.epoch.start.utc_offset_minutes;
        if (j.contains("clock")) {
            const auto& c = j.at("clock");
            s.clock.utc_offset_minutes = c.value("utc_offset_minutes", s.clock.utc_offset_minutes);
            if (c.contains("transition")) {
                const auto& t = c.at("transition");
                s.clock.transition_at = detail::timestamp_from_json(t.at("at"), "clock.transition.at").micros;
                s.clock.offset_after_minutes = t.at("utc_offset_minutes").get<std::int16_t>();
            }
        }
        if (j.contains("classifier")) {
            s.noise.tpr = j.at("classifier").value("tpr", 1.0);
            s.noise.fnr = j.at("classifier").value("fnr", 0.0);
        }
        if (j.contains("confidence")) {
            const auto& c = j.at("confidence");
            if (c.contains("positive")) {
                s.positive_beta_a = c.at("positive").at(0).get<double>();
                s.positive_beta_b = c.at("positive").at(1).get<double>();
            }
            if (c.contains("negative")) {
                s.negative_beta_a = c.at("negative").at(0).get<double>();
                s.negative_beta_b = c.at("negative").at(1).get<double>();
            }
        }
        if (j.contains("background_attrs")) {
            s.background_attrs = detail::attrs_from_json(j.at("background_attrs"));
        }
        for (const auto& gj : j.value("groups", nlohmann::json::array())) {
            GroupSpec g;
            g.name = gj.at("name").get<std::string>();
            g.label = gj.value("label", g.name);
            if (gj.contains("kind")) {
                const auto k = parse_group_kind(gj.at("kind").get<std::string>());
                if (!k) {
                    throw DataError("scenario: unknown group kind for " + g.name);
                }
                g.kind = *k;
            }
            for (const auto& c : gj.at("centers")) {
                g.centers.push_back(detail::point_from_json(c));
            }
            g.spatial_std_m = gj.value("spatial_std_m", g.spatial_std_m);
            if (gj.contains("window")) {
                const auto w = parse_daily_window(gj.at("window").get<std::string>());
                if (!w) {
                    throw DataError("scenario: bad window for group " + g.name);
                }
                g.window = *w;
            }
            g.rate_per_bin = gj.value("rate_per_bin", g.rate_per_bin);
            g.background_rate_per_bin = gj.value("background_rate_per_bin", 0.0);
            if (gj.contains("attrs")) {
                g.attrs = detail::attrs_from_json(gj.at("attrs"));
            }
            s.groups.push_back(std::move(g));
        }
        for (const auto& ej : j.value("events", nlohmann::json::array())) {
            EventSpec e;
            e.group = ej.at("group").get<std::string>();
            e.count = ej.at("count").get<std::size_t>();
            e.jitter_m = ej.value("jitter_m", 0.0);
            e.category = ej.value("category", e.category);
            s.events.push_back(std::move(e));
        }
        detail::validate(s);
        return s;
    } catch (const nlohmann::json::exception& e) {
        throw DataError(std::string("scenario document: ") + e.what());
    } catch (const std::invalid_argument& e) {
        throw DataError(std::string("scenario document: ") + e.what());
    }
}

/// One day of dense imagery across the 2023-11-05 New York fall-back
/// (EDT -04:00 to EST -05:00 at 06:00Z): every 15-minute slot receives
/// records, so capture-local binning leaves exactly the four repeated-hour
/// slots empty.
inline Scenario dst_fallback_scenario(std::uint64_t seed = 2023)
{
    Scenario s;
    s.seed = seed;
    s.epoch.start = *parse_iso8601("2023-11-05T00:00:00-04:00");
    s.epoch.end = Timestamp{s.epoch.start.micros + kMicrosPerDay, -300};
    s.region = {40.70, -74.02, 40.80, -73.90};
    s.clock.utc_offset_minutes = -240;
    s.clock.transition_at = parse_iso8601("2023-11-05T06:00:00Z")->micros;
    s.clock.offset_after_minutes = -300;
    GroupSpec g;
    g.name = "fleet";
    g.label = "street_scene";
    g.centers = {{40.75, -73.96}};
    g.spatial_std_m = 2000;
    g.rate_per_bin = 40;
    s.groups.push_back(g);
    return s;
}

inline void write_truth_csv(std::ostream& out, std::span<const GroundTruth> truth)
{
    out << "image_id,label,group,predicted,actual\n";
    for (const auto& t : truth) {
        out << csv_escape(t.image_id) << ',' << csv_escape(t.label) << ',' << csv_escape(t.group) << ','
            << (t.predicted ? "true" : "false") << ',' << (t.actual ? "true" : "false") << '\n';
    }
}

} // namespace dsi::synth
