// SPDX-License-Identifier: Apache-2.0
#include "dsi/classifier_eval.hpp"
#include "dsi/coverage.hpp"
#include "dsi/hotspot.hpp"
#include "dsi/io.hpp"
#include "dsi/synth.hpp"

#include <gtest/gtest.h>

#include <fstream>
#include <sstream>

using namespace dsi;
using namespace dsi::synth;

namespace {

Scenario base(std::uint64_t seed = 1)
{
    Scenario s;
    s.seed = seed;
    s.epoch = {*parse_iso8601("2023-08-07T00:00:00-04:00"), *parse_iso8601("2023-08-09T00:00:00-04:00")};
    s.region = {40.70, -74.02, 40.80, -73.93};
    s.clock.utc_offset_minutes = -240;
    GroupSpec g;
    g.name = "vendors";
    g.label = "food_truck";
    g.centers = {{40.75, -73.98}, {40.72, -74.00}};
    g.window = *parse_daily_window("10:00-14:00");
    g.rate_per_bin = 2;
    g.background_rate_per_bin = 3;
    g.attrs = {{{"boxy", 0.8}}, 0.05};
    s.background_attrs = {{{"boxy", 0.2}}, 0.05};
    s.groups.push_back(g);
    s.events.push_back({"vendors", 25, 50.0, "vending_violation"});
    return s;
}

std::string serialize(const Output& o)
{
    std::ostringstream s;
    write_detections(s, o.detections);
    for (const auto& a : o.annotations) {
        s << to_json_line(a) << '\n';
    }
    write_truth_csv(s, o.truth);
    write_events_csv(s, o.events);
    return s.str();
}

TEST(Generate, ByteIdentical)
{
    const auto a = serialize(generate(base()));
    EXPECT_EQ(serialize(generate(base())), a);
    EXPECT_NE(serialize(generate(base(2))), a);
    EXPECT_GT(a.size(), 1000u);
}

TEST(Generate, OutputsAreCanonicalAndValid)
{
    const auto o = generate(base());
    ASSERT_EQ(o.detections.size(), o.truth.size());
    ASSERT_EQ(o.detections.size(), o.annotations.size());
    for (std::size_t i = 0; i < o.detections.size(); ++i) {
        const auto& d = o.detections[i];
        EXPECT_EQ(d.image_id, o.truth[i].image_id);
        EXPECT_EQ(d.image_id, o.annotations[i].image_id);
        EXPECT_TRUE(valid(d.point));
        EXPECT_GE(d.conf, 0.0);
        EXPECT_LE(d.conf, 1.0);
        EXPECT_GE(d.ts.micros, base().epoch.start.micros);
        EXPECT_LT(d.ts.micros, base().epoch.end.micros);
        if (i > 0) {
            const auto& p = o.detections[i - 1];
            EXPECT_TRUE(std::tie(p.ts.micros, p.image_id) < std::tie(d.ts.micros, d.image_id));
        }
        EXPECT_EQ(o.annotations[i].decoy_note.has_value(), o.truth[i].predicted && !o.truth[i].actual);
    }
    // Round trip through the strict parser.
    std::ostringstream s;
    write_detections(s, o.detections);
    EXPECT_EQ(parse_detections(s.str()).records.size(), o.detections.size());
    std::ostringstream e;
    write_events_csv(e, o.events);
    EXPECT_EQ(parse_events(e.str()).records.size(), 25u);
}

TEST(Generate, NoiselessLabelsEqualTruth)
{
    auto s = base();
    s.noise = {1.0, 0.0};
    const auto o = generate(s);
    std::size_t positives = 0;
    for (const auto& t : o.truth) {
        EXPECT_EQ(t.predicted, t.actual);
        positives += t.predicted;
        EXPECT_EQ(t.actual, !t.group.empty());
    }
    EXPECT_GT(positives, 0u);
}

TEST(Generate, SamplePrecisionRecoversTpr)
{
    auto s = base(9);
    s.epoch.end = *parse_iso8601("2023-08-08T00:00:00-04:00");
    s.groups[0].window = *parse_daily_window("00:00-24:00");
    s.groups[0].rate_per_bin = 1050;
    s.groups[0].background_rate_per_bin = 0;
    s.noise = {0.70, 0.015};
    s.events.clear();
    const auto o = generate(s);
    const auto cc = confusion_counts(o.annotations);
    ASSERT_GT(cc.tp + cc.fp, 95'000u);
    EXPECT_NEAR(positive_sample_precision(cc.tp, cc.fp), 0.70, 0.02);
}

TEST(Generate, CountsWithinThreeSigma)
{
    for (std::uint64_t seed = 1; seed <= 10; ++seed) {
        auto s = base(seed);
        s.noise = {0.7, 0.015};
        const auto o = generate(s);
        // 2 days x 16 in-window bins; Poisson counts thinned by tpr.
        const double bins = 2 * 16;
        const double mean_real = bins * s.groups[0].rate_per_bin * s.noise.tpr;
        const double mean_pred = bins * s.groups[0].rate_per_bin;
        const double mean_bg = 2 * 96 * s.groups[0].background_rate_per_bin;
        std::size_t real = 0, predicted = 0, background = 0;
        for (const auto& t : o.truth) {
            real += t.predicted && t.actual;
            predicted += t.predicted;
            background += !t.predicted;
        }
        EXPECT_NEAR(static_cast<double>(real), mean_real, 3 * std::sqrt(mean_real)) << seed;
        EXPECT_NEAR(static_cast<double>(predicted), mean_pred, 3 * std::sqrt(mean_pred)) << seed;
        EXPECT_NEAR(static_cast<double>(background), mean_bg, 3 * std::sqrt(mean_bg)) << seed;
    }
}

TEST(Generate, GroupsUseIndependentStreams)
{
    auto one = base();
    auto two = base();
    GroupSpec other = two.groups[0];
    other.name = "riders";
    other.label = "bike_courier";
    two.groups.insert(two.groups.begin(), other);
    const auto a = generate(one), b = generate(two);
    std::vector<DetectionRecord> vendors;
    for (const auto& d : b.detections) {
        if (d.image_id.starts_with("vendors-")) {
            vendors.push_back(d);
        }
    }
    EXPECT_EQ(vendors, a.detections);
    EXPECT_EQ(a.events, b.events);
}

TEST(Generate, PlantedCentersAreTopCells)
{
    const GridSpec grid{{40.70, -74.02}, 250, 40, 50};
    Scenario s = base(3);
    s.noise = {1.0, 0.0};
    s.groups[0].background_rate_per_bin = 0;
    s.groups[0].spatial_std_m = 30;
    s.groups[0].centers = {grid.cell_center(5, 7), grid.cell_center(20, 30), grid.cell_center(33, 12)};
    const auto o = generate(s);
    const auto zones = top_zones(grid_density(o.detections, grid), 3);
    ASSERT_EQ(zones.size(), 3u);
    std::set<std::pair<std::int64_t, std::int64_t>> got;
    for (const auto& z : zones) {
        got.insert({z.x, z.y});
    }
    EXPECT_EQ(got, (std::set<std::pair<std::int64_t, std::int64_t>>{{5, 7}, {20, 30}, {33, 12}}));
}

TEST(Generate, EventsNearCentersInsideWindow)
{
    const auto s = base();
    const auto o = generate(s);
    ASSERT_EQ(o.events.size(), 25u);
    for (const auto& e : o.events) {
        double best = 1e18;
        for (const auto& c : s.groups[0].centers) {
            best = std::min(best, haversine_m(c, e.point));
        }
        EXPECT_LE(best, 50.0 + 1e-6);
        EXPECT_TRUE(s.groups[0].window.contains(e.ts));
    }
}

TEST(Generate, Validation)
{
    auto s = base();
    s.region = {40.8, -74.0, 40.7, -73.9};
    EXPECT_THROW(generate(s), std::invalid_argument);
    s = base();
    s.noise.tpr = 1.2;
    EXPECT_THROW(generate(s), std::invalid_argument);
    s = base();
    s.events[0].group = "nobody";
    EXPECT_THROW(generate(s), std::invalid_argument);
    s = base();
    s.groups[0].centers.clear();
    EXPECT_THROW(generate(s), std::invalid_argument);
}

TEST(Scenario, DocumentErrorsAreDataErrors)
{
    EXPECT_THROW(scenario_from_json(nlohmann::json::parse(R"({"seed":1})")), DataError);
    EXPECT_THROW(scenario_from_json(nlohmann::json::parse(R"([])")), DataError);
}

TEST(Scenario, DstFlagGivesFourEmptySlots)
{
    const auto s = dst_fallback_scenario();
    const auto o = generate(s);
    BinningOptions opt;
    opt.clock = ClockMode::CaptureLocal;
    opt.epoch = s.epoch;
    const auto bins = bin_by_interval(o.detections, opt);
    const auto stats = interval_stats(bins);
    EXPECT_EQ(stats.n_empty, 4u);
    EXPECT_EQ(stats.total, o.detections.size());
    for (std::size_t k = 0; k < bins.size(); ++k) {
        if (bins.counts[k] == 0) {
            const auto utc = format_iso8601(Timestamp{bins.slot_start(k).micros, 0});
            EXPECT_TRUE(utc.starts_with("2023-11-05T06:")) << utc;
        }
    }

    std::ifstream in(std::string(DSI_DATA_DIR) + "/scenarios/dst_fallback.json");
    ASSERT_TRUE(in);
    const auto from_file = scenario_from_json(nlohmann::json::parse(in));
    EXPECT_EQ(serialize(generate(from_file)), serialize(o));
}

} // namespace
