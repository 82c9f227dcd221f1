// SPDX-License-Identifier: Apache-2.0
#include "dsi/coverage.hpp"
#include "support/oracles.hpp"

#include <gtest/gtest.h>

#include <random>

using namespace dsi;

namespace {

Timestamp at(const char* iso)
{
    return *parse_iso8601(iso);
}

BinningOptions options(const char* start, const char* end, ClockMode clock = ClockMode::Utc)
{
    BinningOptions o;
    o.clock = clock;
    o.epoch = {at(start), at(end)};
    return o;
}

TEST(Binning, SixtyFourDaysGive6144Bins)
{
    const auto o = options("2023-07-01T00:00:00-04:00", "2023-09-03T00:00:00-04:00");
    const std::vector<Timestamp> stamps{at("2023-07-01T12:00:00-04:00"), at("2023-09-02T23:59:59-04:00")};
    const auto bins = bin_by_interval(stamps, o);
    EXPECT_EQ(bins.size(), 6144u);
    EXPECT_EQ(bin_count(o.epoch, 15), 6144u);
    EXPECT_EQ(bins.counts.back(), 1u);
}

TEST(Binning, EmptyDay)
{
    const auto bins = bin_by_interval(std::span<const Timestamp>{}, options("2023-08-11T00:00:00Z", "2023-08-12T00:00:00Z"));
    ASSERT_EQ(bins.size(), 96u);
    for (auto c : bins.counts) {
        EXPECT_EQ(c, 0u);
    }
    const auto s = interval_stats(bins);
    EXPECT_EQ(s.n_empty, 96u);
    EXPECT_EQ(s.mean(), 0.0);
    EXPECT_EQ(s.mean_fixed(), "0.0000");
}

TEST(Binning, ThreeHundredUniformRecords)
{
    const auto o = options("2023-08-11T00:00:00Z", "2023-08-12T00:00:00Z");
    std::vector<Timestamp> stamps;
    for (int i = 0; i < 300; ++i) {
        stamps.push_back({o.epoch.start.micros + std::int64_t{i} * 288 * kMicrosPerSecond, 0});
    }
    const auto s = interval_stats(bin_by_interval(stamps, o));
    EXPECT_EQ(s.total, 300u);
    EXPECT_DOUBLE_EQ(s.mean(), 3.125);
    EXPECT_EQ(s.mean_fixed(), "3.1250");
}

TEST(Binning, WidthMustDivideSixty)
{
    auto o = options("2023-08-11T00:00:00Z", "2023-08-12T00:00:00Z");
    for (int w : {0, 7, 25, 90, -15}) {
        o.width_minutes = w;
        EXPECT_THROW(bin_by_interval(std::span<const Timestamp>{}, o), std::invalid_argument) << w;
    }
    o.width_minutes = 20;
    EXPECT_EQ(bin_by_interval(std::span<const Timestamp>{}, o).size(), 72u);
}

TEST(Binning, OutOfEpochStrictAndLenient)
{
    auto o = options("2023-08-11T00:00:00Z", "2023-08-12T00:00:00Z");
    const std::vector<Timestamp> stamps{at("2023-08-10T23:59:59Z"), at("2023-08-11T00:00:00Z"), at("2023-08-12T00:00:00Z")};
    EXPECT_THROW(bin_by_interval(stamps, o), DataError);
    o.strict = false;
    const auto bins = bin_by_interval(stamps, o);
    EXPECT_EQ(bins.rejected, 2u);
    EXPECT_EQ(bins.counts[0], 1u);
}

TEST(Stats, ZeroZeroFourFour)
{
    TemporalBins b;
    b.counts = {0, 0, 4, 4};
    const auto s = interval_stats(b);
    EXPECT_EQ(s.n_empty, 2u);
    EXPECT_EQ(s.n_bins, 4u);
    EXPECT_EQ(s.max_count, 4u);
    EXPECT_DOUBLE_EQ(s.mean(), 2.0);
    EXPECT_EQ(s.mean_fixed(), "2.0000");
    EXPECT_THROW(interval_stats(TemporalBins{}), std::invalid_argument);
}

TEST(Stats, FormatRatioRoundsHalfUp)
{
    EXPECT_EQ(format_ratio(1, 3, 4), "0.3333");
    EXPECT_EQ(format_ratio(2, 3, 4), "0.6667");
    EXPECT_EQ(format_ratio(1, 8, 2), "0.13");
    EXPECT_EQ(format_ratio(21'146'000, 6144, 1), "3441.7");
    EXPECT_EQ(format_ratio(7, 1, 0), "7");
}

// Fall-back day: 2023-11-05, -04:00 until 06:00Z, -05:00 after. One record
// every five minutes of real time, epoch of 24 hours from local midnight.
//
// Hand enumeration (slot k starts at 04:00Z + 15k min, 3 records each):
//   slots 0-7   04:00Z-05:59Z  wall 00:00-01:59 (-4)  -> their own slots
//   slots 8-11  06:00Z-06:59Z  wall 01:00-01:59 (-5)  -> labels already held by slots 4-7
//   slots 12-95 07:00Z-03:59Z  wall 02:00-22:59 (-5)  -> first slot with that label, i.e. themselves
// So slots 4-7 hold 6, slots 8-11 hold 0, every other slot holds 3.
std::vector<Timestamp> fall_back_stream()
{
    const std::int64_t t0 = at("2023-11-05T04:00:00Z").micros;
    const std::int64_t change = at("2023-11-05T06:00:00Z").micros;
    std::vector<Timestamp> out;
    for (std::int64_t t = t0; t < t0 + kMicrosPerDay; t += 5 * kMicrosPerMinute) {
        out.push_back({t, static_cast<std::int16_t>(t < change ? -240 : -300)});
    }
    return out;
}

TEST(Binning, FallBackLeavesFourEmptySlots)
{
    const auto stamps = fall_back_stream();
    const auto o = options("2023-11-05T00:00:00-04:00", "2023-11-05T23:00:00-05:00", ClockMode::CaptureLocal);
    const auto bins = bin_by_interval(stamps, o);
    ASSERT_EQ(bins.size(), 96u);
    std::vector<std::uint64_t> expected(96, 3);
    for (std::size_t k = 4; k < 8; ++k) {
        expected[k] = 6;
    }
    for (std::size_t k = 8; k < 12; ++k) {
        expected[k] = 0;
    }
    EXPECT_EQ(bins.counts, expected);
    EXPECT_EQ(bins.rejected, 0u);
    EXPECT_EQ(interval_stats(bins).n_empty, 4u);
    EXPECT_EQ(format_iso8601(bins.slot_start(8)), "2023-11-05T01:00:00-05:00");
    EXPECT_EQ(format_iso8601(bins.slot_start(7)), "2023-11-05T01:45:00-04:00");

    // The same stream on the UTC clock has no gap.
    auto utc = o;
    utc.clock = ClockMode::Utc;
    EXPECT_EQ(interval_stats(bin_by_interval(stamps, utc)).n_empty, 0u);
}

TEST(Binning, ConservationOnRandomInput)
{
    std::mt19937_64 rng(21);
    const auto o = options("2023-08-01T00:00:00Z", "2023-08-08T00:00:00Z");
    std::uniform_int_distribution<std::int64_t> t(o.epoch.start.micros, o.epoch.end.micros - 1);
    std::uniform_int_distribution<int> off(-600, 600);
    for (int trial = 0; trial < 20; ++trial) {
        std::vector<Timestamp> stamps(1000 + 100 * static_cast<std::size_t>(trial));
        for (auto& s : stamps) {
            s = {t(rng), static_cast<std::int16_t>(off(rng) / 15 * 15)};
        }
        const auto b = bin_by_interval(stamps, o);
        EXPECT_EQ(interval_stats(b).total + b.rejected, stamps.size());
        EXPECT_EQ(b.rejected, 0u);

        auto local = o;
        local.clock = ClockMode::CaptureLocal;
        local.strict = false;
        const auto l = bin_by_interval(stamps, local);
        EXPECT_EQ(interval_stats(l).total + l.rejected, stamps.size());
    }
}

TEST(Binning, TranslationShiftsBins)
{
    std::mt19937_64 rng(22);
    const auto o = options("2023-08-01T00:00:00Z", "2023-08-05T00:00:00Z");
    std::uniform_int_distribution<std::int64_t> t(o.epoch.start.micros, o.epoch.start.micros + 2 * kMicrosPerDay);
    std::vector<Timestamp> stamps(3000);
    for (auto& s : stamps) {
        s = {t(rng), -240};
    }
    for (ClockMode clock : {ClockMode::Utc, ClockMode::CaptureLocal}) {
        auto opt = o;
        opt.clock = clock;
        const auto base = bin_by_interval(stamps, opt);
        for (std::int64_t k : {1, 7, 96}) {
            auto shifted = stamps;
            for (auto& s : shifted) {
                s.micros += k * 15 * kMicrosPerMinute;
            }
            const auto b = bin_by_interval(shifted, opt);
            for (std::size_t i = 0; i + static_cast<std::size_t>(k) < base.size(); ++i) {
                ASSERT_EQ(b.counts[i + static_cast<std::size_t>(k)], base.counts[i]);
            }
        }
    }
}

// ---------------------------------------------------------------- hull

TEST(Hull, CollinearHasZeroArea)
{
    const std::vector<GeoPoint> pts{{40.0, -74.0}, {40.1, -73.9}, {40.2, -73.8}};
    const auto h = convex_hull_area(pts);
    EXPECT_EQ(h.area_sq_miles, 0.0);
    EXPECT_EQ(h.hull.size(), 2u);
    EXPECT_EQ(convex_hull_area(std::vector<GeoPoint>{{1, 1}}).area_sq_miles, 0.0);
    EXPECT_THROW(convex_hull_area(std::vector<GeoPoint>{}), std::invalid_argument);
}

std::vector<GeoPoint> mile_square(const LocalProjection& proj)
{
    const double h = kMetersPerMile / 2;
    return {proj.inverse({-h, -h}), proj.inverse({h, -h}), proj.inverse({h, h}), proj.inverse({-h, h})};
}

TEST(Hull, OneSquareMile)
{
    const LocalProjection proj({40.75, -73.98});
    const auto corners = mile_square(proj);
    EXPECT_NEAR(convex_hull_area(corners).area_sq_miles, 1.0, 1e-6);
    EXPECT_NEAR(convex_hull_area(corners, proj).area_sq_miles, 1.0, 1e-6);
}

TEST(Hull, RandomPointsInsideSquareAreBounded)
{
    const LocalProjection proj({40.75, -73.98});
    const auto corners = mile_square(proj);
    std::mt19937_64 rng(23);
    std::uniform_real_distribution<double> u(-kMetersPerMile / 2, kMetersPerMile / 2);
    std::vector<GeoPoint> pts;
    for (int i = 0; i < 1000; ++i) {
        pts.push_back(proj.inverse({u(rng), u(rng)}));
    }
    const double area = convex_hull_area(pts, proj).area_sq_miles;
    const std::vector<GeoPoint> four{pts[0], pts[1], pts[2], pts[3]};
    EXPECT_LE(area, 1.0 + 1e-9);
    EXPECT_GE(area, convex_hull_area(four, proj).area_sq_miles);
    EXPECT_GT(area, 0.95);
}

TEST(Hull, MatchesBruteForceAndIsIdempotent)
{
    std::mt19937_64 rng(24);
    std::uniform_real_distribution<double> lat(40.6, 40.9), lon(-74.1, -73.8);
    std::uniform_int_distribution<int> q(0, 40);
    for (int trial = 0; trial < 100; ++trial) {
        std::vector<GeoPoint> pts;
        const std::size_t n = 3 + static_cast<std::size_t>(trial);
        for (std::size_t i = 0; i < n; ++i) {
            // Quantize half the trials to force duplicates and collinear runs.
            if (trial % 2) {
                pts.push_back({40.6 + q(rng) * 0.005, -74.1 + q(rng) * 0.005});
            } else {
                pts.push_back({lat(rng), lon(rng)});
            }
        }
        const auto proj = LocalProjection::about_mean(pts);
        const auto h = convex_hull_area(pts, proj);

        std::vector<std::array<double, 2>> planar;
        for (const auto& p : pts) {
            const auto xy = proj.forward(p);
            const std::array<double, 2> a{xy.x, xy.y};
            if (std::find(planar.begin(), planar.end(), a) == planar.end()) {
                planar.push_back(a);
            }
        }
        const double oracle = oracle::brute_force_hull_area(planar) / (kMetersPerMile * kMetersPerMile);
        EXPECT_NEAR(h.area_sq_miles, oracle, 1e-9 * std::max(1.0, oracle)) << trial;

        const auto again = convex_hull_area(h.hull, proj);
        EXPECT_EQ(again.hull, h.hull);
        if (h.hull.size() >= 3) {
            const Polygon poly("hull", h.hull);
            for (const auto& p : pts) {
                // Vertices snap to the projection; allow a nanodegree of slack.
                const bool inside = poly.contains(p) || poly.contains({p.lat + 1e-9, p.lon}) ||
                                    poly.contains({p.lat - 1e-9, p.lon}) || poly.contains({p.lat, p.lon + 1e-9}) ||
                                    poly.contains({p.lat, p.lon - 1e-9});
                EXPECT_TRUE(inside) << trial;
            }
        }
    }
}

TEST(Hull, MeanIntervalArea)
{
    const LocalProjection proj({40.75, -73.98});
    const auto sq = mile_square(proj);
    const auto o = options("2023-08-11T00:00:00Z", "2023-08-11T01:00:00Z");
    std::vector<Timestamp> stamps;
    std::vector<GeoPoint> pts;
    for (int i = 0; i < 4; ++i) {
        stamps.push_back(at("2023-08-11T00:01:00Z"));
        pts.push_back(sq[static_cast<std::size_t>(i)]);
    }
    stamps.push_back(at("2023-08-11T00:31:00Z"));
    pts.push_back(sq[0]);
    const auto a = assign_bins(stamps, o);
    EXPECT_NEAR(mean_interval_hull_area(pts, a), 0.5, 1e-6);
}

// ---------------------------------------------------------------- polygons

TEST(PolygonCounts, Basics)
{
    const std::vector<Polygon> one{Polygon("t1", {{0, 0}, {0, 1}, {1, 1}, {1, 0}})};
    auto c = polygon_counts(std::vector<GeoPoint>{{0.5, 0.5}}, one);
    EXPECT_EQ(c.counts[0].second, 1u);
    EXPECT_EQ(c.unassigned, 0u);
    c = polygon_counts(std::vector<GeoPoint>{{2, 2}}, one);
    EXPECT_EQ(c.counts[0].second, 0u);
    EXPECT_EQ(c.unassigned, 1u);
}

TEST(PolygonCounts, OverlapGoesToFirstListed)
{
    const Polygon a("a", {{0, 0}, {0, 2}, {2, 2}, {2, 0}});
    const Polygon b("b", {{1, 1}, {1, 3}, {3, 3}, {3, 1}});
    const std::vector<GeoPoint> pt{{1.5, 1.5}};
    const auto ab = polygon_counts(pt, std::vector<Polygon>{a, b});
    EXPECT_EQ(ab.counts[0], (std::pair<std::string, std::uint64_t>{"a", 1}));
    EXPECT_EQ(ab.counts[1].second, 0u);
    const auto ba = polygon_counts(pt, std::vector<Polygon>{b, a});
    EXPECT_EQ(ba.counts[0], (std::pair<std::string, std::uint64_t>{"b", 1}));
    EXPECT_EQ(ba.counts[1].second, 0u);
}

TEST(PolygonCounts, Conservation)
{
    std::mt19937_64 rng(25);
    std::uniform_real_distribution<double> u(-1, 4);
    const std::vector<Polygon> polys{Polygon("a", {{0, 0}, {0, 2}, {2, 2}, {2, 0}}),
                                     Polygon("b", {{1, 1}, {1, 3}, {3, 3}, {3, 1}}),
                                     Polygon("c", {{2.5, 0}, {3.5, 0.5}, {2.5, 1}})};
    for (int trial = 0; trial < 20; ++trial) {
        std::vector<GeoPoint> pts(500);
        for (auto& p : pts) {
            p = {u(rng), u(rng)};
        }
        const auto c = polygon_counts(pts, polys);
        std::uint64_t sum = c.unassigned;
        for (const auto& [_, n] : c.counts) {
            sum += n;
        }
        EXPECT_EQ(sum, pts.size());
    }
}

} // namespace
