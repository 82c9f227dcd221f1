// SPDX-License-Identifier: Apache-2.0
#include "dsi/hotspot.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <map>
#include <random>

using namespace dsi;

namespace {

DetectionRecord at(GeoPoint p, const char* iso = "2023-08-11T12:00:00-04:00")
{
    return DetectionRecord{"x", p, *parse_iso8601(iso), "food_truck", 0.9, {}};
}

TimeOfDay tod(const char* s)
{
    return *parse_time_of_day(s);
}

TEST(Window, LunchRush)
{
    const std::vector<DetectionRecord> d{at({0, 0}, "2023-08-11T12:00:00-04:00"), at({0, 0}, "2023-08-11T14:00:00-04:00"),
                                         at({0, 0}, "2023-08-11T10:00:00-04:00"), at({0, 0}, "2023-08-11T13:59:59.999999-04:00"),
                                         at({0, 0}, "2023-08-11T16:00:00Z")};
    const auto kept = filter_daily_window(d, tod("10:00"), tod("14:00"));
    ASSERT_EQ(kept.size(), 3u);
    EXPECT_EQ(kept[0].ts, d[0].ts);
    EXPECT_EQ(kept[1].ts, d[2].ts);
    EXPECT_EQ(kept[2].ts, d[3].ts);
    EXPECT_THROW(filter_daily_window(d, tod("14:00"), tod("10:00")), std::invalid_argument);
    EXPECT_THROW(filter_daily_window(d, tod("10:00"), tod("10:00")), std::invalid_argument);
}

TEST(Window, UsesCaptureLocalClock)
{
    // 16:00Z is 12:00 at -04:00 and 17:00 at +01:00.
    const std::vector<DetectionRecord> d{at({0, 0}, "2023-08-11T12:00:00-04:00"), at({0, 0}, "2023-08-11T17:00:00+01:00")};
    EXPECT_EQ(d[0].ts.micros, d[1].ts.micros);
    EXPECT_EQ(filter_daily_window(d, tod("10:00"), tod("14:00")).size(), 1u);
}

TEST(Window, UniformDayKeepsFourTwentyFourths)
{
    std::vector<DetectionRecord> d;
    const auto start = *parse_iso8601("2023-08-11T00:00:00-04:00");
    for (int i = 0; i < 3 * 1440; ++i) {
        auto r = at({0, 0});
        r.ts = {start.micros + std::int64_t{i} * 20 * kMicrosPerSecond, start.utc_offset_minutes};
        d.push_back(r);
    }
    EXPECT_EQ(filter_daily_window(d, tod("10:00"), tod("14:00")).size(), d.size() * 4 / 24);
    EXPECT_EQ(filter_daily_window(d, tod("00:00"), tod("24:00")).size(), d.size());
}

TEST(Window, Parse)
{
    const auto w = parse_daily_window("10:00-14:00");
    ASSERT_TRUE(w);
    EXPECT_EQ(w->start.minutes, 600);
    EXPECT_EQ(w->end.minutes, 840);
    EXPECT_FALSE(parse_daily_window("14:00-10:00"));
    EXPECT_FALSE(parse_daily_window("10:00-25:00"));
    EXPECT_FALSE(parse_daily_window("10:00 14:00"));
}

TEST(Grid, SingleAndConstructedCells)
{
    const GeoPoint origin{40.70, -74.02};
    auto h = grid_density(std::vector<DetectionRecord>{at({40.701, -74.019})}, origin, 250);
    EXPECT_EQ(h.total(), 1u);
    EXPECT_EQ(h.cells.size(), 1u);
    EXPECT_EQ(h.at(0, 0), 1u);

    GridSpec g{origin, 250, 4, 4};
    const std::vector<DetectionRecord> four{at(g.cell_center(0, 0)), at(g.cell_center(3, 0)), at(g.cell_center(1, 2)),
                                            at(g.cell_center(3, 3))};
    h = grid_density(four, g);
    EXPECT_EQ(h.overflow, 0u);
    EXPECT_EQ(h.at(0, 0), 1u);
    EXPECT_EQ(h.at(3, 0), 1u);
    EXPECT_EQ(h.at(1, 2), 1u);
    EXPECT_EQ(h.at(3, 3), 1u);
    EXPECT_EQ(std::count(h.cells.begin(), h.cells.end(), 1u), 4);

    EXPECT_THROW(grid_density(four, origin, 0.0), std::invalid_argument);
    EXPECT_THROW(grid_density(four, GridSpec{origin, -1, 1, 1}), std::invalid_argument);
}

TEST(Grid, MatchesBruteForceBucketing)
{
    std::mt19937_64 rng(51);
    std::uniform_real_distribution<double> lat(40.65, 40.85), lon(-74.05, -73.90);
    std::vector<DetectionRecord> d;
    for (int i = 0; i < 10'000; ++i) {
        d.push_back(at({lat(rng), lon(rng)}));
    }
    const GridSpec g{{40.70, -74.02}, 250, 60, 70};
    const auto h = grid_density(d, g);

    // Independent bucketing: planar offsets by the documented equirectangular formula.
    const double r = 6'371'008.8, k = std::numbers::pi / 180.0;
    std::map<std::pair<long, long>, std::uint64_t> want;
    std::uint64_t outside = 0;
    for (const auto& x : d) {
        const long cx = std::lround(std::floor(r * (x.point.lon + 74.02) * k * std::cos(40.70 * k) / 250));
        const long cy = std::lround(std::floor(r * (x.point.lat - 40.70) * k / 250));
        if (cx < 0 || cy < 0 || cx >= 60 || cy >= 70) {
            ++outside;
        } else {
            ++want[{cx, cy}];
        }
    }
    EXPECT_EQ(h.overflow, outside);
    EXPECT_EQ(h.total(), d.size());
    for (long y = 0; y < 70; ++y) {
        for (long x = 0; x < 60; ++x) {
            const auto it = want.find({x, y});
            ASSERT_EQ(h.at(x, y), it == want.end() ? 0u : it->second) << x << "," << y;
        }
    }
}

TEST(Grid, CoveringGridHasNoOverflow)
{
    std::mt19937_64 rng(52);
    std::uniform_real_distribution<double> lat(40.65, 40.85), lon(-74.05, -73.90);
    std::vector<DetectionRecord> d;
    for (int i = 0; i < 5000; ++i) {
        d.push_back(at({lat(rng), lon(rng)}));
    }
    const auto h = grid_density(d, grid_covering(d, 250));
    EXPECT_EQ(h.overflow, 0u);
    EXPECT_EQ(h.total(), d.size());
    EXPECT_EQ(grid_covering(std::vector<DetectionRecord>{}, 250).nx, 0);
}

// Records placed by planar offset from the origin, away from cell edges.
std::vector<DetectionRecord> planted(const GeoPoint& origin, std::span<const PlanarPoint> offsets)
{
    const LocalProjection proj(origin);
    std::vector<DetectionRecord> out;
    for (const auto& o : offsets) {
        out.push_back(at(proj.inverse(o)));
    }
    return out;
}

TEST(Grid, TranslationEquivariant)
{
    std::mt19937_64 rng(53);
    std::uniform_int_distribution<int> cell(0, 39);
    std::uniform_real_distribution<double> inner(1.0, 249.0);
    std::vector<PlanarPoint> offsets;
    for (int i = 0; i < 5000; ++i) {
        offsets.push_back({cell(rng) * 250 + inner(rng), cell(rng) * 250 + inner(rng)});
    }
    const GeoPoint a{40.70, -74.02}, b{51.5, -0.1}, c{-33.9, 151.2};
    const auto ha = grid_density(planted(a, offsets), GridSpec{a, 250, 40, 40});
    for (const auto& o : {b, c}) {
        const auto h = grid_density(planted(o, offsets), GridSpec{o, 250, 40, 40});
        EXPECT_EQ(h.cells, ha.cells);
        EXPECT_EQ(h.overflow, 0u);
    }

    // Longitude shift of dyadic coordinates is exact in floating point.
    std::uniform_int_distribution<int> q(0, 1 << 16);
    std::vector<DetectionRecord> d, shifted;
    for (int i = 0; i < 5000; ++i) {
        const GeoPoint p{40.70 + q(rng) * 0x1p-20, -74.0 + q(rng) * 0x1p-20};
        d.push_back(at(p));
        shifted.push_back(at({p.lat, p.lon + 3.0}));
    }
    const auto h1 = grid_density(d, GridSpec{{40.70, -74.0}, 250, 30, 30});
    const auto h2 = grid_density(shifted, GridSpec{{40.70, -71.0}, 250, 30, 30});
    EXPECT_EQ(h1.cells, h2.cells);
    EXPECT_EQ(h1.overflow, h2.overflow);
}

Heatmap from_counts(std::int64_t nx, std::int64_t ny, std::vector<std::uint64_t> counts)
{
    Heatmap h;
    h.grid = GridSpec{{0, 0}, 250, nx, ny};
    h.cells = std::move(counts);
    return h;
}

TEST(Zones, TieRuleAndLimits)
{
    // A at index 0, B at 1, C at 2: counts 5, 3, 5.
    const auto h = from_counts(3, 1, {5, 3, 5});
    const auto z = top_zones(h, 3);
    ASSERT_EQ(z.size(), 3u);
    EXPECT_EQ(z[0], (Zone{0, 0, 5}));
    EXPECT_EQ(z[1], (Zone{2, 0, 5}));
    EXPECT_EQ(z[2], (Zone{1, 0, 3}));
    EXPECT_EQ(top_zones(h, 10).size(), 3u);
    EXPECT_TRUE(top_zones(from_counts(2, 2, {0, 0, 0, 0}), 5).empty());
    EXPECT_THROW(top_zones(h, 0), std::invalid_argument);

    const auto grid = from_counts(2, 2, {0, 7, 7, 0});
    EXPECT_EQ(top_zones(grid, 2)[0], (Zone{1, 0, 7}));
    EXPECT_EQ(top_zones(grid, 2)[1], (Zone{0, 1, 7}));
}

TEST(Zones, PrefixProperty)
{
    std::mt19937_64 rng(54);
    std::uniform_int_distribution<std::uint64_t> c(0, 6);
    for (int trial = 0; trial < 50; ++trial) {
        std::vector<std::uint64_t> counts(12 * 9);
        for (auto& x : counts) {
            x = c(rng);
        }
        const auto h = from_counts(12, 9, counts);
        auto prev = top_zones(h, 1);
        for (std::size_t k = 2; k <= 110; ++k) {
            const auto next = top_zones(h, k);
            ASSERT_GE(next.size(), prev.size());
            ASSERT_TRUE(std::equal(prev.begin(), prev.end(), next.begin()));
            prev = next;
        }
    }
}

TEST(Blur, MeanOfNeighbourhood)
{
    const auto h = from_counts(3, 3, {0, 0, 0, 0, 9, 0, 0, 0, 0});
    const auto b = box_blur(h, 1);
    EXPECT_DOUBLE_EQ(b[4], 1.0);
    EXPECT_DOUBLE_EQ(b[0], 9.0 / 4.0);
    EXPECT_DOUBLE_EQ(b[1], 9.0 / 6.0);
    EXPECT_EQ(box_blur(h, 0)[4], 9.0);
    EXPECT_THROW(box_blur(h, -1), std::invalid_argument);
}

} // namespace
