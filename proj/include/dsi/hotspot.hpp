// SPDX-License-Identifier: Apache-2.0
//
// Daily-window filtering and count grids for deployment-zone extraction.
#pragma once

#include "dsi/geometry.hpp"
#include "dsi/records.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <optional>
#include <span>
#include <stdexcept>
#include <vector>

namespace dsi {

inline constexpr double kDefaultCellSizeM = 250.0;

/// Capture-local daily window [start, end).
struct DailyWindow {
    TimeOfDay start;
    TimeOfDay end;

    bool contains(const Timestamp& ts) const noexcept
    {
        const std::int64_t tod = local_time_of_day_micros(ts);
        return tod >= std::int64_t{start.minutes} * kMicrosPerMinute && tod < std::int64_t{end.minutes} * kMicrosPerMinute;
    }
};

/// Parses `HH:MM-HH:MM`.
inline std::optional<DailyWindow> parse_daily_window(std::string_view s)
{
    if (s.size() != 11 || s[5] != '-') {
        return std::nullopt;
    }
    const auto a = parse_time_of_day(s.substr(0, 5));
    const auto b = parse_time_of_day(s.substr(6));
    if (!a || !b || !(*a < *b)) {
        return std::nullopt;
    }
    return DailyWindow{*a, *b};
}

/// Records whose capture-local time of day lies in [start, end).
inline std::vector<DetectionRecord> filter_daily_window(std::span<const DetectionRecord> records, TimeOfDay start,
                                                        TimeOfDay end)
{
    if (!(start < end)) {
        throw std::invalid_argument("daily window must satisfy start < end");
    }
    const DailyWindow w{start, end};
    std::vector<DetectionRecord> out;
    for (const auto& r : records) {
        if (w.contains(r.ts)) {
            out.push_back(r);
        }
    }
    return out;
}

/// Grid anchored at `origin` (south-west corner), projected equirectangularly
/// about the origin; cell (x, y) covers [x*s, (x+1)*s) east and [y*s, (y+1)*s) north.
struct GridSpec {
    GeoPoint origin;
    double cell_size_m = kDefaultCellSizeM;
    std::int64_t nx = 0;
    std::int64_t ny = 0;

    LocalProjection projection() const { return LocalProjection{origin}; }

    /// Unbounded cell coordinates of `p`.
    std::array<std::int64_t, 2> cell_of(const GeoPoint& p) const
    {
        const auto q = projection().forward(p);
        return {static_cast<std::int64_t>(std::floor(q.x / cell_size_m)),
                static_cast<std::int64_t>(std::floor(q.y / cell_size_m))};
    }

    bool in_bounds(std::int64_t x, std::int64_t y) const noexcept { return x >= 0 && y >= 0 && x < nx && y < ny; }

    /// Corners of cell (x, y), counter-clockwise from south-west.
    std::array<GeoPoint, 4> cell_corners(std::int64_t x, std::int64_t y) const
    {
        const auto proj = projection();
        const double s = cell_size_m;
        const double x0 = static_cast<double>(x) * s, y0 = static_cast<double>(y) * s;
        return {proj.inverse({x0, y0}), proj.inverse({x0 + s, y0}), proj.inverse({x0 + s, y0 + s}),
                proj.inverse({x0, y0 + s})};
    }

    GeoPoint cell_center(std::int64_t x, std::int64_t y) const
    {
        return projection().inverse({(static_cast<double>(x) + 0.5) * cell_size_m, (static_cast<double>(y) + 0.5) * cell_size_m});
    }
};

struct Heatmap {
    GridSpec grid;
    std::vector<std::uint64_t> cells; ///< row-major: y * nx + x
    std::uint64_t overflow = 0;
    std::optional<DailyWindow> window;

    std::uint64_t at(std::int64_t x, std::int64_t y) const { return cells[static_cast<std::size_t>(y * grid.nx + x)]; }

    std::uint64_t total() const noexcept
    {
        std::uint64_t t = overflow;
        for (auto c : cells) {
            t += c;
        }
        return t;
    }
};

/// Bounded count grid; records falling outside it land in `overflow`.
inline Heatmap grid_density(std::span<const DetectionRecord> records, const GridSpec& grid)
{
    if (!(grid.cell_size_m > 0.0)) {
        throw std::invalid_argument("cell size must be positive");
    }
    if (grid.nx < 0 || grid.ny < 0) {
        throw std::invalid_argument("grid dimensions must be non-negative");
    }
    Heatmap h;
    h.grid = grid;
    h.cells.assign(static_cast<std::size_t>(grid.nx * grid.ny), 0);
    for (const auto& r : records) {
        const auto [x, y] = grid.cell_of(r.point);
        if (grid.in_bounds(x, y)) {
            ++h.cells[static_cast<std::size_t>(y * grid.nx + x)];
        } else {
            ++h.overflow;
        }
    }
    return h;
}

/// Grid from `origin` just large enough for every record north-east of it;
/// records south or west of the origin overflow.
inline Heatmap grid_density(std::span<const DetectionRecord> records, const GeoPoint& origin, double cell_size_m)
{
    GridSpec g{origin, cell_size_m, 0, 0};
    if (!(cell_size_m > 0.0)) {
        throw std::invalid_argument("cell size must be positive");
    }
    for (const auto& r : records) {
        const auto [x, y] = g.cell_of(r.point);
        g.nx = std::max(g.nx, x + 1);
        g.ny = std::max(g.ny, y + 1);
    }
    return grid_density(records, g);
}

/// Grid whose origin is the south-west corner of the records' bounding box.
inline GridSpec grid_covering(std::span<const DetectionRecord> records, double cell_size_m)
{
    if (records.empty()) {
        return GridSpec{{}, cell_size_m, 0, 0};
    }
    double lat = records.front().point.lat, lon = records.front().point.lon;
    for (const auto& r : records) {
        lat = std::min(lat, r.point.lat);
        lon = std::min(lon, r.point.lon);
    }
    GridSpec g{{lat, lon}, cell_size_m, 0, 0};
    for (const auto& r : records) {
        const auto [x, y] = g.cell_of(r.point);
        g.nx = std::max(g.nx, x + 1);
        g.ny = std::max(g.ny, y + 1);
    }
    return g;
}

struct Zone {
    std::int64_t x = 0;
    std::int64_t y = 0;
    std::uint64_t count = 0;

    friend bool operator==(const Zone&, const Zone&) = default;
};

/// The k highest-count non-zero cells; ties go to the lower row-major index.
inline std::vector<Zone> top_zones(const Heatmap& h, std::size_t k)
{
    if (k == 0) {
        throw std::invalid_argument("k must be at least 1");
    }
    std::vector<Zone> zones;
    for (std::size_t i = 0; i < h.cells.size(); ++i) {
        if (h.cells[i] > 0) {
            zones.push_back({static_cast<std::int64_t>(i) % h.grid.nx, static_cast<std::int64_t>(i) / h.grid.nx, h.cells[i]});
        }
    }
    auto rank = [&](const Zone& a, const Zone& b) {
        if (a.count != b.count) {
            return a.count > b.count;
        }
        return a.y * h.grid.nx + a.x < b.y * h.grid.nx + b.x;
    };
    const std::size_t n = std::min(k, zones.size());
    std::partial_sort(zones.begin(), zones.begin() + static_cast<std::ptrdiff_t>(n), zones.end(), rank);
    zones.resize(n);
    return zones;
}

/// Mean over the (2r+1)^2 neighbourhood, clipped at the grid edge. Display
/// smoothing only; not count-preserving.
inline std::vector<double> box_blur(const Heatmap& h, int radius)
{
    if (radius < 0) {
        throw std::invalid_argument("blur radius must be non-negative");
    }
    const auto nx = h.grid.nx, ny = h.grid.ny;
    std::vector<double> out(h.cells.size(), 0.0);
    for (std::int64_t y = 0; y < ny; ++y) {
        for (std::int64_t x = 0; x < nx; ++x) {
            double sum = 0.0;
            int n = 0;
            for (std::int64_t dy = -radius; dy <= radius; ++dy) {
                for (std::int64_t dx = -radius; dx <= radius; ++dx) {
                    if (h.grid.in_bounds(x + dx, y + dy)) {
                        sum += static_cast<double>(h.at(x + dx, y + dy));
                        ++n;
                    }
                }
            }
            out[static_cast<std::size_t>(y * nx + x)] = sum / n;
        }
    }
    return out;
}

} // namespace dsi
