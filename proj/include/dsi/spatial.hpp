// SPDX-License-Identifier: Apache-2.0
//
// Uniform lat/lon grid over detections plus the retrieval primitives built on
// it: nearest detection, proximity summaries, geofencing and known-event
// matching. Every query returns exactly what a linear scan would.
#pragma once

#include "dsi/geometry.hpp"
#include "dsi/records.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <tuple>
#include <vector>

namespace dsi {

/// Detection plus its distance from a query point.
struct Match {
    const DetectionRecord* record = nullptr;
    double distance_ft = 0.0;
};

/// Distance first, then image_id, then label.
inline bool closer(const Match& a, const Match& b) noexcept
{
    return std::tie(a.distance_ft, a.record->image_id, a.record->label) <
           std::tie(b.distance_ft, b.record->image_id, b.record->label);
}

/// Immutable grid index over the detections with conf >= min_conf.
///
/// Holds pointers into the caller's record storage, which must outlive it.
class SpatialIndex {
public:
    static constexpr double kDefaultCellM = 100.0;

    SpatialIndex(std::span<const DetectionRecord> records, double min_conf, double cell_m = kDefaultCellM)
    {
        if (!(min_conf >= 0.0 && min_conf <= 1.0)) {
            throw std::invalid_argument("min_conf must lie in [0, 1]");
        }
        if (!(cell_m > 0.0)) {
            throw std::invalid_argument("cell size must be positive");
        }
        std::vector<const DetectionRecord*> kept;
        for (const auto& r : records) {
            if (r.conf >= min_conf) {
                kept.push_back(&r);
            }
        }
        size_ = kept.size();
        if (kept.empty()) {
            return;
        }

        double lat_lo = kept.front()->point.lat, lat_hi = lat_lo;
        double lon_lo = kept.front()->point.lon, lon_hi = lon_lo;
        double lat_sum = 0.0;
        for (const auto* r : kept) {
            lat_lo = std::min(lat_lo, r->point.lat);
            lat_hi = std::max(lat_hi, r->point.lat);
            lon_lo = std::min(lon_lo, r->point.lon);
            lon_hi = std::max(lon_hi, r->point.lon);
            lat_sum += r->point.lat;
        }
        min_lat_ = lat_lo;
        min_lon_ = lon_lo;
        max_lat_ = lat_hi;
        max_lon_ = lon_hi;
        // cos is concave on [-90, 90]: its minimum over the range sits at an end.
        cos_min_ = std::max(0.0, std::min(std::cos(lat_lo * kDegToRad), std::cos(lat_hi * kDegToRad)));

        const double mean_cos = std::max(0.01, std::cos(lat_sum / static_cast<double>(kept.size()) * kDegToRad));
        cell_lat_ = cell_m / (kEarthRadiusM * kDegToRad);
        cell_lon_ = cell_lat_ / mean_cos;
        // Keep the cell count proportional to the record count.
        const double max_cells = 4.0 * static_cast<double>(kept.size()) + 1024.0;
        const double want = (std::floor((lat_hi - lat_lo) / cell_lat_) + 1) * (std::floor((lon_hi - lon_lo) / cell_lon_) + 1);
        if (want > max_cells) {
            const double grow = std::sqrt(want / max_cells) * 1.01;
            cell_lat_ *= grow;
            cell_lon_ *= grow;
        }
        ny_ = static_cast<std::int64_t>(std::floor((lat_hi - lat_lo) / cell_lat_)) + 1;
        nx_ = static_cast<std::int64_t>(std::floor((lon_hi - lon_lo) / cell_lon_)) + 1;

        // Counting sort into CSR cells.
        std::vector<std::uint32_t> cell_of(kept.size());
        cell_begin_.assign(static_cast<std::size_t>(nx_ * ny_ + 1), 0);
        for (std::size_t i = 0; i < kept.size(); ++i) {
            const auto c = static_cast<std::uint32_t>(cell_y(kept[i]->point.lat) * nx_ + cell_x(kept[i]->point.lon));
            cell_of[i] = c;
            ++cell_begin_[c + 1];
        }
        for (std::size_t c = 1; c < cell_begin_.size(); ++c) {
            cell_begin_[c] += cell_begin_[c - 1];
        }
        entries_.resize(kept.size());
        std::vector<std::uint32_t> fill(cell_begin_.begin(), cell_begin_.end() - 1);
        for (std::size_t i = 0; i < kept.size(); ++i) {
            entries_[fill[cell_of[i]]++] = kept[i];
        }
    }

    std::size_t size() const noexcept { return size_; }
    bool empty() const noexcept { return size_ == 0; }

    /// Globally nearest indexed detection (ties: image_id, then label).
    std::optional<Match> nearest(const GeoPoint& q) const
    {
        if (empty()) {
            return std::nullopt;
        }
        const std::int64_t cx = raw_cell_x(q.lon);
        const std::int64_t cy = raw_cell_y(q.lat);
        const double span_all = std::max(max_lon_, q.lon) - std::min(min_lon_, q.lon);
        const double cos_q = std::cos(q.lat * kDegToRad);
        std::optional<Match> best;
        // Rings closer than the grid rectangle are empty.
        const std::int64_t r0 = std::max({std::int64_t{0}, -cx, cx - (nx_ - 1), -cy, cy - (ny_ - 1)});
        for (std::int64_t r = r0;; ++r) {
            visit_ring(cx, cy, r, [&](const DetectionRecord* rec) {
                const Match m{rec, haversine_ft(q, rec->point)};
                if (!best || closer(m, *best)) {
                    best = m;
                }
            });
            const bool covers_all = cx - r <= 0 && cy - r <= 0 && cx + r >= nx_ - 1 && cy + r >= ny_ - 1;
            if (covers_all) {
                break;
            }
            if (best) {
                // Anything not yet visited lies outside this lat/lon window.
                const double lat_lo = min_lat_ + static_cast<double>(cy - r) * cell_lat_;
                const double lat_hi = min_lat_ + static_cast<double>(cy + r + 1) * cell_lat_;
                const double lon_lo = min_lon_ + static_cast<double>(cx - r) * cell_lon_;
                const double lon_hi = min_lon_ + static_cast<double>(cx + r + 1) * cell_lon_;
                const double dlat = std::max(0.0, std::min(q.lat - lat_lo, lat_hi - q.lat));
                double dlon = std::max(0.0, std::min(q.lon - lon_lo, lon_hi - q.lon));
                dlon = std::min({dlon, 360.0 - span_all, 180.0});
                const double by_lat = kEarthRadiusM * dlat * kDegToRad;
                const double s = std::sqrt(std::max(0.0, cos_q * cos_min_)) * std::sin(std::max(0.0, dlon) * kDegToRad / 2.0);
                const double by_lon = 2.0 * kEarthRadiusM * std::asin(std::min(1.0, s));
                const double bound_ft = std::min(by_lat, by_lon) * kFeetPerMeter * (1.0 - 1e-9);
                if (best->distance_ft < bound_ft) {
                    break;
                }
            }
        }
        return best;
    }

    /// Every indexed detection whose point may lie within `radius_ft` of `q`
    /// (a superset; callers filter by exact distance).
    template <typename Fn>
    void visit_near(const GeoPoint& q, double radius_ft, Fn&& fn) const
    {
        if (empty()) {
            return;
        }
        const double radius_m = radius_ft / kFeetPerMeter * (1.0 + 1e-9) + 1e-6;
        const double dlat = radius_m / kEarthRadiusM * kRadToDeg;
        const double denom = std::sqrt(std::max(0.0, std::cos(q.lat * kDegToRad) * cos_min_));
        const double s = denom > 0.0 ? std::sin(radius_m / (2.0 * kEarthRadiusM)) / denom : 2.0;
        BoundingBox box{q.lat - dlat, -180.0, q.lat + dlat, 180.0};
        if (s < 1.0 && radius_m < kEarthRadiusM) {
            const double dlon = 2.0 * std::asin(s) * kRadToDeg * (1.0 + 1e-9);
            if (q.lon - dlon >= -180.0 && q.lon + dlon <= 180.0) {
                box.min_lon = q.lon - dlon;
                box.max_lon = q.lon + dlon;
            }
        }
        visit_box(box, std::forward<Fn>(fn));
    }

    /// Every indexed detection in cells overlapping `box` (a superset of the box).
    template <typename Fn>
    void visit_box(const BoundingBox& box, Fn&& fn) const
    {
        if (empty() || box.max_lat < min_lat_ || box.min_lat > max_lat_ || box.max_lon < min_lon_ ||
            box.min_lon > max_lon_) {
            return;
        }
        const std::int64_t x0 = cell_x(box.min_lon), x1 = cell_x(box.max_lon);
        const std::int64_t y0 = cell_y(box.min_lat), y1 = cell_y(box.max_lat);
        for (std::int64_t y = y0; y <= y1; ++y) {
            for (std::int64_t x = x0; x <= x1; ++x) {
                visit_cell(x, y, fn);
            }
        }
    }

    template <typename Fn>
    void for_each(Fn&& fn) const
    {
        for (const auto* r : entries_) {
            fn(r);
        }
    }

private:
    std::int64_t raw_cell_x(double lon) const noexcept
    {
        return static_cast<std::int64_t>(std::floor((lon - min_lon_) / cell_lon_));
    }
    std::int64_t raw_cell_y(double lat) const noexcept
    {
        return static_cast<std::int64_t>(std::floor((lat - min_lat_) / cell_lat_));
    }
    std::int64_t cell_x(double lon) const noexcept { return std::clamp<std::int64_t>(raw_cell_x(lon), 0, nx_ - 1); }
    std::int64_t cell_y(double lat) const noexcept { return std::clamp<std::int64_t>(raw_cell_y(lat), 0, ny_ - 1); }

    template <typename Fn>
    void visit_cell(std::int64_t x, std::int64_t y, Fn& fn) const
    {
        if (x < 0 || y < 0 || x >= nx_ || y >= ny_) {
            return;
        }
        const auto c = static_cast<std::size_t>(y * nx_ + x);
        for (auto i = cell_begin_[c]; i < cell_begin_[c + 1]; ++i) {
            fn(entries_[i]);
        }
    }

    // Cells at Chebyshev distance exactly r from (cx, cy), clipped to the grid.
    template <typename Fn>
    void visit_ring(std::int64_t cx, std::int64_t cy, std::int64_t r, Fn&& fn) const
    {
        const std::int64_t y_lo = std::max<std::int64_t>(cy - r, 0), y_hi = std::min(cy + r, ny_ - 1);
        const std::int64_t x_lo = std::max<std::int64_t>(cx - r, 0), x_hi = std::min(cx + r, nx_ - 1);
        if (y_lo > y_hi || x_lo > x_hi) {
            return;
        }
        for (std::int64_t y = y_lo; y <= y_hi; ++y) {
            if (y == cy - r || y == cy + r) {
                for (std::int64_t x = x_lo; x <= x_hi; ++x) {
                    visit_cell(x, y, fn);
                }
            } else {
                if (cx - r >= 0 && cx - r < nx_) {
                    visit_cell(cx - r, y, fn);
                }
                if (r > 0 && cx + r >= 0 && cx + r < nx_) {
                    visit_cell(cx + r, y, fn);
                }
            }
        }
    }

    std::size_t size_ = 0;
    double min_lat_ = 0, min_lon_ = 0, max_lat_ = 0, max_lon_ = 0;
    double cell_lat_ = 1, cell_lon_ = 1;
    double cos_min_ = 1;
    std::int64_t nx_ = 0, ny_ = 0;
    std::vector<std::uint32_t> cell_begin_;
    std::vector<const DetectionRecord*> entries_;
};

inline SpatialIndex build_index(std::span<const DetectionRecord> detections, double min_conf)
{
    return SpatialIndex(detections, min_conf);
}

inline std::optional<Match> nearest_detection(const SpatialIndex& index, const EventRecord& event)
{
    return index.nearest(event.point);
}

struct NearestPair {
    const EventRecord* event = nullptr;
    Match nearest;
};

struct ProximitySummary {
    double median_ft = 0.0; ///< lower median for even counts
    double min_ft = 0.0;
    double max_ft = 0.0;
    std::vector<NearestPair> pairs; ///< in event order
};

inline ProximitySummary proximity_summary(const SpatialIndex& index, std::span<const EventRecord> events)
{
    if (events.empty()) {
        throw std::invalid_argument("proximity summary needs at least one event");
    }
    if (index.empty()) {
        throw std::invalid_argument("proximity summary over an empty index");
    }
    ProximitySummary out;
    std::vector<double> d;
    d.reserve(events.size());
    for (const auto& e : events) {
        const auto m = index.nearest(e.point);
        out.pairs.push_back({&e, *m});
        d.push_back(m->distance_ft);
    }
    std::sort(d.begin(), d.end());
    out.min_ft = d.front();
    out.max_ft = d.back();
    out.median_ft = d[(d.size() - 1) / 2];
    return out;
}

/// Half-open [begin, end) on instants.
struct TimeWindow {
    Timestamp begin;
    Timestamp end;

    bool contains(const Timestamp& t) const noexcept { return t.micros >= begin.micros && t.micros < end.micros; }
};

inline bool chronological(const DetectionRecord* a, const DetectionRecord* b) noexcept
{
    return std::tie(a->ts.micros, a->image_id, a->label) < std::tie(b->ts.micros, b->image_id, b->label);
}

/// Indexed detections inside-or-on `region` (and within `window`), ordered by
/// instant, then image_id, then label.
inline std::vector<const DetectionRecord*> geofence(const SpatialIndex& index, const Polygon& region,
                                                    const std::optional<TimeWindow>& window = std::nullopt)
{
    std::vector<const DetectionRecord*> out;
    index.visit_box(region.box(), [&](const DetectionRecord* r) {
        if ((!window || window->contains(r->ts)) && region.contains(r->point)) {
            out.push_back(r);
        }
    });
    std::sort(out.begin(), out.end(), chronological);
    return out;
}

/// Indexed detections within `radius_ft` of the event and within
/// `half_window` of its instant (both inclusive), nearest first.
inline std::vector<Match> match_known_event(const SpatialIndex& index, const EventRecord& event, double radius_ft,
                                            Micros half_window)
{
    if (!(radius_ft >= 0.0)) {
        throw std::invalid_argument("radius must be non-negative");
    }
    if (half_window.count() < 0) {
        throw std::invalid_argument("half window must be non-negative");
    }
    std::vector<Match> out;
    index.visit_near(event.point, radius_ft, [&](const DetectionRecord* r) {
        const std::int64_t dt = r->ts.micros - event.ts.micros;
        if ((dt < 0 ? -dt : dt) > half_window.count()) {
            return;
        }
        const double d = haversine_ft(event.point, r->point);
        if (d <= radius_ft) {
            out.push_back({r, d});
        }
    });
    std::sort(out.begin(), out.end(), closer);
    return out;
}

} // namespace dsi
