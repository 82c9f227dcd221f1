// SPDX-License-Identifier: Apache-2.0
//
// Temporal binning, interval statistics, convex-hull extent and per-polygon
// counts over a detection set.
#pragma once

#include "dsi/error.hpp"
#include "dsi/geometry.hpp"
#include "dsi/records.hpp"

#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace dsi {

enum class ClockMode { Utc, CaptureLocal };

/// Half-open [start, end) on instants. `start.utc_offset_minutes` is the
/// wall-clock offset used when no record pins one down.
struct Epoch {
    Timestamp start;
    Timestamp end;
};

struct BinningOptions {
    int width_minutes = 15;
    ClockMode clock = ClockMode::Utc;
    Epoch epoch;
    /// Out-of-epoch records throw DataError when set, are counted in `rejected` otherwise.
    bool strict = true;
};

struct TemporalBins {
    Timestamp epoch_start;
    int width_minutes = 15;
    ClockMode clock_mode = ClockMode::Utc;
    std::vector<std::uint64_t> counts;
    /// CaptureLocal only: the UTC offset in effect for each slot.
    std::vector<std::int16_t> slot_offsets;
    std::size_t rejected = 0;

    std::size_t size() const noexcept { return counts.size(); }

    /// Start of slot `k`, labelled with the offset in effect (UTC mode: `Z`).
    Timestamp slot_start(std::size_t k) const noexcept
    {
        const std::int64_t t = epoch_start.micros + static_cast<std::int64_t>(k) * width_minutes * kMicrosPerMinute;
        return Timestamp{t, clock_mode == ClockMode::Utc ? std::int16_t{0} : slot_offsets[k]};
    }
};

/// Bins plus, per input record, its slot (-1 when rejected).
struct BinAssignment {
    TemporalBins bins;
    std::vector<std::int64_t> slot_of;
};

/// ceil((end - start) / width).
inline std::size_t bin_count(const Epoch& epoch, int width_minutes)
{
    const std::int64_t span = epoch.end.micros - epoch.start.micros;
    const std::int64_t w = std::int64_t{width_minutes} * kMicrosPerMinute;
    return static_cast<std::size_t>((span + w - 1) / w);
}

namespace detail {

inline void check_binning(const BinningOptions& opt)
{
    if (opt.width_minutes <= 0 || 60 % opt.width_minutes != 0) {
        throw std::invalid_argument("bin width must divide 60 minutes");
    }
    if (opt.epoch.end.micros <= opt.epoch.start.micros) {
        throw std::invalid_argument("epoch must have positive length");
    }
}

} // namespace detail

/// Assigns every timestamp to a slot of a fixed grid laid over the epoch.
///
/// Utc: slot = floor((instant - start) / width).
///
/// CaptureLocal: the grid is still laid over instants, but each slot carries
/// the wall-clock label it had when it began, using the offset of the first
/// record at or after the slot start. A record maps, by its own wall-clock
/// label, to the first slot bearing that label. After a backward clock change
/// the repeated labels therefore resolve to their first occurrence, and the
/// slots covering the repeated hour stay empty (four slots at 15 minutes).
inline BinAssignment assign_bins(std::span<const Timestamp> stamps, const BinningOptions& opt)
{
    detail::check_binning(opt);
    BinAssignment out;
    auto& bins = out.bins;
    bins.epoch_start = opt.epoch.start;
    bins.width_minutes = opt.width_minutes;
    bins.clock_mode = opt.clock;
    const std::size_t n_bins = bin_count(opt.epoch, opt.width_minutes);
    bins.counts.assign(n_bins, 0);
    out.slot_of.assign(stamps.size(), -1);

    const std::int64_t start = opt.epoch.start.micros;
    const std::int64_t w = std::int64_t{opt.width_minutes} * kMicrosPerMinute;
    auto reject = [&](std::size_t i) {
        if (opt.strict) {
            throw DataError("record " + std::to_string(i) + " at " + format_iso8601(stamps[i]) + " is outside the epoch");
        }
        ++bins.rejected;
    };
    auto utc_slot = [&](const Timestamp& t) -> std::int64_t {
        if (t.micros < start || t.micros >= opt.epoch.end.micros) {
            return -1;
        }
        return (t.micros - start) / w;
    };

    if (opt.clock == ClockMode::Utc) {
        for (std::size_t i = 0; i < stamps.size(); ++i) {
            const auto s = utc_slot(stamps[i]);
            if (s < 0) {
                reject(i);
                continue;
            }
            out.slot_of[i] = s;
            ++bins.counts[static_cast<std::size_t>(s)];
        }
        return out;
    }

    // Offset in effect per slot: earliest record inside the slot, else the
    // next slot that has one, else the latest record seen, else the epoch's.
    std::vector<const Timestamp*> first(n_bins, nullptr);
    const Timestamp* latest = nullptr;
    for (const auto& t : stamps) {
        const auto s = utc_slot(t);
        if (s < 0) {
            continue;
        }
        auto& f = first[static_cast<std::size_t>(s)];
        if (!f || t.micros < f->micros || (t.micros == f->micros && t.utc_offset_minutes < f->utc_offset_minutes)) {
            f = &t;
        }
        if (!latest || t.micros > latest->micros ||
            (t.micros == latest->micros && t.utc_offset_minutes > latest->utc_offset_minutes)) {
            latest = &t;
        }
    }
    bins.slot_offsets.assign(n_bins, latest ? latest->utc_offset_minutes : opt.epoch.start.utc_offset_minutes);
    for (std::size_t k = n_bins; k-- > 0;) {
        if (first[k]) {
            bins.slot_offsets[k] = first[k]->utc_offset_minutes;
        } else if (k + 1 < n_bins) {
            bins.slot_offsets[k] = bins.slot_offsets[k + 1];
        }
    }

    // Wall-clock key of each slot, relative to slot 0's label; first slot wins.
    auto label = [&](std::size_t k) {
        return start + static_cast<std::int64_t>(k) * w + std::int64_t{bins.slot_offsets[k]} * kMicrosPerMinute;
    };
    const std::int64_t label0 = label(0);
    std::int64_t min_key = 0, max_key = 0;
    std::vector<std::int64_t> keys(n_bins);
    for (std::size_t k = 0; k < n_bins; ++k) {
        keys[k] = detail::floor_div(label(k) - label0, w);
        min_key = std::min(min_key, keys[k]);
        max_key = std::max(max_key, keys[k]);
    }
    std::vector<std::int64_t> slot_for_key(static_cast<std::size_t>(max_key - min_key + 1), -1);
    for (std::size_t k = 0; k < n_bins; ++k) {
        auto& s = slot_for_key[static_cast<std::size_t>(keys[k] - min_key)];
        if (s < 0) {
            s = static_cast<std::int64_t>(k);
        }
    }

    for (std::size_t i = 0; i < stamps.size(); ++i) {
        const auto& t = stamps[i];
        if (utc_slot(t) < 0) {
            reject(i);
            continue;
        }
        const std::int64_t key = detail::floor_div(t.local_micros() - label0, w);
        const std::int64_t s =
            (key < min_key || key > max_key) ? -1 : slot_for_key[static_cast<std::size_t>(key - min_key)];
        if (s < 0) {
            reject(i);
            continue;
        }
        out.slot_of[i] = s;
        ++bins.counts[static_cast<std::size_t>(s)];
    }
    return out;
}

inline TemporalBins bin_by_interval(std::span<const Timestamp> stamps, const BinningOptions& opt)
{
    return assign_bins(stamps, opt).bins;
}

inline std::vector<Timestamp> timestamps_of(std::span<const DetectionRecord> records)
{
    std::vector<Timestamp> out;
    out.reserve(records.size());
    for (const auto& r : records) {
        out.push_back(r.ts);
    }
    return out;
}

inline TemporalBins bin_by_interval(std::span<const DetectionRecord> records, const BinningOptions& opt)
{
    const auto stamps = timestamps_of(records);
    return bin_by_interval(stamps, opt);
}

/// Smallest width-aligned epoch (relative to the UTC day) covering every record.
inline Epoch covering_epoch(std::span<const Timestamp> stamps, int width_minutes)
{
    if (stamps.empty()) {
        throw std::invalid_argument("cannot derive an epoch from zero records");
    }
    std::int64_t lo = stamps.front().micros, hi = lo;
    std::int16_t lo_offset = stamps.front().utc_offset_minutes;
    for (const auto& t : stamps) {
        if (t.micros < lo) {
            lo = t.micros;
            lo_offset = t.utc_offset_minutes;
        }
        hi = std::max(hi, t.micros);
    }
    const std::int64_t w = std::int64_t{width_minutes} * kMicrosPerMinute;
    const std::int64_t start = detail::floor_div(lo, w) * w;
    const std::int64_t end = (detail::floor_div(hi, w) + 1) * w;
    return Epoch{Timestamp{start, lo_offset}, Timestamp{end, lo_offset}};
}

/// Renders num/den rounded half-up to `decimals` places, exactly.
inline std::string format_ratio(std::uint64_t num, std::uint64_t den, int decimals)
{
    if (den == 0) {
        throw std::invalid_argument("zero denominator");
    }
    unsigned __int128 scale = 1;
    for (int i = 0; i < decimals; ++i) {
        scale *= 10;
    }
    const unsigned __int128 scaled = (static_cast<unsigned __int128>(num) * scale * 2 + den) / (2 * den);
    const auto whole = static_cast<std::uint64_t>(scaled / scale);
    auto frac = static_cast<std::uint64_t>(scaled % scale);
    std::string out = std::to_string(whole);
    if (decimals > 0) {
        std::string f = std::to_string(frac);
        out += '.' + std::string(static_cast<std::size_t>(decimals) - f.size(), '0') + f;
    }
    return out;
}

struct IntervalStats {
    std::size_t n_bins = 0;
    std::size_t n_empty = 0;
    std::uint64_t total = 0;
    std::uint64_t max_count = 0;

    double mean() const noexcept { return static_cast<double>(total) / static_cast<double>(n_bins); }
    std::string mean_fixed(int decimals = 4) const { return format_ratio(total, n_bins, decimals); }
};

inline IntervalStats interval_stats(const TemporalBins& bins)
{
    if (bins.counts.empty()) {
        throw std::invalid_argument("interval_stats needs at least one bin");
    }
    IntervalStats s;
    s.n_bins = bins.counts.size();
    for (auto c : bins.counts) {
        s.total += c;
        s.n_empty += c == 0;
        s.max_count = std::max(s.max_count, c);
    }
    return s;
}

// ---------------------------------------------------------------- spatial extent

struct HullCoverage {
    /// Convex, counter-clockwise, no repeated closing vertex.
    std::vector<GeoPoint> hull;
    double area_sq_miles = 0.0;
};

/// Area of a stored ring under `proj`, in square miles.
inline double ring_area_sq_miles(std::span<const GeoPoint> ring, const LocalProjection& proj)
{
    std::vector<PlanarPoint> planar;
    planar.reserve(ring.size());
    for (const auto& p : ring) {
        planar.push_back(proj.forward(p));
    }
    return std::abs(shoelace_area(planar)) / (kMetersPerMile * kMetersPerMile);
}

inline HullCoverage convex_hull_area(std::span<const GeoPoint> points, const LocalProjection& proj)
{
    if (points.empty()) {
        throw std::invalid_argument("convex hull needs at least one point");
    }
    std::vector<PlanarPoint> planar;
    planar.reserve(points.size());
    for (const auto& p : points) {
        planar.push_back(proj.forward(p));
    }
    HullCoverage out;
    for (std::size_t i : convex_hull_indices(planar)) {
        out.hull.push_back(points[i]);
    }
    out.area_sq_miles = ring_area_sq_miles(out.hull, proj);
    return out;
}

/// Hull and area under an equirectangular projection about the points' mean.
inline HullCoverage convex_hull_area(std::span<const GeoPoint> points)
{
    return convex_hull_area(points, LocalProjection::about_mean(points));
}

inline std::vector<GeoPoint> points_of(std::span<const DetectionRecord> records)
{
    std::vector<GeoPoint> out;
    out.reserve(records.size());
    for (const auto& r : records) {
        out.push_back(r.point);
    }
    return out;
}

/// Mean hull area over the non-empty slots of an assignment (0 when all empty).
inline double mean_interval_hull_area(std::span<const GeoPoint> points, const BinAssignment& assignment)
{
    std::vector<std::vector<GeoPoint>> per_slot(assignment.bins.size());
    for (std::size_t i = 0; i < points.size(); ++i) {
        if (assignment.slot_of[i] >= 0) {
            per_slot[static_cast<std::size_t>(assignment.slot_of[i])].push_back(points[i]);
        }
    }
    double sum = 0.0;
    std::size_t n = 0;
    for (const auto& pts : per_slot) {
        if (!pts.empty()) {
            sum += convex_hull_area(pts).area_sq_miles;
            ++n;
        }
    }
    return n == 0 ? 0.0 : sum / static_cast<double>(n);
}

// ---------------------------------------------------------------- polygons

struct PolygonCounts {
    /// In polygon list order.
    std::vector<std::pair<std::string, std::uint64_t>> counts;
    std::uint64_t unassigned = 0;
};

/// Each point goes to the first listed polygon containing it (boundary inclusive).
inline PolygonCounts polygon_counts(std::span<const GeoPoint> points, std::span<const Polygon> polygons)
{
    PolygonCounts out;
    out.counts.reserve(polygons.size());
    for (const auto& poly : polygons) {
        out.counts.emplace_back(poly.id(), 0);
    }
    for (const auto& p : points) {
        bool hit = false;
        for (std::size_t i = 0; i < polygons.size(); ++i) {
            if (polygons[i].contains(p)) {
                ++out.counts[i].second;
                hit = true;
                break;
            }
        }
        out.unassigned += !hit;
    }
    return out;
}

inline PolygonCounts polygon_counts(std::span<const DetectionRecord> records, std::span<const Polygon> polygons)
{
    const auto pts = points_of(records);
    return polygon_counts(pts, polygons);
}

} // namespace dsi
