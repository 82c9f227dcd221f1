// SPDX-License-Identifier: Apache-2.0
//
// Planar polygon predicates in (lon, lat) space and convex hulls in a local
// projected plane.
#pragma once

#include "dsi/error.hpp"
#include "dsi/geo.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <span>
#include <string>
#include <vector>

namespace dsi {

struct BoundingBox {
    double min_lat = 0, min_lon = 0, max_lat = 0, max_lon = 0;

    bool contains(const GeoPoint& p) const noexcept
    {
        return p.lat >= min_lat && p.lat <= max_lat && p.lon >= min_lon && p.lon <= max_lon;
    }
};

inline BoundingBox bounding_box(std::span<const GeoPoint> pts)
{
    BoundingBox b{pts.front().lat, pts.front().lon, pts.front().lat, pts.front().lon};
    for (const auto& p : pts) {
        b.min_lat = std::min(b.min_lat, p.lat);
        b.max_lat = std::max(b.max_lat, p.lat);
        b.min_lon = std::min(b.min_lon, p.lon);
        b.max_lon = std::max(b.max_lon, p.lon);
    }
    return b;
}

namespace detail {

// Sign of the cross product (b - a) x (c - a), with x = lon, y = lat.
inline double orient(const GeoPoint& a, const GeoPoint& b, const GeoPoint& c) noexcept
{
    return (b.lon - a.lon) * (c.lat - a.lat) - (b.lat - a.lat) * (c.lon - a.lon);
}

inline bool within_box(const GeoPoint& a, const GeoPoint& b, const GeoPoint& p) noexcept
{
    return p.lon >= std::min(a.lon, b.lon) && p.lon <= std::max(a.lon, b.lon) && p.lat >= std::min(a.lat, b.lat) &&
           p.lat <= std::max(a.lat, b.lat);
}

inline bool on_segment(const GeoPoint& a, const GeoPoint& b, const GeoPoint& p) noexcept
{
    return orient(a, b, p) == 0.0 && within_box(a, b, p);
}

inline int sign(double v) noexcept { return (v > 0) - (v < 0); }

inline bool segments_intersect(const GeoPoint& p1, const GeoPoint& p2, const GeoPoint& q1, const GeoPoint& q2) noexcept
{
    const int d1 = sign(orient(q1, q2, p1));
    const int d2 = sign(orient(q1, q2, p2));
    const int d3 = sign(orient(p1, p2, q1));
    const int d4 = sign(orient(p1, p2, q2));
    if (d1 * d2 < 0 && d3 * d4 < 0) {
        return true;
    }
    return (d1 == 0 && within_box(q1, q2, p1)) || (d2 == 0 && within_box(q1, q2, p2)) ||
           (d3 == 0 && within_box(p1, p2, q1)) || (d4 == 0 && within_box(p1, p2, q2));
}

inline double ring_area_deg2(std::span<const GeoPoint> ring) noexcept
{
    double s = 0.0;
    for (std::size_t i = 0, n = ring.size(); i < n; ++i) {
        const auto& a = ring[i];
        const auto& b = ring[(i + 1) % n];
        s += a.lon * b.lat - b.lon * a.lat;
    }
    return s / 2.0;
}

} // namespace detail

/// A validated simple polygon (outer ring only, implicit closing edge).
class Polygon {
public:
    /// Validates `ring`: finite in-range vertices, at least three distinct,
    /// non-zero area, no self-intersection. A repeated closing vertex is dropped.
    Polygon(std::string id, std::vector<GeoPoint> ring) : id_(std::move(id)), ring_(std::move(ring))
    {
        if (ring_.size() >= 2 && ring_.front() == ring_.back()) {
            ring_.pop_back();
        }
        ring_.erase(std::unique(ring_.begin(), ring_.end()), ring_.end());
        if (ring_.size() < 3) {
            throw GeometryError("polygon " + id_ + ": fewer than three distinct vertices");
        }
        for (const auto& p : ring_) {
            if (!valid(p)) {
                throw GeometryError("polygon " + id_ + ": vertex out of range");
            }
        }
        if (detail::ring_area_deg2(ring_) == 0.0) {
            throw GeometryError("polygon " + id_ + ": zero area");
        }
        const std::size_t n = ring_.size();
        for (std::size_t i = 0; i < n; ++i) {
            for (std::size_t j = i + 1; j < n; ++j) {
                const bool adjacent = j == i + 1 || (i == 0 && j == n - 1);
                const auto& a1 = ring_[i];
                const auto& a2 = ring_[(i + 1) % n];
                const auto& b1 = ring_[j];
                const auto& b2 = ring_[(j + 1) % n];
                if (adjacent) {
                    // Adjacent edges may only share their common vertex.
                    const bool forward = j == i + 1;
                    const GeoPoint& shared = forward ? a2 : a1;
                    const GeoPoint& own = forward ? a1 : a2;
                    const GeoPoint& far = forward ? b2 : b1;
                    if (detail::orient(own, shared, far) == 0.0 &&
                        (detail::within_box(own, shared, far) || detail::within_box(shared, far, own))) {
                        throw GeometryError("polygon " + id_ + ": self-overlapping edges");
                    }
                    continue;
                }
                if (detail::segments_intersect(a1, a2, b1, b2)) {
                    throw GeometryError("polygon " + id_ + ": self-intersecting ring");
                }
            }
        }
        box_ = bounding_box(ring_);
    }

    const std::string& id() const noexcept { return id_; }
    const std::vector<GeoPoint>& ring() const noexcept { return ring_; }
    const BoundingBox& box() const noexcept { return box_; }

    /// Inside-or-on-boundary test (crossing number with an explicit edge check).
    bool contains(const GeoPoint& p) const noexcept
    {
        if (!box_.contains(p)) {
            return false;
        }
        bool inside = false;
        const std::size_t n = ring_.size();
        for (std::size_t i = 0, j = n - 1; i < n; j = i++) {
            const auto& a = ring_[i];
            const auto& b = ring_[j];
            if (detail::on_segment(a, b, p)) {
                return true;
            }
            if ((a.lat > p.lat) != (b.lat > p.lat)) {
                const double x = a.lon + (p.lat - a.lat) / (b.lat - a.lat) * (b.lon - a.lon);
                if (p.lon < x) {
                    inside = !inside;
                }
            }
        }
        return inside;
    }

private:
    std::string id_;
    std::vector<GeoPoint> ring_;
    BoundingBox box_{};
};

/// Shoelace area of a planar ring in square meters (positive for CCW).
inline double shoelace_area(std::span<const PlanarPoint> ring) noexcept
{
    if (ring.size() < 3) {
        return 0.0;
    }
    double s = 0.0;
    for (std::size_t i = 0, n = ring.size(); i < n; ++i) {
        const auto& a = ring[i];
        const auto& b = ring[(i + 1) % n];
        s += a.x * b.y - b.x * a.y;
    }
    return s / 2.0;
}

/// Indices of the convex hull vertices of `pts`, counter-clockwise starting
/// from the lowest-x (then lowest-y) point. Collinear boundary points are
/// dropped (to within rounding); duplicate inputs collapse to one vertex.
inline std::vector<std::size_t> convex_hull_indices(std::span<const PlanarPoint> pts)
{
    std::vector<std::size_t> idx(pts.size());
    std::iota(idx.begin(), idx.end(), std::size_t{0});
    std::sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) {
        return pts[a].x < pts[b].x || (pts[a].x == pts[b].x && (pts[a].y < pts[b].y || (pts[a].y == pts[b].y && a < b)));
    });
    idx.erase(std::unique(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return pts[a] == pts[b]; }),
              idx.end());
    if (idx.size() < 3) {
        return idx;
    }
    // Left turn test; turns within rounding of collinear count as straight.
    auto cross = [&](std::size_t o, std::size_t a, std::size_t b) {
        const double ax = pts[a].x - pts[o].x, ay = pts[a].y - pts[o].y;
        const double bx = pts[b].x - pts[o].x, by = pts[b].y - pts[o].y;
        const double c = ax * by - ay * bx;
        return std::abs(c) <= 1e-12 * std::hypot(ax, ay) * std::hypot(bx, by) ? 0.0 : c;
    };
    std::vector<std::size_t> hull(2 * idx.size());
    std::size_t k = 0;
    for (std::size_t i : idx) {
        while (k >= 2 && cross(hull[k - 2], hull[k - 1], i) <= 0) {
            --k;
        }
        hull[k++] = i;
    }
    for (std::size_t t = idx.size() - 1, lower = k + 1; t-- > 0;) {
        const std::size_t i = idx[t];
        while (k >= lower && cross(hull[k - 2], hull[k - 1], i) <= 0) {
            --k;
        }
        hull[k++] = i;
    }
    hull.resize(k - 1);
    if (hull.size() < 3) {
        // All points collinear: keep the two extremes.
        hull = {idx.front(), idx.back()};
    }
    return hull;
}

} // namespace dsi
