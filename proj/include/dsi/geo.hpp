// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cmath>
#include <numbers>
#include <span>

namespace dsi {

inline constexpr double kEarthRadiusM = 6'371'008.8; // mean radius
inline constexpr double kFeetPerMeter = 3.28084;
inline constexpr double kMetersPerMile = 1609.344;
inline constexpr double kDegToRad = std::numbers::pi / 180.0;
inline constexpr double kRadToDeg = 180.0 / std::numbers::pi;

/// WGS84 degrees.
struct GeoPoint {
    double lat = 0.0;
    double lon = 0.0;

    friend constexpr bool operator==(const GeoPoint&, const GeoPoint&) = default;
};

inline bool valid(const GeoPoint& p) noexcept
{
    return std::isfinite(p.lat) && std::isfinite(p.lon) && p.lat >= -90.0 && p.lat <= 90.0 && p.lon >= -180.0 &&
           p.lon <= 180.0;
}

/// Great-circle distance on the mean-radius sphere, in meters.
inline double haversine_m(const GeoPoint& a, const GeoPoint& b) noexcept
{
    const double dlat = (b.lat - a.lat) * kDegToRad;
    const double dlon = (b.lon - a.lon) * kDegToRad;
    const double s1 = std::sin(dlat / 2.0);
    const double s2 = std::sin(dlon / 2.0);
    double h = s1 * s1 + std::cos(a.lat * kDegToRad) * std::cos(b.lat * kDegToRad) * s2 * s2;
    h = std::min(1.0, h);
    return 2.0 * kEarthRadiusM * std::asin(std::sqrt(h));
}

inline double haversine_ft(const GeoPoint& a, const GeoPoint& b) noexcept
{
    return haversine_m(a, b) * kFeetPerMeter;
}

/// Planar coordinates in meters.
struct PlanarPoint {
    double x = 0.0;
    double y = 0.0;

    friend constexpr bool operator==(const PlanarPoint&, const PlanarPoint&) = default;
};

/// Equirectangular projection about a reference point:
/// x = R * dlon * cos(lat0), y = R * dlat.
///
/// Affine in (lon, lat), so convexity and point ordering survive the mapping.
class LocalProjection {
public:
    constexpr LocalProjection() = default;
    explicit LocalProjection(GeoPoint reference)
        : ref_(reference), cos_lat0_(std::cos(reference.lat * kDegToRad))
    {
    }

    /// Reference at the mean latitude and mean longitude of `points` (origin if empty).
    static LocalProjection about_mean(std::span<const GeoPoint> points)
    {
        if (points.empty()) {
            return LocalProjection{GeoPoint{}};
        }
        double lat = 0.0, lon = 0.0;
        for (const auto& p : points) {
            lat += p.lat;
            lon += p.lon;
        }
        const auto n = static_cast<double>(points.size());
        return LocalProjection{GeoPoint{lat / n, lon / n}};
    }

    PlanarPoint forward(const GeoPoint& p) const noexcept
    {
        return {kEarthRadiusM * (p.lon - ref_.lon) * kDegToRad * cos_lat0_,
                kEarthRadiusM * (p.lat - ref_.lat) * kDegToRad};
    }

    GeoPoint inverse(const PlanarPoint& q) const noexcept
    {
        return {ref_.lat + q.y / kEarthRadiusM * kRadToDeg, ref_.lon + q.x / (kEarthRadiusM * cos_lat0_) * kRadToDeg};
    }

    const GeoPoint& reference() const noexcept { return ref_; }

private:
    GeoPoint ref_{};
    double cos_lat0_ = 1.0;
};

} // namespace dsi
