// SPDX-License-Identifier: Apache-2.0
//
// GeoJSON import/export for polygons, hulls and heatmaps.
#pragma once

#include "dsi/coverage.hpp"
#include "dsi/error.hpp"
#include "dsi/geometry.hpp"
#include "dsi/hotspot.hpp"

#include <json.hpp>

#include <string>
#include <vector>

namespace dsi::geojson {

namespace detail {

inline std::vector<GeoPoint> ring_from_json(const nlohmann::json& coords)
{
    std::vector<GeoPoint> ring;
    ring.reserve(coords.size());
    for (const auto& c : coords) {
        if (!c.is_array() || c.size() < 2 || !c[0].is_number() || !c[1].is_number()) {
            throw GeometryError("ring position must be [lon, lat]");
        }
        ring.push_back({c[1].get<double>(), c[0].get<double>()});
    }
    return ring;
}

inline nlohmann::json ring_to_json(const std::vector<GeoPoint>& ring)
{
    auto coords = nlohmann::json::array();
    for (const auto& p : ring) {
        coords.push_back({p.lon, p.lat});
    }
    if (!ring.empty()) {
        coords.push_back({ring.front().lon, ring.front().lat});
    }
    return coords;
}

inline std::string feature_id(const nlohmann::json& f, std::size_t index)
{
    auto as_string = [](const nlohmann::json& v) { return v.is_string() ? v.get<std::string>() : v.dump(); };
    if (f.contains("properties") && f["properties"].is_object() && f["properties"].contains("id")) {
        return as_string(f["properties"]["id"]);
    }
    if (f.contains("id")) {
        return as_string(f["id"]);
    }
    return "feature-" + std::to_string(index);
}

} // namespace detail

/// Polygons from a FeatureCollection, a single Feature or a bare Polygon
/// geometry. Only the outer ring of each polygon is used; holes are rejected.
inline std::vector<Polygon> polygons_from_json(const nlohmann::json& doc)
{
    std::vector<Polygon> out;
    auto add_geometry = [&](const nlohmann::json& g, const std::string& id) {
        if (!g.is_object() || g.value("type", "") != "Polygon") {
            throw GeometryError("feature " + id + ": geometry must be a Polygon");
        }
        const auto& rings = g.at("coordinates");
        if (!rings.is_array() || rings.empty()) {
            throw GeometryError("feature " + id + ": polygon has no rings");
        }
        if (rings.size() > 1) {
            throw GeometryError("feature " + id + ": polygon holes are not supported");
        }
        out.emplace_back(id, detail::ring_from_json(rings[0]));
    };
    try {
        const std::string type = doc.value("type", "");
        if (type == "FeatureCollection") {
            const auto& features = doc.at("features");
            for (std::size_t i = 0; i < features.size(); ++i) {
                add_geometry(features[i].at("geometry"), detail::feature_id(features[i], i));
            }
        } else if (type == "Feature") {
            add_geometry(doc.at("geometry"), detail::feature_id(doc, 0));
        } else if (type == "Polygon") {
            add_geometry(doc, "feature-0");
        } else {
            throw GeometryError("expected a FeatureCollection, Feature or Polygon");
        }
    } catch (const nlohmann::json::exception& e) {
        throw GeometryError(std::string("malformed GeoJSON: ") + e.what());
    }
    return out;
}

inline nlohmann::json polygon_feature(const std::vector<GeoPoint>& ring, nlohmann::json properties)
{
    return {{"type", "Feature"},
            {"properties", std::move(properties)},
            {"geometry", {{"type", "Polygon"}, {"coordinates", nlohmann::json::array({detail::ring_to_json(ring)})}}}};
}

/// Hull as a Feature with an `area_sq_miles` property. Degenerate hulls are
/// emitted as Point or LineString geometries.
inline nlohmann::json hull_feature(const HullCoverage& h)
{
    nlohmann::json props = {{"area_sq_miles", h.area_sq_miles}, {"vertices", h.hull.size()}};
    if (h.hull.size() >= 3) {
        return polygon_feature(h.hull, std::move(props));
    }
    nlohmann::json geometry;
    if (h.hull.size() == 1) {
        geometry = {{"type", "Point"}, {"coordinates", {h.hull[0].lon, h.hull[0].lat}}};
    } else if (h.hull.size() == 2) {
        geometry = {{"type", "LineString"},
                    {"coordinates", {{h.hull[0].lon, h.hull[0].lat}, {h.hull[1].lon, h.hull[1].lat}}}};
    }
    return {{"type", "Feature"}, {"properties", std::move(props)}, {"geometry", std::move(geometry)}};
}

/// One square polygon per nonzero cell, with `cell_x`, `cell_y` and `count`.
inline nlohmann::json heatmap_features(const Heatmap& h)
{
    auto features = nlohmann::json::array();
    for (std::int64_t y = 0; y < h.grid.ny; ++y) {
        for (std::int64_t x = 0; x < h.grid.nx; ++x) {
            const auto c = h.at(x, y);
            if (c == 0) {
                continue;
            }
            const auto corners = h.grid.cell_corners(x, y);
            features.push_back(polygon_feature(std::vector<GeoPoint>(corners.begin(), corners.end()),
                                               {{"cell_x", x}, {"cell_y", y}, {"count", c}}));
        }
    }
    return {{"type", "FeatureCollection"}, {"features", std::move(features)}};
}

} // namespace dsi::geojson
