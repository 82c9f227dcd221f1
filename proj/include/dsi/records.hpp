// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "dsi/geo.hpp"
#include "dsi/time.hpp"

#include <map>
#include <optional>
#include <string>
#include <string_view>

namespace dsi {

/// Auxiliary per-detection features; schema-free, keys sorted.
using AttrMap = std::map<std::string, double, std::less<>>;

/// One confidence-scored label inference for one geotagged image.
struct DetectionRecord {
    std::string image_id;
    GeoPoint point;
    Timestamp ts;
    std::string label;
    double conf = 0.0;
    AttrMap attrs;

    friend bool operator==(const DetectionRecord&, const DetectionRecord&) = default;
};

/// Manual validation of one detection. `predicted` is what the classifier
/// said, `actual` what the annotator saw.
struct AnnotationRecord {
    std::string image_id;
    bool predicted = false;
    bool actual = false;
    std::optional<std::string> decoy_note;

    friend bool operator==(const AnnotationRecord&, const AnnotationRecord&) = default;
};

/// A known real-world occurrence (e.g. a vending violation).
struct EventRecord {
    std::string event_id;
    GeoPoint point;
    Timestamp ts;
    std::string category;

    friend bool operator==(const EventRecord&, const EventRecord&) = default;
};

/// Identifiable-group typology.
enum class GroupKind { SelfOrganized, RoleBased, Cluster, AttributeBased };

struct GroupClass {
    GroupKind kind = GroupKind::SelfOrganized;
    std::string name;

    friend bool operator==(const GroupClass&, const GroupClass&) = default;
};

/// Self-organized and role-based groups are the normative ones.
constexpr bool is_normative(GroupKind k) noexcept
{
    return k == GroupKind::SelfOrganized || k == GroupKind::RoleBased;
}

constexpr std::string_view to_string(GroupKind k) noexcept
{
    switch (k) {
    case GroupKind::SelfOrganized:
        return "SelfOrganized";
    case GroupKind::RoleBased:
        return "RoleBased";
    case GroupKind::Cluster:
        return "Cluster";
    case GroupKind::AttributeBased:
        return "AttributeBased";
    }
    return "";
}

inline std::optional<GroupKind> parse_group_kind(std::string_view s) noexcept
{
    for (auto k : {GroupKind::SelfOrganized, GroupKind::RoleBased, GroupKind::Cluster, GroupKind::AttributeBased}) {
        if (s == to_string(k)) {
            return k;
        }
    }
    return std::nullopt;
}

} // namespace dsi
