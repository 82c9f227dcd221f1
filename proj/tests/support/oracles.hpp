// SPDX-License-Identifier: Apache-2.0
//
// Reference implementations used only by tests. Each one is written
// independently of the library code it checks.
#pragma once

#include "dsi/records.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <optional>
#include <span>
#include <string>
#include <tuple>
#include <vector>

namespace dsi::oracle {

inline constexpr double kR = 6'371'008.8;
inline constexpr double kFt = 3.28084;

/// Chord-length great-circle distance through unit vectors.
inline double great_circle_ft(GeoPoint a, GeoPoint b)
{
    auto unit = [](GeoPoint p) {
        const double la = p.lat * std::numbers::pi / 180, lo = p.lon * std::numbers::pi / 180;
        return std::array<double, 3>{std::cos(la) * std::cos(lo), std::cos(la) * std::sin(lo), std::sin(la)};
    };
    const auto u = unit(a), v = unit(b);
    const double c = std::sqrt((u[0] - v[0]) * (u[0] - v[0]) + (u[1] - v[1]) * (u[1] - v[1]) + (u[2] - v[2]) * (u[2] - v[2]));
    return 2.0 * std::asin(std::min(1.0, c / 2.0)) * kR * kFt;
}

// ---------------------------------------------------------------- scores

struct Sample {
    double score;
    bool positive;
};

struct SweepTotals {
    double ap = 0.0;
    double auc = 0.0;
};

/// Exhaustive sweep: for every distinct score, recount TP/FP over the whole
/// sample, then integrate step-wise (AP) and by trapezoid (AUC).
inline SweepTotals brute_force_sweep(std::span<const Sample> s)
{
    std::vector<double> thresholds;
    for (const auto& x : s) {
        thresholds.push_back(x.score);
    }
    std::sort(thresholds.begin(), thresholds.end(), std::greater<>());
    thresholds.erase(std::unique(thresholds.begin(), thresholds.end()), thresholds.end());
    std::uint64_t P = 0, N = 0;
    for (const auto& x : s) {
        (x.positive ? P : N) += 1;
    }
    SweepTotals out;
    std::uint64_t prev_tp = 0, prev_fp = 0;
    for (double t : thresholds) {
        std::uint64_t tp = 0, fp = 0;
        for (const auto& x : s) {
            if (x.score >= t) {
                (x.positive ? tp : fp) += 1;
            }
        }
        const double precision = static_cast<double>(tp) / static_cast<double>(tp + fp);
        out.ap += static_cast<double>(tp - prev_tp) / static_cast<double>(P) * precision;
        if (N > 0) {
            out.auc += static_cast<double>(fp - prev_fp) / static_cast<double>(N) *
                       static_cast<double>(tp + prev_tp) / static_cast<double>(P) / 2.0;
        }
        prev_tp = tp;
        prev_fp = fp;
    }
    return out;
}

/// Mann-Whitney form of ROC AUC: P(score+ > score-) + P(tie) / 2.
inline double mann_whitney_auc(std::span<const Sample> s)
{
    double wins = 0;
    std::uint64_t P = 0, N = 0;
    for (const auto& a : s) {
        if (!a.positive) {
            ++N;
            continue;
        }
        ++P;
        for (const auto& b : s) {
            if (!b.positive) {
                wins += a.score > b.score ? 1.0 : a.score == b.score ? 0.5 : 0.0;
            }
        }
    }
    return wins / (static_cast<double>(P) * static_cast<double>(N));
}

/// Best F1 over every threshold, ties to the higher threshold.
inline double brute_force_max_f1_threshold(std::span<const Sample> s)
{
    double best_t = 0, best_f = -1;
    std::uint64_t P = 0;
    for (const auto& x : s) {
        P += x.positive;
    }
    for (const auto& c : s) {
        std::uint64_t tp = 0, fp = 0;
        for (const auto& x : s) {
            if (x.score >= c.score) {
                (x.positive ? tp : fp) += 1;
            }
        }
        const double p = static_cast<double>(tp) / static_cast<double>(tp + fp);
        const double r = static_cast<double>(tp) / static_cast<double>(P);
        const double f = p + r == 0 ? 0 : 2 * p * r / (p + r);
        if (f > best_f || (f == best_f && c.score > best_t)) {
            best_f = f;
            best_t = c.score;
        }
    }
    return best_t;
}

// ---------------------------------------------------------------- spatial

struct Near {
    const DetectionRecord* rec;
    double ft;
};

inline bool near_less(const Near& a, const Near& b)
{
    return std::tie(a.ft, a.rec->image_id, a.rec->label) < std::tie(b.ft, b.rec->image_id, b.rec->label);
}

/// Linear-scan nearest among records with conf >= min_conf, using the
/// library's distance so ties are decided identically.
template <typename Dist>
inline std::optional<Near> linear_nearest(std::span<const DetectionRecord> recs, double min_conf, GeoPoint q, Dist dist)
{
    std::optional<Near> best;
    for (const auto& r : recs) {
        if (r.conf < min_conf) {
            continue;
        }
        const Near n{&r, dist(q, r.point)};
        if (!best || near_less(n, *best)) {
            best = n;
        }
    }
    return best;
}

/// Winding-number point-in-polygon with explicit boundary detection.
inline bool winding_contains(std::span<const GeoPoint> ring, GeoPoint p)
{
    int wn = 0;
    const std::size_t n = ring.size();
    for (std::size_t i = 0; i < n; ++i) {
        const GeoPoint a = ring[i], b = ring[(i + 1) % n];
        const double cross = (b.lon - a.lon) * (p.lat - a.lat) - (p.lon - a.lon) * (b.lat - a.lat);
        if (cross == 0 && std::min(a.lon, b.lon) <= p.lon && p.lon <= std::max(a.lon, b.lon) &&
            std::min(a.lat, b.lat) <= p.lat && p.lat <= std::max(a.lat, b.lat)) {
            return true;
        }
        if (a.lat <= p.lat) {
            if (b.lat > p.lat && cross > 0) {
                ++wn;
            }
        } else if (b.lat <= p.lat && cross < 0) {
            --wn;
        }
    }
    return wn != 0;
}

// ---------------------------------------------------------------- geometry

/// O(n^3) hull area: an ordered pair (i, j) is a hull edge when every other
/// point lies strictly left of it or on the segment; area by summing edge
/// cross products of the collected edges.
inline double brute_force_hull_area(std::span<const std::array<double, 2>> pts)
{
    double twice = 0;
    const std::size_t n = pts.size();
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < n; ++j) {
            if (pts[i] == pts[j]) {
                continue;
            }
            bool edge = true;
            bool blocked = false;
            for (std::size_t k = 0; k < n && edge; ++k) {
                const double c = (pts[j][0] - pts[i][0]) * (pts[k][1] - pts[i][1]) -
                                 (pts[j][1] - pts[i][1]) * (pts[k][0] - pts[i][0]);
                if (c < 0) {
                    edge = false;
                } else if (c == 0 && pts[k] != pts[i] && pts[k] != pts[j]) {
                    // Collinear point beyond the segment means (i, j) is not maximal.
                    const double t = (pts[k][0] - pts[i][0]) * (pts[j][0] - pts[i][0]) +
                                     (pts[k][1] - pts[i][1]) * (pts[j][1] - pts[i][1]);
                    const double len = (pts[j][0] - pts[i][0]) * (pts[j][0] - pts[i][0]) +
                                       (pts[j][1] - pts[i][1]) * (pts[j][1] - pts[i][1]);
                    if (t < 0 || t > len) {
                        blocked = true;
                    }
                }
            }
            if (edge && !blocked) {
                twice += pts[i][0] * pts[j][1] - pts[j][0] * pts[i][1];
            }
        }
    }
    return std::abs(twice) / 2.0;
}

} // namespace dsi::oracle
