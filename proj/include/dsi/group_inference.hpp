// SPDX-License-Identifier: Apache-2.0
//
// Membership-inference demonstration: featurize de-identified detections,
// cluster them with seeded k-means, and score how well clusters recover the
// planted groups.
#pragma once

#include "dsi/error.hpp"
#include "dsi/records.hpp"

#include <boost/random/mersenne_twister.hpp>
#include <boost/random/uniform_int_distribution.hpp>
#include <boost/random/uniform_real_distribution.hpp>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <map>
#include <numeric>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace dsi {

using FeatureVector = std::vector<double>;

struct FeatureSpec {
    std::vector<std::string> keys; ///< attrs keys, in output order
    bool space = false;            ///< append normalized lat, lon
    bool time = false;             ///< append normalized instant
};

namespace detail {

// Min-max normalization; a constant column maps to 0.5.
inline void normalize_column(std::vector<FeatureVector>& rows, std::size_t col)
{
    double lo = std::numeric_limits<double>::infinity(), hi = -lo;
    for (const auto& r : rows) {
        lo = std::min(lo, r[col]);
        hi = std::max(hi, r[col]);
    }
    for (auto& r : rows) {
        r[col] = hi > lo ? (r[col] - lo) / (hi - lo) : 0.5;
    }
}

} // namespace detail

/// One vector per record, in input order: the listed attrs verbatim, then
/// optional batch-normalized space/time features. A missing key throws.
inline std::vector<FeatureVector> featurize(std::span<const DetectionRecord> records, const FeatureSpec& spec)
{
    std::vector<FeatureVector> out;
    out.reserve(records.size());
    for (const auto& r : records) {
        FeatureVector v;
        v.reserve(spec.keys.size() + 3);
        for (const auto& k : spec.keys) {
            const auto it = r.attrs.find(k);
            if (it == r.attrs.end()) {
                throw DataError("record " + r.image_id + " lacks attribute \"" + k + "\"");
            }
            v.push_back(it->second);
        }
        if (spec.space) {
            v.push_back(r.point.lat);
            v.push_back(r.point.lon);
        }
        if (spec.time) {
            v.push_back(static_cast<double>(r.ts.micros));
        }
        out.push_back(std::move(v));
    }
    const std::size_t base = spec.keys.size();
    const std::size_t extra = (spec.space ? 2 : 0) + (spec.time ? 1 : 0);
    if (!out.empty()) {
        for (std::size_t c = base; c < base + extra; ++c) {
            detail::normalize_column(out, c);
        }
    }
    return out;
}

namespace detail {

inline double sq_dist(const FeatureVector& a, const FeatureVector& b) noexcept
{
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        const double d = a[i] - b[i];
        s += d * d;
    }
    return s;
}

} // namespace detail

inline constexpr int kMaxKMeansIterations = 100;

/// Seeded k-means (k-means++ initialization, at most 100 Lloyd iterations,
/// stops when assignments stop changing).
///
/// Inputs are processed in a canonical (lexicographically sorted) order, so the
/// result depends only on the multiset of vectors, k and seed, never on input
/// order. Returns a cluster id in [0, k) per input vector.
inline std::vector<std::size_t> cluster(std::span<const FeatureVector> vectors, std::size_t k, std::uint64_t seed)
{
    const std::size_t n = vectors.size();
    if (k == 0) {
        throw std::invalid_argument("k must be at least 1");
    }
    if (k > n) {
        throw std::invalid_argument("k (" + std::to_string(k) + ") exceeds the number of vectors (" +
                                    std::to_string(n) + ")");
    }
    const std::size_t dim = vectors.front().size();
    for (const auto& v : vectors) {
        if (v.size() != dim) {
            throw std::invalid_argument("feature vectors differ in length");
        }
        for (double x : v) {
            if (!std::isfinite(x)) {
                throw std::invalid_argument("feature vector has a non-finite entry");
            }
        }
    }

    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return vectors[a] < vectors[b]; });
    auto at = [&](std::size_t canonical) -> const FeatureVector& { return vectors[order[canonical]]; };

    boost::random::mt19937_64 rng(seed);
    std::vector<FeatureVector> centers;
    centers.reserve(k);
    centers.push_back(at(boost::random::uniform_int_distribution<std::size_t>(0, n - 1)(rng)));
    std::vector<double> d2(n);
    for (std::size_t i = 0; i < n; ++i) {
        d2[i] = detail::sq_dist(at(i), centers[0]);
    }
    while (centers.size() < k) {
        const double total = std::accumulate(d2.begin(), d2.end(), 0.0);
        std::size_t pick = 0;
        if (total > 0.0) {
            const double u = boost::random::uniform_real_distribution<double>(0.0, total)(rng);
            double acc = 0.0;
            pick = n - 1;
            for (std::size_t i = 0; i < n; ++i) {
                acc += d2[i];
                if (u < acc && d2[i] > 0.0) {
                    pick = i;
                    break;
                }
            }
        } else {
            pick = boost::random::uniform_int_distribution<std::size_t>(0, n - 1)(rng);
        }
        centers.push_back(at(pick));
        for (std::size_t i = 0; i < n; ++i) {
            d2[i] = std::min(d2[i], detail::sq_dist(at(i), centers.back()));
        }
    }

    std::vector<std::size_t> assign(n, k);
    for (int iter = 0; iter < kMaxKMeansIterations; ++iter) {
        bool changed = false;
        for (std::size_t i = 0; i < n; ++i) {
            std::size_t best = 0;
            double best_d = detail::sq_dist(at(i), centers[0]);
            for (std::size_t c = 1; c < k; ++c) {
                const double d = detail::sq_dist(at(i), centers[c]);
                if (d < best_d) {
                    best_d = d;
                    best = c;
                }
            }
            if (assign[i] != best) {
                assign[i] = best;
                changed = true;
            }
        }
        if (!changed) {
            break;
        }
        std::vector<FeatureVector> sums(k, FeatureVector(dim, 0.0));
        std::vector<std::size_t> sizes(k, 0);
        for (std::size_t i = 0; i < n; ++i) {
            auto& s = sums[assign[i]];
            const auto& v = at(i);
            for (std::size_t j = 0; j < dim; ++j) {
                s[j] += v[j];
            }
            ++sizes[assign[i]];
        }
        for (std::size_t c = 0; c < k; ++c) {
            if (sizes[c] == 0) {
                continue; // empty cluster keeps its centroid
            }
            for (std::size_t j = 0; j < dim; ++j) {
                centers[c][j] = sums[c][j] / static_cast<double>(sizes[c]);
            }
        }
    }

    std::vector<std::size_t> out(n);
    for (std::size_t i = 0; i < n; ++i) {
        out[order[i]] = assign[i];
    }
    return out;
}

/// Sum over clusters of the dominant label's count, divided by N.
inline double purity(std::span<const std::size_t> assignments, std::span<const std::string> labels)
{
    if (assignments.size() != labels.size()) {
        throw std::invalid_argument("assignments and labels differ in length");
    }
    if (assignments.empty()) {
        throw std::invalid_argument("purity of an empty assignment");
    }
    std::map<std::size_t, std::map<std::string, std::size_t>> table;
    for (std::size_t i = 0; i < labels.size(); ++i) {
        ++table[assignments[i]][labels[i]];
    }
    std::size_t dominant = 0;
    for (const auto& [_, counts] : table) {
        std::size_t m = 0;
        for (const auto& [__, c] : counts) {
            m = std::max(m, c);
        }
        dominant += m;
    }
    return static_cast<double>(dominant) / static_cast<double>(labels.size());
}

// ---------------------------------------------------------------- reporting

/// De-identification failure modes.
enum class FailureMode { FalseNegatives, FalsePositives, StreisandEffect, ContextualIdentification, MembershipInference };

constexpr std::string_view to_string(FailureMode m) noexcept
{
    switch (m) {
    case FailureMode::FalseNegatives:
        return "False negatives";
    case FailureMode::FalsePositives:
        return "False positives";
    case FailureMode::StreisandEffect:
        return "Streisand effect";
    case FailureMode::ContextualIdentification:
        return "Contextual identification";
    case FailureMode::MembershipInference:
        return "Membership inference";
    }
    return "";
}

/// Share of a cluster its dominant label must cover to be tagged a membership inference.
inline constexpr double kMembershipInferenceShare = 0.8;

struct ClusterSummary {
    std::size_t id = 0;
    std::size_t size = 0;
    std::string dominant_label; ///< ties: lexicographically smallest
    double dominant_share = 0.0;
    std::vector<FailureMode> failure_modes;
};

struct ClusterReport {
    std::vector<std::size_t> assignments;
    double purity = 0.0;
    std::vector<ClusterSummary> clusters; ///< by cluster id, non-empty clusters only
    /// Descriptive notes for the other failure modes, copied from scenario metadata.
    std::map<FailureMode, std::string> annotations;
};

inline ClusterReport make_cluster_report(std::vector<std::size_t> assignments, std::span<const std::string> labels,
                                         std::map<FailureMode, std::string> annotations = {})
{
    ClusterReport rep;
    rep.purity = purity(assignments, labels);
    std::map<std::size_t, std::map<std::string, std::size_t>> table;
    for (std::size_t i = 0; i < labels.size(); ++i) {
        ++table[assignments[i]][labels[i]];
    }
    for (const auto& [id, counts] : table) {
        ClusterSummary s;
        s.id = id;
        std::size_t best = 0;
        for (const auto& [label, c] : counts) {
            s.size += c;
            if (c > best) {
                best = c;
                s.dominant_label = label;
            }
        }
        s.dominant_share = static_cast<double>(best) / static_cast<double>(s.size);
        if (s.dominant_share >= kMembershipInferenceShare) {
            s.failure_modes.push_back(FailureMode::MembershipInference);
        }
        rep.clusters.push_back(std::move(s));
    }
    annotations.erase(FailureMode::MembershipInference);
    rep.annotations = std::move(annotations);
    rep.assignments = std::move(assignments);
    return rep;
}

} // namespace dsi
