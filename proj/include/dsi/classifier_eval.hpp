// SPDX-License-Identifier: Apache-2.0
//
// Validation arithmetic for a binary detector: operational precision and
// false-omission figures from manual annotation samples, extrapolation of
// missed positives, PR/ROC sweeps, average precision, ROC AUC and threshold
// policies.
#pragma once

#include "dsi/error.hpp"
#include "dsi/records.hpp"

#include <boost/random/mersenne_twister.hpp>
#include <boost/random/uniform_int_distribution.hpp>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>
#include <span>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

namespace dsi {

struct ConfusionCounts {
    std::uint64_t tp = 0, fp = 0, fn = 0, tn = 0;

    std::uint64_t total() const noexcept { return tp + fp + fn + tn; }
    friend bool operator==(const ConfusionCounts&, const ConfusionCounts&) = default;
};

inline ConfusionCounts confusion_counts(std::span<const AnnotationRecord> annotations) noexcept
{
    ConfusionCounts c;
    for (const auto& a : annotations) {
        if (a.predicted) {
            (a.actual ? c.tp : c.fp) += 1;
        } else {
            (a.actual ? c.fn : c.tn) += 1;
        }
    }
    return c;
}

/// tp / (tp + fp) over a sample of positive-classified items. This is the
/// figure annotation-based validation reports as "TPR"; it is precision.
inline double positive_sample_precision(std::uint64_t tp, std::uint64_t fp)
{
    if (tp + fp == 0) {
        throw std::invalid_argument("positive sample is empty");
    }
    return static_cast<double>(tp) / static_cast<double>(tp + fp);
}

/// fn / n over a sample of negative-classified items: the fraction that are
/// actually positive (false omission rate, reported operationally as "FNR").
inline double negative_sample_fnr(std::uint64_t fn, std::uint64_t n_sampled_negatives)
{
    if (n_sampled_negatives == 0) {
        throw std::invalid_argument("negative sample is empty");
    }
    if (fn > n_sampled_negatives) {
        throw std::invalid_argument("fn exceeds the sampled negatives");
    }
    return static_cast<double>(fn) / static_cast<double>(n_sampled_negatives);
}

/// Expected missed positives among `n_negatives_full` negative-classified items.
inline std::uint64_t extrapolate_missed(double fnr, std::uint64_t n_negatives_full)
{
    if (!(fnr >= 0.0 && fnr <= 1.0)) {
        throw std::invalid_argument("fnr must lie in [0, 1]");
    }
    return static_cast<std::uint64_t>(std::llround(fnr * static_cast<double>(n_negatives_full)));
}

// ---------------------------------------------------------------- curves

struct ScoredSample {
    double score = 0.0;
    bool actual = false;
};

/// One threshold step: predict positive when score >= threshold.
struct CurvePoint {
    double threshold = 0.0;
    double precision = 0.0;
    double recall = 0.0;
    double fpr = 0.0;
    std::uint64_t tp = 0;
    std::uint64_t fp = 0;
};

struct ScoreEvaluation {
    std::vector<CurvePoint> curve; ///< thresholds strictly decreasing
    double average_precision = 0.0;
    double roc_auc = 0.0;
};

namespace detail {

inline void check_scores(std::span<const ScoredSample> samples)
{
    for (const auto& s : samples) {
        if (!(s.score >= 0.0 && s.score <= 1.0)) {
            throw std::invalid_argument("score outside [0, 1]");
        }
    }
}

} // namespace detail

/// Threshold sweep over every distinct score, highest first. Equal scores form
/// a single step. Precision, recall and FPR are cumulative at each step; FPR is
/// 0 when the sample has no negatives. Requires at least one positive.
inline std::vector<CurvePoint> threshold_sweep(std::span<const ScoredSample> samples)
{
    detail::check_scores(samples);
    std::vector<ScoredSample> sorted(samples.begin(), samples.end());
    std::sort(sorted.begin(), sorted.end(), [](const ScoredSample& a, const ScoredSample& b) { return a.score > b.score; });
    std::uint64_t pos = 0;
    for (const auto& s : sorted) {
        pos += s.actual;
    }
    const std::uint64_t neg = sorted.size() - pos;
    if (pos == 0) {
        throw std::invalid_argument("precision-recall needs at least one positive sample");
    }

    std::vector<CurvePoint> curve;
    std::uint64_t tp = 0, fp = 0;
    for (std::size_t i = 0; i < sorted.size();) {
        const double t = sorted[i].score;
        for (; i < sorted.size() && sorted[i].score == t; ++i) {
            (sorted[i].actual ? tp : fp) += 1;
        }
        CurvePoint p;
        p.threshold = t;
        p.tp = tp;
        p.fp = fp;
        p.precision = static_cast<double>(tp) / static_cast<double>(tp + fp);
        p.recall = static_cast<double>(tp) / static_cast<double>(pos);
        p.fpr = neg == 0 ? 0.0 : static_cast<double>(fp) / static_cast<double>(neg);
        curve.push_back(p);
    }
    return curve;
}

/// Step-wise AP: sum over steps of (R_k - R_{k-1}) * P_k, with R_0 = 0.
inline double average_precision(std::span<const CurvePoint> curve) noexcept
{
    double ap = 0.0, prev_recall = 0.0;
    for (const auto& p : curve) {
        ap += (p.recall - prev_recall) * p.precision;
        prev_recall = p.recall;
    }
    return ap;
}

/// Trapezoidal area under (FPR, TPR) from (0, 0). Requires both classes.
inline double roc_auc(std::span<const CurvePoint> curve)
{
    if (curve.empty() || curve.back().fp == 0 || curve.back().tp == 0) {
        throw std::invalid_argument("ROC needs at least one positive and one negative sample");
    }
    double auc = 0.0, prev_fpr = 0.0, prev_tpr = 0.0;
    for (const auto& p : curve) {
        auc += (p.fpr - prev_fpr) * (p.recall + prev_tpr) / 2.0;
        prev_fpr = p.fpr;
        prev_tpr = p.recall;
    }
    return auc;
}

inline ScoreEvaluation evaluate_scores(std::span<const ScoredSample> samples)
{
    ScoreEvaluation out;
    out.curve = threshold_sweep(samples);
    out.average_precision = average_precision(out.curve);
    out.roc_auc = roc_auc(out.curve);
    return out;
}

// ---------------------------------------------------------------- thresholds

struct MaxF1 {};
struct PrecisionFloor {
    double min_precision = 0.0;
};
using ThresholdPolicy = std::variant<MaxF1, PrecisionFloor>;

/// Raised when no curve point reaches the requested precision.
class FloorUnattainable : public Error {
public:
    FloorUnattainable(double floor, double best)
        : Error("precision floor " + std::to_string(floor) + " unattainable; best achievable precision is " +
                std::to_string(best)),
          max_precision_(best)
    {
    }
    double max_precision() const noexcept { return max_precision_; }

private:
    double max_precision_;
};

inline double f1_score(const CurvePoint& p) noexcept
{
    const double s = p.precision + p.recall;
    return s == 0.0 ? 0.0 : 2.0 * p.precision * p.recall / s;
}

/// MaxF1: argmax of F1, ties toward the higher threshold.
/// PrecisionFloor(p): the lowest threshold with precision >= p.
inline double select_threshold(std::span<const CurvePoint> curve, const ThresholdPolicy& policy)
{
    if (curve.empty()) {
        throw std::invalid_argument("threshold selection on an empty curve");
    }
    if (std::holds_alternative<MaxF1>(policy)) {
        const CurvePoint* best = &curve.front();
        for (const auto& p : curve) {
            const double f = f1_score(p), fb = f1_score(*best);
            if (f > fb || (f == fb && p.threshold > best->threshold)) {
                best = &p;
            }
        }
        return best->threshold;
    }
    const double floor = std::get<PrecisionFloor>(policy).min_precision;
    const CurvePoint* chosen = nullptr;
    double best_precision = -1.0;
    for (const auto& p : curve) {
        best_precision = std::max(best_precision, p.precision);
        if (p.precision >= floor && (!chosen || p.threshold < chosen->threshold)) {
            chosen = &p;
        }
    }
    if (!chosen) {
        throw FloorUnattainable(floor, best_precision);
    }
    return chosen->threshold;
}

/// Parses `max-f1` or `precision-floor=P`.
inline ThresholdPolicy parse_threshold_policy(std::string_view s)
{
    if (s == "max-f1") {
        return MaxF1{};
    }
    constexpr std::string_view prefix = "precision-floor=";
    if (s.starts_with(prefix)) {
        const std::string v(s.substr(prefix.size()));
        std::size_t used = 0;
        double p = 0.0;
        try {
            p = std::stod(v, &used);
        } catch (const std::exception&) {
            used = 0;
        }
        if (used == v.size() && used > 0 && p >= 0.0 && p <= 1.0) {
            return PrecisionFloor{p};
        }
    }
    throw std::invalid_argument("threshold policy must be max-f1 or precision-floor=P with P in [0, 1]");
}

// ---------------------------------------------------------------- splitting

struct Split {
    std::vector<std::size_t> train, validation, test;
};

/// Seeded shuffle of [0, n) cut into train/validation/test by `fractions`
/// (default 60-20-20). Sizes are floor(f * n) for the first two parts; the
/// test part takes the remainder.
inline Split split_indices(std::size_t n, std::uint64_t seed, double train_fraction = 0.6,
                           double validation_fraction = 0.2)
{
    if (train_fraction < 0 || validation_fraction < 0 || train_fraction + validation_fraction > 1.0) {
        throw std::invalid_argument("split fractions must be non-negative and sum to at most 1");
    }
    std::vector<std::size_t> idx(n);
    std::iota(idx.begin(), idx.end(), std::size_t{0});
    boost::random::mt19937_64 rng(seed);
    for (std::size_t i = n; i > 1; --i) {
        boost::random::uniform_int_distribution<std::size_t> pick(0, i - 1);
        std::swap(idx[i - 1], idx[pick(rng)]);
    }
    const auto n_train = static_cast<std::size_t>(std::floor(train_fraction * static_cast<double>(n)));
    const auto n_val = static_cast<std::size_t>(std::floor(validation_fraction * static_cast<double>(n)));
    Split s;
    s.train.assign(idx.begin(), idx.begin() + static_cast<std::ptrdiff_t>(n_train));
    s.validation.assign(idx.begin() + static_cast<std::ptrdiff_t>(n_train),
                        idx.begin() + static_cast<std::ptrdiff_t>(n_train + n_val));
    s.test.assign(idx.begin() + static_cast<std::ptrdiff_t>(n_train + n_val), idx.end());
    return s;
}

} // namespace dsi
