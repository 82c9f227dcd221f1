// SPDX-License-Identifier: Apache-2.0
#include "dsi/group_inference.hpp"
#include "dsi/synth.hpp"

#include <gtest/gtest.h>

#include <fstream>
#include <random>
#include <sstream>

using namespace dsi;

namespace {

DetectionRecord rec(AttrMap attrs, GeoPoint p = {40.75, -73.98}, std::int64_t micros = 0)
{
    return DetectionRecord{"x", p, Timestamp{micros, 0}, "worker", 0.9, std::move(attrs)};
}

TEST(Featurize, VerbatimAttrs)
{
    const std::vector<DetectionRecord> one{rec({{"r", 0.1}, {"g", 0.2}, {"b", 0.3}})};
    const auto v = featurize(one, {{"r", "g", "b"}});
    ASSERT_EQ(v.size(), 1u);
    EXPECT_EQ(v[0], (FeatureVector{0.1, 0.2, 0.3}));

    const std::vector<DetectionRecord> two{rec({{"r", 0.5}}), rec({{"r", 0.5}})};
    const auto w = featurize(two, {{"r"}});
    EXPECT_EQ(w[0], w[1]);
}

TEST(Featurize, MissingKeyThrows)
{
    const std::vector<DetectionRecord> d{rec({{"r", 0.1}}), rec({{"g", 0.1}})};
    EXPECT_THROW(featurize(d, {{"r"}}), DataError);
}

TEST(Featurize, SpaceAndTimeNormalized)
{
    const std::vector<DetectionRecord> d{rec({}, {40.0, -74.0}, 1000), rec({}, {41.0, -74.0}, 3000),
                                         rec({}, {40.25, -74.0}, 1500)};
    const auto v = featurize(d, {{}, true, true});
    // (x - min) / (max - min); lon is constant so maps to 0.5.
    EXPECT_DOUBLE_EQ(v[0][0], 0.0);
    EXPECT_DOUBLE_EQ(v[1][0], 1.0);
    EXPECT_DOUBLE_EQ(v[2][0], 0.25);
    EXPECT_EQ(v[0][1], 0.5);
    EXPECT_EQ(v[2][1], 0.5);
    EXPECT_DOUBLE_EQ(v[0][2], 0.0);
    EXPECT_DOUBLE_EQ(v[1][2], 1.0);
    EXPECT_DOUBLE_EQ(v[2][2], 0.25);
}

TEST(Cluster, IdenticalVectorsOneCluster)
{
    const std::vector<FeatureVector> v(50, FeatureVector{1.0, 2.0});
    const auto a = cluster(v, 1, 3);
    EXPECT_TRUE(std::all_of(a.begin(), a.end(), [](std::size_t c) { return c == 0; }));
    EXPECT_EQ(cluster(v, 3, 3).size(), 50u);
}

TEST(Cluster, Errors)
{
    const std::vector<FeatureVector> v{{1.0}, {2.0}};
    EXPECT_THROW(cluster(v, 3, 0), std::invalid_argument);
    EXPECT_THROW(cluster(v, 0, 0), std::invalid_argument);
    EXPECT_THROW(cluster(std::vector<FeatureVector>{{1.0}, {1.0, 2.0}}, 1, 0), std::invalid_argument);
    EXPECT_THROW(cluster(std::vector<FeatureVector>{{std::nan("")}, {1.0}}, 1, 0), std::invalid_argument);
}

std::vector<FeatureVector> blobs(std::mt19937_64& rng, std::size_t per_blob, std::vector<std::string>& labels)
{
    const std::vector<FeatureVector> centers{{0, 0, 0}, {10, 10, 0}, {0, 10, 10}};
    std::normal_distribution<double> noise(0, 0.3);
    std::vector<FeatureVector> out;
    for (std::size_t b = 0; b < centers.size(); ++b) {
        for (std::size_t i = 0; i < per_blob; ++i) {
            FeatureVector v = centers[b];
            for (auto& x : v) {
                x += noise(rng);
            }
            out.push_back(v);
            labels.push_back("blob" + std::to_string(b));
        }
    }
    return out;
}

TEST(Cluster, SeparatedBlobsRecovered)
{
    std::mt19937_64 rng(61);
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
        std::vector<std::string> labels;
        const auto v = blobs(rng, 100, labels);
        const auto a = cluster(v, 3, seed);
        EXPECT_EQ(purity(a, labels), 1.0) << seed;
    }
    std::vector<std::string> labels;
    auto v = blobs(rng, 80, labels);
    v.resize(160);
    labels.resize(160);
    const auto a = cluster(v, 2, 9);
    EXPECT_EQ(purity(a, labels), 1.0);
    EXPECT_NE(a.front(), a.back());
}

TEST(Cluster, DeterministicAndOrderInvariant)
{
    std::mt19937_64 rng(62);
    std::uniform_real_distribution<double> u(0, 1);
    std::vector<FeatureVector> v(400, FeatureVector(4));
    for (auto& x : v) {
        for (auto& c : x) {
            c = u(rng);
        }
    }
    const auto a = cluster(v, 5, 17);
    EXPECT_EQ(cluster(v, 5, 17), a);

    std::vector<std::size_t> perm(v.size());
    std::iota(perm.begin(), perm.end(), std::size_t{0});
    std::shuffle(perm.begin(), perm.end(), rng);
    std::vector<FeatureVector> shuffled;
    for (auto i : perm) {
        shuffled.push_back(v[i]);
    }
    const auto b = cluster(shuffled, 5, 17);
    for (std::size_t i = 0; i < perm.size(); ++i) {
        ASSERT_EQ(b[i], a[perm[i]]);
    }
}

TEST(Purity, Examples)
{
    const std::vector<std::string> labels{"a", "a", "b", "b"};
    EXPECT_EQ(purity(std::vector<std::size_t>{0, 0, 1, 1}, labels), 1.0);
    std::vector<std::string> half(100, "x");
    std::fill(half.begin() + 50, half.end(), "y");
    EXPECT_EQ(purity(std::vector<std::size_t>(100, 0), half), 0.5);
    EXPECT_THROW(purity(std::vector<std::size_t>{}, std::vector<std::string>{}), std::invalid_argument);
    EXPECT_THROW(purity(std::vector<std::size_t>{0}, labels), std::invalid_argument);
}

TEST(Purity, RelabelInvariant)
{
    std::mt19937_64 rng(63);
    std::uniform_int_distribution<std::size_t> c(0, 4), l(0, 3);
    for (int trial = 0; trial < 50; ++trial) {
        std::vector<std::size_t> a(300);
        std::vector<std::string> labels(300);
        for (std::size_t i = 0; i < a.size(); ++i) {
            a[i] = c(rng);
            labels[i] = "g" + std::to_string(l(rng));
        }
        std::vector<std::size_t> relabel{3, 0, 4, 1, 2};
        std::shuffle(relabel.begin(), relabel.end(), rng);
        auto b = a;
        for (auto& x : b) {
            x = relabel[x] + 10;
        }
        EXPECT_EQ(purity(a, labels), purity(b, labels));
    }
}

TEST(Report, DominantLabelAndMembershipInference)
{
    const std::vector<std::string> labels{"a", "a", "a", "a", "b", "b", "a", "b"};
    const std::vector<std::size_t> a{0, 0, 0, 0, 0, 1, 1, 1};
    const auto rep = make_cluster_report(a, labels, {{FailureMode::StreisandEffect, "note"},
                                                     {FailureMode::MembershipInference, "dropped"}});
    ASSERT_EQ(rep.clusters.size(), 2u);
    EXPECT_EQ(rep.clusters[0].dominant_label, "a");
    EXPECT_DOUBLE_EQ(rep.clusters[0].dominant_share, 0.8);
    EXPECT_EQ(rep.clusters[0].failure_modes, std::vector<FailureMode>{FailureMode::MembershipInference});
    EXPECT_EQ(rep.clusters[1].dominant_label, "b");
    EXPECT_TRUE(rep.clusters[1].failure_modes.empty());
    EXPECT_EQ(rep.annotations.size(), 1u);
    EXPECT_DOUBLE_EQ(rep.purity, 6.0 / 8.0);
    EXPECT_EQ(to_string(FailureMode::ContextualIdentification), "Contextual identification");
}

TEST(Scenario, HighVisibilityVestsSeparate)
{
    std::ifstream in(std::string(DSI_DATA_DIR) + "/scenarios/vest_clusters.json");
    ASSERT_TRUE(in);
    std::stringstream ss;
    ss << in.rdbuf();
    const auto out = synth::generate(synth::scenario_from_json(nlohmann::json::parse(ss.str())));
    ASSERT_GT(out.detections.size(), 150u);
    std::vector<std::string> labels;
    for (const auto& t : out.truth) {
        labels.push_back(t.group);
    }
    const auto v = featurize(out.detections, {{"hue_green", "hue_orange", "reflective"}});
    const auto a = cluster(v, 2, 0);
    EXPECT_GE(purity(a, labels), 0.95);
    EXPECT_EQ(cluster(v, 2, 0), a);
}

} // namespace
