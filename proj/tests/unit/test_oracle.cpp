#include <gtest/gtest.h>

#include <cmath>
#include <fstream>
#include <random>
#include <set>
#include <thread>

#include "evoae/error.hpp"
#include "evoae/mlp.hpp"
#include "evoae/oracle.hpp"
#include "testkit.hpp"

using namespace evoae;

namespace {

Image random_image(int w, int h, int c, std::mt19937_64& rng) {
    std::uniform_int_distribution<int> u(0, 255);
    Image img(w, h, c);
    for (double& v : img.data) v = u(rng);
    return img;
}

} // namespace

TEST(ValidateResult, AcceptsWellFormedDistributions) {
    ClassificationResult r{{{"cat", 0.7}, {"dog", 0.3}}, "m"};
    EXPECT_NO_THROW(validate_result(r));
    ClassificationResult top1{{{"cat", 0.4}}, "m"};
    EXPECT_NO_THROW(validate_result(top1));
}

TEST(ValidateResult, RejectsBrokenInvariants) {
    EXPECT_THROW(validate_result({{{"cat", 1.3}}, "m"}), OracleMalformedResponse);
    EXPECT_THROW(validate_result({{{"cat", -0.1}}, "m"}), OracleMalformedResponse);
    EXPECT_THROW(validate_result({{{"cat", 0.2}, {"dog", 0.5}}, "m"}), OracleMalformedResponse);
    EXPECT_THROW(validate_result({{{"cat", 0.6}, {"dog", 0.5}}, "m"}), OracleMalformedResponse);
    EXPECT_THROW(validate_result({{{"cat", std::nan("")}}, "m"}), OracleMalformedResponse);
    EXPECT_THROW(validate_result({{}, "m"}), OracleMalformedResponse);
}

TEST(ClassificationResult, ConfidenceLookup) {
    const ClassificationResult r{{{"cat", 0.5}, {"tabby", 0.3}, {"dog", 0.2}}, "m"};
    EXPECT_EQ(r.confidence_of("dog"), 0.2);
    EXPECT_EQ(r.confidence_of("fox"), 0.0);
    const std::vector<std::string> felines = {"cat", "tabby"};
    EXPECT_DOUBLE_EQ(r.confidence_of(felines), 0.8);
}

TEST(OracleCache, CountsDistinctQuantizedImages) {
    testkit::FnOracle oracle({2, 2, 1}, [](const auto& b) { return testkit::two_way(b[0] / 255.0); });
    Image a(2, 2, 1, 100.2), b(2, 2, 1, 100.4), c(2, 2, 1, 7.0);
    oracle.classify(a);
    oracle.classify(b);  // same 8-bit content as a
    oracle.classify(c);
    oracle.classify(a);
    EXPECT_EQ(oracle.stats().queries, 2u);
    EXPECT_EQ(oracle.stats().cache_hits, 2u);
    EXPECT_EQ(oracle.backend_calls(), 2u);
}

TEST(OracleCache, OffCountsEveryCall) {
    testkit::FnOracle oracle({2, 2, 1}, [](const auto& b) { return testkit::two_way(b[0] / 255.0); }, false);
    Image a(2, 2, 1, 100.0);
    for (int i = 0; i < 5; ++i) oracle.classify(a);
    EXPECT_EQ(oracle.stats().queries, 5u);
    EXPECT_EQ(oracle.stats().cache_hits, 0u);
}

TEST(OracleCache, QueryCountEqualsDistinctHashesUnderRandomTraffic) {
    std::mt19937_64 rng(21);
    std::vector<Image> pool;
    for (int i = 0; i < 20; ++i) pool.push_back(random_image(3, 3, 3, rng));
    testkit::FnOracle oracle({3, 3, 3}, [](const auto& b) { return testkit::two_way(b[4] / 255.0); });
    std::set<std::uint64_t> seen;
    std::uniform_int_distribution<std::size_t> pick(0, pool.size() - 1);
    std::uint64_t calls = 0;
    for (int round = 0; round < 50; ++round) {
        std::vector<Image> batch;
        for (int k = 0; k < 4; ++k) batch.push_back(pool[pick(rng)]);
        for (const auto& img : batch) seen.insert(image_hash(img));
        const auto results = oracle.classify_batch(batch);
        calls += batch.size();
        ASSERT_EQ(results.size(), batch.size());
        for (std::size_t k = 0; k < batch.size(); ++k)
            ASSERT_EQ(results[k].confidence_of("a"), batch[k].data[4] / 255.0);
        ASSERT_EQ(oracle.stats().queries, seen.size());
    }
    EXPECT_EQ(oracle.stats().queries + oracle.stats().cache_hits, calls);
}

TEST(OracleCache, ConcurrentCallersShareOneQueryPerImage) {
    std::mt19937_64 rng(4);
    std::vector<Image> pool;
    for (int i = 0; i < 10; ++i) pool.push_back(random_image(4, 4, 1, rng));
    testkit::FnOracle oracle({4, 4, 1}, [](const auto& b) { return testkit::two_way(b[0] / 255.0); });
    std::vector<std::jthread> threads;
    for (int t = 0; t < 8; ++t)
        threads.emplace_back([&] {
            for (int r = 0; r < 20; ++r)
                for (const auto& img : pool) oracle.classify(img);
        });
    threads.clear();
    EXPECT_EQ(oracle.stats().queries, 10u);
    EXPECT_EQ(oracle.backend_calls(), 10u);
}

TEST(OracleCache, FailedQueriesAreNotCached) {
    int fail = 1;
    testkit::FnOracle oracle({1, 1, 1}, [&](const auto& b) {
        if (fail-- > 0) throw OracleTransportError("down", 1);
        return testkit::two_way(b[0] / 255.0);
    });
    Image img(1, 1, 1, 51.0);
    EXPECT_THROW(oracle.classify(img), OracleTransportError);
    EXPECT_EQ(oracle.stats().queries, 0u);
    EXPECT_DOUBLE_EQ(oracle.classify(img).confidence_of("a"), 0.2);
    EXPECT_EQ(oracle.stats().queries, 1u);
}

TEST(OracleCache, InvalidBackendResultsAreRejected) {
    testkit::FnOracle oracle({1, 1, 1}, [](const auto&) { return ClassificationResult{{{"a", 1.3}}, "fn"}; });
    EXPECT_THROW(oracle.classify(Image(1, 1, 1)), OracleMalformedResponse);
}

TEST(OracleBatch, EmptyAndSingle) {
    testkit::FnOracle oracle({2, 1, 1}, [](const auto& b) { return testkit::two_way(b[1] / 255.0); });
    EXPECT_TRUE(oracle.classify_batch({}).empty());
    Image img(2, 1, 1);
    img.data = {0, 204};
    const std::vector<Image> one = {img};
    EXPECT_EQ(oracle.classify_batch(one).front(), oracle.classify(img));
}

TEST(OracleBatch, NineRotationsMatchSingleQueriesBitForBit) {
    auto batch_oracle = load_builtin(testkit::data_dir() / "fixture" / "fixture.aemlp", false);
    auto single_oracle = load_builtin(testkit::data_dir() / "fixture" / "fixture.aemlp", false);
    const auto clean = read_image(testkit::data_dir() / "fixture" / "frog.ppm");
    std::vector<Image> views;
    for (double a = -60; a <= 60; a += 15) views.push_back(rotate(clean, a));
    const auto batched = batch_oracle->classify_batch(views);
    ASSERT_EQ(batched.size(), 9u);
    for (std::size_t i = 0; i < views.size(); ++i) EXPECT_EQ(batched[i], single_oracle->classify(views[i]));
}

TEST(OracleDims, RejectsImagesOfTheWrongShape) {
    MlpModel m = testkit::random_model({32, 32, 3}, 4, 3, 1);
    MlpOracle oracle(std::move(m), "m");
    EXPECT_THROW(oracle.classify(Image(16, 16, 3)), ContractError);
    EXPECT_THROW(oracle.classify(Image(32, 32, 1)), ContractError);
    EXPECT_NO_THROW(oracle.classify(Image(32, 32, 3)));
}

TEST(Mlp, TwoLayerForwardMatchesHandArithmetic) {
    MlpModel m;
    m.input = {2, 2, 1};
    m.labels = {"x", "y", "z"};
    m.layers.push_back({2, 4, Activation::relu, {1.0f, -2.0f, 0.5f, 0.0f, -1.0f, 1.0f, 1.0f, 2.0f}, {0.125f, -0.25f}});
    m.layers.push_back({3, 2, Activation::none, {1.0f, 0.0f, 0.0f, 1.0f, -1.0f, 2.0f}, {0.0f, 0.25f, -0.5f}});
    const std::vector<double> px = {51, 102, 153, 204};
    std::vector<double> in01;
    for (double p : px) in01.push_back(p / 255.0);
    // hidden
    const double h0 = std::max(0.0, 0.125 + 1.0 * in01[0] - 2.0 * in01[1] + 0.5 * in01[2]);
    const double h1 = std::max(0.0, -0.25 - in01[0] + in01[1] + in01[2] + 2.0 * in01[3]);
    const double z[3] = {h0, h1 + 0.25, -h0 + 2.0 * h1 - 0.5};
    const double mx = std::max({z[0], z[1], z[2]});
    const double s = std::exp(z[0] - mx) + std::exp(z[1] - mx) + std::exp(z[2] - mx);
    const auto p = m.probabilities(in01);
    for (int k = 0; k < 3; ++k) EXPECT_NEAR(p[k], std::exp(z[k] - mx) / s, 1e-9);

    MlpOracle oracle(m, "hand", false);
    Image img(2, 2, 1);
    img.data = px;
    const auto r = oracle.classify(img);
    ASSERT_EQ(r.ranked.size(), 3u);
    for (int k = 0; k < 3; ++k) EXPECT_NEAR(r.confidence_of(m.labels[k]), std::exp(z[k] - mx) / s, 1e-9);
    EXPECT_EQ(r.model_id, "hand");
}

TEST(Mlp, IdentityLikeAffineLayerPicksFirstClass) {
    MlpOracle oracle(testkit::affine_model({2, 2, 1}, {"first", "second"}, {4, 0, 0, 0, 0, 4, 0, 0}, {0, 0}), "id");
    Image img(2, 2, 1);
    img.data = {255, 0, 0, 0};
    const auto r = oracle.classify(img);
    EXPECT_EQ(r.top().label, "first");
    EXPECT_NEAR(r.top().confidence, 1.0 / (1.0 + std::exp(-4.0)), 1e-12);
}

TEST(Mlp, ZeroWeightsGiveUniformDistribution) {
    MlpOracle oracle(testkit::affine_model({3, 1, 1}, {"a", "b", "c", "d"}, std::vector<float>(12, 0.0f),
                                           std::vector<float>(4, 0.0f)),
                     "zero");
    Image img(3, 1, 1);
    img.data = {10, 20, 30};
    for (const auto& lc : oracle.classify(img).ranked) EXPECT_DOUBLE_EQ(lc.confidence, 0.25);
}

TEST(Mlp, SparseEvaluationEqualsDenseExactly) {
    for (std::uint64_t seed = 1; seed <= 5; ++seed) {
        auto m = testkit::random_model({6, 5, 3}, 40, 7, seed);
        MlpOracle oracle(m, "r");
        std::mt19937_64 rng(seed);
        std::uniform_real_distribution<double> u(0.0, 1.0);
        for (int t = 0; t < 20; ++t) {
            std::vector<double> x(m.input_size());
            for (double& v : x) v = u(rng);
            EXPECT_EQ(oracle.probabilities(x), m.probabilities(x));
        }
    }
}

TEST(Mlp, SaveLoadRoundTrip) {
    testkit::TempDir dir("mlp");
    const auto m = testkit::random_model({4, 3, 3}, 9, 5, 8);
    m.save(dir / "m.aemlp");
    const auto back = MlpModel::load(dir / "m.aemlp");
    EXPECT_EQ(back.input, m.input);
    EXPECT_EQ(back.labels, m.labels);
    ASSERT_EQ(back.layers.size(), m.layers.size());
    for (std::size_t l = 0; l < m.layers.size(); ++l) {
        EXPECT_EQ(back.layers[l].weights, m.layers[l].weights);
        EXPECT_EQ(back.layers[l].bias, m.layers[l].bias);
        EXPECT_EQ(back.layers[l].activation, m.layers[l].activation);
    }
    auto oracle = load_builtin(dir / "m.aemlp");
    EXPECT_EQ(oracle->model_id(), "builtin:m");
    EXPECT_EQ(oracle->input(), (InputSpec{4, 3, 3}));
}

TEST(Mlp, TruncatedFileNamesTheLayer) {
    testkit::TempDir dir("mlp");
    const auto m = testkit::random_model({4, 3, 3}, 9, 5, 8);
    m.save(dir / "m.aemlp");
    const auto size = std::filesystem::file_size(dir / "m.aemlp");
    // cut into the last layer's weights: 5 * 9 floats + 5 biases at the end
    std::filesystem::resize_file(dir / "m.aemlp", size - 4 * 5 - 4 * 20);
    try {
        MlpModel::load(dir / "m.aemlp");
        FAIL() << "expected FormatError";
    } catch (const FormatError& e) {
        EXPECT_NE(std::string(e.what()).find("layer 1"), std::string::npos) << e.what();
        EXPECT_NE(std::string(e.what()).find("truncated"), std::string::npos) << e.what();
    }
}

TEST(Mlp, RejectsCorruptFiles) {
    testkit::TempDir dir("mlp");
    {
        std::ofstream out(dir / "bad.aemlp", std::ios::binary);
        out << "NOTMLP01";
    }
    EXPECT_THROW(MlpModel::load(dir / "bad.aemlp"), FormatError);
    EXPECT_THROW(MlpModel::load(dir / "missing.aemlp"), FormatError);

    const auto m = testkit::random_model({2, 2, 1}, 3, 2, 1);
    m.save(dir / "trail.aemlp");
    {
        std::ofstream out(dir / "trail.aemlp", std::ios::binary | std::ios::app);
        out << "x";
    }
    EXPECT_THROW(MlpModel::load(dir / "trail.aemlp"), FormatError);

    auto nonfinite = m;
    nonfinite.layers[0].weights[0] = std::numeric_limits<float>::infinity();
    EXPECT_THROW(nonfinite.validate(), FormatError);
    auto mismatched = m;
    mismatched.layers[1].cols = 4;
    EXPECT_THROW(mismatched.validate(), FormatError);
    auto labels = m;
    labels.labels.push_back("extra");
    EXPECT_THROW(labels.validate(), FormatError);
}

TEST(Mlp, FixtureIsDeterministic) {
    auto a = load_builtin(testkit::data_dir() / "fixture" / "fixture.aemlp", false);
    const auto clean = read_image(testkit::data_dir() / "fixture" / "frog.ppm");
    const auto first = a->classify(clean);
    for (int i = 0; i < 3; ++i) EXPECT_EQ(a->classify(clean), first);
    EXPECT_EQ(first.top().label, "frog");
    EXPECT_GE(first.top().confidence, 0.9);
    EXPECT_EQ(first.ranked.size(), 10u);
}

TEST(ImageHash, DependsOnDimsAndQuantizedContent) {
    Image a(2, 3, 1, 10.0), b(3, 2, 1, 10.0), c(2, 3, 1, 10.3);
    EXPECT_NE(image_hash(a), image_hash(b));
    EXPECT_EQ(image_hash(a), image_hash(c));
    c.data[5] = 11.0;
    EXPECT_NE(image_hash(a), image_hash(c));
}
