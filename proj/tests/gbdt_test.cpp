#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <random>

#include "metric_gate/corpus.hpp"
#include "metric_gate/errors.hpp"
#include "metric_gate/gate.hpp"
#include "metric_gate/gbdt.hpp"
#include "support/oracle_cases.hpp"

using namespace mgate;
using namespace mgate::testing;

namespace {

std::vector<LabeledExample> rows(std::vector<std::vector<double>> x, std::vector<int> y) {
    std::vector<LabeledExample> out;
    for (std::size_t i = 0; i < x.size(); ++i) {
        out.push_back({FusedVector{std::move(x[i])}, y[i], "r" + std::to_string(i)});
    }
    return out;
}

// Brute-force pairwise AUC: P(score_pos > score_neg) + 0.5 P(tie).
double pairwise_auc(const std::vector<double>& s, const std::vector<int>& y) {
    double num = 0;
    double pairs = 0;
    for (std::size_t i = 0; i < s.size(); ++i) {
        for (std::size_t j = 0; j < s.size(); ++j) {
            if (y[i] != 1 || y[j] != 0) continue;
            pairs += 1;
            num += s[i] > s[j] ? 1.0 : s[i] == s[j] ? 0.5 : 0.0;
        }
    }
    return pairs == 0 ? 0.5 : num / pairs;
}

const GbdtModel& corpus_model() {
    static const GbdtModel model = [] {
        const auto corpus = generate_corpus(400, 1);
        const HashingEmbedder emb;
        const auto ex = vectorize_corpus(corpus, emb, SensitiveLexicon::builtin());
        return train(ex, GbdtHyperparams{}, schema_for(emb));
    }();
    return model;
}

std::filesystem::path temp_file(const std::string& name) {
    return std::filesystem::temp_directory_path() / ("mgate_gbdt_" + std::to_string(::getpid()) + name);
}

}  // namespace

TEST(Train, FourPointFixture) {
    const auto& c = gbdt_cases().front();
    ASSERT_STREQ(c.name, "four_point");
    const auto model = train(to_examples(c), c.hp);
    EXPECT_EQ(model.base_score, 0.0);
    ASSERT_EQ(model.trees.size(), 1u);
    const auto& root = model.trees[0].nodes[0];
    EXPECT_EQ(root.feature, 0);
    EXPECT_EQ(root.threshold, 1.5);
    EXPECT_DOUBLE_EQ(root.gain, 2.0);
    EXPECT_DOUBLE_EQ(model.trees[0].nodes[static_cast<std::size_t>(root.left)].weight, -2.0);
    EXPECT_DOUBLE_EQ(model.trees[0].nodes[static_cast<std::size_t>(root.right)].weight, 2.0);
    EXPECT_NEAR(predict_proba(model, FusedVector{{0.0}}), 0.11920292202211755, 1e-15);
    EXPECT_NEAR(predict_proba(model, FusedVector{{3.0}}), 0.8807970779778823, 1e-15);
}

TEST(Train, FourPointNeedsSmallerChildWeightByDefault) {
    // each child holds Σh = 0.5 < 1.0
    GbdtHyperparams hp{1, 1, 1.0, 0.0, 0.0, 1.0, 0};
    const auto model = train(rows({{0}, {1}, {2}, {3}}, {0, 0, 1, 1}), hp);
    EXPECT_TRUE(model.trees[0].nodes[0].is_leaf());
}

TEST(Train, MatchesBruteForceOracle) {
    for (const auto& c : gbdt_cases()) {
        const auto model = train(to_examples(c), c.hp);
        EXPECT_NEAR(model.base_score, c.base_score, 1e-12) << c.name;
        for (std::size_t i = 0; i < c.probes.size(); ++i) {
            EXPECT_NEAR(predict_proba(model, FusedVector{c.probes[i]}), c.expected[i], 1e-10)
                << c.name << " probe " << i;
        }
    }
}

TEST(Train, AllNegativeDrivesScoresDown) {
    std::mt19937_64 rng(3);
    std::vector<std::vector<double>> x;
    for (int i = 0; i < 40; ++i) x.push_back({static_cast<double>(rng() % 100), static_cast<double>(rng() % 7)});
    const auto ex = rows(x, std::vector<int>(40, 0));
    const auto model = train(ex, GbdtHyperparams{});
    for (const auto& e : ex) EXPECT_LE(predict_proba(model, e.vector), 0.01);
}

TEST(Train, NoUsefulSplitGivesBaseScore) {
    // identical feature values cannot be split
    const auto model = train(rows({{1}, {1}, {1}, {1}}, {0, 1, 1, 1}), GbdtHyperparams{});
    for (const auto& t : model.trees) EXPECT_EQ(t.nodes.size(), 1u);
    EXPECT_NEAR(model.base_score, std::log(3.0), 1e-12);
}

TEST(Train, Deterministic) {
    const auto corpus = generate_corpus(150, 4);
    const HashingEmbedder emb;
    const auto ex = vectorize_corpus(corpus, emb, SensitiveLexicon::builtin());
    EXPECT_EQ(serialize_model(train(ex, GbdtHyperparams{}, schema_for(emb))),
              serialize_model(train(ex, GbdtHyperparams{}, schema_for(emb))));
}

TEST(Train, TreeStructureInvariants) {
    const auto& model = corpus_model();
    const auto& hp = model.meta.hyperparams;
    ASSERT_EQ(model.trees.size(), static_cast<std::size_t>(hp.rounds));
    for (const auto& tree : model.trees) {
        EXPECT_LE(tree.depth(), static_cast<std::size_t>(hp.max_depth));
        for (const auto& n : tree.nodes) {
            if (n.is_leaf()) continue;
            EXPECT_LT(static_cast<std::size_t>(n.feature), model.schema.feature_count);
            const auto& l = tree.nodes[static_cast<std::size_t>(n.left)];
            const auto& r = tree.nodes[static_cast<std::size_t>(n.right)];
            EXPECT_NEAR(l.sum_grad + r.sum_grad, n.sum_grad, 1e-9);
            EXPECT_NEAR(l.sum_hess + r.sum_hess, n.sum_hess, 1e-9);
            const double lam = hp.l2_lambda;
            const double gain = 0.5 * (l.sum_grad * l.sum_grad / (l.sum_hess + lam) +
                                       r.sum_grad * r.sum_grad / (r.sum_hess + lam) -
                                       n.sum_grad * n.sum_grad / (n.sum_hess + lam)) -
                                hp.gamma;
            EXPECT_GT(gain, 0.0);
            EXPECT_NEAR(gain, n.gain, 1e-9 * std::max(1.0, std::abs(gain)));
            EXPECT_GE(l.sum_hess, hp.min_child_weight);
            EXPECT_GE(r.sum_hess, hp.min_child_weight);
        }
    }
}

TEST(Train, InputErrors) {
    const GbdtHyperparams hp;
    EXPECT_THROW(train(std::vector<LabeledExample>{}, hp), EmptyDataset);
    EXPECT_THROW(train(rows({{1}}, {1}), hp), EmptyDataset);
    EXPECT_THROW(train(rows({{1}, {1, 2}}, {0, 1}), hp), DimensionMismatch);
    EXPECT_THROW(train(rows({{1}, {NAN}}, {0, 1}), hp), NonFiniteInput);
    EXPECT_THROW(train(rows({{1}, {INFINITY}}, {0, 1}), hp), NonFiniteInput);
    EXPECT_THROW(train(rows({{1}, {2}}, {0, 2}), hp), InvalidLabel);
}

TEST(Hyperparams, Validation) {
    const auto ex = rows({{0}, {1}}, {0, 1});
    auto bad = [&](auto mutate) {
        GbdtHyperparams hp;
        mutate(hp);
        EXPECT_THROW(train(ex, hp), InvalidHyperparams);
    };
    bad([](GbdtHyperparams& h) { h.rounds = 0; });
    bad([](GbdtHyperparams& h) { h.max_depth = 0; });
    bad([](GbdtHyperparams& h) { h.learning_rate = 0.0; });
    bad([](GbdtHyperparams& h) { h.learning_rate = 1.5; });
    bad([](GbdtHyperparams& h) { h.l2_lambda = -1; });
    bad([](GbdtHyperparams& h) { h.gamma = -0.1; });
    EXPECT_NO_THROW(GbdtHyperparams{}.validate());
}

TEST(Predict, ProbabilityStrictlyInsideUnitInterval) {
    EXPECT_GT(sigmoid(-1e6), 0.0);
    EXPECT_LT(sigmoid(1e6), 1.0);
    EXPECT_DOUBLE_EQ(sigmoid(0.0), 0.5);
    const auto& model = corpus_model();
    std::mt19937_64 rng(9);
    for (int i = 0; i < 100; ++i) {
        std::vector<double> v(model.schema.feature_count);
        for (auto& x : v) x = static_cast<double>(rng() % 2001) / 100.0 - 10.0;
        const double p = predict_proba(model, FusedVector{v});
        EXPECT_GT(p, 0.0);
        EXPECT_LT(p, 1.0);
    }
}

TEST(Predict, Errors) {
    const auto& model = corpus_model();
    EXPECT_THROW(predict_proba(model, FusedVector{{1.0}}), DimensionMismatch);
    std::vector<double> v(model.schema.feature_count, 0.0);
    v[3] = NAN;
    EXPECT_THROW(predict_proba(model, FusedVector{v}), NonFiniteInput);
    v[3] = 0.0;
    EXPECT_NO_THROW(predict_proba(model, FusedVector{v}, model.schema.fingerprint));
    EXPECT_THROW(predict_proba(model, FusedVector{v}, FeatureSchema::fused(64, "external").fingerprint),
                 SchemaMismatch);
}

TEST(Schema, FingerprintDistinguishesConfigurations) {
    const auto a = FeatureSchema::fused(64, "builtin");
    EXPECT_EQ(a, FeatureSchema::fused(64, "builtin"));
    EXPECT_EQ(a.feature_count, 81u);
    EXPECT_NE(a.fingerprint, FeatureSchema::fused(32, "builtin").fingerprint);
    EXPECT_NE(a.fingerprint, FeatureSchema::fused(64, "external").fingerprint);
    EXPECT_NE(a.fingerprint, FeatureSchema::raw(81).fingerprint);
}

TEST(ModelFile, RoundTrip) {
    const auto& model = corpus_model();
    const auto path = temp_file("roundtrip.json");
    save_model(model, path);
    const auto loaded = load_model(path);
    EXPECT_EQ(loaded, model);
    EXPECT_EQ(serialize_model(loaded), serialize_model(model));
    EXPECT_EQ(loaded.model_id(), model.model_id());
    EXPECT_EQ(model.model_id().rfind("gbdt-", 0), 0u);
    EXPECT_EQ(model.model_id().size(), 17u);

    std::mt19937_64 rng(5);
    for (int i = 0; i < 100; ++i) {
        std::vector<double> v(model.schema.feature_count);
        for (auto& x : v) x = static_cast<double>(rng() % 1000) / 250.0 - 2.0;
        EXPECT_EQ(predict_proba(loaded, FusedVector{v}), predict_proba(model, FusedVector{v}));
    }
    std::filesystem::remove(path);
}

TEST(ModelFile, TamperedNodeIsCorrupt) {
    const auto text = serialize_model(corpus_model());
    auto pos = text.find("\"threshold\":");
    ASSERT_NE(pos, std::string::npos);
    pos = text.find_first_of("0123456789", pos);
    std::string tampered = text;
    tampered[pos] = tampered[pos] == '9' ? '8' : static_cast<char>(tampered[pos] + 1);
    EXPECT_THROW(deserialize_model(tampered), CorruptModel);
}

TEST(ModelFile, VersionAndStructureErrors) {
    const auto text = serialize_model(corpus_model());
    auto replace = [&](const std::string& from, const std::string& to) {
        std::string s = text;
        const auto at = s.find(from);
        EXPECT_NE(at, std::string::npos) << from;
        s.replace(at, from.size(), to);
        return s;
    };
    EXPECT_THROW(deserialize_model(replace("\"format_version\": 1", "\"format_version\": 2")),
                 FormatVersionMismatch);
    EXPECT_THROW(deserialize_model("{not json"), CorruptModel);
    EXPECT_THROW(deserialize_model("[]"), CorruptModel);
    EXPECT_THROW(deserialize_model(replace("metric-gate-gbdt", "other-format")), CorruptModel);
    EXPECT_THROW(deserialize_model(text.substr(0, text.size() / 2)), CorruptModel);
    EXPECT_THROW(load_model("/nonexistent/model.json"), IoError);
}

TEST(ModelFile, SchemaMismatchAtFirstPredict) {
    const auto& model = corpus_model();
    const auto path = temp_file("schema.json");
    save_model(model, path);
    MetricGate gate(load_model(path), SensitiveLexicon::builtin(), std::make_unique<HashingEmbedder>(32));
    EXPECT_THROW(gate.detect_overexposure("SELECT zip, COUNT(*) FROM patient_data GROUP BY zip"),
                 SchemaMismatch);
    std::filesystem::remove(path);
}

TEST(Evaluate, PerfectSeparation) {
    const std::vector<double> s = {0.1, 0.2, 0.9, 0.95};
    const std::vector<int> y = {0, 0, 1, 1};
    const auto m = evaluate_scores(s, y, 0.5);
    EXPECT_EQ(m.accuracy, 1.0);
    EXPECT_EQ(m.auc, 1.0);
    EXPECT_EQ(m.precision, 1.0);
    EXPECT_EQ(m.recall, 1.0);
}

TEST(Evaluate, ConstantScorer) {
    const std::vector<double> s(6, 0.5);
    const std::vector<int> y = {0, 1, 0, 1, 0, 1};
    const auto m = evaluate_scores(s, y, 0.85);
    EXPECT_EQ(m.recall, 0.0);
    EXPECT_EQ(m.auc, 0.5);
    EXPECT_EQ(m.precision, 0.0);
    EXPECT_EQ(m.tn, 3u);
    EXPECT_EQ(m.fn, 3u);
}

TEST(Evaluate, StrictThresholdAndCounts) {
    const std::vector<double> s = {0.85, 0.850001, 0.2, 0.9};
    const std::vector<int> y = {1, 1, 0, 0};
    const auto m = evaluate_scores(s, y, 0.85);
    EXPECT_EQ(m.tp, 1u);
    EXPECT_EQ(m.fn, 1u);
    EXPECT_EQ(m.fp, 1u);
    EXPECT_EQ(m.tn, 1u);
    EXPECT_EQ(m.total(), s.size());
    EXPECT_DOUBLE_EQ(m.accuracy, 0.5);
}

TEST(Evaluate, AucMatchesPairwiseCount) {
    std::mt19937_64 rng(17);
    for (int round = 0; round < 50; ++round) {
        const std::size_t n = 2 + rng() % 30;
        std::vector<double> s(n);
        std::vector<int> y(n);
        for (std::size_t i = 0; i < n; ++i) {
            s[i] = static_cast<double>(rng() % 10) / 10.0;  // plenty of ties
            y[i] = static_cast<int>(rng() % 2);
        }
        EXPECT_NEAR(evaluate_scores(s, y, 0.5).auc, pairwise_auc(s, y), 1e-12);
    }
}

TEST(Evaluate, Errors) {
    EXPECT_THROW(evaluate_scores({}, {}, 0.5), EmptyDataset);
    EXPECT_THROW(evaluate(corpus_model(), std::vector<LabeledExample>{}, 0.5), EmptyDataset);
}
