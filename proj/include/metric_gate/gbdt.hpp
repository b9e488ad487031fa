#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "metric_gate/features.hpp"

namespace mgate {

struct GbdtHyperparams {
    int rounds = 50;
    int max_depth = 3;
    double learning_rate = 0.1;
    double l2_lambda = 1.0;
    double gamma = 0.0;
    double min_child_weight = 1.0;
    std::uint64_t seed = 0;  // reserved for row/column subsampling (none by default)

    // Throws InvalidHyperparams.
    void validate() const;

    bool operator==(const GbdtHyperparams&) const = default;
};

struct LabeledExample {
    FusedVector vector;
    int label = 0;  // 0 safe, 1 risky
    std::string query_id;
};

// Identifies what the model's input slots mean. Two configurations that
// produce differently-shaped or differently-ordered vectors have different
// fingerprints.
struct FeatureSchema {
    std::size_t feature_count = 0;
    std::size_t embed_dim = 0;
    std::string embedder_family;  // "builtin", "external", or "raw"
    std::string fingerprint;

    // D embedding slots + the 17 syntactic slots under the canonical
    // category order.
    static FeatureSchema fused(std::size_t embed_dim, std::string_view embedder_family);
    // Arbitrary numeric features (tests, ad-hoc models).
    static FeatureSchema raw(std::size_t feature_count);

    bool operator==(const FeatureSchema&) const = default;
};

struct TreeNode {
    int feature = -1;  // -1 marks a leaf
    double threshold = 0.0;  // x[feature] < threshold goes left
    int left = -1;
    int right = -1;
    double weight = 0.0;  // leaf output before learning-rate scaling
    double sum_grad = 0.0;
    double sum_hess = 0.0;
    double gain = 0.0;

    bool is_leaf() const { return feature < 0; }
    bool operator==(const TreeNode&) const = default;
};

struct Tree {
    std::vector<TreeNode> nodes;  // nodes[0] is the root

    double predict(std::span<const double> x) const;
    std::size_t depth() const;

    bool operator==(const Tree&) const = default;
};

struct TrainingMeta {
    GbdtHyperparams hyperparams;
    std::string corpus_checksum;
    std::size_t example_count = 0;

    bool operator==(const TrainingMeta&) const = default;
};

struct GbdtModel {
    FeatureSchema schema;
    double base_score = 0.0;
    std::vector<Tree> trees;
    TrainingMeta meta;

    // "gbdt-" + first 12 hex digits of the model's canonical checksum.
    std::string model_id() const;

    bool operator==(const GbdtModel&) const = default;
};

// Newton boosting with logistic loss and exact greedy splits.
// Throws EmptyDataset, DimensionMismatch, NonFiniteInput, InvalidLabel,
// InvalidHyperparams.
GbdtModel train(std::span<const LabeledExample> examples, const GbdtHyperparams& hp,
                const FeatureSchema& schema);
GbdtModel train(std::span<const LabeledExample> examples, const GbdtHyperparams& hp);

// Raw margin: base_score + eta * sum of tree outputs.
double predict_margin(const GbdtModel& model, std::span<const double> x);

// Strictly inside (0, 1) for finite input. Throws DimensionMismatch or
// NonFiniteInput.
double predict_proba(const GbdtModel& model, const FusedVector& vector);

// Same, after checking the caller's schema fingerprint; throws SchemaMismatch.
double predict_proba(const GbdtModel& model, const FusedVector& vector,
                     std::string_view expected_fingerprint);

double sigmoid(double margin);

// Versioned JSON document with a trailing integrity checksum.
inline constexpr int kModelFormatVersion = 1;

std::string serialize_model(const GbdtModel& model);
GbdtModel deserialize_model(std::string_view text);
void save_model(const GbdtModel& model, const std::filesystem::path& path);
GbdtModel load_model(const std::filesystem::path& path);

struct EvalMetrics {
    double accuracy = 0.0;
    double precision = 0.0;
    double recall = 0.0;
    double auc = 0.0;
    std::size_t tp = 0, fp = 0, tn = 0, fn = 0;

    std::size_t total() const { return tp + fp + tn + fn; }
};

// Positive prediction iff score > threshold. AUC is the Mann-Whitney rank
// statistic with ties counted as one half; 0.5 when a class is absent.
EvalMetrics evaluate_scores(std::span<const double> scores, std::span<const int> labels,
                            double threshold);
EvalMetrics evaluate(const GbdtModel& model, std::span<const LabeledExample> examples,
                     double threshold);

}  // namespace mgate
