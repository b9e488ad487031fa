#include <algorithm>
#include <bit>
#include <cmath>
#include <limits>
#include <numeric>

#include "metric_gate/errors.hpp"
#include "metric_gate/gbdt.hpp"
#include "metric_gate/hashing.hpp"

namespace mgate {
namespace {

// Gains are compared with a relative tolerance so that splits which are equal
// in exact arithmetic tie-break by (feature, threshold) instead of by rounding
// noise in the prefix sums.
constexpr double kGainTolerance = 1e-12;
constexpr double kBaseRateClamp = 1e-4;

double score_term(double g, double h, double lambda) {
    const double denom = h + lambda;
    return denom > 0.0 ? g * g / denom : 0.0;
}

double leaf_weight(double g, double h, double lambda) {
    const double denom = h + lambda;
    return denom > 0.0 ? -g / denom : 0.0;
}

void hash_u64(std::uint64_t& state, std::uint64_t v) {
    for (int i = 0; i < 8; ++i) {
        state ^= (v >> (8 * i)) & 0xFFU;
        state *= kFnvPrime;
    }
}

std::string corpus_checksum(std::span<const LabeledExample> examples) {
    std::uint64_t h = kFnvOffsetBasis;
    for (const auto& ex : examples) {
        h = fnv1a64(ex.query_id, h);
        hash_u64(h, static_cast<std::uint64_t>(ex.label));
        for (double v : ex.vector.values) hash_u64(h, std::bit_cast<std::uint64_t>(v));
    }
    return to_hex64(h);
}

class TreeBuilder {
public:
    TreeBuilder(const std::vector<std::vector<double>>& columns,
                const std::vector<std::vector<std::uint32_t>>& sorted, const GbdtHyperparams& hp)
        : columns_(columns), sorted_(sorted), hp_(hp), in_node_(columns.empty() ? 0 : columns[0].size()) {}

    Tree build(const std::vector<double>& grad, const std::vector<double>& hess) {
        grad_ = &grad;
        hess_ = &hess;
        tree_ = Tree{};
        std::vector<std::uint32_t> all(grad.size());
        std::iota(all.begin(), all.end(), 0U);
        grow(all, 0);
        return std::move(tree_);
    }

private:
    struct Split {
        int feature = -1;
        double threshold = 0.0;
        double gain = 0.0;
    };

    int grow(const std::vector<std::uint32_t>& members, int depth) {
        const int id = static_cast<int>(tree_.nodes.size());
        tree_.nodes.emplace_back();

        double g = 0.0;
        double h = 0.0;
        for (auto i : members) {
            g += (*grad_)[i];
            h += (*hess_)[i];
        }

        Split best;
        if (depth < hp_.max_depth && members.size() >= 2) best = find_split(members, g, h);

        TreeNode node;
        node.sum_grad = g;
        node.sum_hess = h;
        if (best.feature < 0) {
            node.weight = leaf_weight(g, h, hp_.l2_lambda);
            tree_.nodes[static_cast<std::size_t>(id)] = node;
            return id;
        }

        std::vector<std::uint32_t> left;
        std::vector<std::uint32_t> right;
        const auto& col = columns_[static_cast<std::size_t>(best.feature)];
        for (auto i : members) (col[i] < best.threshold ? left : right).push_back(i);

        node.feature = best.feature;
        node.threshold = best.threshold;
        node.gain = best.gain;
        tree_.nodes[static_cast<std::size_t>(id)] = node;
        const int l = grow(left, depth + 1);
        const int r = grow(right, depth + 1);
        tree_.nodes[static_cast<std::size_t>(id)].left = l;
        tree_.nodes[static_cast<std::size_t>(id)].right = r;
        return id;
    }

    Split find_split(const std::vector<std::uint32_t>& members, double g, double h) {
        for (auto i : members) in_node_[i] = 1;
        const double lambda = hp_.l2_lambda;
        const double parent = score_term(g, h, lambda);
        const double tol = kGainTolerance * std::max(1.0, std::abs(parent));

        Split best;
        for (std::size_t f = 0; f < columns_.size(); ++f) {
            const auto& col = columns_[f];
            double gl = 0.0;
            double hl = 0.0;
            std::int64_t prev = -1;
            for (auto i : sorted_[f]) {
                if (!in_node_[i]) continue;
                if (prev >= 0 && col[static_cast<std::size_t>(prev)] < col[i]) {
                    const double gr = g - gl;
                    const double hr = h - hl;
                    if (hl >= hp_.min_child_weight && hr >= hp_.min_child_weight) {
                        const double gain = 0.5 * (score_term(gl, hl, lambda) +
                                                   score_term(gr, hr, lambda) - parent) -
                                            hp_.gamma;
                        if (gain > tol && (best.feature < 0 || gain > best.gain + tol)) {
                            best.feature = static_cast<int>(f);
                            best.threshold = (col[static_cast<std::size_t>(prev)] + col[i]) / 2.0;
                            best.gain = gain;
                        }
                    }
                }
                gl += (*grad_)[i];
                hl += (*hess_)[i];
                prev = i;
            }
        }
        for (auto i : members) in_node_[i] = 0;
        return best;
    }

    const std::vector<std::vector<double>>& columns_;
    const std::vector<std::vector<std::uint32_t>>& sorted_;
    const GbdtHyperparams& hp_;
    std::vector<char> in_node_;
    const std::vector<double>* grad_ = nullptr;
    const std::vector<double>* hess_ = nullptr;
    Tree tree_;
};

}  // namespace

void GbdtHyperparams::validate() const {
    if (rounds < 1) throw InvalidHyperparams("rounds must be >= 1");
    if (max_depth < 1) throw InvalidHyperparams("max_depth must be >= 1");
    if (!(learning_rate > 0.0 && learning_rate <= 1.0)) {
        throw InvalidHyperparams("learning_rate must be in (0, 1]");
    }
    if (!(l2_lambda >= 0.0) || !std::isfinite(l2_lambda)) throw InvalidHyperparams("lambda must be >= 0");
    if (!(gamma >= 0.0) || !std::isfinite(gamma)) throw InvalidHyperparams("gamma must be >= 0");
    if (!(min_child_weight >= 0.0) || !std::isfinite(min_child_weight)) {
        throw InvalidHyperparams("min_child_weight must be >= 0");
    }
}

double sigmoid(double margin) {
    double p;
    if (margin >= 0.0) {
        p = 1.0 / (1.0 + std::exp(-margin));
    } else {
        const double e = std::exp(margin);
        p = e / (1.0 + e);
    }
    // keep the open interval even where exp saturates
    return std::clamp(p, std::numeric_limits<double>::min(), std::nextafter(1.0, 0.0));
}

GbdtModel train(std::span<const LabeledExample> examples, const GbdtHyperparams& hp) {
    if (examples.empty()) throw EmptyDataset("no training examples");
    return train(examples, hp, FeatureSchema::raw(examples.front().vector.values.size()));
}

GbdtModel train(std::span<const LabeledExample> examples, const GbdtHyperparams& hp,
                const FeatureSchema& schema) {
    hp.validate();
    if (examples.size() < 2) throw EmptyDataset("training needs at least 2 examples");

    const std::size_t n = examples.size();
    const std::size_t m = schema.feature_count;
    std::vector<std::vector<double>> columns(m, std::vector<double>(n));
    std::vector<double> labels(n);
    double positives = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const auto& ex = examples[i];
        if (ex.vector.values.size() != m) {
            throw DimensionMismatch("example '" + ex.query_id + "' has " +
                                    std::to_string(ex.vector.values.size()) +
                                    " features, schema expects " + std::to_string(m));
        }
        if (ex.label != 0 && ex.label != 1) {
            throw InvalidLabel("example '" + ex.query_id + "' has label " + std::to_string(ex.label));
        }
        for (std::size_t f = 0; f < m; ++f) {
            const double v = ex.vector.values[f];
            if (!std::isfinite(v)) {
                throw NonFiniteInput("example '" + ex.query_id + "' feature " + std::to_string(f));
            }
            columns[f][i] = v;
        }
        labels[i] = ex.label;
        positives += ex.label;
    }

    std::vector<std::vector<std::uint32_t>> sorted(m);
    for (std::size_t f = 0; f < m; ++f) {
        auto& order = sorted[f];
        order.resize(n);
        std::iota(order.begin(), order.end(), 0U);
        const auto& col = columns[f];
        std::stable_sort(order.begin(), order.end(),
                         [&](std::uint32_t a, std::uint32_t b) { return col[a] < col[b]; });
    }

    GbdtModel model;
    model.schema = schema;
    const double rate = std::clamp(positives / static_cast<double>(n), kBaseRateClamp,
                                   1.0 - kBaseRateClamp);
    model.base_score = std::log(rate / (1.0 - rate));
    model.meta.hyperparams = hp;
    model.meta.example_count = n;
    model.meta.corpus_checksum = corpus_checksum(examples);

    std::vector<double> margin(n, model.base_score);
    std::vector<double> grad(n);
    std::vector<double> hess(n);
    std::vector<double> row(m);
    TreeBuilder builder(columns, sorted, hp);

    for (int round = 0; round < hp.rounds; ++round) {
        for (std::size_t i = 0; i < n; ++i) {
            const double p = sigmoid(margin[i]);
            grad[i] = p - labels[i];
            hess[i] = p * (1.0 - p);
        }
        Tree tree = builder.build(grad, hess);
        for (std::size_t i = 0; i < n; ++i) {
            for (std::size_t f = 0; f < m; ++f) row[f] = columns[f][i];
            margin[i] += hp.learning_rate * tree.predict(row);
        }
        model.trees.push_back(std::move(tree));
    }
    return model;
}

double Tree::predict(std::span<const double> x) const {
    if (nodes.empty()) return 0.0;
    std::size_t i = 0;
    while (!nodes[i].is_leaf()) {
        const auto& node = nodes[i];
        i = static_cast<std::size_t>(x[static_cast<std::size_t>(node.feature)] < node.threshold
                                         ? node.left
                                         : node.right);
    }
    return nodes[i].weight;
}

std::size_t Tree::depth() const {
    if (nodes.empty()) return 0;
    std::size_t deepest = 0;
    std::vector<std::pair<std::size_t, std::size_t>> stack{{0, 0}};
    while (!stack.empty()) {
        const auto [i, d] = stack.back();
        stack.pop_back();
        deepest = std::max(deepest, d);
        const auto& node = nodes[i];
        if (!node.is_leaf()) {
            stack.emplace_back(static_cast<std::size_t>(node.left), d + 1);
            stack.emplace_back(static_cast<std::size_t>(node.right), d + 1);
        }
    }
    return deepest;
}

double predict_margin(const GbdtModel& model, std::span<const double> x) {
    double margin = model.base_score;
    const double eta = model.meta.hyperparams.learning_rate;
    for (const auto& tree : model.trees) margin += eta * tree.predict(x);
    return margin;
}

double predict_proba(const GbdtModel& model, const FusedVector& vector) {
    if (vector.values.size() != model.schema.feature_count) {
        throw DimensionMismatch("vector has " + std::to_string(vector.values.size()) +
                                " features, model expects " +
                                std::to_string(model.schema.feature_count));
    }
    for (double v : vector.values) {
        if (!std::isfinite(v)) throw NonFiniteInput("non-finite feature value");
    }
    return sigmoid(predict_margin(model, vector.values));
}

double predict_proba(const GbdtModel& model, const FusedVector& vector,
                     std::string_view expected_fingerprint) {
    if (model.schema.fingerprint != expected_fingerprint) {
        throw SchemaMismatch("model schema " + model.schema.fingerprint +
                             " does not match the active configuration " +
                             std::string(expected_fingerprint));
    }
    return predict_proba(model, vector);
}

}  // namespace mgate
