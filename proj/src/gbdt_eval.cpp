#include <algorithm>
#include <numeric>
#include <vector>

#include "metric_gate/errors.hpp"
#include "metric_gate/gbdt.hpp"

namespace mgate {
namespace {

double ratio(std::size_t num, std::size_t den) {
    return den == 0 ? 0.0 : static_cast<double>(num) / static_cast<double>(den);
}

// Mann-Whitney U / (P * N) over sorted scores; tied groups share their
// average rank, which counts each tied positive/negative pair as one half.
double rank_auc(std::span<const double> scores, std::span<const int> labels) {
    const std::size_t n = scores.size();
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return scores[a] < scores[b]; });

    double positive_rank_sum = 0.0;
    std::size_t positives = 0;
    std::size_t i = 0;
    while (i < n) {
        std::size_t j = i;
        while (j < n && scores[order[j]] == scores[order[i]]) ++j;
        const double avg_rank = (static_cast<double>(i + 1) + static_cast<double>(j)) / 2.0;
        for (std::size_t k = i; k < j; ++k) {
            if (labels[order[k]] == 1) {
                positive_rank_sum += avg_rank;
                ++positives;
            }
        }
        i = j;
    }
    const std::size_t negatives = n - positives;
    if (positives == 0 || negatives == 0) return 0.5;
    const double p = static_cast<double>(positives);
    const double u = positive_rank_sum - p * (p + 1.0) / 2.0;
    return u / (p * static_cast<double>(negatives));
}

}  // namespace

EvalMetrics evaluate_scores(std::span<const double> scores, std::span<const int> labels,
                            double threshold) {
    if (scores.empty()) throw EmptyDataset("nothing to evaluate");
    if (scores.size() != labels.size()) throw DimensionMismatch("scores and labels differ in length");

    EvalMetrics m;
    for (std::size_t i = 0; i < scores.size(); ++i) {
        const bool predicted = scores[i] > threshold;
        const bool actual = labels[i] == 1;
        if (predicted && actual) ++m.tp;
        else if (predicted) ++m.fp;
        else if (actual) ++m.fn;
        else ++m.tn;
    }
    m.accuracy = ratio(m.tp + m.tn, m.total());
    m.precision = ratio(m.tp, m.tp + m.fp);
    m.recall = ratio(m.tp, m.tp + m.fn);
    m.auc = rank_auc(scores, labels);
    return m;
}

EvalMetrics evaluate(const GbdtModel& model, std::span<const LabeledExample> examples,
                     double threshold) {
    if (examples.empty()) throw EmptyDataset("nothing to evaluate");
    std::vector<double> scores;
    std::vector<int> labels;
    scores.reserve(examples.size());
    labels.reserve(examples.size());
    for (const auto& ex : examples) {
        scores.push_back(predict_proba(model, ex.vector));
        labels.push_back(ex.label);
    }
    return evaluate_scores(scores, labels, threshold);
}

}  // namespace mgate
