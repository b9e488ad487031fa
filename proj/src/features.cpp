#include "metric_gate/features.hpp"

#include "metric_gate/errors.hpp"

namespace mgate {

SyntacticFeatures extract_features(const QuerySummary& summary, const SensitiveLexicon& lexicon) {
    SyntacticFeatures f;
    auto& s = f.slots;
    s[kGroupByCount] = static_cast<double>(summary.group_by_columns.size());
    s[kJoinCount] = static_cast<double>(summary.join_count);
    s[kTableCount] = static_cast<double>(summary.tables.size());
    s[kSelectColumnCount] = static_cast<double>(summary.select_columns.size());
    s[kSubqueryDepth] = static_cast<double>(summary.subquery_depth);
    s[kCteCount] = static_cast<double>(summary.cte_count);
    s[kWindowFnCount] = static_cast<double>(summary.window_fn_count);
    s[kHasAggregate] = summary.aggregate_functions.empty() ? 0.0 : 1.0;

    for (const auto& col : summary.group_by_columns) {
        if (auto c = lexicon.classify(col)) s[category_slot(*c)] = 1.0;
    }
    double grouped = 0.0;
    for (auto c : kAllCategories) grouped += s[category_slot(c)];
    s[kSensitiveGroupByCount] = grouped;

    std::array<bool, kCategoryCount> projected{};
    for (const auto* list : {&summary.select_columns, &summary.where_columns}) {
        for (const auto& col : *list) {
            if (auto c = lexicon.classify(col)) projected[static_cast<std::size_t>(*c)] = true;
        }
    }
    double projected_count = 0.0;
    for (bool p : projected) projected_count += p ? 1.0 : 0.0;
    s[kSensitiveSelectCount] = projected_count;
    return f;
}

FusedVector fuse(const EmbeddingVector& embedding, const SyntacticFeatures& features,
                 std::size_t expected_dim) {
    if (embedding.values.size() != expected_dim) {
        throw DimensionMismatch("embedding has dimension " +
                                std::to_string(embedding.values.size()) + ", expected " +
                                std::to_string(expected_dim));
    }
    FusedVector out;
    out.values.reserve(expected_dim + kSyntacticSlots);
    out.values.insert(out.values.end(), embedding.values.begin(), embedding.values.end());
    out.values.insert(out.values.end(), features.slots.begin(), features.slots.end());
    return out;
}

}  // namespace mgate
