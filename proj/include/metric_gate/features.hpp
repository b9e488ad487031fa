#pragma once

#include <array>
#include <cstddef>
#include <string_view>
#include <vector>

#include "metric_gate/embedder.hpp"
#include "metric_gate/lexicon.hpp"
#include "metric_gate/sql_frontend.hpp"

namespace mgate {

inline constexpr std::size_t kSyntacticSlots = 17;

enum Slot : std::size_t {
    kGroupByCount = 0,
    kJoinCount,
    kTableCount,
    kSelectColumnCount,
    kSubqueryDepth,
    kCteCount,
    kWindowFnCount,
    kHasAggregate,
    kSensitiveGroupByCount,
    kSensitiveSelectCount,
    kFirstCategoryFlag,  // f10..f16, one per Category in canonical order
};

// Slot names, in slot order, as they appear in reports and the model schema.
inline constexpr std::array<std::string_view, kSyntacticSlots> kSlotNames = {
    "group_by_count",      "join_count",          "table_count",
    "select_column_count", "subquery_depth",      "cte_count",
    "window_fn_count",     "has_aggregate",       "sensitive_groupby_count",
    "sensitive_select_count", "groupby_dob",      "groupby_gender",
    "groupby_zip",         "groupby_diagnosis",   "groupby_role",
    "groupby_name",        "groupby_national_id",
};

constexpr std::size_t category_slot(Category c) {
    return kFirstCategoryFlag + static_cast<std::size_t>(c);
}

struct SyntacticFeatures {
    std::array<double, kSyntacticSlots> slots{};

    double operator[](std::size_t i) const { return slots[i]; }
    bool groups_by(Category c) const { return slots[category_slot(c)] != 0.0; }

    bool operator==(const SyntacticFeatures&) const = default;
};

SyntacticFeatures extract_features(const QuerySummary& summary, const SensitiveLexicon& lexicon);

struct FusedVector {
    std::vector<double> values;
};

// Embedding in [0, D), syntactic slots in [D, D+17). No scaling.
// Throws DimensionMismatch if the embedding is not `expected_dim` long.
FusedVector fuse(const EmbeddingVector& embedding, const SyntacticFeatures& features,
                 std::size_t expected_dim);

inline FusedVector fuse(const EmbeddingVector& embedding, const SyntacticFeatures& features) {
    return fuse(embedding, features, embedding.values.size());
}

}  // namespace mgate
