#include "metric_gate/explain.hpp"

#include <array>

namespace mgate {
namespace {

constexpr std::array<RuleInfo, 7> kRules = {{
    {"R_ZIP",
     "ZIP code is a quasi-identifier and may expose individual locations if group size is small."},
    {"R_DOB", "Date of birth in grouping can uniquely identify individuals."},
    {"R_HEALTH_COMBO",
     "Grouping by gender and medical code may leak health-related sensitive segments."},
    {"R_SMALL_GROUPS",
     "Metric groups by multiple attributes including sensitive fields; group sizes could be too "
     "small."},
    {"R_SENSITIVE_JOIN", "Sensitive grouping combined with multiple joins increases linkage risk."},
    {"R_OK_NOTE",
     "While a sensitive attribute is grouped, group sizes are likely sufficient to prevent "
     "leakage."},
    {kFallbackCode,
     "Risk model flagged this query; no specific template rule matched — review grouping "
     "granularity."},
}};

enum RuleIndex { kZip, kDob, kHealthCombo, kSmallGroups, kSensitiveJoin, kOkNote, kFallback };

RiskReason make_reason(RuleIndex rule, std::vector<std::string> columns,
                       std::optional<Category> category = std::nullopt) {
    return RiskReason{std::string(kRules[rule].code), std::string(kRules[rule].message),
                      std::move(columns), category};
}

}  // namespace

std::string_view status_name(Status s) { return s == Status::Blocked ? "BLOCKED" : "APPROVED"; }

std::span<const RuleInfo> rule_table() { return kRules; }

RiskReason fallback_reason() { return make_reason(kFallback, {}); }

std::vector<RiskReason> match_rules(const QuerySummary& summary, const SyntacticFeatures& features,
                                    const SensitiveLexicon& lexicon) {
    auto grouped = [&](std::initializer_list<Category> wanted) {
        std::vector<std::string> cols;
        for (const auto& col : summary.group_by_columns) {
            const auto c = lexicon.classify(col);
            if (!c) continue;
            for (auto w : wanted) {
                if (*c == w) cols.push_back(col);
            }
        }
        return cols;
    };
    auto sensitive_grouped = [&] {
        std::vector<std::string> cols;
        for (const auto& col : summary.group_by_columns) {
            if (lexicon.classify(col)) cols.push_back(col);
        }
        return cols;
    };

    const double group_count = features[kGroupByCount];
    const double sensitive_groups = features[kSensitiveGroupByCount];
    const double joins = features[kJoinCount];

    std::vector<RiskReason> out;
    if (features.groups_by(Category::Zip)) {
        out.push_back(make_reason(kZip, grouped({Category::Zip}), Category::Zip));
    }
    if (features.groups_by(Category::Dob)) {
        out.push_back(make_reason(kDob, grouped({Category::Dob}), Category::Dob));
    }
    if (features.groups_by(Category::Gender) && features.groups_by(Category::Diagnosis)) {
        out.push_back(make_reason(kHealthCombo, grouped({Category::Gender, Category::Diagnosis})));
    }
    if (group_count >= 3 && sensitive_groups >= 1) {
        out.push_back(make_reason(kSmallGroups, summary.group_by_columns));
    }
    if (sensitive_groups >= 1 && joins >= 2) {
        out.push_back(make_reason(kSensitiveJoin, sensitive_grouped()));
    }
    if (sensitive_groups >= 1 && out.empty()) {
        out.push_back(make_reason(kOkNote, sensitive_grouped()));
    }
    return out;
}

std::string render_explanation(std::span<const RiskReason> reasons, Status status) {
    if (reasons.empty()) {
        return status == Status::Blocked ? std::string(kRules[kFallback].message) : std::string();
    }
    std::string out;
    for (const auto& r : reasons) {
        if (!out.empty()) out.push_back(' ');
        out += r.message;
    }
    return out;
}

}  // namespace mgate
