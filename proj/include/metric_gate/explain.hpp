#pragma once

#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "metric_gate/features.hpp"
#include "metric_gate/lexicon.hpp"
#include "metric_gate/sql_frontend.hpp"

namespace mgate {

enum class Status { Approved, Blocked };

std::string_view status_name(Status s);  // "APPROVED" / "BLOCKED"

struct RiskReason {
    std::string code;
    std::string message;
    std::vector<std::string> columns;
    std::optional<Category> category;

    bool operator==(const RiskReason&) const = default;
};

struct RuleInfo {
    std::string_view code;
    std::string_view message;
};

// Registered rules in evaluation order. Codes are stable identifiers that
// report consumers may key on. The last entry is the fallback attached to a
// blocked query when no other rule matched.
std::span<const RuleInfo> rule_table();

inline constexpr std::string_view kFallbackCode = "R_MODEL_FLAG";

// Evaluates the rule table against the query's structure. Independent of the
// classifier score. The lexicon is needed to name the implicated columns.
std::vector<RiskReason> match_rules(const QuerySummary& summary, const SyntacticFeatures& features,
                                    const SensitiveLexicon& lexicon);

RiskReason fallback_reason();

// Messages joined by single spaces in rule-table order. BLOCKED with no
// reasons yields the fallback sentence; APPROVED with no reasons yields "".
std::string render_explanation(std::span<const RiskReason> reasons, Status status);

}  // namespace mgate
