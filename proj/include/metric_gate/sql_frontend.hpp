#pragma once

#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

namespace mgate {

// Structural digest of one SELECT statement. Facts from CTE bodies and
// subqueries are folded into the single outermost summary.
struct QuerySummary {
    std::vector<std::string> tables;              // deduplicated, lowercase
    std::size_t join_count = 0;                   // JOIN operators + comma-join pairs
    std::vector<std::string> group_by_columns;    // qualifier stripped
    std::vector<std::string> select_columns;      // non-aggregate projections; "<star>" for *
    std::vector<std::string> aggregate_functions; // COUNT, SUM, AVG, MIN, MAX
    std::vector<std::string> where_columns;       // WHERE and HAVING references
    std::size_t subquery_depth = 0;
    std::size_t cte_count = 0;
    std::size_t window_fn_count = 0;
    bool reduced_confidence = false;

    bool operator==(const QuerySummary&) const = default;
};

inline constexpr std::string_view kStarColumn = "<star>";

// Parses a single SELECT statement (PostgreSQL-flavoured ANSI SQL).
// Throws SyntaxError (with byte offset) or UnsupportedStatement for
// INSERT/UPDATE/DELETE/DDL and other non-query statements.
QuerySummary parse_sql(std::string_view query_text);

struct NormalizedTokens {
    std::vector<std::string> tokens;

    // Tokens joined by single spaces.
    std::string detokenized() const;

    bool operator==(const NormalizedTokens&) const = default;
};

inline constexpr std::string_view kStringPlaceholder = "<str>";
inline constexpr std::string_view kNumberPlaceholder = "<num>";

// Lowercased token stream with string literals masked to "<str>" and numeric
// literals to "<num>". Comments are dropped. Never throws.
NormalizedTokens normalize_query(std::string_view query_text);

}  // namespace mgate
