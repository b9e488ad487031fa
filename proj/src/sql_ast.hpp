#pragma once

#include <cstddef>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace mgate::sql {

struct Query;
struct FromItem;

enum class ExprKind {
    Column,    // [qualifier.]name
    Star,      // * or qualifier.*
    Literal,
    Function,  // name(args) [FILTER (WHERE ...)] [OVER ...]
    Subquery,  // scalar, IN, EXISTS, ANY/ALL
    Compound,  // operators, CASE, BETWEEN, CAST, lists: only children matter
};

struct Expr;

struct WindowSpec {
    std::vector<Expr> partition_by;
    std::vector<Expr> order_by;
};

struct Expr {
    ExprKind kind = ExprKind::Compound;
    std::size_t offset = 0;
    std::string name;       // Column/Function name, Literal text
    std::string qualifier;  // Column/Star qualifier (dotted)
    bool integer_literal = false;
    bool star_arg = false;  // COUNT(*)
    std::vector<Expr> children;
    std::shared_ptr<const Query> subquery;
    std::shared_ptr<const Expr> filter;
    std::shared_ptr<const WindowSpec> window;  // set iff OVER (...) or OVER name
};

struct SelectItem {
    Expr expr;
    std::string alias;
};

struct TableRef {
    std::string name;  // base table (dotted, lowercase); empty for derived
    std::shared_ptr<const Query> subquery;
    std::shared_ptr<const FromItem> nested;  // parenthesized join
    std::vector<Expr> function_args;         // table-valued function
    std::string alias;
};

struct JoinClause {
    TableRef right;
    std::optional<Expr> condition;
};

struct FromItem {
    TableRef first;
    std::vector<JoinClause> joins;
};

struct SelectCore {
    std::vector<SelectItem> items;
    std::vector<FromItem> from;  // comma separated
    std::optional<Expr> where;
    std::vector<Expr> group_by;
    std::optional<Expr> having;
    std::vector<WindowSpec> named_windows;
};

// One arm of a set operation: either a plain SELECT core or a parenthesized
// query at the same nesting level.
struct SetBranch {
    std::optional<SelectCore> core;
    std::shared_ptr<const Query> nested;
};

struct Cte {
    std::string name;
    std::shared_ptr<const Query> body;
};

struct Query {
    bool recursive = false;
    std::vector<Cte> ctes;
    std::vector<SetBranch> branches;
    std::vector<Expr> order_by;
    std::optional<Expr> limit;
    std::optional<Expr> offset;
};

// Throws SyntaxError / UnsupportedStatement.
Query parse_statement(std::string_view text);

}  // namespace mgate::sql
