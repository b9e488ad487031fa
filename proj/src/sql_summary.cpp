#include <algorithm>
#include <string>
#include <string_view>
#include <vector>

#include "metric_gate/errors.hpp"
#include "metric_gate/sql_frontend.hpp"
#include "sql_ast.hpp"

namespace mgate {
namespace {

using sql::Expr;
using sql::ExprKind;
using sql::Query;
using sql::SelectCore;

void add_unique(std::vector<std::string>& list, std::string_view value) {
    if (std::find(list.begin(), list.end(), value) == list.end()) list.emplace_back(value);
}

bool is_aggregate(std::string_view fn) {
    return fn == "COUNT" || fn == "SUM" || fn == "AVG" || fn == "MIN" || fn == "MAX";
}

// Which summary list column references found in an expression land in.
enum class Sink { None, Select, Where, GroupBy };

class Summarizer {
public:
    QuerySummary run(const Query& q) {
        walk_query(q, 0);
        out_.reduced_confidence =
            out_.cte_count > 0 || out_.window_fn_count > 0 || out_.subquery_depth > 1;
        if (out_.tables.empty()) {
            throw UnsupportedStatement("query reads no base table; nothing to evaluate");
        }
        return std::move(out_);
    }

private:
    void walk_query(const Query& q, std::size_t depth) {
        out_.subquery_depth = std::max(out_.subquery_depth, depth);
        scopes_.emplace_back();
        for (const auto& cte : q.ctes) {
            ++out_.cte_count;
            if (q.recursive) scopes_.back().push_back(cte.name);
            walk_query(*cte.body, depth);
            if (!q.recursive) scopes_.back().push_back(cte.name);
        }
        for (const auto& branch : q.branches) {
            if (branch.core) {
                walk_core(*branch.core, depth);
            } else {
                walk_query(*branch.nested, depth);
            }
        }
        for (const auto& e : q.order_by) visit(e, Sink::None, depth, false);
        if (q.limit) visit(*q.limit, Sink::None, depth, false);
        if (q.offset) visit(*q.offset, Sink::None, depth, false);
        scopes_.pop_back();
    }

    bool is_cte_name(std::string_view name) const {
        for (const auto& scope : scopes_) {
            if (std::find(scope.begin(), scope.end(), name) != scope.end()) return true;
        }
        return false;
    }

    void walk_table(const sql::TableRef& ref, std::size_t depth) {
        if (ref.subquery) {
            walk_query(*ref.subquery, depth + 1);
        } else if (ref.nested) {
            walk_from(*ref.nested, depth);
        } else if (!ref.name.empty()) {
            if (!is_cte_name(ref.name)) add_unique(out_.tables, ref.name);
        }
        for (const auto& arg : ref.function_args) visit(arg, Sink::None, depth, false);
    }

    void walk_from(const sql::FromItem& item, std::size_t depth) {
        walk_table(item.first, depth);
        for (const auto& join : item.joins) {
            ++out_.join_count;
            walk_table(join.right, depth);
            if (join.condition) visit(*join.condition, Sink::None, depth, false);
        }
    }

    void walk_core(const SelectCore& core, std::size_t depth) {
        if (core.from.size() > 1) out_.join_count += core.from.size() - 1;
        for (const auto& item : core.from) walk_from(item, depth);

        for (const auto& item : core.items) visit(item.expr, Sink::Select, depth, false);
        if (core.where) visit(*core.where, Sink::Where, depth, false);
        for (const auto& g : core.group_by) group_element(core, g, depth);
        if (core.having) visit(*core.having, Sink::Where, depth, false);
        for (const auto& w : core.named_windows) window(w, depth);
    }

    // GROUP BY ordinals and output aliases resolve against the select list:
    // a bare column yields its name, anything else the synthetic expr_<k>.
    void group_element(const SelectCore& core, const Expr& g, std::size_t depth) {
        if (g.kind == ExprKind::Literal && g.integer_literal) {
            const auto k = std::stoull(g.name.size() > 18 ? std::string("0") : g.name);
            if (k < 1 || k > core.items.size()) {
                throw SyntaxError("GROUP BY position " + g.name + " is not in select list",
                                  g.offset);
            }
            add_group_from_item(core.items[k - 1], k);
            return;
        }
        if (g.kind == ExprKind::Column && g.qualifier.empty()) {
            for (std::size_t i = 0; i < core.items.size(); ++i) {
                const auto& item = core.items[i];
                if (item.alias == g.name) {
                    add_group_from_item(item, i + 1);
                    return;
                }
            }
        }
        if (g.kind == ExprKind::Function &&
            (g.name == "ROLLUP" || g.name == "CUBE" || g.name == "GROUPING SETS" ||
             g.name == "()")) {
            for (const auto& child : g.children) group_element(core, child, depth);
            return;
        }
        visit(g, Sink::GroupBy, depth, false);
    }

    void add_group_from_item(const sql::SelectItem& item, std::size_t k) {
        if (item.expr.kind == ExprKind::Column) {
            add_unique(out_.group_by_columns, item.expr.name);
        } else {
            add_unique(out_.group_by_columns, "expr_" + std::to_string(k));
        }
    }

    void window(const sql::WindowSpec& w, std::size_t depth) {
        for (const auto& e : w.partition_by) visit(e, Sink::Select, depth, false);
        for (const auto& e : w.order_by) visit(e, Sink::None, depth, false);
    }

    void record_column(std::string_view name, Sink sink, bool in_aggregate) {
        switch (sink) {
        case Sink::Select:
            if (!in_aggregate) add_unique(out_.select_columns, name);
            break;
        case Sink::Where: add_unique(out_.where_columns, name); break;
        case Sink::GroupBy: add_unique(out_.group_by_columns, name); break;
        case Sink::None: break;
        }
    }

    void visit(const Expr& e, Sink sink, std::size_t depth, bool in_aggregate) {
        switch (e.kind) {
        case ExprKind::Column:
            record_column(e.name, sink, in_aggregate);
            return;
        case ExprKind::Star:
            if (sink == Sink::Select) record_column(kStarColumn, sink, in_aggregate);
            return;
        case ExprKind::Literal:
            return;
        case ExprKind::Subquery:
            walk_query(*e.subquery, depth + 1);
            return;
        case ExprKind::Function: {
            const bool aggregate = is_aggregate(e.name);
            if (aggregate) add_unique(out_.aggregate_functions, e.name);
            const bool args_aggregated = in_aggregate || aggregate;
            for (const auto& child : e.children) visit(child, sink, depth, args_aggregated);
            if (e.filter) visit(*e.filter, Sink::Where, depth, false);
            if (e.window) {
                ++out_.window_fn_count;
                window(*e.window, depth);
            }
            return;
        }
        case ExprKind::Compound:
            for (const auto& child : e.children) visit(child, sink, depth, in_aggregate);
            return;
        }
    }

    QuerySummary out_;
    std::vector<std::vector<std::string>> scopes_;
};

}  // namespace

QuerySummary parse_sql(std::string_view query_text) {
    const Query q = sql::parse_statement(query_text);
    return Summarizer().run(q);
}

}  // namespace mgate
