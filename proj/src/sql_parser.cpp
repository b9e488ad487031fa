// Recursive-descent parser for the SELECT subset of PostgreSQL-flavoured ANSI
// SQL: WITH [RECURSIVE], set operations, all join forms, derived tables,
// scalar/IN/EXISTS/ANY subqueries, window functions, GROUPING SETS / ROLLUP /
// CUBE, CASE, CAST, EXTRACT and `::` casts. Everything else is a SyntaxError.

#include "sql_ast.hpp"

#include <array>
#include <string_view>
#include <utility>

#include "metric_gate/errors.hpp"
#include "sql_lexer.hpp"

namespace mgate::sql {
namespace {

constexpr std::size_t kMaxNesting = 256;

// Words that terminate an expression or clause and therefore can never be an
// implicit alias or an unquoted column name.
bool is_reserved(std::string_view w) {
    static constexpr std::array<std::string_view, 52> kReserved = {
        "all",     "and",    "any",      "as",     "asc",     "between", "by",
        "case",    "cross",  "desc",     "distinct", "else",  "end",     "except",
        "exists",  "false",  "fetch",    "filter", "for",     "from",    "full",
        "group",   "having", "ilike",    "in",     "inner",   "intersect", "into",
        "is",      "join",   "lateral",  "left",   "like",    "limit",   "natural",
        "not",     "null",   "offset",   "on",     "or",      "order",   "outer",
        "over",    "right",  "select",   "then",   "true",    "union",   "using",
        "when",    "where",  "window",
    };
    for (auto r : kReserved) {
        if (r == w) return true;
    }
    return false;
}

bool is_unsupported_verb(std::string_view w) {
    static constexpr std::array<std::string_view, 27> kVerbs = {
        "insert", "update",  "delete",  "merge",   "upsert",  "replace",  "create",
        "drop",   "alter",   "truncate", "rename", "grant",   "revoke",   "copy",
        "call",   "exec",    "execute", "set",     "begin",   "commit",   "rollback",
        "vacuum", "explain", "show",    "use",     "values",  "table",
    };
    for (auto v : kVerbs) {
        if (v == w) return true;
    }
    return false;
}

class Parser {
public:
    explicit Parser(std::string_view text) : tokens_(lex_sql(text)) {
        for (const auto& t : tokens_) {
            if (t.unterminated) {
                throw SyntaxError(t.kind == TokenKind::String ? "unterminated string literal"
                                                              : "unterminated quoted identifier",
                                  t.offset);
            }
        }
    }

    Query statement() {
        const Token& first = peek();
        if (first.kind == TokenKind::End) throw SyntaxError("empty query", first.offset);
        if (first.kind == TokenKind::Word && is_unsupported_verb(first.text)) {
            throw UnsupportedStatement("only SELECT statements are evaluated; found " +
                                       upper(first.text));
        }
        if (!first.is_word("select") && !first.is_word("with") && !first.is_symbol("(")) {
            fail("expected SELECT");
        }
        Query q = query();
        while (accept_symbol(";")) {
        }
        if (peek().kind != TokenKind::End) {
            fail("unexpected trailing input (one statement per query)");
        }
        return q;
    }

private:
    // ---- token helpers -------------------------------------------------

    const Token& peek(std::size_t ahead = 0) const {
        const std::size_t i = pos_ + ahead;
        return i < tokens_.size() ? tokens_[i] : tokens_.back();
    }

    const Token& advance() {
        const Token& t = peek();
        if (pos_ < tokens_.size() - 1) ++pos_;
        return t;
    }

    bool accept_word(std::string_view w) {
        if (peek().is_word(w)) {
            advance();
            return true;
        }
        return false;
    }

    bool accept_symbol(std::string_view s) {
        if (peek().is_symbol(s)) {
            advance();
            return true;
        }
        return false;
    }

    void expect_word(std::string_view w) {
        if (!accept_word(w)) fail("expected " + upper(std::string(w)));
    }

    void expect_symbol(std::string_view s) {
        if (!accept_symbol(s)) fail("expected '" + std::string(s) + "'");
    }

    [[noreturn]] void fail(const std::string& what) const {
        const Token& t = peek();
        std::string found;
        switch (t.kind) {
        case TokenKind::End: found = "end of input"; break;
        case TokenKind::String: found = "string literal"; break;
        default: found = "'" + t.text + "'"; break;
        }
        throw SyntaxError(what + ", found " + found, t.offset);
    }

    static std::string upper(std::string s) {
        for (auto& c : s) {
            if (c >= 'a' && c <= 'z') c = static_cast<char>(c - 'a' + 'A');
        }
        return s;
    }

    bool at_identifier() const {
        const Token& t = peek();
        return t.kind == TokenKind::QuotedIdent ||
               (t.kind == TokenKind::Word && !is_reserved(t.text));
    }

    std::string identifier(const char* what) {
        if (!at_identifier()) fail(std::string("expected ") + what);
        return advance().text;
    }

    // True when the '(' at the cursor opens a query rather than an expression.
    bool paren_opens_query() const {
        std::size_t i = 0;
        while (peek(i).is_symbol("(")) ++i;
        return i > 0 && (peek(i).is_word("select") || peek(i).is_word("with"));
    }

    struct DepthGuard {
        explicit DepthGuard(Parser& p) : p_(p) {
            if (++p_.depth_ > kMaxNesting) p_.fail("nesting too deep");
        }
        ~DepthGuard() { --p_.depth_; }
        Parser& p_;
    };

    // ---- queries -------------------------------------------------------

    Query query() {
        DepthGuard guard(*this);
        Query q;
        if (accept_word("with")) {
            q.recursive = accept_word("recursive");
            do {
                Cte cte;
                cte.name = identifier("CTE name");
                if (accept_symbol("(")) {
                    do {
                        identifier("CTE column name");
                    } while (accept_symbol(","));
                    expect_symbol(")");
                }
                expect_word("as");
                if (accept_word("not")) expect_word("materialized");
                else accept_word("materialized");
                expect_symbol("(");
                cte.body = std::make_shared<Query>(query());
                expect_symbol(")");
                q.ctes.push_back(std::move(cte));
            } while (accept_symbol(","));
            if (peek().kind == TokenKind::Word && is_unsupported_verb(peek().text)) {
                throw UnsupportedStatement("only SELECT statements are evaluated; found " +
                                           upper(peek().text));
            }
        }

        q.branches.push_back(branch());
        while (peek().is_word("union") || peek().is_word("intersect") ||
               peek().is_word("except")) {
            advance();
            if (!accept_word("all")) accept_word("distinct");
            q.branches.push_back(branch());
        }

        if (accept_word("order")) {
            expect_word("by");
            q.order_by = order_list();
        }
        // LIMIT / OFFSET / FETCH in any order
        while (true) {
            if (accept_word("limit")) {
                if (!accept_word("all")) q.limit = expr();
            } else if (accept_word("offset")) {
                q.offset = expr();
                if (!accept_word("rows")) accept_word("row");
            } else if (accept_word("fetch")) {
                if (!accept_word("first")) expect_word("next");
                if (!peek().is_word("row") && !peek().is_word("rows")) q.limit = expr();
                if (!accept_word("rows")) expect_word("row");
                if (!accept_word("only")) {
                    expect_word("with");
                    expect_word("ties");
                }
            } else {
                break;
            }
        }
        return q;
    }

    SetBranch branch() {
        SetBranch b;
        if (peek().is_symbol("(")) {
            advance();
            b.nested = std::make_shared<Query>(query());
            expect_symbol(")");
            return b;
        }
        b.core = select_core();
        return b;
    }

    SelectCore select_core() {
        expect_word("select");
        SelectCore core;
        if (accept_word("distinct")) {
            if (accept_word("on")) {
                expect_symbol("(");
                expr_list();
                expect_symbol(")");
            }
        } else {
            accept_word("all");
        }

        do {
            core.items.push_back(select_item());
        } while (accept_symbol(","));

        if (peek().is_word("into")) {
            throw UnsupportedStatement("SELECT ... INTO creates a table and is not evaluated");
        }

        if (accept_word("from")) {
            do {
                core.from.push_back(from_item());
            } while (accept_symbol(","));
        }
        if (accept_word("where")) core.where = expr();
        if (accept_word("group")) {
            expect_word("by");
            if (!accept_word("all")) accept_word("distinct");
            do {
                core.group_by.push_back(grouping_element());
            } while (accept_symbol(","));
        }
        if (accept_word("having")) core.having = expr();
        if (accept_word("window")) {
            do {
                identifier("window name");
                expect_word("as");
                core.named_windows.push_back(window_spec_parens());
            } while (accept_symbol(","));
        }
        return core;
    }

    SelectItem select_item() {
        SelectItem item;
        if (peek().is_symbol("*")) {
            item.expr.kind = ExprKind::Star;
            item.expr.offset = advance().offset;
            return item;
        }
        item.expr = expr();
        if (accept_word("as")) {
            item.alias = identifier("alias");
        } else if (at_identifier()) {
            item.alias = advance().text;
        }
        return item;
    }

    FromItem from_item() {
        DepthGuard guard(*this);
        FromItem item;
        item.first = table_ref();
        while (true) {
            const bool natural = accept_word("natural");
            bool cross = false;
            bool typed = natural;
            if (accept_word("cross")) {
                cross = typed = true;
            } else if (accept_word("inner")) {
                typed = true;
            } else if (accept_word("left") || accept_word("right") || accept_word("full")) {
                accept_word("outer");
                typed = true;
            }
            if (!accept_word("join")) {
                if (typed) fail("expected JOIN");
                break;
            }
            JoinClause join;
            join.right = table_ref();
            if (!natural && !cross) {
                if (accept_word("on")) {
                    join.condition = expr();
                } else if (accept_word("using")) {
                    expect_symbol("(");
                    do {
                        identifier("column name");
                    } while (accept_symbol(","));
                    expect_symbol(")");
                } else {
                    fail("expected ON or USING");
                }
            }
            item.joins.push_back(std::move(join));
        }
        return item;
    }

    TableRef table_ref() {
        TableRef ref;
        accept_word("lateral");
        if (peek().is_symbol("(")) {
            if (paren_opens_query()) {
                advance();
                ref.subquery = std::make_shared<Query>(query());
                expect_symbol(")");
            } else {
                advance();
                ref.nested = std::make_shared<FromItem>(from_item());
                expect_symbol(")");
            }
        } else {
            accept_word("only");
            std::string name = identifier("table name");
            while (accept_symbol(".")) name += "." + identifier("table name");
            if (accept_symbol("(")) {
                if (!peek().is_symbol(")")) ref.function_args = expr_list();
                expect_symbol(")");
            } else {
                ref.name = std::move(name);
            }
        }
        if (accept_word("as")) {
            ref.alias = identifier("alias");
        } else if (at_identifier()) {
            ref.alias = advance().text;
        }
        if (!ref.alias.empty() && peek().is_symbol("(")) {
            // column alias list: t(a, b)
            advance();
            do {
                identifier("column alias");
            } while (accept_symbol(","));
            expect_symbol(")");
        }
        return ref;
    }

    Expr grouping_element() {
        const std::size_t at = peek().offset;
        auto make_group = [&](std::string name, std::vector<Expr> children) {
            Expr e;
            e.kind = ExprKind::Function;
            e.name = std::move(name);
            e.offset = at;
            e.children = std::move(children);
            return e;
        };
        if ((peek().is_word("rollup") || peek().is_word("cube")) && peek(1).is_symbol("(")) {
            std::string name = upper(advance().text);
            advance();
            std::vector<Expr> args;
            if (!peek().is_symbol(")")) args = expr_list();
            expect_symbol(")");
            return make_group(std::move(name), std::move(args));
        }
        if (peek().is_word("grouping") && peek(1).is_word("sets")) {
            advance();
            advance();
            expect_symbol("(");
            std::vector<Expr> sets;
            do {
                sets.push_back(grouping_element());
            } while (accept_symbol(","));
            expect_symbol(")");
            return make_group("GROUPING SETS", std::move(sets));
        }
        if (peek().is_symbol("(") && peek(1).is_symbol(")")) {
            advance();
            advance();
            return make_group("()", {});
        }
        return expr();
    }

    std::vector<Expr> order_list() {
        std::vector<Expr> out;
        do {
            out.push_back(expr());
            if (!accept_word("asc")) accept_word("desc");
            if (accept_word("nulls")) {
                if (!accept_word("first")) expect_word("last");
            }
        } while (accept_symbol(","));
        return out;
    }

    WindowSpec window_spec_parens() {
        expect_symbol("(");
        WindowSpec spec;
        if (at_identifier() && !peek().is_word("partition") && !peek().is_word("rows") &&
            !peek().is_word("range") && !peek().is_word("groups")) {
            advance();  // base window name
        }
        if (accept_word("partition")) {
            expect_word("by");
            spec.partition_by = expr_list();
        }
        if (accept_word("order")) {
            expect_word("by");
            spec.order_by = order_list();
        }
        if (peek().is_word("rows") || peek().is_word("range") || peek().is_word("groups")) {
            // frame clause: nothing in it matters for the summary
            int depth = 0;
            while (!(depth == 0 && peek().is_symbol(")"))) {
                if (peek().kind == TokenKind::End) fail("expected ')'");
                if (peek().is_symbol("(")) ++depth;
                if (peek().is_symbol(")")) --depth;
                advance();
            }
        }
        expect_symbol(")");
        return spec;
    }

    // ---- expressions ---------------------------------------------------

    std::vector<Expr> expr_list() {
        std::vector<Expr> out;
        do {
            out.push_back(expr());
        } while (accept_symbol(","));
        return out;
    }

    static Expr compound(std::size_t offset, std::vector<Expr> children) {
        Expr e;
        e.kind = ExprKind::Compound;
        e.offset = offset;
        e.children = std::move(children);
        return e;
    }

    Expr subquery_expr(std::size_t offset) {
        expect_symbol("(");
        Expr e;
        e.kind = ExprKind::Subquery;
        e.offset = offset;
        e.subquery = std::make_shared<Query>(query());
        expect_symbol(")");
        return e;
    }

    Expr expr() {
        DepthGuard guard(*this);
        return or_expr();
    }

    Expr or_expr() {
        Expr left = and_expr();
        while (peek().is_word("or")) {
            const auto at = advance().offset;
            left = compound(at, {std::move(left), and_expr()});
        }
        return left;
    }

    Expr and_expr() {
        Expr left = not_expr();
        while (peek().is_word("and")) {
            const auto at = advance().offset;
            left = compound(at, {std::move(left), not_expr()});
        }
        return left;
    }

    Expr not_expr() {
        if (peek().is_word("not")) {
            DepthGuard guard(*this);
            const auto at = advance().offset;
            return compound(at, {not_expr()});
        }
        return predicate();
    }

    static bool is_comparison(const Token& t) {
        if (t.kind != TokenKind::Symbol) return false;
        return t.text == "=" || t.text == "<>" || t.text == "!=" || t.text == "<" ||
               t.text == ">" || t.text == "<=" || t.text == ">=";
    }

    Expr predicate() {
        Expr left = additive();
        while (true) {
            const Token& t = peek();
            const std::size_t at = t.offset;
            if (is_comparison(t)) {
                advance();
                if ((peek().is_word("any") || peek().is_word("all") || peek().is_word("some")) &&
                    peek(1).is_symbol("(")) {
                    advance();
                    Expr rhs;
                    if (paren_opens_query()) {
                        rhs = subquery_expr(at);
                    } else {
                        expect_symbol("(");
                        rhs = compound(at, expr_list());
                        expect_symbol(")");
                    }
                    left = compound(at, {std::move(left), std::move(rhs)});
                } else {
                    left = compound(at, {std::move(left), additive()});
                }
                continue;
            }
            if (t.is_word("is")) {
                advance();
                accept_word("not");
                if (accept_word("distinct")) {
                    expect_word("from");
                    left = compound(at, {std::move(left), additive()});
                } else if (accept_word("null") || accept_word("true") || accept_word("false") ||
                           accept_word("unknown")) {
                    left = compound(at, {std::move(left)});
                } else {
                    fail("expected NULL, TRUE, FALSE or DISTINCT FROM after IS");
                }
                continue;
            }
            const bool negated = t.is_word("not") &&
                                 (peek(1).is_word("between") || peek(1).is_word("in") ||
                                  peek(1).is_word("like") || peek(1).is_word("ilike"));
            if (negated) advance();
            if (accept_word("between")) {
                accept_word("symmetric");
                Expr lo = additive();
                expect_word("and");
                Expr hi = additive();
                left = compound(at, {std::move(left), std::move(lo), std::move(hi)});
                continue;
            }
            if (accept_word("in")) {
                if (paren_opens_query()) {
                    left = compound(at, {std::move(left), subquery_expr(at)});
                } else {
                    expect_symbol("(");
                    std::vector<Expr> items{std::move(left)};
                    for (auto& e : expr_list()) items.push_back(std::move(e));
                    expect_symbol(")");
                    left = compound(at, std::move(items));
                }
                continue;
            }
            if (accept_word("like") || accept_word("ilike")) {
                std::vector<Expr> items{std::move(left), additive()};
                if (accept_word("escape")) items.push_back(additive());
                left = compound(at, std::move(items));
                continue;
            }
            if (negated) fail("expected BETWEEN, IN or LIKE after NOT");
            return left;
        }
    }

    Expr additive() {
        Expr left = multiplicative();
        while (peek().is_symbol("+") || peek().is_symbol("-") || peek().is_symbol("||")) {
            const auto at = advance().offset;
            left = compound(at, {std::move(left), multiplicative()});
        }
        return left;
    }

    Expr multiplicative() {
        Expr left = unary();
        while (peek().is_symbol("*") || peek().is_symbol("/") || peek().is_symbol("%")) {
            const auto at = advance().offset;
            left = compound(at, {std::move(left), unary()});
        }
        return left;
    }

    Expr unary() {
        if (peek().is_symbol("-") || peek().is_symbol("+")) {
            DepthGuard guard(*this);
            const auto at = advance().offset;
            return compound(at, {unary()});
        }
        Expr e = primary();
        while (accept_symbol("::")) type_name();
        return e;
    }

    void type_name() {
        identifier("type name");
        // multi-word types: double precision, character varying, timestamp with time zone
        while (peek().kind == TokenKind::Word &&
               (peek().is_word("precision") || peek().is_word("varying") ||
                (peek().is_word("with") && peek(1).is_word("time")) ||
                (peek().is_word("without") && peek(1).is_word("time")))) {
            if (accept_word("with") || accept_word("without")) {
                expect_word("time");
                expect_word("zone");
            } else {
                advance();
            }
        }
        if (accept_symbol("(")) {
            do {
                if (peek().kind != TokenKind::Number) fail("expected type modifier");
                advance();
            } while (accept_symbol(","));
            expect_symbol(")");
        }
        while (peek().is_symbol("[") && peek(1).is_symbol("]")) {
            advance();
            advance();
        }
    }

    Expr literal(const Token& t) {
        Expr e;
        e.kind = ExprKind::Literal;
        e.offset = t.offset;
        e.name = t.text;
        e.integer_literal = t.kind == TokenKind::Number &&
                            t.text.find_first_not_of("0123456789") == std::string::npos;
        return e;
    }

    Expr primary() {
        const Token& t = peek();
        const std::size_t at = t.offset;
        switch (t.kind) {
        case TokenKind::Number:
        case TokenKind::String:
        case TokenKind::Placeholder:
            return literal(advance());
        case TokenKind::QuotedIdent:
            return name_or_call();
        case TokenKind::End:
            fail("expected expression");
        case TokenKind::Symbol:
            if (t.text == "(") {
                if (paren_opens_query()) return subquery_expr(at);
                advance();
                std::vector<Expr> items = expr_list();
                expect_symbol(")");
                return items.size() == 1 ? std::move(items.front())
                                         : compound(at, std::move(items));
            }
            fail("expected expression");
        case TokenKind::Word:
            break;
        }

        if (t.is_word("null") || t.is_word("true") || t.is_word("false")) {
            return literal(advance());
        }
        if (t.is_word("case")) return case_expr();
        if (t.is_word("exists")) {
            advance();
            if (!paren_opens_query()) fail("expected subquery after EXISTS");
            return subquery_expr(at);
        }
        if (t.is_word("not")) {
            advance();
            return compound(at, {not_expr()});
        }
        if ((t.is_word("date") || t.is_word("time") || t.is_word("timestamp") ||
             t.is_word("interval")) &&
            (peek(1).kind == TokenKind::String || peek(1).kind == TokenKind::Placeholder)) {
            advance();
            Expr lit = literal(advance());
            if (t.is_word("interval")) {
                // optional unit qualifier: INTERVAL '1' DAY
                static constexpr std::array<std::string_view, 6> kUnits = {
                    "year", "month", "day", "hour", "minute", "second"};
                for (auto u : kUnits) {
                    if (accept_word(u)) break;
                }
            }
            return lit;
        }
        if (t.is_word("cast") && peek(1).is_symbol("(")) {
            advance();
            advance();
            Expr inner = expr();
            expect_word("as");
            type_name();
            expect_symbol(")");
            return compound(at, {std::move(inner)});
        }
        if (t.is_word("extract") && peek(1).is_symbol("(")) {
            advance();
            advance();
            if (peek().kind != TokenKind::Word && peek().kind != TokenKind::String) {
                fail("expected date field");
            }
            advance();
            expect_word("from");
            Expr inner = expr();
            expect_symbol(")");
            return compound(at, {std::move(inner)});
        }
        if ((t.is_word("left") || t.is_word("right")) && peek(1).is_symbol("(")) {
            return name_or_call();
        }
        if (is_reserved(t.text)) fail("expected expression");
        return name_or_call();
    }

    Expr case_expr() {
        const auto at = advance().offset;
        std::vector<Expr> parts;
        if (!peek().is_word("when")) parts.push_back(expr());
        if (!peek().is_word("when")) fail("expected WHEN");
        while (accept_word("when")) {
            parts.push_back(expr());
            expect_word("then");
            parts.push_back(expr());
        }
        if (accept_word("else")) parts.push_back(expr());
        expect_word("end");
        return compound(at, std::move(parts));
    }

    Expr name_or_call() {
        const Token& first = advance();
        const std::size_t at = first.offset;
        std::vector<std::string> parts{first.text};

        if (peek().is_symbol("(")) return call(std::move(parts.front()), at);

        while (accept_symbol(".")) {
            if (peek().is_symbol("*")) {
                advance();
                Expr star;
                star.kind = ExprKind::Star;
                star.offset = at;
                star.qualifier = join(parts);
                return star;
            }
            const Token& next = peek();
            if (next.kind != TokenKind::Word && next.kind != TokenKind::QuotedIdent) {
                fail("expected column name");
            }
            parts.push_back(advance().text);
        }
        if (peek().is_symbol("(")) {
            // schema-qualified function
            std::string name = parts.back();
            return call(std::move(name), at);
        }
        Expr col;
        col.kind = ExprKind::Column;
        col.offset = at;
        col.name = parts.back();
        parts.pop_back();
        col.qualifier = join(parts);
        return col;
    }

    static std::string join(const std::vector<std::string>& parts) {
        std::string out;
        for (std::size_t i = 0; i < parts.size(); ++i) {
            if (i) out.push_back('.');
            out += parts[i];
        }
        return out;
    }

    Expr call(std::string name, std::size_t at) {
        expect_symbol("(");
        Expr fn;
        fn.kind = ExprKind::Function;
        fn.offset = at;
        fn.name = upper(std::move(name));
        if (accept_symbol("*")) {
            fn.star_arg = true;
        } else if (!peek().is_symbol(")")) {
            if (!accept_word("distinct")) accept_word("all");
            fn.children = expr_list();
            if (accept_word("order")) {
                expect_word("by");
                for (auto& e : order_list()) fn.children.push_back(std::move(e));
            }
        }
        expect_symbol(")");

        if (peek().is_word("within") && peek(1).is_word("group")) {
            advance();
            advance();
            expect_symbol("(");
            expect_word("order");
            expect_word("by");
            for (auto& e : order_list()) fn.children.push_back(std::move(e));
            expect_symbol(")");
        }
        if (peek().is_word("filter") && peek(1).is_symbol("(")) {
            advance();
            advance();
            expect_word("where");
            fn.filter = std::make_shared<Expr>(expr());
            expect_symbol(")");
        }
        if (accept_word("over")) {
            if (peek().is_symbol("(")) {
                fn.window = std::make_shared<WindowSpec>(window_spec_parens());
            } else {
                identifier("window name");
                fn.window = std::make_shared<WindowSpec>();
            }
        }
        return fn;
    }

    std::vector<Token> tokens_;
    std::size_t pos_ = 0;
    std::size_t depth_ = 0;
};

}  // namespace

Query parse_statement(std::string_view text) { return Parser(text).statement(); }

}  // namespace mgate::sql
