#include <gtest/gtest.h>

#include <cctype>
#include <string>
#include <vector>

#include "metric_gate/corpus.hpp"
#include "metric_gate/errors.hpp"
#include "metric_gate/sql_frontend.hpp"

using namespace mgate;

namespace {

using Strings = std::vector<std::string>;

QuerySummary summary(Strings tables, std::size_t joins, Strings group, Strings select, Strings aggs,
                     Strings where = {}) {
    QuerySummary s;
    s.tables = std::move(tables);
    s.join_count = joins;
    s.group_by_columns = std::move(group);
    s.select_columns = std::move(select);
    s.aggregate_functions = std::move(aggs);
    s.where_columns = std::move(where);
    return s;
}

std::size_t syntax_offset(const std::string& sql) {
    try {
        parse_sql(sql);
    } catch (const SyntaxError& e) {
        return e.offset();
    }
    ADD_FAILURE() << "no SyntaxError for: " << sql;
    return 0;
}

}  // namespace

TEST(ParseSql, ReferenceQueries) {
    EXPECT_EQ(parse_sql("SELECT zip, COUNT(*) FROM patient_data GROUP BY zip;"),
              summary({"patient_data"}, 0, {"zip"}, {"zip"}, {"COUNT"}));
    EXPECT_EQ(parse_sql("SELECT gender, diagnosis_code, COUNT(*) FROM patient_data GROUP BY gender, "
                        "diagnosis_code;"),
              summary({"patient_data"}, 0, {"gender", "diagnosis_code"}, {"gender", "diagnosis_code"},
                      {"COUNT"}));
    EXPECT_EQ(parse_sql("SELECT gender, COUNT(*) FROM patient_data GROUP BY gender;"),
              summary({"patient_data"}, 0, {"gender"}, {"gender"}, {"COUNT"}));
}

TEST(ParseSql, UngroupedCount) {
    const auto s = parse_sql("SELECT COUNT(*) FROM t;");
    EXPECT_EQ(s, summary({"t"}, 0, {}, {}, {"COUNT"}));
    EXPECT_FALSE(s.reduced_confidence);
}

// Expected value written out from the grammar before running the parser.
TEST(ParseSql, CteMatchesHandParse) {
    QuerySummary expected = summary({"t"}, 0, {"dept"}, {std::string(kStarColumn), "dept"}, {"AVG"});
    expected.cte_count = 1;
    expected.reduced_confidence = true;
    EXPECT_EQ(parse_sql("WITH c AS (SELECT * FROM t) SELECT dept, AVG(x) FROM c GROUP BY dept;"), expected);
}

TEST(ParseSql, QualifiersStrippedAndJoinsCounted) {
    const auto s = parse_sql(
        "SELECT p.zip, v.ward, COUNT(*) FROM patient_data p JOIN visits v ON v.patient_id = p.patient_id "
        "LEFT JOIN donations d ON d.patient_id = p.patient_id WHERE p.gender = 'F' GROUP BY p.zip, v.ward");
    EXPECT_EQ(s, summary({"patient_data", "visits", "donations"}, 2, {"zip", "ward"}, {"zip", "ward"},
                         {"COUNT"}, {"gender"}));
}

TEST(ParseSql, CommaJoinsCountPairs) {
    const auto s = parse_sql("SELECT COUNT(*) FROM a, b, c WHERE a.id = b.id AND b.id = c.id");
    EXPECT_EQ(s.join_count, 2u);
    EXPECT_EQ(s.tables, (Strings{"a", "b", "c"}));
    EXPECT_EQ(s.where_columns, (Strings{"id"}));
}

TEST(ParseSql, MixedJoinKinds) {
    const auto s = parse_sql(
        "SELECT t.* FROM t LEFT JOIN u ON t.id = u.id RIGHT OUTER JOIN w USING (id) CROSS JOIN k");
    EXPECT_EQ(s.join_count, 3u);
    EXPECT_EQ(s.select_columns, (Strings{"<star>"}));
    EXPECT_TRUE(s.where_columns.empty());
}

TEST(ParseSql, CaseAndWhitespaceInsensitive) {
    EXPECT_EQ(parse_sql("select   ZIP ,count(*)   FROM Patient_Data group BY Zip"),
              parse_sql("SELECT zip, COUNT(*) FROM patient_data GROUP BY zip"));
}

TEST(ParseSql, GroupByOrdinalAndAlias) {
    EXPECT_EQ(parse_sql("SELECT zip, COUNT(*) FROM t GROUP BY 1").group_by_columns, Strings{"zip"});
    EXPECT_EQ(parse_sql("SELECT zip, wait_time + 1 FROM t GROUP BY 2").group_by_columns,
              Strings{"expr_2"});
    EXPECT_EQ(parse_sql("SELECT zip AS z, COUNT(*) FROM t GROUP BY z").group_by_columns, Strings{"zip"});
    EXPECT_THROW(parse_sql("SELECT zip FROM t GROUP BY 2"), SyntaxError);
}

TEST(ParseSql, GroupingSetsFlatten) {
    const auto s = parse_sql(
        "SELECT gender, COUNT(*) FILTER (WHERE zip = '1') FROM patient_data GROUP BY ROLLUP(gender, dob)");
    EXPECT_EQ(s.group_by_columns, (Strings{"gender", "dob"}));
    EXPECT_EQ(s.select_columns, Strings{"gender"});
    EXPECT_EQ(s.where_columns, Strings{"zip"});
}

TEST(ParseSql, HavingAggregatesAreWhereColumns) {
    const auto s = parse_sql("SELECT zip FROM t GROUP BY zip HAVING SUM(wait_time) > 3");
    EXPECT_EQ(s.where_columns, Strings{"wait_time"});
    EXPECT_EQ(s.aggregate_functions, Strings{"SUM"});
}

TEST(ParseSql, WindowFunctions) {
    const auto s = parse_sql("SELECT department, AVG(wait_time) OVER (PARTITION BY gender) FROM patient_data");
    EXPECT_EQ(s.window_fn_count, 1u);
    EXPECT_EQ(s.select_columns, (Strings{"department", "gender"}));
    EXPECT_TRUE(s.reduced_confidence);

    const auto named = parse_sql("SELECT SUM(a) OVER w FROM t WINDOW w AS (PARTITION BY b)");
    EXPECT_EQ(named.window_fn_count, 1u);
    EXPECT_TRUE(named.reduced_confidence);
}

TEST(ParseSql, SubqueryDepth) {
    const auto one = parse_sql(
        "SELECT zip, (SELECT MAX(wait_time) FROM patient_data q WHERE q.zip = p.zip) FROM patient_data p "
        "GROUP BY zip");
    EXPECT_EQ(one.subquery_depth, 1u);
    EXPECT_FALSE(one.reduced_confidence);

    const auto two = parse_sql("SELECT x FROM t WHERE x IN (SELECT y FROM u WHERE y IN (SELECT z FROM v))");
    EXPECT_EQ(two.subquery_depth, 2u);
    EXPECT_TRUE(two.reduced_confidence);

    const auto three =
        parse_sql("SELECT a FROM (SELECT a FROM (SELECT a FROM (SELECT zip AS a FROM patient_data) x) y) z");
    EXPECT_EQ(three.subquery_depth, 3u);
    EXPECT_EQ(three.tables, Strings{"patient_data"});
}

TEST(ParseSql, RecursiveCte) {
    const auto s = parse_sql(
        "WITH RECURSIVE r(n) AS (SELECT 1 FROM t UNION ALL SELECT n+1 FROM r WHERE n < 5) SELECT n FROM r");
    EXPECT_EQ(s.cte_count, 1u);
    EXPECT_EQ(s.tables, Strings{"t"});
}

TEST(ParseSql, ExpressionsExposeColumns) {
    const auto s = parse_sql(
        "SELECT CAST(zip AS text), EXTRACT(year FROM dob), CASE WHEN gender = 'F' THEN 1 ELSE 0 END "
        "FROM patient_data");
    EXPECT_EQ(s.select_columns, (Strings{"zip", "dob", "gender"}));
    EXPECT_EQ(parse_sql("SELECT zip::text FROM t ORDER BY 1 LIMIT 10 OFFSET 5").select_columns,
              Strings{"zip"});
}

TEST(ParseSql, QuotedIdentifiersFold) {
    const auto s = parse_sql(R"(SELECT "Zip Code", COUNT(*) FROM "Patient_Data" GROUP BY "Zip Code")");
    EXPECT_EQ(s.group_by_columns, Strings{"zip_code"});
    EXPECT_EQ(s.tables, Strings{"patient_data"});
}

TEST(ParseSql, RejectsNonSelect) {
    for (const char* sql : {"INSERT INTO t VALUES (1)", "UPDATE t SET a = 1", "DELETE FROM patient_data",
                            "CREATE TABLE t (a int)", "DROP TABLE t", "SELECT 42",
                            "SELECT zip INTO backup FROM patient_data"}) {
        EXPECT_THROW(parse_sql(sql), UnsupportedStatement) << sql;
    }
}

TEST(ParseSql, SyntaxErrorsCarryOffsets) {
    EXPECT_EQ(syntax_offset("SELECT FROM WHERE"), 7u);
    EXPECT_EQ(syntax_offset("SELECT ( FROM t"), 9u);
    EXPECT_EQ(syntax_offset("SELECT a FROM t WHERE"), 21u);
    EXPECT_EQ(syntax_offset("SELECT zip FROM patient_data; SELECT 1"), 30u);
    EXPECT_EQ(syntax_offset("SELECT 'unterminated FROM patient_data"), 7u);
    EXPECT_THROW(parse_sql(""), SyntaxError);
    EXPECT_THROW(parse_sql("   -- only a comment"), SyntaxError);
}

TEST(ParseSql, DeepNestingIsAnErrorNotACrash) {
    std::string sql = "SELECT a FROM t WHERE a = ";
    for (int i = 0; i < 5000; ++i) sql += "(";
    sql += "1";
    for (int i = 0; i < 5000; ++i) sql += ")";
    EXPECT_THROW(parse_sql(sql), SyntaxError);
}

TEST(ParseSql, GarbageNeverCrashes) {
    const std::string alphabet = "SELECT FROM WHERE GROUP BY ( ) , * ' \" ; -- /* */ zip 1 . JOIN ON WITH AS";
    std::uint64_t state = 42;
    for (int round = 0; round < 2000; ++round) {
        std::string sql;
        const int len = static_cast<int>(state % 60);
        for (int i = 0; i < len; ++i) {
            state = state * 6364136223846793005ULL + 1442695040888963407ULL;
            sql.push_back(alphabet[(state >> 33) % alphabet.size()]);
        }
        try {
            const auto s = parse_sql(sql);
            EXPECT_FALSE(s.tables.empty());
        } catch (const SyntaxError&) {
        } catch (const UnsupportedStatement&) {
        }
        state += 0x9E3779B97F4A7C15ULL;
    }
}

TEST(NormalizeQuery, MasksLiterals) {
    EXPECT_EQ(normalize_query("SELECT zip FROM t WHERE name = 'Bob'").tokens,
              (Strings{"select", "zip", "from", "t", "where", "name", "=", "<str>"}));
    EXPECT_EQ(normalize_query("SELECT 42").tokens, (Strings{"select", "<num>"}));
    EXPECT_EQ(normalize_query("SELECT 3.5e2, .5, 'it''s' -- trailing\n/* block */ FROM t").tokens,
              (Strings{"select", "<num>", ",", "<num>", ",", "<str>", "from", "t"}));
}

TEST(NormalizeQuery, OperatorsStayWhole) {
    EXPECT_EQ(normalize_query("a<=b>=c<>d!=e||f::g").tokens,
              (Strings{"a", "<=", "b", ">=", "c", "<>", "d", "!=", "e", "||", "f", "::", "g"}));
}

TEST(NormalizeQuery, ReferenceQueryTokens) {
    EXPECT_EQ(normalize_query("SELECT zip, COUNT(*) FROM patient_data GROUP BY zip;").detokenized(),
              "select zip , count ( * ) from patient_data group by zip ;");
}

TEST(NormalizeQuery, TotalOnBrokenInput) {
    EXPECT_EQ(normalize_query("SELECT 'open").tokens, (Strings{"select", "<str>"}));
    EXPECT_EQ(normalize_query(R"(SELECT "a b)").tokens, (Strings{"select", "a_b"}));
    EXPECT_TRUE(normalize_query("").tokens.empty());
}

TEST(NormalizeQuery, Idempotent) {
    for (const char* sql : {R"(SELECT "Zip Code", "1st" FROM t WHERE x = 'a b' AND y = -3.5)",
                            "SELECT a<=b, c::int FROM t /* x */ -- y",
                            "select <str>, <num> from t", "SELECT `weird col` FROM t"}) {
        const auto once = normalize_query(sql);
        EXPECT_EQ(normalize_query(once.detokenized()), once) << sql;
        for (const auto& tok : once.tokens) {
            EXPECT_FALSE(tok.empty());
            EXPECT_EQ(tok.find_first_of(" \t\n"), std::string::npos);
        }
    }
}

TEST(NormalizeQuery, IdempotentOverCorpus) {
    const auto corpus = generate_corpus(200, 7);
    for (std::size_t i = 0; i < 100; ++i) {
        const auto once = normalize_query(corpus[i].sql);
        EXPECT_EQ(normalize_query(once.detokenized()), once) << corpus[i].sql;
    }
}

TEST(ParseSql, DeterministicAndWhitespaceInvariantOverCorpus) {
    for (const auto& e : generate_corpus(300, 11)) {
        const auto s = parse_sql(e.sql);
        EXPECT_EQ(parse_sql(e.sql), s);
        std::string spaced;
        for (char c : e.sql) {
            spaced += c == ' ' ? std::string("  \n\t") : std::string(1, c);
        }
        EXPECT_EQ(parse_sql(spaced), s) << e.sql;
        std::string lower = e.sql;
        for (auto& c : lower) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
        EXPECT_EQ(parse_sql(lower), s) << e.sql;
        EXPECT_EQ(s.reduced_confidence, s.cte_count > 0 || s.window_fn_count > 0 || s.subquery_depth > 1);
        for (const auto& g : s.group_by_columns) {
            EXPECT_FALSE(g.empty());
            for (char c : g) EXPECT_FALSE(c >= 'A' && c <= 'Z') << g;
        }
    }
}
