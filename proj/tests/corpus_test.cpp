#include <gtest/gtest.h>

#include <filesystem>
#include <set>
#include <algorithm>
#include <cstdio>

#include <unistd.h>

#include "metric_gate/corpus.hpp"
#include "metric_gate/errors.hpp"

using namespace mgate;

namespace {

std::filesystem::path temp_dir(const std::string& name) {
    auto dir = std::filesystem::temp_directory_path() / ("mgate_corpus_" + std::to_string(::getpid()) + name);
    std::filesystem::create_directories(dir);
    return dir;
}

int oracle_of(const char* sql) { return label_oracle(parse_sql(sql), SensitiveLexicon::builtin()); }

}  // namespace

TEST(Schema, PatientData) {
    const auto& s = SchemaDef::patient_data();
    EXPECT_EQ(s.table, "patient_data");
    std::vector<std::string> names;
    for (const auto& c : s.columns) names.push_back(c.name);
    EXPECT_EQ(names, (std::vector<std::string>{"patient_id", "dob", "gender", "zip", "department",
                                               "diagnosis_code", "wait_time"}));
    EXPECT_EQ(s.sensitive_columns(), (std::vector<std::string>{"dob", "gender", "zip", "diagnosis_code"}));
}

TEST(LabelOracle, Cases) {
    EXPECT_EQ(oracle_of("SELECT zip, COUNT(*) FROM patient_data GROUP BY zip"), 1);
    EXPECT_EQ(oracle_of("SELECT dob, COUNT(*) FROM patient_data GROUP BY dob"), 1);
    EXPECT_EQ(oracle_of("SELECT gender, diagnosis_code, COUNT(*) FROM patient_data GROUP BY gender, diagnosis_code"), 1);
    EXPECT_EQ(oracle_of("SELECT gender, COUNT(*) FROM patient_data GROUP BY gender"), 0);
    EXPECT_EQ(oracle_of("SELECT department, AVG(wait_time) FROM patient_data GROUP BY department"), 0);
    EXPECT_EQ(oracle_of("SELECT zip FROM patient_data"), 0);
    EXPECT_EQ(oracle_of("SELECT p.gender, COUNT(*) FROM patient_data p JOIN visits v ON v.patient_id = p.patient_id "
                        "JOIN donations d ON d.patient_id = p.patient_id GROUP BY p.gender"),
              1);
    EXPECT_EQ(oracle_of("SELECT p.gender, COUNT(*) FROM patient_data p JOIN visits v ON v.patient_id = p.patient_id "
                        "GROUP BY p.gender"),
              0);
}

TEST(RuleBaseline, FlagsAnySensitiveGrouping) {
    const auto& lex = SensitiveLexicon::builtin();
    EXPECT_EQ(rule_baseline(parse_sql("SELECT gender, COUNT(*) FROM t GROUP BY gender"), lex), 1);
    EXPECT_EQ(rule_baseline(parse_sql("SELECT department, COUNT(*) FROM t GROUP BY department"), lex), 0);
}

TEST(ReferenceQueries, Fixtures) {
    const auto q = reference_queries();
    ASSERT_EQ(q.size(), 3u);
    EXPECT_EQ(q[0].query_id, "P-Q1");
    EXPECT_EQ(q[0].label, 1);
    EXPECT_EQ(q[1].label, 1);
    EXPECT_EQ(q[2].label, 0);
    for (const auto& e : q) {
        EXPECT_TRUE(is_reference_query(e.query_id));
        EXPECT_FALSE(is_held_out(e.query_id));
    }
    EXPECT_FALSE(is_reference_query("G-000001"));
}

TEST(GenerateCorpus, Deterministic) {
    EXPECT_EQ(generate_corpus(500, 7), generate_corpus(500, 7));
    EXPECT_NE(generate_corpus(500, 7), generate_corpus(500, 8));
    EXPECT_EQ(corpus_to_jsonl(generate_corpus(300, 1)), corpus_to_jsonl(generate_corpus(300, 1)));
}

TEST(GenerateCorpus, ShapeAndLabels) {
    const auto& lex = SensitiveLexicon::builtin();
    for (std::uint64_t seed : {1u, 2u, 3u}) {
        const auto c = generate_corpus(1000, seed);
        ASSERT_EQ(c.size(), 1000u);
        EXPECT_EQ(c[0].query_id, "P-Q1");
        EXPECT_EQ(c[3].query_id, "G-000001");
        std::set<std::string> ids;
        std::size_t risky = 0;
        std::size_t wrapped = 0;
        std::size_t held = 0;
        for (const auto& e : c) {
            EXPECT_TRUE(ids.insert(e.query_id).second) << e.query_id;
            QuerySummary s;
            ASSERT_NO_THROW(s = parse_sql(e.sql)) << e.sql;
            EXPECT_EQ(label_oracle(s, lex), e.label) << e.sql;
            risky += static_cast<std::size_t>(e.label);
            if (e.template_id.starts_with("cte") || e.template_id.starts_with("subquery")) ++wrapped;
            held += is_held_out(e.query_id) ? 1 : 0;
        }
        const double share = static_cast<double>(risky) / static_cast<double>(c.size());
        EXPECT_GE(share, 0.30);
        EXPECT_LE(share, 0.70);
        EXPECT_LE(wrapped, c.size() / 5);
        EXPECT_GT(wrapped, 0u);
        EXPECT_GT(held, c.size() / 10);
        EXPECT_LT(held, c.size() * 3 / 10);
    }
}

TEST(GenerateCorpus, SmallAndInvalidCounts) {
    EXPECT_THROW(generate_corpus(9, 1), InvalidCount);
    EXPECT_THROW(generate_corpus(0, 1), InvalidCount);
    const auto c = generate_corpus(10, 1);
    EXPECT_EQ(c.size(), 10u);
    std::size_t risky = 0;
    for (const auto& e : c) risky += static_cast<std::size_t>(e.label);
    EXPECT_GE(risky, 3u);
    EXPECT_LE(risky, 7u);
}

TEST(HeldOut, StableAndSpread) {
    EXPECT_EQ(is_held_out("G-000123"), is_held_out("G-000123"));
    std::size_t held = 0;
    for (int i = 1; i <= 10000; ++i) {
        char id[16];
        std::snprintf(id, sizeof id, "G-%06d", i);
        held += is_held_out(id) ? 1 : 0;
    }
    EXPECT_GT(held, 1800u);
    EXPECT_LT(held, 2200u);
}

TEST(Jsonl, RoundTrip) {
    auto c = generate_corpus(50, 3);
    c[5].sql = "SELECT \"Zip Code\", COUNT(*) FROM t\nWHERE name = 'O''Brien' GROUP BY 1";
    const auto text = corpus_to_jsonl(c);
    EXPECT_EQ(corpus_from_jsonl(text), c);
    EXPECT_EQ(std::count(text.begin(), text.end(), '\n'), 50);
    EXPECT_EQ(text.substr(0, text.find(',')), "{\"query_id\":\"P-Q1\"");

    const auto dir = temp_dir("jsonl");
    write_corpus(c, dir / "corpus.jsonl");
    EXPECT_EQ(read_corpus(dir / "corpus.jsonl"), c);
    std::filesystem::remove_all(dir);
}

TEST(Jsonl, Errors) {
    EXPECT_THROW(corpus_from_jsonl("{not json}\n"), IoError);
    EXPECT_THROW(corpus_from_jsonl("{\"query_id\":\"x\"}\n"), IoError);
    EXPECT_THROW(read_corpus("/nonexistent/corpus.jsonl"), IoError);
    EXPECT_TRUE(corpus_from_jsonl("").empty());
}

TEST(WriteSqlFiles, OneFilePerEntry) {
    const auto c = generate_corpus(20, 2);
    const auto dir = temp_dir("sql");
    write_sql_files(c, dir);
    std::size_t files = 0;
    for (const auto& f : std::filesystem::directory_iterator(dir)) {
        EXPECT_EQ(f.path().extension(), ".sql");
        ++files;
    }
    EXPECT_EQ(files, c.size());
    EXPECT_TRUE(std::filesystem::exists(dir / "P-Q2.sql"));
    std::filesystem::remove_all(dir);
}
