#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "metric_gate/lexicon.hpp"
#include "metric_gate/sql_frontend.hpp"

namespace mgate {

enum class ColumnRole { Key, Attribute, Measure };

struct ColumnDef {
    std::string name;
    std::string type;
    bool sensitive = false;
    ColumnRole role = ColumnRole::Attribute;
};

struct SchemaDef {
    std::string table;
    std::vector<ColumnDef> columns;

    // The patient_data evaluation table: patient_id, dob, gender, zip,
    // department, diagnosis_code, wait_time.
    static const SchemaDef& patient_data();

    std::vector<std::string> sensitive_columns() const;
};

struct CorpusEntry {
    std::string query_id;
    std::string sql;
    int label = 0;
    std::string template_id;

    bool operator==(const CorpusEntry&) const = default;
};

// Ground truth: risky iff the query groups by ZIP or DOB, by two or more
// sensitive categories, or by any sensitive category across two or more joins.
int label_oracle(const QuerySummary& summary, const SensitiveLexicon& lexicon);

// A traditional blacklist engine: flags any sensitive column in GROUP BY.
int rule_baseline(const QuerySummary& summary, const SensitiveLexicon& lexicon);

// The three reference queries, ids P-Q1, P-Q2, P-Q3.
std::vector<CorpusEntry> reference_queries();
bool is_reference_query(std::string_view query_id);

// n entries: the three reference queries followed by n - 3 seeded generated
// queries, labeled by label_oracle, risky share kept within [0.30, 0.70].
// Throws InvalidCount for n < 10.
std::vector<CorpusEntry> generate_corpus(std::size_t n, std::uint64_t seed,
                                         const SchemaDef& schema = SchemaDef::patient_data());

// Deterministic ~20% held-out split keyed on the query id. Reference queries are
// never held out.
bool is_held_out(std::string_view query_id);

// JSON Lines, one {"query_id","label","template_id","sql"} object per line.
std::string corpus_to_jsonl(std::span<const CorpusEntry> entries);
std::vector<CorpusEntry> corpus_from_jsonl(std::string_view text);
void write_corpus(std::span<const CorpusEntry> entries, const std::filesystem::path& path);
std::vector<CorpusEntry> read_corpus(const std::filesystem::path& path);

// Writes <dir>/<query_id>.sql for every entry.
void write_sql_files(std::span<const CorpusEntry> entries, const std::filesystem::path& dir);

}  // namespace mgate
