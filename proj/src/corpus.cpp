#include "metric_gate/corpus.hpp"

#include <algorithm>
#include <fstream>
#include <random>
#include <sstream>

#include <json.hpp>

#include "metric_gate/errors.hpp"
#include "metric_gate/features.hpp"
#include "metric_gate/hashing.hpp"

namespace mgate {
namespace {

// mt19937_64 output is fully specified by the standard; the distributions in
// <random> are not, so draws are reduced by hand to stay reproducible across
// standard libraries.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    std::size_t below(std::size_t n) { return static_cast<std::size_t>(engine_() % n); }
    bool percent(std::size_t p) { return below(100) < p; }

    // Index drawn with the given integer weights.
    std::size_t weighted(std::initializer_list<std::size_t> weights) {
        std::size_t total = 0;
        for (auto w : weights) total += w;
        std::size_t r = below(total);
        std::size_t i = 0;
        for (auto w : weights) {
            if (r < w) return i;
            r -= w;
            ++i;
        }
        return i - 1;
    }

    template <typename T>
    const T& pick(const std::vector<T>& items) {
        return items[below(items.size())];
    }

    template <typename T>
    void shuffle(std::vector<T>& items) {
        for (std::size_t i = items.size(); i > 1; --i) std::swap(items[i - 1], items[below(i)]);
    }

private:
    std::mt19937_64 engine_;
};

// A column as it appears in the generated query.
struct ColRef {
    std::string qualified;  // p.zip, or zip when there is a single table
    std::string bare;       // zip
};

struct Measure {
    std::string fn;  // AVG, SUM, ...
    ColRef column;   // empty bare name for COUNT(*)
    bool distinct = false;
};

const std::vector<std::string> kDepartments = {"cardiology", "oncology", "emergency",
                                               "pediatrics", "radiology", "orthopedics"};
const std::vector<std::string> kCampaigns = {"spring_gala", "annual_fund", "capital_drive"};
const std::vector<std::string> kGenders = {"F", "M", "X"};

class QueryGenerator {
public:
    QueryGenerator(Rng& rng, const SchemaDef& schema) : rng_(rng), schema_(schema) {}

    std::string next(std::string& template_id) {
        const std::size_t joins = rng_.weighted({12, 40, 30, 18});
        const bool comma = joins > 0 && rng_.percent(25);
        const bool qualify = joins > 0;
        const std::size_t wrapper_draw = rng_.below(100);
        const std::string wrapper = wrapper_draw < 10 ? "cte" : wrapper_draw < 18 ? "subquery" : "plain";

        auto ref = [&](const std::string& alias, const std::string& col) {
            return ColRef{qualify ? alias + "." + col : col, col};
        };

        // FROM clause and the join predicates that comma joins move into WHERE.
        const std::string main_alias = "p";
        std::string from = qualify ? schema_.table + " " + main_alias : schema_.table;
        std::vector<std::string> join_predicates;
        struct Aux {
            std::string table, alias, extra_condition;
        };
        std::vector<Aux> aux;
        if (joins >= 1) aux.push_back({"visits", "v", ""});
        if (joins >= 2) aux.push_back({"donations", "d", ""});
        if (joins >= 3) aux.push_back({"visits", "v2", " AND v2.visit_id <> v.visit_id"});
        for (const auto& a : aux) {
            const std::string cond =
                a.alias + ".patient_id = " + main_alias + ".patient_id" + a.extra_condition;
            if (comma) {
                from += ", " + a.table + " " + a.alias;
                join_predicates.push_back(cond);
            } else {
                from += " JOIN " + a.table + " " + a.alias + " ON " + cond;
            }
        }

        std::vector<ColRef> pool;
        std::string key_column = "patient_id";
        std::vector<ColRef> measures_pool;
        for (const auto& c : schema_.columns) {
            if (c.role == ColumnRole::Attribute) pool.push_back(ref(main_alias, c.name));
            if (c.role == ColumnRole::Measure) measures_pool.push_back(ref(main_alias, c.name));
            if (c.role == ColumnRole::Key) key_column = c.name;
        }
        if (joins >= 1) {
            pool.push_back(ref("v", "ward"));
            measures_pool.push_back(ref("v", "length_of_stay"));
        }
        if (joins >= 2) {
            pool.push_back(ref("d", "campaign"));
            measures_pool.push_back(ref("d", "amount"));
        }

        const std::size_t group_count = rng_.weighted({12, 40, 30, 18});
        rng_.shuffle(pool);
        std::vector<ColRef> groups(pool.begin(),
                                   pool.begin() + static_cast<std::ptrdiff_t>(
                                                      std::min(group_count, pool.size())));
        // Demographic x clinical segmentation, a common dashboard shape.
        const bool segment = rng_.percent(15);
        if (segment) {
            groups = {ref(main_alias, "gender"), ref(main_alias, "diagnosis_code")};
            if (rng_.percent(30)) groups.push_back(ref(main_alias, "department"));
        }

        std::vector<Measure> measures;
        const std::size_t measure_count = 1 + rng_.below(2);
        while (measures.size() < measure_count) {
            Measure m;
            switch (rng_.below(4)) {
            case 0: m = {"COUNT", {}, false}; break;
            case 1: m = {"COUNT", ref(main_alias, key_column), true}; break;
            default: {
                static const std::vector<std::string> kFns = {"AVG", "SUM", "MIN", "MAX"};
                m = {rng_.pick(kFns), rng_.pick(measures_pool), false};
            }
            }
            const bool repeated = std::any_of(measures.begin(), measures.end(), [&](const Measure& o) {
                return o.fn == m.fn && o.column.bare == m.column.bare && o.distinct == m.distinct;
            });
            if (!repeated) measures.push_back(m);
        }

        std::vector<std::string> predicates = join_predicates;
        if (rng_.percent(40)) {
            const std::size_t count = 1 + rng_.below(2);
            for (std::size_t i = 0; i < count; ++i) predicates.push_back(random_predicate(ref, joins));
        }

        template_id = wrapper + "-" + (segment ? "segment" : groups.empty() ? "global" : "grouped") + "-j" +
                      std::to_string(joins) + (comma ? "c" : "");

        if (wrapper == "plain") return plain(from, groups, measures, predicates);
        return wrapped(wrapper, from, groups, measures, predicates);
    }

private:
    template <typename RefFn>
    std::string random_predicate(RefFn& ref, std::size_t joins) {
        switch (rng_.below(joins >= 1 ? 6 : 5)) {
        case 0: return ref("p", "department").qualified + " = '" + rng_.pick(kDepartments) + "'";
        case 1: return ref("p", "wait_time").qualified + " > " + std::to_string(5 + rng_.below(120));
        case 2: return ref("p", "gender").qualified + " = '" + rng_.pick(kGenders) + "'";
        case 3: return ref("p", "dob").qualified + " < DATE '19" + std::to_string(40 + rng_.below(50)) + "-01-01'";
        case 4: return ref("p", "wait_time").qualified + " BETWEEN " + std::to_string(rng_.below(30)) +
                       " AND " + std::to_string(30 + rng_.below(90));
        default:
            return ref("v", "visit_date").qualified + " >= DATE '20" +
                   std::to_string(10 + rng_.below(14)) + "-01-01'";
        }
    }

    static std::string measure_sql(const Measure& m, bool bare) {
        if (m.column.bare.empty()) return m.fn + "(*)";
        const auto& col = bare ? m.column.bare : m.column.qualified;
        return m.fn + "(" + (m.distinct ? "DISTINCT " : "") + col + ")";
    }

    std::string select_list(const std::vector<ColRef>& groups, const std::vector<Measure>& measures,
                            bool bare) {
        std::string out;
        for (const auto& g : groups) out += (bare ? g.bare : g.qualified) + ", ";
        for (std::size_t i = 0; i < measures.size(); ++i) {
            if (i) out += ", ";
            out += measure_sql(measures[i], bare);
        }
        return out;
    }

    std::string tail(const std::vector<ColRef>& groups, bool bare) {
        std::string out;
        if (groups.empty()) return out;
        out += " GROUP BY ";
        for (std::size_t i = 0; i < groups.size(); ++i) {
            if (i) out += ", ";
            out += bare ? groups[i].bare : groups[i].qualified;
        }
        if (rng_.percent(15)) out += " HAVING COUNT(*) >= " + std::to_string(5 + rng_.below(20));
        if (rng_.percent(20)) out += " ORDER BY " + (bare ? groups[0].bare : groups[0].qualified);
        return out;
    }

    static std::string where_clause(const std::vector<std::string>& predicates) {
        std::string out;
        for (std::size_t i = 0; i < predicates.size(); ++i) out += (i ? " AND " : " WHERE ") + predicates[i];
        return out;
    }

    std::string plain(const std::string& from, const std::vector<ColRef>& groups,
                      const std::vector<Measure>& measures, const std::vector<std::string>& predicates) {
        return "SELECT " + select_list(groups, measures, false) + " FROM " + from +
               where_clause(predicates) + tail(groups, false) + ";";
    }

    // The inner query projects plain columns; the outer query aggregates them.
    std::string wrapped(const std::string& wrapper, const std::string& from,
                        const std::vector<ColRef>& groups, const std::vector<Measure>& measures,
                        const std::vector<std::string>& predicates) {
        std::vector<std::string> inner_cols;
        auto add = [&](const ColRef& c) {
            if (c.bare.empty()) return;
            if (std::find(inner_cols.begin(), inner_cols.end(), c.qualified) == inner_cols.end()) {
                inner_cols.push_back(c.qualified);
            }
        };
        for (const auto& g : groups) add(g);
        for (const auto& m : measures) add(m.column);
        if (inner_cols.empty()) inner_cols.push_back(groups.empty() ? "1 AS one" : groups[0].qualified);

        std::string inner = "SELECT ";
        for (std::size_t i = 0; i < inner_cols.size(); ++i) inner += (i ? ", " : "") + inner_cols[i];
        inner += " FROM " + from + where_clause(predicates);

        const std::string outer_select = "SELECT " + select_list(groups, measures, true);
        if (wrapper == "cte") {
            return "WITH base AS (" + inner + ") " + outer_select + " FROM base" + tail(groups, true) + ";";
        }
        return outer_select + " FROM (" + inner + ") s" + tail(groups, true) + ";";
    }

    Rng& rng_;
    const SchemaDef& schema_;
};

std::string read_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot read " + path.string());
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

}  // namespace

const SchemaDef& SchemaDef::patient_data() {
    static const SchemaDef schema{
        "patient_data",
        {
            {"patient_id", "INTEGER", false, ColumnRole::Key},
            {"dob", "DATE", true, ColumnRole::Attribute},
            {"gender", "TEXT", true, ColumnRole::Attribute},
            {"zip", "TEXT", true, ColumnRole::Attribute},
            {"department", "TEXT", false, ColumnRole::Attribute},
            {"diagnosis_code", "TEXT", true, ColumnRole::Attribute},
            {"wait_time", "NUMERIC", false, ColumnRole::Measure},
        },
    };
    return schema;
}

std::vector<std::string> SchemaDef::sensitive_columns() const {
    std::vector<std::string> out;
    for (const auto& c : columns) {
        if (c.sensitive) out.push_back(c.name);
    }
    return out;
}

int label_oracle(const QuerySummary& summary, const SensitiveLexicon& lexicon) {
    const auto f = extract_features(summary, lexicon);
    const bool risky = f.groups_by(Category::Zip) || f.groups_by(Category::Dob) ||
                       f[kSensitiveGroupByCount] >= 2 ||
                       (f[kSensitiveGroupByCount] >= 1 && f[kJoinCount] >= 2);
    return risky ? 1 : 0;
}

int rule_baseline(const QuerySummary& summary, const SensitiveLexicon& lexicon) {
    const auto f = extract_features(summary, lexicon);
    return f[kSensitiveGroupByCount] >= 1 ? 1 : 0;
}

std::vector<CorpusEntry> reference_queries() {
    return {
        {"P-Q1", "SELECT zip, COUNT(*) FROM patient_data GROUP BY zip;", 1, "reference"},
        {"P-Q2",
         "SELECT gender, diagnosis_code, COUNT(*) FROM patient_data GROUP BY gender, "
         "diagnosis_code;",
         1, "reference"},
        {"P-Q3", "SELECT gender, COUNT(*) FROM patient_data GROUP BY gender;", 0, "reference"},
    };
}

bool is_reference_query(std::string_view query_id) { return query_id.substr(0, 2) == "P-"; }

bool is_held_out(std::string_view query_id) {
    return !is_reference_query(query_id) && fnv1a64(query_id) % 5 == 0;
}

std::vector<CorpusEntry> generate_corpus(std::size_t n, std::uint64_t seed, const SchemaDef& schema) {
    if (n < 10) throw InvalidCount("corpus size must be at least 10, got " + std::to_string(n));

    const auto& lexicon = SensitiveLexicon::builtin();
    std::vector<CorpusEntry> out = reference_queries();
    std::size_t risky = 0;
    for (const auto& e : out) risky += static_cast<std::size_t>(e.label);
    std::size_t safe = out.size() - risky;
    const std::size_t cap = n * 7 / 10;

    Rng rng(seed);
    QueryGenerator gen(rng, schema);
    char id[32];
    while (out.size() < n) {
        CorpusEntry e;
        e.sql = gen.next(e.template_id);
        e.label = label_oracle(parse_sql(e.sql), lexicon);
        if (e.label == 1 ? risky + 1 > cap : safe + 1 > cap) continue;  // resample
        (e.label == 1 ? risky : safe) += 1;
        std::snprintf(id, sizeof id, "G-%06zu", out.size() - 2);
        e.query_id = id;
        out.push_back(std::move(e));
    }
    return out;
}

std::string corpus_to_jsonl(std::span<const CorpusEntry> entries) {
    std::string out;
    for (const auto& e : entries) {
        nlohmann::ordered_json j;
        j["query_id"] = e.query_id;
        j["label"] = e.label;
        j["template_id"] = e.template_id;
        j["sql"] = e.sql;
        out += j.dump();
        out.push_back('\n');
    }
    return out;
}

std::vector<CorpusEntry> corpus_from_jsonl(std::string_view text) {
    std::vector<CorpusEntry> out;
    std::size_t start = 0;
    std::size_t line_no = 0;
    while (start < text.size()) {
        auto end = text.find('\n', start);
        if (end == std::string_view::npos) end = text.size();
        const auto line = text.substr(start, end - start);
        start = end + 1;
        ++line_no;
        if (line.find_first_not_of(" \t\r") == std::string_view::npos) continue;
        try {
            const auto j = nlohmann::json::parse(line);
            CorpusEntry e;
            e.query_id = j.at("query_id").get<std::string>();
            e.label = j.at("label").get<int>();
            e.template_id = j.value("template_id", std::string());
            e.sql = j.at("sql").get<std::string>();
            if (e.label != 0 && e.label != 1) throw InvalidLabel("label must be 0 or 1");
            out.push_back(std::move(e));
        } catch (const nlohmann::json::exception& ex) {
            throw IoError("corpus line " + std::to_string(line_no) + ": " + ex.what());
        } catch (const InvalidLabel& ex) {
            throw IoError("corpus line " + std::to_string(line_no) + ": " + ex.what());
        }
    }
    return out;
}

void write_corpus(std::span<const CorpusEntry> entries, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot write corpus file " + path.string());
    out << corpus_to_jsonl(entries);
    if (!out) throw IoError("failed writing corpus file " + path.string());
}

std::vector<CorpusEntry> read_corpus(const std::filesystem::path& path) {
    return corpus_from_jsonl(read_file(path));
}

void write_sql_files(std::span<const CorpusEntry> entries, const std::filesystem::path& dir) {
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    if (ec) throw IoError("cannot create directory " + dir.string() + ": " + ec.message());
    for (const auto& e : entries) {
        const auto path = dir / (e.query_id + ".sql");
        std::ofstream out(path, std::ios::binary | std::ios::trunc);
        if (!out) throw IoError("cannot write " + path.string());
        out << e.sql << '\n';
    }
}

}  // namespace mgate
