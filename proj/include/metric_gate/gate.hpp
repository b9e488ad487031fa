#pragma once

#include <cstddef>
#include <filesystem>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "metric_gate/corpus.hpp"
#include "metric_gate/embedder.hpp"
#include "metric_gate/explain.hpp"
#include "metric_gate/features.hpp"
#include "metric_gate/gbdt.hpp"
#include "metric_gate/lexicon.hpp"

namespace mgate {

inline constexpr double kDefaultThreshold = 0.85;

enum class OutputFormat { Json, Text };

struct GateConfig {
    double threshold = kDefaultThreshold;
    std::filesystem::path model_path;
    std::optional<std::filesystem::path> lexicon_path;
    EmbedderConfig embedder;
    OutputFormat format = OutputFormat::Json;
    std::size_t jobs = 1;

    // Throws ConfigError when the threshold is outside (0, 1) or jobs is 0.
    void validate() const;
};

struct Verdict {
    std::string query_id;
    Status status = Status::Approved;
    double risk_score = 0.0;
    double threshold = kDefaultThreshold;
    std::vector<RiskReason> reasons;
    SyntacticFeatures features;
    bool reduced_confidence = false;
    std::string model_id;
    std::string explanation;
};

// One batch input; query_id is what the report shows.
struct BatchInput {
    std::string query_id;
    std::filesystem::path path;
};

struct BatchItem {
    std::string query_id;
    std::optional<Verdict> verdict;  // empty on error
    std::string error_kind;
    std::string error_message;

    bool ok() const { return verdict.has_value(); }
};

struct BatchCounts {
    std::size_t approved = 0;
    std::size_t blocked = 0;
    std::size_t errors = 0;

    std::size_t total() const { return approved + blocked + errors; }
};

struct BatchResult {
    std::vector<BatchItem> items;  // input order
    BatchCounts counts;
};

// Parsed, embedded and fused form of one query.
struct QueryVector {
    QuerySummary summary;
    SyntacticFeatures features;
    FusedVector fused;
};

// The parse -> normalize -> embed -> extract -> fuse prefix of the pipeline.
QueryVector vectorize_query(std::string_view sql, const EmbeddingProvider& embedder,
                            const SensitiveLexicon& lexicon);

// Training examples for a corpus, embedded in one provider batch.
std::vector<LabeledExample> vectorize_corpus(std::span<const CorpusEntry> entries,
                                             const EmbeddingProvider& embedder,
                                             const SensitiveLexicon& lexicon);

FeatureSchema schema_for(const EmbeddingProvider& embedder);

class MetricGate {
public:
    MetricGate(GbdtModel model, SensitiveLexicon lexicon,
               std::unique_ptr<EmbeddingProvider> embedder, double threshold = kDefaultThreshold);

    // Loads the model, lexicon and embedder named by the config.
    static MetricGate from_config(const GateConfig& config);

    const GbdtModel& model() const { return model_; }
    const SensitiveLexicon& lexicon() const { return lexicon_; }
    const EmbeddingProvider& embedder() const { return *embedder_; }
    double threshold() const { return threshold_; }
    const FeatureSchema& schema() const { return schema_; }

    // Throws SyntaxError, UnsupportedStatement, SchemaMismatch, ProviderError.
    Verdict detect_overexposure(std::string_view sql, std::string query_id = {}) const;

    // Per-file failures are recorded, never thrown. jobs > 1 runs on a thread
    // pool when the embedder allows concurrent calls.
    BatchResult analyze_batch(std::span<const BatchInput> inputs, std::size_t jobs = 1) const;

private:
    Verdict decide(const QueryVector& qv, std::string query_id) const;

    GbdtModel model_;
    SensitiveLexicon lexicon_;
    std::unique_ptr<EmbeddingProvider> embedder_;
    double threshold_;
    FeatureSchema schema_;
    std::string model_id_;
};

Verdict detect_overexposure(std::string_view sql, const GateConfig& config, const GbdtModel& model);

// Every *.sql file under each directory (sorted, ids relative to the
// directory) and every plain file as given.
std::vector<BatchInput> collect_inputs(std::span<const std::string> args);

// JSON report of one verdict; fields in fixed order, scores with 6 decimals.
std::string verdict_json(const Verdict& v);
std::string verdict_text(const Verdict& v);
std::string batch_json(const BatchResult& r);
std::string batch_text(const BatchResult& r);

// key = value lines, '#' comments. Keys: threshold, model, lexicon, embedder,
// embedder_cmd, embed_dim, format, jobs. Throws ConfigError.
GateConfig parse_config(std::string_view text, GateConfig base = {});
GateConfig load_config(const std::filesystem::path& path, GateConfig base = {});
// Defaults overlaid with the file named by METRIC_GATE_CONFIG, if set.
GateConfig config_from_env();

OutputFormat parse_format(std::string_view name);

}  // namespace mgate
