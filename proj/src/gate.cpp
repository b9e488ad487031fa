#include "metric_gate/gate.hpp"

#include <algorithm>
#include <atomic>
#include <fstream>
#include <sstream>
#include <thread>

#include "metric_gate/errors.hpp"

namespace mgate {
namespace {

template <typename Fn>
void parallel_for(std::size_t n, std::size_t jobs, Fn fn) {
    jobs = std::clamp<std::size_t>(jobs, 1, std::max<std::size_t>(n, 1));
    if (jobs == 1) {
        for (std::size_t i = 0; i < n; ++i) fn(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::vector<std::jthread> workers;
    workers.reserve(jobs);
    for (std::size_t w = 0; w < jobs; ++w) {
        workers.emplace_back([&] {
            for (std::size_t i = next++; i < n; i = next++) fn(i);
        });
    }
}

std::string read_query_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot read " + path.string());
    std::ostringstream buf;
    buf << in.rdbuf();
    if (in.bad()) throw IoError("failed reading " + path.string());
    return buf.str();
}

void record_error(BatchItem& item, std::string_view kind, const std::string& message) {
    item.verdict.reset();
    item.error_kind = std::string(kind);
    item.error_message = message;
}

}  // namespace

void GateConfig::validate() const {
    if (!(threshold > 0.0 && threshold < 1.0)) {
        throw ConfigError("threshold must be in (0, 1), got " + std::to_string(threshold));
    }
    if (jobs == 0) throw ConfigError("jobs must be at least 1");
}

FeatureSchema schema_for(const EmbeddingProvider& embedder) {
    return FeatureSchema::fused(embedder.dimension(), embedder.family());
}

QueryVector vectorize_query(std::string_view sql, const EmbeddingProvider& embedder,
                            const SensitiveLexicon& lexicon) {
    QueryVector qv;
    qv.summary = parse_sql(sql);
    const auto tokens = normalize_query(sql);
    const auto embedding = embedder.embed_one(tokens);
    qv.features = extract_features(qv.summary, lexicon);
    qv.fused = fuse(embedding, qv.features, embedder.dimension());
    return qv;
}

std::vector<LabeledExample> vectorize_corpus(std::span<const CorpusEntry> entries,
                                             const EmbeddingProvider& embedder,
                                             const SensitiveLexicon& lexicon) {
    std::vector<NormalizedTokens> tokens;
    std::vector<SyntacticFeatures> features;
    tokens.reserve(entries.size());
    features.reserve(entries.size());
    for (const auto& e : entries) {
        features.push_back(extract_features(parse_sql(e.sql), lexicon));
        tokens.push_back(normalize_query(e.sql));
    }
    const auto embeddings = embedder.embed_batch(tokens);

    std::vector<LabeledExample> out;
    out.reserve(entries.size());
    for (std::size_t i = 0; i < entries.size(); ++i) {
        out.push_back({fuse(embeddings[i], features[i], embedder.dimension()), entries[i].label,
                       entries[i].query_id});
    }
    return out;
}

MetricGate::MetricGate(GbdtModel model, SensitiveLexicon lexicon,
                       std::unique_ptr<EmbeddingProvider> embedder, double threshold)
    : model_(std::move(model)),
      lexicon_(std::move(lexicon)),
      embedder_(std::move(embedder)),
      threshold_(threshold),
      schema_(schema_for(*embedder_)),
      model_id_(model_.model_id()) {
    if (!(threshold_ > 0.0 && threshold_ < 1.0)) {
        throw ConfigError("threshold must be in (0, 1), got " + std::to_string(threshold_));
    }
}

MetricGate MetricGate::from_config(const GateConfig& config) {
    config.validate();
    if (config.model_path.empty()) throw ConfigError("no model given (use --model)");
    auto model = load_model(config.model_path);
    auto lexicon = config.lexicon_path ? SensitiveLexicon::load(*config.lexicon_path)
                                       : SensitiveLexicon::builtin();
    return MetricGate(std::move(model), std::move(lexicon), make_embedder(config.embedder),
                      config.threshold);
}

Verdict MetricGate::decide(const QueryVector& qv, std::string query_id) const {
    Verdict v;
    v.query_id = std::move(query_id);
    v.threshold = threshold_;
    v.risk_score = predict_proba(model_, qv.fused, schema_.fingerprint);
    v.status = v.risk_score > threshold_ ? Status::Blocked : Status::Approved;
    v.features = qv.features;
    v.reduced_confidence = qv.summary.reduced_confidence;
    v.model_id = model_id_;
    v.reasons = match_rules(qv.summary, qv.features, lexicon_);
    if (v.status == Status::Blocked && v.reasons.empty()) v.reasons.push_back(fallback_reason());
    v.explanation = render_explanation(v.reasons, v.status);
    return v;
}

Verdict MetricGate::detect_overexposure(std::string_view sql, std::string query_id) const {
    return decide(vectorize_query(sql, *embedder_, lexicon_), std::move(query_id));
}

BatchResult MetricGate::analyze_batch(std::span<const BatchInput> inputs, std::size_t jobs) const {
    const std::size_t n = inputs.size();
    BatchResult result;
    result.items.resize(n);

    // Stage 1: read, parse, normalize, extract.
    std::vector<QuerySummary> summaries(n);
    std::vector<NormalizedTokens> tokens(n);
    std::vector<SyntacticFeatures> features(n);
    std::vector<char> ok(n, 0);
    parallel_for(n, jobs, [&](std::size_t i) {
        auto& item = result.items[i];
        item.query_id = inputs[i].query_id;
        try {
            const auto text = read_query_file(inputs[i].path);
            summaries[i] = parse_sql(text);
            tokens[i] = normalize_query(text);
            features[i] = extract_features(summaries[i], lexicon_);
            ok[i] = 1;
        } catch (const Error& e) {
            record_error(item, e.kind(), e.what());
        }
    });

    // Stage 2: embed. A serial provider gets the whole batch in one call.
    std::vector<EmbeddingVector> embeddings(n);
    if (embedder_->concurrent()) {
        parallel_for(n, jobs, [&](std::size_t i) {
            if (!ok[i]) return;
            try {
                embeddings[i] = embedder_->embed_one(tokens[i]);
            } catch (const Error& e) {
                record_error(result.items[i], e.kind(), e.what());
                ok[i] = 0;
            }
        });
    } else {
        std::vector<std::size_t> index;
        std::vector<NormalizedTokens> batch;
        for (std::size_t i = 0; i < n; ++i) {
            if (ok[i]) {
                index.push_back(i);
                batch.push_back(tokens[i]);
            }
        }
        try {
            auto out = batch.empty() ? std::vector<EmbeddingVector>{} : embedder_->embed_batch(batch);
            for (std::size_t k = 0; k < index.size(); ++k) embeddings[index[k]] = std::move(out[k]);
        } catch (const Error& e) {
            for (auto i : index) {
                record_error(result.items[i], e.kind(), e.what());
                ok[i] = 0;
            }
        }
    }

    // Stage 3: fuse, score, explain.
    parallel_for(n, jobs, [&](std::size_t i) {
        if (!ok[i]) return;
        auto& item = result.items[i];
        try {
            QueryVector qv{std::move(summaries[i]), features[i],
                           fuse(embeddings[i], features[i], embedder_->dimension())};
            item.verdict = decide(qv, item.query_id);
        } catch (const Error& e) {
            record_error(item, e.kind(), e.what());
        }
    });

    for (const auto& item : result.items) {
        if (!item.ok()) {
            ++result.counts.errors;
        } else if (item.verdict->status == Status::Blocked) {
            ++result.counts.blocked;
        } else {
            ++result.counts.approved;
        }
    }
    return result;
}

Verdict detect_overexposure(std::string_view sql, const GateConfig& config, const GbdtModel& model) {
    config.validate();
    auto lexicon = config.lexicon_path ? SensitiveLexicon::load(*config.lexicon_path)
                                       : SensitiveLexicon::builtin();
    MetricGate gate(model, std::move(lexicon), make_embedder(config.embedder), config.threshold);
    return gate.detect_overexposure(sql);
}

std::vector<BatchInput> collect_inputs(std::span<const std::string> args) {
    namespace fs = std::filesystem;
    std::vector<BatchInput> out;
    for (const auto& arg : args) {
        const fs::path root(arg);
        std::error_code ec;
        if (!fs::is_directory(root, ec)) {
            out.push_back({arg, root});
            continue;
        }
        std::vector<BatchInput> found;
        for (auto it = fs::recursive_directory_iterator(root, ec);
             !ec && it != fs::recursive_directory_iterator(); it.increment(ec)) {
            if (it->is_regular_file() && it->path().extension() == ".sql") {
                found.push_back({it->path().lexically_relative(root).generic_string(), it->path()});
            }
        }
        if (ec) throw IoError("cannot list " + arg + ": " + ec.message());
        std::sort(found.begin(), found.end(),
                  [](const BatchInput& a, const BatchInput& b) { return a.query_id < b.query_id; });
        out.insert(out.end(), found.begin(), found.end());
    }
    return out;
}

}  // namespace mgate
