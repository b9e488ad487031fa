// metric-gate: score metric-defining SQL for privacy overexposure before it runs.

#include <cstdio>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <iterator>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "metric_gate/corpus.hpp"
#include "metric_gate/errors.hpp"
#include "metric_gate/gate.hpp"

namespace {

using namespace mgate;

constexpr int kExitApproved = 0;
constexpr int kExitError = 1;
constexpr int kExitBlocked = 2;

// Flags shared by the subcommands that build a pipeline; unset ones leave
// the config-file value alone.
struct PipelineFlags {
    std::optional<std::string> model;
    std::optional<double> threshold;
    std::optional<std::string> lexicon;
    std::optional<std::string> embedder;
    std::optional<std::string> embedder_cmd;
    std::optional<std::size_t> embed_dim;
    std::optional<std::string> format;

    void add_embedding(CLI::App* app) {
        app->add_option("--lexicon", lexicon, "Sensitive-column lexicon file");
        app->add_option("--embedder", embedder, "builtin or external");
        app->add_option("--embedder-cmd", embedder_cmd, "External embedding command");
        app->add_option("--embed-dim", embed_dim, "Embedding dimension");
    }

    void add_scoring(CLI::App* app) {
        app->add_option("--model", model, "Trained model file (or 'model' in the config file)");
        app->add_option("--threshold", threshold, "Block when score > threshold");
        app->add_option("--format", format, "json or text");
        add_embedding(app);
    }

    GateConfig apply(GateConfig cfg) const {
        if (model) cfg.model_path = *model;
        if (threshold) cfg.threshold = *threshold;
        if (lexicon) cfg.lexicon_path = *lexicon;
        if (embedder) cfg.embedder.kind = *embedder;
        if (embedder_cmd) cfg.embedder.command = *embedder_cmd;
        if (embed_dim) cfg.embedder.dim = *embed_dim;
        if (format) cfg.format = parse_format(*format);
        cfg.validate();
        return cfg;
    }
};

SensitiveLexicon lexicon_for(const GateConfig& cfg) {
    return cfg.lexicon_path ? SensitiveLexicon::load(*cfg.lexicon_path) : SensitiveLexicon::builtin();
}

std::vector<CorpusEntry> select_split(const std::vector<CorpusEntry>& corpus, const std::string& split) {
    if (split == "all") return corpus;
    if (split != "train" && split != "heldout") {
        throw ConfigError("unknown split '" + split + "' (expected train, heldout or all)");
    }
    const bool want_held_out = split == "heldout";
    std::vector<CorpusEntry> out;
    for (const auto& e : corpus) {
        if (is_held_out(e.query_id) == want_held_out) out.push_back(e);
    }
    return out;
}

std::string metrics_line(const char* name, const EvalMetrics& m) {
    char buf[256];
    std::snprintf(buf, sizeof buf,
                  "%-8s accuracy=%.6f precision=%.6f recall=%.6f auc=%.6f tp=%zu fp=%zu tn=%zu fn=%zu",
                  name, m.accuracy, m.precision, m.recall, m.auc, m.tp, m.fp, m.tn, m.fn);
    return buf;
}

std::string metrics_json(const EvalMetrics& m) {
    char buf[256];
    std::snprintf(buf, sizeof buf,
                  "{\"accuracy\":%.6f,\"precision\":%.6f,\"recall\":%.6f,\"auc\":%.6f,"
                  "\"tp\":%zu,\"fp\":%zu,\"tn\":%zu,\"fn\":%zu}",
                  m.accuracy, m.precision, m.recall, m.auc, m.tp, m.fp, m.tn, m.fn);
    return buf;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"metric-gate: static privacy-risk gate for metric SQL"};
    app.require_subcommand(1);

    // analyze
    auto* analyze = app.add_subcommand("analyze", "Score one query");
    PipelineFlags analyze_flags;
    std::optional<std::string> query_text, query_file;
    bool use_stdin = false;
    auto* q_opt = analyze->add_option("--query", query_text, "SQL text");
    auto* f_opt = analyze->add_option("--file", query_file, "File holding one SQL statement");
    auto* s_opt = analyze->add_flag("--stdin", use_stdin, "Read the query from stdin");
    q_opt->excludes(f_opt, s_opt);
    f_opt->excludes(s_opt);
    analyze_flags.add_scoring(analyze);

    // batch
    auto* batch = app.add_subcommand("batch", "Score every .sql file under directories or paths");
    PipelineFlags batch_flags;
    std::vector<std::string> batch_paths;
    std::optional<std::size_t> jobs;
    batch->add_option("paths", batch_paths, "Directories or files")->required();
    batch->add_option("--jobs", jobs, "Worker threads");
    batch_flags.add_scoring(batch);

    // train
    auto* train_cmd = app.add_subcommand("train", "Train a model on a corpus file");
    PipelineFlags train_flags;
    std::string train_corpus, train_out, train_split = "train";
    GbdtHyperparams hp;
    train_cmd->add_option("--corpus", train_corpus, "Corpus JSONL file")->required();
    train_cmd->add_option("--out", train_out, "Model output path")->required();
    train_cmd->add_option("--rounds", hp.rounds, "Boosting rounds")->capture_default_str();
    train_cmd->add_option("--max-depth", hp.max_depth, "Tree depth")->capture_default_str();
    train_cmd->add_option("--eta", hp.learning_rate, "Learning rate")->capture_default_str();
    train_cmd->add_option("--lambda", hp.l2_lambda, "L2 regularization")->capture_default_str();
    train_cmd->add_option("--gamma", hp.gamma, "Minimum split gain")->capture_default_str();
    train_cmd->add_option("--min-child-weight", hp.min_child_weight, "Minimum child hessian")
        ->capture_default_str();
    train_cmd->add_option("--seed", hp.seed, "Reserved for subsampling")->capture_default_str();
    train_cmd->add_option("--split", train_split, "train, heldout or all")->capture_default_str();
    train_flags.add_embedding(train_cmd);

    // eval
    auto* eval_cmd = app.add_subcommand("eval", "Evaluate a model and the rule baseline");
    PipelineFlags eval_flags;
    std::string eval_corpus, eval_split = "heldout";
    eval_cmd->add_option("--corpus", eval_corpus, "Corpus JSONL file")->required();
    eval_cmd->add_option("--split", eval_split, "train, heldout or all")->capture_default_str();
    eval_flags.add_scoring(eval_cmd);

    // gen-corpus
    auto* gen = app.add_subcommand("gen-corpus", "Generate a labeled synthetic corpus");
    std::size_t gen_n = 2000;
    std::uint64_t gen_seed = 1;
    std::string gen_out;
    std::optional<std::string> emit_sql;
    gen->add_option("--n", gen_n, "Number of entries")->capture_default_str();
    gen->add_option("--seed", gen_seed, "Generator seed")->capture_default_str();
    gen->add_option("--out", gen_out, "Corpus JSONL output")->required();
    gen->add_option("--emit-sql", emit_sql, "Also write one .sql file per entry here");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : kExitError;
    }

    try {
        const GateConfig base = config_from_env();

        if (*analyze) {
            const auto cfg = analyze_flags.apply(base);
            std::string sql;
            std::string id;
            if (query_text) {
                sql = *query_text;
            } else if (query_file) {
                std::ifstream in(*query_file, std::ios::binary);
                if (!in) throw IoError("cannot read " + *query_file);
                sql.assign(std::istreambuf_iterator<char>(in), {});
                id = *query_file;
            } else if (use_stdin) {
                sql.assign(std::istreambuf_iterator<char>(std::cin), {});
            } else {
                throw ConfigError("analyze needs --query, --file or --stdin");
            }
            const auto gate = MetricGate::from_config(cfg);
            const auto v = gate.detect_overexposure(sql, id);
            std::cout << (cfg.format == OutputFormat::Json ? verdict_json(v) + "\n" : verdict_text(v));
            return v.status == Status::Blocked ? kExitBlocked : kExitApproved;
        }

        if (*batch) {
            auto cfg = batch_flags.apply(base);
            if (jobs) cfg.jobs = *jobs;
            cfg.validate();
            const auto gate = MetricGate::from_config(cfg);
            const auto inputs = collect_inputs(batch_paths);
            if (inputs.empty()) throw IoError("no .sql files found");
            const auto result = gate.analyze_batch(inputs, cfg.jobs);
            std::cout << (cfg.format == OutputFormat::Json ? batch_json(result) : batch_text(result));
            if (result.counts.errors > 0) return kExitError;
            return result.counts.blocked > 0 ? kExitBlocked : kExitApproved;
        }

        if (*train_cmd) {
            const auto cfg = train_flags.apply(base);
            const auto corpus = select_split(read_corpus(train_corpus), train_split);
            const auto embedder = make_embedder(cfg.embedder);
            const auto examples = vectorize_corpus(corpus, *embedder, lexicon_for(cfg));
            const auto model = train(examples, hp, schema_for(*embedder));
            save_model(model, train_out);
            std::cout << model.model_id() << " trained on " << examples.size() << " examples, "
                      << model.trees.size() << " trees -> " << train_out << "\n";
            return 0;
        }

        if (*eval_cmd) {
            const auto cfg = eval_flags.apply(base);
            const auto corpus = select_split(read_corpus(eval_corpus), eval_split);
            if (corpus.empty()) throw EmptyDataset("split '" + eval_split + "' is empty");
            const auto gate = MetricGate::from_config(cfg);
            const auto examples = vectorize_corpus(corpus, gate.embedder(), gate.lexicon());
            const auto model_metrics = evaluate(gate.model(), examples, cfg.threshold);

            std::vector<double> baseline_scores;
            std::vector<int> labels;
            for (const auto& e : corpus) {
                baseline_scores.push_back(rule_baseline(parse_sql(e.sql), gate.lexicon()));
                labels.push_back(e.label);
            }
            const auto baseline = evaluate_scores(baseline_scores, labels, 0.5);

            if (cfg.format == OutputFormat::Json) {
                std::cout << "{\"split\":\"" << eval_split << "\",\"examples\":" << corpus.size()
                          << ",\"threshold\":" << std::fixed << std::setprecision(6) << cfg.threshold
                          << ",\"model\":" << metrics_json(model_metrics)
                          << ",\"rule_baseline\":" << metrics_json(baseline) << "}\n";
            } else {
                std::cout << "split=" << eval_split << " examples=" << corpus.size() << "\n"
                          << metrics_line("model", model_metrics) << "\n"
                          << metrics_line("baseline", baseline) << "\n";
            }
            return 0;
        }

        if (*gen) {
            const auto corpus = generate_corpus(gen_n, gen_seed);
            write_corpus(corpus, gen_out);
            if (emit_sql) write_sql_files(corpus, *emit_sql);
            std::size_t risky = 0;
            for (const auto& e : corpus) risky += static_cast<std::size_t>(e.label);
            std::cout << corpus.size() << " entries (" << risky << " risky) -> " << gen_out << "\n";
            return 0;
        }
    } catch (const Error& e) {
        std::cerr << "metric-gate: " << e.kind() << ": " << e.what() << "\n";
        return kExitError;
    } catch (const std::exception& e) {
        std::cerr << "metric-gate: " << e.what() << "\n";
        return kExitError;
    }
    return kExitError;
}
