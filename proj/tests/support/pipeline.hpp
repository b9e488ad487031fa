#pragma once

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <string>
#include <vector>

#include <sys/wait.h>
#include <unistd.h>

#include "metric_gate/corpus.hpp"
#include "metric_gate/gate.hpp"

namespace mgate::testing {

// The reference configuration: n = 2000, seed 1, D = 64, default
// hyperparameters, trained on the non-held-out split.
inline GbdtModel train_default(std::size_t n = 2000, std::uint64_t seed = 1) {
    std::vector<CorpusEntry> train_split;
    for (auto& e : generate_corpus(n, seed)) {
        if (!is_held_out(e.query_id)) train_split.push_back(std::move(e));
    }
    const HashingEmbedder emb(64);
    return train(vectorize_corpus(train_split, emb, SensitiveLexicon::builtin()), GbdtHyperparams{},
                 schema_for(emb));
}

inline MetricGate make_gate(GbdtModel model, double threshold = kDefaultThreshold) {
    return MetricGate(std::move(model), SensitiveLexicon::builtin(), std::make_unique<HashingEmbedder>(64),
                      threshold);
}

inline std::string read_file(const std::filesystem::path& p) {
    std::ifstream in(p, std::ios::binary);
    return {std::istreambuf_iterator<char>(in), {}};
}

inline std::string fixture(const std::string& rel) {
    return read_file(std::filesystem::path(MGATE_FIXTURES_DIR) / rel);
}

struct RunResult {
    int exit_code = -1;
    std::string out;
};

// Runs the CLI through the shell, capturing stdout.
inline RunResult run_cli(const std::string& args) {
    const std::string cmd = std::string("'") + MGATE_CLI + "' " + args;
    RunResult r;
    FILE* pipe = ::popen(cmd.c_str(), "r");
    if (pipe == nullptr) return r;
    char buf[4096];
    for (std::size_t got; (got = std::fread(buf, 1, sizeof buf, pipe)) > 0;) r.out.append(buf, got);
    const int status = ::pclose(pipe);
    r.exit_code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
    return r;
}

inline std::filesystem::path scratch_dir(const std::string& name) {
    auto dir = std::filesystem::temp_directory_path() /
               ("mgate_" + name + "_" + std::to_string(::getpid()));
    std::filesystem::remove_all(dir);
    std::filesystem::create_directories(dir);
    return dir;
}

}  // namespace mgate::testing
