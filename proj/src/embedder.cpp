#include "metric_gate/embedder.hpp"

#include <cmath>

#include "metric_gate/errors.hpp"
#include "metric_gate/hashing.hpp"

namespace mgate {

HashedToken hash_token(std::string_view token, std::size_t dim) {
    const std::uint64_t h = fnv1a64(token);
    const std::uint64_t s = fnv1a64(token, fnv1a64("#"));
    return {static_cast<std::size_t>(h % dim), (s >> 63) == 0 ? 1 : -1};
}

void l2_normalize(std::vector<double>& values) {
    double sum_sq = 0.0;
    for (double v : values) sum_sq += v * v;
    if (sum_sq == 0.0) return;
    const double norm = std::sqrt(sum_sq);
    for (double& v : values) v /= norm;
}

EmbeddingVector embed(const NormalizedTokens& tokens, std::size_t dim) {
    EmbeddingVector out;
    out.values.assign(dim, 0.0);
    const auto& t = tokens.tokens;
    auto add = [&](std::string_view feature) {
        const auto hashed = hash_token(feature, dim);
        out.values[hashed.index] += hashed.sign;
    };
    std::string bigram;
    for (std::size_t i = 0; i < t.size(); ++i) {
        add(t[i]);
        if (i + 1 < t.size()) {
            bigram.assign(t[i]);
            bigram.push_back('_');
            bigram.append(t[i + 1]);
            add(bigram);
        }
    }
    l2_normalize(out.values);
    out.provider_id = "builtin-fnv1a/1";
    return out;
}

EmbeddingVector EmbeddingProvider::embed_one(const NormalizedTokens& tokens) const {
    auto batch = embed_batch(std::span<const NormalizedTokens>(&tokens, 1));
    return std::move(batch.front());
}

HashingEmbedder::HashingEmbedder(std::size_t dim) : dim_(dim) {
    if (dim_ == 0) throw ConfigError("embedding dimension must be positive");
}

std::string HashingEmbedder::provider_id() const { return "builtin-fnv1a/1"; }

std::vector<EmbeddingVector> HashingEmbedder::embed_batch(
    std::span<const NormalizedTokens> batch) const {
    std::vector<EmbeddingVector> out;
    out.reserve(batch.size());
    for (const auto& tokens : batch) out.push_back(embed(tokens, dim_));
    return out;
}

std::unique_ptr<EmbeddingProvider> make_embedder(const EmbedderConfig& config) {
    if (config.dim == 0) throw ConfigError("embedding dimension must be positive");
    if (config.kind == "builtin") return std::make_unique<HashingEmbedder>(config.dim);
    if (config.kind == "external") {
        if (config.command.empty()) throw ConfigError("--embedder external requires --embedder-cmd");
        return std::make_unique<ExternalEmbedder>(config.command, config.dim);
    }
    throw ConfigError("unknown embedder '" + config.kind + "' (expected builtin or external)");
}

}  // namespace mgate
