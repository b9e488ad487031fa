#pragma once

#include <cstddef>
#include <filesystem>
#include <memory>
#include <mutex>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "metric_gate/sql_frontend.hpp"

namespace mgate {

inline constexpr std::size_t kDefaultEmbedDim = 64;

struct EmbeddingVector {
    std::vector<double> values;  // unit L2 norm, or all zeros for empty input
    std::string provider_id;
};

struct HashedToken {
    std::size_t index;  // FNV1a64(token) mod dim
    int sign;           // +1 iff bit 63 of FNV1a64("#" + token) is clear
};

HashedToken hash_token(std::string_view token, std::size_t dim = kDefaultEmbedDim);

// Signed feature hashing of unigrams and adjacent bigrams ("a_b"), then L2
// normalization. Pure and bit-reproducible.
EmbeddingVector embed(const NormalizedTokens& tokens, std::size_t dim = kDefaultEmbedDim);

// Scales `values` to unit L2 norm in place; a zero vector is left unchanged.
void l2_normalize(std::vector<double>& values);

// Source of semantic embeddings for the gate. Implementations must return
// exactly dimension() values per query or throw ProviderError.
class EmbeddingProvider {
public:
    virtual ~EmbeddingProvider() = default;

    virtual std::size_t dimension() const = 0;
    // "builtin" or "external"; part of the model schema fingerprint.
    virtual std::string_view family() const = 0;
    virtual std::string provider_id() const = 0;

    virtual std::vector<EmbeddingVector> embed_batch(std::span<const NormalizedTokens> batch) const = 0;

    EmbeddingVector embed_one(const NormalizedTokens& tokens) const;

    // Whether embed_batch may be called from several threads at once.
    virtual bool concurrent() const { return true; }
};

class HashingEmbedder final : public EmbeddingProvider {
public:
    explicit HashingEmbedder(std::size_t dim = kDefaultEmbedDim);

    std::size_t dimension() const override { return dim_; }
    std::string_view family() const override { return "builtin"; }
    std::string provider_id() const override;
    std::vector<EmbeddingVector> embed_batch(std::span<const NormalizedTokens> batch) const override;

private:
    std::size_t dim_;
};

// Runs `command` once per batch: one detokenized query per LF-terminated line
// on stdin, one line of `dim` space-separated decimals per query on stdout.
// A non-zero exit, a short/long answer, a wrong dimension or a non-finite
// value raise ProviderError. Returned vectors are L2-normalized.
class ExternalEmbedder final : public EmbeddingProvider {
public:
    ExternalEmbedder(std::filesystem::path command, std::size_t dim);

    std::size_t dimension() const override { return dim_; }
    std::string_view family() const override { return "external"; }
    std::string provider_id() const override;
    std::vector<EmbeddingVector> embed_batch(std::span<const NormalizedTokens> batch) const override;
    bool concurrent() const override { return false; }

private:
    std::filesystem::path command_;
    std::size_t dim_;
    mutable std::mutex mu_;  // one in-flight batch per handle
};

struct EmbedderConfig {
    std::string kind = "builtin";  // builtin | external
    std::filesystem::path command;
    std::size_t dim = kDefaultEmbedDim;
};

// Throws ConfigError for an unknown kind, a zero dimension or an external
// embedder without a command.
std::unique_ptr<EmbeddingProvider> make_embedder(const EmbedderConfig& config);

}  // namespace mgate
