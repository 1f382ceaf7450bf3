// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <ila/docstore.hpp>
#include <ila/http.hpp>

#include <nlohmann/json_fwd.hpp>

#include <atomic>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace ila
{

struct EmbeddingVector
{
    std::vector<double> values;

    std::size_t dim() const { return values.size(); }
    bool is_zero() const;
    double norm() const;

    bool operator==(const EmbeddingVector&) const = default;
};

/// Source of raw (not necessarily normalized) text embeddings.
class EmbeddingProvider
{
public:
    virtual ~EmbeddingProvider() = default;

    /// One vector per input text, order preserved.
    virtual std::vector<EmbeddingVector> embed_raw(std::span<const std::string> texts) = 0;

    /// Identifies the embedder an index was built with.
    virtual std::string tag() const = 0;
};

/// Feature-hashing bag of words: lowercase word tokens hashed (FNV-1a 64)
/// into `dim` buckets and counted. Deterministic and offline.
class HashingEmbedder final: public EmbeddingProvider
{
public:
    static constexpr std::size_t kDefaultDim = 256;

    explicit HashingEmbedder(std::size_t dim = kDefaultDim);

    std::vector<EmbeddingVector> embed_raw(std::span<const std::string> texts) override;
    std::string tag() const override;

    std::size_t bucket(std::string_view token) const;

    /// Maximal runs of ASCII alphanumerics, '_' and non-ASCII bytes, lowercased.
    static std::vector<std::string> tokenize(std::string_view text);
    static std::uint64_t fnv1a(std::string_view s);

private:
    std::size_t dim_;
};

/// JSON-over-HTTP embedder. Request: {"model": ..., "input": [texts]}.
/// Accepted replies: a bare array of float arrays, or {"data": [{"embedding": [...]}, ...]}.
/// The dimension is fixed by the first reply.
class HttpEmbeddingProvider final: public EmbeddingProvider
{
public:
    HttpEmbeddingProvider(http::Settings settings, std::string model);

    std::vector<EmbeddingVector> embed_raw(std::span<const std::string> texts) override;
    std::string tag() const override;

private:
    http::Settings settings_;
    std::string model_;
    std::atomic<std::size_t> dim_{0};
};

struct Embeddings
{
    std::vector<EmbeddingVector> vectors;
    /// Indices of inputs that embedded to the zero vector (e.g. empty strings).
    std::vector<std::size_t> zero_vectors;
};

/// Embeds and L2-normalizes. `texts` must be non-empty.
Embeddings embed(std::span<const std::string> texts, EmbeddingProvider& provider);

/// dot(a, b) / (|a| |b|), or 0 when either norm is 0. Throws
/// std::invalid_argument on a dimension mismatch.
double cosine(const EmbeddingVector& a, const EmbeddingVector& b);

struct IndexEntry
{
    std::string chunk_id;
    EmbeddingVector vector;
};

/// Exact, exhaustively scanned embedding index over a DocStore's chunks.
class VectorIndex
{
public:
    static VectorIndex build(const DocStore& store, EmbeddingProvider& provider, std::size_t batch_size = 64);

    const std::vector<IndexEntry>& entries() const { return entries_; }
    std::size_t dim() const { return dim_; }
    const std::string& provider_tag() const { return provider_tag_; }
    bool empty() const { return entries_.empty(); }

    /// Throws LoadError unless every chunk id resolves in `store`.
    void check_against(const DocStore& store) const;

    nlohmann::json to_json() const;
    static VectorIndex from_json(const nlohmann::json& j);
    void save(const std::filesystem::path& path) const;
    /// Throws LoadError when the stored provider tag differs from `expected_tag`.
    static VectorIndex load(const std::filesystem::path& path, std::string_view expected_tag);

private:
    std::vector<IndexEntry> entries_;
    std::size_t dim_ = 0;
    std::string provider_tag_;
};

struct ScoredChunk
{
    std::string chunk_id;
    double score = 0.0;

    bool operator==(const ScoredChunk&) const = default;
};

inline constexpr std::size_t kMaxQueriesPerSearch = 3;
inline constexpr std::size_t kDefaultTopK = 5;

struct SearchResult
{
    enum class Status
    {
        Ok,
        Rejected,
        EmptyIndex,
    };

    Status status = Status::Ok;
    std::string note;
    std::vector<std::vector<ScoredChunk>> per_query;
    /// Union of per-query hits in first-seen order.
    std::vector<ScoredChunk> merged;
};

/// Top-k cosine search for 1..max_queries queries, ranked by descending score
/// then ascending chunk id. Out-of-contract query counts are rejected rather
/// than thrown, because the caller is usually an agent that needs feedback.
SearchResult sem_search(const VectorIndex& index,
                        EmbeddingProvider& provider,
                        std::span<const std::string> queries,
                        std::size_t k = kDefaultTopK,
                        std::size_t max_queries = kMaxQueriesPerSearch);

} // namespace ila
