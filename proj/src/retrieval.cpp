// SPDX-License-Identifier: Apache-2.0
#include <ila/error.hpp>
#include <ila/retrieval.hpp>

#include <nlohmann/json.hpp>

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <set>
#include <stdexcept>
#include <utility>

namespace ila
{

bool EmbeddingVector::is_zero() const
{
    return std::all_of(values.begin(), values.end(), [](double v) { return v == 0.0; });
}

double EmbeddingVector::norm() const
{
    double sum = 0.0;
    for (double v : values)
        sum += v * v;
    return std::sqrt(sum);
}

// ---------------------------------------------------------------- hashing

HashingEmbedder::HashingEmbedder(std::size_t dim): dim_(dim)
{
    if (dim_ == 0)
        throw ConfigError("embedding dimension must be positive");
}

std::uint64_t HashingEmbedder::fnv1a(std::string_view s)
{
    std::uint64_t h = 14695981039346656037ull;
    for (char c : s)
    {
        h ^= static_cast<unsigned char>(c);
        h *= 1099511628211ull;
    }
    return h;
}

std::vector<std::string> HashingEmbedder::tokenize(std::string_view text)
{
    std::vector<std::string> tokens;
    std::string current;
    for (char ch : text)
    {
        auto c = static_cast<unsigned char>(ch);
        if (c >= 0x80 || std::isalnum(c) || c == '_')
            current += c < 0x80 ? static_cast<char>(std::tolower(c)) : ch;
        else if (!current.empty())
            tokens.push_back(std::exchange(current, {}));
    }
    if (!current.empty())
        tokens.push_back(std::move(current));
    return tokens;
}

std::size_t HashingEmbedder::bucket(std::string_view token) const
{
    return static_cast<std::size_t>(fnv1a(token) % dim_);
}

std::vector<EmbeddingVector> HashingEmbedder::embed_raw(std::span<const std::string> texts)
{
    std::vector<EmbeddingVector> out;
    out.reserve(texts.size());
    for (const auto& t : texts)
    {
        EmbeddingVector v{std::vector<double>(dim_, 0.0)};
        for (const auto& tok : tokenize(t))
            v.values[bucket(tok)] += 1.0;
        out.push_back(std::move(v));
    }
    return out;
}

std::string HashingEmbedder::tag() const
{
    return "hashing-bow-" + std::to_string(dim_);
}

// ---------------------------------------------------------------- remote

HttpEmbeddingProvider::HttpEmbeddingProvider(http::Settings settings, std::string model):
    settings_(std::move(settings)), model_(std::move(model))
{
}

std::vector<EmbeddingVector> HttpEmbeddingProvider::embed_raw(std::span<const std::string> texts)
{
    nlohmann::json body = {{"model", model_}, {"input", std::vector<std::string>(texts.begin(), texts.end())}};
    auto reply = http::post_json(settings_, body);

    nlohmann::json rows;
    if (reply.is_array())
        rows = reply;
    else if (reply.is_object() && reply.contains("data") && reply["data"].is_array())
    {
        rows = nlohmann::json::array();
        for (const auto& d : reply["data"])
            rows.push_back(d.at("embedding"));
    }
    else
        throw TransportError("embedding endpoint returned an unexpected payload");
    if (rows.size() != texts.size())
        throw TransportError("embedding endpoint returned " + std::to_string(rows.size()) + " vectors for " +
                             std::to_string(texts.size()) + " texts");

    std::vector<EmbeddingVector> out;
    for (const auto& row : rows)
    {
        EmbeddingVector v{row.get<std::vector<double>>()};
        std::size_t expected = 0;
        dim_.compare_exchange_strong(expected, v.dim());
        if (v.dim() != dim_ || v.dim() == 0)
            throw TransportError("embedding endpoint changed dimension");
        out.push_back(std::move(v));
    }
    return out;
}

std::string HttpEmbeddingProvider::tag() const
{
    return "remote:" + model_;
}

// ---------------------------------------------------------------- math

Embeddings embed(std::span<const std::string> texts, EmbeddingProvider& provider)
{
    if (texts.empty())
        throw std::invalid_argument("embed: no texts given");
    Embeddings out;
    out.vectors = provider.embed_raw(texts);
    if (out.vectors.size() != texts.size())
        throw TransportError("embedding provider returned the wrong number of vectors");
    for (std::size_t i = 0; i < out.vectors.size(); ++i)
    {
        auto& v = out.vectors[i];
        double n = v.norm();
        if (n == 0.0)
        {
            out.zero_vectors.push_back(i);
            continue;
        }
        for (double& x : v.values)
            x /= n;
    }
    return out;
}

double cosine(const EmbeddingVector& a, const EmbeddingVector& b)
{
    if (a.dim() != b.dim())
        throw std::invalid_argument("cosine: dimension mismatch (" + std::to_string(a.dim()) + " vs " +
                                    std::to_string(b.dim()) + ")");
    double dot = 0.0, na = 0.0, nb = 0.0;
    for (std::size_t i = 0; i < a.dim(); ++i)
    {
        dot += a.values[i] * b.values[i];
        na += a.values[i] * a.values[i];
        nb += b.values[i] * b.values[i];
    }
    if (na == 0.0 || nb == 0.0)
        return 0.0;
    return std::clamp(dot / (std::sqrt(na) * std::sqrt(nb)), -1.0, 1.0);
}

// ---------------------------------------------------------------- index

VectorIndex VectorIndex::build(const DocStore& store, EmbeddingProvider& provider, std::size_t batch_size)
{
    VectorIndex index;
    index.provider_tag_ = provider.tag();
    const auto& chunks = store.chunks();
    for (std::size_t start = 0; start < chunks.size(); start += batch_size)
    {
        std::vector<std::string> texts;
        for (std::size_t i = start; i < std::min(chunks.size(), start + batch_size); ++i)
            texts.push_back(chunks[i].text);
        auto embedded = embed(texts, provider);
        for (std::size_t i = 0; i < texts.size(); ++i)
        {
            auto& v = embedded.vectors[i];
            if (index.dim_ == 0)
                index.dim_ = v.dim();
            else if (v.dim() != index.dim_)
                throw TransportError("embedding provider changed dimension mid-build");
            index.entries_.push_back(IndexEntry{chunks[start + i].chunk_id, std::move(v)});
        }
    }
    return index;
}

void VectorIndex::check_against(const DocStore& store) const
{
    for (const auto& e : entries_)
        if (!store.chunk(e.chunk_id))
            throw LoadError("index entry '" + e.chunk_id + "' does not resolve in the document store");
}

nlohmann::json VectorIndex::to_json() const
{
    nlohmann::json entries = nlohmann::json::array();
    for (const auto& e : entries_)
        entries.push_back({{"chunk_id", e.chunk_id}, {"vector", e.vector.values}});
    return {{"format", "ila-vector-index"},
            {"version", 1},
            {"provider_tag", provider_tag_},
            {"dim", dim_},
            {"entries", std::move(entries)}};
}

VectorIndex VectorIndex::from_json(const nlohmann::json& j)
{
    VectorIndex index;
    try
    {
        if (j.at("format") != "ila-vector-index")
            throw LoadError("not a vector index file");
        index.provider_tag_ = j.at("provider_tag").get<std::string>();
        index.dim_ = j.at("dim").get<std::size_t>();
        std::set<std::string> seen;
        for (const auto& e : j.at("entries"))
        {
            IndexEntry entry{e.at("chunk_id").get<std::string>(), {e.at("vector").get<std::vector<double>>()}};
            if (entry.vector.dim() != index.dim_)
                throw LoadError("index entry '" + entry.chunk_id + "' has the wrong dimension");
            if (!seen.insert(entry.chunk_id).second)
                throw LoadError("duplicate index entry '" + entry.chunk_id + "'");
            index.entries_.push_back(std::move(entry));
        }
    }
    catch (const nlohmann::json::exception& e)
    {
        throw LoadError(std::string("malformed vector index: ") + e.what());
    }
    return index;
}

void VectorIndex::save(const std::filesystem::path& path) const
{
    std::ofstream out(path, std::ios::binary);
    if (!out)
        throw IoError("cannot write " + path.string());
    out << to_json().dump() << '\n';
    if (!out)
        throw IoError("cannot write " + path.string());
}

VectorIndex VectorIndex::load(const std::filesystem::path& path, std::string_view expected_tag)
{
    std::ifstream in(path, std::ios::binary);
    if (!in)
        throw LoadError("cannot read vector index: " + path.string());
    nlohmann::json j;
    try
    {
        in >> j;
    }
    catch (const nlohmann::json::exception& e)
    {
        throw LoadError("malformed vector index " + path.string() + ": " + e.what());
    }
    auto index = from_json(j);
    if (index.provider_tag_ != expected_tag)
        throw LoadError("vector index " + path.string() + " was built with '" + index.provider_tag_ +
                        "' but the configured embedder is '" + std::string(expected_tag) + "'");
    return index;
}

// ---------------------------------------------------------------- search

SearchResult sem_search(const VectorIndex& index,
                        EmbeddingProvider& provider,
                        std::span<const std::string> queries,
                        std::size_t k,
                        std::size_t max_queries)
{
    SearchResult result;
    if (queries.empty() || queries.size() > max_queries)
    {
        result.status = SearchResult::Status::Rejected;
        result.note = "rejected: expected 1 to " + std::to_string(max_queries) + " queries, got " +
                      std::to_string(queries.size());
        return result;
    }
    if (k == 0)
    {
        result.status = SearchResult::Status::Rejected;
        result.note = "rejected: k must be positive";
        return result;
    }
    if (index.empty())
    {
        result.status = SearchResult::Status::EmptyIndex;
        result.note = "the documentation index is empty";
        result.per_query.resize(queries.size());
        return result;
    }
    if (provider.tag() != index.provider_tag())
        throw ConfigError("query embedder '" + provider.tag() + "' does not match index embedder '" +
                          index.provider_tag() + "'");

    auto embedded = embed(queries, provider);
    std::set<std::string_view> seen;
    for (const auto& q : embedded.vectors)
    {
        std::vector<ScoredChunk> scored;
        scored.reserve(index.entries().size());
        for (const auto& e : index.entries())
            scored.push_back({e.chunk_id, cosine(q, e.vector)});
        auto n = std::min(k, scored.size());
        std::partial_sort(scored.begin(), scored.begin() + static_cast<std::ptrdiff_t>(n), scored.end(),
                          [](const ScoredChunk& a, const ScoredChunk& b) {
                              if (a.score != b.score)
                                  return a.score > b.score;
                              return a.chunk_id < b.chunk_id;
                          });
        scored.resize(n);
        result.per_query.push_back(std::move(scored));
    }
    for (const auto& hits : result.per_query)
        for (const auto& h : hits)
            if (seen.insert(h.chunk_id).second)
                result.merged.push_back(h);
    return result;
}

} // namespace ila
