// SPDX-License-Identifier: Apache-2.0
#include "../support/mock_server.hpp"
#include "../support/support.hpp"

#include <ila/error.hpp>
#include <ila/retrieval.hpp>
#include <ila/text.hpp>

#include <nlohmann/json.hpp>

#include <catch_amalgamated.hpp>

#include <algorithm>
#include <cmath>
#include <random>
#include <set>

using namespace ila;
using namespace ila::testing;
using Catch::Matchers::WithinAbs;

namespace
{

EmbeddingVector one(const std::string& text, EmbeddingProvider& p)
{
    std::vector<std::string> texts{text};
    return embed(texts, p).vectors.at(0);
}

DocStore small_store()
{
    TempDir dir;
    write_corpus(dir.path(), {{"a.md", "# Alpha\nred apple fruit\n# Beta\nblue ocean water\n# Gamma\ngreen forest tree\n"}});
    return DocStore::ingest(dir.path());
}

/// Every chunk scored with `cosine`, fully sorted by (-score, chunk_id), cut to k.
std::vector<ScoredChunk> brute_force(const VectorIndex& index, const EmbeddingVector& q, std::size_t k)
{
    std::vector<ScoredChunk> all;
    for (const auto& e : index.entries())
        all.push_back({e.chunk_id, cosine(q, e.vector)});
    std::sort(all.begin(), all.end(), [](const ScoredChunk& a, const ScoredChunk& b) {
        return a.score != b.score ? a.score > b.score : a.chunk_id < b.chunk_id;
    });
    all.resize(std::min(k, all.size()));
    return all;
}

} // namespace

TEST_CASE("hashing embedder is scale invariant and deterministic")
{
    HashingEmbedder h;
    CHECK(one("x x", h) == one("x", h));
    CHECK(one("Some text here", h) == one("Some text here", h));
    CHECK_THAT(one("several different words", h).norm(), WithinAbs(1.0, 1e-12));
    CHECK(h.tag() == "hashing-bow-256");
}

TEST_CASE("disjoint vocabularies are orthogonal")
{
    HashingEmbedder h;
    // Pick words whose buckets do not collide.
    std::vector<std::string> words = {"alpha", "bravo", "charlie", "delta", "echo", "foxtrot", "golf", "hotel"};
    std::set<std::size_t> used;
    std::vector<std::string> distinct;
    for (const auto& w : words)
        if (used.insert(h.bucket(w)).second)
            distinct.push_back(w);
    REQUIRE(distinct.size() >= 4);
    auto a = one(distinct[0] + " " + distinct[1], h);
    auto b = one(distinct[2] + " " + distinct[3], h);
    CHECK(cosine(a, b) == 0.0);
}

TEST_CASE("tokenizer")
{
    CHECK(HashingEmbedder::tokenize("Hello, world_1!") == std::vector<std::string>{"hello", "world_1"});
    CHECK(HashingEmbedder::tokenize("  ").empty());
    CHECK(HashingEmbedder::fnv1a("") == 14695981039346656037ull);
    CHECK(HashingEmbedder::fnv1a("a") == 0xaf63dc4c8601ec8cull);
}

TEST_CASE("empty text embeds to a flagged zero vector")
{
    HashingEmbedder h;
    std::vector<std::string> texts{"words", "", "!!!"};
    auto e = embed(texts, h);
    CHECK(e.zero_vectors == std::vector<std::size_t>{1, 2});
    CHECK(e.vectors[1].is_zero());
    CHECK_THROWS_AS(embed(std::span<const std::string>{}, h), std::invalid_argument);
}

TEST_CASE("cosine basics")
{
    EmbeddingVector v{{1.0, 2.0, 3.0}};
    CHECK_THAT(cosine(v, v), WithinAbs(1.0, 1e-12));
    CHECK(cosine(EmbeddingVector{{1, 0, 0}}, EmbeddingVector{{0, 1, 0}}) == 0.0);
    CHECK(cosine(EmbeddingVector{{0, 0}}, EmbeddingVector{{1, 1}}) == 0.0);
    CHECK_THROWS_AS(cosine(EmbeddingVector{{1, 0}}, EmbeddingVector{{1, 0, 0}}), std::invalid_argument);
}

TEST_CASE("cosine agrees with a direct computation on random pairs")
{
    std::mt19937_64 rng(20240601);
    std::uniform_real_distribution<double> d(-5.0, 5.0);
    for (int i = 0; i < 1000; ++i)
    {
        std::size_t dim = 1 + rng() % 64;
        EmbeddingVector a, b;
        for (std::size_t j = 0; j < dim; ++j)
        {
            a.values.push_back(d(rng));
            b.values.push_back(d(rng));
        }
        long double dot = 0, na = 0, nb = 0;
        for (std::size_t j = 0; j < dim; ++j)
        {
            dot += static_cast<long double>(a.values[j]) * b.values[j];
            na += static_cast<long double>(a.values[j]) * a.values[j];
            nb += static_cast<long double>(b.values[j]) * b.values[j];
        }
        double expected = static_cast<double>(dot / (std::sqrt(na) * std::sqrt(nb)));
        double got = cosine(a, b);
        CHECK_THAT(got, WithinAbs(expected, 1e-9));
        CHECK(got >= -1.0);
        CHECK(got <= 1.0);
    }
}

TEST_CASE("self-similar query ranks first with score 1")
{
    auto store = small_store();
    HashingEmbedder h;
    auto index = VectorIndex::build(store, h);
    std::vector<std::string> q{"blue ocean water"};
    auto r = sem_search(index, h, q, 5);
    REQUIRE(r.status == SearchResult::Status::Ok);
    REQUIRE(r.per_query.size() == 1);
    REQUIRE(r.per_query[0].size() == 3);  // k larger than the index saturates
    CHECK(r.per_query[0][0].chunk_id == "beta");
    CHECK(text::format_score(r.per_query[0][0].score) == "1.0000");
    // the remaining two tie at 0 and fall back to id order
    CHECK(r.per_query[0][1].chunk_id == "alpha");
    CHECK(r.per_query[0][2].chunk_id == "gamma");
}

TEST_CASE("search contract violations are reported, not thrown")
{
    auto store = small_store();
    HashingEmbedder h;
    auto index = VectorIndex::build(store, h);
    std::vector<std::string> four{"a", "b", "c", "d"};
    auto r = sem_search(index, h, four);
    CHECK(r.status == SearchResult::Status::Rejected);
    CHECK(r.note.find("got 4") != std::string::npos);

    CHECK(sem_search(index, h, std::span<const std::string>{}).status == SearchResult::Status::Rejected);
    std::vector<std::string> q{"x"};
    CHECK(sem_search(index, h, q, 0).status == SearchResult::Status::Rejected);

    VectorIndex empty;
    auto e = sem_search(empty, h, q);
    CHECK(e.status == SearchResult::Status::EmptyIndex);
    CHECK_FALSE(e.note.empty());
}

TEST_CASE("merged results keep first-seen order without duplicates")
{
    auto& f = fixture();
    std::vector<std::string> q{"string split", "split a string into parts", "map keys"};
    auto r = sem_search(f.index, f.embedder, q, 5);
    REQUIRE(r.per_query.size() == 3);
    std::vector<std::string> expected;
    std::set<std::string> seen;
    for (const auto& hits : r.per_query)
        for (const auto& s : hits)
            if (seen.insert(s.chunk_id).second)
                expected.push_back(s.chunk_id);
    std::vector<std::string> got;
    for (const auto& s : r.merged)
        got.push_back(s.chunk_id);
    CHECK(got == expected);
}

TEST_CASE("rankings equal an exhaustive sort on the fixture index")
{
    auto& f = fixture();
    std::vector<std::string> vocab;
    for (const auto& c : f.docs.chunks())
        for (const auto& t : HashingEmbedder::tokenize(c.text))
            vocab.push_back(t);
    std::mt19937_64 rng(7);
    for (int i = 0; i < 25; ++i)
    {
        std::string query;
        for (std::size_t w = 0, n = 1 + rng() % 6; w < n; ++w)
            query += vocab[rng() % vocab.size()] + " ";
        std::size_t k = 1 + rng() % 12;
        std::vector<std::string> q{query};
        auto r = sem_search(f.index, f.embedder, q, k);
        auto expected = brute_force(f.index, one(query, f.embedder), k);
        INFO(query);
        CHECK(r.per_query.at(0) == expected);
    }
}

TEST_CASE("index invariants and persistence")
{
    auto& f = fixture();
    CHECK(f.index.entries().size() == f.docs.chunks().size());
    std::set<std::string> ids;
    for (const auto& e : f.index.entries())
    {
        CHECK(ids.insert(e.chunk_id).second);
        CHECK(f.docs.chunk(e.chunk_id));
        CHECK(e.vector.dim() == f.index.dim());
        if (!e.vector.is_zero())
            CHECK_THAT(e.vector.norm(), WithinAbs(1.0, 1e-6));
    }
    f.index.check_against(f.docs);

    TempDir dir;
    f.index.save(dir / "index.json");
    auto loaded = VectorIndex::load(dir / "index.json", f.embedder.tag());
    REQUIRE(loaded.entries().size() == f.index.entries().size());
    for (std::size_t i = 0; i < loaded.entries().size(); ++i)
    {
        CHECK(loaded.entries()[i].chunk_id == f.index.entries()[i].chunk_id);
        CHECK(loaded.entries()[i].vector == f.index.entries()[i].vector);
    }
    CHECK_THROWS_AS(VectorIndex::load(dir / "index.json", "remote:other"), LoadError);
}

TEST_CASE("index built with one embedder refuses queries from another")
{
    auto store = small_store();
    HashingEmbedder h256;
    HashingEmbedder h64(64);
    auto index = VectorIndex::build(store, h256);
    std::vector<std::string> q{"apple"};
    CHECK_THROWS_AS(sem_search(index, h64, q), ConfigError);
}

TEST_CASE("remote embedder accepts both reply shapes")
{
    MockServer server("/embed", [](const httplib::Request& req, httplib::Response& res) {
        auto body = nlohmann::json::parse(req.body);
        nlohmann::json data = nlohmann::json::array();
        for (const auto& t : body["input"])
            data.push_back({{"embedding", {static_cast<double>(t.get<std::string>().size()), 1.0}}});
        if (body["model"] == "bare")
        {
            nlohmann::json rows = nlohmann::json::array();
            for (const auto& d : data)
                rows.push_back(d["embedding"]);
            res.set_content(rows.dump(), "application/json");
        }
        else
            res.set_content(nlohmann::json{{"data", data}}.dump(), "application/json");
    });
    http::Settings s;
    s.url = server.url();
    for (const char* model : {"bare", "wrapped"})
    {
        HttpEmbeddingProvider p(s, model);
        std::vector<std::string> texts{"abc", "a"};
        auto raw = p.embed_raw(texts);
        REQUIRE(raw.size() == 2);
        CHECK(raw[0].values == std::vector<double>{3.0, 1.0});
        CHECK(p.tag() == std::string("remote:") + model);
    }
}

TEST_CASE("remote embedder retries server errors then gives up")
{
    std::atomic<int> calls{0};
    MockServer server("/embed", [&](const httplib::Request&, httplib::Response& res) {
        if (++calls < 3)
        {
            res.status = 503;
            return;
        }
        res.set_content("[[1.0, 0.0]]", "application/json");
    });
    http::Settings s;
    s.url = server.url();
    s.backoff = std::chrono::milliseconds(1);
    HttpEmbeddingProvider p(s, "m");
    std::vector<std::string> texts{"x"};
    CHECK(p.embed_raw(texts).size() == 1);
    CHECK(calls == 3);

    MockServer down("/embed", [](const httplib::Request&, httplib::Response& res) { res.status = 500; });
    s.url = down.url();
    s.max_retries = 2;
    HttpEmbeddingProvider q(s, "m");
    CHECK_THROWS_AS(q.embed_raw(texts), TransportError);
    CHECK(down.hits() == 3);
}

TEST_CASE("remote embedder rejects dimension changes")
{
    std::atomic<int> calls{0};
    MockServer server("/embed", [&](const httplib::Request&, httplib::Response& res) {
        res.set_content(++calls == 1 ? "[[1.0, 0.0]]" : "[[1.0, 0.0, 2.0]]", "application/json");
    });
    http::Settings s;
    s.url = server.url();
    HttpEmbeddingProvider p(s, "m");
    std::vector<std::string> texts{"x"};
    p.embed_raw(texts);
    CHECK_THROWS_AS(p.embed_raw(texts), TransportError);
}
