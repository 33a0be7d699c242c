#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <random>

#include "convsearch/bm25.hpp"
#include "convsearch/errors.hpp"
#include "convsearch/index_file.hpp"
#include "oracles.hpp"
#include "test_util.hpp"

using namespace convsearch;

namespace {

Corpus corpus_of(const std::vector<oracle::Doc>& docs) {
  Corpus corpus;
  for (const auto& d : docs) corpus.add({d.id, d.text});
  return corpus;
}

const TokenizerConfig kPlain{.lowercase = true, .stem = false, .remove_stopwords = false};

}  // namespace

TEST_CASE("document frequency and average length") {
  Corpus corpus = corpus_of({{"d1", "apple boat"},
                             {"d2", "apple cloud delta ember"},
                             {"d3", "apple frost grain hatch inlet joker"}});
  auto index = InvertedIndex::build(corpus, kPlain, {}, Bm25Params::topiocqa());
  CHECK(index.df("apple") == 3);
  CHECK(index.df("boat") == 1);
  CHECK(index.df("zebra") == 0);
  // lengths 2, 4, 6
  CHECK(index.avgdl() == doctest::Approx(4.0).epsilon(1e-12));
  CHECK(index.doc_count() == 3);
}

TEST_CASE("single-doc closed form, frozen from the brute-force oracle") {
  // Oracle evaluation of {d1:"apple"}, query "apple", k1=0.9, b=0.4:
  // idf = ln((1-1+0.5)/(1+0.5)+1) = ln(4/3); tf part = 1*1.9/(1+0.9) = 1.
  std::vector<oracle::Doc> docs{{"d1", "apple"}};
  auto oracle_scores = oracle::bm25_scores(docs, kPlain, {}, {0.9, 0.4}, "apple");
  REQUIRE(oracle_scores.size() == 1);
  CHECK(oracle_scores[0] == doctest::Approx(0.28768207245178085).epsilon(1e-12));

  auto index = InvertedIndex::build(corpus_of(docs), kPlain, {}, {0.9, 0.4});
  auto tokens = index.tokenize_query("apple");
  CHECK(index.score(tokens, 0) == oracle_scores[0]);
}

TEST_CASE("terms absent from a document contribute nothing") {
  Corpus corpus = corpus_of({{"d1", "apple boat"}, {"d2", "cloud"}});
  auto index = InvertedIndex::build(corpus, kPlain, {}, {0.9, 0.4});
  auto q = index.tokenize_query("cloud");
  CHECK(index.score(q, 0) == 0.0);
  CHECK(index.score(q, 1) > 0.0);
}

TEST_CASE("term saturation never decreases with tf") {
  for (int tf = 1; tf < 20; ++tf) {
    std::string low_text, high_text;
    for (int i = 0; i < tf; ++i) low_text += " apple";
    for (int i = 0; i < 2 * tf; ++i) high_text += " apple";
    // Pad to equal lengths so only tf varies.
    for (int i = 0; i < 2 * tf; ++i) low_text += " boat";
    auto index = InvertedIndex::build(
        corpus_of({{"low", low_text}, {"high", high_text}, {"other", "cloud"}}), kPlain, {},
        {0.9, 0.4});
    auto q = index.tokenize_query("apple");
    CHECK(index.score(q, 1) >= index.score(q, 0));
  }
}

TEST_CASE("retrieve_topk equals the brute-force oracle on random corpora") {
  std::mt19937_64 rng(101);
  TruncationLimits lim;
  Bm25Params prm{0.9, 0.4};
  for (int trial = 0; trial < 30; ++trial) {
    auto docs = oracle::random_corpus(rng, 80);
    auto index = InvertedIndex::build(corpus_of(docs), kPlain, lim, prm);
    for (int q = 0; q < 10; ++q) {
      std::string query = oracle::random_query(rng);
      auto expected_scores = oracle::bm25_scores(docs, kPlain, lim, prm, query);
      auto expected = oracle::rank_all(docs, expected_scores, 10);
      auto actual = index.retrieve_topk(query, 10);
      REQUIRE(actual.size() == expected.size());
      for (std::size_t i = 0; i < actual.size(); ++i) {
        CHECK(actual[i].id == expected[i].id);
        CHECK(actual[i].score == expected[i].score);  // bitwise
      }
    }
  }
}

TEST_CASE("k larger than the corpus returns the full ranking") {
  Corpus corpus = corpus_of({{"d1", "apple"}, {"d2", "boat"}});
  auto index = InvertedIndex::build(corpus, kPlain, {}, {0.9, 0.4});
  CHECK(index.retrieve_topk("apple", 100).size() == 2);
}

TEST_CASE("score ties break by ascending passage id") {
  // Identical documents score identically for any query.
  Corpus corpus = corpus_of({{"zz", "apple boat"}, {"aa", "apple boat"}, {"mm", "apple boat"}});
  auto index = InvertedIndex::build(corpus, kPlain, {}, {0.9, 0.4});
  auto ranked = index.retrieve_topk("apple", 3);
  REQUIRE(ranked.size() == 3);
  CHECK(ranked[0].id == "aa");
  CHECK(ranked[1].id == "mm");
  CHECK(ranked[2].id == "zz");
}

TEST_CASE("tokens beyond the truncation limit never affect scores") {
  TruncationLimits lim;
  lim.passage_tokens = 4;
  lim.query_tokens = 2;
  Corpus a = corpus_of({{"d1", "apple boat cloud delta"}, {"d2", "ember frost"}});
  Corpus b = corpus_of({{"d1", "apple boat cloud delta EXTRA TOKENS HERE"}, {"d2", "ember frost"}});
  auto ia = InvertedIndex::build(a, kPlain, lim, {0.9, 0.4});
  auto ib = InvertedIndex::build(b, kPlain, lim, {0.9, 0.4});
  auto ra = ia.retrieve_topk("apple boat ignored_tail", 2);
  auto rb = ib.retrieve_topk("apple boat other_tail", 2);
  REQUIRE(ra.size() == rb.size());
  for (std::size_t i = 0; i < ra.size(); ++i) {
    CHECK(ra[i].id == rb[i].id);
    CHECK(ra[i].score == rb[i].score);
  }
}

TEST_CASE("empty corpus is a configuration error") {
  Corpus corpus;
  CHECK_THROWS_AS(InvertedIndex::build(corpus, kPlain, {}, {0.9, 0.4}), Error);
}

TEST_CASE("rank_of_gold finds the first relevant position") {
  Corpus corpus = corpus_of({{"d1", "apple apple apple"},
                             {"d2", "apple apple boat"},
                             {"d3", "apple boat boat"},
                             {"d4", "cloud"}});
  auto index = InvertedIndex::build(corpus, kPlain, {}, {0.9, 0.4});

  std::vector<std::string> unique_gold{"d4"};
  auto rank = index.rank_of_gold("cloud", unique_gold);
  REQUIRE(rank.has_value());
  CHECK(*rank == 1);

  // Two golds: the better-ranked one determines the outcome.
  std::vector<std::string> two{"d3", "d2"};
  auto first = index.rank_of_gold("apple", two);
  REQUIRE(first.has_value());
  CHECK(*first == 2);
}

TEST_CASE("gold beyond the search depth is absent") {
  std::vector<oracle::Doc> docs;
  for (int i = 0; i < 120; ++i) {
    char id[16];
    std::snprintf(id, sizeof(id), "d%03d", i);
    docs.push_back({id, "apple"});
  }
  auto index = InvertedIndex::build(corpus_of(docs), kPlain, {}, {0.9, 0.4});
  // All docs tie; id order puts d100 at rank 101.
  std::vector<std::string> gold{"d100"};
  CHECK_FALSE(index.rank_of_gold("apple", gold, 100).has_value());
  auto rank = index.rank_of_gold("apple", gold, 101);
  REQUIRE(rank.has_value());
  CHECK(*rank == 101);
}

TEST_CASE("appending the gold text to the query does not worsen its rank") {
  // Empirical check; stemming collisions could break it in principle, so a
  // violation is surfaced as a message rather than a failure.
  std::mt19937_64 rng(202);
  TokenizerConfig stemmed{.lowercase = true, .stem = true, .remove_stopwords = false};
  int violations = 0;
  for (int trial = 0; trial < 20; ++trial) {
    auto docs = oracle::random_corpus(rng, 60);
    auto index = InvertedIndex::build(corpus_of(docs), stemmed, {}, {0.9, 0.4});
    std::string query = oracle::random_query(rng);
    const auto& gold = docs[rng() % docs.size()];
    std::vector<std::string> gold_ids{gold.id};
    auto before = index.rank_of_gold(query, gold_ids, 1000);
    auto after = index.rank_of_gold(query + " " + gold.text, gold_ids, 1000);
    if (before && after && *after > *before) ++violations;
  }
  if (violations > 0) {
    MESSAGE("rank monotonicity violated ", violations, " times (stemming collisions)");
  }
  CHECK(violations <= 2);
}

TEST_CASE("index serialization is byte-identical across rebuilds and survives reload") {
  std::mt19937_64 rng(303);
  auto docs = oracle::random_corpus(rng, 40);
  Corpus corpus = corpus_of(docs);
  TokenizerConfig stemmed{.lowercase = true, .stem = true, .remove_stopwords = false};
  auto a = build_search_index(corpus, stemmed, {}, {0.9, 0.4}, DenseConfig{32, 1});
  auto b = build_search_index(corpus, stemmed, {}, {0.9, 0.4}, DenseConfig{32, 1});
  CHECK(index_to_json_string(a) == index_to_json_string(b));
  CHECK(a.fingerprint() == b.fingerprint());

  testutil::TempDir tmp;
  save_index(a, tmp.path("index.json"));
  auto loaded = load_index(tmp.path("index.json"));
  CHECK(index_to_json_string(loaded) == index_to_json_string(a));

  std::string query = oracle::random_query(rng);
  auto r1 = a.sparse.retrieve_topk(query, 5);
  auto r2 = loaded.sparse.retrieve_topk(query, 5);
  REQUIRE(r1.size() == r2.size());
  for (std::size_t i = 0; i < r1.size(); ++i) {
    CHECK(r1[i].id == r2[i].id);
    CHECK(r1[i].score == r2[i].score);
  }
}

TEST_CASE("loading a mismatched format version is rejected") {
  testutil::TempDir tmp;
  std::mt19937_64 rng(7);
  auto index = build_search_index(corpus_of(oracle::random_corpus(rng, 10)), kPlain, {},
                                  {0.9, 0.4}, std::nullopt);
  std::string text = index_to_json_string(index);
  auto pos = text.find("\"format_version\":1");
  REQUIRE(pos != std::string::npos);
  text.replace(pos, 18, "\"format_version\":9");
  testutil::write_file(tmp.path("bad.json"), text);
  CHECK_THROWS_WITH_AS(load_index(tmp.path("bad.json")), doctest::Contains("version"), Error);
}
