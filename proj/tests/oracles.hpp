// Independent brute-force oracles, written straight from the definitions.
// They deliberately share no scoring/ranking code with the library; tests
// compare the two routes.
#pragma once

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <set>
#include <string>
#include <vector>

#include "convsearch/dense.hpp"
#include "convsearch/ranking.hpp"
#include "convsearch/tokenize.hpp"

namespace oracle {

struct Doc {
  std::string id;
  std::string text;
};

// Okapi BM25 by definition: per document, walk the query tokens in order and
// add IDF(t) * tf*(k1+1) / (tf + k1*(1-b+b*dl/avgdl)) with
// IDF(t) = ln((N-df+0.5)/(df+0.5)+1).
inline std::vector<double> bm25_scores(const std::vector<Doc>& docs,
                                       const convsearch::TokenizerConfig& tok,
                                       const convsearch::TruncationLimits& lim,
                                       const convsearch::Bm25Params& prm,
                                       const std::string& query) {
  std::vector<std::vector<std::string>> doc_tokens;
  doc_tokens.reserve(docs.size());
  std::uint64_t total = 0;
  for (const auto& d : docs) {
    doc_tokens.push_back(convsearch::tokenize(d.text, tok, lim.passage_tokens));
    total += doc_tokens.back().size();
  }
  double n = static_cast<double>(docs.size());
  double avgdl = static_cast<double>(total) / n;
  auto query_tokens = convsearch::tokenize(query, tok, lim.query_tokens);

  std::vector<double> scores(docs.size(), 0.0);
  for (std::size_t i = 0; i < docs.size(); ++i) {
    double dl = static_cast<double>(doc_tokens[i].size());
    double s = 0.0;
    for (const auto& term : query_tokens) {
      double tf = static_cast<double>(
          std::count(doc_tokens[i].begin(), doc_tokens[i].end(), term));
      if (tf == 0.0) continue;
      double df = 0.0;
      for (const auto& dt : doc_tokens) {
        if (std::find(dt.begin(), dt.end(), term) != dt.end()) df += 1.0;
      }
      double idf = std::log((n - df + 0.5) / (df + 0.5) + 1.0);
      s += idf * tf * (prm.k1 + 1.0) / (tf + prm.k1 * (1.0 - prm.b + prm.b * dl / avgdl));
    }
    scores[i] = s;
  }
  return scores;
}

// Exhaustive cosine scan; sequential dot products.
inline std::vector<double> cosine_scores(const std::vector<Doc>& docs,
                                         const convsearch::Embedder& embedder,
                                         const convsearch::TruncationLimits& lim,
                                         const std::string& query) {
  Eigen::VectorXd q = embedder.embed(query, lim.query_tokens);
  std::vector<double> scores(docs.size(), 0.0);
  for (std::size_t i = 0; i < docs.size(); ++i) {
    Eigen::VectorXd v = embedder.embed(docs[i].text, lim.passage_tokens);
    double s = 0.0;
    for (Eigen::Index j = 0; j < v.size(); ++j) s += v[j] * q[j];
    scores[i] = s;
  }
  return scores;
}

// Full ranking by (score desc, id asc).
inline convsearch::RankedList rank_all(const std::vector<Doc>& docs,
                                       const std::vector<double>& scores, std::size_t k) {
  std::vector<std::size_t> order(docs.size());
  std::iota(order.begin(), order.end(), 0u);
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    if (scores[a] != scores[b]) return scores[a] > scores[b];
    return docs[a].id < docs[b].id;
  });
  convsearch::RankedList out;
  for (std::size_t i = 0; i < std::min(k, order.size()); ++i) {
    out.push_back({docs[order[i]].id, scores[order[i]]});
  }
  return out;
}

inline double mrr(const convsearch::RankedList& ranked, const std::set<std::string>& relevant,
                  int k) {
  for (std::size_t i = 0; i < ranked.size() && i < static_cast<std::size_t>(k); ++i) {
    if (relevant.count(ranked[i].id)) return 1.0 / static_cast<double>(i + 1);
  }
  return 0.0;
}

inline double ndcg(const convsearch::RankedList& ranked, const std::set<std::string>& relevant,
                   int k) {
  double dcg = 0.0;
  for (std::size_t i = 0; i < ranked.size() && i < static_cast<std::size_t>(k); ++i) {
    if (relevant.count(ranked[i].id)) dcg += 1.0 / std::log2(static_cast<double>(i) + 2.0);
  }
  double idcg = 0.0;
  std::size_t ideal = std::min<std::size_t>(static_cast<std::size_t>(k), relevant.size());
  for (std::size_t i = 0; i < ideal; ++i) idcg += 1.0 / std::log2(static_cast<double>(i) + 2.0);
  return idcg == 0.0 ? 0.0 : dcg / idcg;
}

inline double recall(const convsearch::RankedList& ranked, const std::set<std::string>& relevant,
                     int k) {
  double hits = 0.0;
  for (std::size_t i = 0; i < ranked.size() && i < static_cast<std::size_t>(k); ++i) {
    if (relevant.count(ranked[i].id)) hits += 1.0;
  }
  return hits / static_cast<double>(relevant.size());
}

inline double mean(const std::vector<double>& xs) {
  double s = 0.0;
  for (double x : xs) s += x;
  return s / static_cast<double>(xs.size());
}

inline double population_std(const std::vector<double>& xs) {
  double m = mean(xs);
  double sq = 0.0;
  for (double x : xs) sq += (x - m) * (x - m);
  return std::sqrt(sq / static_cast<double>(xs.size()));
}

// Small-vocabulary random corpora; the narrow vocabulary makes score ties
// (and so the id tie rule) common.
inline std::vector<std::string> test_vocabulary() {
  return {"apple", "boat",  "cloud", "delta", "ember", "frost", "grain", "hatch",
          "inlet", "joker", "kite",  "lemon", "moss",  "night", "olive", "pearl",
          "quartz", "ridge", "stone", "tulip", "umber", "vine",  "wharf", "yarrow"};
}

inline std::vector<Doc> random_corpus(std::mt19937_64& rng, int max_docs) {
  auto vocab = test_vocabulary();
  std::uniform_int_distribution<int> n_docs(2, max_docs);
  std::uniform_int_distribution<int> n_words(2, 30);
  std::uniform_int_distribution<std::size_t> word(0, vocab.size() - 1);
  int n = n_docs(rng);
  std::vector<Doc> docs;
  docs.reserve(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) {
    std::string text;
    int words = n_words(rng);
    for (int w = 0; w < words; ++w) {
      if (!text.empty()) text += " ";
      text += vocab[word(rng)];
    }
    char id[16];
    std::snprintf(id, sizeof(id), "d%04d", i);
    docs.push_back({id, text});
  }
  return docs;
}

inline std::string random_query(std::mt19937_64& rng) {
  auto vocab = test_vocabulary();
  std::uniform_int_distribution<int> n_words(1, 6);
  std::uniform_int_distribution<std::size_t> word(0, vocab.size() - 1);
  std::string q;
  int words = n_words(rng);
  for (int w = 0; w < words; ++w) {
    if (!q.empty()) q += " ";
    q += vocab[word(rng)];
  }
  return q;
}

}  // namespace oracle
