#pragma once

#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

#include "convsearch/data.hpp"
#include "convsearch/ranking.hpp"
#include "convsearch/tokenize.hpp"

namespace convsearch {

struct Bm25Params {
  double k1 = 0.9;
  double b = 0.4;

  static Bm25Params topiocqa() { return {0.9, 0.4}; }
  static Bm25Params qrecc() { return {0.82, 0.68}; }
};

// Okapi BM25 over an inverted index, non-negative IDF form:
//   score(q, d) = sum_t IDF(t) * tf * (k1+1) / (tf + k1 * (1 - b + b*dl/avgdl))
//   IDF(t)      = ln((N - df + 0.5) / (df + 0.5) + 1)
// Rankings sort by (score desc, passage id asc) over all documents, so that
// top-k retrieval equals exhaustive scoring exactly. Immutable after build.
class InvertedIndex {
 public:
  using Posting = std::pair<std::uint32_t, std::uint32_t>;  // (doc ordinal, tf)

  static InvertedIndex build(const Corpus& corpus, TokenizerConfig tokenizer,
                             TruncationLimits limits, Bm25Params params);

  std::size_t doc_count() const { return ids_.size(); }
  double avgdl() const { return avgdl_; }
  std::size_t df(std::string_view term) const;
  double idf(std::string_view term) const;
  std::uint32_t doc_len(std::size_t ordinal) const { return doc_len_[ordinal]; }
  const std::string& id_of(std::size_t ordinal) const { return ids_[ordinal]; }

  const TokenizerConfig& tokenizer() const { return tokenizer_; }
  const TruncationLimits& limits() const { return limits_; }
  const Bm25Params& params() const { return params_; }
  const std::map<std::string, std::vector<Posting>>& postings() const { return postings_; }

  // Score of one document for an already-tokenized query. Contributions are
  // accumulated in query-token order.
  double score(std::span<const std::string> query_tokens, std::size_t ordinal) const;

  // Scores of every document (term-at-a-time accumulation, same per-document
  // addition order as score()).
  std::vector<double> score_all(std::span<const std::string> query_tokens) const;

  std::vector<std::string> tokenize_query(std::string_view query_text) const;

  RankedList retrieve_topk(std::string_view query_text, std::size_t k) const;

  RankOutcome rank_of_gold(std::string_view query_text, std::span<const std::string> gold_ids,
                           int depth = kDefaultSearchDepth) const;

 private:
  TokenizerConfig tokenizer_;
  TruncationLimits limits_;
  Bm25Params params_;
  std::vector<std::string> ids_;  // ordinal -> passage id, corpus order
  std::unordered_map<std::string, std::uint32_t> ordinals_;
  std::map<std::string, std::vector<Posting>> postings_;  // ordered: deterministic serialization
  std::vector<std::uint32_t> doc_len_;
  double avgdl_ = 0.0;

  double term_contribution(const std::string& term, std::uint32_t tf, std::size_t ordinal) const;

  friend struct IndexSerde;
};

// Sorts document ordinals by (score desc, id asc) and returns the top k
// entries (k capped at the document count).
RankedList rank_documents(const std::vector<double>& scores,
                          const std::vector<std::string>& ids, std::size_t k);

}  // namespace convsearch
