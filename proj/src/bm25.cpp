#include "convsearch/bm25.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "convsearch/errors.hpp"

namespace convsearch {

InvertedIndex InvertedIndex::build(const Corpus& corpus, TokenizerConfig tokenizer,
                                   TruncationLimits limits, Bm25Params params) {
  if (corpus.empty()) throw Error::data("cannot build an index over an empty corpus");
  InvertedIndex index;
  index.tokenizer_ = tokenizer;
  index.limits_ = limits;
  index.params_ = params;
  index.ids_.reserve(corpus.size());
  index.doc_len_.reserve(corpus.size());

  std::uint64_t total_len = 0;
  for (std::size_t ord = 0; ord < corpus.size(); ++ord) {
    const Passage& p = corpus.at_ordinal(ord);
    index.ordinals_.emplace(p.id, static_cast<std::uint32_t>(ord));
    index.ids_.push_back(p.id);
    auto tokens = tokenize(p.text, tokenizer, limits.passage_tokens);
    index.doc_len_.push_back(static_cast<std::uint32_t>(tokens.size()));
    total_len += tokens.size();

    std::map<std::string, std::uint32_t> tf;
    for (auto& t : tokens) ++tf[t];
    for (auto& [term, count] : tf) {
      index.postings_[term].emplace_back(static_cast<std::uint32_t>(ord), count);
    }
  }
  // Documents are visited in ascending ordinal order, so postings lists come
  // out sorted by construction.
  index.avgdl_ = static_cast<double>(total_len) / static_cast<double>(corpus.size());
  return index;
}

std::size_t InvertedIndex::df(std::string_view term) const {
  auto it = postings_.find(std::string(term));
  return it == postings_.end() ? 0 : it->second.size();
}

double InvertedIndex::idf(std::string_view term) const {
  double n = static_cast<double>(doc_count());
  double d = static_cast<double>(df(term));
  return std::log((n - d + 0.5) / (d + 0.5) + 1.0);
}

double InvertedIndex::term_contribution(const std::string& term, std::uint32_t tf,
                                        std::size_t ordinal) const {
  double tfd = static_cast<double>(tf);
  double norm = params_.k1 * (1.0 - params_.b +
                              params_.b * static_cast<double>(doc_len_[ordinal]) / avgdl_);
  return idf(term) * tfd * (params_.k1 + 1.0) / (tfd + norm);
}

double InvertedIndex::score(std::span<const std::string> query_tokens, std::size_t ordinal) const {
  double s = 0.0;
  for (const auto& term : query_tokens) {
    auto it = postings_.find(term);
    if (it == postings_.end()) continue;
    const auto& list = it->second;
    auto pos = std::lower_bound(list.begin(), list.end(), ordinal,
                                [](const Posting& p, std::size_t o) { return p.first < o; });
    if (pos == list.end() || pos->first != ordinal) continue;
    s += term_contribution(term, pos->second, ordinal);
  }
  return s;
}

std::vector<double> InvertedIndex::score_all(std::span<const std::string> query_tokens) const {
  std::vector<double> scores(doc_count(), 0.0);
  for (const auto& term : query_tokens) {
    auto it = postings_.find(term);
    if (it == postings_.end()) continue;
    for (const auto& [ord, tf] : it->second) {
      scores[ord] += term_contribution(term, tf, ord);
    }
  }
  return scores;
}

std::vector<std::string> InvertedIndex::tokenize_query(std::string_view query_text) const {
  return tokenize(query_text, tokenizer_, limits_.query_tokens);
}

RankedList rank_documents(const std::vector<double>& scores,
                          const std::vector<std::string>& ids, std::size_t k) {
  std::vector<std::uint32_t> order(scores.size());
  std::iota(order.begin(), order.end(), 0u);
  auto better = [&](std::uint32_t a, std::uint32_t b) {
    if (scores[a] != scores[b]) return scores[a] > scores[b];
    return ids[a] < ids[b];
  };
  k = std::min(k, order.size());
  std::partial_sort(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(k), order.end(),
                    better);
  RankedList out;
  out.reserve(k);
  for (std::size_t i = 0; i < k; ++i) out.push_back({ids[order[i]], scores[order[i]]});
  return out;
}

RankedList InvertedIndex::retrieve_topk(std::string_view query_text, std::size_t k) const {
  auto tokens = tokenize_query(query_text);
  auto scores = score_all(tokens);
  return rank_documents(scores, ids_, k);
}

RankOutcome InvertedIndex::rank_of_gold(std::string_view query_text,
                                        std::span<const std::string> gold_ids, int depth) const {
  if (depth < 1) throw Error::data("search depth must be >= 1");
  auto ranked = retrieve_topk(query_text, static_cast<std::size_t>(depth));
  return rank_of_gold_in(ranked, gold_ids);
}

}  // namespace convsearch
