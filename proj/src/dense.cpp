#include "convsearch/dense.hpp"

#include <cmath>

#include "convsearch/bm25.hpp"
#include "convsearch/errors.hpp"
#include "convsearch/hash.hpp"

namespace convsearch {

HashEmbedder::HashEmbedder(int dim, TokenizerConfig tokenizer, std::uint64_t seed)
    : dim_(dim), tokenizer_(tokenizer), seed_(seed) {
  if (dim < 1) throw Error::data("embedder dimension must be >= 1");
}

Eigen::VectorXd HashEmbedder::embed(std::string_view text, std::size_t token_limit) const {
  Eigen::VectorXd v = Eigen::VectorXd::Zero(dim_);
  auto tokens = tokenize(text, tokenizer_, token_limit);
  for (const auto& t : tokens) {
    std::uint64_t h = fnv1a64(t, 0xcbf29ce484222325ull ^ seed_);
    auto bucket = static_cast<Eigen::Index>(h % static_cast<std::uint64_t>(dim_));
    double sign = (h >> 63) ? -1.0 : 1.0;
    v[bucket] += sign;
  }
  double norm = std::sqrt(v.squaredNorm());
  if (norm > 0.0) v /= norm;
  return v;
}

DenseIndex DenseIndex::build(const Corpus& corpus, std::shared_ptr<const Embedder> embedder,
                             TruncationLimits limits) {
  if (corpus.empty()) throw Error::data("cannot build an index over an empty corpus");
  if (!embedder) throw Error::data("dense index needs an embedder");
  DenseIndex index;
  index.embedder_ = std::move(embedder);
  index.limits_ = limits;
  index.ids_.reserve(corpus.size());
  index.vectors_.resize(static_cast<Eigen::Index>(corpus.size()), index.embedder_->dim());
  for (std::size_t ord = 0; ord < corpus.size(); ++ord) {
    const Passage& p = corpus.at_ordinal(ord);
    index.ids_.push_back(p.id);
    index.vectors_.row(static_cast<Eigen::Index>(ord)) =
        index.embedder_->embed(p.text, limits.passage_tokens).transpose();
  }
  return index;
}

const Embedder& DenseIndex::embedder() const {
  if (!embedder_) throw Error::data("no embedder attached to the dense index");
  return *embedder_;
}

void DenseIndex::attach_embedder(std::shared_ptr<const Embedder> embedder) {
  if (!embedder) throw Error::data("cannot attach a null embedder");
  if (embedder->dim() != dim()) {
    throw Error::data("embedder dimension " + std::to_string(embedder->dim()) +
                      " does not match index dimension " + std::to_string(dim()));
  }
  embedder_ = std::move(embedder);
}

std::vector<double> DenseIndex::score_all(const Eigen::VectorXd& query_vec) const {
  if (query_vec.size() != vectors_.cols()) {
    throw Error::data("query vector dimension mismatch");
  }
  std::vector<double> scores(doc_count(), 0.0);
  // Plain sequential dot products: scores must be bitwise reproducible
  // against a naive brute-force scan.
  for (std::size_t i = 0; i < doc_count(); ++i) {
    double s = 0.0;
    for (Eigen::Index j = 0; j < vectors_.cols(); ++j) {
      s += vectors_(static_cast<Eigen::Index>(i), j) * query_vec[j];
    }
    scores[i] = s;
  }
  return scores;
}

RankedList DenseIndex::retrieve_topk(std::string_view query_text, std::size_t k) const {
  auto query_vec = embedder().embed(query_text, limits_.query_tokens);
  auto scores = score_all(query_vec);
  return rank_documents(scores, ids_, k);
}

RankOutcome DenseIndex::rank_of_gold(std::string_view query_text,
                                     std::span<const std::string> gold_ids, int depth) const {
  if (depth < 1) throw Error::data("search depth must be >= 1");
  auto ranked = retrieve_topk(query_text, static_cast<std::size_t>(depth));
  return rank_of_gold_in(ranked, gold_ids);
}

}  // namespace convsearch
