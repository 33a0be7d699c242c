#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <memory>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "convsearch/data.hpp"
#include "convsearch/ranking.hpp"
#include "convsearch/tokenize.hpp"

namespace convsearch {

// Text -> unit vector of a fixed dimension. Texts that produce no tokens
// embed to the zero vector (cosine 0 against everything).
class Embedder {
 public:
  virtual ~Embedder() = default;
  virtual int dim() const = 0;
  virtual Eigen::VectorXd embed(std::string_view text, std::size_t token_limit) const = 0;
};

// Deterministic token-hashing embedder: each token lands in a signed bucket
// (FNV-1a), accumulated counts are L2-normalized. Real neural embedders plug
// in behind the same interface.
class HashEmbedder final : public Embedder {
 public:
  HashEmbedder(int dim, TokenizerConfig tokenizer, std::uint64_t seed = 0);

  int dim() const override { return dim_; }
  Eigen::VectorXd embed(std::string_view text, std::size_t token_limit) const override;

  const TokenizerConfig& tokenizer() const { return tokenizer_; }
  std::uint64_t seed() const { return seed_; }

 private:
  int dim_;
  TokenizerConfig tokenizer_;
  std::uint64_t seed_;
};

// Exhaustive inner-product scan over unit vectors (= cosine). Same ranking
// contract as the sparse index: (score desc, id asc) over all documents.
class DenseIndex {
 public:
  static DenseIndex build(const Corpus& corpus, std::shared_ptr<const Embedder> embedder,
                          TruncationLimits limits);

  std::size_t doc_count() const { return ids_.size(); }
  int dim() const { return static_cast<int>(vectors_.cols()); }
  const Eigen::MatrixXd& vectors() const { return vectors_; }
  const std::vector<std::string>& ids() const { return ids_; }
  const TruncationLimits& limits() const { return limits_; }
  const Embedder& embedder() const;

  // Replaces the embedder; its dimension must match the stored vectors.
  void attach_embedder(std::shared_ptr<const Embedder> embedder);

  std::vector<double> score_all(const Eigen::VectorXd& query_vec) const;
  RankedList retrieve_topk(std::string_view query_text, std::size_t k) const;
  RankOutcome rank_of_gold(std::string_view query_text, std::span<const std::string> gold_ids,
                           int depth = kDefaultSearchDepth) const;

 private:
  std::shared_ptr<const Embedder> embedder_;
  Eigen::MatrixXd vectors_;  // rows = documents
  std::vector<std::string> ids_;
  TruncationLimits limits_;

  friend struct IndexSerde;
};

}  // namespace convsearch
