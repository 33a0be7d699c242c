#pragma once

#include <Eigen/Core>
#include <filesystem>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "convsearch/data.hpp"
#include "convsearch/tokenize.hpp"

namespace convsearch {

// Knobs for the rewrite templates that span the toy policy's action space.
struct CandidateConfig {
  int max_slots = 8;
  int max_entities = 4;
  int top_keywords = 3;
  int answer_snippet_tokens = 8;
};

// Maximal runs of capitalized words in the history, minus question/function
// words, deduplicated in order of first appearance.
std::vector<std::string> extract_entities(std::span<const Turn> history, int max_entities);

// Deterministic, ordered candidate rewrites for an instance:
//   slot 0:    the raw query
//   next:      the query with its first pronoun replaced by each history entity
//   then:      the query extended with the most frequent history keywords
//   last:      the query extended with a snippet of the previous answer
// Duplicates are removed keeping the first occurrence; at most max_slots.
std::vector<std::string> candidate_rewrites(std::span<const Turn> history,
                                            std::string_view query,
                                            const CandidateConfig& config = {});

// Sequence-probability policy over per-instance candidate rewrites.
class Policy {
 public:
  virtual ~Policy() = default;
  virtual std::vector<std::string> candidates(const QueryInstance& instance) const = 0;
  virtual double log_prob(const QueryInstance& instance, int slot) const = 0;
  virtual std::vector<int> sample(const QueryInstance& instance, int n, double temperature,
                                  std::mt19937_64& rng) const = 0;
  virtual int argmax(const QueryInstance& instance) const = 0;
  // Full protocol text (think + rewrite blocks) for a chosen slot.
  virtual std::string raw_output(const QueryInstance& instance, int slot) const = 0;
};

struct ToyPolicyConfig {
  int buckets = 128;
  CandidateConfig candidates;
  TokenizerConfig tokenizer;             // for feature bucketing
  std::size_t concatenated_tokens = 512; // bucketing feature truncation
};

// Categorical policy: instances hash into feature buckets; a (bucket, slot)
// logit matrix defines a softmax over each instance's candidate list.
// Temperature applies at sampling time only; log_prob is always at
// temperature 1. The optional reference matrix is the frozen warm-up
// snapshot used as the KL anchor.
class ToyPolicy final : public Policy {
 public:
  explicit ToyPolicy(ToyPolicyConfig config = {});

  std::vector<std::string> candidates(const QueryInstance& instance) const override;
  double log_prob(const QueryInstance& instance, int slot) const override;
  std::vector<int> sample(const QueryInstance& instance, int n, double temperature,
                          std::mt19937_64& rng) const override;
  int argmax(const QueryInstance& instance) const override;
  std::string raw_output(const QueryInstance& instance, int slot) const override;

  std::vector<std::string> candidates_for(std::span<const Turn> history,
                                          std::string_view query) const;
  int bucket_of(const QueryInstance& instance) const;
  int bucket_for(std::span<const Turn> history, std::string_view query) const;

  // Softmax over the instance's candidate slots at the given temperature.
  Eigen::VectorXd probs(const QueryInstance& instance, double temperature = 1.0) const;

  const ToyPolicyConfig& config() const { return config_; }
  const Eigen::MatrixXd& logits() const { return logits_; }
  Eigen::MatrixXd& logits() { return logits_; }
  Eigen::MatrixXd snapshot() const { return logits_; }

  void set_reference(Eigen::MatrixXd reference);
  const std::optional<Eigen::MatrixXd>& reference() const { return reference_; }

  std::uint64_t config_fingerprint() const;
  void save(const std::filesystem::path& path) const;
  static ToyPolicy load(const std::filesystem::path& path);

 private:
  ToyPolicyConfig config_;
  Eigen::MatrixXd logits_;  // buckets x max_slots
  std::optional<Eigen::MatrixXd> reference_;
};

// Softmax of the first `slots` entries of a logit row, with logits scaled by
// 1/temperature.
Eigen::VectorXd softmax_slots(const Eigen::VectorXd& row, int slots, double temperature = 1.0);

// Deterministic uniform double in [0,1) from the generator (53-bit mantissa).
double canonical_uniform(std::mt19937_64& rng);

// Sets bucket/slot logits to log(add-one-smoothed counts) of the retained
// rewrites and stores the result as the reference snapshot. Samples whose
// rewrite is not expressible as a candidate are counted as unmatched.
struct WarmupStats {
  std::size_t samples = 0;
  std::size_t matched = 0;
  std::size_t unmatched = 0;
};
WarmupStats mle_warmup(ToyPolicy& policy, std::span<const SdSample> sd_data);

}  // namespace convsearch
