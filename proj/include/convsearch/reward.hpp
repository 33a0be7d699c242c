#pragma once

#include <ostream>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "convsearch/ranking.hpp"

namespace convsearch {

// Shaped-reward families. piecewise_linear is the rank-incentive default;
// exponential_decay (e^{1-rank}) and reciprocal (1/rank) are alternatives;
// the direct_* variants use the retrieval metric itself and serve as the
// sparsity baselines.
enum class RewardVariant {
  piecewise_linear,
  exponential_decay,
  reciprocal,
  direct_mrr3,
  direct_ndcg3,
};

std::string variant_name(RewardVariant v);
RewardVariant parse_variant(std::string_view name);

// Decreasing affine bands for the piecewise-linear reward: ranks
// [top_lo, top_hi] map onto [top_vlo, top_vhi] (top_lo gets top_vhi) and
// ranks (top_hi, mid_hi] map onto [mid_vlo, mid_vhi]; the bands meet at
// top_hi where both pieces evaluate to top_vlo.
struct RewardBands {
  int top_lo = 1;
  int top_hi = 10;
  double top_vlo = 1.0;
  double top_vhi = 2.0;
  int mid_hi = 100;
  double mid_vlo = 0.0;
  double mid_vhi = 1.0;
};

struct RewardConfig {
  RewardVariant variant = RewardVariant::piecewise_linear;
  double format_penalty = -0.1;  // delta, must be negative
  RewardBands bands;
  int metric_k = 3;  // cutoff for the direct-metric variants

  void validate() const;  // throws on delta >= 0 or band inconsistency
};

// Piecewise-linear rank reward: top band decreasing from top_vhi at rank
// top_lo to top_vlo at top_hi, mid band decreasing to mid_vlo at mid_hi,
// zero beyond mid_hi or when the rank is absent. Continuous at the seam.
double rirs(RankOutcome rank, const RewardBands& bands = {});

// exponential_decay: e^{1-rank}; reciprocal: 1/rank; both 0 for absent rank.
double reward_variant(RankOutcome rank, RewardVariant variant);

// direct_mrr3: 1/rank for rank <= k, else 0.
// direct_ndcg3: 1/log2(rank+1) for rank <= k, else 0 (single gold, binary gain).
double direct_metric_reward(RankOutcome rank, RewardVariant variant, int k = 3);

// Shaped reward of the configured variant for a format-valid output.
double shaped_reward(RankOutcome rank, const RewardConfig& config);

// Complete reward: the shaped reward when the output is format-valid,
// otherwise the format penalty delta.
double full_reward(RankOutcome rank, bool format_ok, const RewardConfig& config);

struct RewardOutcome {
  double value = 0.0;
  RankOutcome rank;
  bool format_ok = false;
};

RewardOutcome score_rank(RankOutcome rank, bool format_ok, const RewardConfig& config);

struct SparsityRow {
  RewardVariant variant;
  double zero_fraction = 0.0;
  double mean = 0.0;
  double variance = 0.0;  // population variance
};

// Exact zero-fraction/mean/variance of each variant's reward over the given
// rank samples (absent ranks included). Sample list must be non-empty.
std::vector<SparsityRow> sparsity_report(std::span<const RankOutcome> samples,
                                         std::span<const RewardVariant> variants,
                                         const RewardConfig& config = {});

void write_sparsity_csv(std::span<const SparsityRow> rows, std::ostream& out);

}  // namespace convsearch
