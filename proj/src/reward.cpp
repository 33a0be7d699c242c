#include "convsearch/reward.hpp"

#include <cmath>

#include "convsearch/errors.hpp"

namespace convsearch {

std::string variant_name(RewardVariant v) {
  switch (v) {
    case RewardVariant::piecewise_linear: return "piecewise-linear";
    case RewardVariant::exponential_decay: return "exponential-decay";
    case RewardVariant::reciprocal: return "reciprocal";
    case RewardVariant::direct_mrr3: return "direct-mrr3";
    case RewardVariant::direct_ndcg3: return "direct-ndcg3";
  }
  return "unknown";
}

RewardVariant parse_variant(std::string_view name) {
  if (name == "piecewise-linear") return RewardVariant::piecewise_linear;
  if (name == "exponential-decay") return RewardVariant::exponential_decay;
  if (name == "reciprocal") return RewardVariant::reciprocal;
  if (name == "direct-mrr3") return RewardVariant::direct_mrr3;
  if (name == "direct-ndcg3") return RewardVariant::direct_ndcg3;
  throw Error::data("unknown reward variant `" + std::string(name) + "`");
}

void RewardConfig::validate() const {
  if (!(format_penalty < 0.0)) throw Error::data("format_penalty must be negative");
  if (!(bands.top_lo >= 1 && bands.top_lo < bands.top_hi && bands.top_hi < bands.mid_hi)) {
    throw Error::data("reward bands must satisfy 1 <= top_lo < top_hi < mid_hi");
  }
  if (metric_k < 1) throw Error::data("metric_k must be >= 1");
}

double rirs(RankOutcome rank, const RewardBands& bands) {
  if (!rank) return 0.0;
  int r = *rank;
  if (r >= bands.top_lo && r <= bands.top_hi) {
    double span = static_cast<double>(bands.top_hi - bands.top_lo);
    return bands.top_vhi - (r - bands.top_lo) * (bands.top_vhi - bands.top_vlo) / span;
  }
  if (r > bands.top_hi && r <= bands.mid_hi) {
    double span = static_cast<double>(bands.mid_hi - bands.top_hi);
    return bands.mid_vhi - (r - bands.top_hi) * (bands.mid_vhi - bands.mid_vlo) / span;
  }
  return 0.0;
}

double reward_variant(RankOutcome rank, RewardVariant variant) {
  if (!rank) return 0.0;
  switch (variant) {
    case RewardVariant::exponential_decay:
      return std::exp(1.0 - static_cast<double>(*rank));
    case RewardVariant::reciprocal:
      return 1.0 / static_cast<double>(*rank);
    default:
      throw Error::data("reward_variant expects exponential-decay or reciprocal");
  }
}

double direct_metric_reward(RankOutcome rank, RewardVariant variant, int k) {
  if (!rank || *rank > k) return 0.0;
  switch (variant) {
    case RewardVariant::direct_mrr3:
      return 1.0 / static_cast<double>(*rank);
    case RewardVariant::direct_ndcg3:
      return 1.0 / std::log2(static_cast<double>(*rank) + 1.0);
    default:
      throw Error::data("direct_metric_reward expects direct-mrr3 or direct-ndcg3");
  }
}

double shaped_reward(RankOutcome rank, const RewardConfig& config) {
  switch (config.variant) {
    case RewardVariant::piecewise_linear:
      return rirs(rank, config.bands);
    case RewardVariant::exponential_decay:
    case RewardVariant::reciprocal:
      return reward_variant(rank, config.variant);
    case RewardVariant::direct_mrr3:
    case RewardVariant::direct_ndcg3:
      return direct_metric_reward(rank, config.variant, config.metric_k);
  }
  return 0.0;
}

double full_reward(RankOutcome rank, bool format_ok, const RewardConfig& config) {
  if (!format_ok) return config.format_penalty;
  return shaped_reward(rank, config);
}

RewardOutcome score_rank(RankOutcome rank, bool format_ok, const RewardConfig& config) {
  return RewardOutcome{full_reward(rank, format_ok, config), rank, format_ok};
}

std::vector<SparsityRow> sparsity_report(std::span<const RankOutcome> samples,
                                         std::span<const RewardVariant> variants,
                                         const RewardConfig& config) {
  if (samples.empty()) throw Error::data("sparsity_report needs at least one rank sample");
  std::vector<SparsityRow> rows;
  rows.reserve(variants.size());
  for (RewardVariant v : variants) {
    RewardConfig cfg = config;
    cfg.variant = v;
    SparsityRow row;
    row.variant = v;
    std::size_t zeros = 0;
    double sum = 0.0;
    for (const auto& rank : samples) {
      double r = shaped_reward(rank, cfg);
      if (r == 0.0) ++zeros;
      sum += r;
    }
    double n = static_cast<double>(samples.size());
    row.zero_fraction = static_cast<double>(zeros) / n;
    row.mean = sum / n;
    double sq = 0.0;
    for (const auto& rank : samples) {
      double d = shaped_reward(rank, cfg) - row.mean;
      sq += d * d;
    }
    row.variance = sq / n;
    rows.push_back(row);
  }
  return rows;
}

void write_sparsity_csv(std::span<const SparsityRow> rows, std::ostream& out) {
  out << "variant,zero_fraction,mean,variance\n";
  out.precision(17);
  for (const auto& row : rows) {
    out << variant_name(row.variant) << "," << row.zero_fraction << "," << row.mean << ","
        << row.variance << "\n";
  }
}

}  // namespace convsearch
