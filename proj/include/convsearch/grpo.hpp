#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "convsearch/data.hpp"
#include "convsearch/index_file.hpp"
#include "convsearch/policy.hpp"
#include "convsearch/ranking.hpp"
#include "convsearch/reward.hpp"

namespace convsearch {

struct TrainConfig {
  int group_size = 8;          // rollouts per instance
  double temperature = 0.7;    // sampling temperature
  double clip_eps = 0.2;       // surrogate clipping threshold
  double kl_coef = 0.001;      // beta, weight of KL(pi_theta || pi_ref)
  int batch_size = 16;
  double learning_rate = 0.3;
  int epochs = 10;
  double std_guard = 1e-6;     // added to the population std in advantages
  std::uint64_t seed = 0;
  int max_steps = 0;           // 0 = run all epochs
  int depth = kDefaultSearchDepth;
  bool lr_warmup = false;      // optional linear warmup
  int lr_warmup_steps = 100;

  void validate() const;
};

// A_i = (R_i - mean) / (population std + std_guard). Groups with constant
// rewards come out all-zero. Requires at least two rewards.
Eigen::VectorXd compute_advantages(const Eigen::VectorXd& rewards, double std_guard = 1e-6);

// One group of rollouts for a single instance.
struct GroupRollout {
  std::vector<int> slots;
  std::vector<std::string> raw_texts;
  Eigen::VectorXd old_logprobs;
  Eigen::VectorXd rewards;
  Eigen::VectorXd advantages;
  std::vector<RankOutcome> ranks;
  std::vector<char> format_ok;
};

struct GrpoLoss {
  double loss = 0.0;       // -surrogate + beta * kl
  double surrogate = 0.0;  // mean_i min(rho_i A_i, clip(rho_i) A_i)
  double kl = 0.0;         // exact categorical KL(pi_theta || pi_ref)
};

// Loss of one group under any categorical policy. The importance ratio is
// sequence-level: rho_i = exp(log pi(r_i|x) - old_logprob_i). The KL term is
// computed exactly over the instance's candidate space against `reference`.
GrpoLoss grpo_loss(const Policy& policy, const Policy& reference, const QueryInstance& instance,
                   std::span<const int> slots, const Eigen::VectorXd& old_logprobs,
                   const Eigen::VectorXd& advantages, double clip_eps, double kl_coef);

struct GrpoLossGrad {
  double loss = 0.0;
  double surrogate = 0.0;
  double kl = 0.0;
  Eigen::MatrixXd grad;  // d loss / d logits, same shape as the logit matrix
};

// Analytic loss gradient for the toy policy against a frozen reference logit
// matrix. Clipped-out rollouts contribute zero gradient.
GrpoLossGrad grpo_loss_grad(const ToyPolicy& policy, const Eigen::MatrixXd& reference_logits,
                            const QueryInstance& instance, std::span<const int> slots,
                            const Eigen::VectorXd& old_logprobs,
                            const Eigen::VectorXd& advantages, double clip_eps, double kl_coef);

struct GradCheckResult {
  double max_rel_error = 0.0;
  int parameters_checked = 0;
  int groups_skipped_boundary = 0;
};

// Central finite differences over every parameter active for the instance
// (its bucket row, candidate slots). Groups whose ratios sit within
// `boundary_margin` of 1 +/- clip_eps are excluded and reported.
GradCheckResult gradient_check(const ToyPolicy& policy, const Eigen::MatrixXd& reference_logits,
                               const QueryInstance& instance, std::span<const int> slots,
                               const Eigen::VectorXd& old_logprobs,
                               const Eigen::VectorXd& advantages, double clip_eps, double kl_coef,
                               double h = 1e-5, double boundary_margin = 1e-3);

struct StepStats {
  int step = 0;
  double mean_reward = 0.0;
  double format_rate = 0.0;
  double rank1_rate = 0.0;
  double kl = 0.0;
  double loss = 0.0;
};

struct TrainLog {
  std::vector<StepStats> steps;
  std::size_t retrieval_failures = 0;

  std::string to_jsonl() const;
  static TrainLog from_jsonl(const std::string& text);
};

// GRPO training over the toy policy: per step, sample a batch of instances,
// roll out group_size rewrites each, score them through format validation,
// gold-rank lookup and the shaped reward, normalize advantages per group and
// take one gradient step (theta_old refreshes at each batch). Deterministic
// under a fixed seed. If the policy has no reference snapshot, one is taken
// before the first step (the RIRS-only arm).
TrainLog train(ToyPolicy& policy, std::span<const QueryInstance> instances,
               const SearchIndex& index, RetrievalMode mode, const RewardConfig& reward,
               const TrainConfig& config);

// Greedy (argmax) evaluation of a policy: retrieval metrics of its rewrites
// over the given instances. Keys: "MRR@3", "NDCG@3", "R@10", "R@100".
std::map<std::string, double> evaluate_policy(const Policy& policy,
                                              std::span<const QueryInstance> instances,
                                              const SearchIndex& index, RetrievalMode mode);

// Metrics of the raw (unrewritten) queries, the no-op baseline.
std::map<std::string, double> evaluate_raw_queries(std::span<const QueryInstance> instances,
                                                   const SearchIndex& index, RetrievalMode mode);

}  // namespace convsearch
