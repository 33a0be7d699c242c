#include "convsearch/grpo.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include <json.hpp>

#include "convsearch/errors.hpp"
#include "convsearch/format.hpp"
#include "convsearch/metrics.hpp"

namespace convsearch {

using nlohmann::json;

void TrainConfig::validate() const {
  if (group_size < 2) throw Error::data("group_size must be >= 2");
  if (!(clip_eps > 0.0 && clip_eps < 1.0)) throw Error::data("clip_eps must be in (0,1)");
  if (kl_coef < 0.0) throw Error::data("kl_coef must be >= 0");
  if (batch_size < 1) throw Error::data("batch_size must be >= 1");
  if (!(learning_rate > 0.0)) throw Error::data("learning_rate must be positive");
  if (epochs < 1) throw Error::data("epochs must be >= 1");
  if (!(temperature > 0.0)) throw Error::data("temperature must be positive");
  if (!(std_guard > 0.0)) throw Error::data("std_guard must be positive");
  if (depth < 1) throw Error::data("depth must be >= 1");
}

Eigen::VectorXd compute_advantages(const Eigen::VectorXd& rewards, double std_guard) {
  if (rewards.size() < 2) throw Error::data("advantage normalization needs a group of >= 2");
  double mean = rewards.mean();
  Eigen::VectorXd centered = rewards.array() - mean;
  double variance = centered.squaredNorm() / static_cast<double>(rewards.size());
  double std = std::sqrt(variance);
  return centered / (std + std_guard);
}

namespace {

double clip(double x, double lo, double hi) { return std::min(std::max(x, lo), hi); }

Eigen::VectorXd log_softmax(const Eigen::VectorXd& row) {
  double max = row.maxCoeff();
  double lse = max + std::log((row.array() - max).exp().sum());
  return row.array() - lse;
}

}  // namespace

GrpoLoss grpo_loss(const Policy& policy, const Policy& reference, const QueryInstance& instance,
                   std::span<const int> slots, const Eigen::VectorXd& old_logprobs,
                   const Eigen::VectorXd& advantages, double clip_eps, double kl_coef) {
  if (static_cast<Eigen::Index>(slots.size()) != old_logprobs.size() ||
      old_logprobs.size() != advantages.size()) {
    throw Error::data("group, old-logprob and advantage lengths must match");
  }
  GrpoLoss out;
  double n = static_cast<double>(slots.size());
  for (std::size_t i = 0; i < slots.size(); ++i) {
    double ratio = std::exp(policy.log_prob(instance, slots[i]) -
                            old_logprobs[static_cast<Eigen::Index>(i)]);
    double a = advantages[static_cast<Eigen::Index>(i)];
    out.surrogate += std::min(ratio * a, clip(ratio, 1.0 - clip_eps, 1.0 + clip_eps) * a);
  }
  out.surrogate /= n;

  int n_cands = static_cast<int>(policy.candidates(instance).size());
  for (int s = 0; s < n_cands; ++s) {
    double lp = policy.log_prob(instance, s);
    out.kl += std::exp(lp) * (lp - reference.log_prob(instance, s));
  }
  out.loss = -out.surrogate + kl_coef * out.kl;
  return out;
}

GrpoLossGrad grpo_loss_grad(const ToyPolicy& policy, const Eigen::MatrixXd& reference_logits,
                            const QueryInstance& instance, std::span<const int> slots,
                            const Eigen::VectorXd& old_logprobs,
                            const Eigen::VectorXd& advantages, double clip_eps, double kl_coef) {
  if (static_cast<Eigen::Index>(slots.size()) != old_logprobs.size() ||
      old_logprobs.size() != advantages.size()) {
    throw Error::data("group, old-logprob and advantage lengths must match");
  }
  int n_cands = static_cast<int>(policy.candidates(instance).size());
  int bucket = policy.bucket_of(instance);
  Eigen::VectorXd logp = log_softmax(policy.logits().row(bucket).head(n_cands).transpose());
  Eigen::VectorXd p = logp.array().exp();
  Eigen::VectorXd ref_logp =
      log_softmax(reference_logits.row(bucket).head(n_cands).transpose());

  GrpoLossGrad out;
  out.grad = Eigen::MatrixXd::Zero(policy.logits().rows(), policy.logits().cols());
  double n = static_cast<double>(slots.size());

  Eigen::VectorXd surrogate_grad = Eigen::VectorXd::Zero(n_cands);
  for (std::size_t i = 0; i < slots.size(); ++i) {
    int a_slot = slots[i];
    if (a_slot < 0 || a_slot >= n_cands) throw Error::data("rollout slot out of range");
    double ratio = std::exp(logp[a_slot] - old_logprobs[static_cast<Eigen::Index>(i)]);
    double adv = advantages[static_cast<Eigen::Index>(i)];
    double unclipped = ratio * adv;
    double clipped = clip(ratio, 1.0 - clip_eps, 1.0 + clip_eps) * adv;
    out.surrogate += std::min(unclipped, clipped);
    if (unclipped <= clipped) {
      // d(ratio*A)/d logit_s = A * ratio * ([s == a] - p_s); the clipped
      // branch is locally constant and contributes nothing.
      surrogate_grad -= (adv * ratio) * p;
      surrogate_grad[a_slot] += adv * ratio;
    }
  }
  out.surrogate /= n;

  for (int s = 0; s < n_cands; ++s) out.kl += p[s] * (logp[s] - ref_logp[s]);

  for (int s = 0; s < n_cands; ++s) {
    double kl_grad = p[s] * (logp[s] - ref_logp[s] - out.kl);
    out.grad(bucket, s) = -surrogate_grad[s] / n + kl_coef * kl_grad;
  }
  out.loss = -out.surrogate + kl_coef * out.kl;
  return out;
}

GradCheckResult gradient_check(const ToyPolicy& policy, const Eigen::MatrixXd& reference_logits,
                               const QueryInstance& instance, std::span<const int> slots,
                               const Eigen::VectorXd& old_logprobs,
                               const Eigen::VectorXd& advantages, double clip_eps, double kl_coef,
                               double h, double boundary_margin) {
  GradCheckResult result;
  int n_cands = static_cast<int>(policy.candidates(instance).size());
  int bucket = policy.bucket_of(instance);

  // The clip point is non-differentiable; skip groups whose ratios sit on it.
  for (std::size_t i = 0; i < slots.size(); ++i) {
    double ratio = std::exp(policy.log_prob(instance, slots[i]) -
                            old_logprobs[static_cast<Eigen::Index>(i)]);
    if (std::abs(ratio - (1.0 - clip_eps)) <= boundary_margin ||
        std::abs(ratio - (1.0 + clip_eps)) <= boundary_margin) {
      result.groups_skipped_boundary = 1;
      return result;
    }
  }

  auto analytic = grpo_loss_grad(policy, reference_logits, instance, slots, old_logprobs,
                                 advantages, clip_eps, kl_coef);

  ToyPolicy probe = policy;
  ToyPolicy ref_policy = policy;
  ref_policy.logits() = reference_logits;
  for (int s = 0; s < n_cands; ++s) {
    double saved = probe.logits()(bucket, s);
    probe.logits()(bucket, s) = saved + h;
    double up = grpo_loss(probe, ref_policy, instance, slots, old_logprobs, advantages, clip_eps,
                          kl_coef)
                    .loss;
    probe.logits()(bucket, s) = saved - h;
    double down = grpo_loss(probe, ref_policy, instance, slots, old_logprobs, advantages,
                            clip_eps, kl_coef)
                      .loss;
    probe.logits()(bucket, s) = saved;
    double fd = (up - down) / (2.0 * h);
    double a = analytic.grad(bucket, s);
    double rel = std::abs(a - fd) / std::max({std::abs(a), std::abs(fd), 1e-3});
    result.max_rel_error = std::max(result.max_rel_error, rel);
    ++result.parameters_checked;
  }
  return result;
}

std::string TrainLog::to_jsonl() const {
  std::string out;
  for (const auto& s : steps) {
    out += json{{"step", s.step},
                {"mean_reward", s.mean_reward},
                {"format_rate", s.format_rate},
                {"rank1_rate", s.rank1_rate},
                {"kl", s.kl},
                {"loss", s.loss}}
               .dump();
    out += "\n";
  }
  return out;
}

TrainLog TrainLog::from_jsonl(const std::string& text) {
  TrainLog log;
  std::istringstream in(text);
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    json j = json::parse(line, nullptr, false);
    if (j.is_discarded()) throw Error::data("malformed training-log line");
    StepStats s;
    s.step = j.at("step").get<int>();
    s.mean_reward = j.at("mean_reward").get<double>();
    s.format_rate = j.at("format_rate").get<double>();
    s.rank1_rate = j.at("rank1_rate").get<double>();
    s.kl = j.at("kl").get<double>();
    s.loss = j.at("loss").get<double>();
    log.steps.push_back(s);
  }
  return log;
}

namespace {

// Fisher-Yates with the shared canonical uniform; std::shuffle is not
// guaranteed identical across standard libraries.
void deterministic_shuffle(std::vector<std::size_t>& order, std::mt19937_64& rng) {
  for (std::size_t i = order.size(); i > 1; --i) {
    auto j = static_cast<std::size_t>(canonical_uniform(rng) * static_cast<double>(i));
    if (j >= i) j = i - 1;
    std::swap(order[i - 1], order[j]);
  }
}

}  // namespace

TrainLog train(ToyPolicy& policy, std::span<const QueryInstance> instances,
               const SearchIndex& index, RetrievalMode mode, const RewardConfig& reward,
               const TrainConfig& config) {
  config.validate();
  reward.validate();
  if (instances.empty()) throw Error::data("training needs at least one instance");
  if (!policy.reference()) policy.set_reference(policy.snapshot());
  const Eigen::MatrixXd reference = *policy.reference();

  std::mt19937_64 rng(config.seed);
  TrainLog log;
  int step = 0;

  std::vector<std::size_t> order(instances.size());
  std::iota(order.begin(), order.end(), 0u);

  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    deterministic_shuffle(order, rng);
    for (std::size_t start = 0; start < order.size(); start += config.batch_size) {
      std::size_t end = std::min(order.size(), start + config.batch_size);
      // theta_old for this batch; a single inner epoch keeps ratios at 1
      // during training, so clipping only matters for off-policy reuse.
      const Eigen::MatrixXd theta_old = policy.snapshot();

      Eigen::MatrixXd grad_sum = Eigen::MatrixXd::Zero(policy.logits().rows(),
                                                       policy.logits().cols());
      double reward_sum = 0.0, kl_sum = 0.0, loss_sum = 0.0;
      std::size_t format_hits = 0, rank1_hits = 0, rollouts = 0;

      for (std::size_t bi = start; bi < end; ++bi) {
        const QueryInstance& inst = instances[order[bi]];
        auto slots = policy.sample(inst, config.group_size, config.temperature, rng);

        GroupRollout group;
        group.slots = slots;
        group.old_logprobs.resize(config.group_size);
        group.rewards.resize(config.group_size);
        group.ranks.resize(static_cast<std::size_t>(config.group_size));
        group.format_ok.resize(static_cast<std::size_t>(config.group_size));

        for (int i = 0; i < config.group_size; ++i) {
          group.old_logprobs[i] = policy.log_prob(inst, slots[static_cast<std::size_t>(i)]);
          std::string raw = policy.raw_output(inst, slots[static_cast<std::size_t>(i)]);
          ParsedOutput parsed = parse_output(raw);
          RankOutcome rank;
          if (parsed.valid) {
            try {
              rank = index.rank_of_gold(mode, parsed.rewrite, inst.gold_passage_ids,
                                        config.depth);
            } catch (const Error&) {
              rank = std::nullopt;
              ++log.retrieval_failures;
            }
          }
          group.ranks[static_cast<std::size_t>(i)] = rank;
          group.format_ok[static_cast<std::size_t>(i)] = parsed.valid ? 1 : 0;
          group.rewards[i] = full_reward(rank, parsed.valid, reward);

          reward_sum += group.rewards[i];
          format_hits += parsed.valid ? 1 : 0;
          rank1_hits += (rank && *rank == 1) ? 1 : 0;
          ++rollouts;
        }

        group.advantages = compute_advantages(group.rewards, config.std_guard);
        auto lg = grpo_loss_grad(policy, reference, inst, group.slots, group.old_logprobs,
                                 group.advantages, config.clip_eps, config.kl_coef);
        grad_sum += lg.grad;
        kl_sum += lg.kl;
        loss_sum += lg.loss;
      }

      double groups = static_cast<double>(end - start);
      double lr = config.learning_rate;
      if (config.lr_warmup && config.lr_warmup_steps > 0) {
        lr *= std::min(1.0, static_cast<double>(step + 1) /
                                static_cast<double>(config.lr_warmup_steps));
      }
      policy.logits() -= (lr / groups) * grad_sum;

      ++step;
      StepStats stats;
      stats.step = step;
      stats.mean_reward = reward_sum / static_cast<double>(rollouts);
      stats.format_rate = static_cast<double>(format_hits) / static_cast<double>(rollouts);
      stats.rank1_rate = static_cast<double>(rank1_hits) / static_cast<double>(rollouts);
      stats.kl = kl_sum / groups;
      stats.loss = loss_sum / groups;
      log.steps.push_back(stats);

      if (config.max_steps > 0 && step >= config.max_steps) return log;
    }
  }
  return log;
}

namespace {

std::map<std::string, double> metrics_of_run(const Run& run, const Qrels& qrels) {
  return {{"MRR@3", mrr_at_k(run, qrels, 3)},
          {"NDCG@3", ndcg_at_k(run, qrels, 3)},
          {"R@10", recall_at_k(run, qrels, 10)},
          {"R@100", recall_at_k(run, qrels, 100)}};
}

}  // namespace

std::map<std::string, double> evaluate_policy(const Policy& policy,
                                              std::span<const QueryInstance> instances,
                                              const SearchIndex& index, RetrievalMode mode) {
  Run run;
  Qrels qrels;
  for (const auto& inst : instances) {
    int slot = policy.argmax(inst);
    auto cands = policy.candidates(inst);
    const std::string& rewrite = cands.at(static_cast<std::size_t>(slot));
    run.add(inst.qid(), index.retrieve(mode, rewrite, 100));
    qrels.relevant[inst.qid()].insert(inst.gold_passage_ids.begin(),
                                      inst.gold_passage_ids.end());
  }
  return metrics_of_run(run, qrels);
}

std::map<std::string, double> evaluate_raw_queries(std::span<const QueryInstance> instances,
                                                   const SearchIndex& index,
                                                   RetrievalMode mode) {
  Run run;
  Qrels qrels;
  for (const auto& inst : instances) {
    run.add(inst.qid(), index.retrieve(mode, inst.current_query, 100));
    qrels.relevant[inst.qid()].insert(inst.gold_passage_ids.begin(),
                                      inst.gold_passage_ids.end());
  }
  return metrics_of_run(run, qrels);
}

}  // namespace convsearch
