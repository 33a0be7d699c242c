#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <random>

#include "convsearch/errors.hpp"
#include "convsearch/grpo.hpp"
#include "convsearch/synthetic.hpp"
#include "oracles.hpp"

using namespace convsearch;

namespace {

QueryInstance coref_instance(int variant = 0) {
  static const char* firsts[] = {"Marlin", "Falcon", "Juniper", "Basalt", "Heron"};
  static const char* seconds[] = {"Reef", "Ridge", "Grove", "Hollow", "Mesa"};
  std::string entity = std::string(firsts[variant % 5]) + std::to_string(variant) + " " +
                       seconds[variant % 5] + std::to_string(variant);
  QueryInstance qi;
  qi.session_id = "s" + std::to_string(variant);
  qi.turn_index = 2;
  qi.history = {{"What is " + entity + "?",
                 "The listed site " + entity + " appears in travel notes."}};
  qi.current_query = "Where is it found?";
  qi.gold_passage_ids = {"p" + std::to_string(variant)};
  return qi;
}

Eigen::VectorXd vec(std::initializer_list<double> xs) {
  Eigen::VectorXd v(static_cast<Eigen::Index>(xs.size()));
  Eigen::Index i = 0;
  for (double x : xs) v[i++] = x;
  return v;
}

}  // namespace

TEST_CASE("advantages of [2,0] are about [1,-1] with exact centering") {
  auto a = compute_advantages(vec({2.0, 0.0}));
  REQUIRE(a.size() == 2);
  CHECK(std::abs(a[0] - 1.0) < 3e-6);
  CHECK(std::abs(a[1] + 1.0) < 3e-6);
  CHECK(a[0] + a[1] == 0.0);
}

TEST_CASE("constant groups produce exactly zero advantages") {
  auto a = compute_advantages(vec({1.0, 1.0, 1.0}));
  for (Eigen::Index i = 0; i < a.size(); ++i) CHECK(a[i] == 0.0);
}

TEST_CASE("groups of fewer than two rewards are rejected") {
  CHECK_THROWS_AS(compute_advantages(vec({1.0})), Error);
}

TEST_CASE("advantages match the independent statistics oracle") {
  std::vector<double> rewards{3.0, 1.0, 1.0, 1.0};
  double mean = oracle::mean(rewards);
  double std = oracle::population_std(rewards);
  CHECK(mean == doctest::Approx(1.5).epsilon(1e-12));
  CHECK(std == doctest::Approx(0.8660254037844386).epsilon(1e-12));
  auto a = compute_advantages(vec({3.0, 1.0, 1.0, 1.0}));
  for (int i = 0; i < 4; ++i) {
    CHECK(a[i] == doctest::Approx((rewards[static_cast<std::size_t>(i)] - mean) /
                                  (std + 1e-6))
                      .epsilon(1e-12));
  }
}

TEST_CASE("random non-constant groups normalize to mean 0 and std about 1") {
  std::mt19937_64 rng(77);
  RewardConfig reward_cfg;
  for (int trial = 0; trial < 500; ++trial) {
    Eigen::VectorXd rewards(8);
    for (int i = 0; i < 8; ++i) {
      int r = 1 + static_cast<int>(rng() % 130);
      bool ok = rng() % 8 != 0;
      rewards[i] = full_reward(r > 100 ? RankOutcome{} : RankOutcome{r}, ok, reward_cfg);
    }
    if ((rewards.array() == rewards[0]).all()) continue;
    auto a = compute_advantages(rewards);
    CHECK(std::abs(a.mean()) <= 1e-9);
    double std = std::sqrt(a.array().square().sum() / 8.0);
    CHECK(std::abs(std - 1.0) <= 1e-3);
  }
}

TEST_CASE("loss is zero at theta_old with centered advantages and no KL") {
  ToyPolicy policy;
  auto qi = coref_instance();
  std::mt19937_64 rng(9);
  for (auto& x : policy.logits().reshaped()) x = canonical_uniform(rng) - 0.5;
  ToyPolicy ref = policy;

  auto slots_all = policy.candidates(qi);
  std::vector<int> slots{0, 1, 0, 1};
  Eigen::VectorXd old_lp(4);
  for (int i = 0; i < 4; ++i) old_lp[i] = policy.log_prob(qi, slots[static_cast<std::size_t>(i)]);
  Eigen::VectorXd adv = compute_advantages(vec({2.0, 0.0, 2.0, 0.0}));

  auto loss = grpo_loss(policy, ref, qi, slots, old_lp, adv, 0.2, 0.0);
  // all ratios are 1, so the surrogate equals mean(A) = 0
  CHECK(loss.surrogate == doctest::Approx(0.0).epsilon(1e-12));
  CHECK(loss.loss == doctest::Approx(0.0).epsilon(1e-12));
}

TEST_CASE("hand-evaluated clip case: ratios [2, 0.5], A [1, -1], eps 0.2") {
  ToyPolicy policy;
  auto qi = coref_instance();
  ToyPolicy ref = policy;
  std::vector<int> slots{0, 1};
  // Force the ratios through the old log-probs.
  Eigen::VectorXd old_lp(2);
  old_lp[0] = policy.log_prob(qi, 0) - std::log(2.0);
  old_lp[1] = policy.log_prob(qi, 1) - std::log(0.5);
  Eigen::VectorXd adv = vec({1.0, -1.0});

  auto loss = grpo_loss(policy, ref, qi, slots, old_lp, adv, 0.2, 0.0);
  // min(2*1, 1.2*1) = 1.2 and min(0.5*(-1), 0.8*(-1)) = -0.8;
  // loss = -(1.2 - 0.8)/2 = -0.2.
  CHECK(loss.surrogate == doctest::Approx(0.2).epsilon(1e-12));
  CHECK(loss.loss == doctest::Approx(-0.2).epsilon(1e-12));

  auto with_grad = grpo_loss_grad(policy, ref.logits(), qi, slots, old_lp, adv, 0.2, 0.0);
  CHECK(with_grad.loss == doctest::Approx(loss.loss).epsilon(1e-12));
}

TEST_CASE("KL term vanishes exactly at the reference") {
  ToyPolicy policy;
  auto qi = coref_instance();
  std::mt19937_64 rng(10);
  for (auto& x : policy.logits().reshaped()) x = canonical_uniform(rng) - 0.5;
  ToyPolicy ref = policy;
  std::vector<int> slots{0, 1};
  Eigen::VectorXd old_lp(2);
  for (int i = 0; i < 2; ++i) old_lp[i] = policy.log_prob(qi, slots[static_cast<std::size_t>(i)]);
  auto loss = grpo_loss(policy, ref, qi, slots, old_lp, vec({1.0, -1.0}), 0.2, 0.001);
  CHECK(loss.kl == 0.0);

  // Away from the reference the exact categorical KL is strictly positive.
  ToyPolicy moved = policy;
  moved.logits()(policy.bucket_of(qi), 0) += 0.7;
  auto moved_loss = grpo_loss(moved, ref, qi, slots, old_lp, vec({1.0, -1.0}), 0.2, 0.001);
  CHECK(moved_loss.kl > 0.0);
}

TEST_CASE("mismatched group lengths are an invariant error") {
  ToyPolicy policy;
  auto qi = coref_instance();
  std::vector<int> slots{0, 1};
  CHECK_THROWS_AS(
      grpo_loss(policy, policy, qi, slots, Eigen::VectorXd::Zero(3), vec({1.0, -1.0}), 0.2, 0.0),
      Error);
}

TEST_CASE("analytic gradient matches central finite differences") {
  std::mt19937_64 rng(1234);
  const std::array<double, 4> ratios{0.5, 0.65, 1.5, 2.2};
  double worst = 0.0;
  int checked = 0;
  for (int trial = 0; trial < 60; ++trial) {
    auto qi = coref_instance(trial % 7);
    ToyPolicy policy;
    for (auto& x : policy.logits().reshaped()) x = 2.0 * canonical_uniform(rng) - 1.0;
    ToyPolicy ref;
    for (auto& x : ref.logits().reshaped()) x = 2.0 * canonical_uniform(rng) - 1.0;

    int n_cands = static_cast<int>(policy.candidates(qi).size());
    REQUIRE(n_cands >= 2);
    int n = 6;
    std::vector<int> slots;
    Eigen::VectorXd old_lp(n), rewards(n);
    for (int i = 0; i < n; ++i) {
      int slot = static_cast<int>(rng() % static_cast<std::uint64_t>(n_cands));
      slots.push_back(slot);
      double ratio = ratios[rng() % 4];
      old_lp[i] = policy.log_prob(qi, slot) - std::log(ratio);
      rewards[i] = static_cast<double>(rng() % 5) / 2.0;
    }
    if ((rewards.array() == rewards[0]).all()) rewards[0] += 1.0;
    Eigen::VectorXd adv = compute_advantages(rewards);

    double kl_coef = (trial % 2 == 0) ? 0.0 : 0.001;
    auto result = gradient_check(policy, ref.logits(), qi, slots, old_lp, adv, 0.2, kl_coef);
    if (result.groups_skipped_boundary > 0) continue;
    worst = std::max(worst, result.max_rel_error);
    checked += result.parameters_checked;
  }
  CHECK(checked > 100);
  CHECK(worst < 1e-4);
}

TEST_CASE("zero-advantage groups give exactly zero gradient") {
  auto qi = coref_instance();
  ToyPolicy policy;
  std::mt19937_64 rng(8);
  for (auto& x : policy.logits().reshaped()) x = canonical_uniform(rng) - 0.5;

  std::vector<int> slots{0, 1, 1, 0};
  Eigen::VectorXd old_lp(4);
  for (int i = 0; i < 4; ++i) old_lp[i] = policy.log_prob(qi, slots[static_cast<std::size_t>(i)]);
  Eigen::VectorXd adv = Eigen::VectorXd::Zero(4);

  // beta = 0: the surrogate alone.
  auto g0 = grpo_loss_grad(policy, policy.logits(), qi, slots, old_lp, adv, 0.2, 0.0);
  CHECK(g0.grad.norm() == 0.0);

  // beta > 0 at the reference snapshot: the KL gradient is also exactly zero.
  auto g1 = grpo_loss_grad(policy, policy.logits(), qi, slots, old_lp, adv, 0.2, 0.001);
  CHECK(g1.grad.norm() == 0.0);
}

TEST_CASE("ratios at the clip boundary are excluded and reported") {
  auto qi = coref_instance();
  ToyPolicy policy;
  std::vector<int> slots{0, 1};
  Eigen::VectorXd old_lp(2);
  old_lp[0] = policy.log_prob(qi, 0) - std::log(1.2);  // exactly on the boundary
  old_lp[1] = policy.log_prob(qi, 1);
  auto result = gradient_check(policy, policy.logits(), qi, slots, old_lp, vec({1.0, -1.0}),
                               0.2, 0.0);
  CHECK(result.groups_skipped_boundary == 1);
  CHECK(result.parameters_checked == 0);
}

TEST_CASE("training on the synthetic benchmark raises reward and rank-1 rate") {
  SyntheticConfig cfg;
  cfg.sessions = 8;
  cfg.decoys = 6;
  cfg.total_passages = 40;
  auto bench = make_coreference_benchmark(cfg);
  auto instances = build_query_instances(bench.sessions);
  REQUIRE(instances.size() == 16);
  auto index = build_search_index(bench.corpus, {}, {}, Bm25Params::topiocqa(), std::nullopt);

  ToyPolicy policy(ToyPolicyConfig{.buckets = 32});
  RewardConfig reward_cfg;
  TrainConfig tc;
  tc.batch_size = 8;
  tc.epochs = 40;
  tc.learning_rate = 0.5;
  tc.seed = 5;
  auto log = train(policy, instances, index, RetrievalMode::sparse, reward_cfg, tc);
  REQUIRE(log.steps.size() >= 20);
  CHECK(log.retrieval_failures == 0);
  CHECK(log.steps.back().mean_reward > log.steps.front().mean_reward);
  CHECK(log.steps.back().rank1_rate >= 0.8);
  CHECK(log.steps.back().format_rate == 1.0);

  // Greedy metrics beat the raw-query baseline decisively.
  auto trained = evaluate_policy(policy, instances, index, RetrievalMode::sparse);
  auto raw = evaluate_raw_queries(instances, index, RetrievalMode::sparse);
  CHECK(trained["MRR@3"] > raw["MRR@3"] + 0.5);
}

TEST_CASE("training logs are byte-identical under a fixed seed") {
  SyntheticConfig cfg;
  cfg.sessions = 4;
  cfg.decoys = 4;
  cfg.total_passages = 20;
  auto bench = make_coreference_benchmark(cfg);
  auto instances = build_query_instances(bench.sessions);
  auto index = build_search_index(bench.corpus, {}, {}, Bm25Params::topiocqa(), std::nullopt);

  auto run_once = [&] {
    ToyPolicy policy(ToyPolicyConfig{.buckets = 16});
    TrainConfig tc;
    tc.batch_size = 4;
    tc.epochs = 5;
    tc.seed = 99;
    return train(policy, instances, index, RetrievalMode::sparse, RewardConfig{}, tc).to_jsonl();
  };
  std::string a = run_once();
  std::string b = run_once();
  CHECK(a == b);
  CHECK(!a.empty());

  auto parsed = TrainLog::from_jsonl(a);
  CHECK(parsed.to_jsonl() == a);
}

TEST_CASE("max_steps caps the run") {
  SyntheticConfig cfg;
  cfg.sessions = 4;
  cfg.decoys = 4;
  cfg.total_passages = 20;
  auto bench = make_coreference_benchmark(cfg);
  auto instances = build_query_instances(bench.sessions);
  auto index = build_search_index(bench.corpus, {}, {}, Bm25Params::topiocqa(), std::nullopt);
  ToyPolicy policy(ToyPolicyConfig{.buckets = 16});
  TrainConfig tc;
  tc.batch_size = 4;
  tc.epochs = 50;
  tc.max_steps = 7;
  auto log = train(policy, instances, index, RetrievalMode::sparse, RewardConfig{}, tc);
  CHECK(log.steps.size() == 7);
}

TEST_CASE("train config validation") {
  TrainConfig tc;
  CHECK_NOTHROW(tc.validate());
  tc.group_size = 1;
  CHECK_THROWS_AS(tc.validate(), Error);
  tc = TrainConfig{};
  tc.clip_eps = 1.0;
  CHECK_THROWS_AS(tc.validate(), Error);
  tc = TrainConfig{};
  tc.kl_coef = -0.1;
  CHECK_THROWS_AS(tc.validate(), Error);
}
