#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "convsearch/grpo.hpp"
#include "convsearch/policy.hpp"
#include "convsearch/synthetic.hpp"

using namespace convsearch;

TEST_CASE("benchmark has the advertised shape") {
  SyntheticConfig cfg;  // 100 sessions, 25 decoys, 500 passages
  auto bench = make_coreference_benchmark(cfg);
  CHECK(bench.corpus.size() == 500);
  CHECK(bench.sessions.size() == 100);
  auto instances = build_query_instances(bench.sessions);
  CHECK(instances.size() == 200);  // turn 1 is unlabeled
  validate_gold_ids(instances, bench.corpus);
  for (const auto& inst : instances) {
    CHECK(inst.turn_index >= 2);
    CHECK(static_cast<int>(inst.history.size()) == inst.turn_index - 1);
  }
}

TEST_CASE("generation is deterministic per seed") {
  auto a = make_coreference_benchmark({});
  auto b = make_coreference_benchmark({});
  REQUIRE(a.corpus.size() == b.corpus.size());
  for (std::size_t i = 0; i < a.corpus.size(); ++i) {
    CHECK(a.corpus.at_ordinal(i).id == b.corpus.at_ordinal(i).id);
    CHECK(a.corpus.at_ordinal(i).text == b.corpus.at_ordinal(i).text);
  }
}

TEST_CASE("raw queries rank beyond 10 while the entity rewrite ranks first") {
  auto bench = make_coreference_benchmark({});
  auto instances = build_query_instances(bench.sessions);
  auto index = build_search_index(bench.corpus, {}, {}, Bm25Params::topiocqa(), std::nullopt);

  int raw_ok = 0, rewrite_rank1 = 0;
  for (const auto& inst : instances) {
    auto raw_rank = index.sparse.rank_of_gold(inst.current_query, inst.gold_passage_ids, 500);
    // decoys swamp the context-free wording
    REQUIRE(raw_rank.has_value());
    if (*raw_rank > 10) ++raw_ok;

    auto cands = candidate_rewrites(inst.history, inst.current_query);
    REQUIRE(cands.size() >= 2);
    auto sub_rank = index.sparse.rank_of_gold(cands[1], inst.gold_passage_ids, 500);
    if (sub_rank && *sub_rank == 1) ++rewrite_rank1;
  }
  CHECK(raw_ok == static_cast<int>(instances.size()));
  CHECK(rewrite_rank1 == static_cast<int>(instances.size()));
}

TEST_CASE("entity substitution is slot 1 for every instance") {
  auto bench = make_coreference_benchmark({});
  auto instances = build_query_instances(bench.sessions);
  for (const auto& inst : instances) {
    auto entities = extract_entities(inst.history, 4);
    REQUIRE(!entities.empty());
    auto cands = candidate_rewrites(inst.history, inst.current_query);
    CHECK(cands[0] == inst.current_query);
    CHECK(cands[1].find(entities[0]) != std::string::npos);
  }
}
