#pragma once

#include <cstdint>
#include <vector>

#include "convsearch/data.hpp"

namespace convsearch {

// Synthetic coreference benchmark. Each session introduces a unique
// two-token entity in turn 1 and then asks anaphoric follow-ups ("Where is
// it found?", "Why is it important?"). Decoy passages stuffed with the
// follow-up wording outscore every gold passage for the raw queries, while
// the entity-substituted rewrite ranks its gold passage first. Turn 1 is
// deliberately unlabeled.
struct SyntheticConfig {
  int sessions = 100;
  int decoys = 25;
  int total_passages = 500;  // fillers pad up to this count
  std::uint64_t seed = 7;
};

struct SyntheticBenchmark {
  Corpus corpus;
  std::vector<LabeledSession> sessions;
};

SyntheticBenchmark make_coreference_benchmark(const SyntheticConfig& config = {});

}  // namespace convsearch
