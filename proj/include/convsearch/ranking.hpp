#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace convsearch {

struct ScoredPassage {
  std::string id;
  double score = 0.0;
};

// Descending score, ties broken by ascending passage id.
using RankedList = std::vector<ScoredPassage>;

// 1-based rank of the first gold passage within the search depth; empty when
// no gold passage appears.
using RankOutcome = std::optional<int>;

inline constexpr int kDefaultSearchDepth = 100;

// Position of the first entry whose id is in `gold_ids`.
template <typename Container>
RankOutcome rank_of_gold_in(const RankedList& ranked, const Container& gold_ids) {
  int rank = 0;
  for (const auto& entry : ranked) {
    ++rank;
    for (const auto& gold : gold_ids) {
      if (entry.id == gold) return rank;
    }
  }
  return std::nullopt;
}

}  // namespace convsearch
