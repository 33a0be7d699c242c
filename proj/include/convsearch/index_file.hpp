#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>

#include "convsearch/bm25.hpp"
#include "convsearch/dense.hpp"

namespace convsearch {

inline constexpr int kIndexFormatVersion = 1;

enum class RetrievalMode { sparse, dense };

RetrievalMode parse_retrieval_mode(std::string_view name);
std::string retrieval_mode_name(RetrievalMode mode);

struct DenseConfig {
  int dim = 256;
  std::uint64_t seed = 0;
};

// Sparse index plus an optional dense section sharing the tokenizer config;
// the unit served by the CLI and the scoring service.
struct SearchIndex {
  InvertedIndex sparse;
  std::optional<DenseIndex> dense;

  RankedList retrieve(RetrievalMode mode, std::string_view query, std::size_t k) const;
  RankOutcome rank_of_gold(RetrievalMode mode, std::string_view query,
                           std::span<const std::string> gold_ids,
                           int depth = kDefaultSearchDepth) const;
  std::uint64_t fingerprint() const;
};

SearchIndex build_search_index(const Corpus& corpus, TokenizerConfig tokenizer,
                               TruncationLimits limits, Bm25Params params,
                               std::optional<DenseConfig> dense = DenseConfig{});

// Versioned JSON serialization; loading rejects mismatched format versions.
// Serialization is canonical: building twice from the same corpus yields
// byte-identical files.
void save_index(const SearchIndex& index, const std::filesystem::path& path);
SearchIndex load_index(const std::filesystem::path& path);
std::string index_to_json_string(const SearchIndex& index);

}  // namespace convsearch
