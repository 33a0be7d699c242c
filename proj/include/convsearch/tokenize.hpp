#pragma once

#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

namespace convsearch {

// Analyzer configuration. tokenize() is a pure function of (config, text).
struct TokenizerConfig {
  bool lowercase = true;
  bool stem = true;             // Porter stemmer
  bool remove_stopwords = false;
};

// Head-truncation limits applied to token streams before scoring/embedding.
struct TruncationLimits {
  std::size_t query_tokens = 64;
  std::size_t concatenated_tokens = 512;
  std::size_t passage_tokens = 384;
};

inline constexpr std::size_t kNoTokenLimit = static_cast<std::size_t>(-1);

// Splits on non-alphanumeric boundaries, then applies lowercasing, stopword
// removal and stemming per config, and finally keeps at most `limit` tokens.
std::vector<std::string> tokenize(std::string_view text, const TokenizerConfig& config,
                                  std::size_t limit = kNoTokenLimit);

// Porter (1980) stemmer. Expects a lowercase word; words of length <= 2 are
// returned unchanged.
std::string porter_stem(std::string word);

bool is_stopword(std::string_view token);

}  // namespace convsearch
