#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "convsearch/tokenize.hpp"

using namespace convsearch;

TEST_CASE("splits on non-alphanumeric boundaries and lowercases") {
  TokenizerConfig cfg{.lowercase = true, .stem = false, .remove_stopwords = false};
  CHECK(tokenize("The Cat, the cat!", cfg) ==
        std::vector<std::string>{"the", "cat", "the", "cat"});
  CHECK(tokenize("", cfg).empty());
  CHECK(tokenize("a-b_c.d", cfg) == std::vector<std::string>{"a", "b", "c", "d"});
  CHECK(tokenize("v2 x86 64", cfg) == std::vector<std::string>{"v2", "x86", "64"});
}

TEST_CASE("lowercase off preserves case") {
  TokenizerConfig cfg{.lowercase = false, .stem = false, .remove_stopwords = false};
  CHECK(tokenize("The Cat", cfg) == std::vector<std::string>{"The", "Cat"});
}

TEST_CASE("head truncation keeps the first limit tokens") {
  TokenizerConfig cfg{.lowercase = true, .stem = false, .remove_stopwords = false};
  std::string text;
  for (int i = 0; i < 1000; ++i) text += "w" + std::to_string(i) + " ";
  auto tokens = tokenize(text, cfg, 384);
  REQUIRE(tokens.size() == 384);
  CHECK(tokens.front() == "w0");
  CHECK(tokens.back() == "w383");
}

TEST_CASE("truncation is a prefix operation") {
  TokenizerConfig cfg{.lowercase = true, .stem = true, .remove_stopwords = false};
  std::string text = "running quickly over seventeen unrelated meadows tonight";
  auto full = tokenize(text, cfg);
  auto cut = tokenize(text, cfg, 3);
  REQUIRE(cut.size() == 3);
  for (std::size_t i = 0; i < cut.size(); ++i) CHECK(cut[i] == full[i]);
}

TEST_CASE("stopword removal precedes truncation") {
  TokenizerConfig cfg{.lowercase = true, .stem = false, .remove_stopwords = true};
  CHECK(tokenize("the boat is on a river", cfg) == std::vector<std::string>{"boat", "river"});
  CHECK(is_stopword("the"));
  CHECK_FALSE(is_stopword("boat"));
}

TEST_CASE("porter stemmer reference pairs") {
  // Canonical pairs from the published algorithm description.
  CHECK(porter_stem("caresses") == "caress");
  CHECK(porter_stem("ponies") == "poni");
  CHECK(porter_stem("ties") == "ti");
  CHECK(porter_stem("caress") == "caress");
  CHECK(porter_stem("cats") == "cat");
  CHECK(porter_stem("feed") == "feed");
  CHECK(porter_stem("agreed") == "agre");
  CHECK(porter_stem("plastered") == "plaster");
  CHECK(porter_stem("bled") == "bled");
  CHECK(porter_stem("motoring") == "motor");
  CHECK(porter_stem("sing") == "sing");
  CHECK(porter_stem("conflated") == "conflat");
  CHECK(porter_stem("troubled") == "troubl");
  CHECK(porter_stem("sized") == "size");
  CHECK(porter_stem("hopping") == "hop");
  CHECK(porter_stem("tanned") == "tan");
  CHECK(porter_stem("falling") == "fall");
  CHECK(porter_stem("hissing") == "hiss");
  CHECK(porter_stem("fizzed") == "fizz");
  CHECK(porter_stem("failing") == "fail");
  CHECK(porter_stem("filing") == "file");
  CHECK(porter_stem("happy") == "happi");
  CHECK(porter_stem("sky") == "sky");
  CHECK(porter_stem("relational") == "relat");
  CHECK(porter_stem("conditional") == "condit");
  CHECK(porter_stem("rational") == "ration");
  CHECK(porter_stem("valenci") == "valenc");
  CHECK(porter_stem("digitizer") == "digit");
  CHECK(porter_stem("operator") == "oper");
  CHECK(porter_stem("feudalism") == "feudal");
  CHECK(porter_stem("decisiveness") == "decis");
  CHECK(porter_stem("hopefulness") == "hope");
  CHECK(porter_stem("formaliti") == "formal");
  CHECK(porter_stem("triplicate") == "triplic");
  CHECK(porter_stem("formative") == "form");
  CHECK(porter_stem("formalize") == "formal");
  CHECK(porter_stem("electriciti") == "electric");
  CHECK(porter_stem("electrical") == "electric");
  CHECK(porter_stem("hopeful") == "hope");
  CHECK(porter_stem("goodness") == "good");
  CHECK(porter_stem("revival") == "reviv");
  CHECK(porter_stem("allowance") == "allow");
  CHECK(porter_stem("inference") == "infer");
  CHECK(porter_stem("airliner") == "airlin");
  CHECK(porter_stem("adjustable") == "adjust");
  CHECK(porter_stem("defensible") == "defens");
  CHECK(porter_stem("irritant") == "irrit");
  CHECK(porter_stem("replacement") == "replac");
  CHECK(porter_stem("adjustment") == "adjust");
  CHECK(porter_stem("dependent") == "depend");
  CHECK(porter_stem("adoption") == "adopt");
  CHECK(porter_stem("communism") == "commun");
  CHECK(porter_stem("activate") == "activ");
  CHECK(porter_stem("effective") == "effect");
  CHECK(porter_stem("rate") == "rate");
  CHECK(porter_stem("cease") == "ceas");
  CHECK(porter_stem("controll") == "control");
  CHECK(porter_stem("roll") == "roll");
}

TEST_CASE("short words pass through the stemmer") {
  CHECK(porter_stem("it") == "it");
  CHECK(porter_stem("a") == "a");
  CHECK(porter_stem("") == "");
}

TEST_CASE("tokenization is deterministic") {
  TokenizerConfig cfg;
  std::string text = "Conversational queries often contain coreference and omissions.";
  CHECK(tokenize(text, cfg) == tokenize(text, cfg));
}
