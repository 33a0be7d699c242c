#include "convsearch/synthetic.hpp"

#include <array>
#include <cstdio>
#include <random>
#include <string>

#include "convsearch/errors.hpp"
#include "convsearch/policy.hpp"

namespace convsearch {

namespace {

constexpr std::array<std::string_view, 12> kEntityFirst = {
    "Marlin", "Falcon", "Juniper", "Basalt", "Heron",  "Cobalt",
    "Tamarin", "Lyric",  "Saffron", "Umber", "Vesper", "Zephyr"};

constexpr std::array<std::string_view, 10> kEntitySecond = {
    "Reef", "Ridge", "Grove", "Hollow", "Mesa", "Shoal", "Crag", "Basin", "Knoll", "Dune"};

constexpr std::array<std::string_view, 8> kPlaces = {
    "Northbay", "Eastvale", "Southmoor", "Westfall",
    "Highmarsh", "Lowfen",   "Midlake",  "Farpoint"};

constexpr std::array<std::string_view, 8> kCategories = {
    "coral formation", "mountain trail", "folk festival", "desert spring",
    "river delta",     "cave system",    "tidal marsh",   "forest glade"};

constexpr std::array<std::string_view, 8> kReasons = {
    "shelters rare migratory birds",      "feeds the surrounding farmland",
    "preserves ancient weaving crafts",   "stabilizes the local climate",
    "supports a fragile fish population", "stores seasonal floodwater",
    "hosts long running night markets",   "protects old growth timber"};

// Filler vocabulary deliberately avoids the follow-up query terms and every
// entity/place token so fillers stay out of the decisive rankings.
constexpr std::array<std::string_view, 32> kFillerVocab = {
    "quiet",   "meadow",  "holds",   "many",    "seasonal", "flowers", "during",
    "spring",  "rains",   "old",     "stone",   "bridge",   "crosses", "narrow",
    "stream",  "near",    "village", "market",  "sells",    "fresh",   "bread",
    "every",   "morning", "lantern", "light",   "fills",    "harbor",  "evening",
    "gentle",  "wind",    "moves",   "tall"};

std::string pad3(int n) {
  char buf[16];
  std::snprintf(buf, sizeof(buf), "%03d", n);
  return buf;
}

std::string filler_text(std::mt19937_64& rng, int words) {
  std::string out;
  for (int w = 0; w < words; ++w) {
    auto pick = static_cast<std::size_t>(canonical_uniform(rng) *
                                         static_cast<double>(kFillerVocab.size()));
    if (pick >= kFillerVocab.size()) pick = kFillerVocab.size() - 1;
    if (!out.empty()) out += " ";
    out += kFillerVocab[pick];
  }
  out += ".";
  return out;
}

}  // namespace

SyntheticBenchmark make_coreference_benchmark(const SyntheticConfig& config) {
  if (config.sessions < 1) throw Error::data("benchmark needs at least one session");
  int core = config.sessions * 3 + config.decoys;
  if (config.total_passages < core) {
    throw Error::data("total_passages must cover sessions*3 + decoys = " + std::to_string(core));
  }

  SyntheticBenchmark bench;
  std::mt19937_64 rng(config.seed);

  for (int i = 0; i < config.sessions; ++i) {
    std::string sid = pad3(i + 1);
    std::string entity = std::string(kEntityFirst[static_cast<std::size_t>(i) %
                                                  kEntityFirst.size()]) +
                         std::to_string(i + 1) + " " +
                         std::string(kEntitySecond[static_cast<std::size_t>(i) %
                                                   kEntitySecond.size()]) +
                         std::to_string(i + 1);
    std::string place = std::string(kPlaces[static_cast<std::size_t>(i) % kPlaces.size()]) +
                        std::to_string(i + 1);
    std::string category(kCategories[static_cast<std::size_t>(i) % kCategories.size()]);
    std::string reason(kReasons[static_cast<std::size_t>(i) % kReasons.size()]);

    // Intro and importance passages run a little longer than the location
    // passage so length normalization cannot flip the intended ranking.
    bench.corpus.add({"p" + sid + "_intro",
                      entity + " is a " + category + " that draws steady visitors. Guides often "
                      "describe " + entity + " before any other stop on the route."});
    bench.corpus.add({"p" + sid + "_loc",
                      entity + " is found in " + place + ". Travelers found the " + category +
                      " " + entity + " across the " + place + " region."});
    bench.corpus.add({"p" + sid + "_imp",
                      entity + " is important because it " + reason + ". Scholars who study " +
                      entity + " say the " + category + " anchors local life."});

    LabeledSession ls;
    ls.session.id = "s" + sid;
    ls.session.turns.push_back({"What is " + entity + "?",
                                "The " + category + " " + entity + " draws steady visitors."});
    ls.session.turns.push_back({"Where is it found?", "It is found in " + place + "."});
    ls.session.turns.push_back({"Why is it important?",
                                "It is important because it " + reason + "."});
    ls.gold[2] = {"p" + sid + "_loc"};
    ls.gold[3] = {"p" + sid + "_imp"};
    bench.sessions.push_back(std::move(ls));
  }

  // Decoys soak up the raw follow-up queries: short, dense in exactly the
  // words a context-free turn carries.
  for (int j = 0; j < config.decoys; ++j) {
    bench.corpus.add({"decoy" + pad3(j + 1),
                      "Where is it found? Why is it important? It is found where it is found. "
                      "Nobody knows why it is important or where it is."});
  }

  int fillers = config.total_passages - core;
  for (int j = 0; j < fillers; ++j) {
    bench.corpus.add({"filler" + pad3(j + 1), filler_text(rng, 18)});
  }

  return bench;
}

}  // namespace convsearch
