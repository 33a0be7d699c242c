#include "convsearch/format.hpp"

#include <cctype>

#include "convsearch/errors.hpp"

namespace convsearch {

namespace {

constexpr std::string_view kThinkOpen = "<think>";
constexpr std::string_view kThinkClose = "</think>";
constexpr std::string_view kRewriteOpen = "<rewrite>";
constexpr std::string_view kRewriteClose = "</rewrite>";

constexpr std::string_view kInstruction =
    "Given a query and its context, you must first think about the reasoning process in the "
    "mind to decontextualize the query by resolving coreference and omission issues. Then, "
    "provide the user with a rewrite that retains its original meaning and is as informative "
    "as possible to help search engines retrieve relevant documents effectively. The reasoning "
    "process and rewrite should be enclosed within <think> </think> and <rewrite> </rewrite> "
    "tags, respectively, i.e., <think> reasoning process here </think>\\n<rewrite> rewrite "
    "here </rewrite>.";

std::string_view trim(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
  return s;
}

bool whitespace_only(std::string_view s) { return trim(s).empty(); }

std::size_t count_occurrences(std::string_view text, std::string_view needle) {
  std::size_t count = 0;
  for (std::size_t pos = text.find(needle); pos != std::string_view::npos;
       pos = text.find(needle, pos + 1)) {
    ++count;
  }
  return count;
}

}  // namespace

ParsedOutput parse_output(std::string_view text) {
  ParsedOutput out;
  if (count_occurrences(text, kThinkOpen) != 1 || count_occurrences(text, kThinkClose) != 1 ||
      count_occurrences(text, kRewriteOpen) != 1 || count_occurrences(text, kRewriteClose) != 1) {
    return out;
  }
  std::size_t think_open = text.find(kThinkOpen);
  std::size_t think_close = text.find(kThinkClose);
  std::size_t rewrite_open = text.find(kRewriteOpen);
  std::size_t rewrite_close = text.find(kRewriteClose);
  if (!(think_open < think_close && think_close < rewrite_open && rewrite_open < rewrite_close)) {
    return out;
  }
  // Only whitespace may appear outside the two blocks.
  if (!whitespace_only(text.substr(0, think_open)) ||
      !whitespace_only(text.substr(think_close + kThinkClose.size(),
                                   rewrite_open - (think_close + kThinkClose.size()))) ||
      !whitespace_only(text.substr(rewrite_close + kRewriteClose.size()))) {
    return out;
  }
  std::string_view reasoning =
      trim(text.substr(think_open + kThinkOpen.size(), think_close - (think_open + kThinkOpen.size())));
  std::string_view rewrite = trim(text.substr(rewrite_open + kRewriteOpen.size(),
                                              rewrite_close - (rewrite_open + kRewriteOpen.size())));
  if (rewrite.empty()) return out;
  out.reasoning = std::string(reasoning);
  out.rewrite = std::string(rewrite);
  out.valid = true;
  return out;
}

int validate(std::string_view text) { return parse_output(text).valid ? 1 : 0; }

std::string wrap_output(std::string_view reasoning, std::string_view rewrite) {
  std::string out;
  out.reserve(reasoning.size() + rewrite.size() + 40);
  out.append(kThinkOpen).append(" ").append(reasoning).append(" ").append(kThinkClose);
  out.append("\n");
  out.append(kRewriteOpen).append(" ").append(rewrite).append(" ").append(kRewriteClose);
  return out;
}

PromptTemplate few_shot_template() {
  return PromptTemplate{PromptMode::few_shot, std::string(kInstruction)};
}

PromptTemplate train_infer_template() {
  return PromptTemplate{PromptMode::train_infer, std::string(kInstruction)};
}

std::string render_context(std::span<const Turn> history) {
  std::string out;
  for (std::size_t i = 0; i < history.size(); ++i) {
    if (i > 0) out += "\n";
    std::string n = std::to_string(i + 1);
    out += "Q" + n + ": " + history[i].query + "\n";
    out += "A" + n + ": " + history[i].answer;
  }
  return out;
}

std::string render_prompt(const PromptTemplate& tmpl, const QueryInstance& instance,
                          std::span<const std::string> examples) {
  if (tmpl.mode == PromptMode::few_shot && examples.empty()) {
    throw Error::data("few-shot prompt requires at least one example");
  }
  if (tmpl.mode == PromptMode::train_infer && !examples.empty()) {
    throw Error::data("train-infer prompt takes no examples");
  }
  const std::string& instruction =
      tmpl.instruction.empty() ? std::string(kInstruction) : tmpl.instruction;

  std::string out = instruction;
  out += "\n\n";
  if (tmpl.mode == PromptMode::few_shot) {
    out += "Here is an example for your reference:\n";
    out += "### Example Begin ###\n";
    for (std::size_t i = 0; i < examples.size(); ++i) {
      if (i > 0) out += "\n\n";
      out += examples[i];
    }
    out += "\n### Example End ###\n\n";
  }
  out += "### Context Begin ###\n";
  std::string context = render_context(instance.history);
  if (!context.empty()) out += context + "\n";
  out += "### Context End ###\n\n";
  out += "Query: " + instance.current_query;
  if (tmpl.mode == PromptMode::train_infer) out += "\nRewrite:";
  return out;
}

const std::string& default_few_shot_example() {
  static const std::string example = [] {
    std::string e;
    e += "### Context Begin ###\n";
    e += "Q1: Who wrote The Old Man and the Sea?\n";
    e += "A1: Ernest Hemingway wrote The Old Man and the Sea in 1951.\n";
    e += "### Context End ###\n\n";
    e += "Query: When was it published?\n";
    e += wrap_output(
        "The pronoun \"it\" refers to The Old Man and the Sea, the novel by Ernest Hemingway "
        "mentioned in the previous turn. The user wants the publication date of that novel.",
        "When was The Old Man and the Sea by Ernest Hemingway published?");
    return e;
  }();
  return example;
}

}  // namespace convsearch
