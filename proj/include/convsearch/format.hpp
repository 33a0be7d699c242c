#pragma once

#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "convsearch/data.hpp"

namespace convsearch {

// Result of parsing a raw model output against the
// `<think> ... </think>\n<rewrite> ... </rewrite>` protocol.
// valid=true implies rewrite is non-empty after trimming.
struct ParsedOutput {
  std::string reasoning;
  std::string rewrite;
  bool valid = false;
};

// Output text is valid iff it contains exactly one think block followed by
// exactly one rewrite block, nothing but whitespace outside the blocks, and
// a non-empty rewrite. Tag matching is case-sensitive. Invalidity is a
// value, never an error.
ParsedOutput parse_output(std::string_view text);

// The format validation function g : Y -> {0,1}.
int validate(std::string_view text);

// Composes a protocol-conformant output text.
std::string wrap_output(std::string_view reasoning, std::string_view rewrite);

enum class PromptMode { few_shot, train_infer };

struct PromptTemplate {
  PromptMode mode = PromptMode::train_infer;
  std::string instruction;  // defaults to kRewriteInstruction when empty
};

inline constexpr std::string_view kPromptVersion = "1";

PromptTemplate few_shot_template();
PromptTemplate train_infer_template();

// Serializes history turns as "Q1: ...\nA1: ..." lines.
std::string render_context(std::span<const Turn> history);

// Renders the instance into the template. Few-shot mode requires at least
// one example; train-infer mode forbids them.
std::string render_prompt(const PromptTemplate& tmpl, const QueryInstance& instance,
                          std::span<const std::string> examples = {});

// Synthetic demonstration used as the default few-shot example.
const std::string& default_few_shot_example();

}  // namespace convsearch
