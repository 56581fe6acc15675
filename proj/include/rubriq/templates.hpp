#pragma once

#include "rubriq/corpus.hpp"
#include "rubriq/prompt.hpp"

#include <set>
#include <string>
#include <string_view>

// Builtin prompt assets. These are versioned text constants; changing any of
// them invalidates response caches built against the old wording.
namespace rubriq::templates {

inline constexpr std::string_view kVersion = "1";

// Generic rubric-scoring prompt. The 3-way form swaps the two-label output
// contract for three options and drops the collapse clause; the decision
// procedure is otherwise unchanged.
PromptTemplate baseline(LabelMode mode);

// The prompt-induction instructions contain the literal tokens {question} and
// {answer_to_classify} (they tell the model which placeholders the generated
// template must contain), so the asset is split in two: the instruction text
// is returned verbatim and only the input section is a render template.
// build_meta_prompt concatenates instructions + render(input, bindings).
std::string meta_prompt_instructions(LabelMode mode, bool extended);
PromptTemplate meta_prompt_input();

// Three-call review ensemble (two-way only).
PromptTemplate roleplay_positive();
PromptTemplate roleplay_negative();
PromptTemplate roleplay_meta();

// Synthetic-answer pipeline. Every prompt carries a {round} marker so retry
// attempts produce distinct cache keys; without it a cached failure would
// short-circuit the retry loop.
PromptTemplate synth_generate();
PromptTemplate synth_noise();
PromptTemplate synth_validate(LabelMode mode);

// The closed placeholder set every induced template must match exactly.
const std::set<std::string>& induced_required();

} // namespace rubriq::templates
