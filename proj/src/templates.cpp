#include "rubriq/templates.hpp"

namespace rubriq::templates {

namespace {

constexpr std::string_view kBaselineTwoWay =
    R"TPL(You are an expert educational rater for rubric-based short-answer scoring.

Your task is to assign a binary score to a student's answer using the question and the rubric.

Label set for this 2-way setting:
- Output "Correct" only if the student's answer satisfies the rubric for "Correct".
- Output "Incorrect" otherwise.
- Answers that match "Partially Correct" must be labeled "Incorrect".

Decision procedure:
1. Read the question, the student answer, and all rubric levels.
2. Identify the full set of meaning requirements for the rubric label "Correct".
3. Use the question only as context to interpret the student's wording.
4. Do not use outside knowledge to add content that is not stated or clearly implied by the student's answer.
5. Accept paraphrases, synonyms, different wording, and short or fragmentary answers if their meaning clearly matches the rubric.
6. Output "Correct" only if all requirements for a fully correct answer are present and unambiguous.
7. Output "Incorrect" if any required element is missing, only partially present, too vague to verify, off-topic, self-contradictory, nonsensical, or incompatible with the rubric.
8. If the rubric allows multiple alternative ways to be fully correct, any one complete valid alternative is sufficient.
9. Ignore spelling and grammar errors unless they make the meaning unclear.
10. Ignore extra details unless they contradict the required content or make the answer incompatible with the rubric.
11. For multi-part requirements, all required parts must be present unless the rubric explicitly states otherwise.
12. Do not output any explanation.

The question, answer, and rubric may be in German. Score based on meaning, not language quality.

Input:
<Question>
{question}
</Question>

<StudentAnswer>
{answer_to_classify}
</StudentAnswer>

<Rubric>
<Incorrect>
{rubric_incorrect}
</Incorrect>
<PartiallyCorrect>
{rubric_partially_correct}
</PartiallyCorrect>
<Correct>
{rubric_correct}
</Correct>
</Rubric>

Return exactly one word and nothing else:
Correct
or
Incorrect)TPL";

constexpr std::string_view kBaselineThreeWay =
    R"TPL(You are an expert educational rater for rubric-based short-answer scoring.

Your task is to assign a score to a student's answer using the question and the rubric.

Label set for this 3-way setting:
- Output "Correct" only if the student's answer satisfies the rubric for "Correct".
- Output "Partially Correct" if the student's answer satisfies the rubric for "Partially Correct" but not the rubric for "Correct".
- Output "Incorrect" otherwise.

Decision procedure:
1. Read the question, the student answer, and all rubric levels.
2. Identify the full set of meaning requirements for each rubric label.
3. Use the question only as context to interpret the student's wording.
4. Do not use outside knowledge to add content that is not stated or clearly implied by the student's answer.
5. Accept paraphrases, synonyms, different wording, and short or fragmentary answers if their meaning clearly matches the rubric.
6. Output "Correct" only if all requirements for a fully correct answer are present and unambiguous.
7. Output "Partially Correct" if the answer does not fully satisfy the rubric for "Correct" but matches the rubric level for "Partially Correct".
8. Output "Incorrect" if the answer satisfies neither of the other rubric levels, is too vague to verify, off-topic, self-contradictory, nonsensical, or incompatible with the rubric.
9. If the rubric allows multiple alternative ways to be fully correct, any one complete valid alternative is sufficient.
10. Ignore spelling and grammar errors unless they make the meaning unclear.
11. Ignore extra details unless they contradict the required content or make the answer incompatible with the rubric.
12. For multi-part requirements, all required parts must be present unless the rubric explicitly states otherwise.
13. Do not output any explanation.

The question, answer, and rubric may be in German. Score based on meaning, not language quality.

Input:
<Question>
{question}
</Question>

<StudentAnswer>
{answer_to_classify}
</StudentAnswer>

<Rubric>
<Incorrect>
{rubric_incorrect}
</Incorrect>
<PartiallyCorrect>
{rubric_partially_correct}
</PartiallyCorrect>
<Correct>
{rubric_correct}
</Correct>
</Rubric>

Return exactly one label and nothing else:
Correct
or
Partially Correct
or
Incorrect)TPL";

constexpr std::string_view kMetaHead =
    R"TPL(You are an expert in educational assessment and prompt design.

Given a question, a rubric, and labeled training answers for one fixed question/rubric group, generate a reusable prompt for scoring a NEW answer for that same group.
)TPL";

constexpr std::string_view kMetaLabelsTwoWay =
    "The possible labels are Correct and Incorrect (Partially Correct are classified as Incorrect).\n";

constexpr std::string_view kMetaLabelsThreeWay =
    "The possible labels are Correct, Partially Correct, and Incorrect.\n";

constexpr std::string_view kMetaBody =
    R"TPL(
The generated prompt must:
- be specific to this question/rubric group,
- reflect the rubric and the training signals,
- use training examples for illustrating the classification instructions,
- instruct the model to output only the final label and nothing else,
- contain exactly these placeholders:
  - {question}
  - {answer_to_classify}

Do not:
 - Repeat the rubric as-is: the idea is for you to reflect on the training examples and generate better criteria,
 - Add examples as few-shot: use the examples to explain the task and classification criteria, and to illustrate your explanations.
)TPL";

constexpr std::string_view kMetaExtension =
    R"TPL(
The expected prompt should be sufficiently complex, nuanced, and comprehensive so that, if you were given only your own prompt, you would be fully confident in your ability to correctly classify all training examples, without overfitting to the specific examples provided. Do not optimize for brevity at the expense of completeness. It is perfectly acceptable for the prompt to be long if that is necessary to capture all relevant distinctions, edge cases, and decision criteria required for perfect classification. Ask yourself: does this prompt contain all the information needed to classify every example correctly?
)TPL";

constexpr std::string_view kMetaReturn =
    R"TPL(
Return only the generated prompt template as plain text.
Do not include any explanation or extra text.

)TPL";

constexpr std::string_view kMetaInput =
    R"TPL(Input:
<Question>
{question}
</Question>

<Rubric>
<Incorrect>
{rubric_incorrect}
</Incorrect>
<PartiallyCorrect>
{rubric_partially_correct}
</PartiallyCorrect>
<Correct>
{rubric_correct}
</Correct>
</Rubric>

<TrainingExamples>
{training_examples}
</TrainingExamples>)TPL";

constexpr std::string_view kRoleplayPositive =
    R"TPL(You are a teacher in a distant planet correcting homework in german. You do not have the possibility of communicating with any of your colleagues.
Consider the following question in German written by some teacher in your solar system: '{question}'. A high-school student wrote this answer: '{answer}'.

Your task is to generate a three-paragraph discussion on reasons to consider that answer as Correct or Incorrect. In order to provide a framework, you can consider the answer is Correct or Incorrect according to the following criteria:
- The answer is Incorrect if: {incorrect}
- The answer is Correct if: {correct}

In your discussion try to focus on the POSITIVE aspects of the answer: why would you consider it as Correct? Write your review in English.)TPL";

constexpr std::string_view kRoleplayNegative =
    R"TPL(You are a teacher in a distant planet correcting homeworks in german. You do not have the possibility of communicating with any of your colleagues.
Consider the following question in German written by some teacher in your solar system: '{question}'. A high-school student wrote this answer: '{answer}'.

Your task is to generate a three-paragraph discussion on reasons to consider that answer as Correct or Incorrect. In order to provide a framework, you can consider the answer is Correct or Incorrect according to the following criteria:

- The answer is Incorrect if: {incorrect}
- The answer is Correct if: {correct}

In your discussion try to focus on the NEGATIVE aspect of the answer: why would you consider it as Incorrect? Write your review in English.)TPL";

constexpr std::string_view kRoleplayMeta =
    R"TPL(You are a teacher in a distant planet. You have received two opinions from colleagues in your solar system about the following question-answer pair in a high-school test:
- Teacher's question: '{question}'.
- High-school student's answer: '{answer}'.

On one hand, the first colleague says: '{positive_review}'.
On the other hand, the second colleague says: '{negative_review}'.

Your task is to have the final word. Considering that the answer was written by a high-school student, say if it is 'Correct' or 'Incorrect', according to the words of your colleagues and the following criteria:
- The answer is Incorrect if: {incorrect}
- The answer is Correct if: {correct}

Write a brief essay to support your decision, and then end it saying if it is 'Correct' or 'Incorrect' between two # (e.g. #Correct#).)TPL";

constexpr std::string_view kSynthGenerate =
    R"TPL(You are simulating a German high-school student answering a test question.

<Question>
{question}
</Question>

A real student answered:
<ReferenceAnswer>
{seed_answer}
</ReferenceAnswer>

Write ONE new student answer to the question that a grader would label "{target_label}" under this criterion:
<TargetCriterion>
{target_rubric}
</TargetCriterion>

Earlier invented answers for this question (your answer must differ from every one of them in terms of wording, structure, and reasoning):
<PreviousAnswers>
{prior_answers}
</PreviousAnswers>

Rules:
- Write only the student answer itself, in the language of the question.
- No meta-commentary: do not mention grading, criteria, labels, or this exercise.
- Do not copy the reference answer verbatim.
- Keep the length and register plausible for a high-school student.

Revision round: {round}

Return only the new student answer and nothing else.)TPL";

constexpr std::string_view kSynthNoise =
    R"TPL(Rewrite the following student answer so it reads like authentic high-school writing: add grammatical errors and colloquialisms while keeping the meaning unchanged.

<Answer>
{answer}
</Answer>

Revision round: {round}

Return only the rewritten answer and nothing else.)TPL";

constexpr std::string_view kSynthValidateHead =
    R"TPL(You are grading a student answer against a rubric.

<Question>
{question}
</Question>

<StudentAnswer>
{answer_to_classify}
</StudentAnswer>

<Rubric>
<Incorrect>
{rubric_incorrect}
</Incorrect>
<PartiallyCorrect>
{rubric_partially_correct}
</PartiallyCorrect>
<Correct>
{rubric_correct}
</Correct>
</Rubric>

Revision round: {round}

Return exactly one label and nothing else:
)TPL";

} // namespace

PromptTemplate baseline(LabelMode mode) {
    PromptTemplate tpl;
    tpl.text = std::string(mode == LabelMode::TwoWay ? kBaselineTwoWay : kBaselineThreeWay);
    tpl.required_placeholders = {"question", "answer_to_classify", "rubric_incorrect",
                                 "rubric_partially_correct", "rubric_correct"};
    tpl.source = TemplateSource::Builtin;
    return tpl;
}

std::string meta_prompt_instructions(LabelMode mode, bool extended) {
    std::string out(kMetaHead);
    out += mode == LabelMode::TwoWay ? kMetaLabelsTwoWay : kMetaLabelsThreeWay;
    out += kMetaBody;
    if (extended) out += kMetaExtension;
    out += kMetaReturn;
    return out;
}

PromptTemplate meta_prompt_input() {
    PromptTemplate tpl;
    tpl.text = std::string(kMetaInput);
    tpl.required_placeholders = {"question", "rubric_incorrect", "rubric_partially_correct",
                                 "rubric_correct", "training_examples"};
    tpl.source = TemplateSource::Builtin;
    return tpl;
}

PromptTemplate roleplay_positive() {
    PromptTemplate tpl;
    tpl.text = std::string(kRoleplayPositive);
    tpl.required_placeholders = {"question", "answer", "incorrect", "correct"};
    tpl.source = TemplateSource::Builtin;
    return tpl;
}

PromptTemplate roleplay_negative() {
    PromptTemplate tpl;
    tpl.text = std::string(kRoleplayNegative);
    tpl.required_placeholders = {"question", "answer", "incorrect", "correct"};
    tpl.source = TemplateSource::Builtin;
    return tpl;
}

PromptTemplate roleplay_meta() {
    PromptTemplate tpl;
    tpl.text = std::string(kRoleplayMeta);
    tpl.required_placeholders = {"question",        "answer",          "positive_review",
                                 "negative_review", "incorrect",       "correct"};
    tpl.source = TemplateSource::Builtin;
    return tpl;
}

PromptTemplate synth_generate() {
    PromptTemplate tpl;
    tpl.text = std::string(kSynthGenerate);
    tpl.required_placeholders = {"question",     "seed_answer",   "target_label",
                                 "target_rubric", "prior_answers", "round"};
    tpl.source = TemplateSource::Builtin;
    return tpl;
}

PromptTemplate synth_noise() {
    PromptTemplate tpl;
    tpl.text = std::string(kSynthNoise);
    tpl.required_placeholders = {"answer", "round"};
    tpl.source = TemplateSource::Builtin;
    return tpl;
}

PromptTemplate synth_validate(LabelMode mode) {
    PromptTemplate tpl;
    tpl.text = std::string(kSynthValidateHead);
    if (mode == LabelMode::TwoWay) {
        tpl.text += "Correct\nor\nIncorrect";
    } else {
        tpl.text += "Correct\nor\nPartially Correct\nor\nIncorrect";
    }
    tpl.required_placeholders = {"question", "answer_to_classify", "rubric_incorrect",
                                 "rubric_partially_correct", "rubric_correct", "round"};
    tpl.source = TemplateSource::Builtin;
    return tpl;
}

const std::set<std::string>& induced_required() {
    static const std::set<std::string> names = {"question", "answer_to_classify"};
    return names;
}

} // namespace rubriq::templates
