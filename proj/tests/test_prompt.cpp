#include "rubriq/prompt.hpp"

#include <doctest.h>

using namespace rubriq;

TEST_CASE("find_placeholders picks identifier tokens only") {
    auto names = find_placeholders("A {question} and {answer_to_classify}, again {question}.");
    REQUIRE(names.size() == 3);
    CHECK(names[0] == "question");
    CHECK(names[1] == "answer_to_classify");
    CHECK(names[2] == "question");

    CHECK(find_placeholders("JSON stays alone: {\"k\": 1} {} { x } {1abc}").empty());
    CHECK(find_placeholders("{a}{b}") == std::vector<std::string>{"a", "b"});
}

TEST_CASE("render substitutes every occurrence and never re-scans values") {
    PromptTemplate tpl;
    tpl.text = "Q: {question}\nA: {answer}\nQ again: {question}";
    tpl.required_placeholders = {"question", "answer"};

    auto out = render(tpl, {{"question", "What?"}, {"answer", "Literal {question} inside"}});
    CHECK(out == "Q: What?\nA: Literal {question} inside\nQ again: What?");
}

TEST_CASE("render distinguishes missing required bindings from stray tokens") {
    PromptTemplate tpl;
    tpl.text = "{question} {other}";
    tpl.required_placeholders = {"question"};
    CHECK_THROWS_AS((void)render(tpl, {{"other", "x"}}), MissingBindingError);
    CHECK_THROWS_AS((void)render(tpl, {{"question", "x"}}), UnresolvedPlaceholderError);
    CHECK(render(tpl, {{"question", "x"}, {"other", "y"}}) == "x y");
}

TEST_CASE("render leaves non-placeholder braces untouched") {
    PromptTemplate tpl;
    tpl.text = R"(Return {"label": "Correct"} with {name}.)";
    tpl.required_placeholders = {"name"};
    CHECK(render(tpl, {{"name", "v"}}) == R"(Return {"label": "Correct"} with v.)");
}

TEST_CASE("validate_template reports missing and extraneous placeholders as data") {
    std::set<std::string> required{"question", "answer_to_classify"};

    CHECK(validate_template("{question} {answer_to_classify}", required).empty());

    auto missing = validate_template("{question} only", required);
    REQUIRE(missing.size() == 1);
    CHECK(missing[0].kind == Violation::Kind::Missing);
    CHECK(missing[0].name == "answer_to_classify");

    auto extra = validate_template("{question} {answer_to_classify} {oops} {oops}", required);
    REQUIRE(extra.size() == 1);
    CHECK(extra[0].kind == Violation::Kind::Extraneous);
    CHECK(extra[0].name == "oops");
    CHECK_FALSE(violation_to_string(extra[0]).empty());

    auto both = validate_template("{oops}", required);
    CHECK(both.size() == 3);
}

TEST_CASE("strict parsing accepts exactly the active labels modulo case and whitespace") {
    auto ok = parse_label("  correct \n", LabelMode::TwoWay, ParseMode::Strict);
    REQUIRE(ok.has_value());
    CHECK(ok->label == Label::Correct);
    CHECK(ok->mode == ParseMode::Strict);

    CHECK(parse_label("INCORRECT", LabelMode::TwoWay, ParseMode::Strict)->label ==
          Label::Incorrect);
    CHECK(parse_label("Partially Correct", LabelMode::ThreeWay, ParseMode::Strict)->label ==
          Label::PartiallyCorrect);

    // Outside the active set, or not a whole-string match: no parse.
    CHECK_FALSE(parse_label("Partially Correct", LabelMode::TwoWay, ParseMode::Strict)
                    .has_value());
    CHECK_FALSE(parse_label("Correct.", LabelMode::TwoWay, ParseMode::Strict).has_value());
    CHECK_FALSE(parse_label("The answer is Correct", LabelMode::TwoWay, ParseMode::Strict)
                    .has_value());
    CHECK_FALSE(parse_label("", LabelMode::TwoWay, ParseMode::Strict).has_value());
}

TEST_CASE("lenient parsing takes the last hash span, then the last standalone word") {
    auto last = parse_label("#Incorrect# then finally #Correct#", LabelMode::TwoWay,
                            ParseMode::Lenient);
    REQUIRE(last.has_value());
    CHECK(last->label == Label::Correct);
    CHECK(last->mode == ParseMode::Lenient);

    CHECK(parse_label("verdict: #incorrect#", LabelMode::TwoWay, ParseMode::Lenient)->label ==
          Label::Incorrect);
    CHECK(parse_label("#Partially Correct#", LabelMode::ThreeWay, ParseMode::Lenient)->label ==
          Label::PartiallyCorrect);

    SUBCASE("hash spans holding junk fall back to word scan") {
        auto parsed =
            parse_label("#maybe# I think it is Incorrect", LabelMode::TwoWay, ParseMode::Lenient);
        REQUIRE(parsed.has_value());
        CHECK(parsed->label == Label::Incorrect);
    }
    SUBCASE("the last standalone label word wins") {
        auto parsed = parse_label("Correct at first glance, but ultimately incorrect",
                                  LabelMode::TwoWay, ParseMode::Lenient);
        REQUIRE(parsed.has_value());
        CHECK(parsed->label == Label::Incorrect);
    }
    SUBCASE("label words embedded in larger words do not count") {
        CHECK_FALSE(
            parse_label("incorrectness abounds", LabelMode::TwoWay, ParseMode::Lenient)
                .has_value());
    }
    SUBCASE("strict-style exact output also parses leniently") {
        CHECK(parse_label("Correct", LabelMode::TwoWay, ParseMode::Lenient)->label ==
              Label::Correct);
    }
    SUBCASE("two-way mode reads the Correct inside Partially Correct") {
        // Documented consequence of the word-boundary rule in two-way mode.
        auto parsed = parse_label("Partially Correct", LabelMode::TwoWay, ParseMode::Lenient);
        REQUIRE(parsed.has_value());
        CHECK(parsed->label == Label::Correct);
    }
    SUBCASE("unparsable text yields nothing") {
        CHECK_FALSE(parse_label("no label here", LabelMode::TwoWay, ParseMode::Lenient)
                        .has_value());
        CHECK_FALSE(parse_label("", LabelMode::TwoWay, ParseMode::Lenient).has_value());
    }
}
