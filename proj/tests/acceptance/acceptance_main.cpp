// Acceptance gate: one check per shipping criterion, each printed as a
// single PASS/FAIL line. Everything runs against the deterministic mock
// backend; no network access. Exit code = number of failed criteria.

#include "rubriq/cli/commands.hpp"
#include "rubriq/corpus.hpp"
#include "rubriq/digest.hpp"
#include "rubriq/gateway.hpp"
#include "rubriq/metaprompt.hpp"
#include "rubriq/metrics.hpp"
#include "rubriq/mock_backend.hpp"
#include "rubriq/prompt.hpp"
#include "rubriq/scorers.hpp"
#include "rubriq/svm.hpp"
#include "rubriq/synthgen.hpp"
#include "rubriq/templates.hpp"
#include "rubriq/tfidf.hpp"

#include "../support/helpers.hpp"
#include "../support/oracles.hpp"

#include <nlohmann/json.hpp>

#include <chrono>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

namespace fs = std::filesystem;
using namespace rubriq;
using testing::make_record;
using testing::MockRig;
using testing::TempDir;

namespace {

// ---------------------------------------------------------------------------
// Tiny check harness: a criterion accumulates named expectations and passes
// iff all of them hold.

class Criterion {
  public:
    void expect(bool condition, const std::string& what) {
        if (!condition) failures_.push_back(what);
    }
    void expect_near(double got, double want, double tol, const std::string& what) {
        if (!(std::abs(got - want) <= tol)) {
            std::ostringstream ss;
            ss << what << " (got " << got << ", want " << want << " within " << tol << ")";
            failures_.push_back(ss.str());
        }
    }
    void fail(const std::string& what) { failures_.push_back(what); }

    const std::vector<std::string>& failures() const { return failures_; }

  private:
    std::vector<std::string> failures_;
};

// Commands print run summaries on stdout/stderr; keep the acceptance output
// to one line per criterion instead.
class QuietStreams {
  public:
    QuietStreams()
        : out_(std::cout.rdbuf(sink_.rdbuf())), err_(std::cerr.rdbuf(sink_.rdbuf())) {}
    ~QuietStreams() {
        std::cout.rdbuf(out_);
        std::cerr.rdbuf(err_);
    }

  private:
    std::ostringstream sink_;
    std::streambuf* out_;
    std::streambuf* err_;
};

std::string slurp(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    return std::string(std::istreambuf_iterator<char>(in), {});
}

// Relative path -> content digest for a whole tree; byte-identical trees
// compare equal.
std::map<std::string, std::string> tree_digest(const fs::path& root) {
    std::map<std::string, std::string> files;
    for (const auto& entry : fs::recursive_directory_iterator(root)) {
        if (!entry.is_regular_file()) continue;
        files[fs::relative(entry.path(), root).generic_string()] =
            sha256_hex(slurp(entry.path()));
    }
    return files;
}

std::string first_tree_difference(const std::map<std::string, std::string>& a,
                                  const std::map<std::string, std::string>& b) {
    for (const auto& [path, digest] : a) {
        auto it = b.find(path);
        if (it == b.end()) return path + " missing from second tree";
        if (it->second != digest) return path + " differs";
    }
    for (const auto& [path, digest] : b) {
        if (a.find(path) == a.end()) return path + " missing from first tree";
    }
    return "";
}

std::vector<AnswerRecord> split_records(const Corpus& corpus, Split split) {
    std::vector<AnswerRecord> out;
    for (const auto& record : corpus.records) {
        if (record.split == split) out.push_back(record);
    }
    return out;
}

void write_text(const fs::path& path, const std::string& content) {
    fs::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary);
    out << content;
}

constexpr Label I = Label::Incorrect;
constexpr Label P = Label::PartiallyCorrect;
constexpr Label C = Label::Correct;

// A template whose rendered scoring prompts route to the mock's keyword
// grader (the grader reads the <StudentAnswer> segment).
constexpr const char* kInducedTemplate =
    "Frage: {question}\n<StudentAnswer>\n{answer_to_classify}\n</StudentAnswer>\n"
    "Antworte mit genau einem Wort: Correct oder Incorrect.";

// ---------------------------------------------------------------------------
// 1. Metric oracle equivalence on random vectors.

void criterion_metrics_oracle(Criterion& c) {
    auto start = std::chrono::steady_clock::now();
    testing::LabelGen gen(881);
    for (int trial = 0; trial < 1000; ++trial) {
        const int k = 2 + static_cast<int>(gen.raw() % 2);
        const std::size_t n = 1 + gen.raw() % 50;
        auto gold = gen.labels(n, k);
        auto pred = gen.labels(n, k);
        auto cm = ConfusionMatrix::from_labels(gold, pred, k);

        double wf1 = weighted_f1(cm);
        double wf1_ref = oracle::weighted_f1(gold, pred, k);
        c.expect(std::abs(wf1 - wf1_ref) <= 1e-9, "weighted F1 drifted from the oracle");

        auto kappa = qwk(cm);
        auto kappa_ref = oracle::qwk(gold, pred, k);
        c.expect(kappa.has_value() == kappa_ref.has_value(),
                 "QWK definedness disagrees with the oracle");
        if (kappa && kappa_ref) {
            c.expect(std::abs(*kappa - *kappa_ref) <= 1e-9, "QWK drifted from the oracle");
        }

        if (k == 2) {
            auto cohen = oracle::cohen_kappa(gold, pred);
            c.expect(kappa.has_value() == cohen.has_value(),
                     "binary QWK definedness disagrees with Cohen's kappa");
            if (kappa && cohen) {
                c.expect(std::abs(*kappa - *cohen) <= 1e-12,
                         "binary QWK is not Cohen's kappa");
            }
        }
    }
    auto elapsed = std::chrono::steady_clock::now() - start;
    c.expect(elapsed < std::chrono::seconds(5), "metric comparison exceeded 5 s");
}

// ---------------------------------------------------------------------------
// 2. Hand-worked metric cases.

void criterion_worked_examples(Criterion& c) {
    {
        std::vector<Label> gold{I, C, I};
        std::vector<Label> pred{C, C, I};
        auto cm = ConfusionMatrix::from_labels(gold, pred, 2);
        c.expect_near(weighted_f1(cm), 2.0 / 3.0, 1e-12, "worked weighted-F1 case != 2/3");
    }
    {
        std::vector<Label> gold{I, I, C, C};
        std::vector<Label> pred{C, C, I, I};
        auto cm = ConfusionMatrix::from_labels(gold, pred, 2);
        auto kappa = qwk(cm);
        c.expect(kappa.has_value(), "worked QWK case came out Undefined");
        if (kappa) c.expect_near(*kappa, -1.0, 1e-12, "worked QWK case != -1");
    }
}

// ---------------------------------------------------------------------------
// 3. Grouping and routing over planted keys.

void criterion_grouping(Criterion& c) {
    for (int g = 1; g <= 100; ++g) {
        std::vector<AnswerRecord> records;
        for (int i = 0; i < g; ++i) {
            for (int j = 0; j < 3; ++j) {
                auto r = make_record("g" + std::to_string(i) + "-r" + std::to_string(j),
                                     "Frage " + std::to_string(i) + "?",
                                     "Antwort " + std::to_string(j), C, Split::Train,
                                     "Kriterium " + std::to_string(i) + " richtig.",
                                     "Kriterium " + std::to_string(i) + " falsch.");
                records.push_back(std::move(r));
            }
        }
        auto corpus = testing::make_corpus(std::move(records));
        auto groups = group_by_rubric(corpus);
        if (groups.size() != static_cast<std::size_t>(g)) {
            c.fail("expected " + std::to_string(g) + " groups, found " +
                   std::to_string(groups.size()));
            return;
        }

        std::map<GroupId, std::map<std::string, bool>> membership;
        for (const auto& group : groups) {
            for (const auto& member : group.members) membership[group.id][member.id] = true;
        }
        GroupIndex index(groups);
        for (const auto& record : corpus.records) {
            auto gid = index.try_route(record);
            if (!gid || !membership[*gid].count(record.id)) {
                c.fail("record " + record.id + " did not route to its containing group");
                return;
            }
        }
    }

    // Whitespace-trimmed keys collide into one group.
    auto a = make_record("w1", "  Frage?  ", "x", C, Split::Train, "Richtig.  ", "  Falsch.");
    auto b = make_record("w2", "Frage?", "y", C, Split::Train, "Richtig.", "Falsch.");
    auto merged = group_by_rubric(testing::make_corpus({a, b}));
    c.expect(merged.size() == 1, "whitespace-trim collision did not merge");

    // A single-character rubric edit is a different group.
    auto edited = make_record("w3", "Frage?", "z", C, Split::Train, "Richtig!", "Falsch.");
    auto split_groups = group_by_rubric(testing::make_corpus({a, b, edited}));
    c.expect(split_groups.size() == 2, "single-character rubric edit did not split");
}

// ---------------------------------------------------------------------------
// 4. Placeholder contract on induced templates.

void criterion_placeholder_contract(Criterion& c) {
    TempDir dir;
    GatewayConfig gw;
    gw.cache_dir = dir.path() / "cache";
    MockRig rig(gw);
    rig.backend->add_handler("generated prompt template",
                             {"Bewerte die Antwort ohne Platzhalter.",
                              "Bewerte {question} mit {extra} Feldern.",
                              kInducedTemplate});

    auto corpus = testing::make_corpus(
        {make_record("t1", "Frage?", "richtige Antwort", C),
         make_record("t2", "Frage?", "falsche Antwort", I)});
    auto group = group_by_rubric(corpus)[0];

    InductionSettings settings;
    settings.backend_id = "mock";
    settings.model = "test";
    auto variant = induce_group_prompt(*rig.gateway, group,
                                       {Formulation::Base, ThinkingBudget::High, false},
                                       LabelMode::TwoWay, settings);
    c.expect(rig.backend->calls() == 3,
             "expected exactly 3 induction calls, saw " + std::to_string(rig.backend->calls()));
    c.expect(variant.tpl.text == kInducedTemplate, "the accepted template was altered");
    c.expect(validate_template(variant.tpl.text, templates::induced_required()).empty(),
             "the accepted template does not satisfy the placeholder contract");
}

// ---------------------------------------------------------------------------
// 5. End-to-end mock pipeline determinism.

Corpus c5_corpus() {
    std::vector<AnswerRecord> records;
    for (int g = 0; g < 5; ++g) {
        const std::string tag = std::to_string(g);
        auto add = [&](const std::string& id, const std::string& answer, Label gold,
                       Split split) {
            records.push_back(make_record("g" + tag + "-" + id,
                                          "Frage " + tag + "?", answer, gold, split,
                                          "Kriterium " + tag + " richtig.",
                                          "Kriterium " + tag + " falsch."));
        };
        for (int i = 0; i < 9; ++i) {
            add("tr" + std::to_string(i), "richtig gesagt nr " + std::to_string(i), C,
                Split::Train);
        }
        for (int i = 9; i < 12; ++i) {
            add("tr" + std::to_string(i), "leider daneben nr " + std::to_string(i), I,
                Split::Train);
        }
        add("dv0", "richtig erkannt eins", C, Split::Trial);
        add("dv1", "richtig erkannt zwei", C, Split::Trial);
        add("dv2", "voellig daneben eins", I, Split::Trial);
        add("dv3", "voellig daneben zwei", I, Split::Trial);
        add("te0", "richtig gepruft eins", C, Split::Test);
        add("te1", "richtig gepruft zwei", C, Split::Test);
        add("te2", "knapp daneben eins", I, Split::Test);
        add("te3", "knapp daneben zwei", I, Split::Test);
    }
    return testing::make_corpus(std::move(records));
}

std::shared_ptr<MockBackend> c5_backend() {
    auto backend = std::make_shared<MockBackend>();
    backend->add_handler("generated prompt template", {kInducedTemplate});
    backend->add_handler("simulating a German high-school student", {"neue falsche antwort"});
    backend->add_handler("grammatical errors and colloquialisms", {"neue falsce antwrot lol"});
    backend->add_handler("grading a student answer against a rubric", {"Incorrect"});
    backend->add_handler("focus on the POSITIVE", {"Viele gute Punkte."});
    backend->add_handler("focus on the NEGATIVE", {"Einige Fehler."});
    backend->add_handler("have the final word", {"#Incorrect#"});
    backend->set_grader_keywords({"richtig"});
    return backend;
}

// ingest -> synth -> meta gen x4 -> score Trial x7 -> select -> plan-score
// Test -> eval -> report, all in-process against the injected mock.
void c5_run(Criterion& c, const fs::path& scratch, const fs::path& out, const fs::path& cache,
            const std::shared_ptr<MockBackend>& backend) {
    QuietStreams quiet;
    cli::GlobalOptions global;
    global.cache_dir = cache;
    global.parallelism = 4;
    global.injected_backend = backend;

    auto corpus_path = scratch / "corpus.jsonl";
    if (!fs::exists(corpus_path)) write_text(corpus_path, corpus_to_jsonl(c5_corpus()));

    auto step = [&](const std::string& name, int code) {
        if (code != cli::kExitOk) c.fail("pipeline step '" + name + "' exited " +
                                         std::to_string(code));
    };

    step("ingest", cli::cmd_ingest({corpus_path, out}, global));
    step("synth", cli::cmd_synth({out / "corpus.jsonl", out}, global));
    auto synth_corpus = out / "corpus_synth.jsonl";
    step("meta gen", cli::cmd_meta_gen({synth_corpus, out, {}}, global));

    std::vector<fs::path> trial_tsvs;
    auto score = [&](const std::string& scorer, const std::string& variant, Split split,
                     const fs::path& selection) {
        cli::ScoreOptions options;
        options.corpus = synth_corpus;
        options.out = out;
        options.scorer = scorer;
        options.split = split;
        options.variant = variant;
        options.selection = selection;
        if (scorer == "svm") options.svm_model = out / "svm_model.json";
        step("score " + scorer + (variant.empty() ? "" : " " + variant),
             cli::cmd_score(options, global));
        std::string name = "predictions_" + scorer;
        if (scorer == "meta") name += "_" + variant;
        name += "_" + std::string(split_to_string(split)) + ".tsv";
        return out / name;
    };

    trial_tsvs.push_back(score("baseline", "", Split::Trial, {}));
    for (const auto& config : standard_variants()) {
        trial_tsvs.push_back(score("meta", variant_id(config), Split::Trial, {}));
    }
    trial_tsvs.push_back(score("roleplay", "", Split::Trial, {}));
    trial_tsvs.push_back(score("svm", "", Split::Trial, {}));

    step("select", cli::cmd_select({synth_corpus, out, trial_tsvs}, global));
    auto plan_tsv = score("plan", "", Split::Test, out / "selection.json");

    cli::EvalOptions eval;
    eval.corpus = synth_corpus;
    eval.predictions = plan_tsv;
    eval.split = Split::Test;
    eval.out = out;
    step("eval", cli::cmd_eval(eval, global));

    cli::ReportOptions report;
    report.corpus = synth_corpus;
    report.predictions = trial_tsvs;
    report.selection = out / "selection.json";
    report.out = out;
    report.json = true;
    step("report", cli::cmd_report(report, global));
}

void criterion_pipeline_determinism(Criterion& c) {
    auto start = std::chrono::steady_clock::now();
    TempDir dir;

    auto backend1 = c5_backend();
    c5_run(c, dir.path(), dir.path() / "run1", dir.path() / "cache1", backend1);
    c.expect(backend1->calls() > 0, "cold run issued no backend calls");

    auto backend2 = c5_backend();
    c5_run(c, dir.path(), dir.path() / "run2", dir.path() / "cache2", backend2);

    if (!c.failures().empty()) return;

    auto tree1 = tree_digest(dir.path() / "run1");
    auto tree2 = tree_digest(dir.path() / "run2");
    c.expect(!tree1.empty(), "first run produced no files");
    if (tree1 != tree2) {
        c.fail("independent runs differ: " + first_tree_difference(tree1, tree2));
    }

    // Same cache, fresh backend: every request replays from disk.
    auto backend3 = c5_backend();
    c5_run(c, dir.path(), dir.path() / "run3", dir.path() / "cache1", backend3);
    c.expect(backend3->calls() == 0,
             "warm-cache rerun called the backend " + std::to_string(backend3->calls()) +
                 " times");
    auto tree3 = tree_digest(dir.path() / "run3");
    if (tree1 != tree3) {
        c.fail("warm-cache rerun differs: " + first_tree_difference(tree1, tree3));
    }

    auto elapsed = std::chrono::steady_clock::now() - start;
    c.expect(elapsed < std::chrono::seconds(60), "pipeline determinism check exceeded 60 s");
}

// ---------------------------------------------------------------------------
// 6. Call accounting per scorer.

void criterion_call_accounting(Criterion& c) {
    std::vector<AnswerRecord> records;
    for (int i = 0; i < 6; ++i) {
        records.push_back(make_record("r" + std::to_string(i), "Frage?",
                                      "Antwort nr " + std::to_string(i), C, Split::Trial));
    }
    auto corpus = testing::make_corpus(records);
    auto groups = group_by_rubric(corpus);

    {
        MockRig rig;
        rig.backend->set_default_response("Correct");
        ScorerConfig config;
        for (const auto& r : records) (void)score_baseline(*rig.gateway, r, config);
        c.expect(rig.backend->calls() == 6, "baseline: expected N calls for N records");
    }
    {
        MockRig rig;
        rig.backend->set_default_response("#Correct#");
        ScorerConfig config;
        config.scorer_id = "roleplay";
        for (const auto& r : records) (void)score_roleplay(*rig.gateway, r, config);
        c.expect(rig.backend->calls() == 18, "role-play: expected 3N calls for N records");
    }
    {
        TempDir dir;
        VariantStore store(dir.path() / "prompts");
        PromptVariant variant;
        variant.variant_id = "base-medium";
        variant.group_id = groups[0].id;
        variant.config = variant_config_from_id("base-medium");
        variant.tpl = PromptTemplate{kInducedTemplate, templates::induced_required(),
                                     TemplateSource::Induced};
        store.put(variant);

        MockRig rig;
        rig.backend->set_default_response("Correct");
        ScorerConfig config;
        config.scorer_id = "meta";
        GroupPromptScorer scorer(*rig.gateway, store, groups, "base-medium", config);
        auto predictions = score_batch(scorer, records, 1);
        c.expect(rig.backend->calls() == 6, "meta phase 2: expected N calls for N records");
        for (const auto& p : predictions) {
            c.expect(!p.abstained, "meta phase 2 unexpectedly abstained");
        }
    }
}

// ---------------------------------------------------------------------------
// 7. Selection dominance, tie-break, and Undefined-QWK fallback.

void criterion_selection_dominance(Criterion& c) {
    // Three groups with planted trial gold; two variants constructed so that
    // a different one wins each group through a different rule.
    std::vector<AnswerRecord> records;
    auto add_group = [&](const std::string& tag, const std::vector<Label>& trial_gold) {
        records.push_back(make_record(tag + "-train", "Frage " + tag + "?", "x", C,
                                      Split::Train, "Kriterium " + tag + "."));
        for (std::size_t i = 0; i < trial_gold.size(); ++i) {
            records.push_back(make_record(tag + "-t" + std::to_string(i),
                                          "Frage " + tag + "?", "y", trial_gold[i],
                                          Split::Trial, "Kriterium " + tag + "."));
        }
    };
    add_group("a", {C, I, C, I});
    add_group("b", {C, I});
    add_group("d", {C, C, C});
    auto corpus = testing::make_corpus(std::move(records));
    auto groups = group_by_rubric(corpus);
    GroupIndex index(groups);
    auto gid_for = [&](const std::string& record_id) {
        for (const auto& record : corpus.records) {
            if (record.id == record_id) return *index.try_route(record);
        }
        throw Error("record not found: " + record_id);
    };
    const GroupId ga = gid_for("a-t0");
    const GroupId gb = gid_for("b-t0");
    const GroupId gd = gid_for("d-t0");

    auto predictions_for = [&](const std::string& variant,
                               const std::map<std::string, Label>& by_id) {
        std::vector<Prediction> out;
        for (const auto& [id, label] : by_id) {
            Prediction p;
            p.record_id = id;
            p.label = label;
            p.scorer_id = "meta";
            p.variant_id = variant;
            out.push_back(std::move(p));
        }
        return out;
    };

    // ext-high: perfect on groups a and b, one error on the constant group.
    auto ext_high = predictions_for("ext-high", {{"a-t0", C},
                                                 {"a-t1", I},
                                                 {"a-t2", C},
                                                 {"a-t3", I},
                                                 {"b-t0", C},
                                                 {"b-t1", I},
                                                 {"d-t0", C},
                                                 {"d-t1", C},
                                                 {"d-t2", I}});
    // base-medium: one error on group a, perfect elsewhere; on the constant
    // group its QWK is Undefined, forcing the weighted-F1 fallback.
    auto base_medium = predictions_for("base-medium", {{"a-t0", C},
                                                       {"a-t1", I},
                                                       {"a-t2", C},
                                                       {"a-t3", C},
                                                       {"b-t0", C},
                                                       {"b-t1", I},
                                                       {"d-t0", C},
                                                       {"d-t1", C},
                                                       {"d-t2", C}});

    TempDir dir;
    auto out = dir.path() / "run";
    auto corpus_path = dir.path() / "corpus.jsonl";
    write_text(corpus_path, corpus_to_jsonl(corpus));
    auto tsv_ext = out / "predictions_meta_ext-high_Trial.tsv";
    auto tsv_base = out / "predictions_meta_base-medium_Trial.tsv";
    write_text(tsv_ext, predictions_to_tsv(ext_high));
    write_text(tsv_base, predictions_to_tsv(base_medium));

    cli::GlobalOptions global;
    {
        QuietStreams quiet;
        if (cli::cmd_select({corpus_path, out, {tsv_base, tsv_ext}}, global) != cli::kExitOk) {
            c.fail("select exited nonzero");
            return;
        }
    }
    auto plan = selection_plan_from_json(nlohmann::json::parse(slurp(out / "selection.json")));

    const auto& choice_a = plan.per_group.at(ga);
    c.expect(choice_a.variant_id == "ext-high" && choice_a.metric_used == "qwk",
             "group a should pick ext-high by QWK");
    const auto& choice_b = plan.per_group.at(gb);
    c.expect(choice_b.variant_id == "base-medium" && choice_b.metric_used == "qwk",
             "tied group b should fall back to canonical variant order");
    const auto& choice_d = plan.per_group.at(gd);
    c.expect(choice_d.variant_id == "base-medium" && choice_d.metric_used == "weighted_f1",
             "constant group d should use the weighted-F1 fallback");

    // Per group, the chosen candidate's deciding metric is >= every
    // candidate's value of that same metric.
    for (const auto& [gid, choice] : plan.per_group) {
        const auto chosen_key = choice.scorer_id + "/" + choice.variant_id;
        auto chosen = choice.trial_scores.find(chosen_key);
        if (chosen == choice.trial_scores.end()) {
            c.fail("chosen candidate missing from trial scores");
            continue;
        }
        for (const auto& [key, metrics] : choice.trial_scores) {
            if (choice.metric_used == "qwk") {
                double lhs = chosen->second.qwk.value_or(-2.0);
                double rhs = metrics.qwk.value_or(-2.0);
                c.expect(lhs >= rhs, "group choice is not QWK-dominant over " + key);
            } else {
                c.expect(chosen->second.weighted_f1 >= metrics.weighted_f1,
                         "group choice is not weighted-F1-dominant over " + key);
            }
        }
    }

    // The composite report row weakly dominates both variant rows on both
    // Trial metrics.
    {
        QuietStreams quiet;
        cli::ReportOptions report;
        report.corpus = corpus_path;
        report.predictions = {tsv_base, tsv_ext};
        report.selection = out / "selection.json";
        report.out = out;
        report.json = true;
        if (cli::cmd_report(report, global) != cli::kExitOk) {
            c.fail("report exited nonzero");
            return;
        }
    }
    auto doc = nlohmann::json::parse(slurp(out / "report.json"));
    const auto& rows = doc.at("rows");
    c.expect(rows.size() == 3, "expected two variant rows plus the selection row");
    std::optional<nlohmann::json> selection_row;
    for (const auto& row : rows) {
        if (row.at("approach") == "selection") selection_row = row;
    }
    if (!selection_row) {
        c.fail("report has no selection row");
        return;
    }
    c.expect(rows.back().at("approach") == "selection", "selection row should come last");
    for (const auto& row : rows) {
        if (row.at("approach") == "selection") continue;
        c.expect(selection_row->at("weighted_f1").get<double>() >=
                     row.at("weighted_f1").get<double>(),
                 "selection row loses on weighted F1 to " +
                     row.at("approach").get<std::string>());
        double row_qwk = row.at("qwk").is_null() ? -2.0 : row.at("qwk").get<double>();
        double sel_qwk =
            selection_row->at("qwk").is_null() ? -2.0 : selection_row->at("qwk").get<double>();
        c.expect(sel_qwk >= row_qwk, "selection row loses on QWK to " +
                                         row.at("approach").get<std::string>());
    }
}

// ---------------------------------------------------------------------------
// 8. Synthetic gap-halving, retry accounting, and diversity.

void criterion_synth_gap_halving(Criterion& c) {
    // Four groups planted at gaps 0, 1, 5, 20 (Correct-majority).
    std::vector<AnswerRecord> records;
    auto plant = [&](const std::string& tag, int n_correct, int n_incorrect) {
        for (int i = 0; i < n_correct; ++i) {
            records.push_back(make_record(tag + "-c" + std::to_string(i),
                                          "Frage " + tag + "?", tag + " richtig " +
                                          std::to_string(i), C, Split::Train,
                                          "Kriterium " + tag + "."));
        }
        for (int i = 0; i < n_incorrect; ++i) {
            records.push_back(make_record(tag + "-i" + std::to_string(i),
                                          "Frage " + tag + "?", tag + " falsch " +
                                          std::to_string(i), I, Split::Train,
                                          "Kriterium " + tag + "."));
        }
    };
    plant("null", 3, 3);  // gap 0
    plant("eins", 4, 3);  // gap 1
    plant("fuenf", 6, 1); // gap 5
    plant("zwanzig", 21, 1); // gap 20
    auto corpus = testing::make_corpus(std::move(records));

    MockRig rig;
    std::vector<std::string> generated;
    std::vector<std::string> noised;
    for (int i = 0; i < 16; ++i) {
        generated.push_back("erfunden nr " + std::to_string(i));
        noised.push_back("erfunden nr " + std::to_string(i) + " lol");
    }
    rig.backend->add_handler("simulating a German high-school student", generated);
    rig.backend->add_handler("grammatical errors and colloquialisms", noised);
    rig.backend->add_handler("grading a student answer against a rubric", {"Incorrect"});

    SynthConfig config;
    config.model = "test";
    auto result = generate_for_corpus(*rig.gateway, corpus, config);

    // Quotas {0,0,2,10}: the gap-0 group is not ranked at all.
    c.expect(result.reports.size() == 3, "expected three ranked groups");
    std::map<std::string, const GroupGenReport*> by_question;
    auto groups = group_by_rubric(result.corpus);
    for (const auto& report : result.reports) {
        for (const auto& group : groups) {
            if (group.id == report.group_id) by_question[group.question] = &report;
        }
    }
    auto quota_of = [&](const std::string& q) -> std::int64_t {
        auto it = by_question.find(q);
        return it == by_question.end() ? -1 : it->second->quota;
    };
    c.expect(quota_of("Frage eins?") == 0, "gap 1 should get quota 0");
    c.expect(quota_of("Frage fuenf?") == 2, "gap 5 should get quota 2");
    c.expect(quota_of("Frage zwanzig?") == 10, "gap 20 should get quota 10");

    // Post-generation gaps {0,1,3,10}, counting the accepted synthetics.
    std::map<std::string, std::pair<int, int>> counts; // question -> (correct, incorrect)
    for (const auto& record : result.corpus.records) {
        if (record.split != Split::Train || !record.gold) continue;
        auto& entry = counts[record.question];
        if (*record.gold == C) ++entry.first;
        if (*record.gold == I) ++entry.second;
    }
    auto post_gap = [&](const std::string& q) {
        auto [corr, inc] = counts.at(q);
        return std::abs(corr - inc);
    };
    c.expect(post_gap("Frage null?") == 0, "gap 0 changed");
    c.expect(post_gap("Frage eins?") == 1, "gap 1 changed");
    c.expect(post_gap("Frage fuenf?") == 3, "gap 5 should shrink to 3");
    c.expect(post_gap("Frage zwanzig?") == 10, "gap 20 should shrink to 10");

    // Diversity: the i-th generation prompt for a group embeds every prior
    // accepted answer for that group.
    std::map<GroupId, std::vector<std::string>> accepted_by_group;
    for (const auto& sample : result.samples) {
        if (sample.accepted) accepted_by_group[sample.group_id].push_back(sample.answer);
    }
    std::map<std::string, GroupId> gid_by_question;
    for (const auto& group : groups) gid_by_question[group.question] = group.id;
    for (const auto& [question, gid] : gid_by_question) {
        auto it = accepted_by_group.find(gid);
        if (it == accepted_by_group.end()) continue;
        std::vector<std::string> gen_prompts;
        for (const auto& prompt : rig.backend->prompts()) {
            if (prompt.find("simulating a German high-school student") != std::string::npos &&
                prompt.find(question) != std::string::npos) {
                gen_prompts.push_back(prompt);
            }
        }
        if (gen_prompts.size() != it->second.size()) {
            c.fail("generation prompt count mismatch for " + question);
            continue;
        }
        for (std::size_t i = 0; i < gen_prompts.size(); ++i) {
            for (std::size_t j = 0; j < i; ++j) {
                c.expect(gen_prompts[i].find(it->second[j]) != std::string::npos,
                         "generation prompt " + std::to_string(i + 1) + " for " + question +
                             " is missing prior answer " + std::to_string(j + 1));
            }
        }
    }

    // Fail-twice validator: 3 attempts and 9 calls for the accepted sample.
    {
        std::vector<AnswerRecord> rs;
        for (int i = 0; i < 5; ++i) {
            rs.push_back(make_record("c" + std::to_string(i), "Frage?", "richtig " +
                                     std::to_string(i), C));
        }
        rs.push_back(make_record("i0", "Frage?", "falsch", I)); // gap 4, quota 2
        auto small = testing::make_corpus(std::move(rs));

        MockRig retry_rig;
        retry_rig.backend->add_handler("simulating a German high-school student",
                                       {"versuch eins", "versuch zwei"});
        retry_rig.backend->add_handler("grammatical errors and colloquialisms",
                                       {"versuch eins lol", "versuch zwei lol"});
        retry_rig.backend->add_handler("grading a student answer against a rubric",
                                       {"Correct", "Correct", "Incorrect", "Incorrect"});
        auto retried = generate_for_corpus(*retry_rig.gateway, small, config);
        c.expect(retried.reports.size() == 1 && retried.reports.at(0).accepted == 2,
                 "fail-twice run should still fill its quota");
        c.expect(!retried.samples.empty() && retried.samples.at(0).attempts == 3,
                 "first sample should accept on attempt 3");
        c.expect(retry_rig.backend->calls() == 9 + 3,
                 "expected 9 calls for the retried sample plus 3 for the clean one");
    }

    // Discarded samples never reach the corpus.
    {
        std::vector<AnswerRecord> rs;
        for (int i = 0; i < 5; ++i) {
            rs.push_back(make_record("c" + std::to_string(i), "Frage?", "richtig " +
                                     std::to_string(i), C));
        }
        rs.push_back(make_record("i0", "Frage?", "falsch", I));
        auto small = testing::make_corpus(std::move(rs));

        MockRig reject_rig;
        reject_rig.backend->add_handler("simulating a German high-school student", {"egal"});
        reject_rig.backend->add_handler("grammatical errors and colloquialisms", {"egal lol"});
        reject_rig.backend->add_handler("grading a student answer against a rubric",
                                        {"Correct"});
        auto rejected = generate_for_corpus(*reject_rig.gateway, small, config);
        c.expect(rejected.corpus.records.size() == small.records.size(),
                 "discarded samples leaked into the corpus");
        for (const auto& sample : rejected.samples) {
            c.expect(!sample.accepted, "a rejected sample claims acceptance");
        }
    }
}

// ---------------------------------------------------------------------------
// 9. Label parsing: strict set, lenient span, abstention accounting.

void criterion_label_parsing(Criterion& c) {
    auto strict = [](const std::string& text, LabelMode mode) {
        return parse_label(text, mode, ParseMode::Strict);
    };
    auto lenient = [](const std::string& text, LabelMode mode) {
        return parse_label(text, mode, ParseMode::Lenient);
    };

    c.expect(strict("Correct", LabelMode::TwoWay).has_value(), "strict rejects 'Correct'");
    c.expect(strict("  incorrect \n", LabelMode::TwoWay)->label == I,
             "strict should accept case/whitespace variants");
    c.expect(strict("Partially Correct", LabelMode::ThreeWay)->label == P,
             "strict rejects the three-way middle label");
    c.expect(!strict("Partially Correct", LabelMode::TwoWay).has_value(),
             "two-way strict accepted a three-way label");
    c.expect(!strict("#Correct#", LabelMode::TwoWay).has_value(),
             "strict should reject decorated output");
    c.expect(!strict("Correctness", LabelMode::TwoWay).has_value(),
             "strict matched a superstring");

    auto span = lenient("#Incorrect# was considered, but then #Correct#", LabelMode::TwoWay);
    c.expect(span.has_value() && span->label == C, "lenient should take the last #Label# span");
    c.expect(lenient("the answer is Correct", LabelMode::TwoWay)->label == C,
             "lenient should fall back to a standalone label word");
    c.expect(!lenient("kein Etikett hier", LabelMode::TwoWay).has_value(),
             "lenient parsed garbage");

    // Unparsable output abstains to Incorrect and is counted in the report.
    std::vector<AnswerRecord> records;
    records.push_back(make_record("p1", "Frage?", "erste Antwort", C, Split::Trial));
    records.push_back(make_record("p2", "Frage?", "zweite Antwort", I, Split::Trial));
    records.push_back(make_record("p3", "Frage?", "dritte Antwort", I, Split::Trial));
    MockRig rig;
    rig.backend->add_handler("erste Antwort", {"Correct"});
    rig.backend->add_handler("zweite Antwort", {"voellig unbrauchbar"});
    rig.backend->add_handler("dritte Antwort", {"Incorrect"});

    ScorerConfig config;
    std::vector<Prediction> predictions;
    for (const auto& r : records) {
        predictions.push_back(score_baseline(*rig.gateway, r, config));
    }
    c.expect(predictions[1].abstained && predictions[1].label == I &&
                 predictions[1].abstain_reason == "UnparsableLabel",
             "unparsable output should abstain to Incorrect");

    auto report = evaluate(records, predictions, 2);
    c.expect(report.abstained == 1, "the report should count exactly one abstention");
    c.expect(report.overall.n == 3, "abstained records must stay in the metrics");
    c.expect_near(report.overall.accuracy, 1.0, 1e-12,
                  "fallback label should score against gold like any other");
}

// ---------------------------------------------------------------------------
// 10. TF-IDF + SMO properties.

void criterion_svm(Criterion& c) {
    auto start = std::chrono::steady_clock::now();

    // Hand-checkable three-document corpus at bigram granularity.
    const std::vector<std::string> docs{"abab", "abcd", "cdcd"};
    VectorizerConfig cfg;
    cfg.ngram_min = 2;
    cfg.ngram_max = 2;
    auto vectorizer = Vectorizer::fit(docs, cfg);
    c.expect(vectorizer.grams() == std::vector<std::string>{"ab", "ba", "bc", "cd", "dc"},
             "bigram vocabulary mismatch");

    const std::map<std::string, int> df{{"ab", 2}, {"ba", 1}, {"bc", 1}, {"cd", 2}, {"dc", 1}};
    const std::vector<std::map<std::string, double>> counts{
        {{"ab", 2}, {"ba", 1}},
        {{"ab", 1}, {"bc", 1}, {"cd", 1}},
        {{"cd", 2}, {"dc", 1}},
    };
    for (std::size_t d = 0; d < docs.size(); ++d) {
        std::vector<double> expected(vectorizer.grams().size(), 0.0);
        double sq = 0.0;
        for (std::size_t i = 0; i < vectorizer.grams().size(); ++i) {
            auto it = counts[d].find(vectorizer.grams()[i]);
            if (it == counts[d].end()) continue;
            double idf = std::log(4.0 / (1.0 + df.at(vectorizer.grams()[i]))) + 1.0;
            expected[i] = it->second * idf;
            sq += expected[i] * expected[i];
        }
        for (double& x : expected) x /= std::sqrt(sq);

        auto got = vectorizer.transform(docs[d]);
        std::vector<double> dense(expected.size(), 0.0);
        for (std::size_t i = 0; i < got.indices.size(); ++i) {
            dense[got.indices[i]] = got.values[i];
        }
        for (std::size_t i = 0; i < expected.size(); ++i) {
            c.expect(std::abs(dense[i] - expected[i]) <= 1e-9,
                     "tf-idf weight drifted from hand computation");
        }
        c.expect(std::abs(got.norm() - 1.0) <= 1e-12, "transform is not unit-norm");
    }
    c.expect(vectorizer.transform("zzzz").norm() == 0.0, "all-OOV text should be zero");

    // Kernel symmetry on random vectors.
    testing::LabelGen gen(4242);
    for (int trial = 0; trial < 200; ++trial) {
        SparseVector a, b;
        a.dim = b.dim = 10;
        for (std::uint32_t i = 0; i < 10; ++i) {
            if (gen.raw() % 2) {
                a.indices.push_back(i);
                a.values.push_back(static_cast<double>(gen.raw() % 100) / 25.0 - 2.0);
            }
            if (gen.raw() % 2) {
                b.indices.push_back(i);
                b.values.push_back(static_cast<double>(gen.raw() % 100) / 25.0 - 2.0);
            }
        }
        double g = 0.05 + static_cast<double>(gen.raw() % 40) / 20.0;
        c.expect(std::abs(kernel(a, b, g, 0.1) - kernel(b, a, g, 0.1)) <= 1e-15,
                 "kernel asymmetry");
    }

    // Separable 20-point set: exact separation plus KKT conditions.
    std::vector<SparseVector> X;
    std::vector<Label> y;
    for (int i = 0; i < 10; ++i) {
        SparseVector v;
        v.dim = 3;
        v.indices = {0, 2};
        v.values = {1.0 + 0.01 * i, 0.05 * (i % 3 + 1)};
        X.push_back(v);
        y.push_back(C);
    }
    for (int i = 0; i < 10; ++i) {
        SparseVector v;
        v.dim = 3;
        v.indices = {1, 2};
        v.values = {1.0 + 0.01 * i, 0.03 * (i % 2 + 1)};
        X.push_back(v);
        y.push_back(I);
    }
    SvmParams params;
    params.track_objective = true;
    auto model = train_svm(X, y, params);
    c.expect(model.diagnostics.converged, "SMO failed to converge");
    for (std::size_t i = 0; i < X.size(); ++i) {
        c.expect(predict(model, X[i]) == y[i], "training point misclassified");
    }

    auto alpha_of = [&](const SparseVector& x) {
        for (std::size_t s = 0; s < model.support_vectors.size(); ++s) {
            if (model.support_vectors[s].indices == x.indices &&
                model.support_vectors[s].values == x.values) {
                return std::abs(model.dual_coefs[s]);
            }
        }
        return 0.0;
    };
    for (std::size_t i = 0; i < X.size(); ++i) {
        double yi = y[i] == C ? 1.0 : -1.0;
        double yf = yi * decision_value(model, X[i]);
        double alpha = alpha_of(X[i]);
        if (alpha == 0.0) {
            c.expect(yf >= 1.0 - 1e-2, "KKT violated at alpha = 0");
        } else if (alpha < params.C) {
            c.expect(std::abs(yf - 1.0) <= 1e-2, "KKT violated at interior alpha");
        } else {
            c.expect(yf <= 1.0 + 1e-2, "KKT violated at alpha = C");
        }
    }

    const auto& trace = model.diagnostics.objective_trace;
    c.expect(!trace.empty(), "objective trace is empty despite tracking");
    for (std::size_t i = 1; i < trace.size(); ++i) {
        c.expect(trace[i] >= trace[i - 1] - 1e-9, "dual objective decreased");
    }

    auto elapsed = std::chrono::steady_clock::now() - start;
    c.expect(elapsed < std::chrono::seconds(10), "SVM criterion exceeded 10 s");
}

// ---------------------------------------------------------------------------
// 11. No synthetic leakage into non-synthetic runs or held-out metrics.

void criterion_no_leakage(Criterion& c) {
    QuietStreams quiet;
    // Three groups, each imbalanced enough to earn one synthetic sample.
    std::vector<AnswerRecord> records;
    for (int g = 0; g < 3; ++g) {
        const std::string tag = std::to_string(g);
        auto add = [&](const std::string& id, const std::string& answer, Label gold,
                       Split split) {
            records.push_back(make_record("g" + tag + "-" + id, "Frage " + tag + "?", answer,
                                          gold, split, "Kriterium " + tag + " richtig.",
                                          "Kriterium " + tag + " falsch."));
        };
        for (int i = 0; i < 4; ++i) {
            add("c" + std::to_string(i), "richtig nr " + std::to_string(i), C, Split::Train);
        }
        for (int i = 0; i < 2; ++i) {
            add("i" + std::to_string(i), "daneben nr " + std::to_string(i), I, Split::Train);
        }
        add("t0", "richtig gepruft", C, Split::Trial);
        add("t1", "wieder daneben", I, Split::Trial);
    }
    auto corpus = testing::make_corpus(std::move(records));

    TempDir dir;
    auto plain_path = dir.path() / "corpus.jsonl";
    write_text(plain_path, corpus_to_jsonl(corpus));

    auto run_base_high = [&](const fs::path& corpus_path, const fs::path& out) {
        auto backend = c5_backend();
        cli::GlobalOptions global;
        global.cache_dir = dir.path() / "cache" / out.filename();
        global.injected_backend = backend;
        if (cli::cmd_meta_gen({corpus_path, out, {"base-high"}}, global) != cli::kExitOk) {
            c.fail("meta gen exited nonzero");
        }
        cli::ScoreOptions score;
        score.corpus = corpus_path;
        score.out = out;
        score.scorer = "meta";
        score.variant = "base-high";
        score.split = Split::Trial;
        if (cli::cmd_score(score, global) != cli::kExitOk) c.fail("score exited nonzero");
        cli::EvalOptions eval;
        eval.corpus = corpus_path;
        eval.predictions = out / "predictions_meta_base-high_Trial.tsv";
        eval.split = Split::Trial;
        eval.out = out;
        if (cli::cmd_eval(eval, global) != cli::kExitOk) c.fail("eval exited nonzero");
    };

    // Without synthetic generation.
    run_base_high(plain_path, dir.path() / "before");

    // With synthetic generation run first.
    {
        auto backend = c5_backend();
        cli::GlobalOptions global;
        global.cache_dir = dir.path() / "cache" / "synth";
        global.injected_backend = backend;
        if (cli::cmd_synth({plain_path, dir.path() / "synth", 25, 3, 3, 0.7}, global) !=
            cli::kExitOk) {
            c.fail("synth exited nonzero");
            return;
        }
    }
    auto augmented_path = dir.path() / "synth" / "corpus_synth.jsonl";
    auto augmented = load_corpus(augmented_path, LabelMode::TwoWay);
    c.expect(augmented.records.size() > corpus.records.size(),
             "synthetic generation added no records");
    for (const auto& record : augmented.records) {
        if (record.synthetic) {
            c.expect(record.split == Split::Train, "a synthetic record left the Train split");
        }
        if (record.split != Split::Train) {
            c.expect(!record.synthetic, "a synthetic record reached Trial/Test");
        }
    }

    run_base_high(augmented_path, dir.path() / "after");
    if (!c.failures().empty()) return;

    // A use_synthetic = false variant must not see the synthetic records:
    // induced prompts, predictions, and the eval report are byte-identical.
    auto before = dir.path() / "before";
    auto after = dir.path() / "after";
    for (const auto& entry : fs::recursive_directory_iterator(before / "prompts")) {
        if (!entry.is_regular_file()) continue;
        auto rel = fs::relative(entry.path(), before);
        c.expect(slurp(entry.path()) == slurp(after / rel),
                 "induced prompt differs after synth ran: " + rel.generic_string());
    }
    c.expect(slurp(before / "predictions_meta_base-high_Trial.tsv") ==
                 slurp(after / "predictions_meta_base-high_Trial.tsv"),
             "predictions differ after synth ran");
    c.expect(slurp(before / "eval_predictions_meta_base-high_Trial.json") ==
                 slurp(after / "eval_predictions_meta_base-high_Trial.json"),
             "eval report differs after synth ran");

    // Trial/Test metrics never count synthetic records.
    auto trial = split_records(augmented, Split::Trial);
    auto eval_doc = nlohmann::json::parse(
        slurp(after / "eval_predictions_meta_base-high_Trial.json"));
    c.expect(eval_doc.at("overall").at("n").get<std::size_t>() == trial.size(),
             "held-out metrics counted a synthetic record");
}

// ---------------------------------------------------------------------------
// 12. Shared-task corpus group count (conditional on user-supplied data).

bool criterion_shared_task(Criterion& c) {
    const char* path = std::getenv("RUBRIQ_SHARED_TASK_CORPUS");
    if (path == nullptr || !fs::exists(path)) {
        return false; // skipped
    }
    auto corpus = load_corpus(path, LabelMode::TwoWay);
    Corpus train;
    train.label_mode = corpus.label_mode;
    train.records = split_records(corpus, Split::Train);
    auto groups = group_by_rubric(train);
    c.expect(groups.size() == 72, "expected 72 Train groups, found " +
                                      std::to_string(groups.size()));
    return true;
}

} // namespace

int main() {
    struct Entry {
        int number;
        std::string name;
        std::function<void(Criterion&)> run;
    };
    const std::vector<Entry> entries{
        {1, "metric oracle equivalence (1000 random vectors)", criterion_metrics_oracle},
        {2, "hand-worked weighted-F1 and QWK cases", criterion_worked_examples},
        {3, "grouping and routing over planted keys", criterion_grouping},
        {4, "placeholder contract with regeneration", criterion_placeholder_contract},
        {5, "end-to-end mock pipeline determinism", criterion_pipeline_determinism},
        {6, "call accounting per scorer", criterion_call_accounting},
        {7, "selection dominance, tie-break, undefined fallback", criterion_selection_dominance},
        {8, "synthetic gap-halving and retry accounting", criterion_synth_gap_halving},
        {9, "label parsing and abstention accounting", criterion_label_parsing},
        {10, "tf-idf hand computation and SMO properties", criterion_svm},
    };

    int failed = 0;
    auto report = [&](int number, const std::string& name, const Criterion& c) {
        if (c.failures().empty()) {
            std::cout << "PASS  " << number << ". " << name << "\n";
        } else {
            ++failed;
            std::cout << "FAIL  " << number << ". " << name << "\n";
            for (const auto& f : c.failures()) std::cout << "      - " << f << "\n";
        }
    };

    for (const auto& entry : entries) {
        Criterion c;
        try {
            entry.run(c);
        } catch (const std::exception& e) {
            c.fail(std::string("unhandled exception: ") + e.what());
        }
        report(entry.number, entry.name, c);
    }

    {
        Criterion c;
        try {
            criterion_no_leakage(c);
        } catch (const std::exception& e) {
            c.fail(std::string("unhandled exception: ") + e.what());
        }
        report(11, "no synthetic leakage into non-synthetic runs", c);
    }

    {
        Criterion c;
        bool ran = false;
        try {
            ran = criterion_shared_task(c);
        } catch (const std::exception& e) {
            c.fail(std::string("unhandled exception: ") + e.what());
            ran = true;
        }
        if (!ran) {
            std::cout << "SKIP  12. shared-task corpus group count"
                      << " (set RUBRIQ_SHARED_TASK_CORPUS to run)\n";
        } else {
            report(12, "shared-task corpus group count", c);
        }
    }

    std::cout << (failed == 0 ? "acceptance: all criteria passed\n"
                              : "acceptance: " + std::to_string(failed) + " criteria failed\n");
    return failed == 0 ? 0 : 1;
}
