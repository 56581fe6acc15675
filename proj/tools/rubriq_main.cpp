#include "rubriq/cli/commands.hpp"
#include "rubriq/corpus.hpp"
#include "rubriq/errors.hpp"

#include <CLI11.hpp>

#include <chrono>
#include <iostream>
#include <string>
#include <vector>

namespace cli = rubriq::cli;

namespace {

rubriq::LabelMode parse_label_mode(const std::string& text) {
    auto mode = rubriq::label_mode_from_string(text);
    if (!mode) {
        throw rubriq::UsageError("unknown label mode: " + text);
    }
    return *mode;
}

rubriq::Split parse_split(const std::string& text) {
    auto split = rubriq::split_from_string(text);
    if (!split) {
        throw rubriq::UsageError("unknown split: " + text + " (expected Train, Trial, or Test)");
    }
    return *split;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"rubriq: rubric-grouped scoring of free-text answers"};
    app.require_subcommand(1);
    app.set_config("--config");
    app.set_version_flag("--version", "rubriq 0.1.0");

    std::string label_mode = "two-way";
    std::string cache_dir;
    bool no_cache = false;
    long max_calls = -1;
    int parallelism = 4;
    long seed = 0;
    long backoff_ms = 1000;
    cli::BackendOptions backend;

    app.add_option("--label-mode", label_mode, "two-way or three-way")->capture_default_str();
    app.add_option("--cache-dir", cache_dir, "response cache directory (empty disables caching)");
    app.add_flag("--no-cache", no_cache, "bypass the response cache");
    app.add_option("--max-calls", max_calls, "abort once this many backend calls were made");
    app.add_option("--parallelism", parallelism, "concurrent backend calls")
        ->capture_default_str();
    app.add_option("--seed", seed, "run seed recorded in output manifests")
        ->capture_default_str();
    app.add_option("--backoff-ms", backoff_ms, "base retry backoff in milliseconds")
        ->capture_default_str();
    app.add_option("--backend", backend.kind, "mock or remote")->capture_default_str();
    app.add_option("--mock-script", backend.mock_script, "mock backend script (JSON)");
    app.add_option("--endpoint", backend.endpoint, "remote chat-completions URL");
    app.add_option("--model", backend.model, "model name sent with each request");
    app.add_option("--thinking-field", backend.thinking_field,
                   "request field carrying the thinking budget (empty: not transmitted)");
    app.add_option("--auth-env", backend.auth_env, "environment variable holding the API key")
        ->capture_default_str();

    cli::IngestOptions ingest;
    auto* ingest_cmd = app.add_subcommand("ingest", "normalize a corpus into a run directory");
    ingest_cmd->add_option("--corpus", ingest.corpus, "input corpus (JSONL)")->required();
    ingest_cmd->add_option("--out", ingest.out, "output directory")->required();

    cli::GroupsOptions groups;
    auto* groups_cmd = app.add_subcommand("groups", "list question-rubric groups");
    groups_cmd->add_option("--corpus", groups.corpus, "input corpus (JSONL)")->required();
    groups_cmd->add_option("--out", groups.out, "optional output directory for groups.json");
    groups_cmd->add_flag("--json", groups.json, "emit JSON instead of a table");

    cli::SynthOptions synth;
    auto* synth_cmd =
        app.add_subcommand("synth", "generate minority-label answers for imbalanced groups");
    synth_cmd->add_option("--corpus", synth.corpus, "input corpus (JSONL)")->required();
    synth_cmd->add_option("--out", synth.out, "output directory")->required();
    synth_cmd->add_option("--top-k", synth.top_k, "number of most-imbalanced groups to fill")
        ->capture_default_str();
    synth_cmd->add_option("--rounds", synth.r_syn, "revision rounds per sample")
        ->capture_default_str();
    synth_cmd->add_option("--max-discards", synth.max_discards,
                          "per-group discard limit before giving up")
        ->capture_default_str();
    synth_cmd->add_option("--temperature", synth.temperature,
                          "sampling temperature for generation and noise calls")
        ->capture_default_str();

    cli::MetaGenOptions meta_gen;
    auto* meta_cmd = app.add_subcommand("meta", "induced group-prompt operations");
    meta_cmd->require_subcommand(1);
    auto* meta_gen_cmd =
        meta_cmd->add_subcommand("gen", "induce a scoring prompt per group and variant");
    meta_gen_cmd->add_option("--corpus", meta_gen.corpus, "input corpus (JSONL)")->required();
    meta_gen_cmd->add_option("--out", meta_gen.out, "output directory")->required();
    meta_gen_cmd->add_option("--variant", meta_gen.variants,
                             "variant id (repeatable; default: the four standard variants)");

    cli::ScoreOptions score;
    std::string score_split = "Trial";
    auto* score_cmd = app.add_subcommand("score", "score one split with one scorer");
    score_cmd->add_option("--corpus", score.corpus, "input corpus (JSONL)")->required();
    score_cmd->add_option("--out", score.out, "output directory")->required();
    score_cmd->add_option("--scorer", score.scorer, "baseline, meta, roleplay, svm, or plan")
        ->capture_default_str();
    score_cmd->add_option("--split", score_split, "Train, Trial, or Test")
        ->capture_default_str();
    score_cmd->add_option("--variant", score.variant, "variant id (meta scorer)");
    score_cmd->add_option("--prompts", score.prompts,
                          "prompt store root (default: <out>/prompts)");
    score_cmd->add_option("--selection", score.selection, "selection.json (plan scorer)");
    score_cmd->add_option("--svm-model", score.svm_model,
                          "svm model file: loaded when present, else trained and saved");
    score_cmd->add_option("--thinking", score.thinking_budget,
                          "thinking budget for baseline and role-play calls")
        ->capture_default_str();

    cli::SelectOptions select;
    auto* select_cmd =
        app.add_subcommand("select", "pick the best scoring method per group from trial runs");
    select_cmd->add_option("--corpus", select.corpus, "input corpus (JSONL)")->required();
    select_cmd->add_option("--out", select.out, "output directory")->required();
    select_cmd->add_option("--predictions", select.predictions,
                           "trial predictions TSV (repeatable)")
        ->required();

    cli::EvalOptions eval;
    std::string eval_split = "Trial";
    auto* eval_cmd = app.add_subcommand("eval", "evaluate predictions against gold labels");
    eval_cmd->add_option("--corpus", eval.corpus, "input corpus (JSONL)")->required();
    eval_cmd->add_option("--predictions", eval.predictions, "predictions TSV")->required();
    eval_cmd->add_option("--split", eval_split, "Train, Trial, or Test")->capture_default_str();
    eval_cmd->add_option("--out", eval.out, "optional output directory for the JSON report");
    eval_cmd->add_flag("--json", eval.json, "emit JSON instead of a table");

    cli::ReportOptions report;
    auto* report_cmd =
        app.add_subcommand("report", "compare approaches on the trial split in one table");
    report_cmd->add_option("--corpus", report.corpus, "input corpus (JSONL)")->required();
    report_cmd->add_option("--predictions", report.predictions,
                           "trial predictions TSV (repeatable)")
        ->required();
    report_cmd->add_option("--selection", report.selection,
                           "selection.json for the composite row");
    report_cmd->add_option("--out", report.out, "optional output directory");
    report_cmd->add_flag("--json", report.json, "emit JSON instead of a table");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? cli::kExitOk : cli::kExitUsage;
    }

    return cli::run_command([&]() -> int {
        cli::GlobalOptions global;
        global.label_mode = parse_label_mode(label_mode);
        global.cache_dir = cache_dir;
        global.no_cache = no_cache;
        if (max_calls >= 0) {
            global.max_calls = max_calls;
        }
        global.parallelism = parallelism;
        global.seed = seed;
        global.backoff_base = std::chrono::milliseconds(backoff_ms);
        global.backend = backend;

        if (app.got_subcommand(ingest_cmd)) {
            return cli::cmd_ingest(ingest, global);
        }
        if (app.got_subcommand(groups_cmd)) {
            return cli::cmd_groups(groups, global);
        }
        if (app.got_subcommand(synth_cmd)) {
            return cli::cmd_synth(synth, global);
        }
        if (app.got_subcommand(meta_cmd)) {
            return cli::cmd_meta_gen(meta_gen, global);
        }
        if (app.got_subcommand(score_cmd)) {
            score.split = parse_split(score_split);
            return cli::cmd_score(score, global);
        }
        if (app.got_subcommand(select_cmd)) {
            return cli::cmd_select(select, global);
        }
        if (app.got_subcommand(eval_cmd)) {
            eval.split = parse_split(eval_split);
            return cli::cmd_eval(eval, global);
        }
        if (app.got_subcommand(report_cmd)) {
            return cli::cmd_report(report, global);
        }
        throw rubriq::UsageError("no command given");
    });
}
