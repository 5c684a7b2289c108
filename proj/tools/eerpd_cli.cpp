#include <cstdint>
#include <filesystem>
#include <iostream>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "CLI11.hpp"
#include "eerpd/eerpd.hpp"

namespace fs = std::filesystem;
using namespace eerpd;

namespace {

std::vector<double> parse_double_list(const std::string& csv, const std::string& flag) {
    std::vector<double> out;
    for (auto part : split_on(csv, ",")) {
        std::string token = trim(part);
        if (token.empty()) continue;
        try {
            out.push_back(parse_double(token));
        } catch (const Error&) {
            throw ConfigError(flag + ": '" + token + "' is not a number");
        }
    }
    if (out.empty()) throw ConfigError(flag + ": empty list");
    return out;
}

std::vector<std::uint64_t> parse_seed_list(const std::string& csv, const std::string& flag) {
    std::vector<std::uint64_t> out;
    for (auto part : split_on(csv, ",")) {
        std::string token = trim(part);
        if (token.empty()) continue;
        if (token.find_first_not_of("0123456789") != std::string::npos)
            throw ConfigError(flag + ": '" + token + "' is not a non-negative integer");
        out.push_back(std::stoull(token));
    }
    if (out.empty()) throw ConfigError(flag + ": empty list");
    return out;
}

void write_config_snapshot(const RunConfig& cfg, const fs::path& dir) {
    atomic_write_file(dir / "config_used.cfg", serialize_config(cfg));
}

ReferenceLibrary load_compatible_library(const RunConfig& cfg, const CachedChat& chat,
                                         const CachedEmbed& embed) {
    ReferenceLibrary lib = load_library(cfg.library_path);
    check_compatible(lib, make_fingerprint(config_scheme(cfg), chat, embed));
    return lib;
}

void run_ingest(const RunConfig& cfg) {
    if (cfg.train_path.empty() && cfg.test_path.empty())
        throw ConfigError("ingest needs train_path or test_path");
    for (bool train : {true, false}) {
        const std::string& path = train ? cfg.train_path : cfg.test_path;
        if (path.empty()) continue;
        auto docs = load_split(cfg, train);
        std::size_t posts = 0, sentences = 0;
        for (const Document& d : docs) {
            std::set<std::size_t> post_ids;
            for (const Sentence& s : d.sentences) post_ids.insert(s.post_index);
            posts += post_ids.size();
            sentences += d.sentences.size();
        }
        std::cout << (train ? "train" : "test") << ": " << docs.size() << " documents, " << posts
                  << " posts, " << sentences << " sentences\n";
    }
}

void run_build_library(const RunConfig& cfg) {
    CachedChat chat = make_chat(cfg);
    CachedEmbed embed = make_embed(cfg);
    auto docs = load_split(cfg, true);
    ReferenceLibrary lib = build_reference_library(docs, chat, embed, cfg.library_path,
                                                   cfg.concurrency,
                                                   static_cast<int>(cfg.chat_max_tokens));
    std::cout << "library: " << lib.entries.size() << " entries at " << cfg.library_path << "\n";
}

void run_predict(const RunConfig& cfg, const std::string& doc_id) {
    CachedChat chat = make_chat(cfg);
    CachedEmbed embed = make_embed(cfg);
    ReferenceLibrary lib = load_compatible_library(cfg, chat, embed);
    auto docs = load_split(cfg, false);
    const Document* target = nullptr;
    for (const Document& d : docs)
        if (d.id == doc_id) target = &d;
    if (!target) throw Error("document id not found in test split: " + doc_id);

    Prediction pred = predict_document(*target, lib, chat, embed, predict_options(cfg));
    if (pred.failed) throw PredictionFailed(doc_id, pred.failure_reason);

    std::cout << "doc: " << pred.doc_id << "\n";
    if (target->label) std::cout << "gold: " << target->label->to_string() << "\n";
    std::cout << "predicted: " << pred.label.to_string() << "\n";
    std::cout << "exemplars:\n";
    for (const RetrievalHit& h : pred.hits) {
        const ReferenceEntry* e = lib.find(h.entry_id);
        std::cout << "  " << h.entry_id << "  " << (e ? e->label.to_string() : "?")
                  << "  distance " << format_double(h.distance) << "\n";
    }
    if (!pred.process.empty()) std::cout << "process: " << pred.process << "\n";
}

void run_evaluate(const RunConfig& cfg) {
    CachedChat chat = make_chat(cfg);
    CachedEmbed embed = make_embed(cfg);
    ReferenceLibrary lib = load_compatible_library(cfg, chat, embed);
    auto docs = load_split(cfg, false);
    EvalReport report = evaluate(docs, lib, chat, embed, predict_options(cfg), cfg.concurrency);
    write_report(report, config_snapshot(cfg), cfg.report_dir);
    write_config_snapshot(cfg, cfg.report_dir);
    std::cout << render_report_text(report);
}

void run_sweep_alpha(const RunConfig& cfg, const std::string& alphas_csv) {
    std::vector<double> alphas = parse_double_list(alphas_csv, "--alphas");
    CachedChat chat = make_chat(cfg);
    CachedEmbed embed = make_embed(cfg);
    ReferenceLibrary lib = load_compatible_library(cfg, chat, embed);
    auto docs = load_split(cfg, false);
    auto sweep = ablation_alpha_sweep(docs, lib, chat, embed, predict_options(cfg), alphas,
                                      cfg.concurrency);

    for (const auto& [alpha, report] : sweep) {
        RunConfig sub = cfg;
        sub.alpha = alpha;
        fs::path dir = fs::path(cfg.report_dir) / ("alpha-" + format_double(alpha));
        sub.report_dir = dir.string();
        write_report(report, config_snapshot(sub), dir);
        write_config_snapshot(sub, dir);
    }
    std::string tsv = render_sweep_tsv(sweep);
    atomic_write_file(fs::path(cfg.report_dir) / "sweep.tsv", tsv);
    write_config_snapshot(cfg, cfg.report_dir);
    std::cout << tsv;
}

void run_ablate_cot(const RunConfig& cfg) {
    RunConfig sub = cfg;
    sub.include_cot = false;
    CachedChat chat = make_chat(sub);
    CachedEmbed embed = make_embed(sub);
    ReferenceLibrary lib = load_compatible_library(sub, chat, embed);
    auto docs = load_split(sub, false);
    EvalReport report = evaluate(docs, lib, chat, embed, predict_options(sub), sub.concurrency);
    write_report(report, config_snapshot(sub), sub.report_dir, "report_no_cot");
    write_config_snapshot(sub, sub.report_dir);
    std::cout << render_report_text(report);
}

void run_shuffle_test(const RunConfig& cfg, const std::string& seeds_csv) {
    std::vector<std::uint64_t> seeds = parse_seed_list(seeds_csv, "--seeds");
    CachedChat chat = make_chat(cfg);
    CachedEmbed embed = make_embed(cfg);
    ReferenceLibrary lib = load_compatible_library(cfg, chat, embed);
    auto docs = load_split(cfg, false);
    ShuffleOutcome outcome = order_shuffle_experiment(docs, lib, chat, embed,
                                                      predict_options(cfg), seeds,
                                                      cfg.concurrency);

    std::string tsv = "dimension\tordered_f1_mean\tshuffled_f1_mean\tt\tp\n";
    nlohmann::json json_rows = nlohmann::json::array();
    for (std::size_t d = 0; d < outcome.dimensions.size(); ++d) {
        double ordered = 0.0, shuffled = 0.0;
        for (std::size_t s = 0; s < outcome.seeds.size(); ++s) {
            ordered += outcome.ordered[s].dimensions[d].macro_f1;
            shuffled += outcome.shuffled[s].dimensions[d].macro_f1;
        }
        ordered /= static_cast<double>(outcome.seeds.size());
        shuffled /= static_cast<double>(outcome.seeds.size());
        const TTestResult& tt = outcome.f1_tests[d];
        tsv += outcome.dimensions[d] + "\t" + format_double(ordered) + "\t" +
               format_double(shuffled) + "\t" + format_double(tt.t) + "\t" + format_double(tt.p) +
               "\n";
        json_rows.push_back(nlohmann::json{{"dimension", outcome.dimensions[d]},
                                           {"ordered_f1_mean", ordered},
                                           {"p", format_double(tt.p)},
                                           {"shuffled_f1_mean", shuffled},
                                           {"t", format_double(tt.t)}});
    }
    nlohmann::json summary{{"rows", json_rows}, {"seeds", outcome.seeds}};
    atomic_write_file(fs::path(cfg.report_dir) / "shuffle.tsv", tsv);
    atomic_write_file(fs::path(cfg.report_dir) / "shuffle.json", summary.dump(2) + "\n");
    write_config_snapshot(cfg, cfg.report_dir);
    std::cout << tsv;
}

void run_correlate(const RunConfig& cfg) {
    CachedChat chat = make_chat(cfg);
    CachedEmbed embed = make_embed(cfg);
    ReferenceLibrary lib = load_compatible_library(cfg, chat, embed);
    auto docs = load_split(cfg, false);
    EvalReport report = evaluate(docs, lib, chat, embed, predict_options(cfg), cfg.concurrency);
    auto rows = example_label_agreement(report);

    std::string tsv = "dimension\tnearest\tboth\n";
    auto cell = [](const std::optional<double>& v) { return v ? format_double(*v) : "nan"; };
    for (const AgreementRow& row : rows)
        tsv += row.dimension + "\t" + cell(row.nearest) + "\t" + cell(row.both) + "\n";
    atomic_write_file(fs::path(cfg.report_dir) / "correlate.tsv", tsv);
    write_config_snapshot(cfg, cfg.report_dir);
    std::cout << tsv;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"retrieval-augmented personality detection from text"};
    app.require_subcommand(1);

    std::string config_path;
    std::vector<std::string> sets;
    std::string alpha_s, k_s, seed_s, sample_frac_s, library_s, cache_dir_s, report_dir_s,
        concurrency_s;
    app.add_option("--config", config_path, "run configuration file (key = value lines)");
    app.add_option("--set", sets, "override one configuration key (key=value), repeatable")
        ->allow_extra_args(false);
    auto* opt_alpha = app.add_option("--alpha", alpha_s, "channel mixing weight in [0, 1]");
    auto* opt_k = app.add_option("--k", k_s, "number of retrieved exemplars");
    auto* opt_seed = app.add_option("--seed", seed_s, "sampling seed");
    auto* opt_frac = app.add_option("--sample-frac", sample_frac_s, "test split sampling fraction");
    auto* opt_library = app.add_option("--library", library_s, "reference library path");
    auto* opt_cache = app.add_option("--cache-dir", cache_dir_s, "response/embedding cache directory");
    auto* opt_report = app.add_option("--report-dir", report_dir_s, "output directory");
    auto* opt_conc = app.add_option("--concurrency", concurrency_s, "worker thread count");

    auto* cmd_ingest = app.add_subcommand("ingest", "load the corpus and print split statistics");
    auto* cmd_build = app.add_subcommand("build-library",
                                         "categorize, embed, and annotate the training split");
    auto* cmd_predict = app.add_subcommand("predict", "predict one document by id");
    std::string doc_id;
    cmd_predict->add_option("--doc-id", doc_id, "document id in the test split")->required();
    auto* cmd_eval = app.add_subcommand("evaluate", "score the test split and write a report");
    auto* cmd_sweep = app.add_subcommand("sweep-alpha", "evaluate across mixing weights");
    std::string alphas_csv = "0,0.3,0.5,0.7,1.0";
    cmd_sweep->add_option("--alphas", alphas_csv, "comma-separated mixing weights");
    auto* cmd_ablate = app.add_subcommand("ablate-cot",
                                          "evaluate with exemplar reasoning chains removed");
    auto* cmd_shuffle = app.add_subcommand("shuffle-test",
                                           "compare ordered posts against shuffled posts");
    std::string seeds_csv = "1,2,3,4,5";
    cmd_shuffle->add_option("--seeds", seeds_csv, "comma-separated shuffle seeds (at least 2)");
    auto* cmd_correlate = app.add_subcommand(
        "correlate", "correlate gold labels with retrieved exemplar labels");
    for (CLI::App* sub : {cmd_ingest, cmd_build, cmd_predict, cmd_eval, cmd_sweep, cmd_ablate,
                          cmd_shuffle, cmd_correlate})
        sub->fallthrough();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }

    try {
        RunConfig cfg;
        if (!config_path.empty()) cfg = load_config(config_path);
        for (const std::string& kv : sets) {
            auto eq = kv.find('=');
            if (eq == std::string::npos)
                throw ConfigError("--set expects key=value, got '" + kv + "'");
            apply_setting(cfg, trim(kv.substr(0, eq)), trim(kv.substr(eq + 1)));
        }
        if (opt_alpha->count()) apply_setting(cfg, "alpha", alpha_s);
        if (opt_k->count()) apply_setting(cfg, "k", k_s);
        if (opt_seed->count()) apply_setting(cfg, "seed", seed_s);
        if (opt_frac->count()) apply_setting(cfg, "sample_frac", sample_frac_s);
        if (opt_library->count()) apply_setting(cfg, "library_path", library_s);
        if (opt_cache->count()) apply_setting(cfg, "cache_dir", cache_dir_s);
        if (opt_report->count()) apply_setting(cfg, "report_dir", report_dir_s);
        if (opt_conc->count()) apply_setting(cfg, "concurrency", concurrency_s);
        validate(cfg);

        if (*cmd_ingest) run_ingest(cfg);
        else if (*cmd_build) run_build_library(cfg);
        else if (*cmd_predict) run_predict(cfg, doc_id);
        else if (*cmd_eval) run_evaluate(cfg);
        else if (*cmd_sweep) run_sweep_alpha(cfg, alphas_csv);
        else if (*cmd_ablate) run_ablate_cot(cfg);
        else if (*cmd_shuffle) run_shuffle_test(cfg, seeds_csv);
        else if (*cmd_correlate) run_correlate(cfg);
        return 0;
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
}
