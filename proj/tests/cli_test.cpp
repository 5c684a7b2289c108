#include <gtest/gtest.h>

#include <sys/wait.h>
#include <unistd.h>

#include <cstdlib>
#include <filesystem>
#include <string>

#include <nlohmann/json.hpp>

#include "eerpd/util.hpp"

using namespace eerpd;
namespace fs = std::filesystem;

namespace {

struct CliResult {
    int code = -1;
    std::string out;
    std::string err;
};

/// One temp workspace per test: a config file wired to the fixture corpus
/// with absolute cache/library/report paths, plus captured process output.
struct Workspace {
    fs::path root;

    explicit Workspace(const std::string& tag) {
        root = fs::temp_directory_path() / ("eerpd_cli_" + tag + "_" + std::to_string(::getpid()));
        fs::remove_all(root);
        fs::create_directories(root);
        fs::path corpus = fs::path(EERPD_FIXTURES_DIR) / "synthetic_kaggle.csv";
        write_file(root / "run.cfg",
                   "dataset = kaggle\n"
                   "train_path = " + corpus.string() + "\n"
                   "test_path = " + corpus.string() + "\n"
                   "cache_dir = " + (root / "cache").string() + "\n"
                   "library_path = " + (root / "library.jsonl").string() + "\n"
                   "report_dir = " + (root / "reports").string() + "\n");
    }
    ~Workspace() { fs::remove_all(root); }

    std::string cfg() const { return (root / "run.cfg").string(); }

    CliResult run(const std::string& args) const {
        fs::path out = root / "stdout.txt", err = root / "stderr.txt";
        std::string cmd = std::string(EERPD_CLI_PATH) + " " + args + " >" + out.string() +
                          " 2>" + err.string();
        int rc = std::system(cmd.c_str());
        CliResult r;
        r.code = WIFEXITED(rc) ? WEXITSTATUS(rc) : -1;
        r.out = read_file(out);
        r.err = read_file(err);
        return r;
    }

    CliResult build_library() const {
        CliResult r = run("build-library --config " + cfg());
        EXPECT_EQ(r.code, 0) << r.err;
        return r;
    }

    nlohmann::json report_json(const fs::path& dir, const std::string& stem = "report") const {
        return nlohmann::json::parse(read_file(dir / (stem + ".json")));
    }
};

}  // namespace

TEST(CliExitCodes, UsageErrorsAreTwoRuntimeErrorsAreOne) {
    Workspace ws("codes");

    CliResult help = ws.run("--help");
    EXPECT_EQ(help.code, 0);
    EXPECT_TRUE(contains(help.out, "Usage"));
    EXPECT_TRUE(contains(help.out, "evaluate"));

    EXPECT_EQ(ws.run("").code, 2) << "a subcommand is required";
    EXPECT_EQ(ws.run("frobnicate").code, 2);

    CliResult bad_alpha = ws.run("evaluate --config " + ws.cfg() + " --alpha 3");
    EXPECT_EQ(bad_alpha.code, 2);
    EXPECT_TRUE(contains(bad_alpha.err, "config error"));
    EXPECT_TRUE(contains(bad_alpha.err, "alpha must be in [0, 1]"));

    CliResult bad_set = ws.run("evaluate --config " + ws.cfg() + " --set junk");
    EXPECT_EQ(bad_set.code, 2);
    EXPECT_TRUE(contains(bad_set.err, "key=value"));
    EXPECT_EQ(ws.run("evaluate --config " + ws.cfg() + " --set nosuchkey=1").code, 2);

    // Runtime failures (not usage): missing library, unknown document id.
    CliResult no_lib = ws.run("evaluate --config " + ws.cfg());
    EXPECT_EQ(no_lib.code, 1);
    EXPECT_TRUE(contains(no_lib.err, "error:"));
    ws.build_library();
    EXPECT_EQ(ws.run("predict --config " + ws.cfg() + " --doc-id nope").code, 1);
}

TEST(CliIngest, PrintsSplitStatistics) {
    Workspace ws("ingest");
    CliResult r = ws.run("ingest --config " + ws.cfg());
    EXPECT_EQ(r.code, 0) << r.err;
    EXPECT_EQ(r.out,
              "train: 40 documents, 161 posts, 321 sentences\n"
              "test: 40 documents, 161 posts, 321 sentences\n");
}

TEST(CliEvaluate, EndToEndRunsAreByteIdentical) {
    Workspace ws("e2e");
    CliResult built = ws.build_library();
    EXPECT_TRUE(contains(built.out, "library: 40 entries"));

    fs::path dir1 = ws.root / "r1", dir2 = ws.root / "r2";
    CliResult r1 = ws.run("evaluate --config " + ws.cfg() + " --report-dir " + dir1.string());
    CliResult r2 = ws.run("evaluate --config " + ws.cfg() + " --report-dir " + dir2.string());
    EXPECT_EQ(r1.code, 0) << r1.err;
    EXPECT_EQ(r2.code, 0) << r2.err;
    EXPECT_TRUE(contains(r1.out, "MBTI: 40 documents, 0 failed predictions"));

    // Identical bytes apart from the report_dir the runs were told to use.
    auto j1 = ws.report_json(dir1), j2 = ws.report_json(dir2);
    j1["config"].erase("report_dir");
    j2["config"].erase("report_dir");
    EXPECT_EQ(j1.dump(2), j2.dump(2));
    EXPECT_EQ(j1.at("averages").at("accuracy").get<double>(), 1.0);
    EXPECT_EQ(j1.at("averages").at("macro_f1").get<double>(), 1.0);
    EXPECT_EQ(j1.at("failures").get<int>(), 0);
    EXPECT_TRUE(fs::exists(dir1 / "report.txt"));

    std::string snapshot = read_file(dir1 / "config_used.cfg");
    EXPECT_TRUE(contains(snapshot, "alpha = 0.7\n"));
    EXPECT_TRUE(contains(snapshot, "k = 2\n"));
    EXPECT_TRUE(contains(snapshot, "chat.provider = mock\n"));
}

TEST(CliSweep, EndpointRowsMatchDedicatedRuns) {
    Workspace ws("sweep");
    ws.build_library();

    fs::path sweep_dir = ws.root / "sweep";
    CliResult sw = ws.run("sweep-alpha --config " + ws.cfg() + " --alphas 0,0.5,1 --report-dir " +
                          sweep_dir.string());
    EXPECT_EQ(sw.code, 0) << sw.err;
    std::string tsv = read_file(sweep_dir / "sweep.tsv");
    EXPECT_EQ(tsv, sw.out);
    EXPECT_EQ(tsv.substr(0, 24), "alpha\taccuracy\tmacro_f1\n");
    ASSERT_EQ(split_on(trim(tsv), "\n").size(), 4u) << "header plus one row per alpha";

    for (const std::string& alpha : {std::string("0"), std::string("1")}) {
        fs::path dedicated_dir = ws.root / ("dedicated" + alpha);
        CliResult ded = ws.run("evaluate --config " + ws.cfg() + " --alpha " + alpha +
                               " --report-dir " + dedicated_dir.string());
        EXPECT_EQ(ded.code, 0) << ded.err;
        auto want = ws.report_json(dedicated_dir);
        auto got = ws.report_json(sweep_dir / ("alpha-" + alpha));
        EXPECT_EQ(got.at("dimensions").dump(), want.at("dimensions").dump()) << alpha;
        EXPECT_EQ(got.at("averages").dump(), want.at("averages").dump()) << alpha;
        std::string row = alpha + "\t" +
                          format_double(want.at("averages").at("accuracy").get<double>()) + "\t" +
                          format_double(want.at("averages").at("macro_f1").get<double>()) + "\n";
        EXPECT_TRUE(contains(tsv, "\n" + row)) << "missing sweep row: " << row;
    }
}

TEST(CliAblations, SideExperimentsWriteTheirArtifacts) {
    Workspace ws("ablate");
    ws.build_library();
    fs::path reports = ws.root / "reports";

    CliResult ab = ws.run("ablate-cot --config " + ws.cfg());
    EXPECT_EQ(ab.code, 0) << ab.err;
    EXPECT_TRUE(fs::exists(reports / "report_no_cot.json"));
    EXPECT_TRUE(fs::exists(reports / "report_no_cot.txt"));
    auto no_cot = ws.report_json(reports, "report_no_cot");
    EXPECT_EQ(no_cot.at("config").at("include_cot"), "false");

    CliResult sh = ws.run("shuffle-test --config " + ws.cfg() + " --seeds 1,2");
    EXPECT_EQ(sh.code, 0) << sh.err;
    std::string shuffle_tsv = read_file(reports / "shuffle.tsv");
    EXPECT_EQ(shuffle_tsv, sh.out);
    auto lines = split_on(trim(shuffle_tsv), "\n");
    ASSERT_EQ(lines.size(), 5u);
    EXPECT_EQ(lines[0], "dimension\tordered_f1_mean\tshuffled_f1_mean\tt\tp");
    for (std::size_t i = 1; i < lines.size(); ++i) {
        // The embedding is order-insensitive, so shuffling posts changes nothing.
        EXPECT_EQ(std::string(lines[i].substr(lines[i].size() - 4)), "\t0\t1") << lines[i];
    }
    auto shuffle_json = nlohmann::json::parse(read_file(reports / "shuffle.json"));
    EXPECT_EQ(shuffle_json.at("seeds"), (nlohmann::json::array_t{1, 2}));
    ASSERT_EQ(shuffle_json.at("rows").size(), 4u);

    CliResult co = ws.run("correlate --config " + ws.cfg());
    EXPECT_EQ(co.code, 0) << co.err;
    std::string corr = read_file(reports / "correlate.tsv");
    EXPECT_EQ(corr, co.out);
    auto corr_lines = split_on(trim(corr), "\n");
    ASSERT_EQ(corr_lines.size(), 5u);
    EXPECT_EQ(corr_lines[0], "dimension\tnearest\tboth");
    for (std::size_t i = 1; i < corr_lines.size(); ++i)
        EXPECT_EQ(std::string(corr_lines[i].substr(corr_lines[i].find('\t'))), "\t1\t1")
            << corr_lines[i];

    EXPECT_EQ(ws.run("shuffle-test --config " + ws.cfg() + " --seeds 7").code, 1)
        << "one seed cannot support a comparison";
}

TEST(CliOverrides, FlagsBeatSetWhichBeatsConfig) {
    Workspace ws("override");
    ws.build_library();
    fs::path dir = ws.root / "r";
    CliResult r = ws.run("evaluate --config " + ws.cfg() + " --set alpha=0.2 --alpha 0.9" +
                         " --set k=3 --report-dir " + dir.string());
    EXPECT_EQ(r.code, 0) << r.err;
    std::string snapshot = read_file(dir / "config_used.cfg");
    EXPECT_TRUE(contains(snapshot, "alpha = 0.9\n"));
    EXPECT_TRUE(contains(snapshot, "k = 3\n"));
    auto j = ws.report_json(dir);
    EXPECT_EQ(j.at("config").at("alpha"), "0.9");
    EXPECT_EQ(j.at("config").at("k"), "3");
    for (const auto& doc : j.at("documents"))
        EXPECT_EQ(doc.at("hits").size(), 3u);
}

TEST(CliPredict, SingleDocumentOutput) {
    Workspace ws("predict");
    ws.build_library();
    CliResult r = ws.run("predict --config " + ws.cfg() + " --doc-id kaggle-00004");
    EXPECT_EQ(r.code, 0) << r.err;
    EXPECT_TRUE(contains(r.out, "doc: kaggle-00004"));
    EXPECT_TRUE(contains(r.out, "gold: "));
    EXPECT_TRUE(contains(r.out, "predicted: "));
    EXPECT_TRUE(contains(r.out, "exemplars:"));
    EXPECT_TRUE(contains(r.out, "distance "));
    EXPECT_TRUE(contains(r.out, "process: "));
    // Gold recovery holds for the single-document path too.
    auto gold_pos = r.out.find("gold: ");
    auto pred_pos = r.out.find("predicted: ");
    ASSERT_NE(gold_pos, std::string::npos);
    ASSERT_NE(pred_pos, std::string::npos);
    EXPECT_EQ(r.out.substr(gold_pos + 6, 4), r.out.substr(pred_pos + 11, 4));
}
