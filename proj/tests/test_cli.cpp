// End-to-end checks of the installed binary: subcommands, files, exit codes.

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

namespace fs = std::filesystem;

namespace {

const std::string kCli = SEGEX_CLI_PATH;
const std::string kScenarioDir = SEGEX_SCENARIO_DIR;

struct RunResult {
    int exit_code = 0;
    std::string output; // stdout + stderr
};

RunResult run(const std::string& args) {
    const fs::path out = fs::temp_directory_path() / "segex_cli_out.txt";
    const std::string cmd = kCli + " " + args + " > " + out.string() + " 2>&1";
    const int status = std::system(cmd.c_str());
    RunResult res;
    res.exit_code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
    std::ifstream in(out);
    std::stringstream ss;
    ss << in.rdbuf();
    res.output = ss.str();
    return res;
}

std::string slurp(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

struct Workspace {
    fs::path dir;
    explicit Workspace(const char* name) : dir(fs::temp_directory_path() / name) {
        fs::remove_all(dir);
        fs::create_directories(dir);
    }
    ~Workspace() { fs::remove_all(dir); }
    std::string path(const char* name) const { return (dir / name).string(); }
};

void write_small_scenario(const std::string& path, std::size_t n) {
    std::ofstream out(path);
    out << R"({
      "n_users": )" << n << R"(,
      "definition_period": {"start": 0, "end": 1209600},
      "experiment_period": {"start": 1209600, "end": 1814400},
      "test_split": 0.5,
      "archetypes": [
        {"name": "readers", "weight": 0.5, "days_per_week": 4, "sessions_per_day": 1.6,
         "rate_dispersion": 0.3,
         "rates": {"articles:cpv": 5.0, "articles:apv": 2.0, "quotes:cpv": 0.6}},
        {"name": "traders", "weight": 0.5, "days_per_week": 4, "sessions_per_day": 1.6,
         "rate_dispersion": 0.3,
         "rates": {"articles:cpv": 0.6, "quotes:cpv": 5.0, "quotes:apv": 2.0}}
      ]
    })";
}

void write_config(const std::string& path) {
    std::ofstream out(path);
    out << R"({
      "definition_period": {"start": 0, "end": 1209600},
      "experiment_period": {"start": 1209600, "end": 1814400},
      "seed": 9,
      "k": 2,
      "min_cell_users": 5
    })";
}

} // namespace

TEST_CASE("synth writes the four files and is seed-stable") {
    Workspace ws("segex_cli_synth");
    write_small_scenario(ws.path("scenario.json"), 300);

    RunResult first = run("synth --scenario " + ws.path("scenario.json") + " --seed 5 --out-dir " +
                          ws.dir.string());
    CHECK(first.exit_code == 0);
    for (const char* name :
         {"definition_events.csv", "experiment_events.csv", "assignments.csv", "truth.csv"}) {
        INFO(name);
        CHECK(fs::exists(ws.dir / name));
        CHECK(fs::file_size(ws.dir / name) > 100);
    }
    const std::string def_first = slurp(ws.dir / "definition_events.csv");

    RunResult second = run("synth --scenario " + ws.path("scenario.json") + " --seed 5 --out-dir " +
                           ws.dir.string());
    CHECK(second.exit_code == 0);
    CHECK(slurp(ws.dir / "definition_events.csv") == def_first);
}

TEST_CASE("invalid scenarios exit with the usage code") {
    Workspace ws("segex_cli_badscn");
    {
        std::ofstream out(ws.path("scenario.json"));
        out << R"({"n_users": 10,
                   "definition_period": {"start": 0, "end": 100},
                   "experiment_period": {"start": 100, "end": 200},
                   "archetypes": [{"name": "a", "weight": 0.7, "days_per_week": 3,
                                   "rates": {"quotes:cpv": 1.0}}]})";
    }
    RunResult res = run("synth --scenario " + ws.path("scenario.json") + " --out-dir " + ws.dir.string());
    CHECK(res.exit_code == 2);
    CHECK(res.output.find("weights must sum to 1") != std::string::npos);
}

TEST_CASE("fit, select-k and analyze run the full loop") {
    Workspace ws("segex_cli_loop");
    write_small_scenario(ws.path("scenario.json"), 500);
    write_config(ws.path("config.json"));

    REQUIRE(run("synth --scenario " + ws.path("scenario.json") + " --seed 3 --out-dir " +
                ws.dir.string())
                .exit_code == 0);

    RunResult fit = run("fit --events " + ws.path("definition_events.csv") + " --config " +
                        ws.path("config.json") + " --out-dir " + ws.dir.string());
    CHECK(fit.exit_code == 0);
    CHECK(fit.output.find("fitted K=2") != std::string::npos);
    CHECK(fs::exists(ws.dir / "model.json"));
    CHECK_FALSE(fs::exists(ws.dir / "kselect.csv")); // fixed K skips selection

    RunResult curve = run("select-k --events " + ws.path("definition_events.csv") + " --config " +
                          ws.path("config.json") + " --k-range 2..4 --out-dir " + ws.dir.string());
    CHECK(curve.exit_code == 0);
    CHECK(curve.output.find("K,wcss,bic,davies_bouldin") != std::string::npos);
    CHECK(fs::exists(ws.dir / "kselect.csv"));

    RunResult analyze = run("analyze --model " + ws.path("model.json") + " --events " +
                            ws.path("experiment_events.csv") + " --assignments " +
                            ws.path("assignments.csv") + " --config " + ws.path("config.json") +
                            " --out-dir " + ws.dir.string());
    CHECK(analyze.exit_code == 0);
    CHECK(analyze.output.find("Overall treatment effect") != std::string::npos);
    for (const char* name :
         {"report_overall.csv", "report_overall.json", "report_importance.csv",
          "report_effects.csv", "report_effects.json", "report_contribution.csv",
          "report_drilldown.csv", "summary.txt"}) {
        INFO(name);
        CHECK(fs::exists(ws.dir / name));
    }

    RunResult as_csv = run("analyze --model " + ws.path("model.json") + " --events " +
                           ws.path("experiment_events.csv") + " --assignments " +
                           ws.path("assignments.csv") + " --config " + ws.path("config.json") +
                           " --format csv --out-dir " + ws.dir.string());
    CHECK(as_csv.exit_code == 0);
    CHECK(as_csv.output.rfind("segment,users,user_share", 0) == 0);
}

TEST_CASE("an empty events file is a usage error naming EmptyPeriod") {
    Workspace ws("segex_cli_empty");
    write_config(ws.path("config.json"));
    {
        std::ofstream out(ws.path("events.csv"));
        out << "user_id,timestamp,arm,page_type,event\n";
    }
    RunResult res = run("fit --events " + ws.path("events.csv") + " --config " +
                        ws.path("config.json") + " --out-dir " + ws.dir.string());
    CHECK(res.exit_code == 2);
    CHECK(res.output.find("EmptyPeriod") != std::string::npos);
}

TEST_CASE("usage problems exit with code 2") {
    CHECK(run("fit").exit_code == 2);                       // missing required option
    CHECK(run("no-such-command").exit_code == 2);
    CHECK(run("fit --events /nonexistent/file.csv").exit_code == 2);
}

TEST_CASE("the shipped example scenario is valid") {
    Workspace ws("segex_cli_example");
    RunResult res = run("synth --scenario " + kScenarioDir + "/example_scenario.json --n 200 --seed 1 --out-dir " +
                        ws.dir.string());
    CHECK(res.exit_code == 0);
    CHECK(fs::exists(ws.dir / "truth.csv"));
    // five archetypes present in the truth file
    const std::string truth = slurp(ws.dir / "truth.csv");
    for (const char* name : {"article_only", "quotes_only", "hybrid_high", "watchlist", "tourist"})
        CHECK(truth.find(name) != std::string::npos);
}
