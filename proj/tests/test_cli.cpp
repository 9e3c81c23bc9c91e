#include <doctest.h>

#include <cstdlib>
#include <unistd.h>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>

#include "pclbench/cli.hpp"

using namespace pclbench;
namespace fs = std::filesystem;

namespace {

struct TempDir {
    fs::path path;
    TempDir() {
        path = fs::temp_directory_path() / ("pclbench_cli_test_" + std::to_string(::getpid()));
        fs::create_directories(path);
    }
    ~TempDir() { fs::remove_all(path); }
    std::string file(const std::string& name) const { return (path / name).string(); }
};

std::string slurp(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

}  // namespace

TEST_CASE("helmholtz flags parse into a valid config") {
    auto parsed = cli::parse_args({"helmholtz", "--domain", "square", "--k", "0.5", "--refine",
                                   "3", "--method", "pcl", "--out", "t.csv"});
    CHECK(parsed.config.subcommand == "helmholtz");
    CHECK(parsed.config.domain == "square");
    CHECK(parsed.config.k == 0.5);
    CHECK(parsed.config.refinement == 3);
    CHECK(parsed.config.method == "pcl");
    CHECK(parsed.config.out_path == "t.csv");
}

TEST_CASE("pm requires lambda and pcl rejects it") {
    CHECK_THROWS_AS(cli::parse_args({"poisson-nn", "--method", "pm"}), std::invalid_argument);
    CHECK_THROWS_AS(cli::parse_args({"helmholtz", "--method", "pcl", "--lambda", "2.0"}),
                    std::invalid_argument);
    CHECK_NOTHROW(cli::parse_args({"poisson-nn", "--method", "pm", "--lambda", "10"}));
}

TEST_CASE("flags win over the config file") {
    TempDir tmp;
    {
        std::ofstream out(tmp.file("c.json"));
        out << R"({"k": 0.75, "refine": 2, "domain": "pipe"})";
    }
    auto parsed = cli::parse_args({"helmholtz", "--config", tmp.file("c.json"), "--k", "1.0"});
    CHECK(parsed.config.k == 1.0);          // flag wins
    CHECK(parsed.config.refinement == 2);   // config fills the rest
    CHECK(parsed.config.domain == "pipe");

    {
        std::ofstream out(tmp.file("bad.json"));
        out << "{ not json";
    }
    CHECK_THROWS_AS(cli::parse_args({"helmholtz", "--config", tmp.file("bad.json")}),
                    std::invalid_argument);
}

TEST_CASE("unknown flags and bad values are rejected") {
    CHECK_THROWS_AS(cli::parse_args({"helmholtz", "--frequency", "1"}), std::invalid_argument);
    CHECK_THROWS_AS(cli::parse_args({"poisson-nn", "--set", "7"}), std::invalid_argument);
    CHECK_THROWS_AS(cli::parse_args({"poisson-nn", "--layers", "6"}), std::invalid_argument);
    CHECK_THROWS_AS(cli::parse_args({"helmholtz", "--refine", "40"}), std::invalid_argument);
    CHECK_THROWS_AS(cli::parse_args({}), std::invalid_argument);
}

TEST_CASE("PCLBENCH_SEED provides the seed default") {
    ::setenv("PCLBENCH_SEED", "77", 1);
    auto parsed = cli::parse_args({"poisson-nn"});
    CHECK(parsed.config.seed == 77);
    ::unsetenv("PCLBENCH_SEED");
    auto parsed2 = cli::parse_args({"poisson-nn", "--seed", "5"});
    CHECK(parsed2.config.seed == 5);
}

TEST_CASE("run writes trace and summary, and is byte deterministic") {
    TempDir tmp;
    cli::RunConfig cfg;
    cfg.subcommand = "helmholtz";
    cfg.method = "pcl";
    cfg.refinement = 2;
    cfg.out_path = tmp.file("a.csv");
    cfg.summary_path = tmp.file("a.json");
    CHECK(cli::run(cfg) == 0);

    cfg.out_path = tmp.file("b.csv");
    cfg.summary_path = tmp.file("b.json");
    CHECK(cli::run(cfg) == 0);

    const std::string a = slurp(tmp.file("a.csv"));
    CHECK(!a.empty());
    CHECK(a == slurp(tmp.file("b.csv")));
    CHECK(a.rfind("iteration,loss,error,grad_norm\n", 0) == 0);

    auto j = nlohmann::json::parse(slurp(tmp.file("a.json")));
    CHECK(j.at("stop_reason").is_string());
    CHECK(j.at("final_error").get<double>() < 1e-4);
    CHECK(j.contains("wall_seconds"));
}

TEST_CASE("conditioning subcommand writes the lambda sweep CSV") {
    TempDir tmp;
    cli::RunConfig cfg;
    cfg.subcommand = "conditioning";
    cfg.cond_n = 6;
    cfg.lambda_steps = 4;
    cfg.out_path = tmp.file("cond.csv");
    CHECK(cli::run(cfg) == 0);
    const std::string csv = slurp(tmp.file("cond.csv"));
    CHECK(csv.rfind("lambda,kappa_A_lambda,kappa_A_squared,ratio\n", 0) == 0);
    CHECK(std::count(csv.begin(), csv.end(), '\n') == 5);
}

TEST_CASE("missing output directory fails with exit code 1") {
    cli::RunConfig cfg;
    cfg.subcommand = "conditioning";
    cfg.out_path = "/nonexistent_dir_pclbench/x.csv";
    CHECK_THROWS_AS(cli::run(cfg), std::invalid_argument);
    CHECK(cli::main_entry({"conditioning", "--out", "/nonexistent_dir_pclbench/x.csv"}) == 1);
}

TEST_CASE("sweep file fans out across workers") {
    TempDir tmp;
    nlohmann::json sweep = nlohmann::json::array();
    sweep.push_back({{"subcommand", "conditioning"},
                     {"cond-n", 4},
                     {"lambda-steps", 2},
                     {"out", tmp.file("s1.csv")}});
    sweep.push_back({{"subcommand", "helmholtz"},
                     {"method", "pcl"},
                     {"refine", 1},
                     {"out", tmp.file("s2.csv")}});
    {
        std::ofstream out(tmp.file("sweep.json"));
        out << sweep.dump(2);
    }
    CHECK(cli::main_entry({"--sweep", tmp.file("sweep.json"), "--jobs", "2"}) == 0);
    CHECK(!slurp(tmp.file("s1.csv")).empty());
    CHECK(!slurp(tmp.file("s2.csv")).empty());
}

TEST_CASE("help exits cleanly") {
    CHECK(cli::main_entry({"--help"}) == 0);
}
