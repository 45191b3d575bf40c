#include <sys/wait.h>
#include <unistd.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <gtest/gtest.h>
#include <json.hpp>

#include "tmsmd/duration_models.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

class Cli : public ::testing::Test {
protected:
    void SetUp() override {
        const auto* info = ::testing::UnitTest::GetInstance()->current_test_info();
        dir_ = fs::temp_directory_path() / (std::string("tmsmd_cli_") + info->name() + "_" + std::to_string(::getpid()));
        fs::remove_all(dir_);
        fs::create_directories(dir_);
    }
    void TearDown() override { fs::remove_all(dir_); }

    int run(const std::string& args) const {
        const std::string cmd = std::string(TMSMD_CLI_PATH) + " " + args + " > " + (dir_ / "stdout.txt").string() +
                                " 2> " + (dir_ / "stderr.txt").string();
        const int status = std::system(cmd.c_str());
        return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
    }

    fs::path path(const std::string& name) const { return dir_ / name; }

    static std::string slurp(const fs::path& p) {
        std::ifstream in(p, std::ios::binary);
        std::ostringstream s;
        s << in.rdbuf();
        return s.str();
    }

    static std::size_t data_rows(const fs::path& p) {
        std::ifstream in(p);
        std::string line;
        std::size_t n = 0;
        while (std::getline(in, line)) ++n;
        return n == 0 ? 0 : n - 1;
    }

    void write(const std::string& name, const std::string& text) const { std::ofstream(path(name)) << text; }

    fs::path dir_;
};

}  // namespace

TEST_F(Cli, SimulateWritesRowsAndManifest) {
    ASSERT_EQ(run("simulate --model exp --n 1000 --seed 3 --out " + path("a").string()), 0);
    EXPECT_EQ(data_rows(path("a/durations.csv")), 1000u);
    const auto m = json::parse(slurp(path("a/manifest.json")));
    EXPECT_EQ(m["command"], "simulate");
    EXPECT_EQ(m["config"]["nu-max"], "5866");
    EXPECT_EQ(m["config"]["seed"], "3");

    ASSERT_EQ(run("simulate --model exp --n 1000 --seed 3 --out " + path("b").string()), 0);
    EXPECT_EQ(slurp(path("a/durations.csv")), slurp(path("b/durations.csv")));
    ASSERT_EQ(run("simulate --model exp --n 1000 --seed 4 --out " + path("c").string()), 0);
    EXPECT_NE(slurp(path("a/durations.csv")), slurp(path("c/durations.csv")));
}

TEST_F(Cli, SimulateClockMode) {
    ASSERT_EQ(run("simulate --tau 1000 --n-windows 300 --out " + path("o").string()), 0);
    EXPECT_EQ(data_rows(path("o/compound.csv")), 300u);
    EXPECT_TRUE(fs::exists(path("o/compound_summary.json")));
}

TEST_F(Cli, EstimateExponential) {
    write("d.csv", "d\n1\n2\n3\n");
    ASSERT_EQ(run("estimate --model exp --input " + path("d.csv").string() + " --out " + path("o").string()), 0);
    const auto fit = json::parse(slurp(path("o/fit.json")));
    EXPECT_DOUBLE_EQ(fit["params"]["nu"].get<double>(), 2.0);
    EXPECT_EQ(fit["n_obs"], 3);
}

TEST_F(Cli, EstimateGaussianJson) {
    write("r.csv", "r\n1\n2\n3\n");
    ASSERT_EQ(run("estimate --model gaussian --format json --input " + path("r.csv").string() + " --out " +
                  path("o").string()),
              0);
    const auto fit = json::parse(slurp(path("o/fit.json")));
    EXPECT_DOUBLE_EQ(fit["params"]["mu"].get<double>(), 2.0);
}

TEST_F(Cli, EstimateKbarTable) {
    ASSERT_EQ(run("simulate --model msmd --kbar 2 --lambda 0.01 --n 3000 --out " + path("s").string()), 0);
    ASSERT_EQ(run("estimate --model msmd --kbar-range 1..2 --input " + path("s/durations.csv").string() + " --out " +
                  path("o").string()),
              0);
    EXPECT_EQ(data_rows(path("o/kbar_table.csv")), 2u);
}

TEST_F(Cli, GofIdenticalAndMismatch) {
    ASSERT_EQ(run("simulate --model tmsmd --n 20000 --ticks --out " + path("s").string()), 0);
    const auto ticks = path("s/ticks.csv").string();
    ASSERT_EQ(run("gof --tau 1000 --data " + ticks + " --sim " + ticks + " --out " + path("o").string()), 0);
    std::ifstream in(path("o/gof_chi2.csv"));
    std::string header, row;
    std::getline(in, header);
    ASSERT_TRUE(std::getline(in, row));
    // tau,bins,df,chi2,critical_5pct,reject,kl,...
    std::vector<std::string> cells;
    std::stringstream ss(row);
    for (std::string c; std::getline(ss, c, ',');) cells.push_back(c);
    ASSERT_GE(cells.size(), 7u);
    EXPECT_EQ(std::stod(cells[3]), 0.0);
    EXPECT_EQ(cells[5], "false");
    EXPECT_EQ(std::stod(cells[6]), 0.0);

    write("narrow.csv", "timestamp_ms,price\n0,1640\n1000,1640.25\n2000,1640\n2500,1640\n");
    write("wide.csv", "timestamp_ms,price\n0,1640\n1000,1642\n2000,1640\n2500,1640\n");
    EXPECT_EQ(run("gof --tau 1000 --data " + path("narrow.csv").string() + " --sim " + path("wide.csv").string() +
                  " --out " + path("m").string()),
              3);
    EXPECT_FALSE(fs::exists(path("m/gof.json")));
}

TEST_F(Cli, VolmapRows) {
    ASSERT_EQ(run("volmap --lambda 0.2..2 --points 25 --n-windows 500 --out " + path("o").string()), 0);
    EXPECT_EQ(data_rows(path("o/vol_curve.csv")), 25u);
    const auto fit = json::parse(slurp(path("o/vol_curve_fit.json")));
    EXPECT_TRUE(fit.contains("r_squared"));
}

TEST_F(Cli, LeadlagRows) {
    ASSERT_EQ(run("simulate --model exp --nu 20 --n 5000 --ticks --out " + path("s").string()), 0);
    const auto ticks = path("s/ticks.csv").string();
    ASSERT_EQ(run("leadlag --leader " + ticks + " --follower " + ticks + " --out " + path("o").string()), 0);
    EXPECT_EQ(data_rows(path("o/lag_response.csv")), 61u);
    EXPECT_EQ(data_rows(path("o/cumulative.csv")), 30u);
}

TEST_F(Cli, FailuresLeaveNoOutputs) {
    EXPECT_EQ(run("estimate --input " + path("missing.csv").string() + " --out " + path("o").string()), 1);
    EXPECT_FALSE(fs::exists(path("o/fit.json")));
    EXPECT_EQ(run("simulate --m0 3 --out " + path("p").string()), 2);
    EXPECT_FALSE(fs::exists(path("p/durations.csv")));
    EXPECT_EQ(run("simulate --no-such-flag 1"), 2);
}

TEST_F(Cli, ConfigFileAndFlagPrecedence) {
    write("run.cfg", "# comment\nmodel=exp\nn=50\nseed=9\n");
    ASSERT_EQ(run("simulate --config " + path("run.cfg").string() + " --n 20 --out " + path("o").string()), 0);
    EXPECT_EQ(data_rows(path("o/durations.csv")), 20u);
    const auto m = json::parse(slurp(path("o/manifest.json")));
    EXPECT_EQ(m["config"]["model"], "exp");
    EXPECT_EQ(m["config"]["seed"], "9");
    EXPECT_EQ(m["config"]["n"], "20");
}

TEST_F(Cli, ReplayVerify) {
    ASSERT_EQ(run("simulate --model tmsmd --n 2000 --latent --out " + path("o").string()), 0);
    EXPECT_EQ(run("replay --verify --manifest " + path("o/manifest.json").string() + " --out " + path("r").string()),
              0);
    EXPECT_EQ(slurp(path("o/latent_path.csv")), slurp(path("r/latent_path.csv")));

    auto m = json::parse(slurp(path("o/manifest.json")));
    m["config"]["seed"] = "2";
    std::ofstream(path("altered.json")) << m.dump(2);
    EXPECT_EQ(run("replay --verify --manifest " + path("altered.json").string() + " --out " + path("x").string()), 4);
}
