#include <gtest/gtest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <sys/wait.h>

#include "json.hpp"

namespace fs = std::filesystem;

namespace {

std::string cli() {
    const char* p = std::getenv("NFC_CLI");
    return p ? p : "nfc";
}

struct Outcome {
    int code;
    std::string out;
};

Outcome run(const std::string& args, const fs::path& dir) {
    const auto log = dir / "stdout.txt";
    const std::string cmd = "'" + cli() + "' " + args + " > '" + log.string() + "' 2> '" + (dir / "stderr.txt").string() + "'";
    const int st = std::system(cmd.c_str());
    std::ifstream in(log);
    std::stringstream ss;
    ss << in.rdbuf();
    return {WIFEXITED(st) ? WEXITSTATUS(st) : -1, ss.str()};
}

fs::path fresh(const std::string& name) {
    const auto d = fs::temp_directory_path() / ("nfc_cli_" + name);
    fs::remove_all(d);
    fs::create_directories(d);
    return d;
}

nlohmann::json read_json(const fs::path& p) {
    std::ifstream in(p);
    return nlohmann::json::parse(in);
}

} // namespace

TEST(Cli, AnalyticRunWithOverrides) {
    const auto d = fresh("analytic");
    const auto o = run("analytic --set comb=flat --set M=3 --set xi_bar=6 --out '" + (d / "o").string() + "'", d);
    ASSERT_EQ(o.code, 0) << o.out;
    EXPECT_EQ(o.out.rfind("E=", 0), 0u);
    EXPECT_TRUE(fs::exists(d / "o" / "trace_output.csv"));
    const auto m = read_json(d / "o" / "manifest.json");
    EXPECT_EQ(m["config"]["M"], 3);
    EXPECT_EQ(m["mode"], "analytic");
}

TEST(Cli, ConfigFileAndDeterministicOutput) {
    const auto d = fresh("config");
    {
        std::ofstream cfg(d / "c.json");
        cfg << R"({"mode": "simulate", "comb": "flat", "M": 3, "xi_bar": 4, "tau_p": 5})";
    }
    const auto a = run("simulate --config '" + (d / "c.json").string() + "' --out '" + (d / "a").string() + "'", d);
    const auto b = run("simulate --config '" + (d / "c.json").string() + "' --out '" + (d / "b").string() + "'", d);
    ASSERT_EQ(a.code, 0);
    ASSERT_EQ(b.code, 0);
    EXPECT_EQ(a.out, b.out);
    std::ifstream fa(d / "a" / "trace_output.csv"), fb(d / "b" / "trace_output.csv");
    std::stringstream sa, sb;
    sa << fa.rdbuf();
    sb << fb.rdbuf();
    EXPECT_EQ(sa.str(), sb.str());
}

TEST(Cli, ConfigErrorExitCodeAndRecord) {
    const auto d = fresh("cfgerr");
    const auto o = run("analytic --set M=4 --out '" + (d / "o").string() + "'", d);
    EXPECT_EQ(o.code, 3);
    const auto rec = read_json(d / "o" / "error.json");
    EXPECT_EQ(rec["error"], "config_error");
    EXPECT_EQ(rec["field"], "M");
}

TEST(Cli, UnknownScenarioIsConfigError) {
    const auto d = fresh("scen");
    const auto o = run("scenario fig9 --out '" + (d / "o").string() + "'", d);
    EXPECT_EQ(o.code, 3);
    EXPECT_EQ(read_json(d / "o" / "error.json")["field"], "scenario");
}

TEST(Cli, SolverRefusalExitCode) {
    const auto d = fresh("refusal");
    const auto o = run("simulate --set comb=flat --set M=3 --set xi_bar=4 --set grid.t1=100 --set grid.dt=1 --out '" +
                           (d / "o").string() + "'",
                       d);
    EXPECT_EQ(o.code, 4);
}

TEST(Cli, UsageErrors) {
    const auto d = fresh("usage");
    EXPECT_EQ(run("", d).code, 64);
    EXPECT_EQ(run("teleport", d).code, 64);
    EXPECT_EQ(run("scenario", d).code, 64);
    EXPECT_EQ(run("analytic --threads 0", d).code, 64);
    EXPECT_EQ(run("--help", d).code, 0);
}
