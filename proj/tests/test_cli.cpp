#include "gz4/cli.hpp"

#include <gtest/gtest.h>

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>

using namespace gz4;

namespace {

struct Outcome {
    int code;
    std::string out, err;
    ojson json() const { return ojson::parse(out); }
};

Outcome run_cli(std::vector<std::string> args) {
    args.insert(args.begin(), "gz4");
    std::vector<const char*> argv;
    for (const auto& a : args) argv.push_back(a.c_str());
    std::ostringstream out, err;
    int code = cli::run(static_cast<int>(argv.size()), argv.data(), out, err);
    return {code, out.str(), err.str()};
}

std::string binary() {
    const char* p = std::getenv("GZ4_CLI");
    return p ? p : "";
}

int shell_exit(const std::string& cmd) {
    int st = std::system((cmd + " >/dev/null 2>&1").c_str());
    return WIFEXITED(st) ? WEXITSTATUS(st) : -1;
}

std::string slurp(const std::string& path) {
    std::ifstream f(path);
    std::stringstream ss;
    ss << f.rdbuf();
    return ss.str();
}

}  // namespace

TEST(Cli, PeriodsOfTheTetrahedralFamily) {
    auto r = run_cli({"--json", "periods", "--family", "2,4", "--terms", "4"});
    ASSERT_EQ(r.code, 0) << r.err;
    auto j = r.json();
    EXPECT_EQ(j["schema_version"], 1);
    EXPECT_EQ(j["command"], "periods");
    EXPECT_EQ(j["results"]["terms"][4], "24");
}

TEST(Cli, PeriodsOfFermi) {
    auto r = run_cli({"--json", "periods", "--family", "3-27", "--terms", "2"});
    ASSERT_EQ(r.code, 0) << r.err;
    EXPECT_EQ(r.json()["results"]["terms"], (ojson{"1", "0", "6"}));
}

TEST(Cli, InlinePolynomial) {
    auto r = run_cli({"--json", "periods", "--phi", "(1+x+y+z)^4/(x*y*z)", "--terms", "2"});
    ASSERT_EQ(r.code, 0) << r.err;
    EXPECT_EQ(r.json()["results"]["terms"][2], "2520");
}

TEST(Cli, ExternalPolynomialFails) {
    auto r = run_cli({"periods", "--family", "2-6"});
    EXPECT_EQ(r.code, 1);
    EXPECT_NE(r.err.find("external"), std::string::npos);
}

TEST(Cli, BadPolynomialIsUsage) { EXPECT_EQ(run_cli({"periods", "--phi", "x+*y"}).code, 2); }

TEST(Cli, PicardFuchsOfApery) {
    auto r = run_cli({"--json", "pf", "--family", "6,1"});
    ASSERT_EQ(r.code, 0) << r.err;
    auto res = r.json()["results"];
    EXPECT_EQ(res["order"], 3);
    EXPECT_EQ(res["finite_count"], 2);
    EXPECT_EQ(res["finite_singular_points"][0]["exact"], "root of t^2 - 34*t + 1");
    EXPECT_EQ(res["finite_singular_points"][0]["im"], res["finite_singular_points"][1]["im"]);
}

TEST(Cli, PicardFuchsOutsideTheBoxFails) {
    EXPECT_EQ(run_cli({"pf", "--family", "2,1", "--max-order", "1"}).code, 1);
}

TEST(Cli, GreenValue) {
    auto r = run_cli({"--json", "--target-error", "1e-8", "green", "--group", "G0(2)+2", "--pole-form", "2,0,5",
                      "--point", "0.137,1.43", "--hat"});
    ASSERT_EQ(r.code, 0) << r.err;
    auto res = r.json()["results"];
    EXPECT_TRUE(res.contains("value"));
    EXPECT_TRUE(res.contains("error_bound"));
}

TEST(Cli, GreenOnLabelOnlyGroupFails) {
    auto r = run_cli({"green", "--group", "8A1+2", "--pole-form", "8,4,1", "--point", "0.1,1.2"});
    EXPECT_EQ(r.code, 1);
    EXPECT_NE(r.err.find("presentation"), std::string::npos);
}

TEST(Cli, DegeneratePoleFails) {
    EXPECT_EQ(run_cli({"green", "--group", "G0(2)+2", "--pole-form", "2,0,1", "--point", "0.1,1.2", "--hat"}).code, 1);
}

TEST(Cli, MissingArgumentIsUsage) { EXPECT_EQ(run_cli({"green", "--group", "G0(2)+2"}).code, 2); }

TEST(Cli, PrecisionRange) { EXPECT_EQ(run_cli({"--prec", "5", "periods", "--family", "2,1"}).code, 2); }

TEST(Cli, InjectedLogIsRecognized) {
    auto r = run_cli({"--json", "gzverify", "--inject", "3ln2"});
    ASSERT_EQ(r.code, 0) << r.err;
    auto rec = r.json()["results"]["recognition"];
    EXPECT_EQ(rec["status"], "recognized");
    EXPECT_EQ(rec["candidate"]["scale"], "3");
    EXPECT_EQ(rec["candidate"]["alpha_minpoly"], "t - 2");
}

TEST(Cli, InjectedTranscendentalIsInconclusive) {
    auto r = run_cli({"--json", "gzverify", "--inject", "ln(7)", "--scales", "1/5"});
    ASSERT_EQ(r.code, 0) << r.err;
    EXPECT_EQ(r.json()["results"]["recognition"]["status"], "inconclusive");
}

TEST(Cli, UnknownFamilyIsUsage) {
    auto r = run_cli({"registry", "verify", "--family", "nope"});
    EXPECT_EQ(r.code, 2);
}

TEST(Cli, QuickVerifyOfConjugatedRow) {
    auto r = run_cli({"--json", "--deterministic", "registry", "verify", "--family", "3-1"});
    EXPECT_EQ(r.code, 0) << r.err;
    auto fam = r.json()["results"]["families"][0];
    EXPECT_EQ(fam["id"], "3-1");
    for (const auto& c : fam["checks"]) EXPECT_EQ(c["outcome"], "skipped") << c.dump();
}

TEST(Cli, DeterministicOutputIsByteIdentical) {
    std::vector<std::string> args{"--json", "--deterministic", "registry", "verify", "--family", "2,1", "--depth", "full"};
    auto a = run_cli(args), b = run_cli(args);
    ASSERT_EQ(a.code, 0) << a.err;
    EXPECT_EQ(a.out, b.out);
    EXPECT_EQ(a.out.find("seconds"), std::string::npos);
}

TEST(Cli, ForkedFanOutMatchesSequential) {
    auto a = run_cli({"--json", "--deterministic", "registry", "verify", "--all"});
    auto b = run_cli({"--json", "--deterministic", "registry", "verify", "--all", "--jobs", "3"});
    EXPECT_EQ(a.code, 0) << a.err;
    EXPECT_EQ(b.code, a.code);
    EXPECT_EQ(a.out, b.out);
    EXPECT_EQ(a.json()["results"]["summary"]["records"], 23);
}

TEST(Cli, ReportFile) {
    std::string path = ::testing::TempDir() + "gz4_report.json";
    auto r = run_cli({"--deterministic", "registry", "verify", "--family", "3,1", "--report", path});
    ASSERT_EQ(r.code, 0) << r.err;
    auto j = ojson::parse(slurp(path));
    EXPECT_EQ(j["command"], "registry verify");
    EXPECT_EQ(j["results"]["families"][0]["id"], "3,1");
}

TEST(Cli, BrokenRegistryFails) {
    std::string path = ::testing::TempDir() + "gz4_short_registry.json";
    auto j = ojson::parse(slurp(GZ4_DEFAULT_REGISTRY));
    j["families"].erase(j["families"].size() - 1);
    std::ofstream(path) << j.dump();
    auto r = run_cli({"--registry", path, "periods", "--family", "2,1"});
    EXPECT_EQ(r.code, 1);
    EXPECT_NE(r.err.find("23"), std::string::npos) << r.err;
}

TEST(Cli, BinaryExitCodes) {
    std::string bin = binary();
    if (bin.empty()) GTEST_SKIP() << "GZ4_CLI not set";
    EXPECT_EQ(shell_exit(bin + " periods --family 2,1 --terms 3"), 0);
    EXPECT_EQ(shell_exit(bin + " periods --family 2-12"), 1);
    EXPECT_EQ(shell_exit(bin + " registry verify --family nope"), 2);
    EXPECT_EQ(shell_exit(bin + " --bogus"), 2);
    EXPECT_EQ(shell_exit("GZ4_REGISTRY=/nonexistent/families.json " + bin + " periods --family 2,1"), 2);
}

TEST(Cli, TextOutput) {
    auto r = run_cli({"periods", "--family", "2,1", "--terms", "2"});
    ASSERT_EQ(r.code, 0);
    EXPECT_NE(r.out.find("terms: 1, 24, 2520"), std::string::npos) << r.out;
}
