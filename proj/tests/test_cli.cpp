// End-to-end tests against the built psv binary.

#include <gtest/gtest.h>

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <string>

#include <json.hpp>

namespace {

struct RunResult {
    int exit_code = -1;
    std::string out;
};

RunResult run(const std::string& args, const std::string& env = "") {
    std::string cmd = env.empty() ? "" : env + " ";
    cmd += std::string(PSV_CLI_PATH) + " " + args + " 2>/dev/null";
    std::FILE* pipe = popen(cmd.c_str(), "r");
    EXPECT_NE(pipe, nullptr);
    RunResult result;
    char buf[4096];
    std::size_t got;
    while ((got = std::fread(buf, 1, sizeof buf, pipe)) > 0)
        result.out.append(buf, got);
    int status = pclose(pipe);
    result.exit_code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
    return result;
}

std::vector<std::string> lines_of(const std::string& text) {
    std::vector<std::string> lines;
    std::string line;
    for (char c : text) {
        if (c == '\n') {
            lines.push_back(line);
            line.clear();
        } else {
            line += c;
        }
    }
    if (!line.empty()) lines.push_back(line);
    return lines;
}

}  // namespace

TEST(Cli, EnumerateGolden) {
    auto r = run("enumerate --rule omit:3 --limit 257");
    EXPECT_EQ(r.exit_code, 0);
    auto lines = lines_of(r.out);
    ASSERT_EQ(lines.size(), 15u);
    EXPECT_EQ(lines.front(), "2");
    EXPECT_EQ(lines.back(), "257");
}

TEST(Cli, EnumerateJson) {
    auto r = run("enumerate --rule omit:5 --limit 103 --format json");
    EXPECT_EQ(r.exit_code, 0);
    auto j = nlohmann::json::parse(r.out);
    EXPECT_EQ(j["schema"], 1);
    EXPECT_EQ(j["rule"], "omit:5");
    EXPECT_EQ(j["count"], 15);
    EXPECT_EQ(j["members"].back(), 103);
}

TEST(Cli, UsageErrors) {
    EXPECT_EQ(run("enumerate --rule omit:4 --limit 10").exit_code, 2);
    EXPECT_EQ(run("enumerate --limit 10").exit_code, 2);   // missing rule
    EXPECT_EQ(run("bogus-subcommand").exit_code, 2);
    EXPECT_EQ(run("").exit_code, 2);                        // no subcommand
    EXPECT_EQ(run("count --rule omit:3 --limit 1000 --checkpoints 10,abc")
                  .exit_code,
              2);
    EXPECT_EQ(run("carmichael --assume 3:0").exit_code, 2);
    EXPECT_EQ(run("fit --in /dev/null --window x:y").exit_code, 2);
}

TEST(Cli, TreeTextAndJson) {
    auto text = run("tree 7");
    EXPECT_EQ(text.exit_code, 0);
    auto lines = lines_of(text.out);
    ASSERT_GE(lines.size(), 3u);
    EXPECT_EQ(lines[0], "7 (height 3)");

    auto json = run("tree 7 --format json");
    EXPECT_EQ(json.exit_code, 0);
    auto j = nlohmann::json::parse(json.out);
    EXPECT_EQ(j["tree"]["height"], 3);
    EXPECT_EQ(j["tree"]["children"].size(), 2u);

    EXPECT_EQ(run("tree 6").exit_code, 1);  // not prime
}

TEST(Cli, FitMissingFile) {
    EXPECT_EQ(run("fit --in /nonexistent/counts.csv").exit_code, 1);
}

TEST(Cli, CountThenFitRoundTrip) {
    auto tmp = std::filesystem::temp_directory_path() / "psv_cli_counts.csv";
    auto r = run("count --rule omit:3 --limit 500000 --checkpoints pow2");
    EXPECT_EQ(r.exit_code, 0);
    auto lines = lines_of(r.out);
    ASSERT_GE(lines.size(), 2u);
    EXPECT_EQ(lines[0], "x,count");
    {
        std::ofstream f(tmp);
        f << r.out;
    }
    auto fit = run("fit --in " + tmp.string() + " --window 2^12:2^18 --format json");
    EXPECT_EQ(fit.exit_code, 0);
    auto j = nlohmann::json::parse(fit.out);
    double slope = j["slope"];
    EXPECT_GT(slope, 0.3);
    EXPECT_LT(slope, 1.0);
    std::filesystem::remove(tmp);
}

TEST(Cli, CountExplicitCheckpoints) {
    auto r = run("count --rule omit:3 --limit 1000 --checkpoints 2,257,1000");
    EXPECT_EQ(r.exit_code, 0);
    auto lines = lines_of(r.out);
    ASSERT_EQ(lines.size(), 4u);
    EXPECT_EQ(lines[1], "2,1");
    EXPECT_EQ(lines[2], "257,15");
}

TEST(Cli, CountSavesLoadableBitmap) {
    auto tmp = std::filesystem::temp_directory_path() / "psv_cli_p3.bitmap";
    auto r = run("count --rule omit:3 --limit 100000 --save-bitmap " +
                 tmp.string());
    EXPECT_EQ(r.exit_code, 0);
    EXPECT_TRUE(std::filesystem::exists(tmp));
    EXPECT_GT(std::filesystem::file_size(tmp), 100000 / 16);
    std::filesystem::remove(tmp);
}

TEST(Cli, MatrixGolden) {
    auto r = run("matrix --rule omit:3 --limit 1000 --y 3 --ncap 10");
    EXPECT_EQ(r.exit_code, 0);
    auto j = nlohmann::json::parse(r.out);
    EXPECT_EQ(j["residues"], 1);
    EXPECT_DOUBLE_EQ(j["row_sum_max"], 0.625);
    EXPECT_DOUBLE_EQ(j["col_sum_max"], 0.625);
    EXPECT_NEAR(j["spectral"]["radius"].get<double>(), 0.625, 1e-9);
    EXPECT_EQ(run("matrix --rule omit:3 --limit 1000 --y 3 --s 0 --ncap 10")
                  .exit_code,
              1);
}

TEST(Cli, CarmichaelDefault) {
    auto r = run("carmichael --format json");
    EXPECT_EQ(r.exit_code, 0);
    auto j = nlohmann::json::parse(r.out);
    ASSERT_EQ(j["exponents"].size(), 4u);
    std::vector<int> primes;
    for (const auto& e : j["exponents"]) {
        primes.push_back(e["prime"]);
        EXPECT_EQ(e["min_exponent"], 2);
        EXPECT_EQ(e["exact"], false);
    }
    EXPECT_EQ(primes, (std::vector<int>{2, 3, 7, 43}));
}

TEST(Cli, CarmichaelAssumption) {
    auto r = run("carmichael --assume 3:3! --dcap 1000000 --format json");
    EXPECT_EQ(r.exit_code, 0);
    auto j = nlohmann::json::parse(r.out);
    bool has19 = false, exact3 = false;
    for (const auto& e : j["exponents"]) {
        if (e["prime"] == 19) has19 = true;
        if (e["prime"] == 3) {
            EXPECT_EQ(e["min_exponent"], 3);
            exact3 = e["exact"];
        }
    }
    EXPECT_TRUE(has19);
    EXPECT_TRUE(exact3);
    EXPECT_EQ(run("carmichael --assume 4:2").exit_code, 2);
}

TEST(Cli, ThreadCountDoesNotChangeBytes) {
    std::string args = "count --rule carmichael2 --limit 300000";
    auto a = run(args, "PSV_THREADS=1");
    auto b = run(args, "PSV_THREADS=4");
    EXPECT_EQ(a.exit_code, 0);
    EXPECT_EQ(a.out, b.out);

    std::string cert = "certify --rule omit:3 --limit 100000 --y 5 --power 2 "
                       "--ncap 10000";
    auto c1 = run(cert, "PSV_THREADS=1");
    auto c4 = run(cert, "PSV_THREADS=4");
    EXPECT_EQ(c1.exit_code, 0);
    EXPECT_EQ(c1.out, c4.out);
}

TEST(Cli, ConfigFileProvidesDefaults) {
    auto tmp = std::filesystem::temp_directory_path() / "psv_cli_config.ini";
    {
        std::ofstream f(tmp);
        f << "format=json\n";
    }
    auto r = run("--config " + tmp.string() +
                 " enumerate --rule omit:3 --limit 47");
    EXPECT_EQ(r.exit_code, 0);
    auto j = nlohmann::json::parse(r.out);
    EXPECT_EQ(j["count"], 7);
    std::filesystem::remove(tmp);
}

TEST(Cli, LemmasSuiteOnP3) {
    auto r = run(
        "lemmas --rule omit:3 --limit 200000 --y 5 --ncap 100000 --format json");
    EXPECT_EQ(r.exit_code, 0) << r.out;
    auto j = nlohmann::json::parse(r.out);
    EXPECT_EQ(j["schema"], 1);
    EXPECT_TRUE(j["all_pass"].get<bool>());
    EXPECT_GE(j["checks"].size(), 6u);
}
