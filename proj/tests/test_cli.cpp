// Drives the cdpauth binary end to end.
#include <gtest/gtest.h>
#include <sys/wait.h>

#include <array>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <string>

#include <json.hpp>

namespace fs = std::filesystem;

namespace {

struct Result {
    int code;
    std::string out;
};

Result run(const std::string& args, const std::string& env = "") {
    const std::string cmd = env + " \"" CDPAUTH_PATH "\" " + args + " 2>/dev/null";
    FILE* pipe = popen(cmd.c_str(), "r");
    std::string out;
    std::array<char, 4096> buf;
    while (std::size_t n = std::fread(buf.data(), 1, buf.size(), pipe)) out.append(buf.data(), n);
    const int status = pclose(pipe);
    return {WIFEXITED(status) ? WEXITSTATUS(status) : -1, out};
}

class Cli : public ::testing::Test {
protected:
    void SetUp() override {
        dir = fs::temp_directory_path() / ("cdp_cli_" + std::string(::testing::UnitTest::GetInstance()->current_test_info()->name()));
        fs::remove_all(dir);
        fs::create_directories(dir);
    }
    std::string p(const std::string& rel) const { return (dir / rel).string(); }
    fs::path dir;
};

}  // namespace

TEST_F(Cli, UsageErrorsExitTwo) {
    EXPECT_EQ(run("").code, 2);
    EXPECT_EQ(run("frobnicate").code, 2);
    EXPECT_EQ(run("gen --p 1.5 --out " + p("t")).code, 2);
    EXPECT_EQ(run("auth --codebook " + p("missing.json") + " --template x --probe y").code, 2);
    EXPECT_EQ(run("print --in " + p("nowhere")).code, 2);
    EXPECT_EQ(run("stability --sizes 5,900 --reference 10 --out " + p("s")).code, 2);
    EXPECT_EQ(run("--help").code, 0);
}

TEST_F(Cli, UnwritableOutputIsRuntimeError) {
    std::ofstream(p("file")) << "x";
    EXPECT_EQ(run("gen --n 1 --L 8 --out " + p("file/sub")).code, 1);
}

TEST_F(Cli, EnvironmentSetsDefaultOutput) {
    ASSERT_EQ(run("gen --n 2 --L 8", "CDP_OUT_DIR=" + p("env")).code, 0);
    EXPECT_TRUE(fs::exists(dir / "env" / "templates" / "t_00001.pgm"));
    EXPECT_TRUE(fs::exists(dir / "env" / "templates" / "manifest.json"));
}

TEST_F(Cli, PipelineAuthenticates) {
    ASSERT_EQ(run("--seed 3 gen --n 12 --L 24 --out " + p("t")).code, 0);
    ASSERT_EQ(run("--seed 4 print --preset A --in " + p("t") + " --out " + p("xa")).code, 0);
    ASSERT_EQ(run("--seed 5 attack --reprint B --in " + p("xa") + " --out " + p("f")).code, 0);
    ASSERT_EQ(run("train --templates " + p("t") + " --printed " + p("xa") + " --out " + p("cb.json")).code, 0);
    EXPECT_TRUE(fs::exists(dir / "xa" / "t_00000.json"));

    const auto cb = nlohmann::json::parse(std::ifstream(p("cb.json")));
    EXPECT_EQ(cb.at("h"), 3);
    EXPECT_EQ(cb.at("estimator_id"), "otsu-mv");

    const std::string common = "--json auth --codebook " + p("cb.json") + " --template " + p("t/t_00000.pgm") +
                               " --cal-templates " + p("t") + " --cal-originals " + p("xa") + " --cal-fakes " + p("f");
    const auto orig = run(common + " --probe " + p("xa/t_00000.pgm"));
    ASSERT_EQ(orig.code, 0);
    const auto jo = nlohmann::json::parse(orig.out);
    EXPECT_EQ(jo.at("metric"), "M-LLS");
    EXPECT_EQ(jo.at("threshold_source"), "calibrated");
    const auto fake = run(common + " --probe " + p("f/t_00000.pgm"));
    ASSERT_EQ(fake.code, 0);
    EXPECT_GT(jo.at("score").get<double>(), nlohmann::json::parse(fake.out).at("score").get<double>());

    const auto fixed = run("auth --codebook " + p("cb.json") + " --template " + p("t/t_00000.pgm") + " --probe " +
                           p("xa/t_00000.pgm") + " --metric HAMM --threshold 0.2");
    EXPECT_EQ(fixed.code, 0);
    EXPECT_NE(fixed.out.find("original"), std::string::npos);
    EXPECT_EQ(run("auth --codebook " + p("cb.json") + " --template " + p("t/t_00000.pgm") + " --probe " +
                  p("xa/t_00000.pgm"))
                  .code,
              2);
}

TEST_F(Cli, TrainCountMismatch) {
    ASSERT_EQ(run("gen --n 3 --L 8 --out " + p("t")).code, 0);
    ASSERT_EQ(run("print --preset B --in " + p("t") + " --out " + p("x")).code, 0);
    fs::remove(dir / "x" / "t_00002.pgm");
    EXPECT_EQ(run("train --templates " + p("t") + " --printed " + p("x") + " --out " + p("cb.json")).code, 2);
}

TEST_F(Cli, SeedsAreReproducible) {
    ASSERT_EQ(run("--seed 9 gen --n 2 --L 8 --out " + p("a")).code, 0);
    ASSERT_EQ(run("--seed 9 gen --n 2 --L 8 --out " + p("b")).code, 0);
    ASSERT_EQ(run("--seed 10 gen --n 2 --L 8 --out " + p("c")).code, 0);
    auto bytes = [](const fs::path& f) {
        std::ifstream in(f, std::ios::binary);
        return std::string(std::istreambuf_iterator<char>(in), {});
    };
    EXPECT_EQ(bytes(dir / "a" / "t_00001.pgm"), bytes(dir / "b" / "t_00001.pgm"));
    EXPECT_NE(bytes(dir / "a" / "t_00001.pgm"), bytes(dir / "c" / "t_00001.pgm"));
    EXPECT_EQ(bytes(dir / "a" / "manifest.json"), bytes(dir / "b" / "manifest.json"));
}

TEST_F(Cli, EvalAndStabilityWriteReports) {
    std::ofstream(p("cfg.txt")) << "schema_version = 1\nn_templates = 12\nL = 16\nn_train = 4\nn_val = 4\nn_test = 4\n"
                                   "seeds = 1\nmetrics = LLS, M-LLS, HAMM\n";
    const auto r = run("--json eval --config " + p("cfg.txt") + " --out " + p("e"));
    ASSERT_EQ(r.code, 0);
    EXPECT_TRUE(nlohmann::json::parse(r.out).contains("total_average"));
    for (const char* f : {"runs.csv", "auc_table.csv", "summary.json", "roc.csv", "manifest.json", "config.txt",
                          "roc_xA_M-LLS.svg"})
        EXPECT_TRUE(fs::exists(dir / "e" / f)) << f;
    std::ofstream(p("bad.txt")) << "schema_version = 1\nbogus = 1\n";
    EXPECT_EQ(run("eval --config " + p("bad.txt") + " --out " + p("e2")).code, 2);

    ASSERT_EQ(run("stability --sizes 1,4 --reference 8 --repeats 2 --L 16 --out " + p("s")).code, 0);
    EXPECT_TRUE(fs::exists(dir / "s" / "stability.csv"));
    EXPECT_TRUE(fs::exists(dir / "s" / "stability.svg"));
}
