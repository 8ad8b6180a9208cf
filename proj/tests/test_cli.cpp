#include <gtest/gtest.h>

#include <array>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <sys/wait.h>
#include <vector>

#include <json.hpp>

namespace {

struct Run {
    int code = -1;
    std::string out;
};

Run run(const std::string& args)
{
    const std::string cmd = std::string(TORSIONLAB_CLI_PATH) + " " + args + " 2>&1";
    Run r;
    FILE* p = popen(cmd.c_str(), "r");
    if (!p) return r;
    std::array<char, 4096> buf{};
    std::size_t n;
    while ((n = fread(buf.data(), 1, buf.size(), p)) > 0) r.out.append(buf.data(), n);
    const int status = pclose(p);
    r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
    return r;
}

std::vector<std::string> lines(const std::string& s)
{
    std::vector<std::string> out;
    std::istringstream is(s);
    for (std::string l; std::getline(is, l);) out.push_back(l);
    return out;
}

std::vector<std::string> split(const std::string& s)
{
    std::vector<std::string> out;
    std::istringstream is(s);
    for (std::string c; std::getline(is, c, ',');) out.push_back(c);
    return out;
}

// Header and data rows of a CSV with '#' metadata lines.
std::vector<std::vector<std::string>> table(const std::string& s)
{
    std::vector<std::vector<std::string>> t;
    for (const auto& l : lines(s))
        if (!l.empty() && l[0] != '#') t.push_back(split(l));
    return t;
}

std::string slurp(const std::filesystem::path& p)
{
    std::ifstream f(p);
    std::stringstream ss;
    ss << f.rdbuf();
    return ss.str();
}

std::filesystem::path scratch(const std::string& name)
{
    auto d = std::filesystem::temp_directory_path() / "torsionlab_cli_test";
    std::filesystem::create_directories(d);
    return d / name;
}

} // namespace

TEST(Cli, GlueCircleHappyPath)
{
    const auto r = run("glue circle --length 1.0");
    ASSERT_EQ(r.code, 0) << r.out;
    const auto t = table(r.out);
    ASSERT_EQ(t.size(), 2u);
    const std::vector<std::string> header = {"model", "L", "R", "alpha", "logT_Z", "logT_abs", "logT_rel", "T_f",
                                             "euler_term", "residual", "error_budget"};
    EXPECT_EQ(t[0], header);
    EXPECT_EQ(t[1][0], "circle");
    EXPECT_LT(std::abs(std::stod(t[1][9])), 1e-6);
    EXPECT_NEAR(std::stod(t[1][7]), -std::log(2.0), 1e-6);
    EXPECT_NE(r.out.find("# torsion_sign:"), std::string::npos);
    EXPECT_NE(r.out.find("# truncation_K: 10000"), std::string::npos);
}

TEST(Cli, TwistIsReducedAndIntegersRejected)
{
    const auto ok = run("glue torus --alpha 1.5");
    ASSERT_EQ(ok.code, 0) << ok.out;
    const auto t = table(ok.out);
    EXPECT_EQ(std::stod(t[1][3]), 0.5);
    EXPECT_NEAR(std::stod(t[1][5]), std::log(2.0), 1e-6);

    const auto bad = run("glue torus --alpha 1.0");
    EXPECT_EQ(bad.code, 2);
    EXPECT_NE(bad.out.find("acyclicity"), std::string::npos) << bad.out;
}

TEST(Cli, ValidationErrorsExitTwo)
{
    EXPECT_EQ(run("glue circle --length -1").code, 2);
    EXPECT_EQ(run("gap-scan --r 0").code, 2);
    EXPECT_EQ(run("parametrix-scan --piece sideways").code, 2);
    EXPECT_EQ(run("no-such-experiment").code, 2);
    EXPECT_EQ(run("").code, 2);
    EXPECT_EQ(run("--help").code, 0);
}

TEST(Cli, GapScanNegativeControlShowsPolynomialDecay)
{
    const auto json = scratch("gap.json");
    const auto r = run("gap-scan --alpha 0 --r 2,4,8 --json " + json.string());
    ASSERT_EQ(r.code, 0) << r.out;
    const auto t = table(r.out);
    ASSERT_EQ(t.size(), 4u);
    for (std::size_t i = 1; i < t.size(); ++i) EXPECT_GT(std::stoi(t[i][3]), 0);
    const auto j = nlohmann::json::parse(slurp(json));
    const double exponent = j["summary"]["fitted_exponent"];
    EXPECT_GT(exponent, 1.8);
    EXPECT_LT(exponent, 2.2);
    EXPECT_EQ(j["columns"].size(), 6u);
    EXPECT_TRUE(j["metadata"].contains("sequence_grading"));
}

TEST(Cli, ByteIdenticalOutput)
{
    const auto a = scratch("a.csv"), b = scratch("b.csv");
    ASSERT_EQ(run("sweep adiabatic --length 1 --length2 2.5 -o " + a.string()).code, 0);
    ASSERT_EQ(run("--threads 1 sweep adiabatic --length 1 --length2 2.5 -o " + b.string()).code, 0);
    const auto sa = slurp(a);
    EXPECT_FALSE(sa.empty());
    EXPECT_EQ(sa, slurp(b));
}

TEST(Cli, ConfigFileWithFlagOverride)
{
    const auto cfg = scratch("cfg.json");
    {
        std::ofstream f(cfg);
        f << R"({"glue": {"torus": {"alpha": 0.3, "a1": 2.0, "r": [0, 1]}}})";
    }
    const auto from_file = table(run("--config " + cfg.string() + " glue torus").out);
    ASSERT_EQ(from_file.size(), 3u);
    EXPECT_NEAR(std::stod(from_file[1][3]), 0.3, 1e-15);
    EXPECT_EQ(std::stod(from_file[2][2]), 1.0);

    const auto overridden = table(run("--config " + cfg.string() + " glue torus --alpha 0.25").out);
    ASSERT_EQ(overridden.size(), 3u);
    EXPECT_EQ(std::stod(overridden[1][3]), 0.25);
    EXPECT_NEAR(std::stod(overridden[1][5]), 0.5 * std::log(2.0), 1e-6);
}

TEST(Cli, OtherSubcommandsRun)
{
    const auto cm = run("cheeger-muller --alpha 0.25,0.5 --k 3,12");
    ASSERT_EQ(cm.code, 0) << cm.out;
    const auto t = table(cm.out);
    ASSERT_EQ(t.size(), 5u);
    for (std::size_t i = 1; i < t.size(); ++i) EXPECT_LT(std::abs(std::stod(t[i][5])), 1e-7);

    const auto sp = run("spectrum --kind circle --length 1 --alpha 0.25 --lambda-max 50");
    ASSERT_EQ(sp.code, 0) << sp.out;
    const auto s = table(sp.out);
    // (2 pi (k + 1/4))^2 <= 50 for k = -1, 0 in each degree
    ASSERT_EQ(s.size(), 5u);
    EXPECT_NEAR(std::stod(s[1][2]), std::pow(2 * M_PI * 0.25, 2), 1e-12);

    EXPECT_EQ(run("time-split --r 2").code, 0);
    EXPECT_EQ(run("parametrix-scan --r 2 --t 1 --no-duhamel").code, 0);
}
