#include <gtest/gtest.h>

#include <cstdio>
#include <filesystem>
#include <sys/wait.h>

#include "fixtures.hpp"
#include "fmx/commands.hpp"
#include "fmx/json_io.hpp"

#ifndef FMX_EXPLORER_PATH
#error "FMX_EXPLORER_PATH must name the explorer binary"
#endif

using namespace fmx;
namespace fs = std::filesystem;

namespace {

struct Run {
    int status = -1;
    std::string out;
};

Run run(const std::string& args) {
    const std::string cmd = std::string(FMX_EXPLORER_PATH) + " " + args + " 2>/dev/null";
    Run r;
    FILE* p = popen(cmd.c_str(), "r");
    if (!p) return r;
    char buf[4096];
    for (std::size_t n; (n = fread(buf, 1, sizeof buf, p)) > 0;) r.out.append(buf, n);
    const int st = pclose(p);
    r.status = WIFEXITED(st) ? WEXITSTATUS(st) : -1;
    return r;
}

std::string inputs(const std::string& stem) {
    return "--data " + fixture_path(stem + ".data") + " --names " + fixture_path(stem + ".names");
}

fs::path temp(const std::string& name) {
    auto dir = fs::temp_directory_path() / "fmx_cli_test";
    fs::create_directories(dir);
    return dir / name;
}

}  // namespace

TEST(Cli, ProjectIsBitIdenticalAcrossRuns) {
    const auto a = temp("a.tsv"), b = temp("b.tsv");
    ASSERT_EQ(run("project " + inputs("heart") + " --seed 7 --out " + a.string()).status, 0);
    ASSERT_EQ(run("project " + inputs("heart") + " --seed 7 --out " + b.string()).status, 0);
    EXPECT_EQ(read_file(a), read_file(b));
    const auto p = parse_coords_tsv(read_file(a));
    EXPECT_EQ(p.size(), 23u);
    EXPECT_EQ(p.dims, 2u);
}

TEST(Cli, ProjectToStdoutMatchesLibrary) {
    const auto r = run("project " + inputs("heart") + " --seed 3 --k 3 --out -");
    ASSERT_EQ(r.status, 0);
    ProjectCommand cmd;
    cmd.projection.seed = 3;
    cmd.projection.k = 3;
    const auto d = load_dataset_files(fixture_path("heart.data"), fixture_path("heart.names"));
    const auto o = run_project(d, cmd);
    EXPECT_EQ(r.out, coords_tsv(o.dataset, o.projection));
    EXPECT_EQ(r.out.substr(0, r.out.find('\n')), "row_id\tx1\tx2\tx3\tclass");
}

TEST(Cli, ProjectImputesOrRefuses) {
    EXPECT_NE(run("project " + inputs("animals") + " --impute const:x --out -").status, 0);
    const auto r = run("project " + inputs("animals") + " --impute mean --out -");
    ASSERT_EQ(r.status, 0);
    EXPECT_EQ(parse_coords_tsv(r.out).size(), 7u);
    const auto dropped = run("project " + inputs("animals") + " --out -");
    ASSERT_EQ(dropped.status, 0);
    EXPECT_EQ(parse_coords_tsv(dropped.out).size(), 4u);
}

TEST(Cli, StatsWithAndWithoutCoords) {
    const auto coords = temp("s.tsv");
    ASSERT_EQ(run("project " + inputs("heart") + " --out " + coords.string()).status, 0);
    auto r = run("stats " + inputs("heart") + " --coords " + coords.string() + " --out -");
    ASSERT_EQ(r.status, 0);
    auto j = json::parse(r.out);
    EXPECT_EQ(j["rows"], 23);
    EXPECT_FALSE(j["clusters"]["projected"].is_null());
    r = run("stats " + inputs("heart") + " --out -");
    j = json::parse(r.out);
    EXPECT_TRUE(j["clusters"]["projected"].is_null());
    EXPECT_EQ(j["clusters"]["clusters"].size(), 2u);
}

TEST(Cli, ExtractRowsAndSql) {
    auto r = run("extract " + inputs("heart") +
                 " --where age:ge:30 --where age:le:50 --columns age,sex --sort age:desc --emit-sql");
    ASSERT_EQ(r.status, 0);
    EXPECT_EQ(r.out, "select age, sex\nfrom data\nwhere (age >= 30) and (age <= 50)\norder by age desc\n");
    r = run("extract " + inputs("heart") + " --where age:ge:30 --where age:le:50 --columns age --sort age:desc");
    ASSERT_EQ(r.status, 0);
    EXPECT_EQ(r.out.substr(0, r.out.find('\n')), "row_id,age");
    EXPECT_NE(r.out.find("19,48\n13,47\n5,46\n"), std::string::npos);
    EXPECT_NE(run("extract " + inputs("heart") + " --where age:starting:4").status, 0);
}

TEST(Cli, ConvertRoundTrips) {
    const auto stem = temp("copy");
    ASSERT_EQ(run("convert " + inputs("heart") + " --out-format data_names --out " + stem.string()).status, 0);
    const auto back = load_dataset_files(stem.string() + ".data", stem.string() + ".names");
    EXPECT_EQ(back.rows, heart().rows);
    const auto html = run("convert " + inputs("heart") + " --out-format html --out -");
    ASSERT_EQ(html.status, 0);
    EXPECT_NE(html.out.find("<table"), std::string::npos);
}

TEST(Cli, BadInvocations) {
    EXPECT_NE(run("").status, 0);
    EXPECT_NE(run("project --data x").status, 0);
    EXPECT_NE(run("project --data /nonexistent --names /nonexistent --out -").status, 0);
    EXPECT_NE(run("project " + inputs("heart") + " --k 0 --out -").status, 0);
}
