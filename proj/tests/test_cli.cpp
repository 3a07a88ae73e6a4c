#include "coilopt/geometry/loft.hpp"
#include "coilopt/geometry/stl.hpp"
#include "coilopt/io/campaign_json.hpp"

#include <gtest/gtest.h>

#include <sys/wait.h>

#include <cstdio>
#include <filesystem>
#include <string>

namespace fs = std::filesystem;
using namespace coilopt;

namespace {

struct Result {
    int code = -1;
    std::string out;
    std::string err;
};

fs::path work_dir() {
    static const fs::path dir = [] {
        auto d = fs::temp_directory_path() / ("coilopt_cli_" + std::to_string(::getpid()));
        fs::create_directories(d);
        return d;
    }();
    return dir;
}

Result cli(const std::string& args) {
    const auto err_file = work_dir() / "stderr.txt";
    const std::string cmd = std::string(COILOPT_CLI) + " " + args + " 2>" + err_file.string();
    Result r;
    FILE* p = ::popen(cmd.c_str(), "r");
    if (!p) return r;
    char buf[4096];
    std::size_t n;
    while ((n = std::fread(buf, 1, sizeof buf, p)) > 0) r.out.append(buf, n);
    const int status = ::pclose(p);
    r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
    r.err = io::read_file(err_file.string());
    return r;
}

std::string path(const std::string& name) { return (work_dir() / name).string(); }

const std::string kSmallRun = "--n-c 3 --n-l 1 --budget 40 --max-iterations 3 --seed 5";

}  // namespace

TEST(Cli, UsageErrorsExitOne) {
    EXPECT_EQ(cli("").code, 1);
    EXPECT_EQ(cli("bogus").code, 1);
    EXPECT_EQ(cli("run --budget 5").code, 1);
    EXPECT_EQ(cli("run --checkpoint x.json --space helix").code, 1);
    EXPECT_EQ(cli("fit-rtd").code, 1);
    EXPECT_EQ(cli("--help").code, 0);
}

TEST(Cli, FitRtdRecoversBundledTrace) {
    const auto r = cli("fit-rtd " + std::string(COILOPT_DATA) + "/tanks_n10.csv --curve-out " + path("fit.csv"));
    ASSERT_EQ(r.code, 0) << r.err;
    const auto j = io::OrderedJson::parse(r.out);
    EXPECT_NEAR(j["n_star"].get<double>(), 10.0, 0.1);
    EXPECT_NEAR(j["f"].get<double>(), -10.0, 0.1);
    EXPECT_TRUE(fs::exists(path("fit.csv")));
}

TEST(Cli, RuntimeErrorsExitTwoWithJson) {
    io::write_file(path("bad.csv"), "t,c\n0,1\n");
    const auto r = cli("fit-rtd " + path("bad.csv"));
    EXPECT_EQ(r.code, 2);
    const auto j = io::OrderedJson::parse(r.err);
    EXPECT_EQ(j["error"], "invalid_argument");
    EXPECT_NE(j["message"].get<std::string>().find("time"), std::string::npos);

    io::write_file(path("params.json"), "[9, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0]");
    const auto g = cli("geometry --params " + path("params.json"));
    EXPECT_EQ(g.code, 2);
    EXPECT_NE(io::OrderedJson::parse(g.err)["message"].get<std::string>().find("delta_rho_0"), std::string::npos);
}

TEST(Cli, NominalGeometryMatchesDocumentedTessellation) {
    const auto stl = path("nominal.stl");
    const auto r = cli("geometry --nominal --validate --out " + stl);
    ASSERT_EQ(r.code, 0) << r.err;
    const auto j = io::OrderedJson::parse(r.out);
    const auto expected = geometry::circular_triangle_count(geometry::NominalCoil{}, geometry::Tessellation{});
    EXPECT_EQ(j["triangles"].get<std::size_t>(), expected);
    EXPECT_EQ(j["expected_triangles"].get<std::size_t>(), expected);
    EXPECT_TRUE(j["report"]["valid"].get<bool>());
    EXPECT_EQ(geometry::parse_stl(io::read_file(stl)).size(), expected);
}

TEST(Cli, GeometryReadsCsvParams) {
    io::write_file(path("params.csv"), "r\n3\n3.5\n2.5\n");
    const auto r = cli("geometry --space cross-section --n-c 3 --n-l 1 --params " + path("params.csv"));
    ASSERT_EQ(r.code, 0) << r.err;
    EXPECT_TRUE(io::OrderedJson::parse(r.out)["report"]["watertight"].get<bool>());
}

TEST(Cli, DoeIsDeterministic) {
    const auto a = cli("doe --n-c 4 --n-l 2 --seed 9");
    const auto b = cli("doe --n-c 4 --n-l 2 --seed 9");
    ASSERT_EQ(a.code, 0);
    EXPECT_EQ(a.out, b.out);
    const auto j = io::OrderedJson::parse(a.out);
    EXPECT_EQ(j["points"].size(), 10u);
    EXPECT_EQ(j["points"][0]["x"].size(), 8u);
}

TEST(Cli, RunThenResumeMatchesUninterrupted) {
    const auto full = path("full.json"), part = path("part.json");
    fs::remove(full);
    fs::remove(part);
    const auto a = cli("run " + kSmallRun + " --checkpoint " + full);
    ASSERT_EQ(a.code, 0) << a.err;
    const auto b = cli("run " + kSmallRun + " --stop-after 12 --checkpoint " + part);
    ASSERT_EQ(b.code, 2);
    EXPECT_EQ(io::OrderedJson::parse(b.err)["error"], "interrupted");
    EXPECT_EQ(io::load_campaign(part).history.size(), 12u);
    const auto c = cli("resume --checkpoint " + part);
    ASSERT_EQ(c.code, 0) << c.err;
    EXPECT_EQ(io::read_file(part), io::read_file(full));

    // refusing to clobber, and resuming a finished campaign is a no-op
    EXPECT_EQ(cli("run " + kSmallRun + " --checkpoint " + full).code, 2);
    EXPECT_EQ(cli("resume --checkpoint " + full).code, 0);
    EXPECT_EQ(io::read_file(part), io::read_file(full));

    const auto an = cli("analyze --checkpoint " + full + " --out-dir " + path("analysis"));
    ASSERT_EQ(an.code, 0) << an.err;
    for (const char* f : {"trace.csv", "embedding.csv", "lengthscales.csv", "lengthscales.svg", "variability.csv",
                          "lengthscale_histogram.svg"})
        EXPECT_TRUE(fs::exists(work_dir() / "analysis" / f)) << f;
}

TEST(Cli, CorruptCheckpointRejected) {
    io::write_file(path("corrupt.json"), R"({"schema_version": 99})");
    const auto r = cli("resume --checkpoint " + path("corrupt.json"));
    EXPECT_EQ(r.code, 2);
    EXPECT_EQ(io::OrderedJson::parse(r.err)["error"], "schema_error");
}
