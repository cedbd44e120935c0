#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <algorithm>

#include "cli.hpp"
#include "rgflow/table.hpp"

namespace fs = std::filesystem;

namespace {

struct Run {
    int code;
    std::string out;
    std::string err;
};

Run invoke(std::vector<std::string> args) {
    args.insert(args.begin(), "rgflow");
    std::vector<const char*> argv;
    for (const auto& a : args) argv.push_back(a.c_str());
    std::ostringstream out, err;
    const int code = rgflow::cli::run(static_cast<int>(argv.size()), argv.data(), out, err);
    return {code, out.str(), err.str()};
}

fs::path scratch(const std::string& name) {
    const fs::path dir = fs::temp_directory_path() / "rgflow_cli_tests";
    fs::create_directories(dir);
    const fs::path p = dir / name;
    fs::remove_all(p);
    return p;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

}  // namespace

TEST_CASE("tower command prints the ladder with ratios") {
    const auto r = invoke({"tower", "--alpha", "2.25", "--l", "0", "--calibrate", "-1e-4", "--lambda0", "1", "--n", "400"});
    REQUIRE(r.code == 0);
    std::istringstream in(r.out);
    const auto t = rgflow::io::read_csv(in);
    CHECK(t.kind == "tower");
    CHECK(t.columns[2].name == "ratio");
    CHECK(t.rows.size() >= 4);
}

TEST_CASE("flow command reports the Landau pole") {
    const auto r = invoke({"flow", "--alpha", "2.25", "--l", "1", "--f0", "-0.4", "--lambda-span", "100"});
    REQUIRE(r.code == 0);
    CHECK(r.out.find("pole_lo") != std::string::npos);
    CHECK(r.out.find("pole_hi") != std::string::npos);

    const auto j = invoke({"flow", "--alpha", "2.25", "--l", "1", "--f0", "-0.4", "--lambda-span", "100", "--format",
                           "json", "--method", "numeric"});
    REQUIRE(j.code == 0);
    const auto doc = nlohmann::json::parse(j.out);
    CHECK(doc["inputs"]["alpha"] == 2.25);
    CHECK(doc["inputs"]["method"] == "numeric");
    CHECK(std::exp(doc["pole"]["log_lo"].get<double>()) == doctest::Approx(17.4117).epsilon(1e-4));
}

TEST_CASE("validation failures exit with 2 and write nothing") {
    const auto out = scratch("missing.csv");
    const auto r = invoke({"flow", "--alpha", "2.25", "--l", "0", "--lambda-span", "2", "--out", out.string()});
    CHECK(r.code == rgflow::cli::kExitValidation);
    CHECK(r.err.rfind("rgflow: error=validation reason=\"", 0) == 0);
    CHECK(std::count(r.err.begin(), r.err.end(), '\n') == 1);
    CHECK_FALSE(fs::exists(out));

    CHECK(invoke({"flow", "--alpha", "-1", "--l", "0", "--f0", "1", "--lambda-span", "2"}).code == 2);
    CHECK(invoke({"tower", "--alpha", "2.25", "--l", "2", "--f0", "-1"}).code == 2);
    CHECK(invoke({"nonsense"}).code == 2);
    CHECK(invoke({}).code == 2);
}

TEST_CASE("numerical failures exit with 3") {
    const auto out = scratch("numerical.csv");
    const auto r = invoke({"independence", "--alpha", "2.25", "--l", "2", "--f0", "-8", "--lambda1", "0.5", "--out",
                           out.string()});
    CHECK(r.code == rgflow::cli::kExitNumerical);
    CHECK(r.err.rfind("rgflow: error=numerical reason=\"", 0) == 0);
    CHECK_FALSE(fs::exists(out));
    CHECK(invoke({"tower", "--alpha", "2.25", "--l", "0", "--f0", "-4", "--grid", "uniform", "--n", "40"}).code == 3);
}

TEST_CASE("config file supplies options the command line leaves out") {
    const auto cfg = scratch("run.cfg");
    {
        std::ofstream f(cfg);
        f << "# flow settings\nalpha = 2.25\nl = 1\nf0 = -8\nlambda-span = 2.718281828459045\npoints = 2\n";
    }
    const auto a = invoke({"flow", "--config", cfg.string()});
    REQUIRE(a.code == 0);
    CHECK(a.out.find("-1.6287878787") != std::string::npos);

    const auto b = invoke({"flow", "--config", cfg.string(), "--f0", "-0.75"});
    REQUIRE(b.code == 0);
    CHECK(b.out.find("sample,1,2.718281828459045,-0.75") != std::string::npos);

    CHECK(invoke({"flow", "--config", (cfg.parent_path() / "absent.cfg").string()}).code == 2);
}

TEST_CASE("outputs are byte-deterministic") {
    const std::vector<std::string> args{"staircase", "--alpha", "2.25", "--l", "0", "--f0", "-8", "--shells", "20"};
    const auto a = invoke(args);
    const auto b = invoke(args);
    REQUIRE(a.code == 0);
    CHECK(a.out == b.out);
}

TEST_CASE("figures go to the directory named in the environment") {
    const auto dir = scratch("figs");
    ::setenv("RGFLOW_OUTPUT_DIR", dir.string().c_str(), 1);
    const auto r = invoke({"figures"});
    ::unsetenv("RGFLOW_OUTPUT_DIR");
    REQUIRE(r.code == 0);
    for (const char* name : {"fig1.csv", "fig2.csv", "fig3.csv"}) {
        REQUIRE(fs::exists(dir / name));
        std::ifstream in(dir / name);
        const auto t = rgflow::io::read_csv(in);
        CHECK(t.kind == std::string(name).substr(0, 4));
        CHECK_FALSE(t.rows.empty());
    }
    const std::string first = slurp(dir / "fig1.csv");
    const auto dir2 = scratch("figs2");
    REQUIRE(invoke({"figures", "--out-dir", dir2.string(), "--format", "json"}).code == 0);
    const auto doc = nlohmann::json::parse(slurp(dir2 / "fig1.json"));
    CHECK(doc["kind"] == "fig1");
    CHECK(doc["inputs"]["alpha"] == 2.25);
    CHECK(doc["poles"].size() >= 1);

    REQUIRE(invoke({"figures", "--out-dir", dir.string()}).code == 0);
    CHECK(slurp(dir / "fig1.csv") == first);
}

TEST_CASE("remaining subcommands run") {
    CHECK(invoke({"beta", "--alpha", "2.25", "--l", "2", "--points", "5"}).code == 0);
    CHECK(invoke({"locus", "--alpha", "2.25", "--l-max", "3"}).code == 0);
    CHECK(invoke({"spectrum", "--alpha", "2.25", "--l", "0", "--f0", "-4", "--n", "100", "--panels", "5"}).code == 0);
    CHECK(invoke({"calibrate", "--alpha", "2.25", "--l", "0", "--target", "-1e-4"}).code == 0);
    CHECK(invoke({"independence", "--alpha", "2.25", "--l", "0", "--f0", "-8", "--lambda1", "0.108"}).code == 0);
    const auto help = invoke({"--help"});
    CHECK(help.code == 0);
    CHECK(help.out.find("staircase") != std::string::npos);
}
