#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <json.hpp>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <sys/wait.h>

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

const char* TOOL = SINGMT_TOOL_PATH;

int run_tool(const std::string& args) {
    int st = std::system((std::string(TOOL) + " " + args + " >/dev/null 2>&1").c_str());
    REQUIRE(st != -1);
    return WIFEXITED(st) ? WEXITSTATUS(st) : -1;
}

fs::path fresh_dir(const std::string& name) {
    fs::path d = fs::path("cli_tmp") / name;
    fs::remove_all(d);
    fs::create_directories(d);
    return d;
}

fs::path write_config(const fs::path& dir, const json& j) {
    fs::path p = dir / "config.json";
    std::ofstream(p) << j.dump(2) << "\n";
    return p;
}

json read_report(const fs::path& dir) {
    std::ifstream f(dir / "report.json");
    REQUIRE(f.good());
    return json::parse(f);
}

std::string slurp(const fs::path& p) {
    std::ifstream f(p);
    std::stringstream ss;
    ss << f.rdbuf();
    return ss.str();
}

json pair_config(double a1, double a2) {
    return {{"singularities",
             json::array({{{"point", {0, 0, 1}}, {"alpha", a1}},
                          {{"point", {0, 0, -1}}, {"alpha", a2}}})}};
}

const double PI = 3.14159265358979323846;

}  // namespace

TEST_CASE("analyze reports the degree windows of the smooth case") {
    fs::path d = fresh_dir("analyze_smooth");
    json cfg = {{"singularities", json::array()},
                {"rho_sweep", {{"start", 4 * PI}, {"stop", 12 * PI}, {"count", 3}}}};
    fs::path c = write_config(d, cfg);
    CHECK(run_tool("analyze --config " + c.string() + " --out " + d.string()) == 0);
    json rep = read_report(d);
    CHECK(rep["command"] == "analyze");
    auto rows = rep["degree_table"];
    REQUIRE(rows.size() == 3);
    CHECK(rows[0]["degree"] == 1);
    CHECK(rows[1]["degree"].is_null());
    CHECK(rows[1].contains("note"));
    CHECK(rows[2]["degree"] == -1);
    // integer critical thresholds below the cutoff
    auto gam = rep["gamma_over_8pi"];
    REQUIRE(gam.size() >= 2);
    CHECK(gam[0].get<double>() == doctest::Approx(1.0));
    CHECK(gam[1].get<double>() == doctest::Approx(2.0));
}

TEST_CASE("analyze covers the guaranteed existence window") {
    fs::path d = fresh_dir("analyze_pair");
    json cfg = pair_config(0.6, 0.9);
    cfg["rho"] = 12 * PI;
    fs::path c = write_config(d, cfg);
    CHECK(run_tool("analyze --config " + c.string() + " --out " + d.string()) == 0);
    json rep = read_report(d);
    auto rows = rep["degree_table"];
    REQUIRE(rows.size() == 1);
    CHECK(rows[0]["verdict"] == "EXISTS");
    CHECK(rows[0]["degree"].get<long long>() >= 1);
}

TEST_CASE("malformed configs exit with the config error code and write nothing") {
    fs::path d = fresh_dir("bad_config");
    fs::path c = d / "config.json";
    std::ofstream(c) << "{ not json\n";
    CHECK(run_tool("analyze --config " + c.string() + " --out " + d.string() + "/out") == 2);
    CHECK_FALSE(fs::exists(d / "out" / "report.json"));

    fs::path d2 = fresh_dir("bad_field");
    json cfg = {{"singularities", json::array({{{"point", {0, 0, 1}}}})}};  // alpha missing
    fs::path c2 = write_config(d2, cfg);
    CHECK(run_tool("analyze --config " + c2.string() + " --out " + d2.string() + "/out") == 2);

    CHECK(run_tool("analyze --config does_not_exist.json") == 2);
}

TEST_CASE("degenerate critical data exits with its own code but still reports") {
    fs::path d = fresh_dir("degenerate");
    json cfg = pair_config(1.0, 1.0);
    fs::path c = write_config(d, cfg);
    CHECK(run_tool("morse --config " + c.string() + " --out " + d.string()) == 3);
    json rep = read_report(d);
    CHECK(rep["degenerate"] == true);
}

TEST_CASE("solve writes the field and a converged report") {
    fs::path d = fresh_dir("solve_trivial");
    json cfg = {{"singularities", json::array()}, {"rho", 4 * PI}};
    fs::path c = write_config(d, cfg);
    CHECK(run_tool("solve --config " + c.string() + " --out " + d.string()) == 0);
    json rep = read_report(d);
    auto runs = rep["solves"];
    REQUIRE(runs.size() == 1);
    CHECK(runs[0]["status"] == "Converged");
    CHECK(runs[0]["residual_sup"].get<double>() <= runs[0]["tol_res"].get<double>());
    CHECK(std::abs(runs[0]["J"].get<double>()) < 1e-9);
    CHECK(fs::exists(d / "u.csv"));
    // the trivial weight has the trivial minimizer: every field value is tiny
    std::ifstream f(d / "u.csv");
    std::string line;
    std::getline(f, line);
    CHECK(line == "theta,phi,value");
    double worst = 0;
    while (std::getline(f, line)) {
        auto pos = line.rfind(',');
        worst = std::max(worst, std::abs(std::strtod(line.c_str() + pos + 1, nullptr)));
    }
    CHECK(worst < 1e-6);
}

TEST_CASE("stalled solves exit with the iteration-limit code") {
    fs::path d = fresh_dir("solve_stall");
    json cfg = {{"singularities", json::array({{{"point", {0, 0, 1}}, {"alpha", 1.0}}})},
                {"rho", 8 * PI},
                {"solver", {{"max_iter", 200}}}};
    fs::path c = write_config(d, cfg);
    CHECK(run_tool("solve --config " + c.string() + " --out " + d.string()) == 4);
    json rep = read_report(d);
    CHECK(rep["solves"][0]["status"] == "MaxIter");
}

TEST_CASE("reruns with one seed are byte-identical") {
    fs::path da = fresh_dir("repro_a"), db = fresh_dir("repro_b");
    json cfg = pair_config(0.6, 0.9);
    cfg["rho"] = 6 * PI;
    cfg["solver"] = {{"init_noise", 0.3}};
    cfg["seed"] = 12345;
    fs::path c = write_config(da, cfg);
    CHECK(run_tool("solve --config " + c.string() + " --out " + da.string()) == 0);
    CHECK(run_tool("solve --config " + c.string() + " --out " + db.string()) == 0);
    CHECK(slurp(da / "report.json") == slurp(db / "report.json"));
    CHECK(slurp(da / "u.csv") == slurp(db / "u.csv"));
}

TEST_CASE("seed overrides on the command line are recorded") {
    fs::path d = fresh_dir("seed_override");
    json cfg = {{"singularities", json::array()}, {"rho", 4 * PI}, {"seed", 1}};
    fs::path c = write_config(d, cfg);
    CHECK(run_tool("solve --config " + c.string() + " --out " + d.string() + " --seed 77") == 0);
    json rep = read_report(d);
    CHECK(rep["config"]["seed"] == 77);
}

TEST_CASE("radial solve reports both stages") {
    fs::path d = fresh_dir("radial");
    json cfg = pair_config(1.0, 1.0);
    cfg["rho"] = 4 * PI;
    fs::path c = write_config(d, cfg);
    CHECK(run_tool("radial --config " + c.string() + " --out " + d.string()) == 0);
    json rep = read_report(d);
    CHECK(rep["lifted"]["status"] == "Converged");
    double j1 = rep["radial"]["J_radial_1d"].get<double>();
    double j2 = rep["lifted"]["J"].get<double>();
    CHECK(std::abs(j1 - j2) < 1e-4);
    CHECK(fs::exists(d / "profile.csv"));
    CHECK(fs::exists(d / "u.csv"));
}

TEST_CASE("sharp-constant probe rows approach the dilation limit") {
    fs::path d = fresh_dir("onofri");
    json cfg = {{"singularities", json::array({{{"point", {0, 0, 1}}, {"alpha", 1.0}}})}};
    cfg["onofri"] = {{"t_values", {1.0, 2.0, 4.0}}};
    fs::path c = write_config(d, cfg);
    CHECK(run_tool("onofri --config " + c.string() + " --out " + d.string()) == 0);
    json rep = read_report(d);
    auto rows = rep["dilation_rows"];
    REQUIRE(rows.size() == 3);
    double prev = 1e300;
    for (const auto& row : rows) {
        double gap = row["gap_sharp"].get<double>();
        CHECK(gap < prev);
        CHECK(gap > -1e-6);
        CHECK(row["exp_mass"].get<double>() ==
              doctest::Approx(4 * PI).epsilon(1e-4));
        CHECK(std::abs(row["J_onofri"].get<double>()) < 5e-3);
        prev = gap;
    }
}

TEST_CASE("blow-up search lists critical configurations") {
    fs::path d = fresh_dir("blowup");
    json cfg = {{"singularities",
                 json::array({{{"point", {0, 0, 1}}, {"alpha", 0.7}},
                              {{"point", {1, 0, 0}}, {"alpha", 0.4}}})}};
    cfg["blowup"] = {{"k", 1}, {"n_starts", 16}};
    fs::path c = write_config(d, cfg);
    CHECK(run_tool("blowup --config " + c.string() + " --out " + d.string()) == 0);
    json rep = read_report(d);
    auto rows = rep["configurations"];
    REQUIRE(rows.size() >= 1);
    for (const auto& row : rows)
        CHECK(row["grad_norm"].get<double>() < row["tol_grad"].get<double>());
}

TEST_CASE("critical point scan reports the two-well counts") {
    fs::path d = fresh_dir("morse_counts");
    json cfg = {{"singularities",
                 json::array({{{"point", {0, 0, 1}}, {"alpha", 0.7}},
                              {{"point", {1, 0, 0}}, {"alpha", 0.4}}})},
                {"analyze", {{"morse", true}}}};
    fs::path c = write_config(d, cfg);
    CHECK(run_tool("morse --config " + c.string() + " --out " + d.string()) == 0);
    json rep = read_report(d);
    CHECK(rep["counts"]["r"] == 1);
    CHECK(rep["degenerate"] == false);
    REQUIRE(rep["critical_points"].size() == 2);
}

TEST_CASE("unknown verbs are rejected by the argument parser") {
    CHECK(run_tool("frobnicate --config x.json") != 0);
    CHECK(run_tool("") != 0);
}
