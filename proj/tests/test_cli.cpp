#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "shellflow/steady.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct CmdResult {
    int exit_code = -1;
    std::string output;  // stdout + stderr
};

CmdResult run_cli(const std::string& args) {
    const std::string cmd = std::string(SHELLFLOW_BIN) + " " + args + " 2>&1";
    CmdResult r;
    FILE* pipe = popen(cmd.c_str(), "r");
    REQUIRE(pipe != nullptr);
    char buf[4096];
    while (size_t n = fread(buf, 1, sizeof buf, pipe)) r.output.append(buf, n);
    const int status = pclose(pipe);
    r.exit_code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
    return r;
}

fs::path fresh_dir(const std::string& name) {
    const fs::path p = fs::temp_directory_path() / ("shellflow_test_" + name);
    fs::remove_all(p);
    return p;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p);
    REQUIRE(in.good());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

std::vector<std::string> split_lines(const std::string& s) {
    std::vector<std::string> out;
    std::istringstream in(s);
    std::string line;
    while (std::getline(in, line)) out.push_back(line);
    return out;
}

}  // namespace

TEST_CASE("usage errors exit with code 1") {
    CHECK(run_cli("simulate --no-such-flag 1").exit_code == 1);
    CHECK(run_cli("bogus-subcommand").exit_code == 1);
    CHECK(run_cli("simulate --c 2 --nu -0.5 --out /tmp/never").exit_code == 1);
    // sweep without any nu specification
    CHECK(run_cli("sweep --c 2 --f0 1 --out /tmp/never2").exit_code == 1);
}

TEST_CASE("simulate writes series.csv with strictly increasing t") {
    const fs::path dir = fresh_dir("sim1");
    const CmdResult r = run_cli(
        "simulate --c 2 --nu 0.1 --f0 1 --shells 12 --t-end 5 --init zero --out " +
        dir.string());
    REQUIRE(r.exit_code == 0);
    REQUIRE(fs::exists(dir / "series.csv"));
    REQUIRE(fs::exists(dir / "manifest.json"));
    REQUIRE(fs::exists(dir / "final_state.json"));

    const auto lines = split_lines(slurp(dir / "series.csv"));
    REQUIRE(lines.size() > 2);
    CHECK(lines[0].rfind("t,E,H1_sq,injection,Pi_0", 0) == 0);
    double prev_t = -1.0;
    for (size_t i = 1; i < lines.size(); ++i) {
        const double t = std::stod(lines[i]);
        CHECK(t > prev_t);
        prev_t = t;
    }

    const json man = json::parse(slurp(dir / "manifest.json"));
    CHECK(man.contains("schema_version"));
    CHECK(man["params"]["nu"].get<double>() == 0.1);
    CHECK(man["checks"]["status"].get<std::string>() == "ok");
    CHECK(man["checks"]["min_amplitude"].get<double>() >=
          -1e-12 * man["checks"]["max_amplitude"].get<double>());
    fs::remove_all(dir);
}

TEST_CASE("simulate --init fixed-point stays on the fixed point") {
    const fs::path dir = fresh_dir("simfp");
    const CmdResult r = run_cli(
        "simulate --c 2 --nu 0.2 --f0 1 --shells 10 --t-end 5 "
        "--init fixed-point --full-state --out " +
        dir.string());
    REQUIRE(r.exit_code == 0);
    const json final_state = json::parse(slurp(dir / "final_state.json"));
    REQUIRE(final_state["a"].size() == 11);
    shellflow::ModelParams p;
    p.c = 2.0;
    p.nu = 0.2;
    p.f0 = 1.0;
    p.n_shells = 10;
    const shellflow::SteadyState st = shellflow::solve_fixed_point(p);
    for (size_t j = 0; j < 11; ++j)
        CHECK(std::fabs(final_state["a"][j].get<double>() - st.alpha[j]) < 1e-8);
    fs::remove_all(dir);
}

TEST_CASE("simulate --nu 0 --init zero has a nondecreasing energy column") {
    const fs::path dir = fresh_dir("siminv");
    const CmdResult r = run_cli(
        "simulate --c 2 --nu 0 --f0 1 --shells 10 --t-end 3 --init zero --out " +
        dir.string());
    REQUIRE(r.exit_code == 0);
    const auto lines = split_lines(slurp(dir / "series.csv"));
    double prev_e = -1.0;
    for (size_t i = 1; i < lines.size(); ++i) {
        std::istringstream ss(lines[i]);
        std::string tok;
        std::getline(ss, tok, ',');  // t
        std::getline(ss, tok, ',');  // E
        const double e = std::stod(tok);
        CHECK(e >= prev_e - 1e-12);
        prev_e = e;
    }
    fs::remove_all(dir);
}

TEST_CASE("existing non-empty --out rejected unless --force") {
    const fs::path dir = fresh_dir("simforce");
    fs::create_directories(dir);
    std::ofstream(dir / "junk.txt") << "x\n";
    const std::string common =
        "simulate --c 2 --nu 0.1 --f0 1 --shells 8 --t-end 1 --init zero --out " +
        dir.string();
    CHECK(run_cli(common).exit_code == 1);
    CHECK(run_cli(common + " --force").exit_code == 0);
    fs::remove_all(dir);
}

TEST_CASE("identical flags and seed give bit-identical outputs") {
    const fs::path d1 = fresh_dir("repa");
    const fs::path d2 = fresh_dir("repb");
    const std::string common =
        "simulate --c 2 --nu 0.1 --f0 1 --shells 10 --t-end 2 --init random "
        "--seed 7 --full-state --out ";
    REQUIRE(run_cli(common + d1.string()).exit_code == 0);
    REQUIRE(run_cli(common + d2.string()).exit_code == 0);
    CHECK(slurp(d1 / "series.csv") == slurp(d2 / "series.csv"));
    CHECK(slurp(d1 / "final_state.json") == slurp(d2 / "final_state.json"));
    fs::remove_all(d1);
    fs::remove_all(d2);
}

TEST_CASE("simulate --init file round-trips a final state") {
    const fs::path d1 = fresh_dir("chain1");
    const fs::path d2 = fresh_dir("chain2");
    REQUIRE(run_cli("simulate --c 2 --nu 0.3 --f0 1 --shells 8 --t-end 1 "
                    "--init zero --out " +
                    d1.string())
                .exit_code == 0);
    const CmdResult r = run_cli(
        "simulate --c 2 --nu 0.3 --f0 1 --shells 8 --t-end 1 --init file "
        "--init-file " +
        (d1 / "final_state.json").string() + " --out " + d2.string());
    CHECK(r.exit_code == 0);
    fs::remove_all(d1);
    fs::remove_all(d2);
}

TEST_CASE("steady emits a JSON document with lemma checks") {
    const CmdResult r = run_cli("steady --c 2 --nu 0.01 --f0 1 --newton-check");
    REQUIRE(r.exit_code == 0);
    const json doc = json::parse(r.output);
    CHECK(doc["mu"].get<double>() == doctest::Approx(0.01 * std::exp2(1.0 / 3.0)));
    CHECK(doc["beta"].get<double>() == doctest::Approx(2.0 / 3.0));
    CHECK(doc["residual"].get<double>() < 1e-12);
    CHECK(doc["checks"]["monotonic"].get<bool>());
    CHECK(doc["checks"]["decay_bound"].get<bool>());
    CHECK(doc["checks"]["gj_bound"]["pass"].get<bool>());
    CHECK(doc["checks"]["newton_agreement"].get<bool>());
    CHECK_FALSE(doc.contains("warning"));
}

TEST_CASE("steady at nu = 0 returns the constant rescaled sequence") {
    const CmdResult r = run_cli("steady --c 2 --nu 0 --f0 1");
    REQUIRE(r.exit_code == 0);
    const json doc = json::parse(r.output);
    CHECK(doc["residual"].get<double>() < 1e-14);
    for (const auto& v : doc["A"])
        CHECK(v.get<double>() == doctest::Approx(1.0).epsilon(1e-13));
}

TEST_CASE("steady outside the proven c range carries a warning") {
    const CmdResult r = run_cli("steady --c 1.4 --nu 0.1 --f0 1");
    REQUIRE(r.exit_code == 0);
    const json doc = json::parse(r.output);
    REQUIRE(doc.contains("warning"));
    CHECK_FALSE(doc["warning"].get<std::string>().empty());
}

TEST_CASE("sweep produces a deterministic summary.csv, --jobs 1 == --jobs 4") {
    const fs::path d1 = fresh_dir("sw1");
    const fs::path d4 = fresh_dir("sw4");
    const std::string common =
        "sweep --c 2 --f0 1 --nu-list 0.1,0.03,0.01 --t-end 6 --out ";
    REQUIRE(run_cli(common + d1.string() + " --jobs 1").exit_code == 0);
    REQUIRE(run_cli(common + d4.string() + " --jobs 4").exit_code == 0);
    const std::string s1 = slurp(d1 / "summary.csv");
    CHECK(s1 == slurp(d4 / "summary.csv"));

    const auto lines = split_lines(s1);
    REQUIRE(lines.size() == 4);
    CHECK(lines[0] ==
          "nu,N,avg_dissipation,alpha0_f0,epsilon_d,attractor_rate,gamma_bound,"
          "spectrum_slope,kappa_d_pred,kappa_d_obs,resolved");
    // Rows ordered by descending nu.
    CHECK(std::stod(lines[1]) > std::stod(lines[2]));
    CHECK(std::stod(lines[2]) > std::stod(lines[3]));
    // Per-point run directories with manifests.
    CHECK(fs::exists(d1 / "point_000" / "manifest.json"));
    CHECK(fs::exists(d1 / "point_002" / "manifest.json"));
    fs::remove_all(d1);
    fs::remove_all(d4);
}

TEST_CASE("sweep --nu-decades expands to one point per decade") {
    const fs::path dir = fresh_dir("swdec");
    const CmdResult r = run_cli("sweep --c 2 --f0 1 --nu-decades 1:2 --t-end 5 --out " +
                                dir.string());
    REQUIRE(r.exit_code == 0);
    const auto lines = split_lines(slurp(dir / "summary.csv"));
    REQUIRE(lines.size() == 3);
    CHECK(std::stod(lines[1]) == doctest::Approx(0.1));
    CHECK(std::stod(lines[2]) == doctest::Approx(0.01));
    fs::remove_all(dir);
}

TEST_CASE("config file supplies defaults, flags override") {
    const fs::path dir = fresh_dir("cfg");
    const fs::path cfg = fs::temp_directory_path() / "shellflow_test_cfg.ini";
    std::ofstream(cfg) << "c=2\nnu=0.1\nf0=1\nshells=8\nt-end=1\ninit=zero\n";
    const CmdResult r = run_cli("simulate --config " + cfg.string() +
                                " --nu 0.2 --out " + dir.string());
    REQUIRE(r.exit_code == 0);
    const json man = json::parse(slurp(dir / "manifest.json"));
    CHECK(man["params"]["nu"].get<double>() == 0.2);  // flag wins
    CHECK(man["params"]["c"].get<double>() == 2.0);   // from file
    fs::remove(cfg);
    fs::remove_all(dir);
}

TEST_CASE("verify --quick exits 0 and prints a table") {
    const CmdResult r = run_cli("verify --quick");
    CHECK(r.exit_code == 0);
    CHECK(r.output.find("PASS") != std::string::npos);
    CHECK(r.output.find("FAIL") == std::string::npos);
}
