#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "shellflow/artifacts.hpp"
#include "shellflow/experiments.hpp"
#include "shellflow/integrator.hpp"
#include "shellflow/model.hpp"
#include "shellflow/steady.hpp"
#include "shellflow/verify.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace shellflow;

namespace {

constexpr int kSchemaVersion = 1;

std::string join_args(int argc, char** argv) {
    std::string s;
    for (int i = 0; i < argc; ++i) {
        if (i) s += ' ';
        s += argv[i];
    }
    return s;
}

json params_json(const ModelParams& p) {
    return {{"c", p.c}, {"nu", p.nu}, {"f0", p.f0}, {"n_shells", p.n_shells}};
}

struct SimulateArgs {
    ModelParams params;
    IntegratorConfig config;
    std::string init = "zero";
    std::string init_file;
    std::uint64_t seed = 1;
    std::string out;
    std::string format = "csv";
    bool full_state = false;
    bool force = false;
    bool sample_every_set = false;
};

int cmd_simulate(const SimulateArgs& args, const std::string& invocation) {
    const std::string start = timestamp_utc();
    ModelParams p = args.params;
    IntegratorConfig cfg = args.config;
    if (!args.sample_every_set) cfg.sample_every = cfg.t_end / 500.0;

    try {
        p.validate();
        cfg.validate();
    } catch (const std::exception& e) {
        std::cerr << "invalid input: " << e.what() << "\n";
        return 1;
    }

    ShellState init;
    init.a.assign(p.n_shells + 1, 0.0);
    bool used_seed = false;
    try {
        if (args.init == "zero") {
            // already zero
        } else if (args.init == "random") {
            used_seed = true;
            std::mt19937_64 rng(args.seed);
            std::normal_distribution<double> g;
            for (int j = 0; j <= p.n_shells; ++j)
                init.a[j] = std::fabs(g(rng)) * std::exp2(-static_cast<double>(j));
        } else if (args.init == "fixed-point") {
            init.a = solve_fixed_point(p).alpha;
        } else if (args.init == "file") {
            if (args.init_file.empty()) {
                std::cerr << "--init file requires --init-file PATH\n";
                return 1;
            }
            std::ifstream in(args.init_file);
            if (!in) {
                std::cerr << "cannot read " << args.init_file << "\n";
                return 1;
            }
            json doc;
            in >> doc;
            init.a = doc.at("a").get<std::vector<double>>();
            if (static_cast<int>(init.a.size()) != p.n_shells + 1) {
                std::cerr << "initial state in " << args.init_file << " has "
                          << init.a.size() << " shells, expected "
                          << p.n_shells + 1 << "\n";
                return 1;
            }
        } else {
            std::cerr << "unknown --init choice: " << args.init << "\n";
            return 1;
        }
    } catch (const std::exception& e) {
        std::cerr << "failed to build initial data: " << e.what() << "\n";
        return 2;
    }

    fs::path out = args.out.empty() ? default_out_root() / "run" : fs::path(args.out);
    try {
        ensure_run_dir(out, args.force);
    } catch (const std::exception& e) {
        std::cerr << e.what() << "\n";
        return 1;
    }

    RunSeries run;
    try {
        run = integrate(p, cfg, init);
    } catch (const std::exception& e) {
        std::cerr << "integration error: " << e.what() << "\n";
        return 2;
    }

    try {
        if (args.format == "csv") {
            write_series_csv(out / "series.csv", run, args.full_state);
        } else {
            write_text(out / "series.json",
                       series_to_json(run, args.full_state).dump(2) + "\n");
        }
        write_text(out / "final_state.json",
                   state_to_json(run.final_state).dump(2) + "\n");

        json manifest{
            {"schema_version", kSchemaVersion},
            {"command", "simulate"},
            {"invocation", invocation},
            {"params", params_json(p)},
            {"integrator",
             {{"rel_tol", cfg.rel_tol},
              {"abs_tol", cfg.abs_tol},
              {"dt_init", cfg.dt_init},
              {"dt_max", cfg.dt_max},
              {"positivity_tol", cfg.positivity_tol},
              {"t_end", cfg.t_end},
              {"sample_every", cfg.sample_every}}},
            {"init", args.init},
            {"format", args.format},
            {"full_state", args.full_state},
            {"start_time", start},
            {"end_time", timestamp_utc()},
            {"artifacts",
             {{"series", args.format == "csv" ? "series.csv" : "series.json"},
              {"final_state", "final_state.json"}}},
            {"checks",
             {{"status", run.ok() ? "ok" : run.message},
              {"accepted_steps", run.stats.accepted},
              {"rejected_steps", run.stats.rejected},
              {"min_amplitude", run.min_amplitude},
              {"max_amplitude", run.max_amplitude},
              {"energy_inequality_residual",
               run.rows.size() >= 2 ? energy_inequality_check(run) : 0.0}}}};
        if (used_seed) manifest["seed"] = args.seed;
        if (!args.init_file.empty()) manifest["init_file"] = args.init_file;
        write_text(out / "manifest.json", manifest.dump(2) + "\n");
    } catch (const std::exception& e) {
        std::cerr << "failed to write artifacts: " << e.what() << "\n";
        return 2;
    }

    if (!run.ok()) {
        std::cerr << "numerical failure: " << run.message << "\n";
        return 2;
    }
    return 0;
}

struct SteadyArgs {
    ModelParams params;
    int jmax = -1;
    bool newton_check = false;
    std::string out;
    bool force = false;
};

int cmd_steady(const SteadyArgs& args, const std::string& invocation) {
    ModelParams p = args.params;
    try {
        p.validate();
    } catch (const std::exception& e) {
        std::cerr << "invalid input: " << e.what() << "\n";
        return 1;
    }

    SteadyState st;
    try {
        st = solve_fixed_point(p, 1e-14, args.jmax);
    } catch (const std::exception& e) {
        std::cerr << "steady solve failed: " << e.what() << "\n";
        return 2;
    }

    json doc = steady_to_json(st);
    doc["params"] = params_json(p);

    json checks;
    checks["monotonic"] = check_monotonicity(st.A, st.mu);
    checks["decay_bound"] = check_decay_bound(st.A, st.mu, st.beta);
    const auto [gmax, gamma] = check_gj_bound(st.A, st.mu, st.beta);
    checks["gj_bound"] = {{"max_gj_2betahalf", gmax},
                          {"gamma", gamma},
                          {"pass", gmax <= 1.0 - gamma}};
    if (args.newton_check) {
        const NewtonResult nr = newton_oracle(p);
        double worst = 0.0;
        for (size_t j = 0; j < st.alpha.size(); ++j) {
            if (std::fabs(st.alpha[j]) <= 1e-30) continue;
            worst = std::max(worst, std::fabs(nr.alpha[j] - st.alpha[j]) /
                                        std::fabs(st.alpha[j]));
        }
        checks["newton_agreement"] = nr.converged && worst < 1e-8;
        checks["newton_residual"] = nr.residual;
        checks["newton_max_rel_deviation"] = worst;
    }
    doc["checks"] = checks;

    std::cout << doc.dump(2) << "\n";

    if (!args.out.empty()) {
        try {
            ensure_run_dir(args.out, args.force);
            write_text(fs::path(args.out) / "steady.json", doc.dump(2) + "\n");
            json manifest{{"schema_version", kSchemaVersion},
                          {"command", "steady"},
                          {"invocation", invocation},
                          {"params", params_json(p)},
                          {"start_time", timestamp_utc()},
                          {"end_time", timestamp_utc()},
                          {"artifacts", {{"steady", "steady.json"}}}};
            write_text(fs::path(args.out) / "manifest.json", manifest.dump(2) + "\n");
        } catch (const std::exception& e) {
            std::cerr << e.what() << "\n";
            return 1;
        }
    }
    return 0;
}

struct SweepArgs {
    double c = 2.0;
    double f0 = 1.0;
    std::string nu_list;
    std::string nu_decades;
    SweepOptions opts;
    std::string out;
    bool force = false;
};

int cmd_sweep(const SweepArgs& args, const std::string& invocation) {
    const std::string start = timestamp_utc();
    std::vector<double> nus;
    if (!args.nu_list.empty()) {
        std::stringstream ss(args.nu_list);
        std::string tok;
        while (std::getline(ss, tok, ',')) {
            if (tok.empty()) continue;
            try {
                nus.push_back(std::stod(tok));
            } catch (const std::exception&) {
                std::cerr << "bad value in --nu-list: " << tok << "\n";
                return 1;
            }
        }
    } else if (!args.nu_decades.empty()) {
        int a = 0, b = 0;
        if (std::sscanf(args.nu_decades.c_str(), "%d:%d", &a, &b) != 2 || a > b) {
            std::cerr << "--nu-decades expects a:b with a <= b (nu = 10^-a .. 10^-b)\n";
            return 1;
        }
        for (int m = a; m <= b; ++m) nus.push_back(std::pow(10.0, -m));
    }
    if (nus.empty()) {
        std::cerr << "sweep requires a nonempty --nu-list or --nu-decades\n";
        return 1;
    }
    for (double nu : nus)
        if (!(nu > 0)) {
            std::cerr << "sweep viscosities must be > 0\n";
            return 1;
        }

    fs::path out = args.out.empty() ? default_out_root() / "sweep" : fs::path(args.out);
    try {
        ensure_run_dir(out, args.force);
    } catch (const std::exception& e) {
        std::cerr << e.what() << "\n";
        return 1;
    }

    const std::vector<SweepResult> rows =
        dissipation_sweep(args.c, args.f0, nus, args.opts);

    std::ostringstream csv;
    csv << "nu,N,avg_dissipation,alpha0_f0,epsilon_d,attractor_rate,gamma_bound,"
           "spectrum_slope,kappa_d_pred,kappa_d_obs,resolved\n";
    size_t failed = 0;
    for (size_t i = 0; i < rows.size(); ++i) {
        const SweepResult& r = rows[i];
        csv << fmt17(r.nu) << ',' << r.N << ',' << fmt17(r.avg_dissipation) << ','
            << fmt17(r.alpha0_f0) << ',' << fmt17(r.epsilon_d) << ','
            << fmt17(r.attractor_rate) << ',' << fmt17(r.gamma_bound) << ','
            << fmt17(r.spectrum_slope) << ',' << fmt17(r.kappa_d_pred) << ','
            << fmt17(r.kappa_d_obs) << ',' << (r.resolved ? "true" : "false")
            << "\n";
        if (!r.valid) ++failed;

        char dirname[64];
        std::snprintf(dirname, sizeof dirname, "point_%03zu", i);
        const fs::path pdir = out / dirname;
        fs::create_directories(pdir);
        json pm{{"schema_version", kSchemaVersion},
                {"command", "sweep/point"},
                {"params", {{"c", args.c}, {"nu", r.nu}, {"f0", args.f0}, {"n_shells", r.N}}},
                {"seed", args.opts.seed},
                {"result",
                 {{"avg_dissipation", r.avg_dissipation},
                  {"alpha0_f0", r.alpha0_f0},
                  {"epsilon_d", r.epsilon_d},
                  {"attractor_rate", r.attractor_rate},
                  {"gamma_bound", r.gamma_bound},
                  {"spectrum_slope", r.spectrum_slope},
                  {"kappa_d_pred", r.kappa_d_pred},
                  {"kappa_d_obs", r.kappa_d_obs},
                  {"resolved", r.resolved},
                  {"valid", r.valid},
                  {"note", r.note}}}};
        write_text(pdir / "manifest.json", pm.dump(2) + "\n");
    }
    write_text(out / "summary.csv", csv.str());

    json manifest{{"schema_version", kSchemaVersion},
                  {"command", "sweep"},
                  {"invocation", invocation},
                  {"params", {{"c", args.c}, {"f0", args.f0}}},
                  {"nu_grid", nus},
                  {"jobs", args.opts.jobs},
                  {"t_end", args.opts.t_end},
                  {"rel_tol", args.opts.rel_tol},
                  {"seed", args.opts.seed},
                  {"start_time", start},
                  {"end_time", timestamp_utc()},
                  {"artifacts", {{"summary", "summary.csv"}}},
                  {"failed_points", failed}};
    write_text(out / "manifest.json", manifest.dump(2) + "\n");

    return failed == rows.size() ? 2 : 0;
}

int cmd_verify(bool quick) {
    const std::vector<CheckResult> results = run_verification(quick);
    size_t width = 0;
    for (const CheckResult& r : results) width = std::max(width, r.name.size());
    bool all = true;
    for (const CheckResult& r : results) {
        std::printf("%-*s  %s  %s\n", static_cast<int>(width), r.name.c_str(),
                    r.pass ? "PASS" : "FAIL", r.detail.c_str());
        all = all && r.pass;
    }
    std::printf("%zu checks, %s\n", results.size(), all ? "all passed" : "FAILURES");
    return all ? 0 : 2;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"shellflow: a laboratory for the viscous dyadic shell model"};
    app.require_subcommand(1);
    const std::string invocation = join_args(argc, argv);

    SimulateArgs sim;
    CLI::App* simulate = app.add_subcommand("simulate", "integrate the model in time");
    simulate->set_config("--config");
    simulate->add_option("--c", sim.params.c, "intermittency exponent");
    simulate->add_option("--nu", sim.params.nu, "viscosity");
    simulate->add_option("--f0", sim.params.f0, "force amplitude on shell 0");
    simulate->add_option("--shells", sim.params.n_shells, "truncation index N");
    simulate->add_option("--t-end", sim.config.t_end, "final time");
    simulate->add_option("--rel-tol", sim.config.rel_tol, "relative tolerance");
    simulate->add_option("--abs-tol", sim.config.abs_tol, "absolute tolerance");
    simulate->add_option("--dt-init", sim.config.dt_init, "initial step");
    simulate->add_option("--dt-max", sim.config.dt_max, "step cap");
    auto* se = simulate->add_option("--sample-every", sim.config.sample_every,
                                    "output cadence (default t_end/500)");
    simulate->add_option("--init", sim.init,
                         "initial data: zero|random|fixed-point|file");
    simulate->add_option("--init-file", sim.init_file, "state JSON for --init file");
    simulate->add_option("--seed", sim.seed, "RNG seed for --init random");
    simulate->add_option("--out", sim.out, "output directory");
    simulate->add_option("--format", sim.format, "series format: csv|json")
        ->check(CLI::IsMember({"csv", "json"}));
    simulate->add_flag("--full-state", sim.full_state, "append a_j columns");
    simulate->add_flag("--force", sim.force, "allow non-empty output directory");

    SteadyArgs sta;
    sta.params.n_shells = 16;
    CLI::App* steady = app.add_subcommand("steady", "solve the viscous fixed point");
    steady->set_config("--config");
    steady->add_option("--c", sta.params.c, "intermittency exponent");
    steady->add_option("--nu", sta.params.nu, "viscosity");
    steady->add_option("--f0", sta.params.f0, "force amplitude");
    steady->add_option("--shells", sta.params.n_shells, "alpha truncation index");
    steady->add_option("--jmax", sta.jmax, "shooting horizon (default ceil(J)+60)");
    steady->add_flag("--newton-check", sta.newton_check,
                     "validate against the Newton oracle");
    steady->add_option("--out", sta.out, "also write steady.json here");
    steady->add_flag("--force", sta.force, "allow non-empty output directory");

    SweepArgs sw;
    CLI::App* sweep = app.add_subcommand("sweep", "viscosity sweep with summary.csv");
    sweep->set_config("--config");
    sweep->add_option("--c", sw.c, "intermittency exponent");
    sweep->add_option("--f0", sw.f0, "force amplitude");
    sweep->add_option("--nu-list", sw.nu_list, "comma-separated viscosities");
    sweep->add_option("--nu-decades", sw.nu_decades, "a:b for nu = 10^-a .. 10^-b");
    sweep->add_option("--jobs", sw.opts.jobs, "parallel width");
    sweep->add_option("--t-end", sw.opts.t_end, "integration time per point");
    sweep->add_option("--rel-tol", sw.opts.rel_tol, "integrator tolerance");
    sweep->add_option("--seed", sw.opts.seed, "seed recorded in manifests");
    sweep->add_option("--out", sw.out, "output directory");
    sweep->add_flag("--force", sw.force, "allow non-empty output directory");

    bool quick = false;
    CLI::App* verify = app.add_subcommand("verify", "run the invariant suite");
    verify->add_flag("--quick", quick, "desk-scale matrix (< 2 min)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : 1;  // usage/input problems exit 1
    }

    if (simulate->parsed()) {
        sim.sample_every_set = se->count() > 0;
        return cmd_simulate(sim, invocation);
    }
    if (steady->parsed()) return cmd_steady(sta, invocation);
    if (sweep->parsed()) return cmd_sweep(sw, invocation);
    if (verify->parsed()) return cmd_verify(quick);
    return 1;
}
