#include <chrono>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>

#include <CLI11.hpp>

#include "ksjko/config.hpp"
#include "ksjko/metrics.hpp"
#include "validate_suites.hpp"

namespace fs = std::filesystem;
using namespace ksjko;

namespace {

std::string fmt(Real v) {
    if (std::isinf(v)) return "inf";
    std::ostringstream os;
    os << std::setprecision(10) << v;
    return os.str();
}

int cmd_run(const std::string& config_path, const std::string& out_override) {
    RunConfig rc;
    std::string raw;
    try {
        std::ifstream in(config_path);
        if (!in) throw ConfigError("cannot open config file " + config_path);
        std::ostringstream ss;
        ss << in.rdbuf();
        raw = ss.str();
        rc = parse_run_config(raw);
    } catch (const std::exception& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    }
    if (!out_override.empty()) rc.out_dir = out_override;

    const auto t0 = std::chrono::steady_clock::now();
    RunManifest man;
    man.config_hash = fnv1a_hash(raw);
    int code = 0;
    try {
        fs::create_directories(rc.out_dir);
        scheme::SchemeConfig sc = make_scheme_config(rc);
        DensityField rho0 = build_initial(rc);
        scheme::Trajectory traj = scheme::run(rho0, sc);

        {
            std::ofstream d(rc.out_dir + "/diagnostics.csv");
            d << scheme::diagnostics_csv(traj);
        }
        if (rc.save_every > 0) {
            for (size_t k = 0; k < traj.full_steps.size();
                 k += static_cast<size_t>(rc.save_every)) {
                std::ostringstream name;
                name << rc.out_dir << "/snapshot_" << std::setw(6) << std::setfill('0') << k
                     << ".csv";
                write_snapshot(traj.full_steps[k], name.str());
            }
        }
        write_snapshot(traj.full_steps.back(), rc.out_dir + "/final.csv");

        man.status = scheme::to_string(traj.status);
        if (traj.thresholds) {
            man.has_thresholds = true;
            man.thresholds = *traj.thresholds;
        }
        switch (traj.status) {
            case scheme::RunStatus::completed: code = 0; break;
            case scheme::RunStatus::blowup_sentinel: code = 5; break;
            case scheme::RunStatus::solver_failure: code = 4; break;
            case scheme::RunStatus::threshold_violation: code = 3; break;
        }
        if (code != 0)
            std::cerr << "run ended with status " << man.status << ": " << traj.status_detail
                      << "\n";
    } catch (const scheme::ThresholdViolationError& e) {
        std::cerr << "threshold violation: " << e.what() << "\n";
        man.status = "threshold_violation";
        code = 3;
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        man.status = "invalid_config";
        code = 2;
    } catch (const SolverError& e) {
        std::cerr << "solver failure: " << e.what() << "\n";
        man.status = "solver_failure";
        code = 4;
    }
    man.wall_time_s =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    try {
        fs::create_directories(rc.out_dir);
        write_manifest(man, rc.out_dir + "/manifest.json");
    } catch (const std::exception& e) {
        std::cerr << "manifest write failed: " << e.what() << "\n";
        if (code == 0) code = 4;
    }
    return code;
}

int cmd_thresholds(Real alpha, Real beta, Real r, Real rho0_linf, Real chi, Real lambda,
                   Real omega, Real rho0_l1, Real t_final, int dim, bool json) {
    try {
        ReactionSpec F(alpha, beta, r);
        EntropySpec U = EntropySpec::boltzmann();
        if (rho0_l1 <= 0.0) rho0_l1 = rho0_linf * omega;
        const GridSpec ref_grid(1.0, 256);
        const Real k3 = elliptic::empirical_k3(ref_grid, elliptic::EllipticConfig{}, 32);
        const ThresholdReport rep = compute_thresholds(F, U, rho0_linf, rho0_l1, omega, chi,
                                                       lambda, dim, t_final, k3);
        if (json) {
            std::cout << threshold_report_json(rep) << "\n";
        } else {
            std::cout << "chi_star        " << fmt(rep.chi_star) << "   [case "
                      << to_string(rep.chi_case) << "]\n";
            std::cout << "M_star          " << fmt(rep.M_star) << "\n";
            std::cout << "eta_Mstar       " << fmt(rep.eta_Mstar) << "\n";
            std::cout << "xi              " << fmt(rep.xi) << "\n";
            std::cout << "c0              " << fmt(rep.c0) << "\n";
            std::cout << "delta_lambda    " << fmt(rep.delta_lambda) << "\n";
            std::cout << "tau_star        " << fmt(rep.tau_star) << "\n";
            std::cout << "tau_hat         " << fmt(rep.tau_hat) << "\n";
            std::cout << "tau_tilde       " << fmt(rep.tau_tilde) << "\n";
            std::cout << "tau_double_star " << fmt(rep.tau_double_star) << "\n";
            std::cout << "C1..C9          " << fmt(rep.C1) << " " << fmt(rep.C2) << " "
                      << fmt(rep.C3) << " " << fmt(rep.C4) << " " << fmt(rep.C5) << " "
                      << fmt(rep.C6) << " " << fmt(rep.C7) << " " << fmt(rep.C8) << " "
                      << fmt(rep.C9) << "\n";
        }
        return 0;
    } catch (const std::exception& e) {
        std::cerr << "invalid parameters: " << e.what() << "\n";
        return 2;
    }
}

int cmd_chi_star(Real alpha, Real beta, Real r, Real rho0_linf, bool json) {
    try {
        ReactionSpec F(alpha, beta, r);
        const Real cs = chi_star(rho0_linf, F);
        const std::string case_name = to_string(chi_star_case(rho0_linf, F));
        if (json) {
            std::cout << "{\n  \"chi_star\": "
                      << (std::isinf(cs) ? "\"inf\"" : fmt(cs)) << ",\n  \"case\": \""
                      << case_name << "\"\n}\n";
        } else {
            std::cout << "chi_star = " << fmt(cs) << "   [case " << case_name << "]\n";
        }
        return 0;
    } catch (const std::exception& e) {
        std::cerr << "invalid parameters: " << e.what() << "\n";
        return 2;
    }
}

int cmd_dist(const std::string& metric, const std::string& a_path, const std::string& b_path,
             Real eps) {
    try {
        DensityField a = read_snapshot(a_path);
        DensityField b = read_snapshot(b_path);
        Real d;
        if (metric == "w2") {
            d = eps > 0.0 ? std::sqrt(std::max(0.0, metrics::w2_entropic(a, b, eps).cost))
                          : metrics::w2_distance(a, b);
        } else if (metric == "fr") {
            d = metrics::fr_distance(a, b);
        } else if (metric == "wfr-ub") {
            d = metrics::wfr_upper_bound(a, b);
        } else {
            std::cerr << "unknown metric '" << metric << "'\n";
            return 2;
        }
        std::cout << format_real(d) << "\n";
        return 0;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
}

int cmd_validate(const std::string& suite, int jobs) {
    if (const char* cap = std::getenv("KSJKO_THREADS")) {
        const int c = std::atoi(cap);
        if (c > 0) jobs = std::min(jobs, c);
    }
    std::vector<validate::CheckRow> rows;
    try {
        rows = validate::run_suite(suite, jobs);
    } catch (const std::exception& e) {
        std::cerr << "validate failed to run: " << e.what() << "\n";
        return 1;
    }
    size_t name_w = 4, prop_w = 8;
    for (const auto& r : rows) {
        name_w = std::max(name_w, r.name.size());
        prop_w = std::max(prop_w, r.property.size());
    }
    std::cout << std::left << std::setw(static_cast<int>(name_w) + 2) << "check"
              << std::setw(static_cast<int>(prop_w) + 2) << "property"
              << std::setw(14) << "margin" << "result\n";
    bool all_pass = true;
    for (const auto& r : rows) {
        std::cout << std::left << std::setw(static_cast<int>(name_w) + 2) << r.name
                  << std::setw(static_cast<int>(prop_w) + 2) << r.property << std::setw(14)
                  << fmt(r.margin) << (r.pass ? "pass" : "FAIL") << "\n";
        all_pass = all_pass && r.pass;
    }
    if (!all_pass) {
        std::cout << "failures:\n";
        for (const auto& r : rows)
            if (!r.pass) std::cout << "  " << r.name << "\n";
    }
    return all_pass ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"solver and validation harness for a chemotaxis system with logistic "
                 "reaction, built on alternating transport/reaction proximal steps"};
    app.require_subcommand(1);

    auto* run = app.add_subcommand("run", "integrate a configured scenario");
    std::string config_path, out_dir;
    run->add_option("--config", config_path, "config file (INI sections)")->required();
    run->add_option("--out", out_dir, "override the output directory");

    auto* val = app.add_subcommand("validate", "run a property suite");
    std::string suite;
    int jobs = 1;
    val->add_option("--suite", suite, "lemmas | metrics | convergence")->required();
    val->add_option("--jobs", jobs, "scenario parallelism cap");

    auto* thr = app.add_subcommand("thresholds", "print the admissibility constants");
    double alpha = 0.0, beta = 1.0, r = 2.0, rho0_linf = 1.0, chi = 0.5, lambda = 1.01;
    double omega = 1.0, rho0_l1 = 0.0, t_final = 1.0;
    int dim = 1;
    bool json = false;
    thr->add_option("--alpha", alpha)->required();
    thr->add_option("--beta", beta)->required();
    thr->add_option("--r", r)->required();
    thr->add_option("--rho0-linf", rho0_linf)->required();
    thr->add_option("--chi", chi)->required();
    thr->add_option("--lambda", lambda)->required();
    thr->add_option("--omega", omega, "domain measure (default 1)");
    thr->add_option("--rho0-l1", rho0_l1, "initial mass (default rho0_linf * omega)");
    thr->add_option("--t-final", t_final);
    thr->add_option("--dim", dim);
    thr->add_flag("--json", json);

    auto* cs = app.add_subcommand("chi-star", "print the admissible sensitivity threshold");
    double cs_alpha = 0.0, cs_beta = 1.0, cs_r = 2.0, cs_rho = 1.0;
    bool cs_json = false;
    cs->add_option("--alpha", cs_alpha)->required();
    cs->add_option("--beta", cs_beta)->required();
    cs->add_option("--r", cs_r)->required();
    cs->add_option("--rho0-linf", cs_rho)->required();
    cs->add_flag("--json", cs_json);

    auto* dist = app.add_subcommand("dist", "distance between two snapshot files");
    std::string metric, a_path, b_path;
    double eps = 0.0;
    dist->add_option("--metric", metric, "w2 | fr | wfr-ub")->required();
    dist->add_option("--a", a_path)->required();
    dist->add_option("--b", b_path)->required();
    dist->add_option("--eps", eps, "entropic regularization for w2");

    CLI11_PARSE(app, argc, argv);

    if (run->parsed()) return cmd_run(config_path, out_dir);
    if (val->parsed()) return cmd_validate(suite, jobs);
    if (thr->parsed())
        return cmd_thresholds(alpha, beta, r, rho0_linf, chi, lambda, omega, rho0_l1, t_final,
                              dim, json);
    if (cs->parsed()) return cmd_chi_star(cs_alpha, cs_beta, cs_r, cs_rho, cs_json);
    if (dist->parsed()) return cmd_dist(metric, a_path, b_path, eps);
    return 2;
}
