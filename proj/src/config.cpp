#include "ksjko/config.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include <json.hpp>

namespace ksjko {

namespace {

using KV = std::map<std::string, std::map<std::string, std::string>>;

std::string trim(const std::string& s) {
    const auto a = s.find_first_not_of(" \t\r");
    if (a == std::string::npos) return "";
    const auto b = s.find_last_not_of(" \t\r");
    return s.substr(a, b - a + 1);
}

KV parse_ini(const std::string& text) {
    KV out;
    std::istringstream in(text);
    std::string line, section;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const auto hash = line.find_first_of("#;");
        if (hash != std::string::npos) line = line.substr(0, hash);
        line = trim(line);
        if (line.empty()) continue;
        if (line.front() == '[') {
            if (line.back() != ']')
                throw ConfigError("line " + std::to_string(lineno) + ": malformed section");
            section = trim(line.substr(1, line.size() - 2));
            out[section];
            continue;
        }
        const auto eq = line.find('=');
        if (eq == std::string::npos)
            throw ConfigError("line " + std::to_string(lineno) + ": expected key=value");
        if (section.empty())
            throw ConfigError("line " + std::to_string(lineno) + ": key outside any section");
        out[section][trim(line.substr(0, eq))] = trim(line.substr(eq + 1));
    }
    return out;
}

struct Reader {
    const KV* kv;
    std::set<std::string> seen;

    bool has(const std::string& sec, const std::string& key) {
        auto s = kv->find(sec);
        return s != kv->end() && s->second.count(key) > 0;
    }
    std::string get(const std::string& sec, const std::string& key) {
        seen.insert(sec + "." + key);
        return kv->at(sec).at(key);
    }
    std::string require(const std::string& sec, const std::string& key) {
        if (!has(sec, key)) throw ConfigError("[" + sec + "]." + key + " missing");
        return get(sec, key);
    }
    Real real_of(const std::string& sec, const std::string& key, const std::string& raw) {
        try {
            size_t pos = 0;
            const Real v = std::stod(raw, &pos);
            if (pos != raw.size()) throw std::invalid_argument("trailing characters");
            return v;
        } catch (const std::exception&) {
            throw ConfigError("[" + sec + "]." + key + ": not a number: '" + raw + "'");
        }
    }
    Real num(const std::string& sec, const std::string& key, Real def) {
        return has(sec, key) ? real_of(sec, key, get(sec, key)) : def;
    }
    Real num_required(const std::string& sec, const std::string& key) {
        return real_of(sec, key, require(sec, key));
    }
    int integer(const std::string& sec, const std::string& key, int def) {
        return has(sec, key) ? static_cast<int>(real_of(sec, key, get(sec, key))) : def;
    }
    bool flag(const std::string& sec, const std::string& key, bool def) {
        if (!has(sec, key)) return def;
        const std::string v = get(sec, key);
        if (v == "true" || v == "1" || v == "yes") return true;
        if (v == "false" || v == "0" || v == "no") return false;
        throw ConfigError("[" + sec + "]." + key + ": not a boolean: '" + v + "'");
    }
    std::string str(const std::string& sec, const std::string& key, const std::string& def) {
        return has(sec, key) ? get(sec, key) : def;
    }
    std::vector<Real> num_list(const std::string& sec, const std::string& key,
                               std::vector<Real> def) {
        if (!has(sec, key)) return def;
        std::vector<Real> out;
        std::istringstream ss(get(sec, key));
        std::string tok;
        while (std::getline(ss, tok, ','))
            out.push_back(real_of(sec, key, trim(tok)));
        return out;
    }

    void reject_unknown() {
        for (const auto& [sec, entries] : *kv) {
            static const std::set<std::string> sections{"domain", "model",   "entropy",
                                                        "reaction", "scheme", "init",
                                                        "output"};
            if (!sections.count(sec)) throw ConfigError("unknown section [" + sec + "]");
            for (const auto& [key, _] : entries)
                if (!seen.count(sec + "." + key))
                    throw ConfigError("unknown key [" + sec + "]." + key);
        }
    }
};

}  // namespace

RunConfig parse_run_config(const std::string& text) {
    const KV kv = parse_ini(text);
    Reader rd{&kv, {}};
    RunConfig c;

    c.dim = rd.integer("domain", "dim", 1);
    if (c.dim != 1 && c.dim != 2) throw ConfigError("[domain].dim must be 1 or 2");
    {
        std::vector<Real> L = rd.num_list("domain", "lengths", {1.0});
        if (static_cast<int>(L.size()) == 1 && c.dim == 2) L.push_back(L[0]);
        if (static_cast<int>(L.size()) != c.dim)
            throw ConfigError("[domain].lengths: expected one value per axis");
        c.lengths = L;
        std::vector<Real> N = rd.num_list("domain", "cells", {});
        if (N.empty()) throw ConfigError("[domain].cells missing");
        c.cells.clear();
        for (Real v : N) c.cells.push_back(static_cast<int>(v));
        if (static_cast<int>(c.cells.size()) == 1 && c.dim == 2)
            c.cells.push_back(c.cells[0]);
        if (static_cast<int>(c.cells.size()) != c.dim)
            throw ConfigError("[domain].cells: expected one value per axis");
    }

    c.chi = rd.num_required("model", "chi");
    if (c.chi < 0.0) throw ConfigError("[model].chi must be >= 0");
    c.lambda_screen = rd.num("model", "lambda_screen", 1.0);
    c.bc = rd.str("model", "bc", "neumann");
    if (c.bc != "neumann" && c.bc != "dirichlet")
        throw ConfigError("[model].bc must be neumann or dirichlet");
    if (c.bc == "neumann" && c.lambda_screen <= 0.0)
        throw ConfigError("[model].lambda_screen must be > 0 with Neumann conditions");

    c.entropy_kind = rd.str("entropy", "kind", "boltzmann");
    if (c.entropy_kind != "boltzmann" && c.entropy_kind != "power")
        throw ConfigError("[entropy].kind must be boltzmann or power");
    c.m = rd.num("entropy", "m", 2.0);
    c.delta = rd.num("entropy", "delta", 0.0);
    if (c.delta < 0.0) throw ConfigError("[entropy].delta must be >= 0");

    c.alpha = rd.num_required("reaction", "alpha");
    c.beta = rd.num_required("reaction", "beta");
    c.r = rd.num_required("reaction", "r");
    if (c.alpha < 0.0) throw ConfigError("[reaction].alpha must be >= 0");
    if (c.beta <= 0.0) throw ConfigError("[reaction].beta must be > 0");
    if (c.r <= 1.0) throw ConfigError("[reaction].r must be > 1");

    c.tau = rd.num_required("scheme", "tau");
    c.t_final = rd.num_required("scheme", "t_final");
    if (c.tau <= 0.0) throw ConfigError("[scheme].tau must be > 0");
    if (c.t_final <= 0.0) throw ConfigError("[scheme].t_final must be > 0");
    c.backend = rd.str("scheme", "backend", "quantile");
    if (c.backend != "quantile" && c.backend != "entropic")
        throw ConfigError("[scheme].backend must be quantile or entropic");
    c.outer_iters = rd.integer("scheme", "outer_iters", 3);
    c.eps_schedule = rd.str("scheme", "eps_schedule", "auto");
    c.enforce_thresholds = rd.flag("scheme", "enforce_thresholds", false);
    c.lambda = rd.num("scheme", "lambda", 1.01);
    if (c.lambda <= 1.0) throw ConfigError("[scheme].lambda must be > 1");
    c.inner_tol = rd.num("scheme", "inner_tol", 1e-7);

    c.preset = rd.str("init", "preset", "");
    if (c.preset.empty()) throw ConfigError("[init].preset missing");
    static const std::set<std::string> presets{"uniform", "bump", "two_bumps",
                                               "perturbed_uniform", "csv"};
    if (!presets.count(c.preset)) throw ConfigError("[init].preset: unknown '" + c.preset + "'");
    c.value = rd.num("init", "value", c.preset == "uniform" ? 1.0 : 0.2);
    c.amplitude = rd.num("init", "amplitude", c.preset == "perturbed_uniform" ? 0.1 : 1.0);
    c.mode = rd.integer("init", "mode", 1);
    c.width = rd.num("init", "width", 0.1);
    c.path = rd.str("init", "path", "");
    if (c.preset == "csv" && c.path.empty()) throw ConfigError("[init].path missing");

    c.out_dir = rd.str("output", "dir", "out");
    c.save_every = rd.integer("output", "save_every", 0);
    c.formats = rd.str("output", "formats", "csv");

    rd.reject_unknown();
    return c;
}

RunConfig load_run_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return parse_run_config(ss.str());
}

std::string serialize_run_config(const RunConfig& c) {
    std::ostringstream os;
    os << "[domain]\n";
    os << "dim=" << c.dim << "\n";
    os << "lengths=" << format_real(c.lengths[0]);
    if (c.dim == 2) os << "," << format_real(c.lengths[1]);
    os << "\ncells=" << c.cells[0];
    if (c.dim == 2) os << "," << c.cells[1];
    os << "\n[model]\n";
    os << "chi=" << format_real(c.chi) << "\n";
    os << "lambda_screen=" << format_real(c.lambda_screen) << "\n";
    os << "bc=" << c.bc << "\n";
    os << "[entropy]\n";
    os << "kind=" << c.entropy_kind << "\n";
    os << "m=" << format_real(c.m) << "\n";
    os << "delta=" << format_real(c.delta) << "\n";
    os << "[reaction]\n";
    os << "alpha=" << format_real(c.alpha) << "\n";
    os << "beta=" << format_real(c.beta) << "\n";
    os << "r=" << format_real(c.r) << "\n";
    os << "[scheme]\n";
    os << "tau=" << format_real(c.tau) << "\n";
    os << "t_final=" << format_real(c.t_final) << "\n";
    os << "backend=" << c.backend << "\n";
    os << "outer_iters=" << c.outer_iters << "\n";
    os << "eps_schedule=" << c.eps_schedule << "\n";
    os << "enforce_thresholds=" << (c.enforce_thresholds ? "true" : "false") << "\n";
    os << "lambda=" << format_real(c.lambda) << "\n";
    os << "inner_tol=" << format_real(c.inner_tol) << "\n";
    os << "[init]\n";
    os << "preset=" << c.preset << "\n";
    os << "value=" << format_real(c.value) << "\n";
    os << "amplitude=" << format_real(c.amplitude) << "\n";
    os << "mode=" << c.mode << "\n";
    os << "width=" << format_real(c.width) << "\n";
    if (!c.path.empty()) os << "path=" << c.path << "\n";
    os << "[output]\n";
    os << "dir=" << c.out_dir << "\n";
    os << "save_every=" << c.save_every << "\n";
    os << "formats=" << c.formats << "\n";
    return os.str();
}

GridSpec make_grid(const RunConfig& c) {
    return c.dim == 1 ? GridSpec(c.lengths[0], c.cells[0])
                      : GridSpec(c.lengths[0], c.lengths[1], c.cells[0], c.cells[1]);
}

DensityField build_initial(const RunConfig& c) {
    if (c.preset == "csv") return read_snapshot(c.path);
    const GridSpec g = make_grid(c);
    const ReactionSpec F(c.alpha, c.beta, c.r);
    Array v(g.size());
    const Real Lx = c.lengths[0];
    const Real pi = 3.14159265358979323846;
    auto fill = [&](auto&& fn) {
        const int nx = g.cells[0];
        const int ny = g.dim == 2 ? g.cells[1] : 1;
        for (int j = 0; j < ny; ++j)
            for (int i = 0; i < nx; ++i)
                v[g.index(i, j)] = fn(g.center(0, i), g.dim == 2 ? g.center(1, j) : 0.0);
    };
    if (c.preset == "uniform") {
        fill([&](Real, Real) { return c.value; });
    } else if (c.preset == "bump") {
        const Real w = c.width * Lx;
        fill([&](Real x, Real y) {
            Real rr = (x - 0.5 * Lx) * (x - 0.5 * Lx);
            if (g.dim == 2) rr += (y - 0.5 * c.lengths[1]) * (y - 0.5 * c.lengths[1]);
            return c.value + c.amplitude * std::exp(-rr / (w * w));
        });
    } else if (c.preset == "two_bumps") {
        const Real w = c.width * Lx;
        fill([&](Real x, Real y) {
            Real r1 = (x - Lx / 3.0) * (x - Lx / 3.0);
            Real r2 = (x - 2.0 * Lx / 3.0) * (x - 2.0 * Lx / 3.0);
            if (g.dim == 2) {
                const Real dy = (y - 0.5 * c.lengths[1]) * (y - 0.5 * c.lengths[1]);
                r1 += dy;
                r2 += dy;
            }
            return c.value +
                   c.amplitude * (std::exp(-r1 / (w * w)) + std::exp(-r2 / (w * w)));
        });
    } else {  // perturbed_uniform around the carrying capacity
        const Real s = F.carrying_capacity();
        const Real base = s > 0.0 ? s : c.value;
        fill([&](Real x, Real y) {
            Real p = std::cos(c.mode * pi * x / Lx);
            if (g.dim == 2) p *= std::cos(c.mode * pi * y / c.lengths[1]);
            return base * (1.0 + c.amplitude * p);
        });
    }
    return DensityField(g, std::move(v));
}

ModelParams make_model(const RunConfig& c) {
    ModelParams m;
    m.chi = c.chi;
    m.elliptic_cfg.bc = c.bc == "neumann" ? elliptic::Bc::neumann_screened
                                          : elliptic::Bc::dirichlet_poisson;
    m.elliptic_cfg.Lambda = c.lambda_screen;
    m.entropy = c.entropy_kind == "boltzmann" ? EntropySpec::boltzmann(c.delta)
                                              : EntropySpec::power(c.m, c.delta);
    m.reaction = ReactionSpec(c.alpha, c.beta, c.r);
    return m;
}

scheme::SchemeConfig make_scheme_config(const RunConfig& c) {
    scheme::SchemeConfig sc;
    sc.tau = c.tau;
    sc.t_final = c.t_final;
    sc.model = make_model(c);
    sc.enforce_thresholds = c.enforce_thresholds;
    sc.lambda = c.lambda;
    sc.w2cfg.backend =
        c.backend == "quantile" ? jko::W2Backend::quantile_1d : jko::W2Backend::entropic;
    sc.w2cfg.tau = c.tau;
    sc.w2cfg.outer_fixed_point_iters = c.outer_iters;
    sc.w2cfg.inner_tol = c.inner_tol;
    if (c.eps_schedule != "auto") {
        std::istringstream ss(c.eps_schedule);
        std::string tok;
        while (std::getline(ss, tok, ','))
            sc.w2cfg.eps_schedule.push_back(std::stod(tok));
        for (size_t i = 1; i < sc.w2cfg.eps_schedule.size(); ++i)
            if (sc.w2cfg.eps_schedule[i] >= sc.w2cfg.eps_schedule[i - 1])
                throw ConfigError("[scheme].eps_schedule must be strictly decreasing");
    }
    return sc;
}

std::uint64_t fnv1a_hash(const std::string& text) {
    std::uint64_t h = 1469598103934665603ull;
    for (unsigned char ch : text) {
        h ^= ch;
        h *= 1099511628211ull;
    }
    return h;
}

std::string threshold_report_json(const ThresholdReport& rep) {
    nlohmann::ordered_json j;
    auto put = [&](const char* k, Real v) {
        if (std::isinf(v))
            j[k] = "inf";
        else
            j[k] = v;
    };
    put("chi_star", rep.chi_star);
    j["chi_star_case"] = to_string(rep.chi_case);
    put("lambda", rep.lambda);
    put("chi", rep.chi);
    put("rho0_linf", rep.rho0_linf);
    put("rho0_l1", rep.rho0_l1);
    put("omega_measure", rep.omega_measure);
    put("t_final", rep.t_final);
    put("K3", rep.K3);
    put("M_star", rep.M_star);
    put("eta_Mstar", rep.eta_Mstar);
    put("xi", rep.xi);
    put("xi_eps", rep.xi_eps);
    put("c0", rep.c0);
    put("delta_lambda", rep.delta_lambda);
    put("tau_star", rep.tau_star);
    put("tau_hat", rep.tau_hat);
    put("tau_tilde", rep.tau_tilde);
    put("tau_double_star", rep.tau_double_star);
    put("C1", rep.C1);
    put("C2", rep.C2);
    put("C3", rep.C3);
    put("C4", rep.C4);
    put("C5", rep.C5);
    put("C6", rep.C6);
    put("C7", rep.C7);
    put("C8", rep.C8);
    put("C9", rep.C9);
    return j.dump(2);
}

ThresholdReport threshold_report_from_json(const std::string& text) {
    const auto j = nlohmann::json::parse(text);
    ThresholdReport rep;
    auto get = [&](const char* k) -> Real {
        if (j.at(k).is_string()) return kInf;
        return j.at(k).get<Real>();
    };
    rep.chi_star = get("chi_star");
    const std::string cs = j.at("chi_star_case").get<std::string>();
    rep.chi_case = cs == "r>2"               ? ChiStarCase::r_above_2
                   : cs == "r=2"             ? ChiStarCase::r_equal_2
                   : cs == "1<r<2, large rho0" ? ChiStarCase::subquadratic_large_rho0
                                             : ChiStarCase::subquadratic_small_rho0;
    rep.lambda = get("lambda");
    rep.chi = get("chi");
    rep.rho0_linf = get("rho0_linf");
    rep.rho0_l1 = get("rho0_l1");
    rep.omega_measure = get("omega_measure");
    rep.t_final = get("t_final");
    rep.K3 = get("K3");
    rep.M_star = get("M_star");
    rep.eta_Mstar = get("eta_Mstar");
    rep.xi = get("xi");
    rep.xi_eps = get("xi_eps");
    rep.c0 = get("c0");
    rep.delta_lambda = get("delta_lambda");
    rep.tau_star = get("tau_star");
    rep.tau_hat = get("tau_hat");
    rep.tau_tilde = get("tau_tilde");
    rep.tau_double_star = get("tau_double_star");
    rep.C1 = get("C1");
    rep.C2 = get("C2");
    rep.C3 = get("C3");
    rep.C4 = get("C4");
    rep.C5 = get("C5");
    rep.C6 = get("C6");
    rep.C7 = get("C7");
    rep.C8 = get("C8");
    rep.C9 = get("C9");
    return rep;
}

void write_manifest(const RunManifest& man, const std::string& path) {
    nlohmann::ordered_json j;
    j["config_hash"] = man.config_hash;
    j["status"] = man.status;
    j["wall_time_s"] = man.wall_time_s;
    if (man.has_thresholds)
        j["thresholds"] = nlohmann::ordered_json::parse(threshold_report_json(man.thresholds));
    const std::string tmp = path + ".tmp";
    {
        std::ofstream out(tmp);
        if (!out) throw std::runtime_error("write_manifest: cannot open " + tmp);
        out << j.dump(2) << "\n";
    }
    if (std::rename(tmp.c_str(), path.c_str()) != 0)
        throw std::runtime_error("write_manifest: rename failed for " + path);
}

}  // namespace ksjko
