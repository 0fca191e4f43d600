#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "ksjko/scheme.hpp"

namespace ksjko {

struct ConfigError : std::runtime_error {
    explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

/// File-backed run description. Flat INI sections; unknown keys rejected.
struct RunConfig {
    // [domain]
    int dim = 1;
    std::vector<Real> lengths{1.0};
    std::vector<int> cells{256};
    // [model]
    Real chi = 0.0;
    Real lambda_screen = 1.0;
    std::string bc = "neumann";
    // [entropy]
    std::string entropy_kind = "boltzmann";
    Real m = 2.0;
    Real delta = 0.0;
    // [reaction]
    Real alpha = 0.0;
    Real beta = 1.0;
    Real r = 2.0;
    // [scheme]
    Real tau = 0.01;
    Real t_final = 1.0;
    std::string backend = "quantile";
    int outer_iters = 3;
    std::string eps_schedule = "auto";  // or a comma list of absolute values
    bool enforce_thresholds = false;
    Real lambda = 1.01;
    Real inner_tol = 1e-7;
    // [init]
    std::string preset = "uniform";
    Real value = 1.0;      // uniform level / bump base
    Real amplitude = 0.1;  // perturbation or bump height
    int mode = 1;          // perturbation wavenumber
    Real width = 0.1;      // bump width as a fraction of L
    std::string path;      // csv preset
    // [output]
    std::string out_dir = "out";
    int save_every = 0;
    std::string formats = "csv";
};

RunConfig parse_run_config(const std::string& text);
RunConfig load_run_config(const std::string& path);
/// Canonical form; parse(serialize(cfg)) reproduces cfg exactly.
std::string serialize_run_config(const RunConfig& cfg);

GridSpec make_grid(const RunConfig& cfg);
DensityField build_initial(const RunConfig& cfg);
ModelParams make_model(const RunConfig& cfg);
scheme::SchemeConfig make_scheme_config(const RunConfig& cfg);

std::uint64_t fnv1a_hash(const std::string& text);

struct RunManifest {
    std::uint64_t config_hash = 0;
    std::string status;
    Real wall_time_s = 0.0;
    bool has_thresholds = false;
    ThresholdReport thresholds{};
};

std::string threshold_report_json(const ThresholdReport& rep);
ThresholdReport threshold_report_from_json(const std::string& text);

/// Written atomically (temp file + rename) at run end.
void write_manifest(const RunManifest& man, const std::string& path);

}  // namespace ksjko
