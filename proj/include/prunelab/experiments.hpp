#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>

namespace prunelab {

/// Exact min over the scale a of max_i |f_i - a * g_i| on a finite witness
/// set (the single-neuron campaign's gridInfSup). The upper envelope is
/// convex piecewise linear in a, so vertices and pairwise crossings contain
/// the optimum.
double witness_inf_sup(std::span<const double> f, std::span<const double> g);

/// Configuration or usage problem; the CLI maps it to exit code 2.
struct UsageError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Broken internal invariant (conservation, domination of the deterministic
/// coupling, ...); the CLI maps it to exit code 3.
struct InternalError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct ExperimentConfig {
    std::string experiment;
    int d = 4;
    int n_h = 12;
    double epsilon = 0.1;
    double r = 2.0;
    double cap_c = 1.0;  // success margin: family error <= cap_c * epsilon
    double gamma = 1.0;  // slope-jump scale behind the default broken-bin level
    std::optional<double> c;  // broken-bin level; defaults to gamma / 16
    std::optional<int> t_cap; // cap T; defaults to ceil(r / (8 epsilon))
    std::optional<double> p;  // chain birth prob; absent = auto-calibrated
    std::optional<double> q;  // chain death prob; absent = auto-calibrated
    int trials = 100;
    std::uint64_t seed = 1;
    std::string out = "out";
    int workers = 1;
    int pool = 30;   // weight-arm first-layer neurons per coordinate and sign
    int k_steps = 0; // process length; 0 = derived per campaign

    double broken_level() const { return c.value_or(gamma / 16.0); }
    int cap_default() const;
    /// Stable FNV-1a hash of the resolved configuration.
    std::string hash() const;
};

/// JSON file with keys matching the field names
/// (experiment, d, n_h, epsilon, r, cap_c, gamma, c, t_cap, p, q, trials,
/// seed, out, workers, pool, k_steps).
ExperimentConfig load_config_file(const std::string& path);

/// Rejects out-of-range values, naming the violated hypothesis.
void validate_config(const ExperimentConfig& cfg);

struct CampaignResult {
    std::string csv_path;
    std::string meta_path;
    std::string csv_text;  // exact bytes written, for replay checks
    std::string meta_text; // sidecar contents (config, calibrations, aggregates)
};

CampaignResult run_separation(const ExperimentConfig& cfg);
CampaignResult run_chain(const ExperimentConfig& cfg);
CampaignResult run_bins(const ExperimentConfig& cfg);
CampaignResult run_coupling(const ExperimentConfig& cfg);
CampaignResult run_single_neuron(const ExperimentConfig& cfg);

/// Dispatch by cfg.experiment.
CampaignResult run_campaign(const ExperimentConfig& cfg);

} // namespace prunelab
