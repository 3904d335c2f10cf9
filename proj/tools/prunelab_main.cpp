#include <cstdio>
#include <exception>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "prunelab/experiments.hpp"

namespace {

struct CliOverrides {
    std::optional<std::string> config_path;
    std::optional<std::uint64_t> seed;
    std::optional<int> trials;
    std::optional<std::string> out;
    std::optional<int> workers;
    std::optional<int> d;
    std::optional<int> nh;
    std::optional<double> eps;
    std::optional<double> r;
    std::optional<double> cap_c;
    std::optional<double> gamma;
    std::optional<int> t_cap;
    std::optional<double> p;
    std::optional<double> q;
    std::optional<int> pool;
    std::optional<int> k_steps;
};

void add_common_options(CLI::App* cmd, CliOverrides& o) {
    cmd->add_option("--config", o.config_path, "JSON config file (flags override file values)");
    cmd->add_option("--seed", o.seed, "base RNG seed");
    cmd->add_option("--trials", o.trials, "number of trials / samples");
    cmd->add_option("--out", o.out, "output directory");
    cmd->add_option("--workers", o.workers, "worker threads");
    cmd->add_option("--d", o.d, "input dimension");
    cmd->add_option("--nh", o.nh, "hidden width N_h");
    cmd->add_option("--eps", o.eps, "approximation accuracy epsilon");
    cmd->add_option("--r", o.r, "ball radius R");
    cmd->add_option("--cap-c", o.cap_c, "success margin C (error <= C*eps)");
    cmd->add_option("--gamma", o.gamma, "slope-jump scale gamma");
    cmd->add_option("--t-cap", o.t_cap, "cap T of the capped process / chain");
    cmd->add_option("--p", o.p, "chain birth probability");
    cmd->add_option("--q", o.q, "chain death probability");
    cmd->add_option("--pool", o.pool, "weight-arm pool per coordinate and sign");
    cmd->add_option("--k-steps", o.k_steps, "process length override");
}

prunelab::ExperimentConfig resolve(const std::string& experiment, const CliOverrides& o) {
    prunelab::ExperimentConfig cfg;
    if (o.config_path)
        cfg = prunelab::load_config_file(*o.config_path);
    cfg.experiment = experiment;
    if (o.seed) cfg.seed = *o.seed;
    if (o.trials) cfg.trials = *o.trials;
    if (o.out) cfg.out = *o.out;
    if (o.workers) cfg.workers = *o.workers;
    if (o.d) cfg.d = *o.d;
    if (o.nh) cfg.n_h = *o.nh;
    if (o.eps) cfg.epsilon = *o.eps;
    if (o.r) cfg.r = *o.r;
    if (o.cap_c) cfg.cap_c = *o.cap_c;
    if (o.gamma) cfg.gamma = *o.gamma;
    if (o.t_cap) cfg.t_cap = *o.t_cap;
    if (o.p) cfg.p = *o.p;
    if (o.q) cfg.q = *o.q;
    if (o.pool) cfg.pool = *o.pool;
    if (o.k_steps) cfg.k_steps = *o.k_steps;
    return cfg;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"prunelab: neuron-pruning vs weight-pruning experiment harness"};
    app.require_subcommand(1);

    const char* names[] = {"separation", "chain", "bins", "coupling", "single-neuron"};
    const char* blurbs[] = {
        "exhaustive neuron pruning vs weight-pruned construction, per seed",
        "birth-death chain: exact state-0 curve, Monte Carlo overlay, log slope",
        "broken-bin trajectories of the original pruning process",
        "coupled original/capped/chain runs with domination checks",
        "single-neuron approximation: angles, sin-theta witnesses, cap hits",
    };
    CliOverrides overrides[5];
    for (int i = 0; i < 5; ++i)
        add_common_options(app.add_subcommand(names[i], blurbs[i]), overrides[i]);

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e); // prints the message
        return 2;    // every malformed invocation is a usage error
    }

    try {
        for (int i = 0; i < 5; ++i) {
            if (app.get_subcommand(names[i])->parsed()) {
                const prunelab::ExperimentConfig cfg = resolve(names[i], overrides[i]);
                const prunelab::CampaignResult res = prunelab::run_campaign(cfg);
                std::printf("wrote %s\n", res.csv_path.c_str());
                std::printf("wrote %s\n", res.meta_path.c_str());
                return 0;
            }
        }
        std::fprintf(stderr, "error: no subcommand selected\n");
        return 2;
    } catch (const prunelab::UsageError& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 2;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "internal error: %s\n", e.what());
        return 3;
    }
}
