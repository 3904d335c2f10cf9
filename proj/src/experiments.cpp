#include "prunelab/experiments.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <limits>
#include <numbers>
#include <thread>
#include <vector>

#include <json.hpp>

#include "prunelab/model.hpp"
#include "prunelab/processes.hpp"
#include "prunelab/pwl.hpp"
#include "prunelab/rng.hpp"
#include "prunelab/search.hpp"

namespace prunelab {

using nlohmann::json;

namespace {

std::string fmt(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

std::string fnv1a_hex(const std::string& data) {
    std::uint64_t h = 0xCBF29CE484222325ull;
    for (unsigned char ch : data) {
        h ^= ch;
        h *= 0x100000001B3ull;
    }
    char buf[20];
    std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

// Stream tags per purpose; each trial derives substreams from its index.
enum StreamTag : std::uint64_t {
    kTagTarget = 1,
    kTagNet = 2,
    kTagWeightNet = 3,
    kTagChain = 4,
    kTagCalibration = 5,
    kTagSphere = 6,
    kTagCoupling = 7,
    kTagBallSample = 8,
};

// Sampled lower bound on the sup error over the radius-r ball (auxiliary
// telemetry; family-restricted errors are the certified quantity).
double sampled_ball_error(const std::function<double(std::span<const double>)>& approx,
                          const TargetNeuron& target, double r, int n, RngStream& rng) {
    const int d = target.dim();
    double worst = 0.0;
    for (int i = 0; i < n; ++i) {
        std::vector<double> x = sample_unit_sphere(d, rng);
        const double radius = r * std::pow(rng.next_unit(), 1.0 / d);
        for (double& v : x)
            v *= radius;
        worst = std::max(worst, std::abs(approx(x) - eval_target(target, x)));
    }
    return worst;
}

RngStream trial_stream(const ExperimentConfig& cfg, int trial, StreamTag tag) {
    return RngStream(cfg.seed, (static_cast<std::uint64_t>(trial) << 8) | tag);
}

void parallel_trials(int trials, int workers, const std::function<void(int)>& fn) {
    if (workers <= 1 || trials <= 1) {
        for (int t = 0; t < trials; ++t)
            fn(t);
        return;
    }
    std::atomic<int> next{0};
    auto drain = [&] {
        for (int t = next.fetch_add(1); t < trials; t = next.fetch_add(1))
            fn(t);
    };
    std::vector<std::thread> pool;
    const int n_threads = std::min(workers, trials);
    pool.reserve(static_cast<std::size_t>(n_threads));
    for (int w = 0; w < n_threads; ++w)
        pool.emplace_back(drain);
    for (std::thread& th : pool)
        th.join();
}

CampaignResult write_outputs(const ExperimentConfig& cfg, const std::string& csv,
                             json meta) {
    namespace fs = std::filesystem;
    fs::create_directories(cfg.out);
    CampaignResult out;
    out.csv_text = csv;
    const fs::path csv_path = fs::path(cfg.out) / (cfg.experiment + ".csv");
    const fs::path meta_path = fs::path(cfg.out) / (cfg.experiment + ".meta.json");
    {
        std::ofstream f(csv_path, std::ios::binary);
        if (!f)
            throw UsageError("cannot write " + csv_path.string());
        f << csv;
    }
    meta["config_hash"] = cfg.hash();
    out.meta_text = meta.dump(2) + "\n";
    {
        std::ofstream f(meta_path, std::ios::binary);
        if (!f)
            throw UsageError("cannot write " + meta_path.string());
        f << out.meta_text;
    }
    out.csv_path = csv_path.string();
    out.meta_path = meta_path.string();
    return out;
}

json base_meta(const ExperimentConfig& cfg, double wall_seconds) {
    json meta;
    meta["experiment"] = cfg.experiment;
    json c;
    c["experiment"] = cfg.experiment;
    c["d"] = cfg.d;
    c["n_h"] = cfg.n_h;
    c["epsilon"] = cfg.epsilon;
    c["r"] = cfg.r;
    c["cap_c"] = cfg.cap_c;
    c["gamma"] = cfg.gamma;
    c["c"] = cfg.broken_level();
    c["t_cap"] = cfg.t_cap.has_value() ? json(*cfg.t_cap) : json();
    c["p"] = cfg.p.has_value() ? json(*cfg.p) : json();
    c["q"] = cfg.q.has_value() ? json(*cfg.q) : json();
    c["trials"] = cfg.trials;
    c["seed"] = cfg.seed;
    c["out"] = cfg.out;
    c["workers"] = cfg.workers;
    c["pool"] = cfg.pool;
    c["k_steps"] = cfg.k_steps;
    meta["config"] = std::move(c);
    meta["wall_seconds"] = wall_seconds;
    return meta;
}

class Stopwatch {
public:
    double seconds() const {
        return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
    }

private:
    std::chrono::steady_clock::time_point start_ = std::chrono::steady_clock::now();
};

} // namespace

int ExperimentConfig::cap_default() const {
    const int t = static_cast<int>(std::ceil(r / (8.0 * epsilon)));
    return std::max(1, t);
}

std::string ExperimentConfig::hash() const {
    std::string s;
    s += "experiment=" + experiment + "\n";
    s += "d=" + std::to_string(d) + "\n";
    s += "n_h=" + std::to_string(n_h) + "\n";
    s += "epsilon=" + fmt(epsilon) + "\n";
    s += "r=" + fmt(r) + "\n";
    s += "cap_c=" + fmt(cap_c) + "\n";
    s += "gamma=" + fmt(gamma) + "\n";
    s += "c=" + (c ? fmt(*c) : std::string("auto")) + "\n";
    s += "t_cap=" + (t_cap ? std::to_string(*t_cap) : std::string("auto")) + "\n";
    s += "p=" + (p ? fmt(*p) : std::string("auto")) + "\n";
    s += "q=" + (q ? fmt(*q) : std::string("auto")) + "\n";
    s += "trials=" + std::to_string(trials) + "\n";
    s += "seed=" + std::to_string(seed) + "\n";
    s += "pool=" + std::to_string(pool) + "\n";
    s += "k_steps=" + std::to_string(k_steps) + "\n";
    return fnv1a_hex(s);
}

ExperimentConfig load_config_file(const std::string& path) {
    std::ifstream f(path);
    if (!f)
        throw UsageError("config file not found: " + path);
    json j;
    try {
        f >> j;
    } catch (const json::exception& e) {
        throw UsageError("config file " + path + " is not valid JSON: " + e.what());
    }
    ExperimentConfig cfg;
    static const char* known[] = {"experiment", "d",     "n_h",  "epsilon", "r",
                                  "cap_c",      "gamma", "c",    "t_cap",   "p",
                                  "q",          "trials", "seed", "out",     "workers",
                                  "pool",       "k_steps"};
    for (auto it = j.begin(); it != j.end(); ++it) {
        const bool ok = std::any_of(std::begin(known), std::end(known),
                                    [&](const char* k) { return it.key() == k; });
        if (!ok)
            throw UsageError("config file " + path + ": unknown key \"" + it.key() + "\"");
    }
    try {
        if (j.contains("experiment")) cfg.experiment = j["experiment"].get<std::string>();
        if (j.contains("d")) cfg.d = j["d"].get<int>();
        if (j.contains("n_h")) cfg.n_h = j["n_h"].get<int>();
        if (j.contains("epsilon")) cfg.epsilon = j["epsilon"].get<double>();
        if (j.contains("r")) cfg.r = j["r"].get<double>();
        if (j.contains("cap_c")) cfg.cap_c = j["cap_c"].get<double>();
        if (j.contains("gamma")) cfg.gamma = j["gamma"].get<double>();
        if (j.contains("c") && !j["c"].is_null()) cfg.c = j["c"].get<double>();
        if (j.contains("t_cap") && !j["t_cap"].is_null()) cfg.t_cap = j["t_cap"].get<int>();
        if (j.contains("p") && !j["p"].is_null()) cfg.p = j["p"].get<double>();
        if (j.contains("q") && !j["q"].is_null()) cfg.q = j["q"].get<double>();
        if (j.contains("trials")) cfg.trials = j["trials"].get<int>();
        if (j.contains("seed")) cfg.seed = j["seed"].get<std::uint64_t>();
        if (j.contains("out")) cfg.out = j["out"].get<std::string>();
        if (j.contains("workers")) cfg.workers = j["workers"].get<int>();
        if (j.contains("pool")) cfg.pool = j["pool"].get<int>();
        if (j.contains("k_steps")) cfg.k_steps = j["k_steps"].get<int>();
    } catch (const json::exception& e) {
        throw UsageError("config file " + path + ": bad value type: " + e.what());
    }
    return cfg;
}

void validate_config(const ExperimentConfig& cfg) {
    if (cfg.d < 2)
        throw UsageError("d = " + std::to_string(cfg.d) +
                         " violates the hypothesis \"d >= 2\"");
    if (!(cfg.epsilon > 0.0 && cfg.epsilon < 1.0))
        throw UsageError("epsilon = " + fmt(cfg.epsilon) +
                         " violates the hypothesis \"epsilon in (0,1)\"");
    if (cfg.r < 2.0)
        throw UsageError("r = " + fmt(cfg.r) +
                         " violates the hypothesis \"fixed radius R > 2\" (the boundary R = 2 "
                         "is accepted for desk-scale runs)");
    if (cfg.n_h < 1)
        throw UsageError("n_h must be at least 1");
    if (cfg.cap_c <= 0.0)
        throw UsageError("cap_c must be positive");
    if (cfg.gamma <= 0.0)
        throw UsageError("gamma must be positive");
    if (cfg.c && *cfg.c <= 0.0)
        throw UsageError("c must be positive");
    if (cfg.t_cap && *cfg.t_cap < 1)
        throw UsageError("t_cap must be at least 1");
    for (const auto& [name, v] : {std::pair<const char*, std::optional<double>>{"p", cfg.p},
                                  {"q", cfg.q}})
        if (v && (*v < 0.0 || *v > 1.0))
            throw UsageError(std::string(name) + " must lie in [0, 1]");
    if (cfg.p && cfg.q && *cfg.p + *cfg.q > 1.0)
        throw UsageError("p + q must not exceed 1");
    if (cfg.trials < 1)
        throw UsageError("trials must be at least 1");
    if (cfg.workers < 1)
        throw UsageError("workers must be at least 1");
    if (cfg.pool < 1)
        throw UsageError("pool must be at least 1");
    if (cfg.k_steps < 0)
        throw UsageError("k_steps must be nonnegative");
}

CampaignResult run_separation(const ExperimentConfig& cfg) {
    validate_config(cfg);
    if (cfg.n_h > 24)
        throw UsageError("separation: n_h = " + std::to_string(cfg.n_h) +
                         " exceeds the exhaustive cap of 24; use the greedy arm via the "
                         "library instead");
    Stopwatch watch;

    struct TrialOut {
        double neuron_error = 0.0;
        bool neuron_ok = false;
        double weight_error = 0.0;
        bool weight_ok = false;
        bool weight_built = false;
        double neuron_ball = 0.0;
        double weight_ball = 0.0;
    };
    std::vector<TrialOut> results(static_cast<std::size_t>(cfg.trials));

    parallel_trials(cfg.trials, cfg.workers, [&](int trial) {
        RngStream target_rng = trial_stream(cfg, trial, kTagTarget);
        RngStream net_rng = trial_stream(cfg, trial, kTagNet);
        RngStream weight_rng = trial_stream(cfg, trial, kTagWeightNet);
        RngStream ball_rng = trial_stream(cfg, trial, kTagBallSample);

        const TargetNeuron target(sample_unit_sphere(cfg.d, target_rng));
        const TwoLayerNet net = sample_network(cfg.d, cfg.n_h, net_rng);

        TrialOut out;
        const SearchResult sr =
            exhaustive_neuron_prune(net, target, cfg.epsilon, cfg.r, cfg.cap_c, 24, 1);
        out.neuron_error = sr.best_error;
        out.neuron_ok = sr.best_error <= cfg.cap_c * cfg.epsilon;

        const TwoHiddenLayerNet raw = sample_two_hidden_net(cfg.d, cfg.pool, weight_rng);
        const WeightPruneResult wp = build_weight_pruned_approx(raw, target, cfg.epsilon, cfg.r);
        double measured = 0.0;
        for (int i = 1; i <= InputFamily::count(cfg.d); ++i)
            measured = std::max(measured, family_error_two_hidden(raw, wp.mask, target,
                                                                  InputFamily(i, cfg.d), cfg.r));
        out.weight_error = measured;
        out.weight_built = wp.success;
        out.weight_ok = wp.success && measured <= cfg.cap_c * cfg.epsilon;

        out.neuron_ball = sampled_ball_error(
            [&](std::span<const double> x) { return eval_subnet(net, sr.best_mask, x); },
            target, cfg.r, 500, ball_rng);
        out.weight_ball = sampled_ball_error(
            [&](std::span<const double> x) { return eval_two_hidden(raw, wp.mask, x); },
            target, cfg.r, 500, ball_rng);
        results[static_cast<std::size_t>(trial)] = out;
    });

    std::string csv = "seed,n_h,arm,min_error,success\n";
    int neuron_wins = 0, weight_wins = 0, built = 0;
    double neuron_ball_mean = 0.0, weight_ball_mean = 0.0;
    for (int trial = 0; trial < cfg.trials; ++trial) {
        const TrialOut& t = results[static_cast<std::size_t>(trial)];
        csv += std::to_string(trial) + "," + std::to_string(cfg.n_h) + ",neuron," +
               fmt(t.neuron_error) + "," + (t.neuron_ok ? "1" : "0") + "\n";
        csv += std::to_string(trial) + "," + std::to_string(cfg.n_h) + ",weight," +
               fmt(t.weight_error) + "," + (t.weight_ok ? "1" : "0") + "\n";
        neuron_wins += t.neuron_ok ? 1 : 0;
        weight_wins += t.weight_ok ? 1 : 0;
        built += t.weight_built ? 1 : 0;
        neuron_ball_mean += t.neuron_ball / cfg.trials;
        weight_ball_mean += t.weight_ball / cfg.trials;
    }

    json meta = base_meta(cfg, watch.seconds());
    meta["neuron_success_rate"] = static_cast<double>(neuron_wins) / cfg.trials;
    meta["weight_success_rate"] = static_cast<double>(weight_wins) / cfg.trials;
    meta["weight_construction_rate"] = static_cast<double>(built) / cfg.trials;
    meta["neuron_ball_error_sampled_mean"] = neuron_ball_mean;
    meta["weight_ball_error_sampled_mean"] = weight_ball_mean;
    return write_outputs(cfg, csv, std::move(meta));
}

CampaignResult run_chain(const ExperimentConfig& cfg) {
    validate_config(cfg);
    const double p = cfg.p.value_or(0.4);
    const double q = cfg.q.value_or(0.15);
    const int t_cap = cfg.t_cap.value_or(40);
    if (p + q > 1.0)
        throw UsageError("chain: p + q must not exceed 1");
    ChainParams params(p, q, t_cap);
    const int k_max = cfg.k_steps > 0 ? cfg.k_steps : 2 * t_cap;
    Stopwatch watch;

    // Exact DP curve with per-step conservation audit.
    std::vector<double> exact;
    exact.reserve(static_cast<std::size_t>(k_max) + 1);
    double conservation_dev = 0.0;
    for (int k = 0; k <= k_max; ++k) {
        const std::vector<double> dist = bd_distribution(params, k);
        double total = 0.0;
        for (double m : dist)
            total += m;
        conservation_dev = std::max(conservation_dev, std::abs(total - 1.0));
        exact.push_back(dist[0]);
    }
    if (conservation_dev > 1e-12)
        throw InternalError("chain: transition operator lost probability mass");

    // Monte Carlo overlay, one stream per trajectory; zero counts are summed
    // over trials, so the tally is independent of the worker count.
    std::vector<std::uint8_t> trial_zero(
        static_cast<std::size_t>(cfg.trials) * (static_cast<std::size_t>(k_max) + 1), 0);
    parallel_trials(cfg.trials, cfg.workers, [&](int trial) {
        RngStream rng = trial_stream(cfg, trial, kTagChain);
        const Trajectory t = simulate_bd(params, k_max, rng);
        for (int k = 0; k <= k_max; ++k)
            trial_zero[static_cast<std::size_t>(trial) * (static_cast<std::size_t>(k_max) + 1) +
                       static_cast<std::size_t>(k)] =
                t.states[static_cast<std::size_t>(k)] == 0 ? 1 : 0;
    });
    std::vector<long long> zero_counts(static_cast<std::size_t>(k_max) + 1, 0);
    for (int trial = 0; trial < cfg.trials; ++trial)
        for (int k = 0; k <= k_max; ++k)
            zero_counts[static_cast<std::size_t>(k)] +=
                trial_zero[static_cast<std::size_t>(trial) * (static_cast<std::size_t>(k_max) + 1) +
                           static_cast<std::size_t>(k)];

    std::string csv = "k,exactProb,mcProb,mcStderr\n";
    double max_z = 0.0;
    for (int k = 0; k <= k_max; ++k) {
        const double mc =
            static_cast<double>(zero_counts[static_cast<std::size_t>(k)]) / cfg.trials;
        const double se = std::sqrt(std::max(mc * (1.0 - mc), 1e-12) / cfg.trials);
        csv += std::to_string(k) + "," + fmt(exact[static_cast<std::size_t>(k)]) + "," +
               fmt(mc) + "," + fmt(se) + "\n";
        // z-score against the exact-based standard error: the MC-based one
        // degenerates when the empirical count is zero
        const double pk = exact[static_cast<std::size_t>(k)];
        const double se_exact = std::sqrt(std::max(pk * (1.0 - pk), 1e-12) / cfg.trials);
        if (k >= 1)
            max_z = std::max(max_z, std::abs(mc - pk) / se_exact);
    }

    // Least-squares slope of log exactProb over k in [5, 2T/3].
    const int k_lo = 5;
    const int k_hi = std::min(k_max, (2 * t_cap) / 3);
    double slope = 0.0;
    {
        double sx = 0, sy = 0, sxx = 0, sxy = 0;
        int n = 0;
        for (int k = k_lo; k <= k_hi; ++k) {
            const double pk = exact[static_cast<std::size_t>(k)];
            if (pk <= 0.0)
                continue;
            const double y = std::log(pk);
            sx += k;
            sy += y;
            sxx += static_cast<double>(k) * k;
            sxy += k * y;
            ++n;
        }
        if (n >= 2)
            slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);
    }

    json meta = base_meta(cfg, watch.seconds());
    meta["p"] = p;
    meta["q"] = q;
    meta["t_cap"] = t_cap;
    meta["k_max"] = k_max;
    meta["fitted_log_slope"] = slope;
    meta["slope_window"] = {k_lo, k_hi};
    meta["dp_mc_max_z"] = max_z;
    meta["conservation_max_dev"] = conservation_dev;
    return write_outputs(cfg, csv, std::move(meta));
}

CampaignResult run_bins(const ExperimentConfig& cfg) {
    validate_config(cfg);
    Stopwatch watch;
    const BinPartition part(cfg.epsilon, cfg.r);
    const double c = cfg.broken_level();
    const int k = cfg.k_steps > 0 ? std::min(cfg.k_steps, cfg.n_h) : cfg.n_h;

    struct TrialOut {
        std::vector<Trajectory> families;
        int degenerate_families = 0;
    };
    std::vector<TrialOut> results(static_cast<std::size_t>(cfg.trials));

    parallel_trials(cfg.trials, cfg.workers, [&](int trial) {
        RngStream target_rng = trial_stream(cfg, trial, kTagTarget);
        RngStream net_rng = trial_stream(cfg, trial, kTagNet);
        const TargetNeuron target(sample_unit_sphere(cfg.d, target_rng));
        const TwoLayerNet net = sample_network(cfg.d, cfg.n_h, net_rng);
        std::vector<int> order(static_cast<std::size_t>(cfg.n_h));
        for (int i = 0; i < cfg.n_h; ++i)
            order[static_cast<std::size_t>(i)] = i;

        TrialOut out;
        for (int i = 1; i <= InputFamily::count(cfg.d); ++i) {
            const InputFamily fam(i, cfg.d);
            const RestrictedRelu rt = restrict_target(target, fam);
            // A family is degenerate when the restricted target cannot seed a
            // broken bin: vanishing or sub-gamma slope, or breakpoint outside
            // I_R.
            if (rt.degenerate || std::abs(rt.slope_jump) < cfg.gamma ||
                part.bin_index(rt.breakpoint) < 0)
                ++out.degenerate_families;
            out.families.push_back(simulate_original(net, order, fam, target, part, k, c));
        }
        results[static_cast<std::size_t>(trial)] = out;
    });

    std::string csv = "seed,family,step,brokenBins\n";
    long long inc_hist[3] = {0, 0, 0}; // -1, 0, +1
    long long multi_events = 0;
    long long degenerate = 0;
    for (int trial = 0; trial < cfg.trials; ++trial) {
        const TrialOut& t = results[static_cast<std::size_t>(trial)];
        degenerate += t.degenerate_families;
        for (std::size_t f = 0; f < t.families.size(); ++f) {
            const Trajectory& traj = t.families[f];
            multi_events += traj.multi_event_steps;
            for (std::size_t s = 0; s < traj.states.size(); ++s) {
                csv += std::to_string(trial) + "," + std::to_string(f + 1) + "," +
                       std::to_string(s) + "," + std::to_string(traj.states[s]) + "\n";
                if (s > 0) {
                    const int d = traj.states[s] - traj.states[s - 1];
                    if (d >= -1 && d <= 1)
                        ++inc_hist[d + 1];
                }
            }
        }
    }

    json meta = base_meta(cfg, watch.seconds());
    meta["k"] = k;
    meta["num_bins"] = part.num_bins();
    meta["increment_histogram"] = {{"-1", inc_hist[0]}, {"0", inc_hist[1]}, {"+1", inc_hist[2]}};
    meta["multi_event_steps"] = multi_events;
    meta["degenerate_families"] = degenerate;
    return write_outputs(cfg, csv, std::move(meta));
}

CampaignResult run_coupling(const ExperimentConfig& cfg) {
    validate_config(cfg);
    Stopwatch watch;
    const BinPartition part(cfg.epsilon, cfg.r);
    const double c = cfg.broken_level();
    const int t_cap = cfg.t_cap.value_or(cfg.cap_default());
    const int k = cfg.k_steps > 0 ? std::min(cfg.k_steps, cfg.n_h) : cfg.n_h;

    // One target for the whole campaign; the initial mirrored state (and so
    // the calibration) is shared across trials. Degenerate targets (initial
    // bin not broken at level c) are rejected, matching the single initially
    // broken bin the coupled processes start from.
    RngStream target_rng(cfg.seed, kTagTarget);
    const InputFamily fam(1, cfg.d);
    const TargetNeuron target =
        sample_initially_broken_target(cfg.d, fam, part, c, target_rng);

    RngStream calib_rng(cfg.seed, kTagCalibration);
    const TransitionEstimate est = estimate_transition_probs(
        -restrict_target(target, fam).fn, part, c, 10000, calib_rng);

    // Auto-calibration: p is an empirical floor (initial birth rate scaled
    // by the worst-case unbroken fraction and a safety factor), q a rigorous
    // Cauchy ceiling on the death probability with at most t_cap broken bins.
    double p = cfg.p.value_or(
        est.p_hat * (1.0 - static_cast<double>(t_cap) / part.num_bins()) * 0.5);
    const double q = cfg.q.value_or(cauchy_mass_top_bins(part, t_cap));
    if (p + q > 1.0) {
        if (cfg.p && cfg.q)
            throw UsageError("coupling: p + q must not exceed 1");
        if (cfg.p)
            throw UsageError("coupling: p = " + fmt(p) +
                             " leaves no room for the calibrated q = " + fmt(q));
        p = std::max(0.0, 1.0 - q);
    }
    const ChainParams params(p, q, t_cap);

    struct TrialOut {
        CoupledRun run;
    };
    std::vector<TrialOut> results(static_cast<std::size_t>(cfg.trials));
    parallel_trials(cfg.trials, cfg.workers, [&](int trial) {
        RngStream net_rng = trial_stream(cfg, trial, kTagNet);
        RngStream coin_rng = trial_stream(cfg, trial, kTagCoupling);
        const TwoLayerNet net = sample_network(cfg.d, std::max(cfg.n_h, k), net_rng);
        std::vector<int> order(static_cast<std::size_t>(net.size()));
        for (int i = 0; i < net.size(); ++i)
            order[static_cast<std::size_t>(i)] = i;
        results[static_cast<std::size_t>(trial)].run =
            simulate_coupled(net, order, fam, target, part, k, c, t_cap, params, coin_rng, &est);
    });

    std::string csv = "seed,step,bOrig,bCap,bBd,dominationOk\n";
    int cap_ok = 0, bd_ok = 0, pre_ok = 0;
    std::vector<int> cap_final;
    cap_final.reserve(static_cast<std::size_t>(cfg.trials));
    for (int trial = 0; trial < cfg.trials; ++trial) {
        const CoupledRun& run = results[static_cast<std::size_t>(trial)].run;
        cap_ok += run.cap_le_orig ? 1 : 0;
        bd_ok += run.bd_le_cap ? 1 : 0;
        pre_ok += run.precondition_ok ? 1 : 0;
        cap_final.push_back(run.cap.back());
        for (std::size_t s = 0; s < run.orig.states.size(); ++s) {
            csv += std::to_string(trial) + "," + std::to_string(s) + "," +
                   std::to_string(run.orig.states[s]) + "," + std::to_string(run.cap.states[s]) +
                   "," + std::to_string(run.bd.states[s]) + "," +
                   (run.dominated[s] ? "1" : "0") + "\n";
        }
    }

    // Independent chain ensemble for the stochastic-dominance comparison at
    // the final step: F_bd must sit above F_cap up to the two DKW bands.
    std::vector<int> bd_solo(static_cast<std::size_t>(cfg.trials));
    parallel_trials(cfg.trials, cfg.workers, [&](int trial) {
        RngStream rng = trial_stream(cfg, trial, kTagChain);
        bd_solo[static_cast<std::size_t>(trial)] = simulate_bd(params, k, rng).back();
    });
    double worst_gap = 0.0; // max over thresholds of F_cap - F_bd
    for (int x = 0; x <= t_cap; ++x) {
        double f_cap = 0.0, f_bd = 0.0;
        for (int v : cap_final)
            f_cap += v <= x ? 1.0 : 0.0;
        for (int v : bd_solo)
            f_bd += v <= x ? 1.0 : 0.0;
        f_cap /= cfg.trials;
        f_bd /= cfg.trials;
        worst_gap = std::max(worst_gap, f_cap - f_bd);
    }
    const double dkw_band = std::sqrt(std::log(2.0 / 0.01) / (2.0 * cfg.trials));
    const bool dominance_ok = worst_gap <= 2.0 * dkw_band;

    json meta = base_meta(cfg, watch.seconds());
    meta["k"] = k;
    meta["t_cap"] = t_cap;
    meta["p_used"] = params.p;
    meta["q_used"] = params.q;
    meta["p_hat"] = est.p_hat;
    meta["q_hat"] = est.q_hat;
    meta["cap_le_orig_rate"] = static_cast<double>(cap_ok) / cfg.trials;
    meta["bd_le_cap_rate"] = static_cast<double>(bd_ok) / cfg.trials;
    meta["precondition_rate"] = static_cast<double>(pre_ok) / cfg.trials;
    meta["cdf_dominance_worst_gap"] = worst_gap;
    meta["dkw_band"] = dkw_band;
    meta["cdf_dominance_ok"] = dominance_ok;
    return write_outputs(cfg, csv, std::move(meta));
}

namespace {

// P(angle <= theta0) for a uniform direction on S^{d-1}: normalized surface
// integral of sin^{d-2} (composite Simpson).
double cap_probability(int d, double theta0) {
    auto integrand = [d](double phi) { return std::pow(std::sin(phi), d - 2); };
    auto simpson = [&](double a, double b) {
        const int n = 20000; // even
        const double h = (b - a) / n;
        double s = integrand(a) + integrand(b);
        for (int i = 1; i < n; ++i)
            s += integrand(a + h * i) * (i % 2 == 1 ? 4.0 : 2.0);
        return s * h / 3.0;
    };
    if (theta0 <= 0.0)
        return 0.0;
    if (theta0 >= std::numbers::pi)
        return 1.0;
    return simpson(0.0, theta0) / simpson(0.0, std::numbers::pi);
}

} // namespace

double witness_inf_sup(std::span<const double> f, std::span<const double> g) {
    if (f.size() != g.size() || f.empty())
        throw std::invalid_argument("witness_inf_sup: need equal nonempty witness sets");
    std::vector<double> cands{0.0};
    const std::size_t n = f.size();
    for (std::size_t i = 0; i < n; ++i)
        if (g[i] != 0.0)
            cands.push_back(f[i] / g[i]);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = i + 1; j < n; ++j) {
            if (g[i] != g[j])
                cands.push_back((f[i] - f[j]) / (g[i] - g[j]));
            if (g[i] + g[j] != 0.0)
                cands.push_back((f[i] + f[j]) / (g[i] + g[j]));
        }
    double best = std::numeric_limits<double>::infinity();
    for (double a : cands) {
        double worst = 0.0;
        for (std::size_t i = 0; i < n; ++i)
            worst = std::max(worst, std::abs(f[i] - a * g[i]));
        best = std::min(best, worst);
    }
    return best;
}

CampaignResult run_single_neuron(const ExperimentConfig& cfg) {
    validate_config(cfg);
    Stopwatch watch;

    RngStream target_rng(cfg.seed, kTagTarget);
    const std::vector<double> w_star = sample_unit_sphere(cfg.d, target_rng);

    struct Row {
        double theta = 0.0, sin_theta = 0.0, inf_sup = 0.0;
        bool cap_hit = false;
    };
    std::vector<Row> rows(static_cast<std::size_t>(cfg.trials));

    parallel_trials(cfg.trials, cfg.workers, [&](int trial) {
        RngStream rng = trial_stream(cfg, trial, kTagSphere);
        const std::vector<double> w = sample_unit_sphere(cfg.d, rng);
        double dot = 0.0;
        for (int i = 0; i < cfg.d; ++i)
            dot += w[static_cast<std::size_t>(i)] * w_star[static_cast<std::size_t>(i)];
        dot = std::clamp(dot, -1.0, 1.0);
        const double theta = std::acos(dot);
        const double sin_theta = std::sin(theta);

        // Witness directions in span{w*, w}: w* itself, the zero-crossing
        // direction with <w, x> = 0 and <w*, x> = sin(theta), and arc points
        // between them.
        std::vector<double> fs, gs;
        auto add_witness = [&](double phi) {
            // x(phi) = cos(phi) w* + sin(phi) e_b with e_b the unit vector
            // completing w* to an orthonormal basis of span{w*, w}
            fs.push_back(std::max(std::cos(phi), 0.0));
            gs.push_back(std::max(std::cos(phi - theta), 0.0));
        };
        add_witness(0.0);
        if (sin_theta > 0.0) {
            const double phi_perp = theta - std::numbers::pi / 2.0;
            for (int j = 0; j <= 8; ++j)
                add_witness(phi_perp + (0.0 - phi_perp) * j / 8.0);
        }
        Row row;
        row.theta = theta;
        row.sin_theta = sin_theta;
        row.inf_sup = witness_inf_sup(fs, gs);
        row.cap_hit = theta <= 2.0 * cfg.epsilon;
        rows[static_cast<std::size_t>(trial)] = row;
    });

    std::string csv = "seed,theta,sinTheta,gridInfSup,capHit\n";
    int hits = 0;
    double min_slack = std::numeric_limits<double>::infinity();
    for (int trial = 0; trial < cfg.trials; ++trial) {
        const Row& row = rows[static_cast<std::size_t>(trial)];
        csv += std::to_string(trial) + "," + fmt(row.theta) + "," + fmt(row.sin_theta) + "," +
               fmt(row.inf_sup) + "," + (row.cap_hit ? "1" : "0") + "\n";
        hits += row.cap_hit ? 1 : 0;
        min_slack = std::min(min_slack, row.inf_sup - row.sin_theta);
    }

    const double p_exact = cap_probability(cfg.d, 2.0 * cfg.epsilon);
    const double p_emp = static_cast<double>(hits) / cfg.trials;
    const double sigma = std::sqrt(std::max(p_exact * (1.0 - p_exact), 1e-300) / cfg.trials);

    json meta = base_meta(cfg, watch.seconds());
    meta["cap_prob_empirical"] = p_emp;
    meta["cap_prob_exact"] = p_exact;
    meta["cap_prob_sigma"] = sigma;
    meta["cap_within_3sigma"] = std::abs(p_emp - p_exact) <= 3.0 * sigma;
    meta["min_witness_slack"] = min_slack;
    return write_outputs(cfg, csv, std::move(meta));
}

CampaignResult run_campaign(const ExperimentConfig& cfg) {
    if (cfg.experiment == "separation")
        return run_separation(cfg);
    if (cfg.experiment == "chain")
        return run_chain(cfg);
    if (cfg.experiment == "bins")
        return run_bins(cfg);
    if (cfg.experiment == "coupling")
        return run_coupling(cfg);
    if (cfg.experiment == "single-neuron")
        return run_single_neuron(cfg);
    throw UsageError("unknown experiment \"" + cfg.experiment +
                     "\" (expected separation, chain, bins, coupling, or single-neuron)");
}

} // namespace prunelab
