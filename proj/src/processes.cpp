#include "prunelab/processes.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <numbers>
#include <stdexcept>

namespace prunelab {

ChainParams::ChainParams(double p_, double q_, int t_cap_) : p(p_), q(q_), t_cap(t_cap_) {
    if (p < 0.0 || p > 1.0 || q < 0.0 || q > 1.0)
        throw std::invalid_argument("ChainParams: p and q must lie in [0, 1]");
    if (p + q > 1.0)
        throw std::invalid_argument("ChainParams: p + q must not exceed 1");
    if (t_cap < 1)
        throw std::invalid_argument("ChainParams: t_cap must be at least 1");
}

namespace {

// Raw broken-bin counts B_0..B_k of the original pruning process. The
// residual starts at minus the target restriction, so B_0 counts the
// mirrored-target bin.
std::vector<int> original_counts(const TwoLayerNet& net, std::span<const int> order,
                                 const InputFamily& fam, const TargetNeuron& target,
                                 const BinPartition& part, int k, double c) {
    if (k < 0 || k > net.size())
        throw std::invalid_argument("simulate_original: k out of range");
    if (static_cast<int>(order.size()) < k)
        throw std::invalid_argument("simulate_original: order shorter than k");
    Pwl1D res = -restrict_target(target, fam).fn;
    std::vector<int> counts;
    counts.reserve(static_cast<std::size_t>(k) + 1);
    counts.push_back(broken_bin_count(res, part, c));
    for (int s = 0; s < k; ++s) {
        res += restrict_neuron(net.neuron(order[static_cast<std::size_t>(s)]), fam).fn;
        counts.push_back(broken_bin_count(res, part, c));
    }
    return counts;
}

Trajectory trajectory_from_counts(std::vector<int> counts) {
    Trajectory t;
    for (std::size_t s = 1; s < counts.size(); ++s) {
        const int d = counts[s] - counts[s - 1];
        if (d > 0)
            ++t.right_moves;
        else if (d < 0)
            ++t.left_moves;
        if (d > 1 || d < -1)
            ++t.multi_event_steps;
    }
    t.states = std::move(counts);
    return t;
}

} // namespace

Trajectory simulate_original(const TwoLayerNet& net, std::span<const int> order,
                             const InputFamily& fam, const TargetNeuron& target,
                             const BinPartition& part, int k, double c) {
    return trajectory_from_counts(original_counts(net, order, fam, target, part, k, c));
}

namespace {

int clamp_increment(int d) { return d > 1 ? 1 : (d < -1 ? -1 : d); }

Trajectory capped_from_counts(const std::vector<int>& counts, int t_cap) {
    Trajectory t;
    t.states.reserve(counts.size());
    int state = std::min(counts.front(), t_cap);
    t.states.push_back(state);
    for (std::size_t s = 1; s < counts.size(); ++s) {
        const int raw = counts[s] - counts[s - 1];
        if (raw > 1 || raw < -1)
            ++t.multi_event_steps;
        const int d = clamp_increment(raw);
        if (d > 0 && state < t_cap) {
            ++state;
            ++t.right_moves;
        } else if (d < 0 && state > 0) {
            --state;
            ++t.left_moves;
        }
        t.states.push_back(state);
    }
    return t;
}

} // namespace

Trajectory simulate_capped(const TwoLayerNet& net, std::span<const int> order,
                           const InputFamily& fam, const TargetNeuron& target,
                           const BinPartition& part, int k, double c, int t_cap) {
    if (t_cap < 1)
        throw std::invalid_argument("simulate_capped: t_cap must be at least 1");
    return capped_from_counts(original_counts(net, order, fam, target, part, k, c), t_cap);
}

Trajectory simulate_bd(const ChainParams& params, int k, RngStream& rng) {
    if (k < 0)
        throw std::invalid_argument("simulate_bd: k must be nonnegative");
    Trajectory t;
    t.states.reserve(static_cast<std::size_t>(k) + 1);
    int state = 1;
    t.states.push_back(state);
    for (int s = 0; s < k; ++s) {
        const double u = rng.next_unit();
        if (u < params.p) {
            if (state < params.t_cap) {
                ++state;
                ++t.right_moves;
            }
        } else if (u >= 1.0 - params.q) {
            if (state > 0) {
                --state;
                ++t.left_moves;
            }
        }
        t.states.push_back(state);
    }
    return t;
}

namespace {

std::vector<double> bd_step(const ChainParams& params, const std::vector<double>& dist) {
    const int T = params.t_cap;
    std::vector<double> next(static_cast<std::size_t>(T) + 1, 0.0);
    for (int b = 0; b <= T; ++b) {
        const double mass = dist[static_cast<std::size_t>(b)];
        if (mass == 0.0)
            continue;
        const double up = b < T ? params.p : 0.0;
        const double down = b > 0 ? params.q : 0.0;
        next[static_cast<std::size_t>(b)] += mass * (1.0 - up - down);
        if (b < T)
            next[static_cast<std::size_t>(b) + 1] += mass * up;
        if (b > 0)
            next[static_cast<std::size_t>(b) - 1] += mass * down;
    }
    return next;
}

} // namespace

std::vector<double> bd_distribution(const ChainParams& params, int k) {
    if (k < 0)
        throw std::invalid_argument("bd_distribution: k must be nonnegative");
    std::vector<double> dist(static_cast<std::size_t>(params.t_cap) + 1, 0.0);
    dist[1] = 1.0;
    for (int s = 0; s < k; ++s)
        dist = bd_step(params, dist);
    return dist;
}

double bd_exact_state0(const ChainParams& params, int k) {
    return bd_distribution(params, k)[0];
}

std::vector<double> bd_state0_curve(const ChainParams& params, int k_max) {
    if (k_max < 0)
        throw std::invalid_argument("bd_state0_curve: k_max must be nonnegative");
    std::vector<double> curve;
    curve.reserve(static_cast<std::size_t>(k_max) + 1);
    std::vector<double> dist(static_cast<std::size_t>(params.t_cap) + 1, 0.0);
    dist[1] = 1.0;
    curve.push_back(dist[0]);
    for (int s = 0; s < k_max; ++s) {
        dist = bd_step(params, dist);
        curve.push_back(dist[0]);
    }
    return curve;
}

TransitionEstimate estimate_transition_probs(const Pwl1D& state, const BinPartition& part,
                                             double c, int n_trials, RngStream& rng) {
    if (n_trials < 1)
        throw std::invalid_argument("estimate_transition_probs: n_trials must be positive");
    TransitionEstimate est;
    est.trials = n_trials;
    for (int t = 0; t < n_trials; ++t) {
        const double a = rng.next_gaussian();
        const double b = rng.next_gaussian();
        const double alpha = rng.next_gaussian();
        if (a == 0.0)
            continue;
        const double bp = -b / a;
        const int bin = part.bin_index(bp);
        if (bin < 0)
            continue;
        const Interval iv = part.bin(bin);
        if (bp <= iv.lo || bp >= iv.hi)
            continue;
        // Only the bin holding the new breakpoint can change status.
        const bool before = is_bin_broken(state, iv, c, part.epsilon()).broken;
        Pwl1D after = state;
        after += Pwl1D::relu_ramp(alpha, a, b);
        const bool now = is_bin_broken(after, iv, c, part.epsilon()).broken;
        if (!before && now)
            ++est.births;
        else if (before && !now)
            ++est.deaths;
    }
    est.p_hat = static_cast<double>(est.births) / n_trials;
    est.q_hat = static_cast<double>(est.deaths) / n_trials;
    return est;
}

double cauchy_mass_top_bins(const BinPartition& part, int t) {
    if (t < 0)
        throw std::invalid_argument("cauchy_mass_top_bins: t must be nonnegative");
    std::vector<double> masses;
    masses.reserve(static_cast<std::size_t>(part.num_bins()));
    for (int i = 0; i < part.num_bins(); ++i) {
        const Interval iv = part.bin(i);
        masses.push_back((std::atan(iv.hi) - std::atan(iv.lo)) / std::numbers::pi);
    }
    std::sort(masses.begin(), masses.end(), std::greater<>());
    double total = 0.0;
    const int take = std::min<int>(t, part.num_bins());
    for (int i = 0; i < take; ++i)
        total += masses[static_cast<std::size_t>(i)];
    return total;
}

TargetNeuron sample_initially_broken_target(int d, const InputFamily& fam,
                                            const BinPartition& part, double c,
                                            RngStream& rng, int max_attempts) {
    for (int attempt = 0; attempt < max_attempts; ++attempt) {
        TargetNeuron target(sample_unit_sphere(d, rng));
        if (broken_bin_count(-restrict_target(target, fam).fn, part, c) == 1)
            return target;
    }
    throw std::runtime_error(
        "sample_initially_broken_target: no non-degenerate target found; the broken-bin "
        "level is likely too demanding for unit-norm targets at this epsilon");
}

CoupledRun simulate_coupled(const TwoLayerNet& net, std::span<const int> order,
                            const InputFamily& fam, const TargetNeuron& target,
                            const BinPartition& part, int k, double c, int t_cap,
                            const ChainParams& params, RngStream& rng,
                            const TransitionEstimate* initial_estimate) {
    if (t_cap < 1)
        throw std::invalid_argument("simulate_coupled: t_cap must be at least 1");
    CoupledRun run;

    TransitionEstimate est;
    if (initial_estimate) {
        est = *initial_estimate;
    } else {
        RngStream calib = rng.substream(0x7472616E73u);
        est = estimate_transition_probs(-restrict_target(target, fam).fn, part, c, 2000, calib);
    }
    run.p_hat0 = est.p_hat;
    run.q_hat0 = est.q_hat;
    run.precondition_ok = params.p <= est.p_hat && params.q >= est.q_hat;

    const std::vector<int> counts = original_counts(net, order, fam, target, part, k, c);
    run.orig = trajectory_from_counts(counts);
    run.cap = capped_from_counts(counts, t_cap);

    const double thin = est.p_hat > 0.0 ? std::min(1.0, params.p / est.p_hat) : 1.0;
    const double boost =
        params.q > est.q_hat && est.q_hat < 1.0 ? (params.q - est.q_hat) / (1.0 - est.q_hat) : 0.0;

    Trajectory bd;
    bd.states.reserve(counts.size());
    int state = 1;
    bd.states.push_back(state);
    for (std::size_t s = 1; s < counts.size(); ++s) {
        const int raw = counts[s] - counts[s - 1];
        const int d = clamp_increment(raw);
        const double u = rng.next_unit();
        bool birth = false;
        bool death = false;
        if (d < 0) {
            death = true; // chain deaths cover every capped death
        } else if (d > 0) {
            if (u < thin)
                birth = true; // thinned sub-event of capped births
            else if (u > 1.0 - boost)
                death = true;
        } else {
            if (u > 1.0 - boost)
                death = true;
        }
        if (birth && state < t_cap) {
            ++state;
            ++bd.right_moves;
        } else if (death && state > 0) {
            --state;
            ++bd.left_moves;
        }
        bd.states.push_back(state);
    }
    run.bd = std::move(bd);

    run.dominated.resize(counts.size(), 1);
    for (std::size_t s = 0; s < counts.size(); ++s) {
        if (run.cap.states[s] > run.orig.states[s]) {
            run.cap_le_orig = false;
            run.dominated[s] = 0;
        }
        if (run.bd.states[s] > run.cap.states[s]) {
            run.bd_le_cap = false;
            run.dominated[s] = 0;
        }
    }
    return run;
}

} // namespace prunelab
