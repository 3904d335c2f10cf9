#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "prunelab/model.hpp"
#include "prunelab/pwl.hpp"
#include "prunelab/rng.hpp"

namespace prunelab {

/// Parameters of the homogeneous (q, p, T) birth-death chain on {0, ..., T}:
/// from b < T the chain moves up with probability p, from b > 0 down with
/// probability q, and stays otherwise.
struct ChainParams {
    double p = 0.4;
    double q = 0.15;
    int t_cap = 40;

    ChainParams() = default;
    ChainParams(double p_, double q_, int t_cap_);
};

/// One realization of a broken-bin process: states B_0..B_k plus the number
/// of +1 and -1 increments. For the birth-death chain B_k = 1 + R_k - L_k.
/// multi_event_steps counts steps whose raw broken-bin change had magnitude
/// above one (analytically impossible; logged if floating point produces
/// one).
struct Trajectory {
    std::vector<int> states;
    int right_moves = 0;
    int left_moves = 0;
    int multi_event_steps = 0;

    int back() const { return states.back(); }
};

/// Broken-bin trajectory of the original pruning process: B_s is the
/// broken-bin count of (sum of the first s selected neurons' restrictions)
/// minus the target restriction, so B_0 reflects the mirrored target.
Trajectory simulate_original(const TwoLayerNet& net, std::span<const int> order,
                             const InputFamily& fam, const TargetNeuron& target,
                             const BinPartition& part, int k, double c);

/// Capped variant: replays the original process's per-step increments
/// (clamped to {-1, 0, +1}) with births suppressed at t_cap and deaths
/// suppressed at 0. Pointwise below the original for every shared stream.
Trajectory simulate_capped(const TwoLayerNet& net, std::span<const int> order,
                           const InputFamily& fam, const TargetNeuron& target,
                           const BinPartition& part, int k, double c, int t_cap);

/// k steps of the (q, p, T) chain started at 1.
Trajectory simulate_bd(const ChainParams& params, int k, RngStream& rng);

/// Exact Pr(B_k = 0) for the chain, by forward iteration of the transition
/// operator; O(k * T).
double bd_exact_state0(const ChainParams& params, int k);

/// Pr(B_j = 0) for j = 0..k_max in one pass.
std::vector<double> bd_state0_curve(const ChainParams& params, int k_max);

/// Full state distribution after k steps (for conservation checks).
std::vector<double> bd_distribution(const ChainParams& params, int k);

struct TransitionEstimate {
    double p_hat = 0.0; // fraction of fresh neurons that break an unbroken bin
    double q_hat = 0.0; // fraction that unbreak a broken bin
    int births = 0;
    int deaths = 0;
    int trials = 0;
};

/// Monte Carlo estimate of the birth/death probabilities of a fresh neuron
/// arriving at the given residual state. Restricted neurons are sampled
/// directly as alpha * relu(a t + b) with (a, b, alpha) i.i.d. standard
/// normal, matching the restriction of an N(0, I_d) neuron to any family.
TransitionEstimate estimate_transition_probs(const Pwl1D& state, const BinPartition& part,
                                             double c, int n_trials, RngStream& rng);

/// Largest probability that a standard-Cauchy breakpoint lands in any t of
/// the partition's bins: an exact ceiling on the chain's death probability
/// when at most t bins are broken.
double cauchy_mass_top_bins(const BinPartition& part, int t);

/// Aligned (orig, cap, bd) trajectories driven by one neuron stream plus one
/// uniform per step. Chain births fire only on a sub-event of capped births
/// (thinning at rate p / p_hat); chain deaths fire on every capped death and
/// additionally on a boost event sized by q against q_hat. Domination flags
/// record B^bd <= B^cap <= B^orig per step.
struct CoupledRun {
    Trajectory orig;
    Trajectory cap;
    Trajectory bd;
    /// Per step s: bd <= cap <= orig held at s.
    std::vector<std::uint8_t> dominated;
    bool cap_le_orig = true;
    bool bd_le_cap = true;
    /// p <= p_hat and q >= q_hat held at the initial state.
    bool precondition_ok = true;
    double p_hat0 = 0.0;
    double q_hat0 = 0.0;
};

CoupledRun simulate_coupled(const TwoLayerNet& net, std::span<const int> order,
                            const InputFamily& fam, const TargetNeuron& target,
                            const BinPartition& part, int k, double c, int t_cap,
                            const ChainParams& params, RngStream& rng,
                            const TransitionEstimate* initial_estimate = nullptr);

/// Rejection-sample a unit target whose mirrored restriction on the family
/// breaks exactly one bin at level c: the initial configuration the coupled
/// processes assume. Targets failing the check are the "degenerate" families
/// the harness reports instead of tracking.
TargetNeuron sample_initially_broken_target(int d, const InputFamily& fam,
                                            const BinPartition& part, double c,
                                            RngStream& rng, int max_attempts = 10000);

} // namespace prunelab
