#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "prunelab/model.hpp"
#include "prunelab/rng.hpp"

namespace prunelab {

enum class SearchMethod { exhaustive, greedy, random };

struct SearchResult {
    SubsetMask best_mask;
    double best_error = 0.0; // worst family-restricted sup error of best_mask
    std::uint64_t nodes_explored = 0;
    SearchMethod method = SearchMethod::exhaustive;
};

/// Exact minimum over all 2^N_h - 1 nonempty masks of the worst
/// family-restricted sup error. Ties break toward the smallest mask bit
/// pattern so the result is independent of the worker count. Refuses
/// networks wider than max_n (use the greedy arm instead).
SearchResult exhaustive_neuron_prune(const TwoLayerNet& net, const TargetNeuron& target,
                                     double epsilon, double r, double cap_c,
                                     int max_n = 24, int workers = 1);

/// Forward selection of at most k_max neurons, each step adding the neuron
/// (lowest index on ties) that most reduces the worst family error; stops
/// early when no addition improves.
SearchResult greedy_neuron_prune(const TwoLayerNet& net, const TargetNeuron& target,
                                 double epsilon, double r, double cap_c, int k_max);

struct RssResult {
    std::vector<int> indices;
    double achieved_error = 0.0;
};

/// Subset of samples whose sum approximates z within epsilon. Exact
/// meet-in-the-middle for n <= 40; greedy residual descent beyond that, in
/// which case an empty result signals budget exhaustion rather than
/// nonexistence.
std::optional<RssResult> rss_subset(std::span<const double> samples, double z, double epsilon);

/// Random two-hidden-layer scaffold for the weight-pruning arm:
/// y(x) = out_scale * relu(sum_j v_j * relu(<w1_j, x>)).
struct TwoHiddenLayerNet {
    int d = 0;
    std::vector<std::vector<double>> w1; // first-layer weights, one row per neuron
    std::vector<double> v;               // combination weights into the output unit
    double out_scale = 1.0;

    int width() const { return static_cast<int>(w1.size()); }
};

/// Per-scalar-weight keep flags; dimensions mirror the net.
struct WeightMask {
    std::vector<std::vector<std::uint8_t>> w1;
    std::vector<std::uint8_t> v;

    static WeightMask none_of(const TwoHiddenLayerNet& net);
};

/// Gaussian net with pool_per_coord_sign * 2 first-layer neurons per input
/// coordinate (the sign of the read weight splits each coordinate pool).
TwoHiddenLayerNet sample_two_hidden_net(int d, int pool_per_coord_sign, RngStream& rng);

double eval_two_hidden(const TwoHiddenLayerNet& net, const WeightMask& mask,
                       std::span<const double> x);

/// Exact sup over the family path of |masked net - target|.
double family_error_two_hidden(const TwoHiddenLayerNet& net, const WeightMask& mask,
                               const TargetNeuron& target, const InputFamily& fam, double r);

struct WeightPruneResult {
    bool success = false;
    int failed_coordinate = -1; // 0-based coordinate of the first failing subset sum
    int failed_sign = 0;        // +1 or -1 when failed, 0 otherwise
    WeightMask mask;
    std::vector<double> coordinate_residuals; // 2 entries (+, -) per coordinate
    double certified_bound = 0.0;             // r * sum of coordinate residuals
};

/// Weight-pruning construction: each retained first-layer neuron is pruned
/// to read a single coordinate, giving features |w| * relu(±x_j); the
/// combination weights are pruned via subset sums so the output
/// pre-activation tracks <w*, x> coordinatewise, and the final ReLU yields
/// the target. Subset sums aim at epsilon / (2 d r) per coordinate and sign
/// so the certified bound stays at most epsilon.
WeightPruneResult build_weight_pruned_approx(const TwoHiddenLayerNet& raw,
                                             const TargetNeuron& target, double epsilon,
                                             double r);

} // namespace prunelab
