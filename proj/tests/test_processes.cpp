#include <doctest.h>

#include <cmath>
#include <numbers>
#include <vector>

#include "oracles.hpp"
#include "prunelab/model.hpp"
#include "prunelab/processes.hpp"
#include "prunelab/pwl.hpp"
#include "prunelab/rng.hpp"

using namespace prunelab;

namespace {

std::vector<int> identity_order(int n) {
    std::vector<int> o(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i)
        o[static_cast<std::size_t>(i)] = i;
    return o;
}

constexpr double kLevel = 1.0 / 16.0; // gamma = 1 default

} // namespace

TEST_CASE("simulate_original: direct cancellation empties the bin") {
    const TargetNeuron target({1.0, 0.0});
    std::vector<HiddenNeuron> ns;
    ns.push_back({{1.0, 0.0}, 1.0}); // restriction equals the target's
    ns.push_back({{2.0, -1.0}, 1.0});
    const TwoLayerNet net(2, ns);
    const BinPartition part(0.1, 2.0);
    const Trajectory t = simulate_original(net, identity_order(2), InputFamily(1, 2), target,
                                           part, 2, kLevel);
    REQUIRE(t.states.size() == 3);
    CHECK(t.states[0] == 1); // mirrored target bin starts broken
    CHECK(t.states[1] == 0); // exact cancellation
    CHECK(t.states[2] == 1); // fresh steep neuron breaks its bin
}

TEST_CASE("simulate_original: breakpoints outside I_R leave the count flat") {
    const TargetNeuron target({1.0, 0.0});
    std::vector<HiddenNeuron> ns;
    ns.push_back({{1.0, -5.0}, 2.0});  // breakpoint 5
    ns.push_back({{0.5, 3.0}, -1.0});  // breakpoint -6
    ns.push_back({{0.0, 1.0}, 3.0});   // degenerate, no breakpoint
    const TwoLayerNet net(2, ns);
    const BinPartition part(0.1, 2.0);
    const Trajectory t = simulate_original(net, identity_order(3), InputFamily(1, 2), target,
                                           part, 3, kLevel);
    for (int s : t.states)
        CHECK(s == t.states[0]);
}

TEST_CASE("simulate_original: increments stay in {-1,0,+1} on random runs") {
    RngStream rng(40, 0);
    const BinPartition part(0.1, 2.0);
    int multi = 0;
    for (int run = 0; run < 2000; ++run) {
        const TargetNeuron target(sample_unit_sphere(2, rng));
        const TwoLayerNet net = sample_network(2, 12, rng);
        const Trajectory t = simulate_original(net, identity_order(12), InputFamily(1, 2),
                                               target, part, 12, kLevel);
        multi += t.multi_event_steps;
        for (std::size_t s = 1; s < t.states.size(); ++s) {
            const int d = t.states[s] - t.states[s - 1];
            REQUIRE(d >= -1);
            REQUIRE(d <= 1);
        }
    }
    CHECK(multi == 0);
}

TEST_CASE("simulate_capped: slack cap reproduces the original process") {
    RngStream rng(41, 0);
    const BinPartition part(0.1, 2.0);
    for (int run = 0; run < 50; ++run) {
        const TargetNeuron target(sample_unit_sphere(2, rng));
        const TwoLayerNet net = sample_network(2, 10, rng);
        const Trajectory orig = simulate_original(net, identity_order(10), InputFamily(1, 2),
                                                  target, part, 10, kLevel);
        const Trajectory cap = simulate_capped(net, identity_order(10), InputFamily(1, 2),
                                               target, part, 10, kLevel, 11);
        REQUIRE(orig.states == cap.states);
    }
}

TEST_CASE("simulate_capped: cap one pins three straight births at one") {
    const TargetNeuron target({1.0, 0.0});
    std::vector<HiddenNeuron> ns;
    ns.push_back({{2.0, -1.0}, 1.0}); // breakpoint 0.5
    ns.push_back({{2.0, -2.0}, 1.0}); // breakpoint 1.0
    ns.push_back({{2.0, 1.0}, 1.0});  // breakpoint -0.5
    const TwoLayerNet net(2, ns);
    const BinPartition part(0.1, 2.0);
    const Trajectory orig = simulate_original(net, identity_order(3), InputFamily(1, 2), target,
                                              part, 3, kLevel);
    REQUIRE(orig.states == std::vector<int>{1, 2, 3, 4});
    const Trajectory cap = simulate_capped(net, identity_order(3), InputFamily(1, 2), target,
                                           part, 3, kLevel, 1);
    CHECK(cap.states == std::vector<int>{1, 1, 1, 1});
}

TEST_CASE("simulate_capped: domination under the shared stream") {
    RngStream rng(42, 0);
    const BinPartition part(0.1, 2.0);
    for (int run = 0; run < 500; ++run) {
        const TargetNeuron target(sample_unit_sphere(4, rng));
        const TwoLayerNet net = sample_network(4, 10, rng);
        const Trajectory orig = simulate_original(net, identity_order(10), InputFamily(1, 4),
                                                  target, part, 10, kLevel);
        const Trajectory cap = simulate_capped(net, identity_order(10), InputFamily(1, 4),
                                               target, part, 10, kLevel, 2);
        for (std::size_t s = 0; s < orig.states.size(); ++s) {
            REQUIRE(cap.states[s] <= orig.states[s]);
            REQUIRE(cap.states[s] >= 0);
            REQUIRE(cap.states[s] <= 2);
        }
    }
}

TEST_CASE("simulate_bd: forced death and no-death extremes") {
    RngStream rng(43, 0);
    const Trajectory dead = simulate_bd(ChainParams(0.0, 1.0, 5), 4, rng);
    CHECK(dead.states == std::vector<int>{1, 0, 0, 0, 0});

    for (int run = 0; run < 100; ++run) {
        const Trajectory alive = simulate_bd(ChainParams(0.5, 0.0, 5), 20, rng);
        for (int s : alive.states)
            REQUIRE(s > 0);
    }
}

TEST_CASE("simulate_bd: chain identity and zero-enders have L > R") {
    RngStream rng(44, 0);
    const ChainParams params(0.3, 0.3, 4);
    for (int run = 0; run < 2000; ++run) {
        const Trajectory t = simulate_bd(params, 12, rng);
        REQUIRE(t.back() == 1 + t.right_moves - t.left_moves);
        if (t.back() == 0)
            REQUIRE(t.left_moves > t.right_moves);
        for (int s : t.states) {
            REQUIRE(s >= 0);
            REQUIRE(s <= 4);
        }
    }
}

TEST_CASE("bd_exact_state0 matches exhaustive enumeration") {
    CHECK(bd_exact_state0(ChainParams(0.3, 0.2, 3), 0) == 0.0);

    // the chain allows births from state 0 (not absorbing), so the exact
    // value is 0.3125; an absorbing variant would give 0.375
    const ChainParams small(0.25, 0.25, 2);
    CHECK(bd_exact_state0(small, 2) == doctest::Approx(0.3125).epsilon(1e-12));
    CHECK(oracle::bd_enumerate_state0(small, 2) == doctest::Approx(0.3125).epsilon(1e-12));

    for (double p : {0.1, 0.3, 0.5}) {
        for (double q : {0.1, 0.3, 0.5}) {
            for (int t_cap : {1, 2, 3}) {
                const ChainParams params(p, q, t_cap);
                for (int k = 0; k <= 6; ++k)
                    REQUIRE(bd_exact_state0(params, k) ==
                            doctest::Approx(oracle::bd_enumerate_state0(params, k))
                                .epsilon(1e-12));
            }
        }
    }
}

TEST_CASE("bd_exact_state0 agrees with Monte Carlo") {
    const ChainParams params(0.25, 0.25, 2);
    RngStream rng(45, 0);
    const int n = 20000;
    int zeros = 0;
    for (int i = 0; i < n; ++i)
        zeros += simulate_bd(params, 2, rng).back() == 0 ? 1 : 0;
    const double mc = static_cast<double>(zeros) / n;
    const double exact = bd_exact_state0(params, 2);
    const double se = std::sqrt(exact * (1.0 - exact) / n);
    CHECK(std::abs(mc - exact) <= 4.0 * se);
}

TEST_CASE("bd distribution conserves mass") {
    const ChainParams params(0.4, 0.15, 40);
    for (int k : {0, 1, 5, 20, 80}) {
        const std::vector<double> dist = bd_distribution(params, k);
        double total = 0.0;
        for (double m : dist)
            total += m;
        REQUIRE(std::abs(total - 1.0) <= 1e-12);
    }
}

TEST_CASE("state-0 probability decays log-linearly in the pre-cap regime") {
    const ChainParams params(0.4, 0.15, 40); // p >= 2q
    const std::vector<double> curve = bd_state0_curve(params, 30);
    // fitted slope over k in [5, 2T/3]
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    int n = 0;
    for (int k = 5; k <= 26; ++k) {
        const double y = std::log(curve[static_cast<std::size_t>(k)]);
        sx += k;
        sy += y;
        sxx += static_cast<double>(k) * k;
        sxy += k * y;
        ++n;
    }
    const double slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);
    CHECK(slope < 0.0);
    CHECK(curve[26] < curve[5]);
}

TEST_CASE("estimate_transition_probs: saturated and empty states") {
    const BinPartition part(0.2, 2.0);
    RngStream rng(46, 0);

    // every bin broken: no births possible
    Pwl1D all_broken;
    for (int i = 0; i < part.num_bins(); ++i) {
        const Interval iv = part.bin(i);
        all_broken += Pwl1D::relu_ramp(2.0, 1.0, -(iv.lo + iv.hi) / 2.0);
    }
    REQUIRE(broken_bin_count(all_broken, part, kLevel) == part.num_bins());
    const TransitionEstimate sat = estimate_transition_probs(all_broken, part, kLevel, 3000, rng);
    CHECK(sat.p_hat == 0.0);

    // empty state: no deaths possible
    const TransitionEstimate empty = estimate_transition_probs(Pwl1D(), part, kLevel, 3000, rng);
    CHECK(empty.q_hat == 0.0);
    CHECK(empty.p_hat > 0.0);
}

TEST_CASE("estimate_transition_probs: independent replays agree") {
    const BinPartition part(0.1, 2.0);
    RngStream rng_a(47, 0), rng_b(48, 0);
    const int n = 10000;
    const TransitionEstimate a = estimate_transition_probs(Pwl1D(), part, kLevel, n, rng_a);
    const TransitionEstimate b = estimate_transition_probs(Pwl1D(), part, kLevel, n, rng_b);
    const double pooled = 0.5 * (a.p_hat + b.p_hat);
    const double band = 2.576 * std::sqrt(pooled * (1.0 - pooled) * 2.0 / n);
    CHECK(std::abs(a.p_hat - b.p_hat) <= band);
}

TEST_CASE("cauchy_mass_top_bins") {
    const BinPartition part(0.1, 2.0);
    const double one = cauchy_mass_top_bins(part, 1);
    CHECK(one > 0.030);
    CHECK(one < 0.033);
    const double all = cauchy_mass_top_bins(part, part.num_bins() + 100);
    CHECK(all == doctest::Approx(2.0 * std::atan(std::sqrt(3.0)) / std::numbers::pi));
    CHECK(cauchy_mass_top_bins(part, 3) <= 3.0 * one + 1e-12);
}

TEST_CASE("simulate_coupled: extremes and dominations") {
    const BinPartition part(0.1, 2.0);
    RngStream rng(49, 0);
    const TargetNeuron target({1.0, 0.0});

    // p = 0, q = 1: the chain dies immediately and stays down
    {
        RngStream coin(50, 0);
        const TwoLayerNet net = sample_network(2, 6, rng);
        const CoupledRun run = simulate_coupled(net, identity_order(6), InputFamily(1, 2),
                                                target, part, 6, kLevel, 3,
                                                ChainParams(0.0, 1.0, 3), coin);
        CHECK(run.bd.states[1] == 0);
        CHECK(run.bd_le_cap);
        CHECK(run.cap_le_orig);
        CHECK(run.precondition_ok); // 0 <= p_hat, 1 >= q_hat always
    }

    // random runs: both dominations hold by construction
    const TransitionEstimate est =
        estimate_transition_probs(-restrict_target(target, InputFamily(1, 2)).fn, part, kLevel,
                                  4000, rng);
    const double p = est.p_hat * 0.5;
    const double q = std::min(1.0 - p, cauchy_mass_top_bins(part, 3));
    const ChainParams params(p, q, 3);
    for (int run_i = 0; run_i < 500; ++run_i) {
        RngStream coin(51, static_cast<std::uint64_t>(run_i));
        RngStream net_rng(52, static_cast<std::uint64_t>(run_i));
        const TwoLayerNet net = sample_network(2, 10, net_rng);
        const CoupledRun run = simulate_coupled(net, identity_order(10), InputFamily(1, 2),
                                                target, part, 10, kLevel, 3, params, coin, &est);
        REQUIRE(run.cap_le_orig);
        REQUIRE(run.bd_le_cap);
        REQUIRE(run.bd.back() == 1 + run.bd.right_moves - run.bd.left_moves);
    }
}

TEST_CASE("ChainParams validation") {
    CHECK_THROWS_AS(ChainParams(0.7, 0.6, 3), std::invalid_argument);
    CHECK_THROWS_AS(ChainParams(-0.1, 0.5, 3), std::invalid_argument);
    CHECK_THROWS_AS(ChainParams(0.2, 0.2, 0), std::invalid_argument);
}
