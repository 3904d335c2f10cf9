#include "prunelab/search.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <thread>

namespace prunelab {

namespace {

// Family-restricted hinge data of one neuron, precomputed once per search.
struct FamilyRamp {
    double slope0 = 0.0;
    double intercept0 = 0.0;
    double pos = 0.0;
    double jump = 0.0;
    bool has_hinge = false;
};

struct FamilyContext {
    double limit = 0.0;
    FamilyRamp target;
    std::vector<FamilyRamp> neurons;
};

FamilyRamp to_ramp(const Pwl1D& fn) {
    FamilyRamp r;
    r.slope0 = fn.slope0();
    r.intercept0 = fn.intercept0();
    if (!fn.hinges().empty()) {
        r.has_hinge = true;
        r.pos = fn.hinges().front().pos;
        r.jump = fn.hinges().front().jump;
    }
    return r;
}

std::vector<FamilyContext> build_contexts(const TwoLayerNet& net, const TargetNeuron& target,
                                          double r) {
    std::vector<FamilyContext> ctxs;
    const int families = InputFamily::count(net.dim());
    ctxs.reserve(static_cast<std::size_t>(families));
    for (int i = 1; i <= families; ++i) {
        const InputFamily fam(i, net.dim());
        FamilyContext ctx;
        ctx.limit = InputFamily::t_limit(r);
        ctx.target = to_ramp(restrict_target(target, fam).fn);
        ctx.neurons.reserve(static_cast<std::size_t>(net.size()));
        for (int j = 0; j < net.size(); ++j)
            ctx.neurons.push_back(to_ramp(restrict_neuron(net.neuron(j), fam).fn));
        ctxs.push_back(std::move(ctx));
    }
    return ctxs;
}

// Exact sup over [-limit, limit] of |sum of selected ramps - target ramp|,
// evaluated at interval endpoints and interior breakpoints. scratch avoids
// per-mask allocation in the exhaustive scan.
double mask_family_error(const FamilyContext& ctx, std::span<const int> selected,
                         std::vector<double>& scratch) {
    scratch.clear();
    scratch.push_back(-ctx.limit);
    scratch.push_back(ctx.limit);
    if (ctx.target.has_hinge && ctx.target.pos > -ctx.limit && ctx.target.pos < ctx.limit)
        scratch.push_back(ctx.target.pos);
    for (int j : selected) {
        const FamilyRamp& ramp = ctx.neurons[static_cast<std::size_t>(j)];
        if (ramp.has_hinge && ramp.pos > -ctx.limit && ramp.pos < ctx.limit)
            scratch.push_back(ramp.pos);
    }
    double worst = 0.0;
    for (double t : scratch) {
        double v = -(ctx.target.slope0 * t + ctx.target.intercept0);
        if (ctx.target.has_hinge && t > ctx.target.pos)
            v -= ctx.target.jump * (t - ctx.target.pos);
        for (int j : selected) {
            const FamilyRamp& ramp = ctx.neurons[static_cast<std::size_t>(j)];
            v += ramp.slope0 * t + ramp.intercept0;
            if (ramp.has_hinge && t > ramp.pos)
                v += ramp.jump * (t - ramp.pos);
        }
        worst = std::max(worst, std::abs(v));
    }
    return worst;
}

double mask_error(const std::vector<FamilyContext>& ctxs, std::span<const int> selected,
                  std::vector<double>& scratch) {
    double worst = 0.0;
    for (const FamilyContext& ctx : ctxs)
        worst = std::max(worst, mask_family_error(ctx, selected, scratch));
    return worst;
}

int decode_bits(std::uint64_t bits, int* out) {
    int n = 0;
    while (bits) {
        out[n++] = std::countr_zero(bits);
        bits &= bits - 1;
    }
    return n;
}

struct BestMask {
    double error = std::numeric_limits<double>::infinity();
    std::uint64_t bits = 0;

    void consider(double e, std::uint64_t b) {
        if (e < error || (e == error && b < bits)) {
            error = e;
            bits = b;
        }
    }
};

} // namespace

SearchResult exhaustive_neuron_prune(const TwoLayerNet& net, const TargetNeuron& target,
                                     double epsilon, double r, double cap_c,
                                     int max_n, int workers) {
    // Full scan: epsilon and cap_c would only license early pruning, which
    // is skipped to keep the minimum exact.
    (void)epsilon;
    (void)cap_c;
    if (net.size() > max_n)
        throw std::invalid_argument(
            "exhaustive_neuron_prune: network wider than max_n; use greedy_neuron_prune");
    if (net.size() > 63)
        throw std::invalid_argument("exhaustive_neuron_prune: mask enumeration tops out at 63");
    if (workers < 1)
        workers = 1;

    const std::vector<FamilyContext> ctxs = build_contexts(net, target, r);
    const std::uint64_t total = (std::uint64_t{1} << net.size()) - 1;

    // Contiguous prefix ranges per worker; min-merge with a total order makes
    // the outcome independent of the worker count.
    std::vector<BestMask> partial(static_cast<std::size_t>(workers));
    const std::uint64_t chunk = (total + static_cast<std::uint64_t>(workers) - 1) /
                                static_cast<std::uint64_t>(workers);
    auto scan = [&](int w) {
        BestMask local;
        std::vector<double> scratch;
        scratch.reserve(static_cast<std::size_t>(net.size()) + 3);
        int idx[64];
        const std::uint64_t first = 1 + static_cast<std::uint64_t>(w) * chunk;
        const std::uint64_t last = std::min(total, first + chunk - 1);
        for (std::uint64_t bits = first; bits <= last; ++bits) {
            const int n_sel = decode_bits(bits, idx);
            local.consider(mask_error(ctxs, std::span<const int>(idx, static_cast<std::size_t>(n_sel)),
                                      scratch),
                           bits);
        }
        partial[static_cast<std::size_t>(w)] = local;
    };
    if (workers == 1) {
        scan(0);
    } else {
        std::vector<std::thread> pool;
        pool.reserve(static_cast<std::size_t>(workers));
        for (int w = 0; w < workers; ++w)
            pool.emplace_back(scan, w);
        for (std::thread& th : pool)
            th.join();
    }
    BestMask best;
    for (const BestMask& b : partial)
        best.consider(b.error, b.bits);

    SearchResult result;
    result.method = SearchMethod::exhaustive;
    result.nodes_explored = total;
    result.best_mask = SubsetMask::from_bits(best.bits, net.size());
    // Recompute independently of the search path.
    double err = 0.0;
    for (int i = 1; i <= InputFamily::count(net.dim()); ++i)
        err = std::max(err, sup_error_along_family(net, result.best_mask, target,
                                                   InputFamily(i, net.dim()), r));
    result.best_error = err;
    return result;
}

SearchResult greedy_neuron_prune(const TwoLayerNet& net, const TargetNeuron& target,
                                 double epsilon, double r, double cap_c, int k_max) {
    (void)epsilon; // selection minimizes the raw error; thresholds are the caller's
    (void)cap_c;
    if (k_max < 1 || k_max > net.size())
        throw std::invalid_argument("greedy_neuron_prune: need 1 <= k_max <= N_h");

    const std::vector<FamilyContext> ctxs = build_contexts(net, target, r);
    std::vector<int> selected;
    std::vector<char> in_mask(static_cast<std::size_t>(net.size()), 0);
    std::vector<double> scratch;
    double current = std::numeric_limits<double>::infinity();
    std::uint64_t explored = 0;
    for (int step = 0; step < k_max; ++step) {
        int best_j = -1;
        double best_err = current;
        for (int j = 0; j < net.size(); ++j) {
            if (in_mask[static_cast<std::size_t>(j)])
                continue;
            ++explored;
            selected.push_back(j);
            const double e = mask_error(ctxs, selected, scratch);
            selected.pop_back();
            if (e < best_err) { // strict: ties keep the lowest index found first
                best_err = e;
                best_j = j;
            }
        }
        if (best_j < 0)
            break;
        selected.push_back(best_j);
        in_mask[static_cast<std::size_t>(best_j)] = 1;
        current = best_err;
    }

    SearchResult result;
    result.method = SearchMethod::greedy;
    result.nodes_explored = explored;
    result.best_mask = SubsetMask(selected);
    double err = 0.0;
    for (int i = 1; i <= InputFamily::count(net.dim()); ++i)
        err = std::max(err, sup_error_along_family(net, result.best_mask, target,
                                                   InputFamily(i, net.dim()), r));
    result.best_error = err;
    return result;
}

namespace {

struct HalfSum {
    double sum = 0.0;
    std::uint32_t bits = 0;
};

std::vector<HalfSum> enumerate_half(std::span<const double> samples) {
    const int n = static_cast<int>(samples.size());
    std::vector<HalfSum> sums(std::size_t{1} << n);
    sums[0] = {0.0, 0};
    for (int i = 0; i < n; ++i) {
        const std::size_t block = std::size_t{1} << i;
        for (std::size_t s = 0; s < block; ++s)
            sums[block + s] = {sums[s].sum + samples[static_cast<std::size_t>(i)],
                               sums[s].bits | (std::uint32_t{1} << i)};
    }
    return sums;
}

} // namespace

std::optional<RssResult> rss_subset(std::span<const double> samples, double z, double epsilon) {
    const int n = static_cast<int>(samples.size());
    if (n <= 40) {
        const int n_left = n / 2;
        const auto left = enumerate_half(samples.subspan(0, static_cast<std::size_t>(n_left)));
        auto right = enumerate_half(samples.subspan(static_cast<std::size_t>(n_left)));
        std::sort(right.begin(), right.end(),
                  [](const HalfSum& a, const HalfSum& b) { return a.sum < b.sum; });

        double best_err = std::numeric_limits<double>::infinity();
        std::uint32_t best_l = 0, best_r = 0;
        for (const HalfSum& l : left) {
            const double want = z - l.sum;
            auto it = std::lower_bound(right.begin(), right.end(), want,
                                       [](const HalfSum& h, double v) { return h.sum < v; });
            for (int probe = 0; probe < 2; ++probe) {
                if (probe == 1) {
                    if (it == right.begin())
                        break;
                    --it;
                }
                if (it == right.end())
                    continue;
                const double err = std::abs(z - (l.sum + it->sum));
                if (err < best_err) {
                    best_err = err;
                    best_l = l.bits;
                    best_r = it->bits;
                }
            }
        }
        if (best_err > epsilon)
            return std::nullopt;
        RssResult res;
        res.achieved_error = best_err;
        for (int i = 0; i < n_left; ++i)
            if (best_l & (std::uint32_t{1} << i))
                res.indices.push_back(i);
        for (int i = 0; i < n - n_left; ++i)
            if (best_r & (std::uint32_t{1} << i))
                res.indices.push_back(n_left + i);
        return res;
    }

    // Greedy residual descent: take a sample whenever it shrinks |residual|.
    std::vector<int> order(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i)
        order[static_cast<std::size_t>(i)] = i;
    std::sort(order.begin(), order.end(), [&](int a, int b) {
        return std::abs(samples[static_cast<std::size_t>(a)]) >
               std::abs(samples[static_cast<std::size_t>(b)]);
    });
    RssResult res;
    double residual = z;
    for (int i : order) {
        const double v = samples[static_cast<std::size_t>(i)];
        if (std::abs(residual - v) < std::abs(residual)) {
            residual -= v;
            res.indices.push_back(i);
        }
    }
    if (std::abs(residual) > epsilon)
        return std::nullopt;
    std::sort(res.indices.begin(), res.indices.end());
    res.achieved_error = std::abs(residual);
    return res;
}

WeightMask WeightMask::none_of(const TwoHiddenLayerNet& net) {
    WeightMask m;
    m.w1.assign(net.w1.size(), {});
    for (std::size_t j = 0; j < net.w1.size(); ++j)
        m.w1[j].assign(net.w1[j].size(), 0);
    m.v.assign(net.v.size(), 0);
    return m;
}

TwoHiddenLayerNet sample_two_hidden_net(int d, int pool_per_coord_sign, RngStream& rng) {
    if (d < 1)
        throw std::invalid_argument("sample_two_hidden_net: d must be positive");
    if (pool_per_coord_sign < 1)
        throw std::invalid_argument("sample_two_hidden_net: pool must be positive");
    TwoHiddenLayerNet net;
    net.d = d;
    const int width = 2 * pool_per_coord_sign * d;
    net.w1.reserve(static_cast<std::size_t>(width));
    net.v.reserve(static_cast<std::size_t>(width));
    for (int j = 0; j < width; ++j) {
        std::vector<double> w(static_cast<std::size_t>(d));
        for (double& x : w)
            x = rng.next_gaussian();
        net.w1.push_back(std::move(w));
        net.v.push_back(rng.next_gaussian());
    }
    net.out_scale = 1.0;
    return net;
}

double eval_two_hidden(const TwoHiddenLayerNet& net, const WeightMask& mask,
                       std::span<const double> x) {
    if (static_cast<int>(x.size()) != net.d)
        throw std::invalid_argument("eval_two_hidden: dimension mismatch");
    double pre = 0.0;
    for (int j = 0; j < net.width(); ++j) {
        if (!mask.v[static_cast<std::size_t>(j)])
            continue;
        double dotv = 0.0;
        for (int i = 0; i < net.d; ++i)
            if (mask.w1[static_cast<std::size_t>(j)][static_cast<std::size_t>(i)])
                dotv += net.w1[static_cast<std::size_t>(j)][static_cast<std::size_t>(i)] *
                        x[static_cast<std::size_t>(i)];
        pre += net.v[static_cast<std::size_t>(j)] * std::max(dotv, 0.0);
    }
    return net.out_scale * std::max(pre, 0.0);
}

double family_error_two_hidden(const TwoHiddenLayerNet& net, const WeightMask& mask,
                               const TargetNeuron& target, const InputFamily& fam, double r) {
    // Pre-activation along the family is a sum of ramps; the output ReLU is
    // applied exactly on the piecewise-linear form.
    Pwl1D pre;
    for (int j = 0; j < net.width(); ++j) {
        if (!mask.v[static_cast<std::size_t>(j)])
            continue;
        double a = 0.0, b = 0.0;
        if (mask.w1[static_cast<std::size_t>(j)][static_cast<std::size_t>(fam.coord_t())])
            a = net.w1[static_cast<std::size_t>(j)][static_cast<std::size_t>(fam.coord_t())];
        if (mask.w1[static_cast<std::size_t>(j)][static_cast<std::size_t>(fam.coord_one())])
            b = net.w1[static_cast<std::size_t>(j)][static_cast<std::size_t>(fam.coord_one())];
        pre += Pwl1D::relu_ramp(net.v[static_cast<std::size_t>(j)], a, b);
    }
    Pwl1D out = pwl_relu(pre);
    if (net.out_scale != 1.0) {
        Pwl1D scaled;
        std::vector<Hinge> hs = out.hinges();
        for (Hinge& h : hs)
            h.jump *= net.out_scale;
        out = Pwl1D(net.out_scale * out.slope0(), net.out_scale * out.intercept0(), std::move(hs));
    }
    const Pwl1D res = residual(out, restrict_target(target, fam).fn);
    const double limit = InputFamily::t_limit(r);
    return sup_abs_on_interval(res, -limit, limit).value;
}

WeightPruneResult build_weight_pruned_approx(const TwoHiddenLayerNet& raw,
                                             const TargetNeuron& target, double epsilon,
                                             double r) {
    if (raw.d != target.dim())
        throw std::invalid_argument("build_weight_pruned_approx: dimension mismatch");
    const int d = raw.d;
    const int per_coord = raw.width() / d;
    if (per_coord < 1 || raw.width() % d != 0)
        throw std::invalid_argument("build_weight_pruned_approx: width not divisible per coordinate");

    WeightPruneResult out;
    out.mask = WeightMask::none_of(raw);
    out.coordinate_residuals.assign(static_cast<std::size_t>(2 * d), 0.0);

    const double tol = epsilon / (2.0 * d * r);
    for (int coord = 0; coord < d; ++coord) {
        // Neurons assigned to this coordinate, split by the sign of the
        // weight they would keep.
        std::vector<int> plus, minus;
        for (int j = coord * per_coord; j < (coord + 1) * per_coord; ++j) {
            const double wji = raw.w1[static_cast<std::size_t>(j)][static_cast<std::size_t>(coord)];
            if (wji > 0.0)
                plus.push_back(j);
            else if (wji < 0.0)
                minus.push_back(j);
        }
        const double w_star = target.w()[static_cast<std::size_t>(coord)];
        for (int sign_case = 0; sign_case < 2; ++sign_case) {
            const std::vector<int>& pool = sign_case == 0 ? plus : minus;
            // relu(s x) with s>0 contributes +w* relu(x_c); with s<0 the
            // feature is relu(-x_c) and wants weight -w*.
            const double goal = sign_case == 0 ? w_star : -w_star;
            std::vector<double> samples;
            samples.reserve(pool.size());
            for (int j : pool)
                samples.push_back(raw.v[static_cast<std::size_t>(j)] *
                                  std::abs(raw.w1[static_cast<std::size_t>(j)]
                                                 [static_cast<std::size_t>(coord)]));
            const auto hit = rss_subset(samples, goal, tol);
            if (!hit) {
                out.success = false;
                out.failed_coordinate = coord;
                out.failed_sign = sign_case == 0 ? 1 : -1;
                return out;
            }
            out.coordinate_residuals[static_cast<std::size_t>(2 * coord + sign_case)] =
                hit->achieved_error;
            for (int pick : hit->indices) {
                const int j = pool[static_cast<std::size_t>(pick)];
                out.mask.v[static_cast<std::size_t>(j)] = 1;
                out.mask.w1[static_cast<std::size_t>(j)][static_cast<std::size_t>(coord)] = 1;
            }
        }
    }
    out.success = true;
    double total = 0.0;
    for (double res : out.coordinate_residuals)
        total += res;
    out.certified_bound = r * total;
    return out;
}

} // namespace prunelab
