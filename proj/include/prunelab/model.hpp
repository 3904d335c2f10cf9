#pragma once

#include <span>
#include <vector>

#include "prunelab/pwl.hpp"
#include "prunelab/rng.hpp"

namespace prunelab {

/// Unit-norm target weight vector w in R^d, d >= 2. Normalized at
/// construction; throws std::invalid_argument on d < 2 or a zero vector.
class TargetNeuron {
public:
    explicit TargetNeuron(std::vector<double> w);

    const std::vector<double>& w() const { return w_; }
    int dim() const { return static_cast<int>(w_.size()); }

private:
    std::vector<double> w_;
};

struct HiddenNeuron {
    std::vector<double> w;
    double alpha = 0.0;
};

/// Random one-hidden-layer ReLU network g(x) = sum_i alpha_i relu(<w_i, x>).
class TwoLayerNet {
public:
    TwoLayerNet(int d, std::vector<HiddenNeuron> neurons);

    int dim() const { return d_; }
    int size() const { return static_cast<int>(neurons_.size()); }
    const HiddenNeuron& neuron(int i) const { return neurons_[static_cast<std::size_t>(i)]; }
    const std::vector<HiddenNeuron>& neurons() const { return neurons_; }

private:
    int d_ = 0;
    std::vector<HiddenNeuron> neurons_;
};

/// Subset of hidden-neuron indices; stored sorted and duplicate-free.
class SubsetMask {
public:
    SubsetMask() = default;
    SubsetMask(std::initializer_list<int> indices);
    explicit SubsetMask(std::vector<int> indices);
    /// Mask from the low n bits of a bit pattern.
    static SubsetMask from_bits(std::uint64_t bits, int n);

    const std::vector<int>& indices() const { return indices_; }
    int size() const { return static_cast<int>(indices_.size()); }
    bool empty() const { return indices_.empty(); }
    bool contains(int i) const;
    SubsetMask with(int i) const;
    std::uint64_t bits() const;

private:
    std::vector<int> indices_;
};

/// One-parameter input path x_i(t): t in coordinate 2i-1, 1 in coordinate 2i
/// (1-based), zeros elsewhere. Valid when 2i <= d.
class InputFamily {
public:
    InputFamily(int index, int d);

    int index() const { return index_; }
    /// 0-based coordinate carrying t.
    int coord_t() const { return 2 * index_ - 2; }
    /// 0-based coordinate fixed at 1.
    int coord_one() const { return 2 * index_ - 1; }
    std::vector<double> point(double t, int d) const;
    /// |t| <= sqrt(r^2 - 1) keeps x_i(t) inside the radius-r ball.
    static double t_limit(double r);
    static int count(int d) { return d / 2; }

private:
    int index_ = 1;
};

/// Restriction of a ReLU unit to an input family: a one-dimensional ramp.
/// degenerate marks the probability-zero case of an exactly vanishing
/// t-coefficient, in which the restriction is constant and contributes no
/// breakpoint.
struct RestrictedRelu {
    Pwl1D fn;
    bool degenerate = false;
    double breakpoint = 0.0;
    double slope_jump = 0.0; // right slope minus left slope at the breakpoint
};

/// i.i.d. N(0, I_d) hidden weights and N(0, 1) output weights.
TwoLayerNet sample_network(int d, int n_h, RngStream& rng);

double eval_target(const TargetNeuron& target, std::span<const double> x);

double eval_subnet(const TwoLayerNet& net, const SubsetMask& mask, std::span<const double> x);

RestrictedRelu restrict_target(const TargetNeuron& target, const InputFamily& fam);

RestrictedRelu restrict_neuron(const HiddenNeuron& neuron, const InputFamily& fam);

/// Uniform draw from the unit sphere in R^d (Gaussian direction, normalized).
std::vector<double> sample_unit_sphere(int d, RngStream& rng);

/// Exact sup over |t| <= sqrt(r^2-1) of |g_S(x_i(t)) - f(x_i(t))|.
double sup_error_along_family(const TwoLayerNet& net, const SubsetMask& mask,
                              const TargetNeuron& target, const InputFamily& fam, double r);

/// True iff the worst family-restricted error is at most cap_c * epsilon.
bool success_along_all_families(const TwoLayerNet& net, const SubsetMask& mask,
                                const TargetNeuron& target, double epsilon, double r,
                                double cap_c);

} // namespace prunelab
