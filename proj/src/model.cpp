#include "prunelab/model.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace prunelab {

TargetNeuron::TargetNeuron(std::vector<double> w) : w_(std::move(w)) {
    if (w_.size() < 2)
        throw std::invalid_argument("TargetNeuron: dimension must be at least 2");
    double norm_sq = 0.0;
    for (double v : w_)
        norm_sq += v * v;
    if (norm_sq == 0.0)
        throw std::invalid_argument("TargetNeuron: zero weight vector");
    const double inv = 1.0 / std::sqrt(norm_sq);
    for (double& v : w_)
        v *= inv;
}

TwoLayerNet::TwoLayerNet(int d, std::vector<HiddenNeuron> neurons)
    : d_(d), neurons_(std::move(neurons)) {
    if (d_ < 2)
        throw std::invalid_argument("TwoLayerNet: dimension must be at least 2");
    if (neurons_.empty())
        throw std::invalid_argument("TwoLayerNet: need at least one neuron");
    for (const HiddenNeuron& n : neurons_)
        if (static_cast<int>(n.w.size()) != d_)
            throw std::invalid_argument("TwoLayerNet: neuron dimension mismatch");
}

SubsetMask::SubsetMask(std::initializer_list<int> indices)
    : SubsetMask(std::vector<int>(indices)) {}

SubsetMask::SubsetMask(std::vector<int> indices) : indices_(std::move(indices)) {
    std::sort(indices_.begin(), indices_.end());
    indices_.erase(std::unique(indices_.begin(), indices_.end()), indices_.end());
    for (int i : indices_)
        if (i < 0)
            throw std::invalid_argument("SubsetMask: negative index");
}

SubsetMask SubsetMask::from_bits(std::uint64_t bits, int n) {
    std::vector<int> idx;
    for (int i = 0; i < n; ++i)
        if (bits & (std::uint64_t{1} << i))
            idx.push_back(i);
    return SubsetMask(std::move(idx));
}

bool SubsetMask::contains(int i) const {
    return std::binary_search(indices_.begin(), indices_.end(), i);
}

SubsetMask SubsetMask::with(int i) const {
    std::vector<int> idx = indices_;
    idx.push_back(i);
    return SubsetMask(std::move(idx));
}

std::uint64_t SubsetMask::bits() const {
    std::uint64_t b = 0;
    for (int i : indices_) {
        if (i >= 64)
            throw std::out_of_range("SubsetMask::bits: index beyond 63");
        b |= std::uint64_t{1} << i;
    }
    return b;
}

InputFamily::InputFamily(int index, int d) : index_(index) {
    if (index < 1 || 2 * index > d)
        throw std::invalid_argument("InputFamily: need 1 <= i and 2i <= d");
}

std::vector<double> InputFamily::point(double t, int d) const {
    if (2 * index_ > d)
        throw std::invalid_argument("InputFamily::point: dimension too small");
    std::vector<double> x(static_cast<std::size_t>(d), 0.0);
    x[static_cast<std::size_t>(coord_t())] = t;
    x[static_cast<std::size_t>(coord_one())] = 1.0;
    return x;
}

double InputFamily::t_limit(double r) {
    if (r <= 1.0)
        throw std::invalid_argument("InputFamily::t_limit: r must exceed 1");
    return std::sqrt(r * r - 1.0);
}

TwoLayerNet sample_network(int d, int n_h, RngStream& rng) {
    if (d < 2)
        throw std::invalid_argument("sample_network: d must be at least 2");
    if (n_h < 1)
        throw std::invalid_argument("sample_network: n_h must be at least 1");
    std::vector<HiddenNeuron> neurons;
    neurons.reserve(static_cast<std::size_t>(n_h));
    for (int i = 0; i < n_h; ++i) {
        HiddenNeuron n;
        n.w.resize(static_cast<std::size_t>(d));
        for (double& v : n.w)
            v = rng.next_gaussian();
        n.alpha = rng.next_gaussian();
        neurons.push_back(std::move(n));
    }
    return TwoLayerNet(d, std::move(neurons));
}

namespace {

double dot(std::span<const double> a, std::span<const double> b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i)
        s += a[i] * b[i];
    return s;
}

} // namespace

double eval_target(const TargetNeuron& target, std::span<const double> x) {
    if (static_cast<int>(x.size()) != target.dim())
        throw std::invalid_argument("eval_target: dimension mismatch");
    return std::max(dot(target.w(), x), 0.0);
}

double eval_subnet(const TwoLayerNet& net, const SubsetMask& mask, std::span<const double> x) {
    if (static_cast<int>(x.size()) != net.dim())
        throw std::invalid_argument("eval_subnet: dimension mismatch");
    double s = 0.0;
    for (int i : mask.indices()) {
        if (i >= net.size())
            throw std::invalid_argument("eval_subnet: mask index out of range");
        const HiddenNeuron& n = net.neuron(i);
        s += n.alpha * std::max(dot(n.w, x), 0.0);
    }
    return s;
}

namespace {

// scale * relu(a*t + b) with breakpoint metadata.
RestrictedRelu restrict_ramp(double scale, double a, double b) {
    RestrictedRelu out;
    out.fn = Pwl1D::relu_ramp(scale, a, b);
    if (a == 0.0) {
        out.degenerate = true;
        return out;
    }
    out.breakpoint = -b / a;
    out.slope_jump = a > 0.0 ? scale * a : -scale * a;
    return out;
}

} // namespace

RestrictedRelu restrict_target(const TargetNeuron& target, const InputFamily& fam) {
    if (2 * fam.index() > target.dim())
        throw std::invalid_argument("restrict_target: family out of range");
    const double a = target.w()[static_cast<std::size_t>(fam.coord_t())];
    const double b = target.w()[static_cast<std::size_t>(fam.coord_one())];
    return restrict_ramp(1.0, a, b);
}

RestrictedRelu restrict_neuron(const HiddenNeuron& neuron, const InputFamily& fam) {
    if (2 * fam.index() > static_cast<int>(neuron.w.size()))
        throw std::invalid_argument("restrict_neuron: family out of range");
    const double a = neuron.w[static_cast<std::size_t>(fam.coord_t())];
    const double b = neuron.w[static_cast<std::size_t>(fam.coord_one())];
    return restrict_ramp(neuron.alpha, a, b);
}

std::vector<double> sample_unit_sphere(int d, RngStream& rng) {
    if (d < 2)
        throw std::invalid_argument("sample_unit_sphere: d must be at least 2");
    std::vector<double> x(static_cast<std::size_t>(d));
    double norm_sq = 0.0;
    do {
        norm_sq = 0.0;
        for (double& v : x) {
            v = rng.next_gaussian();
            norm_sq += v * v;
        }
    } while (norm_sq == 0.0);
    const double inv = 1.0 / std::sqrt(norm_sq);
    for (double& v : x)
        v *= inv;
    return x;
}

double sup_error_along_family(const TwoLayerNet& net, const SubsetMask& mask,
                              const TargetNeuron& target, const InputFamily& fam, double r) {
    if (net.dim() != target.dim())
        throw std::invalid_argument("sup_error_along_family: dimension mismatch");
    Pwl1D net_part;
    for (int i : mask.indices()) {
        if (i >= net.size())
            throw std::invalid_argument("sup_error_along_family: mask index out of range");
        net_part += restrict_neuron(net.neuron(i), fam).fn;
    }
    const Pwl1D res = residual(net_part, restrict_target(target, fam).fn);
    const double limit = InputFamily::t_limit(r);
    return sup_abs_on_interval(res, -limit, limit).value;
}

bool success_along_all_families(const TwoLayerNet& net, const SubsetMask& mask,
                                const TargetNeuron& target, double epsilon, double r,
                                double cap_c) {
    for (int i = 1; i <= InputFamily::count(net.dim()); ++i) {
        const InputFamily fam(i, net.dim());
        if (sup_error_along_family(net, mask, target, fam, r) > cap_c * epsilon)
            return false;
    }
    return true;
}

} // namespace prunelab
