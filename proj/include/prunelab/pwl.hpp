#pragma once

#include <cstddef>
#include <vector>

namespace prunelab {

/// One hinge term jump * max(t - pos, 0). jump is the slope change
/// (right slope minus left slope) at pos.
struct Hinge {
    double pos = 0.0;
    double jump = 0.0;
};

/// Continuous piecewise-linear function on the real line, stored as
///
///   f(t) = slope0 * t + intercept0 + sum_j jump_j * max(t - pos_j, 0)
///
/// with hinge positions strictly increasing. Continuity is a property of the
/// representation, not something to re-check. Normalization merges hinge
/// positions closer than kMergeTol and drops zero jumps, so exact
/// cancellations remove breakpoints.
class Pwl1D {
public:
    static constexpr double kMergeTol = 1e-12;

    Pwl1D() = default;
    Pwl1D(double slope0, double intercept0, std::vector<Hinge> hinges);

    static Pwl1D affine(double slope, double intercept);
    /// scale * relu(a * t + b). For a == 0 this degenerates to a constant.
    static Pwl1D relu_ramp(double scale, double a, double b);

    double value(double t) const;
    /// Slope of the segment immediately right of t.
    double slope_right_of(double t) const;

    double slope0() const { return slope0_; }
    double intercept0() const { return intercept0_; }
    const std::vector<Hinge>& hinges() const { return hinges_; }
    bool is_affine() const { return hinges_.empty(); }

    Pwl1D& operator+=(const Pwl1D& other);
    friend Pwl1D operator+(Pwl1D lhs, const Pwl1D& rhs) { return lhs += rhs; }
    Pwl1D operator-() const;
    friend Pwl1D operator-(Pwl1D lhs, const Pwl1D& rhs) { return lhs += -rhs; }

private:
    void normalize();

    double slope0_ = 0.0;
    double intercept0_ = 0.0;
    std::vector<Hinge> hinges_;
};

/// Pointwise sum with merged breakpoints; empty input is the zero function.
Pwl1D pwl_sum(const std::vector<Pwl1D>& parts);

/// net_part - target_part; the function whose broken bins the pruning
/// process counts.
Pwl1D residual(const Pwl1D& net_part, const Pwl1D& target_part);

/// Pointwise max(f, 0) as a Pwl1D (breakpoints at f's hinges and at its
/// sign changes).
Pwl1D pwl_relu(const Pwl1D& f);

struct SupResult {
    double value = 0.0;
    double argmax = 0.0;
};

/// Exact max of |h| over [a, b]; attained at an endpoint or an interior
/// breakpoint. Throws std::invalid_argument for a > b.
SupResult sup_abs_on_interval(const Pwl1D& h, double a, double b);

/// Best uniform affine fit error on three points t1 < t2 < t3:
/// min over affine l of max_j |h_j - l(t_j)|. Equals |h2 - L13(t2)| / 2
/// where L13 interpolates (t1,h1) and (t3,h3) (equioscillation on three
/// points for the two-parameter affine family).
double minimax_affine_3pts(double t1, double t2, double t3,
                           double h1, double h2, double h3);

struct Interval {
    double lo = 0.0;
    double hi = 0.0;
    double width() const { return hi - lo; }
};

/// I_R = [-sqrt(r^2-1), sqrt(r^2-1)] tiled by ceil(|I_R|/epsilon) bins of
/// width epsilon (the last bin keeps the remainder).
class BinPartition {
public:
    BinPartition(double epsilon, double r);

    double epsilon() const { return epsilon_; }
    double r() const { return r_; }
    double lo() const { return lo_; }
    double hi() const { return hi_; }
    int num_bins() const { return num_bins_; }
    Interval bin(int i) const;
    /// Index of the bin containing t, or -1 outside I_R. Bins are half-open
    /// on the right except the last, which closes at hi().
    int bin_index(double t) const;

private:
    double epsilon_ = 0.0;
    double r_ = 0.0;
    double lo_ = 0.0;
    double hi_ = 0.0;
    int num_bins_ = 0;
};

struct TripleWitness {
    double t1 = 0.0, t2 = 0.0, t3 = 0.0;
    double minimax = 0.0;
};

struct BrokenCheck {
    bool broken = false;
    TripleWitness witness;
};

/// Broken-bin predicate: true iff some triple inside the bin has affine
/// minimax error >= c * epsilon. Candidate points are the bin endpoints,
/// interior breakpoints of h, and midpoints of consecutive candidates; for
/// piecewise-linear h this set contains a maximizing triple. Returns the
/// maximizing triple as witness.
BrokenCheck is_bin_broken(const Pwl1D& h, const Interval& bin, double c, double epsilon);

struct BinStatus {
    bool broken = false;
    TripleWitness witness;
};

struct BrokenBinReport {
    std::vector<BinStatus> bins;
    int broken_count = 0;
};

/// Per-bin classification of h over the whole partition. Bins without an
/// interior breakpoint are affine and therefore unbroken without search.
BrokenBinReport broken_bin_report(const Pwl1D& h, const BinPartition& part, double c);

/// Count only; skips witness bookkeeping but makes identical decisions.
int broken_bin_count(const Pwl1D& h, const BinPartition& part, double c);

} // namespace prunelab
