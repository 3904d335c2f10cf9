#include "prunelab/pwl.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace prunelab {

Pwl1D::Pwl1D(double slope0, double intercept0, std::vector<Hinge> hinges)
    : slope0_(slope0), intercept0_(intercept0), hinges_(std::move(hinges)) {
    normalize();
}

Pwl1D Pwl1D::affine(double slope, double intercept) {
    return Pwl1D(slope, intercept, {});
}

Pwl1D Pwl1D::relu_ramp(double scale, double a, double b) {
    if (a == 0.0)
        return Pwl1D::affine(0.0, scale * std::max(b, 0.0));
    const double breakpoint = -b / a;
    if (a > 0.0) {
        // zero left of the breakpoint, slope scale*a right of it
        return Pwl1D(0.0, 0.0, {{breakpoint, scale * a}});
    }
    // active side is t < breakpoint; the hinge flattens the right side
    return Pwl1D(scale * a, scale * b, {{breakpoint, -scale * a}});
}

void Pwl1D::normalize() {
    std::sort(hinges_.begin(), hinges_.end(),
              [](const Hinge& l, const Hinge& r) { return l.pos < r.pos; });
    std::vector<Hinge> merged;
    merged.reserve(hinges_.size());
    for (const Hinge& h : hinges_) {
        if (!merged.empty() && h.pos - merged.back().pos < kMergeTol) {
            merged.back().jump += h.jump;
        } else {
            merged.push_back(h);
        }
    }
    merged.erase(std::remove_if(merged.begin(), merged.end(),
                                [](const Hinge& h) { return h.jump == 0.0; }),
                 merged.end());
    hinges_ = std::move(merged);
}

double Pwl1D::value(double t) const {
    double v = slope0_ * t + intercept0_;
    for (const Hinge& h : hinges_) {
        if (h.pos >= t)
            break;
        v += h.jump * (t - h.pos);
    }
    return v;
}

double Pwl1D::slope_right_of(double t) const {
    double s = slope0_;
    for (const Hinge& h : hinges_) {
        if (h.pos > t)
            break;
        s += h.jump;
    }
    return s;
}

Pwl1D& Pwl1D::operator+=(const Pwl1D& other) {
    slope0_ += other.slope0_;
    intercept0_ += other.intercept0_;
    hinges_.insert(hinges_.end(), other.hinges_.begin(), other.hinges_.end());
    normalize();
    return *this;
}

Pwl1D Pwl1D::operator-() const {
    std::vector<Hinge> flipped = hinges_;
    for (Hinge& h : flipped)
        h.jump = -h.jump;
    return Pwl1D(-slope0_, -intercept0_, std::move(flipped));
}

Pwl1D pwl_sum(const std::vector<Pwl1D>& parts) {
    Pwl1D out;
    for (const Pwl1D& p : parts)
        out += p;
    return out;
}

Pwl1D residual(const Pwl1D& net_part, const Pwl1D& target_part) {
    return net_part - target_part;
}

Pwl1D pwl_relu(const Pwl1D& f) {
    constexpr double kInf = std::numeric_limits<double>::infinity();

    // Piece boundaries: f's hinges plus the zero crossings of each segment.
    std::vector<double> bounds;
    bounds.reserve(f.hinges().size() * 2 + 2);
    for (const Hinge& h : f.hinges())
        bounds.push_back(h.pos);

    auto segment_crossing = [&](double lo, double hi, double slope) {
        if (slope == 0.0)
            return;
        double anchor = 0.0;
        if (std::isfinite(lo))
            anchor = lo;
        else if (std::isfinite(hi))
            anchor = hi;
        const double cross = anchor - f.value(anchor) / slope;
        if (cross > lo && cross < hi)
            bounds.push_back(cross);
    };

    const auto& hs = f.hinges();
    if (hs.empty()) {
        if (f.slope0() == 0.0)
            return Pwl1D::affine(0.0, std::max(f.intercept0(), 0.0));
        segment_crossing(-kInf, kInf, f.slope0());
    } else {
        segment_crossing(-kInf, hs.front().pos, f.slope0());
        double slope = f.slope0();
        for (std::size_t i = 0; i < hs.size(); ++i) {
            slope += hs[i].jump;
            const double lo = hs[i].pos;
            const double hi = (i + 1 < hs.size()) ? hs[i + 1].pos : kInf;
            segment_crossing(lo, hi, slope);
        }
    }

    std::sort(bounds.begin(), bounds.end());
    bounds.erase(std::unique(bounds.begin(), bounds.end(),
                             [](double a, double b) { return b - a < Pwl1D::kMergeTol; }),
                 bounds.end());

    // Positivity and slope of f on each piece; relu slope is f's slope on
    // positive pieces and zero elsewhere.
    auto piece_positive = [&](double lo, double hi) {
        double probe;
        if (std::isfinite(lo) && std::isfinite(hi))
            probe = 0.5 * (lo + hi);
        else if (std::isfinite(lo))
            probe = lo + 1.0;
        else
            probe = hi - 1.0;
        return f.value(probe) > 0.0;
    };

    const std::size_t n = bounds.size();
    const double left_hi = n > 0 ? bounds[0] : std::numeric_limits<double>::infinity();
    const bool left_pos = piece_positive(-std::numeric_limits<double>::infinity(), left_hi);

    const double out_slope0 = left_pos ? f.slope0() : 0.0;
    const double out_intercept0 = left_pos ? f.intercept0() : 0.0;

    std::vector<Hinge> out_hinges;
    double prev_rel_slope = out_slope0;
    double fslope = f.slope0();
    std::size_t next_hinge = 0;
    for (std::size_t i = 0; i < n; ++i) {
        const double b = bounds[i];
        while (next_hinge < hs.size() && hs[next_hinge].pos <= b + Pwl1D::kMergeTol) {
            fslope += hs[next_hinge].jump;
            ++next_hinge;
        }
        const double lo = b;
        const double hi = (i + 1 < n) ? bounds[i + 1] : kInf;
        const bool pos = piece_positive(lo, hi);
        const double rel_slope = pos ? fslope : 0.0;
        if (rel_slope != prev_rel_slope)
            out_hinges.push_back({b, rel_slope - prev_rel_slope});
        prev_rel_slope = rel_slope;
    }

    return Pwl1D(out_slope0, out_intercept0, std::move(out_hinges));
}

SupResult sup_abs_on_interval(const Pwl1D& h, double a, double b) {
    if (a > b)
        throw std::invalid_argument("sup_abs_on_interval: a > b");
    SupResult best{std::abs(h.value(a)), a};
    auto consider = [&](double t) {
        const double v = std::abs(h.value(t));
        if (v > best.value) {
            best.value = v;
            best.argmax = t;
        }
    };
    for (const Hinge& hg : h.hinges())
        if (hg.pos > a && hg.pos < b)
            consider(hg.pos);
    consider(b);
    return best;
}

double minimax_affine_3pts(double t1, double t2, double t3,
                           double h1, double h2, double h3) {
    if (!(t1 < t2 && t2 < t3))
        throw std::invalid_argument("minimax_affine_3pts: need t1 < t2 < t3");
    const double l13_at_t2 = h1 + (h3 - h1) * (t2 - t1) / (t3 - t1);
    return 0.5 * std::abs(h2 - l13_at_t2);
}

BinPartition::BinPartition(double epsilon, double r) : epsilon_(epsilon), r_(r) {
    if (epsilon <= 0.0)
        throw std::invalid_argument("BinPartition: epsilon must be positive");
    if (r <= 1.0)
        throw std::invalid_argument("BinPartition: r must exceed 1");
    hi_ = std::sqrt(r * r - 1.0);
    lo_ = -hi_;
    num_bins_ = static_cast<int>(std::ceil((hi_ - lo_) / epsilon_));
    if (num_bins_ < 1)
        num_bins_ = 1;
}

Interval BinPartition::bin(int i) const {
    if (i < 0 || i >= num_bins_)
        throw std::out_of_range("BinPartition::bin");
    const double a = lo_ + epsilon_ * i;
    const double b = (i + 1 == num_bins_) ? hi_ : std::min(a + epsilon_, hi_);
    return {a, b};
}

int BinPartition::bin_index(double t) const {
    if (t < lo_ || t > hi_)
        return -1;
    int i = static_cast<int>(std::floor((t - lo_) / epsilon_));
    if (i >= num_bins_)
        i = num_bins_ - 1;
    if (i < 0)
        i = 0;
    return i;
}

namespace {

// Candidate abscissae for the triple search: endpoints, interior
// breakpoints, and midpoints of consecutive candidates.
std::vector<double> triple_candidates(const Pwl1D& h, const Interval& bin) {
    std::vector<double> pts;
    pts.push_back(bin.lo);
    for (const Hinge& hg : h.hinges())
        if (hg.pos > bin.lo && hg.pos < bin.hi)
            pts.push_back(hg.pos);
    pts.push_back(bin.hi);
    std::vector<double> full;
    full.reserve(pts.size() * 2);
    for (std::size_t i = 0; i + 1 < pts.size(); ++i) {
        full.push_back(pts[i]);
        full.push_back(0.5 * (pts[i] + pts[i + 1]));
    }
    full.push_back(pts.back());
    full.erase(std::unique(full.begin(), full.end()), full.end());
    return full;
}

BrokenCheck check_bin(const Pwl1D& h, const Interval& bin, double c, double epsilon,
                      bool want_witness) {
    BrokenCheck out;
    // A bin with no interior breakpoint is affine: every triple fits exactly.
    bool has_interior = false;
    for (const Hinge& hg : h.hinges()) {
        if (hg.pos > bin.lo && hg.pos < bin.hi) {
            has_interior = true;
            break;
        }
    }
    const double threshold = c * epsilon;
    if (!has_interior) {
        if (want_witness) {
            const double mid = 0.5 * (bin.lo + bin.hi);
            out.witness = {bin.lo, mid, bin.hi, 0.0};
        }
        return out;
    }

    const std::vector<double> pts = triple_candidates(h, bin);
    std::vector<double> vals(pts.size());
    for (std::size_t i = 0; i < pts.size(); ++i)
        vals[i] = h.value(pts[i]);

    TripleWitness best;
    bool have_best = false;
    const std::size_t n = pts.size();
    for (std::size_t i = 0; i + 2 < n; ++i) {
        for (std::size_t j = i + 1; j + 1 < n; ++j) {
            const double span = pts[j] - pts[i];
            for (std::size_t k = j + 1; k < n; ++k) {
                const double l13 = vals[i] + (vals[k] - vals[i]) * span / (pts[k] - pts[i]);
                const double m = 0.5 * std::abs(vals[j] - l13);
                if (!have_best || m > best.minimax) {
                    best = {pts[i], pts[j], pts[k], m};
                    have_best = true;
                }
            }
        }
    }
    out.broken = have_best && best.minimax >= threshold;
    if (want_witness)
        out.witness = best;
    return out;
}

} // namespace

BrokenCheck is_bin_broken(const Pwl1D& h, const Interval& bin, double c, double epsilon) {
    if (bin.width() > epsilon + 1e-9)
        throw std::invalid_argument("is_bin_broken: bin wider than epsilon");
    if (c <= 0.0)
        throw std::invalid_argument("is_bin_broken: c must be positive");
    return check_bin(h, bin, c, epsilon, true);
}

BrokenBinReport broken_bin_report(const Pwl1D& h, const BinPartition& part, double c) {
    BrokenBinReport report;
    report.bins.resize(static_cast<std::size_t>(part.num_bins()));
    for (int i = 0; i < part.num_bins(); ++i) {
        const BrokenCheck chk = check_bin(h, part.bin(i), c, part.epsilon(), true);
        report.bins[static_cast<std::size_t>(i)] = {chk.broken, chk.witness};
        if (chk.broken)
            ++report.broken_count;
    }
    return report;
}

int broken_bin_count(const Pwl1D& h, const BinPartition& part, double c) {
    // Only bins holding an interior breakpoint can be broken; visit those.
    int count = 0;
    int last_bin = -2;
    for (const Hinge& hg : h.hinges()) {
        const int b = part.bin_index(hg.pos);
        if (b < 0 || b == last_bin)
            continue;
        const Interval iv = part.bin(b);
        if (hg.pos <= iv.lo || hg.pos >= iv.hi) {
            // breakpoint sits on a bin boundary: affine on both closed bins
            continue;
        }
        last_bin = b;
        if (check_bin(h, iv, c, part.epsilon(), false).broken)
            ++count;
    }
    return count;
}

} // namespace prunelab
