#pragma once

// Band-edge data, the hyperelliptic polynomial Y(z) and its square root.
//
// The spectrum is [E0,E1] u [E2,E3] u ... u [E_{2N}, inf); the open intervals
// (E_{2j-1}, E_{2j}) are the gaps. Every root sqrt(z - E) is taken with
// Im sqrt >= 0 (cut along [E, inf)), which places the cuts of Y^{1/2} on the
// spectrum. On a band, the side tag selects the upper or lower boundary value.

#include <complex>
#include <span>
#include <vector>

namespace levitan {

using cplx = std::complex<double>;

enum class Side { off_axis, upper, lower };

struct SpectralPoint {
    cplx z;
    Side side = Side::off_axis;

    static SpectralPoint at(cplx z) { return {z, Side::off_axis}; }
    static SpectralPoint upper(double e) { return {cplx(e, 0.0), Side::upper}; }
    static SpectralPoint lower(double e) { return {cplx(e, 0.0), Side::lower}; }

    SpectralPoint conjugate() const {
        Side s = side == Side::upper ? Side::lower : side == Side::lower ? Side::upper : Side::off_axis;
        return {std::conj(z), s};
    }
};

class BandStructure {
public:
    /// Validates the edge sequence and calibrates the branch sign.
    /// Throws Error{NegativeGround | NonMonotonic | EmptyGap | MalformedBand}.
    BandStructure(std::vector<double> edges, double l = 2.0, double C = 1.0, double alpha = 1.0);

    std::span<const double> edges() const { return edges_; }
    int edge_count() const { return static_cast<int>(edges_.size()); }
    int gap_count() const { return static_cast<int>(edges_.size() / 2); }
    double ground() const { return edges_.front(); }
    double top() const { return edges_.back(); }

    // Gaps are 1-based as in (E_{2j-1}, E_{2j}).
    double gap_lower(int j) const { return edges_[2 * j - 1]; }
    double gap_upper(int j) const { return edges_[2 * j]; }
    double gap_center(int j) const { return 0.5 * (gap_lower(j) + gap_upper(j)); }
    double gap_half_width(int j) const { return 0.5 * (gap_upper(j) - gap_lower(j)); }
    double min_gap_width() const;

    double hyp_l() const { return l_; }
    double hyp_C() const { return C_; }
    double hyp_alpha() const { return alpha_; }

    /// +1 or -1, chosen once so that Im g(z^u) > 0 at a mid-band probe.
    int branch_sign() const { return branch_sign_; }

    /// Index k with E_k == e exactly, or -1.
    int edge_index(double e) const;
    /// True if e lies in a closed band (including the unbounded last band).
    bool in_band(double e) const;
    /// Distance from z to the union of the closed gaps; +inf when N = 0.
    double distance_to_gaps(cplx z) const;

private:
    std::vector<double> edges_;
    double l_, C_, alpha_;
    int branch_sign_ = 1;
};

struct HypothesisReport {
    double partial_sum = 0.0;       // sum_{n<=N} E_{2n-1}^l (E_{2n} - E_{2n-1})
    std::vector<bool> growth_ok;    // E_{2n+1} - E_{2n-1} > C n^alpha, n = 1..N-1
    double min_growth_ratio = 0.0;  // min_n (E_{2n+1} - E_{2n-1}) / (C n^alpha); +inf if no n
    bool all_growth_ok() const;
};

HypothesisReport validate_band_structure(std::span<const double> edges, double l, double C, double alpha);

/// Throws Error{GrowthFailure} naming the first failing n.
void require_hypothesis(const HypothesisReport& report);

/// Throws Error{InvalidPoint} unless a side tag is used only for real z in a closed band.
void validate_point(const BandStructure& band, const SpectralPoint& p);

cplx eval_Y(const BandStructure& band, const SpectralPoint& p);
/// dY/dz at an arbitrary z.
cplx eval_dY(const BandStructure& band, cplx z);
/// dY/dz at the edge E_k, as an exact product.
double eval_dY_at_edge(const BandStructure& band, int k);

/// Y^{1/2}(z). Throws BranchAtEdge at an edge without a side, OnBranchCut for a
/// real band point without a side, InvalidPoint for a malformed side tag.
cplx eval_sqrtY(const BandStructure& band, const SpectralPoint& p);

/// sqrt(w) with Im >= 0 (the cut along the positive axis).
inline cplx root_upper(cplx w) {
    cplx r = std::sqrt(w);
    if (r.imag() < 0.0) r = -r;
    return r;
}

} // namespace levitan
