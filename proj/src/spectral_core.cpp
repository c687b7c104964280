#include "levitan/spectral_core.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "levitan/error.hpp"

namespace levitan {

namespace {

void check_edges(std::span<const double> edges) {
    if (edges.empty()) fail(ErrorCode::malformed_band, "band structure needs at least one edge");
    if (edges.size() % 2 == 0)
        fail(ErrorCode::malformed_band, "edge count must be odd (E0..E2N), got " + std::to_string(edges.size()));
    for (double e : edges)
        if (!std::isfinite(e)) fail(ErrorCode::malformed_band, "non-finite band edge");
    if (edges[0] < 0.0) fail(ErrorCode::negative_ground, "E0 = " + std::to_string(edges[0]) + " < 0");
    for (std::size_t k = 0; k + 1 < edges.size(); ++k) {
        if (edges[k + 1] < edges[k])
            fail(ErrorCode::non_monotonic, "edges out of order at index " + std::to_string(k + 1));
        if (edges[k + 1] == edges[k]) {
            // k odd: (E_k, E_{k+1}) is a gap
            if (k % 2 == 1)
                fail(ErrorCode::empty_gap, "gap " + std::to_string((k + 1) / 2) + " has zero width");
            fail(ErrorCode::non_monotonic, "band starting at index " + std::to_string(k) + " has zero width");
        }
    }
}

void check_params(double l, double C, double alpha) {
    if (!(l > 1.0)) fail(ErrorCode::malformed_band, "Hypothesis exponent l must exceed 1");
    if (!(C > 0.0)) fail(ErrorCode::malformed_band, "Hypothesis constant C must be positive");
    if (!(alpha > 0.0)) fail(ErrorCode::malformed_band, "Hypothesis exponent alpha must be positive");
}

cplx sqrtY_raw(std::span<const double> e, cplx z) {
    cplx prod = root_upper(z - e[0]);
    const std::size_t n = e.size() / 2;
    for (std::size_t j = 1; j <= n; ++j)
        prod *= root_upper(z - e[2 * j - 1]) * root_upper(z - e[2 * j]) / e[2 * j - 1];
    return cplx(0.0, 1.0) * prod;
}

} // namespace

BandStructure::BandStructure(std::vector<double> edges, double l, double C, double alpha)
    : edges_(std::move(edges)), l_(l), C_(C), alpha_(alpha) {
    check_edges(edges_);
    check_params(l_, C_, alpha_);

    // Calibrate against (1/i) g(z^u) > 0 at the middle of the first band.
    // The sign of G(z,0) on a band does not depend on where the divisor
    // sits inside the gaps, so gap centers stand in for mu_j.
    const double probe = gap_count() > 0 ? 0.5 * (edges_[0] + edges_[1]) : edges_[0] + 1.0;
    cplx G = 1.0;
    for (int j = 1; j <= gap_count(); ++j) G *= (probe - gap_center(j)) / gap_lower(j);
    const cplx g = -G / (2.0 * sqrtY_raw(edges_, cplx(probe, 0.0)));
    branch_sign_ = g.imag() > 0.0 ? 1 : -1;
}

double BandStructure::min_gap_width() const {
    double w = std::numeric_limits<double>::infinity();
    for (int j = 1; j <= gap_count(); ++j) w = std::min(w, gap_upper(j) - gap_lower(j));
    return w;
}

int BandStructure::edge_index(double e) const {
    auto it = std::lower_bound(edges_.begin(), edges_.end(), e);
    if (it != edges_.end() && *it == e) return static_cast<int>(it - edges_.begin());
    return -1;
}

bool BandStructure::in_band(double e) const {
    if (e < edges_[0]) return false;
    if (e >= edges_.back()) return true;
    // index of the first edge strictly greater than e
    auto k = std::upper_bound(edges_.begin(), edges_.end(), e) - edges_.begin();
    // e in [E_{k-1}, E_k); bands start at even indices
    return (k - 1) % 2 == 0 || e == edges_[k - 1];
}

double BandStructure::distance_to_gaps(cplx z) const {
    double d = std::numeric_limits<double>::infinity();
    for (int j = 1; j <= gap_count(); ++j) {
        const double lo = gap_lower(j), hi = gap_upper(j);
        const double dx = z.real() < lo ? lo - z.real() : (z.real() > hi ? z.real() - hi : 0.0);
        d = std::min(d, std::hypot(dx, z.imag()));
    }
    return d;
}

bool HypothesisReport::all_growth_ok() const {
    return std::all_of(growth_ok.begin(), growth_ok.end(), [](bool b) { return b; });
}

HypothesisReport validate_band_structure(std::span<const double> edges, double l, double C, double alpha) {
    check_edges(edges);
    check_params(l, C, alpha);
    HypothesisReport r;
    const int n_gaps = static_cast<int>(edges.size() / 2);
    for (int n = 1; n <= n_gaps; ++n)
        r.partial_sum += std::pow(edges[2 * n - 1], l) * (edges[2 * n] - edges[2 * n - 1]);
    r.min_growth_ratio = std::numeric_limits<double>::infinity();
    for (int n = 1; n + 1 <= n_gaps; ++n) {
        const double ratio = (edges[2 * n + 1] - edges[2 * n - 1]) / (C * std::pow(n, alpha));
        r.growth_ok.push_back(ratio > 1.0);
        r.min_growth_ratio = std::min(r.min_growth_ratio, ratio);
    }
    return r;
}

void require_hypothesis(const HypothesisReport& report) {
    for (std::size_t i = 0; i < report.growth_ok.size(); ++i)
        if (!report.growth_ok[i])
            fail(ErrorCode::growth_failure,
                 "E_{2n+1} - E_{2n-1} <= C n^alpha at n = " + std::to_string(i + 1));
}

void validate_point(const BandStructure& band, const SpectralPoint& p) {
    if (!std::isfinite(p.z.real()) || !std::isfinite(p.z.imag()))
        fail(ErrorCode::invalid_point, "non-finite spectral point");
    if (p.side == Side::off_axis) return;
    if (p.z.imag() != 0.0) fail(ErrorCode::invalid_point, "side tag requires a real energy");
    if (!band.in_band(p.z.real()))
        fail(ErrorCode::invalid_point, "side tag requires an energy in the spectrum");
}

cplx eval_Y(const BandStructure& band, const SpectralPoint& p) {
    const auto e = band.edges();
    const cplx z = p.z;
    cplx y = -(z - e[0]);
    for (int j = 1; j <= band.gap_count(); ++j) {
        const double n = band.gap_lower(j);
        y *= (z - band.gap_lower(j)) * (z - band.gap_upper(j)) / (n * n);
    }
    return y;
}

cplx eval_dY(const BandStructure& band, cplx z) {
    const auto e = band.edges();
    double norm = 1.0;
    for (int j = 1; j <= band.gap_count(); ++j) norm *= band.gap_lower(j) * band.gap_lower(j);
    cplx sum = 0.0;
    for (std::size_t k = 0; k < e.size(); ++k) {
        cplx term = 1.0;
        for (std::size_t m = 0; m < e.size(); ++m)
            if (m != k) term *= z - e[m];
        sum += term;
    }
    return -sum / norm;
}

double eval_dY_at_edge(const BandStructure& band, int k) {
    const auto e = band.edges();
    double prod = 1.0;
    for (std::size_t m = 0; m < e.size(); ++m)
        if (static_cast<int>(m) != k) prod *= e[k] - e[m];
    for (int j = 1; j <= band.gap_count(); ++j) prod /= band.gap_lower(j) * band.gap_lower(j);
    return -prod;
}

cplx eval_sqrtY(const BandStructure& band, const SpectralPoint& p) {
    validate_point(band, p);
    const double x = p.z.real();
    if (p.z.imag() == 0.0) {
        const bool at_edge = band.edge_index(x) >= 0;
        if (p.side == Side::off_axis) {
            if (at_edge) fail(ErrorCode::branch_at_edge, "Y^{1/2} at a band edge needs a directional limit");
            if (band.in_band(x)) fail(ErrorCode::on_branch_cut, "Y^{1/2} on the spectrum needs a side tag");
        }
        if (at_edge) return 0.0;
        // Real arguments: root_upper returns the upper-side limit for every factor.
        const cplx up = static_cast<double>(band.branch_sign()) * sqrtY_raw(band.edges(), cplx(x, 0.0));
        return p.side == Side::lower ? std::conj(up) : up;
    }
    return static_cast<double>(band.branch_sign()) * sqrtY_raw(band.edges(), p.z);
}

} // namespace levitan
