#pragma once

// Weyl functions and Weyl solutions of the background operator.
//
//   G(z,x) = prod_j (z - mu_j(x)) / E_{2j-1},   H = (1/2) dG/dx,
//   m(z,x) = (H +- Y^{1/2}) / G,                g(z) = -G(z,0) / (2 Y^{1/2}(z)),
//   psi(z,x) = (G(z,x)/G(z,0))^{1/2} exp(+- int_0^x Y^{1/2}/G dtau).

#include <iosfwd>
#include <memory>
#include <vector>

#include "levitan/dubrovin_flow.hpp"
#include "levitan/spectral_core.hpp"

namespace levitan {

enum class WeylSign { plus = 1, minus = -1 };

inline double sign_value(WeylSign s) { return s == WeylSign::plus ? 1.0 : -1.0; }

class WeylContext {
public:
    explicit WeylContext(std::shared_ptr<const DivisorTrajectory> trajectory, double quad_tol = 1e-11);

    const BandStructure& band() const { return trajectory_->band(); }
    const DivisorTrajectory& trajectory() const { return *trajectory_; }
    std::shared_ptr<const DivisorTrajectory> trajectory_ptr() const { return trajectory_; }
    /// Admissible distance from the gaps for the product representation.
    double eps_gap() const { return eps_gap_; }
    double quad_tol() const { return quad_tol_; }
    /// Divisor at x = 0 taken from the initial data (exact, not interpolated).
    std::span<const double> mu0() const { return mu0_; }

private:
    std::shared_ptr<const DivisorTrajectory> trajectory_;
    double eps_gap_;
    double quad_tol_;
    std::vector<double> mu0_;
};

/// G from explicit divisor values.
cplx G_from_mus(const BandStructure& band, cplx z, std::span<const double> mus);
/// (1/2) d/dx G from divisor values and their x-derivatives (product rule).
cplx H_from_mus(const BandStructure& band, cplx z, std::span<const double> mus, std::span<const double> dmus);

cplx eval_G(const WeylContext& ctx, const SpectralPoint& p, double x);
/// Product-rule form, valid for every z.
cplx eval_H(const WeylContext& ctx, const SpectralPoint& p, double x);
/// Summation form G sum_j sigma_j Y^{1/2}(mu_j) / (G_z(mu_j) (z - mu_j)); needs z != mu_j(x).
cplx eval_H_summation(const WeylContext& ctx, const SpectralPoint& p, double x);

/// Throws AtDivisorPole when z sits on a divisor point where this sign has its pole.
cplx eval_m(const WeylContext& ctx, const SpectralPoint& p, double x, WeylSign sign);

/// int_0^x dtau / G(z, tau) by adaptive quadrature; no admissibility check on z.
cplx inverse_G_integral(const WeylContext& ctx, cplx z, double x);

/// Product representation. Throws TooCloseToGap, QuadratureFailure.
cplx eval_psi_product(const WeylContext& ctx, const SpectralPoint& p, double x, WeylSign sign);

struct OdeSolution {
    cplx psi;
    cplx dpsi;
};
/// c + m(z,0) s from the background equation y'' = (p - z) y integrated from 0.
OdeSolution eval_psi_ode_full(const WeylContext& ctx, const SpectralPoint& p, double x, WeylSign sign,
                              double tol = 1e-12);
cplx eval_psi_ode(const WeylContext& ctx, const SpectralPoint& p, double x, WeylSign sign, double tol = 1e-12);

/// Throws BranchAtEdge at an edge.
cplx eval_green(const WeylContext& ctx, const SpectralPoint& p);

/// |W(psi_-, psi_+)(x) + 1/g| with psi' = m psi.
double wronskian_check(const WeylContext& ctx, const SpectralPoint& p, double x_probe);

enum class PoleTag { M_plus, M_minus, edge_Mhat };

struct PoleClassification {
    std::vector<PoleTag> tags;
};

/// Classification of the divisor at x = 0. Throws AmbiguousPole.
PoleClassification classify_poles(const WeylContext& ctx);

struct StructuralResidual {
    double residual; // |G N + H^2 - Y|
    double scale;    // 1 + |Y|
};
/// N = (p - z) G - (1/2) G_xx with G_xx by centered differences of step h.
StructuralResidual structural_identity_check(const WeylContext& ctx, const SpectralPoint& p, double x,
                                             double h = 1e-3);

/// Cached int_0^x dtau / G(z,tau) on the trajectory nodes for one z; psi at any x
/// in the trajectory range costs one short quadrature.
class WeylSolutionTable {
public:
    WeylSolutionTable(const WeylContext& ctx, const SpectralPoint& p);

    const SpectralPoint& point() const { return point_; }
    cplx sqrtY() const { return sqrtY_; }
    /// g(z) = -G(z,0) / (2 Y^{1/2}(z))
    cplx green() const { return -G0_ / (2.0 * sqrtY_); }
    cplx integral(double x) const;
    cplx psi(double x, WeylSign sign) const;
    /// psi' = m psi
    cplx dpsi(double x, WeylSign sign) const;

private:
    cplx segment(double a, double b) const;

    const WeylContext* ctx_;
    SpectralPoint point_;
    cplx sqrtY_;
    cplx G0_;
    std::size_t origin_;
    std::vector<cplx> cumulative_;
};

/// Probe sweep CSV: re_z,im_z,side,x,re_psi_plus,...,re_g,im_g
void write_weyl_probe_csv(std::ostream& os, const WeylContext& ctx, const std::vector<SpectralPoint>& points,
                          const std::vector<double>& xs);

std::string_view to_string(Side side);
std::string_view to_string(PoleTag tag);

} // namespace levitan
