#pragma once

// Transformation-operator kernel for a perturbed finite-gap background.
//
// Band-edge residues factor through signed roots g_E(x) with g_E(x)^2 = |G(E,x)|:
//   f(E,x,y,r,s) = g_E(x) g_E(y) g_E(r) g_E(s) / Y'(E),   D = (1/4) sum_E f,
// so D(x,y,y,x) = -1/4 and the kernel equation is separable in the edges.

#include <cstddef>
#include <functional>
#include <iosfwd>
#include <string>
#include <limits>
#include <vector>

#include "levitan/weyl_engine.hpp"

namespace levitan {

// ---------------------------------------------------------------------------
// perturbation

enum class PerturbationForm { zero, gaussian_bump, compact_poly, table };

class PerturbationProfile {
public:
    static PerturbationProfile zero();
    /// A exp(-(x-c)^2 / (2 w^2)); w is the standard deviation.
    static PerturbationProfile gaussian_bump(double amplitude, double center, double width);
    /// sum_k c_k t^k with t = (x - a)/(b - a) on [a, b], zero outside. Must vanish at both ends.
    static PerturbationProfile compact_poly(std::vector<double> coeffs, double a, double b);
    /// Piecewise-linear samples, zero outside. End values must vanish.
    static PerturbationProfile table(std::vector<double> xs, std::vector<double> values);

    PerturbationForm form() const { return form_; }
    bool is_zero() const { return form_ == PerturbationForm::zero; }
    double operator()(double x) const;
    /// Interval outside of which q is zero or below 1e-300 (empty for zero).
    double support_lo() const { return lo_; }
    double support_hi() const { return hi_; }
    /// int_x^inf q
    double tail_integral(double x) const;
    /// int_x^inf |q|
    double tail_abs(double x) const;
    /// q(-x)
    PerturbationProfile mirrored() const;

    const std::vector<double>& params() const { return params_; }
    const std::vector<double>& xs() const { return xs_; }

private:
    PerturbationForm form_ = PerturbationForm::zero;
    std::vector<double> params_; // gaussian: A, c, w; poly: a, b, coeffs...
    std::vector<double> xs_, ys_;
    double lo_ = 0.0, hi_ = 0.0;
};

/// int_window (1 + x^2) |q| dx by adaptive quadrature.
double moment_check(const PerturbationProfile& q, double window_lo, double window_hi);

/// Smallest U >= x0 on the grid x0 + k h with int_U^inf |q| < eps * int_x0^inf |q| (x0 when q vanishes).
double kernel_truncation(const PerturbationProfile& q, double x0, double h, double eps = 1e-12);

// ---------------------------------------------------------------------------
// band-edge residues

/// Signed root g_{E_k}(x) for the given side; the minus side uses theta(x) -> -theta(-x).
double edge_factor(const DivisorTrajectory& trajectory, int k, double x, WeylSign sign = WeylSign::plus);
/// 1 / Y'(E_k)
double edge_weight(const BandStructure& band, int k);

/// Closed-form residue at E_k; exactly zero when mu_j meets E_k at one of the positions.
double residue_f_plus(const WeylContext& ctx, int k, double x, double y, double r, double s);
/// (1/4) sum_E f over all edges.
double eval_D(const WeylContext& ctx, double x, double y, double r, double s, WeylSign sign = WeylSign::plus);

/// sqrt|G(E,x) G(E,y) G(E,r) G(E,s)| / Y'(E)
double residue_modulus(const WeylContext& ctx, int k, double x, double y, double r, double s);
/// lim exp(Y^{1/2} (I(x) - I(y) + I(r) - I(s))) as z -> E_k inside the adjacent band, I = int_0 1/G,
/// extrapolated in sqrt(delta) and snapped to {+-1, +-i}. Throws ExtrapolationFailure.
cplx edge_exponential_limit(const WeylContext& ctx, int k, double x, double y, double r, double s);
/// Unsnapped extrapolated exponential factor (diagnostic).
cplx edge_exponential_limit_raw(const WeylContext& ctx, int k, double x, double y, double r, double s);

/// Bound for |f(E_k)|: k = 0 uses prod (E_{2j}-E0)/(E_{2j-1}-E0); k in {2l-1, 2l} uses
/// C1 (E_{2l}-E_{2l-1}) / (E_k - E0).
double residue_bound(const BandStructure& band, int k);
/// exp((1/beta) sum gap widths), beta the least distance from an edge to another gap.
double residue_constant_C1(const BandStructure& band);
/// (1/4) sum_k residue_bound(k) >= sup |D|.
double D_bound(const BandStructure& band);

// Integration-domain predicates of the kernel equation in raw sign form and solved form.
bool first_domain_raw(double x, double y, double s);
bool first_domain_solved(double x, double y, double s);
bool second_domain_raw(double x, double y, double t, double s);
bool second_domain_solved(double x, double y, double t, double s);

// ---------------------------------------------------------------------------
// kernel

struct KernelGridParams {
    double x0 = -8.0;
    double h = 0.05;
    double x_max_override = std::numeric_limits<double>::quiet_NaN();
    double tail_eps = 1e-12;
};

class KernelGrid {
public:
    KernelGrid(WeylSign sign, double x0, double h, std::size_t n, std::vector<double> values);

    WeylSign sign() const { return sign_; }
    /// left anchor of the solved frame (the minus side lives in the mirrored frame)
    double x0() const { return x0_; }
    double h() const { return h_; }
    std::size_t n() const { return n_; }
    double x_max() const { return x0_ + n_ * h_; }

    /// H(u_i, v_j) = K(u - v, u + v) in the solved frame, j <= i <= n.
    double node(std::size_t i, std::size_t j) const { return values_[i * (i + 1) / 2 + j]; }
    /// K(x, y) in the frame; zero for y < x and for (x+y)/2 >= x_max; interpolated off-grid.
    double frame_K(double x, double y) const;
    /// K_+(x, y) or K_-(x, y) in original coordinates.
    double K(double x, double y) const;

    int iterations = 0;
    double final_delta = 0.0;
    std::vector<double> deltas;
    double C_const = 0.0;

private:
    WeylSign sign_;
    double x0_, h_;
    std::size_t n_;
    std::vector<double> values_;
};

/// Solves the kernel equation by Jacobi sweeps on the (u, v) triangle.
/// Throws MomentViolation, NoConvergence, OutOfRange (trajectory too short).
KernelGrid solve_kernel(const WeylContext& ctx, const PerturbationProfile& q, WeylSign sign,
                        const KernelGridParams& params, double tol = 1e-12, int max_iter = 50);

void write_kernel_csv(std::ostream& os, const KernelGrid& grid);
void write_kernel_meta_json(std::ostream& os, const KernelGrid& grid);

struct KernelBoundReport {
    double C_const = 0.0;
    std::vector<double> x;        // grid x in the solved frame
    std::vector<double> C_of_x;   // 2C exp(4C int_{2x}^inf Q)
    std::vector<double> Q_plus;   // Q(2x) = int_x^inf |q|
    bool C_monotone = true;
    std::size_t checked = 0;
    std::vector<std::string> violations;
    double max_ratio = 0.0;       // max |K| / (C(x) Q(x+y)) over nonzero bounds
    double fitted_C1 = 0.0;       // derivative bound constant (reported)
    double l2_max_ratio = 0.0;    // max row ||K||^2 / bound
};

KernelBoundReport kernel_bound_check(const WeylContext& ctx, const KernelGrid& grid, const PerturbationProfile& q);

// ---------------------------------------------------------------------------
// Jost solutions

/// psi(x) +- int K psi on the kernel grid.
cplx jost_from_kernel(const WeylSolutionTable& table, const KernelGrid& grid, double x);
cplx jost_from_kernel(const WeylContext& ctx, const KernelGrid& grid, const SpectralPoint& p, double x,
                      WeylSign sign);

struct JostDirectSolution {
    double x_lo = 0.0, h = 0.0;     // grid in the solved frame
    std::vector<cplx> phi;          // frame values
    std::vector<double> deltas;
    WeylSign sign = WeylSign::plus;
    /// frame background solution, used right of the grid where q has been truncated
    std::function<cplx(double)> background;
    /// value at original coordinate x (linear interpolation off-grid)
    cplx at(double x) const;
};

/// Volterra equation phi = psi - int J q phi by successive approximation on a uniform grid
/// covering [x_lo, X_max] in the frame. Throws NoConvergence.
JostDirectSolution jost_direct_solve(const WeylSolutionTable& table, const PerturbationProfile& q, WeylSign sign,
                                     double frame_lo, double h = 0.005, double tol = 1e-13, int max_iter = 200);
cplx jost_direct(const WeylContext& ctx, const PerturbationProfile& q, const SpectralPoint& p, double x,
                 WeylSign sign);

/// sup over samples of |-phi'' + (p + q - z) phi| with centered differences of step h.
double schrodinger_residual(const WeylContext& ctx, const PerturbationProfile& q,
                            const std::function<cplx(double)>& phi, const SpectralPoint& p,
                            const std::vector<double>& xs, double h);

} // namespace levitan
