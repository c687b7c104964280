#include "levitan/weyl_engine.hpp"
#include "levitan/detail/quadrature.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <ostream>
#include <string>

#include <boost/numeric/odeint.hpp>

#include "levitan/detail/format.hpp"
#include "levitan/error.hpp"

namespace levitan {

namespace {

constexpr double pi = std::numbers::pi;

void mus_from_thetas(const BandStructure& band, std::span<double> th) {
    for (int j = 1; j <= band.gap_count(); ++j) th[j - 1] = mu_from_theta(band, j, th[j - 1]);
}

// mu_j and mu_j' from angles.
void mus_and_rates(const BandStructure& band, std::span<const double> th, std::span<double> mu,
                   std::span<double> dmu) {
    dubrovin_angle_rhs(band, th, dmu);
    for (int j = 1; j <= band.gap_count(); ++j) {
        mu[j - 1] = mu_from_theta(band, j, th[j - 1]);
        dmu[j - 1] *= band.gap_half_width(j) * std::sin(th[j - 1]);
    }
}

cplx inv_G_at(const WeylContext& ctx, cplx z, double tau) {
    const int n = ctx.band().gap_count();
    double th[64];
    std::vector<double> heap;
    std::span<double> buf(th, std::min(n, 64));
    if (n > 64) {
        heap.resize(n);
        buf = heap;
    }
    ctx.trajectory().thetas(tau, buf);
    mus_from_thetas(ctx.band(), buf);
    return 1.0 / G_from_mus(ctx.band(), z, buf);
}

// int_a^b dtau / G(z, tau) over one stretch without nodes inside, split at sigma flips.
cplx smooth_segment(const WeylContext& ctx, cplx z, double a, double b) {
    if (a == b) return 0.0;
    if (a > b) return -smooth_segment(ctx, z, b, a);
    const auto& tr = ctx.trajectory();
    std::vector<double> cuts{a};
    for (int j = 1; j <= tr.gap_count(); ++j) {
        if (std::floor(tr.theta(j, a) / pi) == std::floor(tr.theta(j, b) / pi)) continue;
        for (double f : tr.flip_points(j, a, b)) cuts.push_back(f);
    }
    cuts.push_back(b);
    std::sort(cuts.begin(), cuts.end());
    cplx total = 0.0;
    auto f = [&](double t) { return inv_G_at(ctx, z, t); };
    // z - mu cancels as z nears a gap, so the integrand carries relative noise of order
    // eps * scale / dist(z, gaps); the tolerance cannot be tighter than that floor.
    const BandStructure& band = ctx.band();
    const double scale = std::abs(z) + std::abs(band.edges().back());
    const double dist = std::max(band.distance_to_gaps(z), 1e-300);
    const double floor = 64.0 * std::numeric_limits<double>::epsilon() * scale / dist;
    const double tol = std::max(ctx.quad_tol(), floor);
    for (std::size_t i = 0; i + 1 < cuts.size(); ++i) {
        if (cuts[i + 1] <= cuts[i]) continue;
        double err = 0.0, l1 = 0.0;
        const cplx v = detail::gk15(f, cuts[i], cuts[i + 1], 15, tol, &err, &l1);
        if (!std::isfinite(v.real()) || !std::isfinite(v.imag()) || err > std::max(1e-7, 1e3 * floor) * l1)
            fail(ErrorCode::quadrature_failure, "quadrature of 1/G did not converge on [" +
                                                    std::to_string(cuts[i]) + ", " + std::to_string(cuts[i + 1]) +
                                                    "]");
        total += v;
    }
    return total;
}

// int_0^x dtau / G, split at trajectory nodes.
cplx integral_direct(const WeylContext& ctx, cplx z, double x) {
    const auto& tr = ctx.trajectory();
    if (!tr.contains(x)) fail(ErrorCode::out_of_range, "x = " + std::to_string(x) + " outside trajectory");
    const double h = tr.step();
    cplx total = 0.0;
    double a = 0.0;
    const double dir = x >= 0.0 ? 1.0 : -1.0;
    for (long k = 1;; ++k) {
        const double b = dir * static_cast<double>(k) * h;
        if (dir * b >= dir * x) {
            total += smooth_segment(ctx, z, a, x);
            break;
        }
        total += smooth_segment(ctx, z, a, b);
        a = b;
    }
    return total;
}

} // namespace

cplx inverse_G_integral(const WeylContext& ctx, cplx z, double x) { return integral_direct(ctx, z, x); }

namespace {

cplx ratio_root(const WeylContext& ctx, cplx z, double x) {
    const std::vector<double> mu = ctx.trajectory().mus(x);
    cplx r = 1.0;
    for (std::size_t j = 0; j < mu.size(); ++j) r *= std::sqrt((z - mu[j]) / (z - ctx.mu0()[j]));
    return r;
}

void require_admissible(const WeylContext& ctx, const SpectralPoint& p) {
    validate_point(ctx.band(), p);
    if (ctx.band().distance_to_gaps(p.z) < ctx.eps_gap())
        fail(ErrorCode::too_close_to_gap, "z within eps_gap of a gap; use the ODE representation");
    if (p.z.imag() == 0.0 && ctx.band().edge_index(p.z.real()) >= 0)
        fail(ErrorCode::branch_at_edge, "Weyl solutions at a band edge are not defined");
}

} // namespace

WeylContext::WeylContext(std::shared_ptr<const DivisorTrajectory> trajectory, double quad_tol)
    : trajectory_(std::move(trajectory)), quad_tol_(quad_tol) {
    eps_gap_ = trajectory_->gap_count() > 0 ? 1e-3 * trajectory_->band().min_gap_width() : 0.0;
    mu0_ = trajectory_->mus(0.0);
}

cplx G_from_mus(const BandStructure& band, cplx z, std::span<const double> mus) {
    cplx g = 1.0;
    for (int j = 1; j <= band.gap_count(); ++j) g *= (z - mus[j - 1]) / band.gap_lower(j);
    return g;
}

cplx H_from_mus(const BandStructure& band, cplx z, std::span<const double> mus, std::span<const double> dmus) {
    const int n = band.gap_count();
    cplx h = 0.0;
    for (int j = 1; j <= n; ++j) {
        cplx term = -dmus[j - 1] / band.gap_lower(j);
        for (int k = 1; k <= n; ++k)
            if (k != j) term *= (z - mus[k - 1]) / band.gap_lower(k);
        h += term;
    }
    return 0.5 * h;
}

cplx eval_G(const WeylContext& ctx, const SpectralPoint& p, double x) {
    return G_from_mus(ctx.band(), p.z, ctx.trajectory().mus(x));
}

cplx eval_H(const WeylContext& ctx, const SpectralPoint& p, double x) {
    const std::vector<double> th = ctx.trajectory().thetas(x);
    std::vector<double> mu(th.size()), dmu(th.size());
    mus_and_rates(ctx.band(), th, mu, dmu);
    return H_from_mus(ctx.band(), p.z, mu, dmu);
}

cplx eval_H_summation(const WeylContext& ctx, const SpectralPoint& p, double x) {
    const BandStructure& band = ctx.band();
    const int n = band.gap_count();
    const std::vector<double> th = ctx.trajectory().thetas(x);
    std::vector<double> mu(th.size());
    for (int j = 1; j <= n; ++j) mu[j - 1] = mu_from_theta(band, j, th[j - 1]);
    const cplx G = G_from_mus(band, p.z, mu);
    cplx sum = 0.0;
    for (int j = 1; j <= n; ++j) {
        const double m = mu[j - 1];
        if (band.edge_index(m) >= 0) continue; // Y^{1/2} vanishes at an edge
        double dG = 1.0 / band.gap_lower(j);
        for (int k = 1; k <= n; ++k)
            if (k != j) dG *= (m - mu[k - 1]) / band.gap_lower(k);
        const cplx root = eval_sqrtY(band, SpectralPoint::at(m));
        sum += static_cast<double>(sigma_from_theta(th[j - 1])) * root / (dG * (p.z - m));
    }
    return G * sum;
}

cplx eval_m(const WeylContext& ctx, const SpectralPoint& p, double x, WeylSign sign) {
    const BandStructure& band = ctx.band();
    const std::vector<double> th = ctx.trajectory().thetas(x);
    const int n = band.gap_count();
    std::vector<double> mu(n), dmu(n);
    mus_and_rates(band, th, mu, dmu);
    const double s = sign_value(sign);
    for (int j = 1; j <= n; ++j) {
        const double scale = std::max(1.0, std::abs(mu[j - 1]));
        if (std::abs(p.z - mu[j - 1]) > 1e-12 * scale) continue;
        const int sig = sigma_from_theta(th[j - 1]);
        if (band.edge_index(mu[j - 1]) >= 0 || sig == static_cast<int>(s))
            fail(ErrorCode::at_divisor_pole, "z sits on the divisor point mu_" + std::to_string(j));
        // removable: (H - sigma Y^{1/2}) / G by l'Hopital at z = mu_j
        const SpectralPoint at_mu = SpectralPoint::at(mu[j - 1]);
        const cplx root = eval_sqrtY(band, at_mu);
        const cplx droot = eval_dY(band, mu[j - 1]) / (2.0 * root);
        cplx dH = 0.0, dG = 0.0;
        for (int a = 1; a <= n; ++a) {
            cplx t = 1.0 / band.gap_lower(a);
            for (int k = 1; k <= n; ++k)
                if (k != a) t *= (at_mu.z - mu[k - 1]) / band.gap_lower(k);
            dG += t;
            for (int b = 1; b <= n; ++b) {
                if (b == a) continue;
                cplx u = -0.5 * dmu[a - 1] / (band.gap_lower(a) * band.gap_lower(b));
                for (int k = 1; k <= n; ++k)
                    if (k != a && k != b) u *= (at_mu.z - mu[k - 1]) / band.gap_lower(k);
                dH += u;
            }
        }
        return (dH + s * droot) / dG;
    }
    const cplx G = G_from_mus(band, p.z, mu);
    const cplx H = H_from_mus(band, p.z, mu, dmu);
    return (H + s * eval_sqrtY(band, p)) / G;
}

cplx eval_psi_product(const WeylContext& ctx, const SpectralPoint& p, double x, WeylSign sign) {
    require_admissible(ctx, p);
    if (x == 0.0) return 1.0;
    const cplx root = eval_sqrtY(ctx.band(), p);
    const cplx I = integral_direct(ctx, p.z, x);
    return ratio_root(ctx, p.z, x) * std::exp(sign_value(sign) * root * I);
}

OdeSolution eval_psi_ode_full(const WeylContext& ctx, const SpectralPoint& p, double x, WeylSign sign, double tol) {
    validate_point(ctx.band(), p);
    const auto& tr = ctx.trajectory();
    if (!tr.contains(x)) fail(ErrorCode::out_of_range, "x = " + std::to_string(x) + " outside trajectory");
    const cplx m0 = eval_m(ctx, p, 0.0, sign);
    if (x == 0.0) return {1.0, m0};
    using State = std::vector<cplx>;
    const double dir = x > 0.0 ? 1.0 : -1.0;
    const cplx z = p.z;
    const int n = tr.gap_count();
    // the angles ride along in the state (imaginary parts stay zero) so the potential carries
    // the integrator's accuracy, not the interpolation error of the stored trajectory
    std::vector<double> th(n), dth(n), mu(n);
    auto rhs = [&](const State& y, State& dy, double) {
        double pot = ctx.band().ground();
        if (n > 0) {
            for (int j = 0; j < n; ++j) th[j] = y[4 + j].real();
            dubrovin_angle_rhs(ctx.band(), th, dth);
            for (int j = 0; j < n; ++j) dy[4 + j] = dir * dth[j];
            mu = th;
            mus_from_thetas(ctx.band(), mu);
            pot = potential_from_mus(ctx.band(), mu);
        }
        const cplx q = pot - z;
        dy[0] = dir * y[1];
        dy[1] = dir * q * y[0];
        dy[2] = dir * y[3];
        dy[3] = dir * q * y[2];
    };
    State y{1.0, 0.0, 0.0, 1.0};
    for (double t : tr.precise_thetas(0.0)) y.push_back(t);
    namespace odeint = boost::numeric::odeint;
    const double len = std::abs(x);
    odeint::integrate_adaptive(odeint::make_controlled(tol, tol, odeint::runge_kutta_dopri5<State>()), rhs, y, 0.0,
                               len, std::min(len, 0.01));
    return {y[0] + m0 * y[2], y[1] + m0 * y[3]};
}

cplx eval_psi_ode(const WeylContext& ctx, const SpectralPoint& p, double x, WeylSign sign, double tol) {
    return eval_psi_ode_full(ctx, p, x, sign, tol).psi;
}

cplx eval_green(const WeylContext& ctx, const SpectralPoint& p) {
    validate_point(ctx.band(), p);
    if (p.z.imag() == 0.0 && ctx.band().edge_index(p.z.real()) >= 0)
        fail(ErrorCode::branch_at_edge, "Green function at a band edge");
    return -G_from_mus(ctx.band(), p.z, ctx.mu0()) / (2.0 * eval_sqrtY(ctx.band(), p));
}

double wronskian_check(const WeylContext& ctx, const SpectralPoint& p, double x_probe) {
    const cplx g = eval_green(ctx, p);
    cplx w;
    if (ctx.band().distance_to_gaps(p.z) >= ctx.eps_gap()) {
        const cplx pp = eval_psi_product(ctx, p, x_probe, WeylSign::plus);
        const cplx pm = eval_psi_product(ctx, p, x_probe, WeylSign::minus);
        const cplx mp = eval_m(ctx, p, x_probe, WeylSign::plus);
        const cplx mm = eval_m(ctx, p, x_probe, WeylSign::minus);
        w = pm * pp * (mp - mm);
    } else {
        const OdeSolution a = eval_psi_ode_full(ctx, p, x_probe, WeylSign::minus);
        const OdeSolution b = eval_psi_ode_full(ctx, p, x_probe, WeylSign::plus);
        w = a.psi * b.dpsi - a.dpsi * b.psi;
    }
    return std::abs(w + 1.0 / g);
}

PoleClassification classify_poles(const WeylContext& ctx) {
    const BandStructure& band = ctx.band();
    const int n = band.gap_count();
    PoleClassification out;
    if (n == 0) return out;
    const std::vector<double> th = ctx.trajectory().thetas(0.0);
    std::vector<double> mu(n), dmu(n);
    mus_and_rates(band, th, mu, dmu);
    for (int j = 1; j <= n; ++j) {
        const double m = ctx.trajectory().initial().entries()[j - 1].mu;
        const double scale = std::max(1.0, std::abs(m));
        if (std::abs(m - band.gap_lower(j)) <= 1e-12 * scale || std::abs(m - band.gap_upper(j)) <= 1e-12 * scale) {
            out.tags.push_back(PoleTag::edge_Mhat);
            continue;
        }
        const cplx H = H_from_mus(band, mu[j - 1], mu, dmu);
        const cplx root = eval_sqrtY(band, SpectralPoint::at(mu[j - 1]));
        const double plus = std::abs(H + root), minus = std::abs(H - root);
        const double floor = 1e-12 * (1.0 + std::abs(root));
        if (plus <= floor && minus <= floor)
            fail(ErrorCode::ambiguous_pole, "both Weyl numerators vanish at mu_" + std::to_string(j));
        out.tags.push_back(plus > minus ? PoleTag::M_plus : PoleTag::M_minus);
    }
    return out;
}

StructuralResidual structural_identity_check(const WeylContext& ctx, const SpectralPoint& p, double x, double h) {
    const BandStructure& band = ctx.band();
    const auto& tr = ctx.trajectory();
    const int n = band.gap_count();
    auto state = [&](double at, std::vector<double>& mu, std::vector<double>& dmu) {
        const std::vector<double> th = tr.precise_thetas(at);
        mu.assign(n, 0.0);
        dmu.assign(n, 0.0);
        mus_and_rates(band, th, mu, dmu);
    };
    std::vector<double> mu_m, mu_0, mu_p, d_m, d_0, d_p;
    state(x - h, mu_m, d_m);
    state(x, mu_0, d_0);
    state(x + h, mu_p, d_p);
    const cplx z = p.z;
    const cplx G = G_from_mus(band, z, mu_0);
    const cplx Gxx = (G_from_mus(band, z, mu_p) - 2.0 * G + G_from_mus(band, z, mu_m)) / (h * h);
    const cplx H = H_from_mus(band, z, mu_0, d_0);
    const cplx N = (potential_from_mus(band, mu_0) - z) * G - 0.5 * Gxx;
    const cplx Y = eval_Y(band, p);
    return {std::abs(G * N + H * H - Y), 1.0 + std::abs(Y)};
}

// ---------------------------------------------------------------------------

WeylSolutionTable::WeylSolutionTable(const WeylContext& ctx, const SpectralPoint& p) : ctx_(&ctx), point_(p) {
    require_admissible(ctx, p);
    sqrtY_ = eval_sqrtY(ctx.band(), p);
    G0_ = G_from_mus(ctx.band(), p.z, ctx.mu0());
    const auto& tr = ctx.trajectory();
    const std::size_t m = tr.size();
    origin_ = static_cast<std::size_t>(std::lround(-tr.x_min() / tr.step()));
    cumulative_.assign(m, 0.0);
    for (std::size_t i = origin_; i + 1 < m; ++i)
        cumulative_[i + 1] = cumulative_[i] + smooth_segment(ctx, p.z, tr.x_at(i), tr.x_at(i + 1));
    for (std::size_t i = origin_; i > 0; --i)
        cumulative_[i - 1] = cumulative_[i] + smooth_segment(ctx, p.z, tr.x_at(i), tr.x_at(i - 1));
}

cplx WeylSolutionTable::integral(double x) const {
    const auto& tr = ctx_->trajectory();
    if (!tr.contains(x)) fail(ErrorCode::out_of_range, "x = " + std::to_string(x) + " outside trajectory");
    // nearest node on the origin side of x
    const double t = (x - tr.x_min()) / tr.step();
    long i = x >= 0.0 ? static_cast<long>(std::floor(t + 1e-9)) : static_cast<long>(std::ceil(t - 1e-9));
    i = std::clamp<long>(i, 0, static_cast<long>(tr.size()) - 1);
    const double xi = tr.x_at(static_cast<std::size_t>(i));
    if (xi == x) return cumulative_[i];
    return cumulative_[i] + smooth_segment(*ctx_, point_.z, xi, x);
}

cplx WeylSolutionTable::psi(double x, WeylSign sign) const {
    if (x == 0.0) return 1.0;
    return ratio_root(*ctx_, point_.z, x) * std::exp(sign_value(sign) * sqrtY_ * integral(x));
}

cplx WeylSolutionTable::dpsi(double x, WeylSign sign) const {
    return eval_m(*ctx_, point_, x, sign) * psi(x, sign);
}

void write_weyl_probe_csv(std::ostream& os, const WeylContext& ctx, const std::vector<SpectralPoint>& points,
                          const std::vector<double>& xs) {
    using detail::fmt17;
    os << "re_z,im_z,side,x,re_psi_plus,im_psi_plus,re_psi_minus,im_psi_minus,re_m_plus,im_m_plus,re_g,im_g\n";
    for (const SpectralPoint& p : points) {
        const bool product = ctx.band().distance_to_gaps(p.z) >= ctx.eps_gap();
        std::unique_ptr<WeylSolutionTable> table;
        if (product) table = std::make_unique<WeylSolutionTable>(ctx, p);
        const cplx g = eval_green(ctx, p);
        for (double x : xs) {
            const cplx pp = product ? table->psi(x, WeylSign::plus) : eval_psi_ode(ctx, p, x, WeylSign::plus);
            const cplx pm = product ? table->psi(x, WeylSign::minus) : eval_psi_ode(ctx, p, x, WeylSign::minus);
            const cplx mp = eval_m(ctx, p, x, WeylSign::plus);
            os << fmt17(p.z.real()) << ',' << fmt17(p.z.imag()) << ',' << to_string(p.side) << ',' << fmt17(x)
               << ',' << fmt17(pp.real()) << ',' << fmt17(pp.imag()) << ',' << fmt17(pm.real()) << ','
               << fmt17(pm.imag()) << ',' << fmt17(mp.real()) << ',' << fmt17(mp.imag()) << ',' << fmt17(g.real())
               << ',' << fmt17(g.imag()) << '\n';
        }
    }
}

std::string_view to_string(Side side) {
    switch (side) {
    case Side::upper: return "upper";
    case Side::lower: return "lower";
    default: return "off_axis";
    }
}

std::string_view to_string(PoleTag tag) {
    switch (tag) {
    case PoleTag::M_plus: return "M_plus";
    case PoleTag::M_minus: return "M_minus";
    default: return "edge_Mhat";
    }
}

} // namespace levitan
