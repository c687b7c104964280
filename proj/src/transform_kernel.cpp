#include "levitan/transform_kernel.hpp"
#include "levitan/detail/quadrature.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <ostream>
#include <string>


#include "levitan/detail/format.hpp"
#include "levitan/detail/parallel.hpp"
#include "levitan/error.hpp"

namespace levitan {

namespace {


int sgn(double v) { return (v > 0.0) - (v < 0.0); }

std::vector<double> frame_thetas(const DivisorTrajectory& tr, double x, WeylSign sign) {
    if (sign == WeylSign::plus) return tr.thetas(x);
    std::vector<double> th = tr.thetas(-x);
    for (double& t : th) t = -t;
    return th;
}

double edge_factor_from_thetas(const BandStructure& band, int k, std::span<const double> th) {
    const int n = band.gap_count();
    const double e = band.edges()[k];
    const int owner = (k + 1) / 2; // gap whose edge E_k is (0 for E0)
    double v = 1.0;
    for (int j = 1; j <= n; ++j) {
        const double mu = mu_from_theta(band, j, th[j - 1]);
        if (mu == e) return 0.0;
        if (j == owner) {
            const double half = 0.5 * th[j - 1];
            const double trig = (k % 2 == 0) ? std::cos(half) : std::sin(half);
            v *= std::sqrt(2.0 * band.gap_half_width(j) / band.gap_lower(j)) * trig;
        } else {
            v *= std::sqrt(std::abs(e - mu) / band.gap_lower(j));
        }
    }
    return v;
}

// Neville extrapolation of (t_i, v_i) to t = 0.
cplx extrapolate_to_zero(const std::vector<double>& t, std::vector<cplx> v) {
    const std::size_t n = t.size();
    for (std::size_t m = 1; m < n; ++m)
        for (std::size_t i = 0; i + m < n; ++i)
            v[i] = (t[i + m] * v[i] - t[i] * v[i + 1]) / (t[i + m] - t[i]);
    return v[0];
}

} // namespace

// ---------------------------------------------------------------------------
// residues

double edge_factor(const DivisorTrajectory& trajectory, int k, double x, WeylSign sign) {
    const BandStructure& band = trajectory.band();
    if (k < 0 || k >= band.edge_count()) fail(ErrorCode::out_of_range, "edge index out of range");
    const std::vector<double> th = frame_thetas(trajectory, x, sign);
    return edge_factor_from_thetas(band, k, th);
}

double edge_weight(const BandStructure& band, int k) { return 1.0 / eval_dY_at_edge(band, k); }

double residue_f_plus(const WeylContext& ctx, int k, double x, double y, double r, double s) {
    const auto& tr = ctx.trajectory();
    const double prod = edge_factor(tr, k, x) * edge_factor(tr, k, y) * edge_factor(tr, k, r) * edge_factor(tr, k, s);
    return prod * edge_weight(ctx.band(), k);
}

double eval_D(const WeylContext& ctx, double x, double y, double r, double s, WeylSign sign) {
    const auto& tr = ctx.trajectory();
    const BandStructure& band = ctx.band();
    const auto tx = frame_thetas(tr, sign == WeylSign::plus ? x : -x, sign);
    const auto ty = frame_thetas(tr, sign == WeylSign::plus ? y : -y, sign);
    const auto trr = frame_thetas(tr, sign == WeylSign::plus ? r : -r, sign);
    const auto ts = frame_thetas(tr, sign == WeylSign::plus ? s : -s, sign);
    double d = 0.0;
    for (int k = 0; k < band.edge_count(); ++k)
        d += edge_factor_from_thetas(band, k, tx) * edge_factor_from_thetas(band, k, ty) *
             edge_factor_from_thetas(band, k, trr) * edge_factor_from_thetas(band, k, ts) * edge_weight(band, k);
    return 0.25 * d;
}

double residue_modulus(const WeylContext& ctx, int k, double x, double y, double r, double s) {
    const double e = ctx.band().edges()[k];
    double prod = 1.0;
    for (double at : {x, y, r, s}) prod *= std::abs(eval_G(ctx, SpectralPoint::at(e), at).real());
    return std::sqrt(prod) * edge_weight(ctx.band(), k);
}

cplx edge_exponential_limit_raw(const WeylContext& ctx, int k, double x, double y, double r, double s) {
    const BandStructure& band = ctx.band();
    const auto e = band.edges();
    const double E = e[k];
    // approach from inside the adjacent band: above E0 and E_{2m}, below E_{2m-1}
    const double dir = (k % 2 == 0) ? 1.0 : -1.0;
    double width = 1.0;
    if (k % 2 == 1) width = E - e[k - 1];
    else if (k + 1 < band.edge_count()) width = e[k + 1] - E;
    std::vector<double> t;
    std::vector<cplx> v;
    for (double delta_rel : {1e-3, 1e-4, 1e-5, 1e-6}) {
        const double delta = delta_rel * width;
        const SpectralPoint p = SpectralPoint::upper(E + dir * delta);
        const cplx root = eval_sqrtY(band, p);
        const cplx I = inverse_G_integral(ctx, p.z, x) - inverse_G_integral(ctx, p.z, y) +
                       inverse_G_integral(ctx, p.z, r) - inverse_G_integral(ctx, p.z, s);
        t.push_back(std::sqrt(delta));
        v.push_back(root * I);
    }
    return std::exp(extrapolate_to_zero(t, v));
}

cplx edge_exponential_limit(const WeylContext& ctx, int k, double x, double y, double r, double s) {
    const cplx raw = edge_exponential_limit_raw(ctx, k, x, y, r, s);
    const std::array<cplx, 4> units{cplx(1, 0), cplx(-1, 0), cplx(0, 1), cplx(0, -1)};
    cplx best = units[0];
    for (const cplx& u : units)
        if (std::abs(raw - u) < std::abs(raw - best)) best = u;
    if (std::abs(raw - best) > 0.1)
        fail(ErrorCode::extrapolation_failure, "edge limit " + std::to_string(raw.real()) + "+" +
                                                   std::to_string(raw.imag()) + "i is not near a unit root");
    return best;
}

double residue_constant_C1(const BandStructure& band) {
    const int n = band.gap_count();
    const auto e = band.edges();
    double beta = std::numeric_limits<double>::infinity();
    for (int k = 1; k < band.edge_count(); ++k) {
        const int owner = (k + 1) / 2;
        for (int j = 1; j <= n; ++j) {
            if (j == owner) continue;
            beta = std::min({beta, std::abs(e[k] - band.gap_lower(j)), std::abs(e[k] - band.gap_upper(j))});
        }
    }
    if (!std::isfinite(beta)) return 1.0;
    double widths = 0.0;
    for (int j = 1; j <= n; ++j) widths += band.gap_upper(j) - band.gap_lower(j);
    return std::exp(widths / beta);
}

double residue_bound(const BandStructure& band, int k) {
    const auto e = band.edges();
    if (k == 0) {
        double b = 1.0;
        for (int j = 1; j <= band.gap_count(); ++j) b *= (band.gap_upper(j) - e[0]) / (band.gap_lower(j) - e[0]);
        return b;
    }
    const int l = (k + 1) / 2;
    return residue_constant_C1(band) * (band.gap_upper(l) - band.gap_lower(l)) / (e[k] - e[0]);
}

double D_bound(const BandStructure& band) {
    double s = 0.0;
    for (int k = 0; k < band.edge_count(); ++k) s += residue_bound(band, k);
    return 0.25 * s;
}

bool first_domain_raw(double x, double y, double s) { return s > x && sgn(x - s) == -sgn(2 * y - x - s); }
bool first_domain_solved(double x, double y, double s) { return s > x && y > 0.5 * (x + s); }
bool second_domain_raw(double x, double y, double t, double s) {
    return s > x && t > y && y > x && sgn(x - y + t - s) == -sgn(y - x + t - s);
}
bool second_domain_solved(double x, double y, double t, double s) {
    return s > x && t > y && y > x && t > s + x - y && t < s + y - x;
}

// ---------------------------------------------------------------------------
// kernel grid

KernelGrid::KernelGrid(WeylSign sign, double x0, double h, std::size_t n, std::vector<double> values)
    : sign_(sign), x0_(x0), h_(h), n_(n), values_(std::move(values)) {}

double KernelGrid::frame_K(double x, double y) const {
    const double slack = 1e-12 * std::max(1.0, std::abs(x));
    if (y < x - slack) return 0.0;
    if (x < x0_ - slack) fail(ErrorCode::out_of_range, "kernel requested left of the grid anchor");
    const double u = 0.5 * (x + y), v = std::max(0.0, 0.5 * (y - x));
    if (u >= x_max()) return 0.0;
    const double fi = (u - x0_) / h_, fj = v / h_;
    const double ri = std::round(fi), rj = std::round(fj);
    auto H = [&](long i, long j) -> double {
        if (i > static_cast<long>(n_)) return 0.0;
        return node(static_cast<std::size_t>(i), static_cast<std::size_t>(j));
    };
    if (std::abs(fi - ri) < 1e-9 && std::abs(fj - rj) < 1e-9) {
        const long i = static_cast<long>(ri), j = std::min(static_cast<long>(rj), i);
        return H(i, j);
    }
    const long ib = static_cast<long>(std::floor(fi)), jb = static_cast<long>(std::floor(fj));
    long i0 = std::max(0L, ib - 1);
    long j0 = std::max(0L, jb - 1);
    if (j0 + 3 > i0 && i0 >= 3) j0 = std::max(0L, i0 - 3);
    if (j0 + 3 <= i0) {
        // 4 x 4 Lagrange stencil inside the triangle
        double wi[4], wj[4];
        for (int a = 0; a < 4; ++a) {
            wi[a] = wj[a] = 1.0;
            for (int b = 0; b < 4; ++b) {
                if (b == a) continue;
                wi[a] *= (fi - (i0 + b)) / static_cast<double>(a - b);
                wj[a] *= (fj - (j0 + b)) / static_cast<double>(a - b);
            }
        }
        double v_out = 0.0;
        for (int a = 0; a < 4; ++a)
            for (int b = 0; b < 4; ++b) v_out += wi[a] * wj[b] * H(i0 + a, j0 + b);
        return v_out;
    }
    // corner of the triangle: linear interpolation on the cell triangle
    const double a = fi - ib, b = std::min(fj - jb, a);
    const long i = ib, j = std::min(jb, ib);
    return H(i, j) + a * (H(i + 1, j) - H(i, j)) + b * (H(i + 1, j + 1) - H(i + 1, j));
}

double KernelGrid::K(double x, double y) const {
    return sign_ == WeylSign::plus ? frame_K(x, y) : frame_K(-x, -y);
}

KernelGrid solve_kernel(const WeylContext& ctx, const PerturbationProfile& q_in, WeylSign sign,
                        const KernelGridParams& params, double tol, int max_iter) {
    if (!(params.h > 0.0)) fail(ErrorCode::out_of_range, "kernel grid step must be positive");
    const PerturbationProfile q = sign == WeylSign::plus ? q_in : q_in.mirrored();
    const double moment = moment_check(q, q.support_lo(), q.support_hi());
    if (!std::isfinite(moment)) fail(ErrorCode::moment_violation, "moment integral is not finite");

    const double h = params.h, x0 = params.x0;
    double U = std::isfinite(params.x_max_override)
                   ? x0 + std::ceil((params.x_max_override - x0) / h - 1e-9) * h
                   : kernel_truncation(q, x0, h, params.tail_eps);
    U = std::max(U, x0);
    const auto n = static_cast<std::size_t>(std::lround((U - x0) / h));
    const std::size_t rows = n + 1;
    std::vector<double> H(rows * (rows + 1) / 2, 0.0);

    const auto& tr = ctx.trajectory();
    const BandStructure& band = ctx.band();
    const int edges = band.edge_count();
    const double t_hi = x0 + 2.0 * n * h;
    auto covered = [&](double t) { return tr.contains(sign == WeylSign::plus ? t : -t); };
    if (!covered(x0) || !covered(t_hi))
        fail(ErrorCode::out_of_range, "trajectory must cover [" + std::to_string(x0) + ", " + std::to_string(t_hi) +
                                          "] in the kernel frame");

    // q and edge factors on t_m = x0 + m h
    std::vector<double> qt(rows);
    for (std::size_t m = 0; m < rows; ++m) qt[m] = q(x0 + m * h);
    std::vector<std::vector<double>> g(edges, std::vector<double>(2 * n + 1));
    std::vector<double> w(edges);
    for (std::size_t m = 0; m <= 2 * n; ++m) {
        const std::vector<double> th = frame_thetas(tr, x0 + m * h, sign);
        for (int k = 0; k < edges; ++k) g[k][m] = edge_factor_from_thetas(band, k, th);
    }
    double C = 0.0;
    for (int k = 0; k < edges; ++k) {
        w[k] = edge_weight(band, k);
        double gmax = 0.0;
        for (double v : g[k]) gmax = std::max(gmax, std::abs(v));
        C += std::abs(w[k]) * std::pow(gmax, 4);
    }
    C *= 0.25;

    // A_E(u_i) = int_{u_i}^U q g_E^2 (trapezoid)
    std::vector<std::vector<double>> A(edges, std::vector<double>(rows, 0.0));
    for (int k = 0; k < edges; ++k)
        for (std::size_t i = n; i-- > 0;)
            A[k][i] = A[k][i + 1] + 0.5 * h * (qt[i] * g[k][i] * g[k][i] + qt[i + 1] * g[k][i + 1] * g[k][i + 1]);

    auto idx = [](std::size_t i, std::size_t j) { return i * (i + 1) / 2 + j; };
    std::vector<double> Hn(H.size()), P(H.size()), B(H.size());
    KernelGrid grid(sign, x0, h, n, {});
    for (int it = 1; it <= max_iter; ++it) {
        std::fill(Hn.begin(), Hn.end(), 0.0);
        for (int k = 0; k < edges; ++k) {
            const auto& gk = g[k];
            // P(i, j) = int_0^{v_j} q(a - b) g(a - b) g(a + b) H(a, b) db at a = u_i
            detail::parallel_for(rows, [&](std::size_t i) {
                double prev = qt[i] * gk[i] * gk[i] * H[idx(i, 0)];
                P[idx(i, 0)] = 0.0;
                for (std::size_t j = 1; j <= i; ++j) {
                    const double f = qt[i - j] * gk[i - j] * gk[i + j] * H[idx(i, j)];
                    P[idx(i, j)] = P[idx(i, j - 1)] + 0.5 * h * (prev + f);
                    prev = f;
                }
            });
            // B(i, j) = int_{u_i}^U P(a, j) da
            detail::parallel_for(rows, [&](std::size_t j) {
                B[idx(n, j)] = 0.0;
                for (std::size_t i = n; i-- > j;) B[idx(i, j)] = B[idx(i + 1, j)] + 0.5 * h * (P[idx(i, j)] + P[idx(i + 1, j)]);
            });
            detail::parallel_for(rows, [&](std::size_t i) {
                for (std::size_t j = 0; j <= i; ++j)
                    Hn[idx(i, j)] += -0.5 * w[k] * gk[i - j] * gk[i + j] * (A[k][i] + 2.0 * B[idx(i, j)]);
            });
        }
        double delta = 0.0;
        for (std::size_t m = 0; m < H.size(); ++m) delta = std::max(delta, std::abs(Hn[m] - H[m]));
        H.swap(Hn);
        grid.deltas.push_back(delta);
        grid.iterations = it;
        grid.final_delta = delta;
        if (delta < tol) {
            KernelGrid out(sign, x0, h, n, std::move(H));
            out.iterations = grid.iterations;
            out.final_delta = grid.final_delta;
            out.deltas = std::move(grid.deltas);
            out.C_const = C;
            return out;
        }
    }
    std::string msg = "kernel iteration did not contract below " + detail::fmt17(tol) + "; deltas:";
    for (double d : grid.deltas) msg += " " + detail::fmt17(d);
    fail(ErrorCode::no_convergence, msg);
}

void write_kernel_csv(std::ostream& os, const KernelGrid& grid) {
    using detail::fmt17;
    os << "x,y,K\n";
    const std::size_t n = grid.n();
    const double s = grid.sign() == WeylSign::plus ? 1.0 : -1.0;
    for (std::size_t m = 0; m <= n; ++m)
        for (std::size_t j = 0; m + j <= n; ++j) {
            const double x = grid.x0() + static_cast<double>(m) * grid.h();
            const double y = x + 2.0 * static_cast<double>(j) * grid.h();
            os << fmt17(s * x) << ',' << fmt17(s * y) << ',' << fmt17(grid.node(m + j, j)) << '\n';
        }
}

void write_kernel_meta_json(std::ostream& os, const KernelGrid& grid) {
    using detail::fmt17;
    os << "{\"iterations\": " << grid.iterations << ", \"final_delta\": " << fmt17(grid.final_delta)
       << ", \"h\": " << fmt17(grid.h()) << ", \"X_max\": " << fmt17(grid.x_max())
       << ", \"C_const\": " << fmt17(grid.C_const) << "}\n";
}

// ---------------------------------------------------------------------------
// bounds

KernelBoundReport kernel_bound_check(const WeylContext& ctx, const KernelGrid& grid, const PerturbationProfile& q_in) {
    (void)ctx;
    const PerturbationProfile q = grid.sign() == WeylSign::plus ? q_in : q_in.mirrored();
    KernelBoundReport rep;
    rep.C_const = grid.C_const;
    const double C = grid.C_const, h = grid.h();
    const std::size_t n = grid.n();
    // Q and the first moment int_x^inf (2s - 2x)|q| use the solver's trapezoid rule on the
    // grid plus the exact remainder beyond x_max, so the bound is discretized like K itself.
    std::vector<double> aq(n + 1);
    for (std::size_t m = 0; m <= n; ++m) aq[m] = std::abs(q(grid.x0() + m * h));
    std::vector<double> moment(n + 1), tail(n + 1);
    const double rest = q.tail_abs(grid.x_max());
    double t_acc = 0.0, s_acc = 0.0; // int |q| and int s|q| from x_m to x_max
    for (std::size_t m = n + 1; m-- > 0;) {
        if (m < n) {
            const double a = grid.x0() + m * h, b = a + h;
            t_acc += 0.5 * h * (aq[m] + aq[m + 1]);
            s_acc += 0.5 * h * (a * aq[m] + b * aq[m + 1]);
        }
        const double x = grid.x0() + m * h;
        tail[m] = t_acc + rest;
        moment[m] = 2.0 * (s_acc - x * t_acc);
    }
    for (std::size_t m = 0; m <= n; ++m) {
        rep.x.push_back(grid.x0() + m * h);
        rep.C_of_x.push_back(2.0 * C * std::exp(4.0 * C * moment[m]));
        rep.Q_plus.push_back(tail[m]);
        if (m > 0 && rep.C_of_x[m] > rep.C_of_x[m - 1] * (1.0 + 1e-14)) rep.C_monotone = false;
    }
    auto H = [&](std::size_t i, std::size_t j) { return i > n ? 0.0 : grid.node(i, j); };
    // K is resolved only to the last sweep change
    const double res = grid.final_delta;
    for (std::size_t i = 0; i <= n; ++i)
        for (std::size_t j = 0; j <= i; ++j) {
            const std::size_t m = i - j; // x = x0 + m h
            const double k = std::abs(H(i, j));
            const double bound = rep.C_of_x[m] * tail[i];
            ++rep.checked;
            if (bound > 0.0) rep.max_ratio = std::max(rep.max_ratio, k / bound);
            if (k > bound * (1.0 + 1e-12) + res) {
                if (rep.violations.size() < 20)
                    rep.violations.push_back("|K| = " + detail::fmt17(k) + " > " + detail::fmt17(bound) + " at x = " +
                                              detail::fmt17(grid.x0() + m * h) +
                                              ", y = " + detail::fmt17(grid.x0() + (i + j) * h));
                else if (rep.violations.size() == 20)
                    rep.violations.push_back("...");
            }
            // derivative estimate by centered differences in (u, v)
            if (i >= 1 && i + 1 <= n && j >= 1 && j + 1 <= i - 1) {
                const double hu = (H(i + 1, j) - H(i - 1, j)) / (2.0 * h);
                const double hv = (H(i, j + 1) - H(i, j - 1)) / (2.0 * h);
                const double rhs = rep.C_of_x[m] * (std::abs(q(grid.x0() + i * h)) + tail[i]);
                if (rhs > 0.0) rep.fitted_C1 = std::max(rep.fitted_C1, (std::abs(hu) + std::abs(hv)) / rhs);
            }
        }
    // row L2 norms: int_x^inf K(x,y)^2 dy <= C(x)^2 Q(2x) int_x^inf (2s - 2x)|q|
    for (std::size_t m = 0; m <= n; ++m) {
        double l2 = 0.0;
        for (std::size_t j = 0; m + j <= n; ++j) {
            const double kv = H(m + j, j);
            const double wgt = (j == 0 || m + j == n) ? 0.5 : 1.0;
            l2 += wgt * kv * kv * 2.0 * h;
        }
        const double bound = rep.C_of_x[m] * rep.C_of_x[m] * tail[m] * moment[m];
        if (bound > 0.0) rep.l2_max_ratio = std::max(rep.l2_max_ratio, l2 / bound);
        const double len = 2.0 * h * static_cast<double>(n - m);
        if (l2 > bound * (1.0 + 1e-12) + len * res * res)
            rep.violations.push_back("row L2 norm " + detail::fmt17(l2) + " exceeds " + detail::fmt17(bound) +
                                     " at x = " + detail::fmt17(grid.x0() + m * h));
    }
    return rep;
}

// ---------------------------------------------------------------------------
// Jost solutions

cplx jost_from_kernel(const WeylSolutionTable& table, const KernelGrid& grid, double x) {
    const bool plus = grid.sign() == WeylSign::plus;
    auto psi_f = [&](double t) { return plus ? table.psi(t, WeylSign::plus) : table.psi(-t, WeylSign::minus); };
    const double xf = plus ? x : -x;
    const double h = grid.h(), U = grid.x_max();
    const cplx base = psi_f(xf);
    if (xf >= U) return base;
    const double fm = (xf - grid.x0()) / h;
    const double rm = std::round(fm);
    cplx acc = 0.0;
    if (std::abs(fm - rm) < 1e-9 && rm >= 0.0) {
        const auto m = static_cast<std::size_t>(rm);
        const std::size_t n = grid.n();
        for (std::size_t j = 0; m + j <= n; ++j) {
            const double wgt = (j == 0 || m + j == n) ? 0.5 : 1.0;
            acc += wgt * grid.node(m + j, j) * psi_f(xf + 2.0 * j * h);
        }
        return base + 2.0 * h * acc;
    }
    if (xf < grid.x0()) fail(ErrorCode::out_of_range, "Jost evaluation left of the kernel grid");
    const double end = 2.0 * U - xf;
    const auto steps = static_cast<std::size_t>(std::ceil((end - xf) / h));
    const double dt = (end - xf) / steps;
    for (std::size_t j = 0; j <= steps; ++j) {
        const double t = xf + j * dt;
        const double wgt = (j == 0 || j == steps) ? 0.5 : 1.0;
        acc += wgt * grid.frame_K(xf, t) * psi_f(t);
    }
    return base + dt * acc;
}

cplx jost_from_kernel(const WeylContext& ctx, const KernelGrid& grid, const SpectralPoint& p, double x,
                      WeylSign sign) {
    if (sign != grid.sign()) fail(ErrorCode::invalid_config, "kernel grid solved for the other side");
    WeylSolutionTable table(ctx, p);
    return jost_from_kernel(table, grid, x);
}

cplx JostDirectSolution::at(double x) const {
    const double t = sign == WeylSign::plus ? x : -x;
    if (t < x_lo - 1e-12) fail(ErrorCode::out_of_range, "Jost value requested left of the solved grid");
    const double f = (t - x_lo) / h;
    if (f >= static_cast<double>(phi.size() - 1)) {
        if (f <= static_cast<double>(phi.size() - 1) + 1e-9) return phi.back();
        if (!background) fail(ErrorCode::out_of_range, "Jost value requested right of the solved grid");
        return background(t);
    }
    const auto i = static_cast<std::size_t>(std::max(0.0, std::floor(f)));
    const double a = f - static_cast<double>(i);
    if (a < 1e-9) return phi[i];
    return (1.0 - a) * phi[i] + a * phi[i + 1];
}

JostDirectSolution jost_direct_solve(const WeylSolutionTable& table, const PerturbationProfile& q_in, WeylSign sign,
                                     double frame_lo, double h, double tol, int max_iter) {
    const bool plus = sign == WeylSign::plus;
    const PerturbationProfile q = plus ? q_in : q_in.mirrored();
    const double U = std::max(kernel_truncation(q, frame_lo, h), frame_lo);
    const auto n = static_cast<std::size_t>(std::lround((U - frame_lo) / h));
    JostDirectSolution sol;
    sol.x_lo = frame_lo;
    sol.h = h;
    sol.sign = sign;
    // frame solutions: decaying psi_f+ and growing psi_f-
    std::vector<cplx> pp(n + 1), pm(n + 1);
    std::vector<double> qt(n + 1);
    for (std::size_t i = 0; i <= n; ++i) {
        const double t = frame_lo + i * h;
        pp[i] = plus ? table.psi(t, WeylSign::plus) : table.psi(-t, WeylSign::minus);
        pm[i] = plus ? table.psi(t, WeylSign::minus) : table.psi(-t, WeylSign::plus);
        qt[i] = q(t);
    }
    sol.phi = pp;
    sol.background = [table, plus](double t) {
        return plus ? table.psi(t, WeylSign::plus) : table.psi(-t, WeylSign::minus);
    };
    if (n == 0) {
        // nothing to integrate: one trivial sweep
        sol.deltas.push_back(0.0);
        return sol;
    }
    const cplx green = table.green();
    std::vector<cplx> next(n + 1);
    for (int it = 1; it <= max_iter; ++it) {
        cplx sp = 0.0, sm = 0.0; // int_{t_i}^U psi_f+- q phi
        double delta = 0.0;
        next[n] = pp[n];
        for (std::size_t i = n; i-- > 0;) {
            sp += 0.5 * h * (pp[i] * qt[i] * sol.phi[i] + pp[i + 1] * qt[i + 1] * sol.phi[i + 1]);
            sm += 0.5 * h * (pm[i] * qt[i] * sol.phi[i] + pm[i + 1] * qt[i + 1] * sol.phi[i + 1]);
            next[i] = pp[i] - green * (pm[i] * sp - pp[i] * sm);
        }
        for (std::size_t i = 0; i <= n; ++i)
            delta = std::max(delta, std::abs(next[i] - sol.phi[i]) / std::max(std::abs(pp[i]), 1e-300));
        sol.phi.swap(next);
        sol.deltas.push_back(delta);
        if (delta < tol) return sol;
    }
    fail(ErrorCode::no_convergence, "Jost successive approximation did not converge");
}

cplx jost_direct(const WeylContext& ctx, const PerturbationProfile& q, const SpectralPoint& p, double x,
                 WeylSign sign) {
    WeylSolutionTable table(ctx, p);
    const double t = sign == WeylSign::plus ? x : -x;
    return jost_direct_solve(table, q, sign, t).at(x);
}

double schrodinger_residual(const WeylContext& ctx, const PerturbationProfile& q,
                            const std::function<cplx(double)>& phi, const SpectralPoint& p,
                            const std::vector<double>& xs, double h) {
    double sup = 0.0;
    for (double x : xs) {
        const cplx f0 = phi(x);
        const cplx d2 = (phi(x + h) - 2.0 * f0 + phi(x - h)) / (h * h);
        const double pot = potential_at(ctx.trajectory(), x) + q(x);
        sup = std::max(sup, std::abs(-d2 + (pot - p.z) * f0));
    }
    return sup;
}

} // namespace levitan
