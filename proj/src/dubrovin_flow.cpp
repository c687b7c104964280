#include "levitan/dubrovin_flow.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <ostream>
#include <string>

#include <boost/numeric/odeint.hpp>

#include "levitan/detail/format.hpp"
#include "levitan/error.hpp"

namespace levitan {

namespace odeint = boost::numeric::odeint;
using State = std::vector<double>;

namespace {

constexpr double pi = std::numbers::pi;

// theta' = direction * 2 S(mu(theta)); direction = -1 integrates towards -x.
struct AngleSystem {
    const BandStructure* band;
    double direction;
    void operator()(const State& th, State& dth, double /*x*/) const {
        dubrovin_angle_rhs(*band, th, dth);
        for (double& d : dth) d *= direction;
    }
};

} // namespace

DirichletDivisor::DirichletDivisor(const BandStructure& band, std::vector<DivisorPoint> entries)
    : entries_(std::move(entries)) {
    if (static_cast<int>(entries_.size()) != band.gap_count())
        fail(ErrorCode::invalid_divisor, "divisor needs one point per gap: expected " +
                                             std::to_string(band.gap_count()) + ", got " +
                                             std::to_string(entries_.size()));
    for (int j = 1; j <= band.gap_count(); ++j) {
        const auto& d = entries_[j - 1];
        if (!(d.mu >= band.gap_lower(j) && d.mu <= band.gap_upper(j)))
            fail(ErrorCode::invalid_divisor, "mu_" + std::to_string(j) + " outside its closed gap");
        if (d.sigma != 1 && d.sigma != -1)
            fail(ErrorCode::invalid_divisor, "sigma_" + std::to_string(j) + " must be +1 or -1");
    }
}

double mu_from_theta(const BandStructure& band, int j, double theta) {
    const double mu = band.gap_center(j) - band.gap_half_width(j) * std::cos(theta);
    return std::clamp(mu, band.gap_lower(j), band.gap_upper(j));
}

int sigma_from_theta(double theta) {
    double t = std::fmod(theta, 2.0 * pi);
    if (t < 0.0) t += 2.0 * pi;
    return t < pi ? 1 : -1;
}

double theta_from_divisor(const BandStructure& band, int j, double mu, int sigma) {
    const double a = std::clamp((band.gap_center(j) - mu) / band.gap_half_width(j), -1.0, 1.0);
    const double th = std::acos(a);
    return (sigma > 0 || th == 0.0) ? th : 2.0 * pi - th;
}

void dubrovin_angle_rhs(const BandStructure& band, std::span<const double> theta, std::span<double> dtheta) {
    const int n = band.gap_count();
    const double e0 = band.ground();
    double mus[64];
    std::vector<double> heap;
    double* mu = mus;
    if (n > 64) {
        heap.resize(n);
        mu = heap.data();
    }
    for (int j = 1; j <= n; ++j) mu[j - 1] = mu_from_theta(band, j, theta[j - 1]);
    for (int j = 1; j <= n; ++j) {
        const double m = mu[j - 1];
        double s = std::sqrt(m - e0);
        for (int k = 1; k <= n; ++k) {
            if (k == j) continue;
            s *= std::sqrt((m - band.gap_lower(k)) * (m - band.gap_upper(k))) / std::abs(m - mu[k - 1]);
        }
        dtheta[j - 1] = 2.0 * s;
    }
}

double dubrovin_mu_rhs(const BandStructure& band, int j, std::span<const double> mus, int sigma_j) {
    const double m = mus[j - 1];
    cplx v = -2.0 * sigma_j * root_upper(-(m - band.ground())) * root_upper(m - band.gap_lower(j)) *
             root_upper(m - band.gap_upper(j));
    for (int k = 1; k <= band.gap_count(); ++k) {
        if (k == j) continue;
        v *= root_upper(m - band.gap_lower(k)) * root_upper(m - band.gap_upper(k)) / (m - mus[k - 1]);
    }
    return v.real();
}

// ---------------------------------------------------------------------------

DivisorTrajectory::DivisorTrajectory(BandStructure band, DirichletDivisor initial, long first_index, double step,
                                     std::vector<double> theta, std::vector<double> dtheta, double tol)
    : band_(std::move(band)), initial_(std::move(initial)), first_index_(first_index), step_(step),
      gaps_(band_.gap_count()), theta_(std::move(theta)), dtheta_(std::move(dtheta)), tol_(tol) {
    size_ = gaps_ > 0 ? theta_.size() / gaps_ : 0;
    if (gaps_ == 0) size_ = static_cast<std::size_t>(dtheta_.size()); // N = 0 stores the node count here
}

bool DivisorTrajectory::contains(double x) const {
    const double slack = 1e-12 * std::max(1.0, std::abs(x));
    return x >= x_min() - slack && x <= x_max() + slack;
}

std::size_t DivisorTrajectory::locate(double x) const {
    if (!contains(x))
        fail(ErrorCode::out_of_range, "x = " + std::to_string(x) + " outside trajectory [" +
                                          std::to_string(x_min()) + ", " + std::to_string(x_max()) + "]");
    if (size_ < 2) return 0;
    const double t = (x - x_min()) / step_;
    auto i = static_cast<long>(std::floor(t));
    return static_cast<std::size_t>(std::clamp<long>(i, 0, static_cast<long>(size_) - 2));
}

void DivisorTrajectory::thetas(double x, std::span<double> out) const {
    if (gaps_ == 0) {
        locate(x);
        return;
    }
    const std::size_t i = locate(x);
    if (size_ < 2) {
        for (int j = 0; j < gaps_; ++j) out[j] = theta_[j];
        return;
    }
    const double h = step_;
    const double t = (x - x_at(i)) / h;
    const double t2 = t * t, t3 = t2 * t;
    const double h00 = 2 * t3 - 3 * t2 + 1, h10 = t3 - 2 * t2 + t, h01 = -2 * t3 + 3 * t2, h11 = t3 - t2;
    const double* a = &theta_[i * gaps_];
    const double* b = &theta_[(i + 1) * gaps_];
    const double* da = &dtheta_[i * gaps_];
    const double* db = &dtheta_[(i + 1) * gaps_];
    for (int j = 0; j < gaps_; ++j) out[j] = h00 * a[j] + h10 * h * da[j] + h01 * b[j] + h11 * h * db[j];
}

std::vector<double> DivisorTrajectory::thetas(double x) const {
    std::vector<double> out(gaps_);
    thetas(x, out);
    return out;
}

std::vector<double> DivisorTrajectory::precise_thetas(double x) const {
    locate(x);
    std::vector<double> state(gaps_);
    if (gaps_ == 0) return state;
    const double t = (x - x_min()) / step_;
    const auto i = static_cast<std::size_t>(std::clamp<long>(std::lround(t), 0, static_cast<long>(size_) - 1));
    for (int j = 0; j < gaps_; ++j) state[j] = theta_[i * gaps_ + j];
    const double x0 = x_at(i);
    if (x == x0) return state;
    const double dir = x > x0 ? 1.0 : -1.0;
    const double dist = std::abs(x - x0);
    const double local_tol = std::min(tol_, 1e-13);
    odeint::integrate_adaptive(odeint::make_controlled(local_tol, local_tol, odeint::runge_kutta_dopri5<State>()),
                               AngleSystem{&band_, dir}, state, 0.0, dist, dist / 4.0);
    return state;
}

double DivisorTrajectory::theta(int j, double x) const { return thetas(x)[j - 1]; }

double DivisorTrajectory::mu(int j, double x) const { return mu_from_theta(band_, j, theta(j, x)); }

int DivisorTrajectory::sigma(int j, double x) const { return sigma_from_theta(theta(j, x)); }

std::vector<double> DivisorTrajectory::mus(double x) const {
    std::vector<double> th = thetas(x);
    for (int j = 1; j <= gaps_; ++j) th[j - 1] = mu_from_theta(band_, j, th[j - 1]);
    return th;
}

std::vector<double> DivisorTrajectory::dmus(double x) const {
    const std::vector<double> th = thetas(x);
    std::vector<double> d(gaps_);
    dubrovin_angle_rhs(band_, th, d);
    for (int j = 1; j <= gaps_; ++j) d[j - 1] *= band_.gap_half_width(j) * std::sin(th[j - 1]);
    return d;
}

std::vector<double> DivisorTrajectory::edge_touch_points(int k, double a, double b) const {
    std::vector<double> pts;
    if (k < 1 || k > 2 * gaps_ || a >= b) return pts;
    const int j = (k + 1) / 2;
    const double offset = (k % 2 == 1) ? 0.0 : pi; // lower edge at 2m pi, upper at (2m+1) pi
    const double ta = theta(j, a), tb = theta(j, b);
    // theta is increasing: touch values offset + 2 m pi strictly inside (ta, tb)
    const double m_lo = std::floor((ta - offset) / (2.0 * pi)) + 1.0;
    for (double m = m_lo;; m += 1.0) {
        const double target = offset + 2.0 * pi * m;
        if (target >= tb) break;
        if (target <= ta) continue;
        double lo = a, hi = b;
        for (int it = 0; it < 200 && hi - lo > 1e-15 * std::max(1.0, std::abs(lo)); ++it) {
            const double mid = 0.5 * (lo + hi);
            (theta(j, mid) < target ? lo : hi) = mid;
        }
        pts.push_back(0.5 * (lo + hi));
    }
    return pts;
}

std::vector<double> DivisorTrajectory::flip_points(int j, double a, double b) const {
    auto lo = edge_touch_points(2 * j - 1, a, b);
    auto hi = edge_touch_points(2 * j, a, b);
    lo.insert(lo.end(), hi.begin(), hi.end());
    std::sort(lo.begin(), lo.end());
    return lo;
}

DivisorTrajectory DivisorTrajectory::mirrored() const {
    std::vector<double> th(theta_.size()), dth(dtheta_.size());
    for (std::size_t i = 0; i < size_ && gaps_ > 0; ++i)
        for (int j = 0; j < gaps_; ++j) {
            th[i * gaps_ + j] = -theta_[(size_ - 1 - i) * gaps_ + j];
            dth[i * gaps_ + j] = dtheta_[(size_ - 1 - i) * gaps_ + j];
        }
    std::vector<DivisorPoint> pts;
    const std::vector<double> th0 = thetas(0.0);
    for (int j = 1; j <= gaps_; ++j)
        pts.push_back({mu_from_theta(band_, j, th0[j - 1]), sigma_from_theta(-th0[j - 1])});
    return DivisorTrajectory(band_, DirichletDivisor(band_, std::move(pts)),
                             -(first_index_ + static_cast<long>(size_) - 1), step_, std::move(th), std::move(dth),
                             tol_);
}

DivisorTrajectory integrate_dubrovin(const BandStructure& band, const DirichletDivisor& divisor, double x_min,
                                     double x_max, double step, double tol) {
    if (!(step > 0.0)) fail(ErrorCode::out_of_range, "flow step must be positive");
    if (!(tol > 0.0)) fail(ErrorCode::out_of_range, "flow tolerance must be positive");
    if (!(x_min <= 0.0 && x_max >= 0.0)) fail(ErrorCode::out_of_range, "flow range must contain x = 0");
    const int n = band.gap_count();
    for (int j = 1; j <= n; ++j)
        if (band.gap_half_width(j) <= 1e-14 * std::max(1.0, std::abs(band.gap_center(j))))
            fail(ErrorCode::degenerate_gap, "gap " + std::to_string(j) + " collapsed numerically");

    const long k_lo = -static_cast<long>(std::ceil(-x_min / step - 1e-9));
    const long k_hi = static_cast<long>(std::ceil(x_max / step - 1e-9));
    const std::size_t count = static_cast<std::size_t>(k_hi - k_lo + 1);
    const std::size_t origin = static_cast<std::size_t>(-k_lo);

    std::vector<double> theta(count * n), dtheta(count * n);
    if (n == 0) {
        // Nothing moves; keep the node count in dtheta's size.
        return DivisorTrajectory(band, divisor, k_lo, step, {}, std::vector<double>(count, 0.0), tol);
    }

    State th0(n);
    for (int j = 1; j <= n; ++j)
        th0[j - 1] = theta_from_divisor(band, j, divisor.entries()[j - 1].mu, divisor.entries()[j - 1].sigma);

    auto run = [&](double direction, std::size_t nodes, auto node_index) {
        std::vector<double> times(nodes);
        for (std::size_t m = 0; m < nodes; ++m) times[m] = static_cast<double>(m) * step;
        State state = th0;
        auto observer = [&](const State& s, double t) {
            const auto m = static_cast<std::size_t>(std::lround(t / step));
            const std::size_t i = node_index(m);
            for (int j = 0; j < n; ++j) theta[i * n + j] = s[j];
        };
        if (nodes == 1) {
            observer(state, 0.0);
            return;
        }
        // absolute tolerance only: theta grows without bound, a relative one would loosen with x
        odeint::integrate_times(odeint::make_dense_output(tol, 0.0, odeint::runge_kutta_dopri5<State>()),
                                AngleSystem{&band, direction}, state, times.begin(), times.end(), step / 2.0,
                                observer);
    };
    run(1.0, count - origin, [&](std::size_t m) { return origin + m; });
    run(-1.0, origin + 1, [&](std::size_t m) { return origin - m; });

    for (std::size_t i = 0; i < count; ++i)
        dubrovin_angle_rhs(band, std::span<const double>(&theta[i * n], n), std::span<double>(&dtheta[i * n], n));
    for (std::size_t i = 0; i + 1 < count; ++i)
        for (int j = 0; j < n; ++j)
            if (std::abs(theta[(i + 1) * n + j] - theta[i * n + j]) > pi / 2.0)
                fail(ErrorCode::step_too_large, "angle of gap " + std::to_string(j + 1) +
                                                    " advances more than pi/2 per step; reduce the step");

    return DivisorTrajectory(band, divisor, k_lo, step, std::move(theta), std::move(dtheta), tol);
}

// ---------------------------------------------------------------------------

double potential_from_mus(const BandStructure& band, std::span<const double> mus) {
    double p = band.ground();
    for (int j = 1; j <= band.gap_count(); ++j) p += band.gap_lower(j) + band.gap_upper(j) - 2.0 * mus[j - 1];
    return p;
}

double potential_at(const DivisorTrajectory& trajectory, double x) {
    return potential_from_mus(trajectory.band(), trajectory.mus(x));
}

PotentialSamples trace_potential(const BandStructure& band, const DivisorTrajectory& trajectory) {
    PotentialSamples out;
    out.trace_constant = band.ground();
    out.lower_bound = out.upper_bound = band.ground();
    for (int j = 1; j <= band.gap_count(); ++j) {
        out.trace_constant += band.gap_lower(j) + band.gap_upper(j);
        out.lower_bound += band.gap_lower(j) - band.gap_upper(j);
        out.upper_bound += band.gap_upper(j) - band.gap_lower(j);
    }
    const int n = band.gap_count();
    std::vector<double> mus(n);
    out.x.reserve(trajectory.size());
    out.p.reserve(trajectory.size());
    for (std::size_t i = 0; i < trajectory.size(); ++i) {
        for (int j = 1; j <= n; ++j) mus[j - 1] = mu_from_theta(band, j, trajectory.theta_at_node(j, i));
        out.x.push_back(trajectory.x_at(i));
        out.p.push_back(potential_from_mus(band, mus));
    }
    return out;
}

// ---------------------------------------------------------------------------

namespace {

double shift_defect(const std::vector<std::vector<double>>& channels, std::size_t k) {
    double d = 0.0;
    for (const auto& c : channels)
        for (std::size_t i = 0; i + k < c.size(); ++i) d = std::max(d, std::abs(c[i + k] - c[i]));
    return d;
}

double estimate_slowest_period(double step, const std::vector<std::vector<double>>& channels) {
    double slowest = 0.0;
    for (const auto& c : channels) {
        if (c.size() < 2) continue;
        const auto [lo, hi] = std::minmax_element(c.begin(), c.end());
        if (*hi - *lo <= 1e-12 * (1.0 + std::abs(*hi))) continue; // constant channel
        double mean = 0.0;
        for (double v : c) mean += v;
        mean /= static_cast<double>(c.size());
        int crossings = 0;
        for (std::size_t i = 0; i + 1 < c.size(); ++i)
            if ((c[i] - mean) * (c[i + 1] - mean) < 0.0) ++crossings;
        const double length = step * static_cast<double>(c.size() - 1);
        if (crossings < 4)
            fail(ErrorCode::window_too_short, "sampled window covers fewer than two oscillation periods");
        slowest = std::max(slowest, 2.0 * length / crossings);
    }
    return slowest;
}

} // namespace

RecurrenceReport recurrence_diagnostic(double step, const std::vector<std::vector<double>>& channels,
                                       double tolerance) {
    RecurrenceReport report;
    report.slowest_period = estimate_slowest_period(step, channels);
    std::size_t len = 0;
    for (const auto& c : channels) len = std::max(len, c.size());
    for (std::size_t k = 1; k <= len / 2; ++k) {
        const double d = shift_defect(channels, k);
        if (d < tolerance) report.candidates.push_back({static_cast<double>(k) * step, d});
    }
    return report;
}

RecurrenceReport recurrence_diagnostic(const DivisorTrajectory& trajectory, double tolerance) {
    const int n = trajectory.gap_count();
    const std::size_t m = trajectory.size();
    std::vector<std::vector<double>> channels(n, std::vector<double>(m));
    for (int j = 1; j <= n; ++j)
        for (std::size_t i = 0; i < m; ++i)
            channels[j - 1][i] = mu_from_theta(trajectory.band(), j, trajectory.theta_at_node(j, i));
    if (n == 0) return recurrence_diagnostic(trajectory.step(), channels, tolerance);

    RecurrenceReport report;
    report.slowest_period = estimate_slowest_period(trajectory.step(), channels);
    const double h = trajectory.step();

    auto defect_at = [&](double tau) {
        double d = 0.0;
        for (std::size_t i = 0; i < m; ++i) {
            const double x = trajectory.x_at(i);
            if (x + tau > trajectory.x_max()) break;
            const std::vector<double> mu = trajectory.mus(x + tau);
            for (int j = 0; j < n; ++j) d = std::max(d, std::abs(mu[j] - channels[j][i]));
        }
        return d;
    };

    std::vector<double> coarse(m / 2 + 2, 0.0);
    for (std::size_t k = 1; k <= m / 2 + 1 && k < m; ++k) coarse[k] = shift_defect(channels, k);
    for (std::size_t k = 2; k + 1 < coarse.size() && k <= m / 2; ++k) {
        if (!(coarse[k] <= coarse[k - 1] && coarse[k] <= coarse[k + 1])) continue;
        // golden-section refinement of the shift on [k-1, k+1] * h
        double a = (static_cast<double>(k) - 1.0) * h, b = (static_cast<double>(k) + 1.0) * h;
        const double gr = 0.5 * (std::sqrt(5.0) - 1.0);
        double c = b - gr * (b - a), d = a + gr * (b - a);
        double fc = defect_at(c), fd = defect_at(d);
        for (int it = 0; it < 40; ++it) {
            if (fc < fd) {
                b = d;
                d = c;
                fd = fc;
                c = b - gr * (b - a);
                fc = defect_at(c);
            } else {
                a = c;
                c = d;
                fc = fd;
                d = a + gr * (b - a);
                fd = defect_at(d);
            }
        }
        const double tau = 0.5 * (a + b);
        const double defect = std::min({defect_at(tau), coarse[k]});
        if (defect < tolerance) report.candidates.push_back({defect == coarse[k] ? k * h : tau, defect});
    }
    return report;
}

void write_trajectory_csv(std::ostream& os, const DivisorTrajectory& trajectory) {
    using detail::fmt17;
    const int n = trajectory.gap_count();
    const BandStructure& band = trajectory.band();
    os << "x";
    for (int j = 1; j <= n; ++j) os << ",theta_" << j;
    for (int j = 1; j <= n; ++j) os << ",mu_" << j;
    for (int j = 1; j <= n; ++j) os << ",sigma_" << j;
    os << ",p\n";
    std::vector<double> mus(n);
    for (std::size_t i = 0; i < trajectory.size(); ++i) {
        os << fmt17(trajectory.x_at(i));
        for (int j = 1; j <= n; ++j) os << ',' << fmt17(trajectory.theta_at_node(j, i));
        for (int j = 1; j <= n; ++j) {
            mus[j - 1] = mu_from_theta(band, j, trajectory.theta_at_node(j, i));
            os << ',' << fmt17(mus[j - 1]);
        }
        for (int j = 1; j <= n; ++j) os << ',' << sigma_from_theta(trajectory.theta_at_node(j, i));
        os << ',' << fmt17(potential_from_mus(band, mus)) << '\n';
    }
}

} // namespace levitan
