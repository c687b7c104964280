#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>


#include "levitan/error.hpp"
#include "levitan/transform_kernel.hpp"
#include "levitan/detail/quadrature.hpp"

namespace levitan {

namespace {


double poly_eval(const std::vector<double>& params, double x) {
    const double a = params[0], b = params[1];
    if (x <= a || x >= b) return 0.0;
    const double t = (x - a) / (b - a);
    double v = 0.0;
    for (std::size_t k = params.size(); k-- > 2;) v = v * t + params[k];
    return v;
}

// int_lo^hi |f| (or f) for the linear piece through (x0,y0), (x1,y1), clipped to [lo, hi].
double linear_piece(double x0, double y0, double x1, double y1, double lo, double hi, bool absolute) {
    const double a = std::max(x0, lo), b = std::min(x1, hi);
    if (!(b > a)) return 0.0;
    auto at = [&](double x) { return y0 + (y1 - y0) * (x - x0) / (x1 - x0); };
    const double ya = at(a), yb = at(b);
    if (!absolute) return 0.5 * (ya + yb) * (b - a);
    if (ya * yb >= 0.0) return 0.5 * (std::abs(ya) + std::abs(yb)) * (b - a);
    const double root = a + (b - a) * ya / (ya - yb);
    return 0.5 * (std::abs(ya) * (root - a) + std::abs(yb) * (b - root));
}

} // namespace

PerturbationProfile PerturbationProfile::zero() { return {}; }

PerturbationProfile PerturbationProfile::gaussian_bump(double amplitude, double center, double width) {
    if (!std::isfinite(amplitude) || !std::isfinite(center) || !(width > 0.0) || !std::isfinite(width))
        fail(ErrorCode::invalid_perturbation, "gaussian bump needs finite amplitude/center and positive width");
    if (amplitude == 0.0) return zero();
    PerturbationProfile p;
    p.form_ = PerturbationForm::gaussian_bump;
    p.params_ = {amplitude, center, width};
    p.lo_ = center - 40.0 * width;
    p.hi_ = center + 40.0 * width;
    return p;
}

PerturbationProfile PerturbationProfile::compact_poly(std::vector<double> coeffs, double a, double b) {
    if (!(b > a) || coeffs.empty())
        fail(ErrorCode::invalid_perturbation, "compact polynomial needs a < b and at least one coefficient");
    double scale = 0.0, at_one = 0.0;
    for (double c : coeffs) {
        if (!std::isfinite(c)) fail(ErrorCode::invalid_perturbation, "non-finite polynomial coefficient");
        scale += std::abs(c);
        at_one += c;
    }
    if (scale == 0.0) return zero();
    if (std::abs(coeffs[0]) > 1e-12 * scale || std::abs(at_one) > 1e-12 * scale)
        fail(ErrorCode::invalid_perturbation, "compact polynomial must vanish at both ends of its support");
    PerturbationProfile p;
    p.form_ = PerturbationForm::compact_poly;
    p.params_ = {a, b};
    p.params_.insert(p.params_.end(), coeffs.begin(), coeffs.end());
    p.lo_ = a;
    p.hi_ = b;
    return p;
}

PerturbationProfile PerturbationProfile::table(std::vector<double> xs, std::vector<double> values) {
    if (xs.size() < 2 || xs.size() != values.size())
        fail(ErrorCode::invalid_perturbation, "table needs at least two (x, q) samples of equal count");
    double scale = 0.0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        if (!std::isfinite(xs[i]) || !std::isfinite(values[i]))
            fail(ErrorCode::invalid_perturbation, "non-finite table sample");
        if (i > 0 && !(xs[i] > xs[i - 1])) fail(ErrorCode::invalid_perturbation, "table x must increase strictly");
        scale = std::max(scale, std::abs(values[i]));
    }
    if (scale == 0.0) return zero();
    if (std::abs(values.front()) > 1e-12 * scale || std::abs(values.back()) > 1e-12 * scale)
        fail(ErrorCode::invalid_perturbation, "table must vanish at both ends to stay continuous");
    PerturbationProfile p;
    p.form_ = PerturbationForm::table;
    p.lo_ = xs.front();
    p.hi_ = xs.back();
    p.xs_ = std::move(xs);
    p.ys_ = std::move(values);
    return p;
}

double PerturbationProfile::operator()(double x) const {
    switch (form_) {
    case PerturbationForm::zero: return 0.0;
    case PerturbationForm::gaussian_bump: {
        const double t = (x - params_[1]) / params_[2];
        return params_[0] * std::exp(-0.5 * t * t);
    }
    case PerturbationForm::compact_poly: return poly_eval(params_, x);
    case PerturbationForm::table: {
        if (x <= xs_.front() || x >= xs_.back()) return 0.0;
        const auto k = static_cast<std::size_t>(std::upper_bound(xs_.begin(), xs_.end(), x) - xs_.begin());
        const double t = (x - xs_[k - 1]) / (xs_[k] - xs_[k - 1]);
        return ys_[k - 1] + t * (ys_[k] - ys_[k - 1]);
    }
    }
    return 0.0;
}

namespace {

double tail_generic(const PerturbationProfile& q, double x, bool absolute) {
    switch (q.form()) {
    case PerturbationForm::zero: return 0.0;
    case PerturbationForm::gaussian_bump: {
        const auto& p = q.params();
        const double a = absolute ? std::abs(p[0]) : p[0];
        return a * p[2] * std::sqrt(std::numbers::pi / 2.0) * std::erfc((x - p[1]) / (p[2] * std::numbers::sqrt2));
    }
    case PerturbationForm::compact_poly: {
        const double lo = std::max(x, q.support_lo()), hi = q.support_hi();
        if (!(hi > lo)) return 0.0;
        auto f = [&](double t) { return absolute ? std::abs(q(t)) : q(t); };
        return detail::gk15(f, lo, hi, 20, 1e-14);
    }
    case PerturbationForm::table: {
        double total = 0.0;
        const auto& xs = q.xs();
        for (std::size_t i = 0; i + 1 < xs.size(); ++i)
            total += linear_piece(xs[i], q(xs[i]), xs[i + 1], q(xs[i + 1]), x, xs.back(), absolute);
        return total;
    }
    }
    return 0.0;
}

} // namespace

double PerturbationProfile::tail_integral(double x) const { return tail_generic(*this, x, false); }
double PerturbationProfile::tail_abs(double x) const { return tail_generic(*this, x, true); }

PerturbationProfile PerturbationProfile::mirrored() const {
    switch (form_) {
    case PerturbationForm::zero: return *this;
    case PerturbationForm::gaussian_bump: return gaussian_bump(params_[0], -params_[1], params_[2]);
    case PerturbationForm::compact_poly: {
        // p(1 - t) expanded by the binomial theorem
        const std::size_t m = params_.size() - 2;
        std::vector<double> out(m, 0.0);
        for (std::size_t k = 0; k < m; ++k) {
            double binom = 1.0;
            for (std::size_t i = 0; i <= k; ++i) {
                out[i] += params_[2 + k] * binom * ((i % 2) ? -1.0 : 1.0);
                binom = binom * static_cast<double>(k - i) / static_cast<double>(i + 1);
            }
        }
        PerturbationProfile p = *this;
        p.params_ = {-params_[1], -params_[0]};
        p.params_.insert(p.params_.end(), out.begin(), out.end());
        p.lo_ = -hi_;
        p.hi_ = -lo_;
        return p;
    }
    case PerturbationForm::table: {
        std::vector<double> xs(xs_.rbegin(), xs_.rend()), ys(ys_.rbegin(), ys_.rend());
        for (double& x : xs) x = -x;
        return table(std::move(xs), std::move(ys));
    }
    }
    return *this;
}

double moment_check(const PerturbationProfile& q, double window_lo, double window_hi) {
    if (q.is_zero()) return 0.0;
    const double lo = std::max(window_lo, q.support_lo()), hi = std::min(window_hi, q.support_hi());
    if (!(hi > lo)) return 0.0;
    auto f = [&](double x) { return (1.0 + x * x) * std::abs(q(x)); };
    if (q.form() == PerturbationForm::table) {
        double total = 0.0;
        std::vector<double> cuts{lo};
        for (double x : q.xs())
            if (x > lo && x < hi) cuts.push_back(x);
        cuts.push_back(hi);
        for (std::size_t i = 0; i + 1 < cuts.size(); ++i) total += detail::gk15(f, cuts[i], cuts[i + 1], 15, 1e-13);
        return total;
    }
    return detail::gk15(f, lo, hi, 20, 1e-13);
}

double kernel_truncation(const PerturbationProfile& q, double x0, double h, double eps) {
    const double total = q.tail_abs(x0);
    if (total == 0.0) return x0;
    long lo = 0, hi = static_cast<long>(std::ceil((q.support_hi() - x0) / h)) + 1;
    hi = std::max(hi, 1L);
    // smallest k with tail(x0 + k h) < eps * total; tail is non-increasing
    while (lo < hi) {
        const long mid = (lo + hi) / 2;
        if (q.tail_abs(x0 + mid * h) < eps * total)
            hi = mid;
        else
            lo = mid + 1;
    }
    return x0 + lo * h;
}

} // namespace levitan
