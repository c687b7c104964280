#include "doctest.h"

#include <cmath>
#include <memory>
#include <random>
#include <sstream>
#include <string>

#include "levitan/error.hpp"
#include "levitan/fixtures.hpp"
#include "levitan/transform_kernel.hpp"

using namespace levitan;

namespace {

WeylContext make_context(const Fixture& f, double half = 20.0) {
    return WeylContext(std::make_shared<DivisorTrajectory>(
        integrate_dubrovin(f.band, f.divisor, -half, half, 0.005, 1e-12)));
}

template <class F>
ErrorCode code_of(F&& f) {
    try {
        f();
    } catch (const Error& e) {
        return e.code();
    }
    return ErrorCode::invalid_config;
}

KernelGrid solve(const WeylContext& ctx, const PerturbationProfile& q, WeylSign sign, double h) {
    KernelGridParams gp;
    gp.x0 = -6.0;
    gp.h = h;
    return solve_kernel(ctx, q, sign, gp);
}

PerturbationProfile bump() { return PerturbationProfile::gaussian_bump(0.5, 0.3, 0.6); }

} // namespace

TEST_CASE("perturbation forms and mirror") {
    const auto g = PerturbationProfile::gaussian_bump(2.0, 1.0, 0.5);
    CHECK(g(1.0) == doctest::Approx(2.0));
    CHECK(g(1.5) == doctest::Approx(2.0 * std::exp(-0.5)));
    CHECK(g.tail_integral(1.0) == doctest::Approx(2.0 * 0.5 * std::sqrt(std::acos(-1.0) / 2.0)));
    CHECK(g.mirrored()(-1.5) == doctest::Approx(g(1.5)));
    CHECK(g.mirrored().tail_integral(-1.0) == doctest::Approx(g.tail_integral(-1e9) - g.tail_integral(1.0)));

    // t(1 - t) on [0, 2]: q(x) = (x/2)(1 - x/2), integral 1/3
    const auto p = PerturbationProfile::compact_poly({0.0, 1.0, -1.0}, 0.0, 2.0);
    CHECK(p(1.0) == doctest::Approx(0.25));
    CHECK(p(3.0) == 0.0);
    CHECK(p.tail_integral(-1.0) == doctest::Approx(1.0 / 3.0));
    CHECK(p.mirrored()(-0.5) == doctest::Approx(p(0.5)));
    CHECK(p.mirrored().tail_integral(-2.0) == doctest::Approx(1.0 / 3.0));

    const auto t = PerturbationProfile::table({-1.0, 0.0, 1.0}, {0.0, -2.0, 0.0});
    CHECK(t(-0.5) == doctest::Approx(-1.0));
    CHECK(t.tail_integral(-5.0) == doctest::Approx(-2.0));
    CHECK(t.tail_abs(-0.5) == doctest::Approx(1.75));
    CHECK(t.mirrored()(0.25) == doctest::Approx(t(-0.25)));

    CHECK(code_of([] { PerturbationProfile::compact_poly({1.0}, 0.0, 1.0); }) == ErrorCode::invalid_perturbation);
    CHECK(code_of([] { PerturbationProfile::table({0.0, 1.0}, {1.0, 0.0}); }) == ErrorCode::invalid_perturbation);
    CHECK(code_of([] { PerturbationProfile::gaussian_bump(1.0, 0.0, 0.0); }) == ErrorCode::invalid_perturbation);
}

TEST_CASE("moment integral") {
    CHECK(moment_check(PerturbationProfile::zero(), -10.0, 10.0) == 0.0);
    // int (1 + x^2) exp(-x^2/2) = 2 sqrt(2 pi)
    CHECK(moment_check(PerturbationProfile::gaussian_bump(1.0, 0.0, 1.0), -60.0, 60.0) ==
          doctest::Approx(5.0132565492620005).epsilon(1e-12));

    // 1/(1+|x|) is not integrable against 1 + x^2: partial integrals keep growing
    std::vector<double> xs, ys;
    for (int i = -2002; i <= 2002; ++i) {
        const double x = 0.5 * i;
        xs.push_back(x);
        ys.push_back(std::abs(i) == 2002 ? 0.0 : 1.0 / (1.0 + std::abs(x)));
    }
    const auto slow = PerturbationProfile::table(xs, ys);
    double prev = 0.0;
    for (double w : {10.0, 100.0, 1000.0}) {
        const double m = moment_check(slow, -w, w);
        CHECK(m > 5.0 * prev);
        prev = m;
    }
}

TEST_CASE("kernel truncation") {
    const auto g = bump();
    const double U = kernel_truncation(g, -6.0, 0.05);
    CHECK(g.tail_abs(U) < 1e-12 * g.tail_abs(-6.0));
    CHECK(g.tail_abs(U - 0.05) >= 1e-12 * g.tail_abs(-6.0));
    CHECK(kernel_truncation(PerturbationProfile::zero(), -6.0, 0.05) == -6.0);
}

TEST_CASE("D diagonal and symmetry") {
    std::mt19937_64 rng(11);
    std::uniform_real_distribution<double> u(-6.0, 6.0);
    for (int n = 0; n <= 4; ++n) {
        const Fixture f = n == 0 ? free_fixture() : random_fixture(n, 100 + n);
        const auto ctx = make_context(f, 8.0);
        const double bound = D_bound(f.band);
        for (int t = 0; t < 40; ++t) {
            const double x = u(rng), y = u(rng), r = u(rng), s = u(rng);
            CHECK(std::abs(eval_D(ctx, x, y, y, x) + 0.25) <= 1e-12);
            CHECK(std::abs(eval_D(ctx, x, y, y, x, WeylSign::minus) + 0.25) <= 1e-12);
            const double d = eval_D(ctx, x, y, r, s);
            CHECK(std::abs(d - eval_D(ctx, y, x, s, r)) <= 1e-14);
            CHECK(std::abs(d) <= bound);
        }
    }
}

TEST_CASE("free background D is constant") {
    const auto ctx = make_context(free_fixture(), 4.0);
    CHECK(eval_D(ctx, 1.0, -2.0, 0.5, 3.0) == doctest::Approx(-0.25).epsilon(1e-15));
    CHECK(D_bound(free_fixture().band) == 0.25);
}

TEST_CASE("residue vanishes where mu sits on the edge") {
    BandStructure b({0, 1, 2});
    const Fixture f{"edge", b, DirichletDivisor(b, {{1.0, 1}})};
    const auto ctx = make_context(f, 4.0);
    CHECK(residue_f_plus(ctx, 1, 0.0, 0.7, -1.1, 2.3) == 0.0);
    CHECK(residue_f_plus(ctx, 2, 0.0, 0.7, -1.1, 2.3) != 0.0);
}

TEST_CASE("residue closed form against the edge limit") {
    const Fixture f = one_gap_fixture();
    const auto ctx = make_context(f, 8.0);
    const auto& tr = ctx.trajectory();
    // positions where mu stays well inside the gap, so the limit is well conditioned
    std::vector<double> pts;
    for (double x = -5.0; x <= 5.0 && pts.size() < 8; x += 0.37) {
        const double m = tr.mu(1, x);
        if (m > 1.2 && m < 1.8) pts.push_back(x);
    }
    REQUIRE(pts.size() == 8);
    for (int k = 0; k < 3; ++k)
        for (std::size_t i = 0; i + 3 < pts.size(); i += 2) {
            const double x = pts[i], y = pts[i + 1], r = pts[i + 2], s = pts[i + 3];
            const double closed = residue_f_plus(ctx, k, x, y, r, s);
            const cplx limit = residue_modulus(ctx, k, x, y, r, s) * edge_exponential_limit_raw(ctx, k, x, y, r, s);
            CHECK(std::abs(closed - limit) <= 1e-6 * std::max(1.0, std::abs(closed)));
            CHECK(std::abs(residue_f_plus(ctx, k, x, y, r, s)) <= residue_bound(f.band, k) * (1.0 + 1e-12));
        }
}

TEST_CASE("residue bound constants") {
    BandStructure b({0, 1, 2, 4, 5});
    // beta: nearest foreign gap edge, here 4 - 2 = 2; widths 1 + 1
    CHECK(residue_constant_C1(b) == doctest::Approx(std::exp(1.0)));
    CHECK(residue_bound(b, 0) == doctest::Approx(2.0 * 5.0 / 4.0));
    CHECK(residue_bound(b, 3) == doctest::Approx(std::exp(1.0) / 4.0));
    CHECK(residue_constant_C1(free_fixture().band) == 1.0);
}

TEST_CASE("integration domain predicates match brute enumeration") {
    auto sign = [](int v) { return (v > 0) - (v < 0); };
    for (int x = -3; x <= 3; ++x)
        for (int y = -3; y <= 3; ++y)
            for (int s = -3; s <= 3; ++s) {
                // doubled coordinates keep the midpoint integral
                const bool first = s > x && sign(x - s) == -sign(2 * y - x - s);
                CHECK(first_domain_raw(x, y, s) == first);
                CHECK(first_domain_solved(x, y, s) == first);
                for (int t = -3; t <= 3; ++t) {
                    const bool second = s > x && t > y && y > x && sign(x - y + t - s) == -sign(y - x + t - s);
                    CHECK(second_domain_raw(x, y, t, s) == second);
                    CHECK(second_domain_solved(x, y, t, s) == second);
                }
            }
}

TEST_CASE("zero perturbation gives a zero kernel") {
    const auto ctx = make_context(one_gap_fixture());
    const auto g = solve(ctx, PerturbationProfile::zero(), WeylSign::plus, 0.1);
    CHECK(g.iterations == 1);
    for (std::size_t i = 0; i <= g.n(); ++i)
        for (std::size_t j = 0; j <= i; ++j) CHECK(g.node(i, j) == 0.0);
    const auto rep = kernel_bound_check(ctx, g, PerturbationProfile::zero());
    CHECK(rep.violations.empty());
    const auto p = SpectralPoint::upper(4.0);
    CHECK(jost_from_kernel(ctx, g, p, 0.4, WeylSign::plus) == eval_psi_product(ctx, p, 0.4, WeylSign::plus));
    const WeylSolutionTable table(ctx, p);
    const auto d = jost_direct_solve(table, PerturbationProfile::zero(), WeylSign::plus, -4.0, 0.01);
    CHECK(d.deltas.size() == 1);
    CHECK(d.at(0.4) == table.psi(0.4, WeylSign::plus));
}

TEST_CASE("kernel diagonal converges at second order") {
    const auto q = bump();
    const auto ctx = make_context(one_gap_fixture());
    for (WeylSign sign : {WeylSign::plus, WeylSign::minus}) {
        const auto qf = sign == WeylSign::plus ? q : q.mirrored();
        std::vector<double> err;
        for (double h : {0.1, 0.05, 0.025}) {
            const auto g = solve(ctx, q, sign, h);
            CHECK(g.final_delta < 1e-12);
            double e = 0.0;
            for (std::size_t i = 0; i <= g.n(); ++i)
                e = std::max(e, std::abs(g.node(i, 0) - 0.5 * qf.tail_integral(g.x0() + i * h)));
            err.push_back(e);
        }
        for (int m = 0; m < 2; ++m) {
            const double order = std::log2(err[m] / err[m + 1]);
            CHECK(order >= 1.7);
            CHECK(order <= 2.3);
        }
    }
}

TEST_CASE("kernel in original coordinates") {
    const auto q = bump();
    const auto ctx = make_context(one_gap_fixture());
    const auto gp = solve(ctx, q, WeylSign::plus, 0.05);
    const auto gm = solve(ctx, q, WeylSign::minus, 0.05);
    CHECK(gp.K(1.0, 0.5) == 0.0);
    CHECK(gm.K(0.5, 1.0) == 0.0);
    // K(x,x) = (1/2) int_x^inf q and K_-(x,x) = (1/2) int_-inf^x q
    CHECK(gp.K(0.5, 0.5) == doctest::Approx(0.5 * q.tail_integral(0.5)).epsilon(1e-3));
    CHECK(gm.K(0.5, 0.5) == doctest::Approx(0.5 * (q.tail_integral(-50.0) - q.tail_integral(0.5))).epsilon(1e-3));
    CHECK(gp.K(0.5, 20.0) == 0.0);
}

TEST_CASE("solver reports non-convergence") {
    const auto ctx = make_context(one_gap_fixture());
    KernelGridParams gp;
    gp.x0 = -6.0;
    gp.h = 0.1;
    CHECK(code_of([&] { solve_kernel(ctx, bump(), WeylSign::plus, gp, 1e-12, 2); }) == ErrorCode::no_convergence);
}

TEST_CASE("kernel bound holds with computed constants") {
    const auto q = bump();
    for (const Fixture& f : {free_fixture(), one_gap_fixture(), periodic_like_fixture(2), random_fixture(3, 7)}) {
        const auto ctx = make_context(f);
        for (WeylSign sign : {WeylSign::plus, WeylSign::minus}) {
            const auto g = solve(ctx, q, sign, 0.05);
            const auto rep = kernel_bound_check(ctx, g, q);
            CHECK_MESSAGE(rep.violations.empty(), f.name);
            CHECK(rep.C_monotone);
            CHECK(rep.checked > 0);
            CHECK(rep.max_ratio <= 1.0);
            CHECK(rep.l2_max_ratio <= 1.0);
            CHECK(g.C_const <= D_bound(f.band));
        }
    }
}

TEST_CASE("kernel and direct Volterra routes agree") {
    const auto q = bump();
    struct Case {
        Fixture f;
        SpectralPoint p;
    };
    for (const Case& c : {Case{free_fixture(), SpectralPoint::upper(4.0)}, Case{one_gap_fixture(), SpectralPoint::at(-1.0)},
                          Case{one_gap_fixture(), SpectralPoint::at(cplx(3.0, 1.0))}}) {
        const auto ctx = make_context(c.f);
        for (WeylSign sign : {WeylSign::plus, WeylSign::minus}) {
            const auto g = solve(ctx, q, sign, 0.05);
            double worst = 0.0;
            for (double x = -4.0; x <= 4.0; x += 1.0) {
                const cplx a = jost_from_kernel(ctx, g, c.p, x, sign);
                const cplx b = jost_direct(ctx, q, c.p, x, sign);
                worst = std::max(worst, std::abs(a - b) / std::abs(eval_psi_product(ctx, c.p, x, sign)));
            }
            CHECK(worst <= 5e-3);
        }
    }
}

TEST_CASE("Jost solution beyond the perturbation is the background solution") {
    const auto q = PerturbationProfile::compact_poly({0.0, 4.0, -4.0}, -1.0, 1.0);
    const auto ctx = make_context(one_gap_fixture());
    const auto g = solve(ctx, q, WeylSign::plus, 0.05);
    const auto p = SpectralPoint::at(-1.0);
    CHECK(jost_from_kernel(ctx, g, p, 1.5, WeylSign::plus) == eval_psi_product(ctx, p, 1.5, WeylSign::plus));
}

TEST_CASE("Schroedinger residual decays at second order") {
    const auto q = bump();
    const auto ctx = make_context(one_gap_fixture());
    const auto p = SpectralPoint::at(-1.0);
    std::vector<double> xs;
    for (double x = -3.0; x <= 3.0; x += 0.5) xs.push_back(x);
    std::vector<double> res;
    for (double h : {0.1, 0.05, 0.025}) {
        const auto g = solve(ctx, q, WeylSign::plus, h);
        auto phi = [&](double x) { return jost_from_kernel(ctx, g, p, x, WeylSign::plus); };
        res.push_back(schrodinger_residual(ctx, q, phi, p, xs, h));
    }
    for (int m = 0; m < 2; ++m) {
        CHECK(res[m] / res[m + 1] >= 3.5);
        CHECK(res[m] / res[m + 1] <= 4.5);
    }
    // the background solution alone leaves only the difference-quotient error
    auto psi = [&](double x) { return eval_psi_product(ctx, p, x, WeylSign::plus); };
    const double r1 = schrodinger_residual(ctx, PerturbationProfile::zero(), psi, p, xs, 0.02);
    const double r2 = schrodinger_residual(ctx, PerturbationProfile::zero(), psi, p, xs, 0.01);
    CHECK(r1 / r2 == doctest::Approx(4.0).epsilon(0.05));
}

TEST_CASE("kernel CSV and metadata") {
    const auto ctx = make_context(one_gap_fixture());
    const auto g = solve(ctx, bump(), WeylSign::plus, 0.1);
    std::ostringstream csv, meta;
    write_kernel_csv(csv, g);
    write_kernel_meta_json(meta, g);
    const std::string text = csv.str();
    CHECK(text.rfind("x,y,K\n", 0) == 0);
    std::size_t lines = 0;
    for (char ch : text) lines += ch == '\n';
    CHECK(lines == 1 + (g.n() + 1) * (g.n() + 2) / 2);
    for (const char* key : {"\"iterations\"", "\"final_delta\"", "\"h\"", "\"X_max\"", "\"C_const\""})
        CHECK(meta.str().find(key) != std::string::npos);
}
