#include "doctest.h"

#include <cmath>

#include "levitan/error.hpp"
#include "levitan/spectral_core.hpp"

using namespace levitan;

namespace {

std::vector<double> periodic_like(int n) {
    std::vector<double> e{0.0};
    for (int j = 1; j <= n; ++j) {
        e.push_back(j * j - 0.1 / (j * j));
        e.push_back(j * j + 0.1 / (j * j));
    }
    return e;
}

ErrorCode code_of(auto&& f) {
    try {
        f();
    } catch (const Error& e) {
        return e.code();
    }
    return ErrorCode::invalid_config;
}

} // namespace

TEST_CASE("one gap hypothesis report") {
    auto r = validate_band_structure(std::vector<double>{0, 1, 2}, 2.0, 0.5, 1.0);
    CHECK(r.partial_sum == doctest::Approx(1.0));
    CHECK(r.all_growth_ok());
}

TEST_CASE("periodic-like partial sums") {
    auto e6 = periodic_like(6);
    auto r6 = validate_band_structure(e6, 2.0, 1.0, 1.0);
    // exact sum over the binary64 edges; the decimal-edge value 18.142379097076860 differs by edge rounding
    CHECK(r6.partial_sum == doctest::Approx(18.14237909708453).epsilon(1e-14));
    CHECK(r6.partial_sum == doctest::Approx(18.142379097076860).epsilon(1e-12));
    CHECK(r6.all_growth_ok());
    auto r4 = validate_band_structure(periodic_like(4), 2.0, 1.0, 1.0);
    CHECK(r4.partial_sum == doctest::Approx(5.9450900373210305213).epsilon(1e-12));
}

TEST_CASE("malformed edges are rejected with specific codes") {
    CHECK(code_of([] { BandStructure({0, 2, 1}); }) == ErrorCode::non_monotonic);
    CHECK(code_of([] { BandStructure({0, 1, 1}); }) == ErrorCode::empty_gap);
    CHECK(code_of([] { BandStructure({-1, 1, 2}); }) == ErrorCode::negative_ground);
    CHECK(code_of([] { BandStructure({0, 1}); }) == ErrorCode::malformed_band);
    auto bad_growth = validate_band_structure(std::vector<double>{0, 1, 1.1, 1.2, 1.3}, 2.0, 1.0, 1.0);
    CHECK_FALSE(bad_growth.all_growth_ok());
    CHECK(code_of([&] { require_hypothesis(bad_growth); }) == ErrorCode::growth_failure);
}

TEST_CASE("Y polynomial") {
    BandStructure free({0.0});
    CHECK(eval_Y(free, SpectralPoint::at(4.0)) == cplx(-4.0, 0.0));
    BandStructure b2({0, 1, 2, 4, 5});
    const cplx y = eval_Y(b2, SpectralPoint::at(cplx(3, 1)));
    CHECK(y.real() == doctest::Approx(-1.875).epsilon(1e-14));
    CHECK(y.imag() == doctest::Approx(-0.625).epsilon(1e-14));
    for (double e : b2.edges()) CHECK(eval_Y(b2, SpectralPoint::at(e)) == cplx(0.0, 0.0));
}

TEST_CASE("square root of Y") {
    BandStructure free({0.0});
    const cplx w = eval_sqrtY(free, SpectralPoint::at(-1.0));
    CHECK(w.real() == doctest::Approx(-1.0));
    CHECK(std::abs(w.imag()) < 1e-15);
    CHECK(code_of([&] { eval_sqrtY(free, SpectralPoint::at(0.0)); }) == ErrorCode::branch_at_edge);
    CHECK(code_of([&] { eval_sqrtY(free, SpectralPoint::at(3.0)); }) == ErrorCode::on_branch_cut);

    BandStructure b({0, 1, 2, 4, 5});
    for (cplx z : {cplx(3, 1), cplx(-2, 0.5), cplx(7, -3), cplx(1.5, 1e-3)}) {
        const cplx s = eval_sqrtY(b, SpectralPoint::at(z));
        const cplx y = eval_Y(b, SpectralPoint::at(z));
        CHECK(std::abs(s * s - y) <= 1e-12 * std::abs(y));
        CHECK(std::abs(eval_sqrtY(b, SpectralPoint::at(std::conj(z))) - std::conj(s)) <= 1e-14 * std::abs(s));
    }
    // boundary values: conjugate pair, and the upper value is the eps -> 0+ limit
    const double e = 0.5;
    const cplx up = eval_sqrtY(b, SpectralPoint::upper(e));
    CHECK(std::abs(eval_sqrtY(b, SpectralPoint::lower(e)) - std::conj(up)) < 1e-15);
    cplx v[3];
    const double eps[3] = {1e-4, 1e-5, 1e-6};
    for (int i = 0; i < 3; ++i) v[i] = eval_sqrtY(b, SpectralPoint::at(cplx(e, eps[i])));
    // linear in eps near a regular point: Richardson with ratio 10
    const cplx lim = (10.0 * v[2] - v[1]) / 9.0;
    CHECK(std::abs(lim - up) < 1e-10);
}
