#include "levitan/fixtures.hpp"

#include <random>

#include "levitan/error.hpp"

namespace levitan {

namespace {

void check_size(int n) {
    if (n < 0 || n > 10) fail(ErrorCode::invalid_config, "fixture gap count must lie in [0, 10]");
}

// Uniform double in [0, 1) from the top 53 bits; identical on every platform.
double unit(std::mt19937_64& rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }

} // namespace

Fixture free_fixture() {
    BandStructure b({0.0});
    return {"free", b, DirichletDivisor(b, {})};
}

Fixture one_gap_fixture() {
    BandStructure b({0.0, 1.0, 2.0});
    return {"one_gap", b, DirichletDivisor(b, {{1.5, 1}})};
}

Fixture periodic_like_fixture(int n) {
    check_size(n);
    std::vector<double> e{0.0};
    for (int j = 1; j <= n; ++j) {
        const double jj = static_cast<double>(j) * j;
        e.push_back(jj - 0.1 / jj);
        e.push_back(jj + 0.1 / jj);
    }
    BandStructure b(e, 2.0, 1.0, 1.0);
    std::vector<DivisorPoint> pts;
    for (int j = 1; j <= n; ++j) pts.push_back({b.gap_center(j), j % 2 == 1 ? 1 : -1});
    return {"periodic_like_" + std::to_string(n), b, DirichletDivisor(b, pts)};
}

DirichletDivisor random_divisor(const BandStructure& band, std::uint64_t seed) {
    std::mt19937_64 rng(seed ^ 0x9e3779b97f4a7c15ULL);
    std::vector<DivisorPoint> pts;
    for (int j = 1; j <= band.gap_count(); ++j) {
        const double t = 0.05 + 0.9 * unit(rng);
        const int s = (rng() & 1U) ? 1 : -1;
        pts.push_back({band.gap_lower(j) + t * (band.gap_upper(j) - band.gap_lower(j)), s});
    }
    return DirichletDivisor(band, std::move(pts));
}

Fixture random_fixture(int n, std::uint64_t seed) {
    check_size(n);
    std::mt19937_64 rng(seed);
    std::vector<double> e{0.0};
    for (int j = 1; j <= n; ++j) {
        const double band_width = j + 0.5 + unit(rng);
        const double gap_width = 0.2 + 0.8 * unit(rng);
        e.push_back(e.back() + band_width);
        e.push_back(e.back() + gap_width);
    }
    BandStructure b(e, 2.0, 1.0, 1.0);
    return {"random_" + std::to_string(n) + "_" + std::to_string(seed), b, random_divisor(b, seed)};
}

} // namespace levitan
