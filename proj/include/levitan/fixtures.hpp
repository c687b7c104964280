#pragma once

// Reference band structures and divisors used by tests and the CLI.

#include <cstdint>
#include <string>

#include "levitan/dubrovin_flow.hpp"

namespace levitan {

struct Fixture {
    std::string name;
    BandStructure band;
    DirichletDivisor divisor;
};

/// edges {0}
Fixture free_fixture();
/// edges {0,1,2}, mu = 1.5, sigma = +1
Fixture one_gap_fixture();
/// E_{2j-1} = j^2 - 0.1/j^2, E_{2j} = j^2 + 0.1/j^2, divisor at gap centers with alternating sigma.
Fixture periodic_like_fixture(int n);
/// Seeded random edges with growing bands (Hypothesis growth holds with C = alpha = 1) and a random divisor.
Fixture random_fixture(int n, std::uint64_t seed);

/// Divisor drawn uniformly inside each gap with random sigma.
DirichletDivisor random_divisor(const BandStructure& band, std::uint64_t seed);

} // namespace levitan
