// Acceptance run: one PASS/FAIL line per criterion, exit status 0 only if all pass.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <memory>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "levitan/cli_harness.hpp"
#include "levitan/fixtures.hpp"

using namespace levitan;
namespace fs = std::filesystem;

namespace {

struct Outcome {
    bool pass = false;
    std::string detail;
};

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
    return std::chrono::duration<double>(Clock::now() - t0).count();
}

std::string num(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.3g", v);
    return buf;
}

std::shared_ptr<WeylContext> context(const Fixture& f) {
    auto tr = std::make_shared<DivisorTrajectory>(integrate_dubrovin(f.band, f.divisor, -20.0, 20.0, 0.005, 1e-12));
    return std::make_shared<WeylContext>(tr);
}

double rel(cplx a, cplx b) { return std::abs(a - b) / std::abs(b); }

// Band interior point at fraction t in (0, 1); the last band is cut at top + 20.
double band_point(const BandStructure& band, int k, double t) {
    const double lo = band.edges()[2 * k];
    const double hi = k < band.gap_count() ? band.edges()[2 * k + 1] : band.top() + 20.0;
    return lo + t * (hi - lo);
}

// Random spectral point at distance at least eps_gap from the gaps.
SpectralPoint random_point(const WeylContext& ctx, std::mt19937_64& rng) {
    const BandStructure& band = ctx.band();
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (;;) {
        SpectralPoint p;
        const double pick = u(rng);
        if (pick < 0.5) {
            const double re = band.ground() - 3.0 + u(rng) * (band.top() - band.ground() + 6.0);
            const double im = (0.05 + 1.95 * u(rng)) * (u(rng) < 0.5 ? -1.0 : 1.0);
            p = SpectralPoint::at(cplx(re, im));
        } else if (pick < 0.85) {
            const int k = static_cast<int>(u(rng) * (band.gap_count() + 1));
            const double e = band_point(band, k, 0.02 + 0.96 * u(rng));
            p = u(rng) < 0.5 ? SpectralPoint::upper(e) : SpectralPoint::lower(e);
        } else {
            p = SpectralPoint::at(cplx(band.ground() - 0.1 - 3.0 * u(rng), 0.0));
        }
        if (band.distance_to_gaps(p.z) >= ctx.eps_gap()) return p;
    }
}

std::vector<Fixture> small_fixtures() { return {one_gap_fixture(), periodic_like_fixture(2), random_fixture(3, 7)}; }

// ---------------------------------------------------------------------------

Outcome free_closed_form() {
    const auto t0 = Clock::now();
    const auto ctx = context(free_fixture());
    const std::vector<SpectralPoint> zs = {
        SpectralPoint::upper(0.5),          SpectralPoint::upper(2.0),         SpectralPoint::upper(10.0),
        SpectralPoint::lower(3.0),          SpectralPoint::at(cplx(-1.0, 0)),  SpectralPoint::at(cplx(-4.0, 0)),
        SpectralPoint::at(cplx(1.0, 1.0)),  SpectralPoint::at(cplx(-2, 0.5)),  SpectralPoint::at(cplx(5.0, -2.0)),
        SpectralPoint::at(cplx(0.3, 3.0))};
    const double xs[] = {-4.0, -1.5, 0.0, 2.0, 4.5};
    const cplx I(0.0, 1.0);
    double worst = 0.0;
    for (const SpectralPoint& p : zs) {
        cplx k = root_upper(p.z);
        if (p.side == Side::upper) k = std::sqrt(p.z.real());
        if (p.side == Side::lower) k = -std::sqrt(p.z.real());
        worst = std::max(worst, rel(eval_green(*ctx, p), -1.0 / (2.0 * I * k)));
        for (double x : xs) {
            worst = std::max(worst, rel(eval_m(*ctx, p, x, WeylSign::plus), I * k));
            worst = std::max(worst, rel(eval_m(*ctx, p, x, WeylSign::minus), -I * k));
            worst = std::max(worst, rel(eval_psi_product(*ctx, p, x, WeylSign::plus), std::exp(I * k * x)));
            worst = std::max(worst, rel(eval_psi_product(*ctx, p, x, WeylSign::minus), std::exp(-I * k * x)));
        }
    }
    const double t = seconds_since(t0);
    return {worst <= 1e-10 && t < 1.0, "max rel " + num(worst) + " (<= 1e-10) over 50 probes, " + num(t) + " s"};
}

Outcome cross_representation() {
    const auto t0 = Clock::now();
    std::mt19937_64 rng(2024);
    std::uniform_real_distribution<double> ux(-5.0, 5.0);
    double worst = 0.0;
    int probes = 0;
    for (const Fixture& f : small_fixtures()) {
        const auto ctx = context(f);
        for (int i = 0; i < 100; ++i, ++probes) {
            const SpectralPoint p = random_point(*ctx, rng);
            const double x = ux(rng);
            for (WeylSign s : {WeylSign::plus, WeylSign::minus})
                worst = std::max(worst, rel(eval_psi_product(*ctx, p, x, s), eval_psi_ode(*ctx, p, x, s)));
        }
    }
    const double t = seconds_since(t0);
    return {worst <= 1e-6 && t < 60.0,
            "max rel " + num(worst) + " (<= 1e-6) over " + std::to_string(probes) + " probes, " + num(t) + " s"};
}

Outcome wronskian() {
    std::mt19937_64 rng(77);
    double worst = 0.0, spread = 0.0;
    for (const Fixture& f : small_fixtures()) {
        const auto ctx = context(f);
        for (int i = 0; i < 50; ++i) {
            const SpectralPoint p = random_point(*ctx, rng);
            const cplx inv_g = 1.0 / eval_green(*ctx, p);
            cplx w0;
            for (int xi = -3; xi <= 3; ++xi) {
                const double x = xi;
                const cplx w = eval_psi_product(*ctx, p, x, WeylSign::minus) *
                               eval_psi_product(*ctx, p, x, WeylSign::plus) *
                               (eval_m(*ctx, p, x, WeylSign::plus) - eval_m(*ctx, p, x, WeylSign::minus));
                worst = std::max(worst, std::abs(w + inv_g) / std::abs(inv_g));
                if (xi == -3) w0 = w;
                spread = std::max(spread, std::abs(w - w0) / std::abs(w0));
            }
        }
    }
    return {worst <= 1e-6 && spread <= 1e-8,
            "max rel residual " + num(worst) + " (<= 1e-6), x spread " + num(spread) + " (<= 1e-8), 50 probes x 3"};
}

Outcome green_sign() {
    double lowest = std::numeric_limits<double>::infinity(), imag_ratio = 0.0;
    std::vector<Fixture> fixtures = small_fixtures();
    fixtures.insert(fixtures.begin(), free_fixture());
    for (const Fixture& f : fixtures) {
        const auto ctx = context(f);
        const int bands = f.band.gap_count() + 1;
        for (int i = 0; i < 20; ++i) {
            const int k = i % bands;
            const int slot = i / bands, slots = (19 - k) / bands + 1;
            const double e = band_point(f.band, k, (slot + 0.5) / slots);
            const cplx v = eval_green(*ctx, SpectralPoint::upper(e)) / cplx(0.0, 1.0);
            lowest = std::min(lowest, v.real());
            imag_ratio = std::max(imag_ratio, std::abs(v.imag()) / std::abs(v));
        }
    }
    return {lowest > 0.0 && imag_ratio <= 1e-8,
            "min g/i " + num(lowest) + " (> 0), max |Im|/|g| " + num(imag_ratio) + ", 20 probes x 4"};
}

std::vector<Fixture> d_fixtures() {
    return {free_fixture(), one_gap_fixture(), periodic_like_fixture(2), random_fixture(3, 7),
            periodic_like_fixture(4)};
}

Outcome d_diagonal() {
    const auto t0 = Clock::now();
    std::mt19937_64 rng(5);
    std::uniform_real_distribution<double> u(-6.0, 6.0);
    double worst = 0.0;
    for (const Fixture& f : d_fixtures()) {
        const auto ctx = context(f);
        for (int i = 0; i < 200; ++i) {
            const double x = u(rng), y = u(rng);
            for (WeylSign s : {WeylSign::plus, WeylSign::minus})
                worst = std::max(worst, std::abs(eval_D(*ctx, x, y, y, x, s) + 0.25));
        }
    }
    const double t = seconds_since(t0);
    return {worst <= 1e-8 && t < 60.0, "max |D+1/4| " + num(worst) + " (<= 1e-8), 200 pairs x N=0..4, " + num(t) + " s"};
}

Outcome d_symmetry() {
    std::mt19937_64 rng(6);
    std::uniform_real_distribution<double> u(-6.0, 6.0);
    double worst = 0.0;
    for (const Fixture& f : d_fixtures()) {
        const auto ctx = context(f);
        for (int i = 0; i < 200; ++i) {
            const double x = u(rng), y = u(rng), r = u(rng), s = u(rng);
            for (WeylSign sg : {WeylSign::plus, WeylSign::minus})
                worst = std::max(worst, std::abs(eval_D(*ctx, x, y, r, s, sg) - eval_D(*ctx, y, x, s, r, sg)));
        }
    }
    return {worst <= 1e-10, "max antisymmetric residual " + num(worst) + " (<= 1e-10), 200 quadruples x N=0..4"};
}

Outcome structural_identity() {
    std::mt19937_64 rng(11);
    std::uniform_real_distribution<double> ux(-5.0, 5.0);
    double worst = 0.0;
    for (const Fixture& f : small_fixtures()) {
        const auto ctx = context(f);
        for (int i = 0; i < 100; ++i) {
            const SpectralPoint p = random_point(*ctx, rng);
            const StructuralResidual r = structural_identity_check(*ctx, p, ux(rng));
            worst = std::max(worst, r.residual / r.scale);
        }
    }
    return {worst <= 1e-5, "max residual/(1+|Y|) " + num(worst) + " (<= 1e-5), 100 probes x 3"};
}

// ---------------------------------------------------------------------------
// criteria read from full verification runs

struct Run {
    std::string name;
    VerificationSummary summary;
    double seconds = 0.0;
};

std::vector<Run> verification_runs(const fs::path& root) {
    const std::pair<std::string, RunConfig> configs[] = {
        {"free", generate_fixture(FixtureKind::free)},
        {"one_gap", generate_fixture(FixtureKind::one_gap)},
        {"periodic_like_2", generate_fixture(FixtureKind::periodic_like, 2)},
        {"periodic_like_4", generate_fixture(FixtureKind::periodic_like, 4)},
        {"random_3", generate_fixture(FixtureKind::random, 3, 7)},
    };
    std::vector<Run> runs;
    for (auto [name, c] : configs) {
        c.out_dir = (root / name).string();
        const auto t0 = Clock::now();
        VerificationSummary s = run_pipeline(c, Stage::verify);
        runs.push_back({name, std::move(s), seconds_since(t0)});
    }
    return runs;
}

// Worst value of the named checks over the selected runs; fails if any is missing or failing.
Outcome from_runs(const std::vector<Run>& runs, const std::vector<std::string>& names, const std::vector<std::string>& keys,
                  const std::string& label, double time_limit = 0.0) {
    bool ok = true;
    std::ostringstream os;
    double slowest = 0.0;
    for (const Run& r : runs) {
        if (std::find(names.begin(), names.end(), r.name) == names.end()) continue;
        slowest = std::max(slowest, r.seconds);
        for (const std::string& k : keys) {
            const auto it = r.summary.checks.find(k);
            if (it == r.summary.checks.end()) {
                ok = false;
                os << ' ' << r.name << ':' << k << "=missing";
                continue;
            }
            ok = ok && it->second.pass;
            if (!it->second.pass) os << ' ' << r.name << ':' << k << "=" << num(it->second.value);
        }
    }
    if (time_limit > 0.0 && slowest >= time_limit) ok = false;
    std::string detail = label;
    if (!os.str().empty()) detail += "; failing:" + os.str();
    if (time_limit > 0.0) detail += ", slowest fixture " + num(slowest) + " s";
    return {ok, detail};
}

std::string range_of(const std::vector<Run>& runs, const std::vector<std::string>& names,
                     const std::vector<std::string>& keys) {
    double lo = std::numeric_limits<double>::infinity(), hi = -lo;
    for (const Run& r : runs) {
        if (std::find(names.begin(), names.end(), r.name) == names.end()) continue;
        for (const std::string& k : keys) {
            const auto it = r.summary.checks.find(k);
            if (it == r.summary.checks.end()) continue;
            lo = std::min(lo, it->second.value);
            hi = std::max(hi, it->second.value);
        }
    }
    return "[" + num(lo) + ", " + num(hi) + "]";
}

// ---------------------------------------------------------------------------

Outcome validator(const fs::path& root) {
    auto code_of = [&](std::vector<double> edges, double C) -> std::string {
        RunConfig c = generate_fixture(FixtureKind::free);
        c.edges = std::move(edges);
        c.C = C;
        c.divisor_random = true;
        c.out_dir = (root / "validator").string();
        try {
            run_pipeline(c, Stage::validate);
            return "accepted";
        } catch (const Error& e) {
            return std::string(to_string(e.code()));
        }
    };
    bool ok = true;
    std::string accepted = "accepted";
    for (int n = 1; n <= 10; ++n) {
        const std::string got = code_of(generate_fixture(FixtureKind::periodic_like, n).edges, 1.0);
        if (got != "accepted") accepted = "periodic_like_" + std::to_string(n) + "=" + got, ok = false;
    }
    const std::string a = code_of({0.0, 2.0, 1.0, 3.0, 4.0}, 1.0);
    const std::string b = code_of({0.0, 1.0, 1.0, 2.0, 3.0}, 1.0);
    const std::string c = code_of({0.0, 1.0, 1.2, 1.5, 1.7}, 1.0);
    ok = ok && a == "NonMonotonic" && b == "EmptyGap" && c == "GrowthFailure";
    return {ok, "periodic_like 1..10 " + accepted + "; non-monotone " + a + ", empty gap " + b + ", growth " + c};
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

Outcome determinism(const fs::path& root) {
    int compared = 0, differing = 0, csvs = 0;
    for (const auto& [name, config] : {std::pair{"one_gap", generate_fixture(FixtureKind::one_gap)},
                                       std::pair{"random_3", generate_fixture(FixtureKind::random, 3, 7)}}) {
        RunConfig c = config;
        const fs::path a = root / (std::string(name) + "_a"), b = root / (std::string(name) + "_b");
        c.out_dir = a.string();
        run_pipeline(c, Stage::all);
        c.out_dir = b.string();
        run_pipeline(c, Stage::all);
        if (!fs::exists(a / "summary.json")) ++differing;
        for (const auto& entry : fs::directory_iterator(a)) {
            const fs::path other = b / entry.path().filename();
            ++compared;
            if (entry.path().extension() == ".csv") ++csvs;
            if (!fs::exists(other) || slurp(entry.path()) != slurp(other)) ++differing;
        }
    }
    return {differing == 0 && csvs > 0, std::to_string(compared) + " files compared (" + std::to_string(csvs) +
                                            " CSVs), " + std::to_string(differing) + " differ"};
}

} // namespace

int main() {
    const fs::path root = fs::temp_directory_path() / "levitan_acceptance";
    fs::remove_all(root);
    std::vector<std::pair<std::string, std::function<Outcome()>>> criteria;
    std::vector<Run> runs;
    const std::vector<std::string> all_names = {"free", "one_gap", "periodic_like_2", "periodic_like_4", "random_3"};
    const std::vector<std::string> small_n = {"free", "one_gap"};

    criteria.emplace_back("free-background closed form", free_closed_form);
    criteria.emplace_back("product vs ODE representation", cross_representation);
    criteria.emplace_back("Wronskian identity", wronskian);
    criteria.emplace_back("Green function sign", green_sign);
    criteria.emplace_back("D diagonal", d_diagonal);
    criteria.emplace_back("D symmetry", d_symmetry);
    criteria.emplace_back("kernel diagonal order", [&] {
        if (runs.empty()) runs = verification_runs(root);
        const std::vector<std::string> keys = {"K_diagonal_order_plus", "K_diagonal_order_minus"};
        return from_runs(runs, all_names, keys, "order range " + range_of(runs, all_names, keys) + " in [1.7, 2.3]",
                         300.0);
    });
    criteria.emplace_back("kernel vs direct Jost solution", [&] {
        const std::vector<std::string> keys = {"oracle_equivalence"};
        return from_runs(runs, small_n, keys, "max rel diff " + range_of(runs, small_n, keys) + " (<= 5e-3) on N=0,1",
                         300.0);
    });
    criteria.emplace_back("Schrodinger residual order", [&] {
        const std::vector<std::string> keys = {"schrodinger_residual_ratio"};
        return from_runs(runs, small_n, keys, "ratio range " + range_of(runs, small_n, keys) + " in [3.5, 4.5]");
    });
    criteria.emplace_back("kernel bound", [&] {
        const std::vector<std::string> keys = {"kernel_bound_plus", "kernel_bound_minus", "kernel_l2_plus",
                                               "kernel_l2_minus", "kernel_C_monotone_plus",
                                               "kernel_C_monotone_minus"};
        return from_runs(runs, all_names, keys,
                         "bound ratio range " + range_of(runs, all_names, {"kernel_bound_plus", "kernel_bound_minus"}) +
                             ", L2 ratio range " + range_of(runs, all_names, {"kernel_l2_plus", "kernel_l2_minus"}) +
                             " (<= 1) on 5 fixtures");
    });
    criteria.emplace_back("structural identity", structural_identity);
    criteria.emplace_back("divisor confinement and reversibility", [&] {
        const std::vector<std::string> keys = {"divisor_confinement", "flow_reversibility"};
        return from_runs(runs, all_names, keys,
                         "reversibility range " + range_of(runs, all_names, {"flow_reversibility"}) +
                             " (<= 1e-11) on 5 fixtures over [-20, 20]");
    });
    criteria.emplace_back("hypothesis validator", [&] { return validator(root); });
    criteria.emplace_back("determinism", [&] { return determinism(root); });

    int failed = 0;
    for (std::size_t i = 0; i < criteria.size(); ++i) {
        Outcome o;
        try {
            o = criteria[i].second();
        } catch (const Error& e) {
            o = {false, std::string("error ") + std::string(to_string(e.code())) + ": " + e.what()};
        }
        failed += o.pass ? 0 : 1;
        std::printf("%s %2zu %-40s %s\n", o.pass ? "PASS" : "FAIL", i + 1, criteria[i].first.c_str(), o.detail.c_str());
        std::fflush(stdout);
    }
    fs::remove_all(root);
    std::printf("%d of %zu criteria passed\n", static_cast<int>(criteria.size()) - failed, criteria.size());
    return failed == 0 ? 0 : 1;
}
