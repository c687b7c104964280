#pragma once

// Run configuration, fixture generation, pipeline orchestration and artifact emission.

#include <cstdint>
#include <filesystem>
#include <limits>
#include <map>
#include <string>
#include <vector>

#include "levitan/error.hpp"
#include "levitan/transform_kernel.hpp"

namespace levitan {

// ---------------------------------------------------------------------------
// band document

/// {"edges":[...], "l":..., "C":..., "alpha":...}; doubles print in shortest round-trip form.
std::string band_to_json(const BandStructure& band);
/// Throws MalformedBand for a bad document and the BandStructure codes for bad edges.
BandStructure band_from_json(const std::string& text);

// ---------------------------------------------------------------------------
// run configuration

struct PerturbationSpec {
    std::string kind = "zero"; // zero | gaussian | poly | table
    double amplitude = 0.0, center = 0.0, width = 1.0;
    std::vector<double> coeffs;
    double a = 0.0, b = 1.0;
    std::vector<double> xs, qs;

    PerturbationProfile build() const;
};

struct RunConfig {
    std::string name = "run";
    std::vector<double> edges{0.0};
    double l = 2.0, C = 1.0, alpha = 1.0;
    /// explicit divisor points; used when divisor_random is false
    std::vector<DivisorPoint> divisor;
    bool divisor_random = false;
    PerturbationSpec perturbation;
    double flow_x_min = -20.0, flow_x_max = 20.0, flow_step = 0.005, flow_tol = 1e-12;
    double kernel_x0 = -6.0, kernel_h = 0.05;
    double kernel_x_max = std::numeric_limits<double>::quiet_NaN();
    double kernel_tol = 1e-12;
    int kernel_max_iter = 50;
    /// spectral probes for the Weyl checks and Jost comparisons
    std::vector<SpectralPoint> weyl_z;
    std::vector<SpectralPoint> jost_z;
    std::vector<double> probe_x;
    std::uint64_t seed = 1;
    std::string out_dir = "out";

    BandStructure band() const;
    /// Explicit points, or a seeded draw inside the gaps.
    DirichletDivisor make_divisor(const BandStructure& band) const;
};

/// Parses a config document. A "band_file" entry is resolved against base_dir.
/// Throws InvalidConfig (and band errors) on bad input.
RunConfig config_from_json(const std::string& text, const std::filesystem::path& base_dir = {});
RunConfig load_config(const std::filesystem::path& path);
std::string config_to_json(const RunConfig& config);

enum class FixtureKind { free, one_gap, periodic_like, random };

/// Config with the fixture band and divisor, a Gaussian bump and default probes.
/// Throws InvalidConfig for n outside [0, 10].
RunConfig generate_fixture(FixtureKind kind, int n = 1, std::uint64_t seed = 1);

/// Default probes: mid-band points (upper side), one point left of the spectrum and one off-axis point.
std::vector<SpectralPoint> default_weyl_probes(const BandStructure& band);

// ---------------------------------------------------------------------------
// verification summary

struct Check {
    double value = 0.0;
    /// upper bound, or [lo, hi] for a range, or a strict lower bound for positivity checks
    std::vector<double> bound;
    bool pass = false;
};

struct VerificationSummary {
    std::map<std::string, Check> checks;

    bool pass() const;
    /// {"checks": {name: {"value", "bound", "pass"}}, "pass": bool}
    std::string to_json() const;
    void add_at_most(const std::string& name, double value, double bound);
    void add_in_range(const std::string& name, double value, double lo, double hi);
    void add_above(const std::string& name, double value, double bound);
};

/// {"error": {"code": "...", "message": "..."}}
std::string error_json(const Error& error);

// ---------------------------------------------------------------------------
// pipeline

enum class Stage { validate, flow, potential, weyl, kernel, jost, verify, all };

Stage stage_from_string(const std::string& name);

/// Runs the stages needed for `stage`. Artifacts are written for the requested stage
/// (every stage for `all`); `verify` writes only the summary. The summary JSON is
/// written to out_dir for `verify` and `all`.
VerificationSummary run_pipeline(const RunConfig& config, Stage stage);

/// Gnuplot script plots.gp in dir for the CSVs present there. Throws MissingArtifact
/// when none of them exists.
void emit_plots(const std::filesystem::path& dir);

} // namespace levitan
