// Command-line front end: levitan <stage> CONFIG [--out DIR] [--seed U64] [--tol F64]
//                         levitan fixture KIND [--n N] [--seed U64] [--out FILE]

#include <cstdint>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"

#include "levitan/cli_harness.hpp"

namespace {

int report_error(const levitan::Error& e) {
    std::cout << levitan::error_json(e);
    return 2;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Transformation operators on finite-gap backgrounds"};
    app.require_subcommand(1);

    std::string config_path, out_dir;
    std::optional<std::uint64_t> seed;
    std::optional<double> tol;
    const char* stages[] = {"validate", "flow", "potential", "weyl", "kernel", "jost", "verify", "all"};
    const char* help[] = {"check the band structure and growth hypothesis",
                          "integrate the divisor flow",
                          "reconstruct the background potential",
                          "Weyl solutions and their identities",
                          "solve for the transformation kernels",
                          "Jost solutions by both routes",
                          "run every check and write only the summary",
                          "run every stage, write all artifacts and plot scripts"};
    for (int i = 0; i < 8; ++i) {
        CLI::App* sub = app.add_subcommand(stages[i], help[i]);
        sub->add_option("config", config_path, "run configuration JSON")->required()->check(CLI::ExistingFile);
        sub->add_option("--out", out_dir, "output directory (overrides the config)");
        sub->add_option("--seed", seed, "seed for random divisor draws and probes");
        sub->add_option("--tol", tol, "kernel solver tolerance");
    }

    std::string kind;
    int n = 1;
    std::uint64_t fixture_seed = 1;
    std::string fixture_out;
    CLI::App* fix = app.add_subcommand("fixture", "print a fixture run configuration");
    fix->add_option("kind", kind, "free | one_gap | periodic_like | random")
        ->required()
        ->check(CLI::IsMember({"free", "one_gap", "periodic_like", "random"}));
    fix->add_option("--n", n, "number of gaps for periodic_like and random");
    fix->add_option("--seed", fixture_seed, "seed for the random fixture");
    fix->add_option("--out", fixture_out, "write to this file instead of stdout");

    CLI11_PARSE(app, argc, argv);

    try {
        if (fix->parsed()) {
            const levitan::FixtureKind k = kind == "free"            ? levitan::FixtureKind::free
                                           : kind == "one_gap"       ? levitan::FixtureKind::one_gap
                                           : kind == "periodic_like" ? levitan::FixtureKind::periodic_like
                                                                     : levitan::FixtureKind::random;
            const std::string text = levitan::config_to_json(levitan::generate_fixture(k, n, fixture_seed));
            if (fixture_out.empty()) {
                std::cout << text;
            } else {
                std::ofstream out(fixture_out, std::ios::binary);
                if (!out) levitan::fail(levitan::ErrorCode::invalid_config, "cannot write " + fixture_out);
                out << text;
            }
            return 0;
        }
        const std::string stage_name = app.get_subcommands().front()->get_name();
        levitan::RunConfig config = levitan::load_config(config_path);
        if (!out_dir.empty()) config.out_dir = out_dir;
        if (seed) config.seed = *seed;
        if (tol) config.kernel_tol = *tol;
        const levitan::VerificationSummary summary =
            levitan::run_pipeline(config, levitan::stage_from_string(stage_name));
        std::cout << summary.to_json();
        return summary.pass() ? 0 : 1;
    } catch (const levitan::Error& e) {
        return report_error(e);
    } catch (const std::exception& e) {
        return report_error(levitan::Error(levitan::ErrorCode::invalid_config, e.what()));
    }
}
