#include "levitan/cli_harness.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <memory>
#include <random>
#include <sstream>

#include "levitan/detail/format.hpp"

namespace levitan {

namespace {

using detail::fmt17;
namespace fs = std::filesystem;

bool needs(Stage requested, Stage stage) {
    if (requested == Stage::verify || requested == Stage::all) return true;
    switch (stage) {
    case Stage::validate: return true;
    case Stage::flow: return requested != Stage::validate;
    case Stage::jost: return requested == Stage::jost;
    case Stage::kernel: return requested == Stage::kernel || requested == Stage::jost;
    default: return requested == stage;
    }
}

class Writer {
public:
    Writer(const RunConfig& c, Stage stage) : dir_(c.out_dir), artifacts_(stage != Stage::verify) {
        fs::create_directories(dir_);
    }
    bool artifacts() const { return artifacts_; }
    void write(const std::string& name, const std::string& text) const {
        std::ofstream out(dir_ / name, std::ios::binary);
        if (!out) fail(ErrorCode::invalid_config, "cannot write " + (dir_ / name).string());
        out << text;
    }
    const fs::path& dir() const { return dir_; }

private:
    fs::path dir_;
    bool artifacts_;
};

std::string sign_tag(WeylSign s) { return s == WeylSign::plus ? "plus" : "minus"; }

double rel(cplx a, cplx b) { return std::abs(a - b) / std::abs(b); }

struct KernelSet {
    // kernels at 2h, h and h/2
    std::vector<KernelGrid> grids;
};

KernelSet solve_set(const WeylContext& ctx, const PerturbationProfile& q, WeylSign sign, const RunConfig& c) {
    KernelSet set;
    for (double f : {2.0, 1.0, 0.5}) {
        KernelGridParams gp;
        gp.x0 = c.kernel_x0;
        gp.h = c.kernel_h * f;
        gp.x_max_override = c.kernel_x_max;
        set.grids.push_back(solve_kernel(ctx, q, sign, gp, c.kernel_tol, c.kernel_max_iter));
    }
    return set;
}

void weyl_checks(const WeylContext& ctx, const RunConfig& c, VerificationSummary& s, const Writer& w) {
    const BandStructure& band = ctx.band();
    const std::vector<SpectralPoint> probes = c.weyl_z.empty() ? default_weyl_probes(band) : c.weyl_z;
    std::vector<double> xs = c.probe_x;
    if (xs.empty())
        for (int i = -3; i <= 3; ++i) xs.push_back(i);
    double green_min = std::numeric_limits<double>::infinity();
    double wr = 0.0, indep = 0.0, cross = 0.0, structural = 0.0;
    for (const SpectralPoint& p : probes) {
        const cplx g = eval_green(ctx, p);
        if (p.side == Side::upper) green_min = std::min(green_min, (g / cplx(0.0, 1.0)).real());
        if (band.distance_to_gaps(p.z) < ctx.eps_gap()) continue;
        double lo = std::numeric_limits<double>::infinity(), hi = -lo;
        for (double x : xs) {
            const double r = wronskian_check(ctx, p, x) * std::abs(g);
            wr = std::max(wr, r);
            lo = std::min(lo, r);
            hi = std::max(hi, r);
            for (WeylSign sg : {WeylSign::plus, WeylSign::minus})
                cross = std::max(cross, rel(eval_psi_product(ctx, p, x, sg), eval_psi_ode(ctx, p, x, sg)));
            const StructuralResidual sr = structural_identity_check(ctx, p, x);
            structural = std::max(structural, sr.residual / sr.scale);
        }
        indep = std::max(indep, hi - lo);
    }
    if (std::isfinite(green_min)) s.add_above("green_sign", green_min, 0.0);
    s.add_at_most("wronskian", wr, 1e-6);
    s.add_at_most("wronskian_probe_independence", indep, 1e-8);
    s.add_at_most("cross_representation", cross, 1e-6);
    s.add_at_most("structural_identity", structural, 1e-5);
    if (w.artifacts()) {
        std::ostringstream os;
        write_weyl_probe_csv(os, ctx, probes, xs);
        w.write("weyl_probe.csv", os.str());
    }
}

void residue_checks(const WeylContext& ctx, const RunConfig& c, double U, VerificationSummary& s) {
    std::mt19937_64 rng(c.seed);
    std::uniform_real_distribution<double> u(c.kernel_x0, U);
    double diag = 0.0, sym = 0.0, sup = 0.0;
    for (int t = 0; t < 200; ++t) {
        const double x = u(rng), y = u(rng), r = u(rng), z = u(rng);
        for (WeylSign sg : {WeylSign::plus, WeylSign::minus}) {
            diag = std::max(diag, std::abs(eval_D(ctx, x, y, y, x, sg) + 0.25));
            const double d = eval_D(ctx, x, y, r, z, sg);
            sym = std::max(sym, std::abs(d - eval_D(ctx, y, x, z, r, sg)));
            sup = std::max(sup, std::abs(d));
        }
    }
    s.add_at_most("D_diagonal", diag, 1e-8);
    s.add_at_most("D_symmetry", sym, 1e-10);
    s.add_at_most("D_bounded", sup, D_bound(ctx.band()));
}

void kernel_checks(const WeylContext& ctx, const PerturbationProfile& q, WeylSign sign, const KernelSet& set,
                   const RunConfig& c, VerificationSummary& s, const Writer& w) {
    const std::string tag = "_" + sign_tag(sign);
    const KernelGrid& g = set.grids[1];
    double delta = 0.0;
    for (const auto& k : set.grids) delta = std::max(delta, k.final_delta);
    s.add_at_most("kernel_convergence" + tag, delta, c.kernel_tol);
    const PerturbationProfile qf = sign == WeylSign::plus ? q : q.mirrored();
    if (q.is_zero()) {
        double m = 0.0;
        for (std::size_t i = 0; i <= g.n(); ++i)
            for (std::size_t j = 0; j <= i; ++j) m = std::max(m, std::abs(g.node(i, j)));
        s.add_at_most("K_trivial" + tag, m, 0.0);
    } else {
        std::vector<double> err;
        for (const auto& k : set.grids) {
            double e = 0.0;
            for (std::size_t i = 0; i <= k.n(); ++i)
                e = std::max(e, std::abs(k.node(i, 0) - 0.5 * qf.tail_integral(k.x0() + i * k.h())));
            err.push_back(e);
        }
        const double o1 = std::log2(err[0] / err[1]), o2 = std::log2(err[1] / err[2]);
        const double worst = std::abs(o1 - 2.0) > std::abs(o2 - 2.0) ? o1 : o2;
        s.add_in_range("K_diagonal_order" + tag, worst, 1.7, 2.3);
    }
    const KernelBoundReport rep = kernel_bound_check(ctx, g, q);
    s.checks["kernel_bound" + tag] = Check{rep.max_ratio, {1.0}, rep.violations.empty() && rep.max_ratio <= 1.0};
    s.add_at_most("kernel_l2" + tag, rep.l2_max_ratio, 1.0);
    s.add_at_most("kernel_C_monotone" + tag, rep.C_monotone ? 0.0 : 1.0, 0.0);
    if (w.artifacts()) {
        std::ostringstream csv, meta;
        write_kernel_csv(csv, g);
        write_kernel_meta_json(meta, g);
        w.write("kernel_" + sign_tag(sign) + ".csv", csv.str());
        w.write("kernel_" + sign_tag(sign) + "_meta.json", meta.str());
    }
}

void jost_checks(const WeylContext& ctx, const PerturbationProfile& q, const KernelSet (&sets)[2],
                 const RunConfig& c, VerificationSummary& s, const Writer& w) {
    const BandStructure& band = ctx.band();
    std::vector<SpectralPoint> probes = c.jost_z;
    if (probes.empty())
        probes = {SpectralPoint::at(cplx(band.ground() - 1.0, 0.0)), SpectralPoint::at(cplx(band.top() + 1.0, 1.0))};
    std::vector<double> xs = c.probe_x;
    if (xs.empty())
        for (int i = -3; i <= 3; ++i) xs.push_back(i);
    const double x_lo = *std::min_element(xs.begin(), xs.end()), x_hi = *std::max_element(xs.begin(), xs.end());
    double oracle = 0.0, trivial = 0.0, ratio_worst = 4.0;
    std::ostringstream csv;
    csv << "re_z,im_z,side,sign,x,re_phi_kernel,im_phi_kernel,re_phi_direct,im_phi_direct,re_psi,im_psi\n";
    for (const SpectralPoint& p : probes) {
        const WeylSolutionTable table(ctx, p);
        for (int si = 0; si < 2; ++si) {
            const WeylSign sign = si == 0 ? WeylSign::plus : WeylSign::minus;
            const bool plus = sign == WeylSign::plus;
            const KernelGrid& g = sets[si].grids[1];
            const JostDirectSolution direct = jost_direct_solve(table, q, sign, plus ? x_lo : -x_hi);
            for (double x : xs) {
                const cplx a = jost_from_kernel(table, g, x), b = direct.at(x), psi = table.psi(x, sign);
                oracle = std::max(oracle, std::abs(a - b) / std::abs(psi));
                if (q.is_zero()) trivial = std::max(trivial, std::abs(a - psi));
                csv << fmt17(p.z.real()) << ',' << fmt17(p.z.imag()) << ',' << to_string(p.side) << ','
                    << (plus ? 1 : -1) << ',' << fmt17(x) << ',' << fmt17(a.real()) << ',' << fmt17(a.imag()) << ','
                    << fmt17(b.real()) << ',' << fmt17(b.imag()) << ',' << fmt17(psi.real()) << ','
                    << fmt17(psi.imag()) << '\n';
            }
            // residual at grid nodes with the difference step equal to the kernel step
            std::vector<double> res;
            for (const KernelGrid& k : sets[si].grids) {
                auto phi = [&](double x) { return jost_from_kernel(table, k, x); };
                res.push_back(schrodinger_residual(ctx, q, phi, p, xs, k.h()));
            }
            for (int m = 0; m < 2; ++m) {
                const double r = res[m] / res[m + 1];
                if (!(std::abs(r - 4.0) <= std::abs(ratio_worst - 4.0))) ratio_worst = r;
            }
        }
    }
    s.add_at_most("oracle_equivalence", oracle, 5e-3);
    if (q.is_zero()) s.add_at_most("jost_trivial", trivial, 0.0);
    s.add_in_range("schrodinger_residual_ratio", ratio_worst, 3.5, 4.5);
    if (w.artifacts()) w.write("jost.csv", csv.str());
}

} // namespace

VerificationSummary run_pipeline(const RunConfig& c, Stage stage) {
    VerificationSummary s;
    const Writer w(c, stage);

    // validate
    const BandStructure band = c.band();
    const HypothesisReport hyp = validate_band_structure(band.edges(), band.hyp_l(), band.hyp_C(), band.hyp_alpha());
    require_hypothesis(hyp);
    double failing = 0.0;
    for (bool ok : hyp.growth_ok) failing += ok ? 0.0 : 1.0;
    s.add_at_most("hypothesis_growth", failing, 0.0);
    if (w.artifacts()) w.write("band.json", band_to_json(band));

    if (needs(stage, Stage::flow)) {
        const DirichletDivisor divisor = c.make_divisor(band);
        auto tr = std::make_shared<DivisorTrajectory>(
            integrate_dubrovin(band, divisor, c.flow_x_min, c.flow_x_max, c.flow_step, c.flow_tol));
        double out = 0.0;
        for (std::size_t i = 0; i < tr->size(); ++i)
            for (int j = 1; j <= band.gap_count(); ++j) {
                const double m = mu_from_theta(band, j, tr->theta_at_node(j, i));
                out = std::max({out, band.gap_lower(j) - m, m - band.gap_upper(j)});
            }
        s.add_at_most("divisor_confinement", out, 0.0);
        // 0 -> x_max, then back to 0 from the endpoint divisor; trivially exact with no gaps
        double dev = 0.0;
        if (band.gap_count() > 0) {
            const double X = c.flow_x_max;
            std::vector<DivisorPoint> end;
            for (int j = 1; j <= band.gap_count(); ++j) end.push_back({tr->mu(j, X), tr->sigma(j, X)});
            const auto back =
                integrate_dubrovin(band, DirichletDivisor(band, end), -X, 0.0, c.flow_step, c.flow_tol);
            for (int j = 1; j <= band.gap_count(); ++j)
                dev = std::max(dev, std::abs(back.mu(j, -X) - divisor.entries()[j - 1].mu));
        }
        s.add_at_most("flow_reversibility", dev, 10.0 * c.flow_tol);
        if (w.artifacts()) {
            std::ostringstream os;
            write_trajectory_csv(os, *tr);
            w.write("trajectory.csv", os.str());
        }

        if (needs(stage, Stage::potential)) {
            const PotentialSamples ps = trace_potential(band, *tr);
            double excess = 0.0;
            std::ostringstream os;
            os << "x,p\n";
            for (std::size_t i = 0; i < ps.x.size(); ++i) {
                excess = std::max({excess, ps.lower_bound - ps.p[i], ps.p[i] - ps.upper_bound});
                os << fmt17(ps.x[i]) << ',' << fmt17(ps.p[i]) << '\n';
            }
            s.add_at_most("potential_bounds", excess, 0.0);
            if (w.artifacts()) w.write("potential.csv", os.str());
        }

        const WeylContext ctx(tr);
        if (needs(stage, Stage::weyl)) weyl_checks(ctx, c, s, w);

        if (needs(stage, Stage::kernel)) {
            const PerturbationProfile q = c.perturbation.build();
            KernelSet sets[2] = {solve_set(ctx, q, WeylSign::plus, c), solve_set(ctx, q, WeylSign::minus, c)};
            residue_checks(ctx, c, sets[0].grids[1].x_max(), s);
            kernel_checks(ctx, q, WeylSign::plus, sets[0], c, s, w);
            kernel_checks(ctx, q, WeylSign::minus, sets[1], c, s, w);
            if (needs(stage, Stage::jost)) jost_checks(ctx, q, sets, c, s, w);
        }
    }
    w.write("summary.json", s.to_json());
    if (stage == Stage::all) emit_plots(w.dir());
    return s;
}

// ---------------------------------------------------------------------------
// plots

void emit_plots(const fs::path& dir) {
    auto has = [&](const char* name) { return fs::exists(dir / name); };
    if (!has("trajectory.csv") && !has("potential.csv") && !has("kernel_plus.csv") && !has("jost.csv"))
        fail(ErrorCode::missing_artifact, "no CSV artifacts in " + dir.string());
    std::ostringstream gp;
    gp << "# gnuplot script; run from this directory\n"
       << "set datafile separator ','\n"
       << "set key autotitle columnhead\n"
       << "set terminal pngcairo size 900,600\n";
    if (has("potential.csv"))
        gp << "\nset output 'potential.png'\nset xlabel 'x'\nset ylabel 'p(x)'\n"
           << "plot 'potential.csv' using 1:2 with lines title 'p'\n";
    if (has("trajectory.csv")) {
        std::ifstream in(dir / "trajectory.csv");
        std::string header;
        std::getline(in, header);
        const int cols = static_cast<int>(std::count(header.begin(), header.end(), ',')) + 1;
        const int n = (cols - 2) / 3;
        if (n > 0) {
            std::vector<double> edges;
            if (has("band.json")) {
                std::ifstream b(dir / "band.json");
                std::stringstream ss;
                ss << b.rdbuf();
                const BandStructure band = band_from_json(ss.str());
                edges.assign(band.edges().begin(), band.edges().end());
            }
            gp << "\nset output 'divisor.png'\nset xlabel 'x'\nset ylabel 'mu_j(x)'\n";
            for (int j = 1; j <= n && 2 * j < static_cast<int>(edges.size()); ++j)
                gp << "set object " << j << " rect from graph 0, first " << fmt17(edges[2 * j - 1])
                   << " to graph 1, first " << fmt17(edges[2 * j]) << " fillcolor rgb '#dddddd' fillstyle solid behind\n";
            gp << "plot ";
            for (int j = 1; j <= n; ++j)
                gp << (j > 1 ? ", " : "") << "'trajectory.csv' using 1:" << (n + 1 + j) << " with lines title 'mu_"
                   << j << "'";
            gp << "\nunset object\n";
        }
    }
    for (const char* side : {"plus", "minus"}) {
        const std::string f = std::string("kernel_") + side + ".csv";
        if (!has(f.c_str())) continue;
        gp << "\nset output 'kernel_" << side << ".png'\nset xlabel 'x'\nset ylabel 'y'\n"
           << "plot '" << f << "' using 1:2:3 with points pointtype 5 pointsize 0.4 palette title 'K_" << side
           << "'\n";
    }
    if (has("jost.csv"))
        gp << "\nset output 'jost.png'\nset xlabel 'x'\nset ylabel '|phi|'\n"
           << "plot 'jost.csv' using ($4 > 0 ? $5 : 1/0):(sqrt($6**2 + $7**2)) with points title 'phi_+', "
           << "'jost.csv' using ($4 < 0 ? $5 : 1/0):(sqrt($6**2 + $7**2)) with points title 'phi_-'\n";
    std::ofstream out(dir / "plots.gp", std::ios::binary);
    out << gp.str();
}

} // namespace levitan
