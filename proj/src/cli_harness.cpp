#include "levitan/cli_harness.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

#include "json.hpp"

#include "levitan/fixtures.hpp"

namespace levitan {

using nlohmann::json;

namespace {

[[noreturn]] void bad_config(const std::string& what) { fail(ErrorCode::invalid_config, what); }

void require_keys(const json& j, std::initializer_list<const char*> allowed, const std::string& where) {
    if (!j.is_object()) bad_config(where + " must be an object");
    for (const auto& item : j.items()) {
        bool known = false;
        for (const char* k : allowed) known = known || item.key() == k;
        if (!known) bad_config("unknown key \"" + item.key() + "\" in " + where);
    }
}

double number(const json& j, const char* key, double fallback, const std::string& where) {
    if (!j.contains(key)) return fallback;
    if (!j[key].is_number()) bad_config(std::string(key) + " in " + where + " must be a number");
    return j[key].get<double>();
}

std::vector<double> numbers(const json& j, const char* key, const std::string& where) {
    if (!j.contains(key)) return {};
    if (!j[key].is_array()) bad_config(std::string(key) + " in " + where + " must be an array");
    std::vector<double> out;
    for (const auto& v : j[key]) {
        if (!v.is_number()) bad_config(std::string(key) + " in " + where + " must hold numbers");
        out.push_back(v.get<double>());
    }
    return out;
}

json point_to_json(const SpectralPoint& p) {
    return json{{"re", p.z.real()}, {"im", p.z.imag()}, {"side", std::string(to_string(p.side))}};
}

SpectralPoint point_from_json(const json& j) {
    require_keys(j, {"re", "im", "side"}, "probe point");
    const double re = number(j, "re", 0.0, "probe point"), im = number(j, "im", 0.0, "probe point");
    const std::string side = j.value("side", std::string("off_axis"));
    if (side == "upper") {
        if (im != 0.0) bad_config("side \"upper\" needs im = 0");
        return SpectralPoint::upper(re);
    }
    if (side == "lower") {
        if (im != 0.0) bad_config("side \"lower\" needs im = 0");
        return SpectralPoint::lower(re);
    }
    if (side != "off_axis") bad_config("side must be upper, lower or off_axis");
    return SpectralPoint::at(cplx(re, im));
}

std::vector<SpectralPoint> points(const json& j, const char* key) {
    std::vector<SpectralPoint> out;
    if (!j.contains(key)) return out;
    if (!j[key].is_array()) bad_config(std::string(key) + " must be an array");
    for (const auto& p : j[key]) out.push_back(point_from_json(p));
    return out;
}

json band_json(const std::vector<double>& edges, double l, double C, double alpha) {
    return json{{"edges", edges}, {"l", l}, {"C", C}, {"alpha", alpha}};
}

} // namespace

// ---------------------------------------------------------------------------
// band document

std::string band_to_json(const BandStructure& band) {
    const auto e = band.edges();
    return band_json({e.begin(), e.end()}, band.hyp_l(), band.hyp_C(), band.hyp_alpha()).dump(2) + "\n";
}

BandStructure band_from_json(const std::string& text) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::exception& e) {
        fail(ErrorCode::malformed_band, std::string("band document is not JSON: ") + e.what());
    }
    if (!j.is_object() || !j.contains("edges") || !j["edges"].is_array())
        fail(ErrorCode::malformed_band, "band document needs an \"edges\" array");
    std::vector<double> edges;
    for (const auto& v : j["edges"]) {
        if (!v.is_number()) fail(ErrorCode::malformed_band, "edges must be numbers");
        edges.push_back(v.get<double>());
    }
    auto param = [&](const char* key, double fallback) {
        if (!j.contains(key)) return fallback;
        if (!j[key].is_number()) fail(ErrorCode::malformed_band, std::string(key) + " must be a number");
        return j[key].get<double>();
    };
    return BandStructure(edges, param("l", 2.0), param("C", 1.0), param("alpha", 1.0));
}

// ---------------------------------------------------------------------------
// run configuration

PerturbationProfile PerturbationSpec::build() const {
    if (kind == "zero") return PerturbationProfile::zero();
    if (kind == "gaussian") return PerturbationProfile::gaussian_bump(amplitude, center, width);
    if (kind == "poly") return PerturbationProfile::compact_poly(coeffs, a, b);
    if (kind == "table") return PerturbationProfile::table(xs, qs);
    bad_config("perturbation kind must be zero, gaussian, poly or table");
}

BandStructure RunConfig::band() const { return BandStructure(edges, l, C, alpha); }

DirichletDivisor RunConfig::make_divisor(const BandStructure& b) const {
    if (divisor_random) return random_divisor(b, seed);
    return DirichletDivisor(b, divisor);
}

RunConfig config_from_json(const std::string& text, const std::filesystem::path& base_dir) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::exception& e) {
        bad_config(std::string("config is not JSON: ") + e.what());
    }
    require_keys(j, {"name", "band", "band_file", "divisor", "perturbation", "flow", "kernel", "probes", "seed", "out"},
                 "config");
    RunConfig c;
    if (j.contains("name")) c.name = j["name"].get<std::string>();

    if (j.contains("band") == j.contains("band_file")) bad_config("config needs exactly one of band, band_file");
    std::string band_text;
    if (j.contains("band_file")) {
        const std::filesystem::path p = base_dir / j["band_file"].get<std::string>();
        std::ifstream in(p);
        if (!in) bad_config("cannot read band file " + p.string());
        std::stringstream ss;
        ss << in.rdbuf();
        band_text = ss.str();
    } else {
        band_text = j["band"].dump();
    }
    const BandStructure band = band_from_json(band_text);
    c.edges.assign(band.edges().begin(), band.edges().end());
    c.l = band.hyp_l();
    c.C = band.hyp_C();
    c.alpha = band.hyp_alpha();

    if (j.contains("divisor")) {
        const json& d = j["divisor"];
        require_keys(d, {"points", "random"}, "divisor");
        c.divisor_random = d.value("random", false);
        if (d.contains("points")) {
            if (c.divisor_random) bad_config("divisor cannot be both random and explicit");
            for (const auto& p : d["points"]) {
                require_keys(p, {"mu", "sigma"}, "divisor point");
                if (!p.contains("mu") || !p.contains("sigma")) bad_config("divisor point needs mu and sigma");
                c.divisor.push_back({p["mu"].get<double>(), p["sigma"].get<int>()});
            }
        }
    }
    if (!c.divisor_random && static_cast<int>(c.divisor.size()) != band.gap_count())
        bad_config("divisor needs one point per gap or \"random\": true");

    if (j.contains("perturbation")) {
        const json& q = j["perturbation"];
        require_keys(q, {"kind", "amplitude", "center", "width", "coeffs", "a", "b", "x", "q"}, "perturbation");
        PerturbationSpec& s = c.perturbation;
        s.kind = q.value("kind", std::string("zero"));
        s.amplitude = number(q, "amplitude", s.amplitude, "perturbation");
        s.center = number(q, "center", s.center, "perturbation");
        s.width = number(q, "width", s.width, "perturbation");
        s.coeffs = numbers(q, "coeffs", "perturbation");
        s.a = number(q, "a", s.a, "perturbation");
        s.b = number(q, "b", s.b, "perturbation");
        s.xs = numbers(q, "x", "perturbation");
        s.qs = numbers(q, "q", "perturbation");
        s.build(); // validate early
    }
    if (j.contains("flow")) {
        const json& f = j["flow"];
        require_keys(f, {"x_min", "x_max", "step", "tol"}, "flow");
        c.flow_x_min = number(f, "x_min", c.flow_x_min, "flow");
        c.flow_x_max = number(f, "x_max", c.flow_x_max, "flow");
        c.flow_step = number(f, "step", c.flow_step, "flow");
        c.flow_tol = number(f, "tol", c.flow_tol, "flow");
    }
    if (j.contains("kernel")) {
        const json& k = j["kernel"];
        require_keys(k, {"x0", "h", "x_max", "tol", "max_iter"}, "kernel");
        c.kernel_x0 = number(k, "x0", c.kernel_x0, "kernel");
        c.kernel_h = number(k, "h", c.kernel_h, "kernel");
        c.kernel_x_max = number(k, "x_max", c.kernel_x_max, "kernel");
        c.kernel_tol = number(k, "tol", c.kernel_tol, "kernel");
        c.kernel_max_iter = static_cast<int>(number(k, "max_iter", c.kernel_max_iter, "kernel"));
    }
    if (!(c.flow_step > 0.0) || !(c.flow_tol > 0.0) || !(c.flow_x_min < 0.0) || !(c.flow_x_max > 0.0))
        bad_config("flow needs step > 0, tol > 0 and x_min < 0 < x_max");
    if (!(c.kernel_h > 0.0) || !(c.kernel_tol > 0.0) || c.kernel_max_iter < 1)
        bad_config("kernel needs h > 0, tol > 0 and max_iter >= 1");
    if (j.contains("probes")) {
        const json& p = j["probes"];
        require_keys(p, {"weyl_z", "jost_z", "x"}, "probes");
        c.weyl_z = points(p, "weyl_z");
        c.jost_z = points(p, "jost_z");
        c.probe_x = numbers(p, "x", "probes");
    }
    if (j.contains("seed")) {
        if (!j["seed"].is_number_unsigned()) bad_config("seed must be a non-negative integer");
        c.seed = j["seed"].get<std::uint64_t>();
    }
    if (j.contains("out")) c.out_dir = j["out"].get<std::string>();
    return c;
}

RunConfig load_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) bad_config("cannot read config " + path.string());
    std::stringstream ss;
    ss << in.rdbuf();
    return config_from_json(ss.str(), path.parent_path());
}

std::string config_to_json(const RunConfig& c) {
    json j;
    j["name"] = c.name;
    j["band"] = band_json(c.edges, c.l, c.C, c.alpha);
    if (c.divisor_random) {
        j["divisor"] = json{{"random", true}};
    } else {
        json pts = json::array();
        for (const auto& p : c.divisor) pts.push_back(json{{"mu", p.mu}, {"sigma", p.sigma}});
        j["divisor"] = json{{"points", pts}};
    }
    const PerturbationSpec& s = c.perturbation;
    json q{{"kind", s.kind}};
    if (s.kind == "gaussian") {
        q["amplitude"] = s.amplitude;
        q["center"] = s.center;
        q["width"] = s.width;
    } else if (s.kind == "poly") {
        q["coeffs"] = s.coeffs;
        q["a"] = s.a;
        q["b"] = s.b;
    } else if (s.kind == "table") {
        q["x"] = s.xs;
        q["q"] = s.qs;
    }
    j["perturbation"] = q;
    j["flow"] = json{{"x_min", c.flow_x_min}, {"x_max", c.flow_x_max}, {"step", c.flow_step}, {"tol", c.flow_tol}};
    json k{{"x0", c.kernel_x0}, {"h", c.kernel_h}, {"tol", c.kernel_tol}, {"max_iter", c.kernel_max_iter}};
    if (std::isfinite(c.kernel_x_max)) k["x_max"] = c.kernel_x_max;
    j["kernel"] = k;
    json probes{{"x", c.probe_x}};
    json wz = json::array(), jz = json::array();
    for (const auto& p : c.weyl_z) wz.push_back(point_to_json(p));
    for (const auto& p : c.jost_z) jz.push_back(point_to_json(p));
    probes["weyl_z"] = wz;
    probes["jost_z"] = jz;
    j["probes"] = probes;
    j["seed"] = c.seed;
    j["out"] = c.out_dir;
    return j.dump(2) + "\n";
}

std::vector<SpectralPoint> default_weyl_probes(const BandStructure& band) {
    std::vector<SpectralPoint> out;
    const auto e = band.edges();
    for (int j = 0; j < band.gap_count(); ++j) out.push_back(SpectralPoint::upper(0.5 * (e[2 * j] + e[2 * j + 1])));
    out.push_back(SpectralPoint::upper(band.top() + 2.0));
    out.push_back(SpectralPoint::at(cplx(band.ground() - 1.0, 0.0)));
    out.push_back(SpectralPoint::at(cplx(band.top() + 1.0, 1.0)));
    return out;
}

RunConfig generate_fixture(FixtureKind kind, int n, std::uint64_t seed) {
    if (n < 0 || n > 10) bad_config("fixture size must lie in [0, 10]");
    Fixture f = [&] {
        switch (kind) {
        case FixtureKind::free: return free_fixture();
        case FixtureKind::one_gap: return one_gap_fixture();
        case FixtureKind::periodic_like: return periodic_like_fixture(n);
        default: return random_fixture(n, seed);
        }
    }();
    RunConfig c;
    c.name = f.name;
    c.edges.assign(f.band.edges().begin(), f.band.edges().end());
    c.l = f.band.hyp_l();
    c.C = f.band.hyp_C();
    c.alpha = f.band.hyp_alpha();
    for (const auto& p : f.divisor.entries()) c.divisor.push_back(p);
    c.perturbation.kind = "gaussian";
    c.perturbation.amplitude = 0.5;
    c.perturbation.center = 0.3;
    c.perturbation.width = 0.6;
    c.weyl_z = default_weyl_probes(f.band);
    c.jost_z = {SpectralPoint::at(cplx(f.band.ground() - 1.0, 0.0)),
                SpectralPoint::at(cplx(f.band.top() + 1.0, 1.0))};
    for (int i = -3; i <= 3; ++i) c.probe_x.push_back(i);
    c.seed = seed;
    c.out_dir = "out_" + f.name;
    return c;
}

// ---------------------------------------------------------------------------
// verification summary

bool VerificationSummary::pass() const {
    for (const auto& [name, c] : checks)
        if (!c.pass) return false;
    return true;
}

void VerificationSummary::add_at_most(const std::string& name, double value, double bound) {
    checks[name] = Check{value, {bound}, std::isfinite(value) && value <= bound};
}

void VerificationSummary::add_in_range(const std::string& name, double value, double lo, double hi) {
    checks[name] = Check{value, {lo, hi}, std::isfinite(value) && value >= lo && value <= hi};
}

void VerificationSummary::add_above(const std::string& name, double value, double bound) {
    checks[name] = Check{value, {bound}, std::isfinite(value) && value > bound};
}

std::string VerificationSummary::to_json() const {
    json out;
    json cs = json::object();
    for (const auto& [name, c] : checks) {
        json b = c.bound.size() == 1 ? json(c.bound[0]) : json(c.bound);
        cs[name] = json{{"value", c.value}, {"bound", b}, {"pass", c.pass}};
    }
    out["checks"] = cs;
    out["pass"] = pass();
    return out.dump(2) + "\n";
}

std::string error_json(const Error& error) {
    return json{{"error", {{"code", std::string(to_string(error.code()))}, {"message", error.what()}}}}.dump() + "\n";
}

Stage stage_from_string(const std::string& name) {
    static const std::map<std::string, Stage> names{
        {"validate", Stage::validate}, {"flow", Stage::flow},     {"potential", Stage::potential},
        {"weyl", Stage::weyl},         {"kernel", Stage::kernel}, {"jost", Stage::jost},
        {"verify", Stage::verify},     {"all", Stage::all}};
    const auto it = names.find(name);
    if (it == names.end()) bad_config("unknown stage " + name);
    return it->second;
}

} // namespace levitan
