#include "commands.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <functional>
#include <map>
#include <random>

#include "prequant/errors.hpp"

namespace pqcli {

using pq::Expression;
using pq::ValidationError;

namespace {

void check_max(CommandOutput& out, const std::string& name, double value, double threshold, const Context& ctx) {
    const double t = threshold * ctx.tolerance_scale;
    out.checks.push_back({{"name", name}, {"value", value}, {"threshold", t}, {"comparison", "<="}, {"pass", value <= t}});
}

// Lower bounds are not scaled: they mark a failure that must stay visible.
void check_min(CommandOutput& out, const std::string& name, double value, double threshold) {
    out.checks.push_back(
        {{"name", name}, {"value", value}, {"threshold", threshold}, {"comparison", ">="}, {"pass", value >= threshold}});
}

json complex_json(pq::cplx z) { return json::array({z.real(), z.imag()}); }

double max_abs(const pq::PointCloud& pts, const Expression& e) {
    return pq::kernels::max_abs(pts, [&](std::span<const double> x) { return e.evaluate(x); });
}

// ------------------------------------------------------------------- flow

std::string xml_escape(const std::string& text) {
    std::string out;
    for (char c : text) {
        if (c == '&') out += "&amp;";
        else if (c == '<') out += "&lt;";
        else if (c == '>') out += "&gt;";
        else out += c;
    }
    return out;
}

std::string phase_portrait(const pq::Trajectory& tr, const std::string& title) {
    double lo[2] = {1e300, 1e300}, hi[2] = {-1e300, -1e300};
    for (std::size_t i = 0; i < tr.states.size(); ++i)
        for (int a = 0; a < 2; ++a) {
            lo[a] = std::min(lo[a], tr.states[i][a]);
            hi[a] = std::max(hi[a], tr.states[i][a]);
        }
    for (int a = 0; a < 2; ++a) {
        const double pad = 0.05 * std::max(hi[a] - lo[a], 1e-9);
        lo[a] -= pad;
        hi[a] += pad;
    }
    const double W = 480, H = 480, M = 40;
    auto X = [&](double v) { return M + (v - lo[0]) / (hi[0] - lo[0]) * (W - 2 * M); };
    auto Y = [&](double v) { return H - M - (v - lo[1]) / (hi[1] - lo[1]) * (H - 2 * M); };
    std::string svg;
    char buf[256];
    std::snprintf(buf, sizeof buf,
                  "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"%.0f\" height=\"%.0f\" viewBox=\"0 0 %.0f %.0f\">\n",
                  W, H, W, H);
    svg += buf;
    svg += "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    std::snprintf(buf, sizeof buf, "<rect x=\"%.0f\" y=\"%.0f\" width=\"%.0f\" height=\"%.0f\" fill=\"none\" stroke=\"#888\"/>\n",
                  M, M, W - 2 * M, H - 2 * M);
    svg += buf;
    svg += "<text x=\"" + std::to_string(static_cast<int>(W / 2)) + "\" y=\"24\" text-anchor=\"middle\" "
           "font-family=\"sans-serif\" font-size=\"14\">" + xml_escape(title) + "</text>\n";
    std::snprintf(buf, sizeof buf,
                  "<text x=\"%.0f\" y=\"%.0f\" font-family=\"sans-serif\" font-size=\"12\">x0 [%.3g, %.3g]</text>\n"
                  "<text x=\"12\" y=\"%.0f\" font-family=\"sans-serif\" font-size=\"12\">x1 [%.3g, %.3g]</text>\n",
                  M, H - 12, lo[0], hi[0], M - 8, lo[1], hi[1]);
    svg += buf;
    svg += "<polyline fill=\"none\" stroke=\"#1f4e9c\" stroke-width=\"1.2\" points=\"";
    for (std::size_t i = 0; i < tr.states.size(); ++i) {
        std::snprintf(buf, sizeof buf, "%s%.2f,%.2f", i ? " " : "", X(tr.states[i][0]), Y(tr.states[i][1]));
        svg += buf;
    }
    svg += "\"/>\n";
    std::snprintf(buf, sizeof buf, "<circle cx=\"%.2f\" cy=\"%.2f\" r=\"3\" fill=\"#c0392b\"/>\n", X(tr.states[0][0]),
                  Y(tr.states[0][1]));
    svg += buf;
    svg += "</svg>\n";
    return svg;
}

CommandOutput flow(const json& cfg, const Context& ctx) {
    Obj o(cfg, "config");
    const pq::SymplecticStructure omega = phase_space(o.at("phase_space"), o.path("phase_space"));
    const std::string hamiltonian = o.string("hamiltonian");
    const Expression H = omega.chart().parse(hamiltonian);
    const std::vector<double> x0 = to_numbers(o.at("x0"), o.path("x0"));
    const double T = o.number("T"), dt = o.number("dt");
    const std::string integrator = o.string("integrator", "auto");
    const std::size_t stride = o.count("record_stride", 1);
    const double drift_threshold = o.number("drift_threshold", 1e-6);
    o.finish();
    if (x0.size() != omega.dimension()) throw ValidationError("config.x0 must have one entry per coordinate");
    if (!(T > 0) || !(dt > 0)) throw ValidationError("config.T and config.dt must be positive");
    if (stride == 0) throw ValidationError("config.record_stride must be positive");
    pq::FlowOptions options;
    options.record_stride = stride;
    if (integrator == "auto") options.integrator = pq::Integrator::automatic;
    else if (integrator == "leapfrog") options.integrator = pq::Integrator::leapfrog;
    else if (integrator == "rk4") options.integrator = pq::Integrator::rk4;
    else throw ValidationError("config.integrator must be auto, leapfrog or rk4");

    const pq::HamiltonianSystem sys(omega, H);
    const pq::Trajectory tr = pq::integrate_flow(sys, x0, T, dt, options);
    const auto last = tr.states[tr.states.size() - 1];
    double ret = 0.0;
    for (std::size_t i = 0; i < x0.size(); ++i) ret = std::max(ret, std::abs(last[i] - x0[i]));

    CommandOutput out;
    json states = json::array();
    for (std::size_t i = 0; i < tr.states.size(); ++i) {
        const auto s = tr.states[i];
        states.push_back(std::vector<double>(s.begin(), s.end()));
    }
    json field = json::array();
    const pq::VectorField xi = pq::hamiltonian_vector_field(sys);
    for (const auto& c : xi.components()) field.push_back(c.to_string());
    out.result = {{"integrator", tr.integrator},
                  {"hamiltonian_vector_field", field},
                  {"dt", tr.dt},
                  {"steps", tr.steps},
                  {"stride", tr.stride},
                  {"energy_drift", tr.energy_drift},
                  {"max_energy_deviation", tr.max_energy_deviation},
                  {"return_error", ret},
                  {"final_state", std::vector<double>(last.begin(), last.end())},
                  {"trajectory", {{"times", tr.times}, {"states", states}}}};
    check_max(out, "energy_drift", tr.energy_drift, drift_threshold, ctx);
    if (ctx.plot) {
        if (omega.dimension() < 2) throw ValidationError("--plot needs at least two coordinates");
        out.svg = phase_portrait(tr, "phase portrait of H = " + hamiltonian);
    }
    return out;
}

// ---------------------------------------------------------- poisson-check

CommandOutput poisson_check(const json& cfg, const Context& ctx) {
    Obj o(cfg, "config");
    const pq::SymplecticStructure omega = phase_space(o.at("phase_space"), o.path("phase_space"));
    const pq::Chart& chart = omega.chart();
    std::vector<std::array<Expression, 3>> triples;
    json labels = json::array();
    if (const json* f = o.find("functions")) {
        if (!f->is_array()) throw ValidationError("config.functions must be an array of [f, g, h]");
        for (const auto& t : *f) {
            const auto s = to_strings(t, "config.functions[]");
            if (s.size() != 3) throw ValidationError("config.functions entries must be [f, g, h]");
            triples.push_back({chart.parse(s[0]), chart.parse(s[1]), chart.parse(s[2])});
            labels.push_back(s);
        }
    }
    const std::size_t random = o.count("random_triples", triples.empty() ? 10 : 0);
    const int degree = static_cast<int>(o.count("degree", 3));
    const std::size_t samples = o.count("samples", 100);
    o.finish();
    for (std::size_t i = 0; i < random; ++i) {
        std::array<Expression, 3> t{pq::random_polynomial(chart, degree, ctx.seed * 1000003 + 3 * i),
                                    pq::random_polynomial(chart, degree, ctx.seed * 1000003 + 3 * i + 1),
                                    pq::random_polynomial(chart, degree, ctx.seed * 1000003 + 3 * i + 2)};
        labels.push_back({t[0].to_string(), t[1].to_string(), t[2].to_string()});
        triples.push_back(std::move(t));
    }
    const pq::PointCloud pts = chart.sample(samples, ctx.seed);
    auto br = [&](const Expression& a, const Expression& b) { return pq::poisson_bracket(a, b, omega).expression(); };

    CommandOutput out;
    json rows = json::array();
    double worst[6] = {0, 0, 0, 0, 0, 0};
    for (std::size_t i = 0; i < triples.size(); ++i) {
        const auto& [f, g, h] = triples[i];
        const double anti = max_abs(pts, br(f, g) + br(g, f));
        const double leibniz = max_abs(pts, br(f, g * h) - br(f, g) * h - g * br(f, h));
        const double jacobi = max_abs(pts, br(f, br(g, h)) + br(g, br(h, f)) + br(h, br(f, g)));
        const pq::VectorField Xf = pq::hamiltonian_vector_field(omega, f);
        const pq::VectorField Xg = pq::hamiltonian_vector_field(omega, g);
        const pq::VectorField Xfg = pq::hamiltonian_vector_field(omega, br(f, g));
        const pq::VectorField L = pq::lie_bracket(Xf, Xg);
        double hom = 0.0;
        for (std::size_t k = 0; k < chart.dimension(); ++k) hom = std::max(hom, max_abs(pts, Xfg[k] - L[k]));
        const pq::TwoForm lie = pq::lie_derivative_of_form(Xf, omega.form());
        double lie_res = 0.0;
        for (std::size_t a = 0; a < chart.dimension(); ++a)
            for (std::size_t b = a + 1; b < chart.dimension(); ++b) lie_res = std::max(lie_res, max_abs(pts, lie(a, b)));
        const double defining = pq::defining_equation_residual(omega, f, pts, ctx.seed + i);
        const double row[6] = {anti, leibniz, jacobi, hom, lie_res, defining};
        for (int k = 0; k < 6; ++k) worst[k] = std::max(worst[k], row[k]);
        rows.push_back({{"functions", labels[i]},
                        {"antisymmetry", anti},
                        {"leibniz", leibniz},
                        {"jacobi", jacobi},
                        {"bracket_homomorphism", hom},
                        {"lie_derivative_of_omega", lie_res},
                        {"defining_equation", defining}});
    }
    out.result = {{"samples", pts.size()}, {"triples", rows}};
    check_max(out, "antisymmetry", worst[0], 1e-8, ctx);
    check_max(out, "leibniz", worst[1], 1e-8, ctx);
    check_max(out, "jacobi", worst[2], 1e-8, ctx);
    check_max(out, "bracket_homomorphism", worst[3], 1e-9, ctx);
    check_max(out, "lie_derivative_of_omega", worst[4], 1e-9, ctx);
    check_max(out, "defining_equation", worst[5], 1e-9, ctx);
    return out;
}

// ------------------------------------------------------------- prequantize

pq::VectorField random_field(const pq::Chart& chart, int degree, std::uint64_t seed) {
    std::vector<Expression> c;
    for (std::size_t i = 0; i < chart.dimension(); ++i) c.push_back(pq::random_polynomial(chart, degree, seed + i));
    return pq::VectorField(chart, c);
}

CommandOutput prequantize(const json& cfg, const Context& ctx) {
    Obj o(cfg, "config");
    const pq::PrequantumBundle bundle = pqcli::bundle(o.at("bundle"), o.path("bundle"));
    const pq::Chart& chart = bundle.chart();
    const pq::Section s = section(chart, o.at("section"), o.path("section"));
    std::vector<std::pair<Expression, Expression>> pairs;
    if (const json* p = o.find("pairs")) {
        if (!p->is_array()) throw ValidationError("config.pairs must be an array of [f, g]");
        for (const auto& e : *p) {
            const auto v = to_strings(e, "config.pairs[]");
            if (v.size() != 2) throw ValidationError("config.pairs entries must be [f, g]");
            pairs.emplace_back(chart.parse(v[0]), chart.parse(v[1]));
        }
    }
    const std::size_t random = o.count("random_pairs", 0);
    const int degree = static_cast<int>(o.count("degree", 2));
    const std::size_t samples = o.count("samples", 50);
    std::size_t curvature_fields = 0;
    int curvature_degree = 2;
    bool curvature = false;
    if (o.has("curvature")) {
        Obj c = o.object("curvature");
        curvature = true;
        curvature_fields = c.count("random_fields", 10);
        curvature_degree = static_cast<int>(c.count("degree", 2));
        c.finish();
    }
    struct Skew {
        Expression f;
        pq::Section s1, s2;
        pq::Box box;
        std::vector<std::size_t> nodes;
    };
    std::optional<Skew> skew;
    if (o.has("skew_hermiticity")) {
        Obj k = o.object("skew_hermiticity");
        Expression f = chart.parse(k.string("f"));
        pq::Section s1 = section(chart, k.at("s1"), k.path("s1"));
        pq::Section s2 = section(chart, k.at("s2"), k.path("s2"));
        pq::Box box = to_box(k.at("box"), k.path("box"));
        std::vector<std::size_t> nodes;
        for (double n : to_numbers(k.at("nodes"), k.path("nodes"))) {
            if (n < 3 || n != std::floor(n) || static_cast<std::size_t>(n) % 2 == 0)
                throw ValidationError("config.skew_hermiticity.nodes must be odd integers >= 3");
            nodes.push_back(static_cast<std::size_t>(n));
        }
        k.finish();
        if (box.dim() != chart.dimension()) throw ValidationError("config.skew_hermiticity.box dimension mismatch");
        skew = Skew{f, s1, s2, box, nodes};
    }
    o.finish();

    for (std::size_t i = 0; i < random; ++i)
        pairs.emplace_back(pq::random_polynomial(chart, degree, ctx.seed * 7919 + 2 * i),
                           pq::random_polynomial(chart, degree, ctx.seed * 7919 + 2 * i + 1));
    const pq::PointCloud pts = chart.sample(samples, ctx.seed);

    CommandOutput out;
    json rows = json::array();
    double worst = 0.0, worst_conn = 0.0;
    for (const auto& [f, g] : pairs) {
        const pq::CommutatorCheck c = pq::commutator_check(bundle, f, g, s, pts);
        worst = std::max(worst, c.residual);
        worst_conn = std::max(worst_conn, c.connection_residual);
        rows.push_back({{"f", f.to_string()},
                        {"g", g.to_string()},
                        {"bracket", pq::poisson_bracket(f, g, bundle.symplectic()).expression().to_string()},
                        {"residual", c.residual},
                        {"connection_residual", c.connection_residual}});
    }
    out.result = {{"kappa", bundle.kappa()},
                  {"bundle_curvature_residual", bundle.certificate().curvature_residual},
                  {"samples", pts.size()},
                  {"commutators", rows}};
    if (!pairs.empty()) {
        check_max(out, "commutator", worst, 1e-7, ctx);
        check_max(out, "connection_commutator", worst_conn, 1e-7, ctx);
    }

    if (curvature) {
        json crow = json::array();
        double cw = 0.0;
        const std::size_t n = chart.dimension();
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = i + 1; j < n; ++j) {
                const double r = pq::curvature_residual(bundle, pq::VectorField::coordinate(chart, i),
                                                        pq::VectorField::coordinate(chart, j), s, pts);
                cw = std::max(cw, r);
                crow.push_back({{"fields", "coordinate " + std::to_string(i) + "," + std::to_string(j)}, {"residual", r}});
            }
        for (std::size_t i = 0; i < curvature_fields; ++i) {
            const auto X = random_field(chart, curvature_degree, ctx.seed * 104729 + 20 * i);
            const auto Y = random_field(chart, curvature_degree, ctx.seed * 104729 + 20 * i + 10);
            const double r = pq::curvature_residual(bundle, X, Y, s, pts);
            cw = std::max(cw, r);
            crow.push_back({{"fields", "random " + std::to_string(i)}, {"residual", r}});
        }
        out.result["curvature"] = crow;
        check_max(out, "curvature", cw, 1e-8, ctx);
    }

    if (skew) {
        json srow = json::array();
        double prev = 0.0, min_ratio = 1e300;
        for (std::size_t i = 0; i < skew->nodes.size(); ++i) {
            const pq::QuadratureGrid grid(skew->box, std::vector<std::size_t>(chart.dimension(), skew->nodes[i]));
            const double r = pq::skew_hermiticity_check(bundle, skew->f, skew->s1, skew->s2, grid);
            json row = {{"nodes", skew->nodes[i]}, {"residual", r}};
            if (i > 0) {
                const double ratio = r > 0 ? prev / r : 1e300;
                row["reduction"] = ratio;
                min_ratio = std::min(min_ratio, ratio);
            }
            prev = r;
            srow.push_back(row);
        }
        out.result["skew_hermiticity"] = srow;
        if (!skew->nodes.empty()) check_max(out, "skew_hermiticity_finest", prev, 1e-6, ctx);
        if (skew->nodes.size() > 1) check_min(out, "skew_hermiticity_reduction", min_ratio, 4.0);
    }
    return out;
}

// ---------------------------------------------------------------- holonomy

CommandOutput holonomy(const json& cfg, const Context& ctx) {
    Obj o(cfg, "config");
    std::vector<double> radii;
    if (o.has("r_values") == o.has("r_squared"))
        throw ValidationError("config needs exactly one of r_values and r_squared");
    if (o.has("r_values")) {
        radii = to_numbers(o.at("r_values"), o.path("r_values"));
    } else {
        for (double r2 : to_numbers(o.at("r_squared"), o.path("r_squared"))) {
            if (!(r2 > 0)) throw ValidationError("config.r_squared entries must be positive");
            radii.push_back(std::sqrt(r2));
        }
    }
    const std::size_t steps = o.count("steps", 4000);
    o.finish();
    if (steps == 0) throw ValidationError("config.steps must be positive");

    CommandOutput out;
    json rows = json::array();
    double worst = 0.0;
    std::size_t mismatches = 0;
    for (double r : radii) {
        if (!(r > 0)) throw ValidationError("config.r_values entries must be positive");
        const pq::HolonomyResult h = pq::punctured_plane_holonomy(r, steps);
        const double err = std::abs(h.numeric - h.closed_form);
        worst = std::max(worst, err);
        const double r2 = r * r;
        const bool integral = std::abs(r2 - std::round(r2)) <= 1e-12;
        if (integral != h.polarized_exists) ++mismatches;
        rows.push_back({{"r", h.r},
                        {"r_squared", r2},
                        {"holonomy_numeric", complex_json(h.numeric)},
                        {"holonomy_closed_form", complex_json(h.closed_form)},
                        {"error", err},
                        {"polarized_exists", h.polarized_exists}});
    }
    out.result = {{"steps", steps}, {"leaves", rows}};
    check_max(out, "holonomy_error", worst, 1e-8, ctx);
    out.checks.push_back({{"name", "polarized_exists_iff_integer_r_squared"},
                          {"value", mismatches},
                          {"threshold", 0},
                          {"comparison", "<="},
                          {"pass", mismatches == 0}});
    return out;
}

// ---------------------------------------------------------- polarized-check

CommandOutput polarized_check(const json& cfg, const Context& ctx) {
    Obj o(cfg, "config");
    const std::string kind = o.string("polarization", "vertical");
    std::optional<pq::PrequantumBundle> bundle;
    std::optional<pq::Polarization> F;
    if (kind == "vertical") {
        const std::size_t n = o.count("n", 1);
        if (n == 0) throw ValidationError("config.n must be positive");
        bundle = pq::cotangent_bundle(n);
        F = pq::vertical_polarization(n);
    } else if (kind == "circle") {
        bundle = pq::punctured_plane_bundle();
        F = pq::circle_polarization();
    } else {
        throw ValidationError("config.polarization must be vertical or circle");
    }
    const pq::Chart& chart = bundle->chart();
    std::vector<std::string> members, counter;
    if (const json* m = o.find("functions")) members = to_strings(*m, "config.functions");
    if (const json* c = o.find("counterexamples")) counter = to_strings(*c, "config.counterexamples");
    std::optional<pq::Section> s;
    if (const json* j = o.find("section")) s = section(chart, *j, "config.section");
    const std::size_t samples = o.count("samples", 200);
    struct Pairing {
        pq::Section s1, s2;
        std::pair<std::string, std::string> mu1, mu2;
        pq::Box box;
    };
    std::optional<Pairing> pairing;
    if (o.has("pairing")) {
        Obj p = o.object("pairing");
        pairing = Pairing{section(chart, p.at("s1"), p.path("s1")), section(chart, p.at("s2"), p.path("s2")),
                          to_complex_expression(p.at("mu1"), p.path("mu1")),
                          to_complex_expression(p.at("mu2"), p.path("mu2")), to_box(p.at("box"), p.path("box"))};
        p.finish();
    }
    o.finish();

    const pq::PointCloud pts = chart.sample(samples, ctx.seed);
    CommandOutput out;
    std::vector<Expression> fs;
    json mrows = json::array();
    double member_worst = 0.0, qf_worst = 0.0;
    for (const auto& text : members) {
        const Expression f = chart.parse(text);
        fs.push_back(f);
        const double r = pq::is_polarization_preserving(f, *F, pts);
        member_worst = std::max(member_worst, r);
        json row = {{"f", text}, {"preserving_residual", r}};
        if (s) {
            const double q = pq::qf_preserves_polarized_check(*bundle, f, *s, *F, pts);
            qf_worst = std::max(qf_worst, q);
            row["qf_polarized_residual"] = q;
        }
        mrows.push_back(row);
    }
    json brows = json::array();
    double closure_worst = 0.0;
    for (std::size_t i = 0; i < fs.size(); ++i)
        for (std::size_t j = i + 1; j < fs.size(); ++j) {
            const double r = pq::bracket_closure_check(fs[i], fs[j], *F, pts);
            closure_worst = std::max(closure_worst, r);
            brows.push_back({{"f", members[i]}, {"g", members[j]}, {"residual", r}});
        }
    json crows = json::array();
    double counter_min = 1e300;
    for (const auto& text : counter) {
        const Expression f = chart.parse(text);
        const double r = pq::is_polarization_preserving(f, *F, pts);
        json row = {{"f", text}, {"preserving_residual", r}};
        if (s) row["qf_polarized_residual"] = pq::qf_preserves_polarized_check(*bundle, f, *s, *F, pts);
        counter_min = std::min(counter_min, r);
        crows.push_back(row);
    }
    out.result = {{"polarization", kind},
                  {"samples", pts.size()},
                  {"members", mrows},
                  {"bracket_closure", brows},
                  {"counterexamples", crows}};
    if (!members.empty()) check_max(out, "membership", member_worst, 1e-9, ctx);
    if (brows.size() > 0) check_max(out, "bracket_closure", closure_worst, 1e-7, ctx);
    if (s && !members.empty()) check_max(out, "qf_preserves_polarized", qf_worst, 1e-7, ctx);
    if (!counter.empty()) check_min(out, "counterexample_fails", counter_min, 1e-2);
    if (s) {
        const double r = pq::polarized_residual(*bundle, *s, *F, pts);
        out.result["section_polarized_residual"] = r;
        check_max(out, "section_polarized", r, 1e-7, ctx);
    }
    if (pairing) {
        const auto atlas = pq::box_atlas(F->quotient()->coordinates, pairing->box);
        const auto mu1 = pq::ManifoldDensity::parse(atlas, 0.5, {pairing->mu1});
        const auto mu2 = pq::ManifoldDensity::parse(atlas, 0.5, {pairing->mu2});
        const pq::cplx v12 = pq::half_density_pairing(*bundle, *F, pairing->s1, mu1, pairing->s2, mu2);
        const pq::cplx v21 = pq::half_density_pairing(*bundle, *F, pairing->s2, mu2, pairing->s1, mu1);
        out.result["pairing"] = {{"value", complex_json(v12)}, {"swapped", complex_json(v21)}};
        check_max(out, "pairing_hermitian", std::abs(v12 - std::conj(v21)), 1e-9, ctx);
    }
    return out;
}

// ------------------------------------------------------- integrate-density

CommandOutput integrate_density(const json& cfg, const Context& ctx) {
    Obj o(cfg, "config");
    const auto at = atlas(o.at("atlas"), o.path("atlas"));
    const pq::cplx order = o.has("order") ? to_complex(o.at("order"), o.path("order")) : pq::cplx{1.0, 0.0};
    const json& cj = o.at("coefficients");
    if (!cj.is_array() || cj.size() != at->size())
        throw ValidationError("config.coefficients needs one entry per chart (" + std::to_string(at->size()) + ")");
    std::vector<std::pair<std::string, std::string>> coefficients;
    for (const auto& c : cj) coefficients.push_back(to_complex_expression(c, "config.coefficients[]"));
    const double tolerance = o.number("tolerance", 1e-8);
    const bool split = o.flag("split_signed", false);
    const std::size_t overlap_samples = o.count("overlap_samples", 200);
    std::optional<double> expected;
    if (o.has("expected_total")) expected = o.number("expected_total");
    o.finish();
    if (!(tolerance > 0)) throw ValidationError("config.tolerance must be positive");

    const pq::ManifoldDensity tau = pq::ManifoldDensity::parse(at, order, coefficients);
    const pq::IntegrationReport r = pq::integrate_one_density(tau, tolerance);
    const double overlap = tau.overlap_residual(overlap_samples, ctx.seed);

    CommandOutput out;
    json per_chart = json::array();
    for (const auto& v : r.per_chart) per_chart.push_back(complex_json(v));
    out.result = {{"atlas", at->name()},
                  {"per_chart", per_chart},
                  {"total", complex_json(r.total)},
                  {"max_nodes", r.max_nodes},
                  {"converged", r.converged},
                  {"warnings", r.warnings},
                  {"overlap_residual", overlap},
                  {"partition_residual", at->partition_residual()}};
    if (split) {
        const auto [plus, minus] = pq::split_signed_density(tau);
        const pq::cplx p = pq::integrate_one_density(plus, tolerance).total;
        const pq::cplx m = pq::integrate_one_density(minus, tolerance).total;
        out.result["split"] = {{"positive", p.real()}, {"negative", m.real()}, {"difference", (p - m).real()}};
    }
    check_max(out, "overlap_residual", overlap, 1e-10, ctx);
    out.checks.push_back({{"name", "converged"},
                          {"value", r.converged},
                          {"threshold", true},
                          {"comparison", "=="},
                          {"pass", r.converged}});
    if (expected) check_max(out, "total_error", std::abs(r.total - pq::cplx{*expected, 0.0}), tolerance, ctx);
    return out;
}

// ----------------------------------------------------------------- cocycle

pq::dc::Rational json_rational(const json& j, const std::string& path) {
    if (j.is_string()) return pq::dc::parse_rational(j.get<std::string>());
    if (j.is_number_integer()) return pq::dc::Rational(j.get<long long>());
    if (j.is_number()) return pq::dc::parse_rational(j.dump());
    throw ValidationError(path + " must be a number or a rational string");
}

json strings(const pq::dc::RealCochain& c) {
    json out = json::array();
    for (const auto& v : c.values) out.push_back(pq::dc::to_string(v));
    return out;
}

CommandOutput cocycle(const json& cfg, const Context& ctx) {
    using namespace pq::dc;
    Obj o(cfg, "config");
    const Complex K = complex(o.at("complex"), o.path("complex"));
    Obj w = o.object("omega");
    RealCochain omega = zero_real(*K, 2);
    int given = 0;
    if (w.has("uniform_total")) {
        ++given;
        if (K->count(2) == 0) throw ValidationError("config.omega: the complex has no 2-simplices");
        const Rational total = json_rational(w.at("uniform_total"), w.path("uniform_total"));
        for (auto& v : omega.values) v = total / Rational(static_cast<long>(K->count(2)));
    }
    if (w.has("values")) {
        ++given;
        const json& v = w.at("values");
        if (!v.is_array() || v.size() != K->count(2))
            throw ValidationError("config.omega.values needs one entry per 2-simplex (" + std::to_string(K->count(2)) + ")");
        for (std::size_t i = 0; i < v.size(); ++i) omega.values[i] = json_rational(v[i], w.path("values"));
    }
    if (w.has("form")) {
        ++given;
        omega = sample_two_form(*K, Expression::parse(w.string("form"), std::vector<std::string>{"x", "y"}));
    }
    w.finish();
    if (given != 1) throw ValidationError("config.omega needs exactly one of uniform_total, values and form");
    const double tolerance = o.number("tolerance", 1e-9);
    const std::size_t random = o.count("random_cochains", 100);
    const bool laws = o.flag("law_suites", false);
    o.finish();

    CommandOutput out;
    const LiftResult lift = integral_lift(K, omega, tolerance);
    json counts = json::array();
    for (std::size_t k = 0; k <= K->dimension(); ++k) counts.push_back(K->count(k));
    json periods = json::array();
    for (const auto& p : lift.periods)
        periods.push_back({{"cycle", p.cycle},
                           {"period", to_string(p.period)},
                           {"period_value", p.period.convert_to<double>()},
                           {"integral", p.integral}});
    out.result = {{"complex", {{"name", K->name()}, {"dimension", K->dimension()}, {"counts", counts}}},
                  {"omega", strings(omega)},
                  {"feasible", lift.feasible},
                  {"infeasible", !lift.feasible},
                  {"periods", periods}};
    if (lift.cocycle) {
        out.result["cocycle"] = {{"c", lift.cocycle->c().values}, {"h", strings(lift.cocycle->h())}};
    }
    if (lift.certificate) {
        Rational period = 0;
        for (std::size_t i = 0; i < lift.certificate->size(); ++i)
            period += Rational((*lift.certificate)[i]) * omega.values[i];
        out.result["certificate"] = {{"cycle", *lift.certificate},
                                     {"period", to_string(period)},
                                     {"period_value", period.convert_to<double>()}};
    }

    // Exact δδ = 0 and d̃d̃ = 0 on random cochains.
    std::mt19937_64 rng(ctx.seed);
    std::uniform_int_distribution<long> ints(-5, 5), nums(-9, 9), dens(1, 6);
    auto rand_int = [&](std::size_t k) {
        IntCochain c = zero_int(*K, k);
        for (auto& v : c.values) v = ints(rng);
        return c;
    };
    auto rand_real = [&](std::size_t k) {
        RealCochain c = zero_real(*K, k);
        for (auto& v : c.values) v = Rational(nums(rng), dens(rng));
        return c;
    };
    std::size_t dd_cases = 0, dd_fail = 0, dt_cases = 0, dt_fail = 0;
    for (std::size_t t = 0; t < random; ++t)
        for (std::size_t k = 0; k <= std::min<std::size_t>(K->dimension(), 2); ++k) {
            ++dd_cases;
            if (!coboundary(*K, coboundary(*K, rand_int(k), Overflow::zero), Overflow::zero).is_zero()) ++dd_fail;
            ++dd_cases;
            if (!coboundary(*K, coboundary(*K, rand_real(k), Overflow::zero), Overflow::zero).is_zero()) ++dd_fail;
            const DifferentialCochain x = DifferentialCochain::make(
                *K, k, rand_int(k), k == 0 ? RealCochain{0, {}} : rand_real(k - 1), k < 2 ? zero_real(*K, k) : rand_real(k));
            ++dt_cases;
            if (!d_tilde(*K, d_tilde(*K, x)).is_zero()) ++dt_fail;
        }
    out.result["boundary_squared_zero"] = K->boundary_squared_zero();
    out.result["delta_squared"] = {{"cases", dd_cases}, {"failures", dd_fail}};
    out.result["d_tilde_squared"] = {{"cases", dt_cases}, {"failures", dt_fail}};
    out.checks.push_back({{"name", "delta_squared_failures"}, {"value", dd_fail}, {"threshold", 0}, {"comparison", "<="},
                          {"pass", dd_fail == 0 && K->boundary_squared_zero()}});
    out.checks.push_back({{"name", "d_tilde_squared_failures"}, {"value", dt_fail}, {"threshold", 0}, {"comparison", "<="},
                          {"pass", dt_fail == 0}});

    if (laws) {
        json rows = json::array();
        std::size_t failures = 0;
        auto add = [&](const std::vector<LawReport>& reports) {
            for (const auto& r : reports) {
                failures += r.failures;
                rows.push_back({{"law", r.law}, {"cases", r.cases}, {"failures", r.failures}});
            }
        };
        add(groupoid_law_suite(K));
        add(dch_functor_suite(K));
        out.result["law_suites"] = rows;
        out.checks.push_back({{"name", "law_failures"}, {"value", failures}, {"threshold", 0}, {"comparison", "<="},
                              {"pass", failures == 0}});
    }
    return out;
}

using Handler = CommandOutput (*)(const json&, const Context&);
const std::map<std::string, Handler>& handlers() {
    static const std::map<std::string, Handler> h = {
        {"flow", flow},
        {"poisson-check", poisson_check},
        {"prequantize", prequantize},
        {"holonomy", holonomy},
        {"polarized-check", polarized_check},
        {"integrate-density", integrate_density},
        {"cocycle", cocycle},
    };
    return h;
}

} // namespace

bool is_command(const std::string& name) { return handlers().count(name) > 0; }

const char* command_list() {
    return "flow, poisson-check, prequantize, holonomy, polarized-check, integrate-density, cocycle";
}

CommandOutput run_command(const std::string& name, const json& config, const Context& ctx) {
    auto it = handlers().find(name);
    if (it == handlers().end()) throw ValidationError("unknown command '" + name + "'; expected one of " + command_list());
    return it->second(config, ctx);
}

} // namespace pqcli
