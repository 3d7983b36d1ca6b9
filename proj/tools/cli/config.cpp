#include "config.hpp"

#include <cmath>
#include <limits>

#include "prequant/errors.hpp"

namespace pqcli {

using pq::ValidationError;

Obj::Obj(const json& j, std::string path) : j_(j), path_(std::move(path)) {
    if (!j_.is_object()) throw ValidationError(path_ + " must be an object");
}

bool Obj::has(const std::string& key) const { return j_.contains(key); }

const json& Obj::at(const std::string& key) {
    if (!j_.contains(key)) throw ValidationError("missing required key " + path(key));
    used_.insert(key);
    return j_.at(key);
}

const json* Obj::find(const std::string& key) {
    if (!j_.contains(key)) return nullptr;
    used_.insert(key);
    return &j_.at(key);
}

std::string Obj::string(const std::string& key) {
    const json& v = at(key);
    if (!v.is_string()) throw ValidationError(path(key) + " must be a string");
    return v.get<std::string>();
}

std::string Obj::string(const std::string& key, const std::string& fallback) {
    return has(key) ? string(key) : fallback;
}

double Obj::number(const std::string& key) { return to_number(at(key), path(key)); }

double Obj::number(const std::string& key, double fallback) { return has(key) ? number(key) : fallback; }

std::size_t Obj::count(const std::string& key, std::size_t fallback) {
    if (!has(key)) return fallback;
    const json& v = at(key);
    if (!v.is_number_integer() || v.get<long long>() < 0)
        throw ValidationError(path(key) + " must be a nonnegative integer");
    return v.get<std::size_t>();
}

bool Obj::flag(const std::string& key, bool fallback) {
    if (!has(key)) return fallback;
    const json& v = at(key);
    if (!v.is_boolean()) throw ValidationError(path(key) + " must be true or false");
    return v.get<bool>();
}

Obj Obj::object(const std::string& key) { return Obj(at(key), path(key)); }

void Obj::finish() const {
    for (const auto& [key, value] : j_.items())
        if (!used_.count(key)) throw ValidationError("unknown key " + path(key));
}

double to_number(const json& j, const std::string& path) {
    if (j.is_number()) return j.get<double>();
    if (j.is_string()) {
        const pq::Expression e = pq::Expression::parse(j.get<std::string>(), std::vector<std::string>{});
        if (!e.is_constant()) throw ValidationError(path + " must be a constant");
        return e.constant_value();
    }
    throw ValidationError(path + " must be a number or a constant expression");
}

std::vector<double> to_numbers(const json& j, const std::string& path) {
    if (!j.is_array()) throw ValidationError(path + " must be an array of numbers");
    std::vector<double> out;
    for (std::size_t i = 0; i < j.size(); ++i) out.push_back(to_number(j[i], path + "[" + std::to_string(i) + "]"));
    return out;
}

std::vector<std::string> to_strings(const json& j, const std::string& path) {
    if (!j.is_array()) throw ValidationError(path + " must be an array of strings");
    std::vector<std::string> out;
    for (const auto& v : j) {
        if (!v.is_string()) throw ValidationError(path + " must be an array of strings");
        out.push_back(v.get<std::string>());
    }
    return out;
}

pq::Box to_box(const json& j, const std::string& path) {
    Obj o(j, path);
    pq::Box b{to_numbers(o.at("lo"), o.path("lo")), to_numbers(o.at("hi"), o.path("hi"))};
    o.finish();
    if (b.lo.size() != b.hi.size() || b.lo.empty()) throw ValidationError(path + ": lo and hi must have equal length");
    for (std::size_t i = 0; i < b.lo.size(); ++i)
        if (!(b.lo[i] < b.hi[i])) throw ValidationError(path + ": lo must be below hi");
    return b;
}

pq::cplx to_complex(const json& j, const std::string& path) {
    if (j.is_array()) {
        if (j.size() != 2) throw ValidationError(path + " must be [re, im]");
        return {to_number(j[0], path), to_number(j[1], path)};
    }
    return {to_number(j, path), 0.0};
}

std::pair<std::string, std::string> to_complex_expression(const json& j, const std::string& path) {
    if (j.is_string()) return {j.get<std::string>(), "0"};
    const auto v = to_strings(j, path);
    if (v.size() != 2) throw ValidationError(path + " must be \"re\" or [\"re\", \"im\"]");
    return {v[0], v[1]};
}

namespace {
pq::Chart custom_chart(Obj& o) {
    const auto names = to_strings(o.at("coordinates"), o.path("coordinates"));
    std::vector<pq::Interval> bounds;
    if (const json* b = o.find("bounds")) {
        if (!b->is_array() || b->size() != names.size())
            throw ValidationError(o.path("bounds") + " needs one [lo, hi] per coordinate");
        for (const auto& iv : *b) {
            if (!iv.is_array() || iv.size() != 2) throw ValidationError(o.path("bounds") + " entries are [lo, hi]");
            pq::Interval I;
            if (!iv[0].is_null()) I.lo = to_number(iv[0], o.path("bounds")), I.lo_open = true;
            if (!iv[1].is_null()) I.hi = to_number(iv[1], o.path("bounds")), I.hi_open = true;
            bounds.push_back(I);
        }
    }
    return pq::Chart(o.string("name", "custom"), names, bounds);
}
} // namespace

pq::SymplecticStructure phase_space(const json& j, const std::string& path) {
    Obj o(j, path);
    const std::string kind = o.string("kind");
    if (kind == "cotangent") {
        const std::size_t n = o.count("n", 1);
        o.finish();
        if (n == 0) throw ValidationError(o.path("n") + " must be positive");
        return pq::canonical_symplectic(n);
    }
    if (kind == "polar") {
        o.finish();
        return pq::punctured_plane_bundle().symplectic();
    }
    if (kind == "custom") {
        const pq::Chart chart = custom_chart(o);
        std::vector<pq::TwoForm::Entry> entries;
        const json& om = o.at("omega");
        if (!om.is_array()) throw ValidationError(o.path("omega") + " must be an array of {i, j, value}");
        for (const auto& e : om) {
            Obj eo(e, o.path("omega[]"));
            const std::size_t i = eo.count("i", 0), jj = eo.count("j", 0);
            const std::string value = eo.string("value");
            eo.finish();
            if (!(i < jj) || jj >= chart.dimension())
                throw ValidationError(o.path("omega") + ": entries need i < j < dimension");
            entries.push_back({i, jj, chart.parse(value)});
        }
        const std::size_t samples = o.count("samples", 200);
        o.finish();
        return pq::SymplecticStructure::certify(pq::TwoForm::from_upper(chart, entries), samples);
    }
    throw ValidationError(o.path("kind") + " must be cotangent, polar or custom");
}

pq::PrequantumBundle bundle(const json& j, const std::string& path) {
    Obj o(j, path);
    const std::string kind = o.string("kind");
    if (kind == "cotangent") {
        const std::size_t n = o.count("n", 1);
        const double kappa = o.number("kappa", pq::PrequantumBundle::two_pi);
        o.finish();
        if (n == 0) throw ValidationError(o.path("n") + " must be positive");
        return pq::cotangent_bundle(n, kappa);
    }
    if (kind == "punctured-plane") {
        o.finish();
        return pq::punctured_plane_bundle();
    }
    if (kind == "custom") {
        const pq::SymplecticStructure omega = phase_space(o.at("phase_space"), o.path("phase_space"));
        const auto theta = to_strings(o.at("theta"), o.path("theta"));
        if (theta.size() != omega.dimension())
            throw ValidationError(o.path("theta") + " needs one coefficient per coordinate");
        std::vector<pq::Expression> coefficients;
        for (const auto& t : theta) coefficients.push_back(omega.chart().parse(t));
        const double kappa = o.number("kappa", pq::PrequantumBundle::two_pi);
        o.finish();
        return pq::PrequantumBundle::certify(omega, pq::OneForm(omega.chart(), coefficients), kappa);
    }
    throw ValidationError(o.path("kind") + " must be cotangent, punctured-plane or custom");
}

pq::Section section(const pq::Chart& chart, const json& j, const std::string& path) {
    Obj o(j, path);
    if (o.has("bump")) {
        Obj b = o.object("bump");
        const pq::Box box = to_box(b.at("support"), b.path("support"));
        const int exponent = static_cast<int>(b.count("exponent", 6));
        const std::string re = b.string("re", "1"), im = b.string("im", "0");
        b.finish();
        o.finish();
        if (box.dim() != chart.dimension()) throw ValidationError(path + ": support dimension mismatch");
        return pq::bump_section(chart, box, exponent, re, im);
    }
    const std::string re = o.string("re");
    const std::string im = o.string("im", "0");
    std::optional<pq::Box> support;
    if (const json* s = o.find("support")) support = to_box(*s, o.path("support"));
    o.finish();
    return pq::Section::parse(chart, re, im, support);
}

std::shared_ptr<const pq::Atlas> atlas(const json& j, const std::string& path) {
    Obj o(j, path);
    const std::string kind = o.string("kind");
    std::shared_ptr<const pq::Atlas> out;
    if (kind == "circle-angle") {
        out = pq::circle_angle_atlas(o.number("a", 0.5), o.number("b", 2.5));
    } else if (kind == "circle-tangent") {
        out = pq::circle_tangent_atlas(o.number("inner", 0.5), o.number("outer", 2.0));
    } else if (kind == "annulus") {
        const double r0 = o.number("r0"), r1 = o.number("r1");
        out = pq::annulus_atlas(r0, r1, o.number("a", 0.5), o.number("b", 2.5));
    } else if (kind == "box") {
        const auto coords = to_strings(o.at("coordinates"), o.path("coordinates"));
        out = pq::box_atlas(coords, to_box(o.at("box"), o.path("box")));
    } else {
        throw ValidationError(o.path("kind") + " must be circle-angle, circle-tangent, annulus or box");
    }
    o.finish();
    return out;
}

pq::dc::Complex complex(const json& j, const std::string& path) {
    Obj o(j, path);
    const std::string kind = o.string("kind");
    pq::dc::Complex out;
    if (kind == "circle") out = pq::dc::circle_complex(o.count("N", 4));
    else if (kind == "torus") out = pq::dc::torus_complex(o.count("m", 4), o.count("n", 4));
    else if (kind == "tetra-sphere") out = pq::dc::tetra_sphere();
    else if (kind == "tetra-ball") out = pq::dc::tetra_ball();
    else throw ValidationError(o.path("kind") + " must be circle, torus, tetra-sphere or tetra-ball");
    o.finish();
    return out;
}

} // namespace pqcli
