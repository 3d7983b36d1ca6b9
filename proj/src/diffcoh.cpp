#include "prequant/diffcoh.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <map>

#include "prequant/errors.hpp"

namespace pq::dc {

// --------------------------------------------------------------- Rationals

Rational parse_rational(std::string_view text) {
    auto trim = [](std::string_view s) {
        while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
        while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
        return s;
    };
    text = trim(text);
    if (auto slash = text.find('/'); slash != std::string_view::npos) {
        const Rational num = parse_rational(text.substr(0, slash));
        const Rational den = parse_rational(text.substr(slash + 1));
        if (den == 0) throw ValidationError("rational '" + std::string(text) + "' has a zero denominator");
        return num / den;
    }
    const std::string bad = "'" + std::string(text) + "' is not a decimal or rational number";
    std::size_t i = 0;
    bool negative = false;
    if (i < text.size() && (text[i] == '+' || text[i] == '-')) negative = text[i++] == '-';
    std::string digits;
    std::int64_t scale = 0;
    bool any = false;
    while (i < text.size() && std::isdigit(static_cast<unsigned char>(text[i]))) digits += text[i++], any = true;
    if (i < text.size() && text[i] == '.') {
        ++i;
        while (i < text.size() && std::isdigit(static_cast<unsigned char>(text[i]))) digits += text[i++], --scale, any = true;
    }
    if (!any) throw ValidationError(bad);
    if (i < text.size() && (text[i] == 'e' || text[i] == 'E')) {
        ++i;
        bool eneg = false;
        if (i < text.size() && (text[i] == '+' || text[i] == '-')) eneg = text[i++] == '-';
        std::int64_t e = 0;
        bool edigits = false;
        while (i < text.size() && std::isdigit(static_cast<unsigned char>(text[i]))) {
            e = e * 10 + (text[i++] - '0');
            edigits = true;
            if (e > 10000) throw ValidationError(bad);
        }
        if (!edigits) throw ValidationError(bad);
        scale += eneg ? -e : e;
    }
    if (i != text.size()) throw ValidationError(bad);
    Integer n(digits);
    Integer p = boost::multiprecision::pow(Integer(10), static_cast<unsigned>(std::abs(scale)));
    Rational r = scale >= 0 ? Rational(n * p) : Rational(n, p);
    return negative ? Rational(-r) : r;
}

std::string to_string(const Rational& r) {
    if (denominator(r) == 1) return numerator(r).str();
    return numerator(r).str() + "/" + denominator(r).str();
}

bool is_integer(const Rational& r) { return denominator(r) == 1; }

namespace {
Integer floor_rational(const Rational& r) {
    Integer q = numerator(r) / denominator(r); // truncates toward zero
    if (r < 0 && Rational(q) != r) q -= 1;
    return q;
}

std::int64_t to_int64(const Integer& v, const char* what) {
    if (v > std::numeric_limits<std::int64_t>::max() || v < std::numeric_limits<std::int64_t>::min())
        throw Error(std::string(what) + ": integer overflow", true);
    return v.convert_to<std::int64_t>();
}
} // namespace

Integer round_rational(const Rational& r) {
    if (r >= 0) return floor_rational(r + Rational(1, 2));
    return -floor_rational(-r + Rational(1, 2));
}

// -------------------------------------------------------------- Complexes

namespace {
// Parity of the permutation sorting `v`.
int parity(const std::vector<std::size_t>& v) {
    int inv = 0;
    for (std::size_t i = 0; i < v.size(); ++i)
        for (std::size_t j = i + 1; j < v.size(); ++j) inv += v[i] > v[j];
    return inv % 2;
}
} // namespace

SimplicialComplex::SimplicialComplex(std::string name, std::vector<std::vector<std::vector<std::size_t>>> simplices)
    : name_(std::move(name)), simplices_(std::move(simplices)) {
    while (!simplices_.empty() && simplices_.back().empty()) simplices_.pop_back();
    if (simplices_.empty()) throw ValidationError("complex '" + name_ + "' has no vertices");
    for (std::size_t i = 0; i < simplices_[0].size(); ++i)
        if (simplices_[0][i] != std::vector<std::size_t>{i})
            throw ValidationError("complex '" + name_ + "': vertices must be listed as {0}, {1}, ...");

    boundary_.resize(simplices_.size());
    std::map<std::vector<std::size_t>, std::pair<std::size_t, int>> lower;
    for (std::size_t i = 0; i < simplices_[0].size(); ++i) lower[simplices_[0][i]] = {i, 0};
    for (std::size_t k = 1; k < simplices_.size(); ++k) {
        std::map<std::vector<std::size_t>, std::pair<std::size_t, int>> current;
        for (std::size_t s = 0; s < simplices_[k].size(); ++s) {
            const auto& simplex = simplices_[k][s];
            if (simplex.size() != k + 1)
                throw ValidationError("complex '" + name_ + "': a " + std::to_string(k) + "-simplex needs " +
                                      std::to_string(k + 1) + " vertices");
            auto key = simplex;
            std::sort(key.begin(), key.end());
            if (std::adjacent_find(key.begin(), key.end()) != key.end() || key.back() >= simplices_[0].size())
                throw ValidationError("complex '" + name_ + "': invalid vertex list");
            if (!current.emplace(key, std::make_pair(s, parity(simplex))).second)
                throw ValidationError("complex '" + name_ + "': duplicate simplex");
            std::vector<Incidence> faces;
            for (std::size_t i = 0; i <= k; ++i) {
                std::vector<std::size_t> face;
                for (std::size_t j = 0; j <= k; ++j)
                    if (j != i) face.push_back(simplex[j]);
                auto fkey = face;
                std::sort(fkey.begin(), fkey.end());
                auto it = lower.find(fkey);
                if (it == lower.end()) throw ValidationError("complex '" + name_ + "': missing face");
                const int rel = (parity(face) + it->second.second) % 2;
                const int sign = ((i % 2 == 0) ? 1 : -1) * (rel ? -1 : 1);
                faces.push_back({it->second.first, sign});
            }
            boundary_[k].push_back(std::move(faces));
        }
        lower = std::move(current);
    }
}

std::size_t SimplicialComplex::total_simplices() const {
    std::size_t n = 0;
    for (const auto& s : simplices_) n += s.size();
    return n;
}

std::vector<std::vector<std::int64_t>> SimplicialComplex::boundary_matrix(std::size_t k) const {
    if (k == 0) throw ValidationError("∂_0 is not defined");
    std::vector<std::vector<std::int64_t>> m(count(k - 1), std::vector<std::int64_t>(count(k), 0));
    if (k < boundary_.size())
        for (std::size_t s = 0; s < count(k); ++s)
            for (const auto& inc : boundary_[k][s]) m[inc.face][s] += inc.sign;
    return m;
}

bool SimplicialComplex::boundary_squared_zero() const {
    for (std::size_t k = 2; k < simplices_.size(); ++k) {
        for (std::size_t s = 0; s < count(k); ++s) {
            std::map<std::size_t, std::int64_t> acc;
            for (const auto& f : boundary_[k][s])
                for (const auto& g : boundary_[k - 1][f.face]) acc[g.face] += f.sign * g.sign;
            for (const auto& [idx, v] : acc)
                if (v != 0) return false;
        }
    }
    return true;
}

void SimplicialComplex::set_geometry(std::vector<std::vector<std::vector<Point>>> points) {
    for (std::size_t k = 1; k < points.size() && k < simplices_.size(); ++k)
        if (points[k].size() != count(k)) throw ValidationError("complex geometry: wrong simplex count");
    geometry_ = std::move(points);
}

Complex circle_complex(std::size_t n) {
    if (n < 3) throw ValidationError("circle complex needs N >= 3");
    std::vector<std::vector<std::vector<std::size_t>>> s(2);
    for (std::size_t i = 0; i < n; ++i) {
        s[0].push_back({i});
        s[1].push_back({i, (i + 1) % n});
    }
    return std::make_shared<const SimplicialComplex>("circle-" + std::to_string(n), std::move(s));
}

Complex torus_complex(std::size_t m, std::size_t n) {
    if (m < 3 || n < 3) throw ValidationError("torus complex needs m, n >= 3");
    auto vid = [&](std::size_t i, std::size_t j) { return (i % m) * n + (j % n); };
    using P = SimplicialComplex::Point;
    auto pos = [&](std::size_t i, std::size_t j) {
        return P{static_cast<double>(i) / static_cast<double>(m), static_cast<double>(j) / static_cast<double>(n)};
    };
    std::vector<std::vector<std::vector<std::size_t>>> s(3);
    std::vector<std::vector<std::vector<P>>> g(3);
    for (std::size_t v = 0; v < m * n; ++v) s[0].push_back({v});
    for (std::size_t i = 0; i < m; ++i)
        for (std::size_t j = 0; j < n; ++j) {
            const std::size_t a = vid(i, j), b = vid(i + 1, j), c = vid(i, j + 1), d = vid(i + 1, j + 1);
            const P pa = pos(i, j), pb = pos(i + 1, j), pc = pos(i, j + 1), pd = pos(i + 1, j + 1);
            s[1].push_back({a, b});
            g[1].push_back({pa, pb});
            s[1].push_back({a, c});
            g[1].push_back({pa, pc});
            s[1].push_back({a, d});
            g[1].push_back({pa, pd});
            s[2].push_back({a, b, d});
            g[2].push_back({pa, pb, pd});
            s[2].push_back({a, d, c});
            g[2].push_back({pa, pd, pc});
        }
    auto K = std::make_shared<SimplicialComplex>("torus-" + std::to_string(m) + "x" + std::to_string(n), std::move(s));
    K->set_geometry(std::move(g));
    return K;
}

Complex tetra_sphere() {
    std::vector<std::vector<std::vector<std::size_t>>> s(3);
    for (std::size_t v = 0; v < 4; ++v) s[0].push_back({v});
    for (std::size_t i = 0; i < 4; ++i)
        for (std::size_t j = i + 1; j < 4; ++j) s[1].push_back({i, j});
    s[2] = {{1, 2, 3}, {0, 3, 2}, {0, 1, 3}, {0, 2, 1}};
    return std::make_shared<const SimplicialComplex>("tetra-sphere", std::move(s));
}

Complex tetra_ball() {
    std::vector<std::vector<std::vector<std::size_t>>> s(4);
    for (std::size_t v = 0; v < 4; ++v) s[0].push_back({v});
    for (std::size_t i = 0; i < 4; ++i)
        for (std::size_t j = i + 1; j < 4; ++j) s[1].push_back({i, j});
    s[2] = {{0, 1, 2}, {0, 1, 3}, {0, 2, 3}, {1, 2, 3}};
    s[3] = {{0, 1, 2, 3}};
    return std::make_shared<const SimplicialComplex>("tetra-ball", std::move(s));
}

// ---------------------------------------------------------------- Cochains

namespace {
template <class T>
void require_same_shape(const Cochain<T>& a, const Cochain<T>& b) {
    if (a.degree != b.degree || a.values.size() != b.values.size())
        throw ValidationError("cochain arithmetic: degree or size mismatch");
}
} // namespace

template <class T>
Cochain<T> Cochain<T>::operator+(const Cochain& o) const {
    require_same_shape(*this, o);
    Cochain r = *this;
    for (std::size_t i = 0; i < values.size(); ++i) r.values[i] += o.values[i];
    return r;
}

template <class T>
Cochain<T> Cochain<T>::operator-(const Cochain& o) const {
    require_same_shape(*this, o);
    Cochain r = *this;
    for (std::size_t i = 0; i < values.size(); ++i) r.values[i] -= o.values[i];
    return r;
}

template <class T>
Cochain<T> Cochain<T>::operator-() const {
    Cochain r = *this;
    for (auto& v : r.values) v = -v;
    return r;
}

template <class T>
bool Cochain<T>::is_zero() const {
    return std::all_of(values.begin(), values.end(), [](const T& v) { return v == 0; });
}

template struct Cochain<std::int64_t>;
template struct Cochain<Rational>;

IntCochain zero_int(const SimplicialComplex& K, std::size_t degree) {
    return {degree, std::vector<std::int64_t>(K.count(degree), 0)};
}

RealCochain zero_real(const SimplicialComplex& K, std::size_t degree) {
    return {degree, std::vector<Rational>(K.count(degree), Rational(0))};
}

RealCochain to_real(const IntCochain& c) {
    RealCochain r{c.degree, {}};
    r.values.reserve(c.values.size());
    for (auto v : c.values) r.values.emplace_back(v);
    return r;
}

namespace {
template <class T>
Cochain<T> coboundary_impl(const SimplicialComplex& K, const Cochain<T>& x, Overflow overflow) {
    if (x.values.size() != K.count(x.degree))
        throw ValidationError("coboundary: cochain size does not match the " + std::to_string(x.degree) +
                              "-simplices of '" + K.name() + "'");
    if (x.degree >= K.dimension() && overflow == Overflow::error)
        throw ValidationError("coboundary: degree " + std::to_string(x.degree) + " is the top dimension of '" +
                              K.name() + "'");
    Cochain<T> out{x.degree + 1, std::vector<T>(K.count(x.degree + 1), T(0))};
    for (std::size_t s = 0; s < out.values.size(); ++s)
        for (const auto& inc : K.boundary(x.degree + 1, s)) {
            if (inc.sign > 0) out.values[s] += x.values[inc.face];
            else out.values[s] -= x.values[inc.face];
        }
    return out;
}
} // namespace

IntCochain coboundary(const SimplicialComplex& K, const IntCochain& x, Overflow overflow) {
    return coboundary_impl(K, x, overflow);
}

RealCochain coboundary(const SimplicialComplex& K, const RealCochain& x, Overflow overflow) {
    return coboundary_impl(K, x, overflow);
}

// ----------------------------------------------------------------- DC•

DifferentialCochain DifferentialCochain::make(const SimplicialComplex& K, std::size_t degree, IntCochain c,
                                              RealCochain h, RealCochain omega) {
    if (c.degree != degree || c.values.size() != K.count(degree))
        throw ValidationError("differential cochain: c must be an integer " + std::to_string(degree) + "-cochain");
    if (degree == 0) {
        if (!h.values.empty()) throw ValidationError("differential cochain: h must be empty in degree 0");
        h.degree = 0;
    } else if (h.degree != degree - 1 || h.values.size() != K.count(degree - 1)) {
        throw ValidationError("differential cochain: h must be a real " + std::to_string(degree - 1) + "-cochain");
    }
    if (omega.degree != degree || omega.values.size() != K.count(degree))
        throw ValidationError("differential cochain: ω must be a real " + std::to_string(degree) + "-cochain");
    if (degree < 2 && !omega.is_zero()) throw ValidationError("differential cochain: ω must vanish in degree < 2");
    return {degree, std::move(c), std::move(h), std::move(omega)};
}

bool DifferentialCochain::is_zero() const { return c.is_zero() && h.is_zero() && omega.is_zero(); }

DifferentialCochain d_tilde(const SimplicialComplex& K, const DifferentialCochain& x) {
    const std::size_t k = x.degree;
    IntCochain dc = coboundary(K, x.c, Overflow::zero);
    RealCochain dh = k == 0 ? zero_real(K, 0) : coboundary(K, x.h, Overflow::zero);
    RealCochain h = x.omega - to_real(x.c) - dh;
    RealCochain w = k + 1 < 2 ? zero_real(K, k + 1) : coboundary(K, x.omega, Overflow::zero);
    return {k + 1, std::move(dc), std::move(h), std::move(w)};
}

// --------------------------------------------------------------- Cocycles

namespace {
double max_abs(const RealCochain& c) {
    double m = 0.0;
    for (const auto& v : c.values) m = std::max(m, std::abs(v.convert_to<double>()));
    return m;
}
} // namespace

DifferentialCocycle::DifferentialCocycle(Complex K, IntCochain c, RealCochain h, RealCochain omega)
    : K_(std::move(K)), c_(std::move(c)), h_(std::move(h)), omega_(std::move(omega)) {}

DifferentialCocycle DifferentialCocycle::make(Complex K, IntCochain c, RealCochain h, RealCochain omega,
                                              double tolerance) {
    if (!K) throw ValidationError("cocycle: null complex");
    DifferentialCochain::make(*K, 2, c, h, omega);
    if (!coboundary(*K, c, Overflow::zero).is_zero()) throw ValidationError("cocycle: δc != 0");
    if (max_abs(coboundary(*K, omega, Overflow::zero)) > tolerance) throw ValidationError("cocycle: δω != 0");
    const double r = max_abs(omega - to_real(c) - coboundary(*K, h, Overflow::zero));
    if (r > tolerance)
        throw ValidationError("cocycle: ω - c - δh is not zero (max " + std::to_string(r) + ")");
    return DifferentialCocycle(std::move(K), std::move(c), std::move(h), std::move(omega));
}

DifferentialCochain DifferentialCocycle::as_cochain() const { return {2, c_, h_, omega_}; }

bool DifferentialCocycle::operator==(const DifferentialCocycle& o) const {
    return (K_ == o.K_) && c_ == o.c_ && h_ == o.h_ && omega_ == o.omega_;
}

CocycleMorphism::CocycleMorphism(DifferentialCocycle s, DifferentialCocycle t, IntCochain e, RealCochain k)
    : source_(std::move(s)), target_(std::move(t)), e_(std::move(e)), k_(std::move(k)) {}

namespace {
void check_morphism_shape(const SimplicialComplex& K, const IntCochain& e, const RealCochain& k) {
    if (e.degree != 1 || e.values.size() != K.count(1)) throw ValidationError("morphism: e must be an integer 1-cochain");
    if (k.degree != 0 || k.values.size() != K.count(0)) throw ValidationError("morphism: k must be a real 0-cochain");
}
} // namespace

CocycleMorphism CocycleMorphism::make(DifferentialCocycle source, DifferentialCocycle target, IntCochain e,
                                      RealCochain k) {
    if (source.complex() != target.complex()) throw ValidationError("morphism: source and target complexes differ");
    const SimplicialComplex& K = *source.complex();
    check_morphism_shape(K, e, k);
    if (!(target.c() - source.c() == coboundary(K, e, Overflow::zero)))
        throw ValidationError("morphism: c' - c != δe");
    if (!(target.h() - source.h() == -coboundary(K, k) - to_real(e)))
        throw ValidationError("morphism: h' - h != -δk - e");
    if (!(target.omega() == source.omega())) throw ValidationError("morphism: ω' != ω");
    return CocycleMorphism(std::move(source), std::move(target), std::move(e), std::move(k));
}

CocycleMorphism CocycleMorphism::from_source(DifferentialCocycle source, IntCochain e, RealCochain k) {
    const SimplicialComplex& K = *source.complex();
    check_morphism_shape(K, e, k);
    DifferentialCocycle target(source.complex(), source.c() + coboundary(K, e, Overflow::zero),
                               source.h() - coboundary(K, k) - to_real(e), source.omega());
    return CocycleMorphism(std::move(source), std::move(target), std::move(e), std::move(k));
}

CocycleMorphism identity_morphism(const DifferentialCocycle& z) {
    return CocycleMorphism::from_source(z, zero_int(*z.complex(), 1), zero_real(*z.complex(), 0));
}

CocycleMorphism compose_morphisms(const CocycleMorphism& m2, const CocycleMorphism& m1) {
    if (!(m1.target() == m2.source()))
        throw ValidationError("compose: morphisms are not composable (target of the first != source of the second)");
    return CocycleMorphism::from_source(m1.source(), m1.e() + m2.e(), m1.k() + m2.k());
}

CocycleMorphism inverse_morphism(const CocycleMorphism& m) {
    return CocycleMorphism::from_source(m.target(), -m.e(), -m.k());
}

bool morphisms_equal(const CocycleMorphism& a, const CocycleMorphism& b) {
    if (!(a.source() == b.source()) || !(a.target() == b.target()))
        throw ValidationError("morphisms_equal: morphisms have different sources or targets");
    const SimplicialComplex& K = *a.source().complex();
    IntCochain m{0, {}};
    for (std::size_t v = 0; v < K.count(0); ++v) {
        const Rational d = -(a.k().values[v] - b.k().values[v]);
        if (!is_integer(d)) return false;
        m.values.push_back(to_int64(numerator(d), "morphisms_equal"));
    }
    return a.e() - b.e() == coboundary(K, m);
}

// ------------------------------------------------------------- DCh functor

CircleMap::CircleMap(Complex K, RealCochain lift, RealCochain pullback)
    : K_(std::move(K)), lift_(std::move(lift)), pullback_(std::move(pullback)) {
    if (!K_) throw ValidationError("circle map: null complex");
    if (lift_.degree != 0 || lift_.values.size() != K_->count(0))
        throw ValidationError("circle map: the lift must be a real 0-cochain");
    if (pullback_.degree != 1 || pullback_.values.size() != K_->count(1))
        throw ValidationError("circle map: the pullback must be a real 1-cochain");
    const RealCochain w = coboundary(*K_, lift_) - pullback_;
    for (const auto& v : w.values)
        if (!is_integer(v))
            throw ValidationError("circle map: winding inconsistency (δf̃ - f*dθ is not an integer on some edge)");
    if (!coboundary(*K_, pullback_, Overflow::zero).is_zero())
        throw ValidationError("circle map: winding inconsistency (f*dθ is not closed)");
}

CircleMap CircleMap::from_winding(Complex K, RealCochain lift, IntCochain winding) {
    if (!K) throw ValidationError("circle map: null complex");
    RealCochain pb = coboundary(*K, lift) - to_real(winding);
    return CircleMap(std::move(K), std::move(lift), std::move(pb));
}

IntCochain CircleMap::winding() const {
    const RealCochain w = coboundary(*K_, lift_) - pullback_;
    IntCochain out{1, {}};
    for (const auto& v : w.values) out.values.push_back(to_int64(numerator(v), "winding"));
    return out;
}

CircleMap CircleMap::operator*(const CircleMap& o) const {
    if (K_ != o.K_) throw ValidationError("circle map product: different complexes");
    return CircleMap(K_, lift_ + o.lift_, pullback_ + o.pullback_);
}

DifferentialCocycle dch_object(const Complex& K, const RealCochain& a) {
    if (!K) throw ValidationError("dch_object: null complex");
    if (a.degree != 1 || a.values.size() != K->count(1)) throw ValidationError("dch_object: a must be a real 1-cochain");
    return DifferentialCocycle::make(K, zero_int(*K, 2), a, coboundary(*K, a, Overflow::zero), 0.0);
}

CocycleMorphism dch_morphism(const CircleMap& f, const RealCochain& a) {
    const Complex& K = f.complex();
    const DifferentialCocycle source = dch_object(K, a);
    const DifferentialCocycle target = dch_object(K, a - f.pullback());
    return CocycleMorphism::make(source, target, -f.winding(), f.lift());
}

// -------------------------------------------------------------- Law suites

namespace {
// Calls fn with every vector of length `n` over `alphabet`.
template <class T, class Fn>
void for_each_word(std::size_t n, const std::vector<T>& alphabet, Fn&& fn) {
    std::vector<std::size_t> idx(n, 0);
    std::vector<T> word(n, alphabet.front());
    for (;;) {
        fn(word);
        std::size_t i = 0;
        while (i < n && ++idx[i] == alphabet.size()) {
            idx[i] = 0;
            word[i] = alphabet[0];
            ++i;
        }
        if (i == n) return;
        word[i] = alphabet[idx[i]];
    }
}

RealCochain base_potential(const SimplicialComplex& K) {
    RealCochain a{1, {}};
    for (std::size_t i = 0; i < K.count(1); ++i) a.values.emplace_back(static_cast<long>(i + 1), 3);
    return a;
}

std::size_t family_size(const SimplicialComplex& K) {
    double size = std::pow(3.0, static_cast<double>(K.count(1))) * std::pow(2.0, static_cast<double>(K.count(0)));
    if (size > 1e5) throw ValidationError("law suite: complex '" + K.name() + "' is too large for exhaustive checks");
    return static_cast<std::size_t>(size);
}

void tally(LawReport& r, bool ok) {
    ++r.cases;
    if (!ok) ++r.failures;
}

// Pattern of F2 applied out of `source`.
std::vector<CocycleMorphism> small_family(const DifferentialCocycle& source) {
    const SimplicialComplex& K = *source.complex();
    std::vector<CocycleMorphism> out;
    const std::size_t ne = std::min<std::size_t>(2, K.count(1));
    const std::size_t nv = std::min<std::size_t>(2, K.count(0));
    for_each_word<std::int64_t>(ne, {-1, 0, 1}, [&](const std::vector<std::int64_t>& ev) {
        for_each_word<Rational>(nv, {Rational(0), Rational(1, 2)}, [&](const std::vector<Rational>& kv) {
            IntCochain e = zero_int(K, 1);
            RealCochain k = zero_real(K, 0);
            std::copy(ev.begin(), ev.end(), e.values.begin());
            std::copy(kv.begin(), kv.end(), k.values.begin());
            out.push_back(CocycleMorphism::from_source(source, e, k));
        });
    });
    return out;
}
} // namespace

std::vector<LawReport> groupoid_law_suite(const Complex& K) {
    if (!K) throw ValidationError("law suite: null complex");
    family_size(*K);
    const DifferentialCocycle z = dch_object(K, base_potential(*K));
    const CocycleMorphism id = identity_morphism(z);
    LawReport left{"left_identity"}, right{"right_identity"}, inv{"inverse"}, involution{"inverse_involution"},
        gauge{"integer_gauge_equal"}, nongauge{"half_gauge_distinct"}, assoc{"associativity"},
        guard{"non_composable_rejected"};

    for_each_word<std::int64_t>(K->count(1), {-1, 0, 1}, [&](const std::vector<std::int64_t>& ev) {
        for_each_word<Rational>(K->count(0), {Rational(0), Rational(1, 2)}, [&](const std::vector<Rational>& kv) {
            const CocycleMorphism m = CocycleMorphism::from_source(z, IntCochain{1, ev}, RealCochain{0, kv});
            const CocycleMorphism id_t = identity_morphism(m.target());
            tally(left, morphisms_equal(compose_morphisms(id_t, m), m));
            tally(right, morphisms_equal(compose_morphisms(m, id), m));
            const CocycleMorphism mi = inverse_morphism(m);
            tally(inv, morphisms_equal(compose_morphisms(mi, m), id) &&
                           morphisms_equal(compose_morphisms(m, mi), id_t));
            tally(involution, morphisms_equal(inverse_morphism(mi), m));
            // [e - δn, k + n] with n the indicator of vertex 0.
            IntCochain n = zero_int(*K, 0);
            n.values[0] = 1;
            const CocycleMorphism shifted =
                CocycleMorphism::from_source(z, m.e() - coboundary(*K, n), m.k() + to_real(n));
            tally(gauge, morphisms_equal(m, shifted));
            // A constant shift keeps the target; by 1/2 it is not a gauge.
            RealCochain half{0, std::vector<Rational>(K->count(0), Rational(1, 2))};
            const CocycleMorphism moved = CocycleMorphism::from_source(z, m.e(), m.k() + half);
            tally(nongauge, !morphisms_equal(m, moved));
        });
    });

    for (const auto& m1 : small_family(z))
        for (const auto& m2 : small_family(m1.target()))
            for (const auto& m3 : small_family(m2.target()))
                tally(assoc, morphisms_equal(compose_morphisms(m3, compose_morphisms(m2, m1)),
                                             compose_morphisms(compose_morphisms(m3, m2), m1)));

    {
        IntCochain e = zero_int(*K, 1);
        e.values[0] = 1;
        const CocycleMorphism m = CocycleMorphism::from_source(z, e, zero_real(*K, 0));
        bool threw = false;
        try {
            compose_morphisms(m, m);
        } catch (const ValidationError&) {
            threw = true;
        }
        tally(guard, threw);
    }
    return {left, right, inv, involution, gauge, nongauge, assoc, guard};
}

std::vector<LawReport> dch_functor_suite(const Complex& K) {
    if (!K) throw ValidationError("law suite: null complex");
    family_size(*K);
    const RealCochain a = base_potential(*K);
    LawReport unit{"dch_identity"}, lift{"lift_independence"}, functor{"dch_composition"};

    {
        const CircleMap one = CircleMap::from_winding(K, zero_real(*K, 0), zero_int(*K, 1));
        tally(unit, morphisms_equal(dch_morphism(one, a), identity_morphism(dch_object(K, a))));
    }

    auto make_map = [&](const std::vector<Rational>& lv, const std::vector<std::int64_t>& wv) -> std::optional<CircleMap> {
        try {
            return CircleMap::from_winding(K, RealCochain{0, lv}, IntCochain{1, wv});
        } catch (const ValidationError&) {
            return std::nullopt; // winding not a cocycle
        }
    };

    for_each_word<Rational>(K->count(0), {Rational(0), Rational(1, 2)}, [&](const std::vector<Rational>& lv) {
        for_each_word<std::int64_t>(K->count(1), {-1, 0, 1}, [&](const std::vector<std::int64_t>& wv) {
            const auto f = make_map(lv, wv);
            if (!f) return;
            for (std::size_t v = 0; v < K->count(0); ++v) {
                IntCochain n = zero_int(*K, 0);
                n.values[v] = 1;
                const CircleMap g(K, f->lift() + to_real(n), f->pullback());
                tally(lift, morphisms_equal(dch_morphism(*f, a), dch_morphism(g, a)));
            }
        });
    });

    std::vector<CircleMap> maps;
    const std::size_t last = K->count(1) - 1;
    for (const Rational& l0 : {Rational(0), Rational(1, 2)})
        for (std::int64_t w0 : {-1, 0, 1})
            for (std::int64_t wl : {-1, 0, 1}) {
                std::vector<Rational> lv(K->count(0), Rational(0));
                std::vector<std::int64_t> wv(K->count(1), 0);
                lv[0] = l0;
                wv[0] += w0;
                wv[last] += wl;
                if (auto f = make_map(lv, wv)) maps.push_back(*f);
            }
    for (const auto& f : maps)
        for (const auto& g : maps) {
            // f: a → a - f*dθ, then g out of the new potential.
            const CocycleMorphism mf = dch_morphism(f, a);
            const CocycleMorphism mg = dch_morphism(g, a - f.pullback());
            tally(functor, morphisms_equal(compose_morphisms(mg, mf), dch_morphism(g * f, a)));
        }
    return {unit, lift, functor};
}

// ----------------------------------------------------------- Smith form

namespace {
using IMat = std::vector<std::vector<Integer>>;

IMat identity(std::size_t n) {
    IMat m(n, std::vector<Integer>(n, 0));
    for (std::size_t i = 0; i < n; ++i) m[i][i] = 1;
    return m;
}
} // namespace

SmithForm smith_normal_form(const std::vector<std::vector<std::int64_t>>& A) {
    const std::size_t rows = A.size();
    const std::size_t cols = rows ? A.front().size() : 0;
    SmithForm S;
    S.D.assign(rows, std::vector<Integer>(cols, 0));
    for (std::size_t i = 0; i < rows; ++i)
        for (std::size_t j = 0; j < cols; ++j) S.D[i][j] = A[i][j];
    S.P = identity(rows);
    S.Q = identity(cols);
    S.Q_inv = identity(cols);
    IMat& D = S.D;

    auto swap_rows = [&](std::size_t a, std::size_t b) {
        if (a == b) return;
        std::swap(D[a], D[b]);
        std::swap(S.P[a], S.P[b]);
    };
    auto swap_cols = [&](std::size_t a, std::size_t b) {
        if (a == b) return;
        for (auto& r : D) std::swap(r[a], r[b]);
        for (auto& r : S.Q) std::swap(r[a], r[b]);
        std::swap(S.Q_inv[a], S.Q_inv[b]);
    };
    // row_i -= q row_t
    auto row_sub = [&](std::size_t i, std::size_t t, const Integer& q) {
        for (std::size_t j = 0; j < cols; ++j) D[i][j] -= q * D[t][j];
        for (std::size_t j = 0; j < rows; ++j) S.P[i][j] -= q * S.P[t][j];
    };
    // col_j -= q col_t
    auto col_sub = [&](std::size_t j, std::size_t t, const Integer& q) {
        for (std::size_t i = 0; i < rows; ++i) D[i][j] -= q * D[i][t];
        for (std::size_t i = 0; i < cols; ++i) S.Q[i][j] -= q * S.Q[i][t];
        for (std::size_t i = 0; i < cols; ++i) S.Q_inv[t][i] += q * S.Q_inv[j][i];
    };

    for (std::size_t t = 0; t < std::min(rows, cols); ++t) {
        // Smallest nonzero entry of the trailing block as pivot.
        std::optional<std::pair<std::size_t, std::size_t>> best;
        for (std::size_t i = t; i < rows; ++i)
            for (std::size_t j = t; j < cols; ++j)
                if (D[i][j] != 0 && (!best || abs(D[i][j]) < abs(D[best->first][best->second]))) best = {{i, j}};
        if (!best) break;
        swap_rows(t, best->first);
        swap_cols(t, best->second);
        for (;;) {
            bool clean = true;
            for (std::size_t i = t + 1; i < rows; ++i)
                if (D[i][t] != 0) {
                    row_sub(i, t, D[i][t] / D[t][t]);
                    if (D[i][t] != 0) clean = false;
                }
            for (std::size_t j = t + 1; j < cols; ++j)
                if (D[t][j] != 0) {
                    col_sub(j, t, D[t][j] / D[t][t]);
                    if (D[t][j] != 0) clean = false;
                }
            if (!clean) {
                // Move the smallest remainder onto the diagonal and repeat.
                std::size_t bi = t, bj = t;
                for (std::size_t i = t + 1; i < rows; ++i)
                    if (D[i][t] != 0 && abs(D[i][t]) < abs(D[bi][bj])) bi = i, bj = t;
                for (std::size_t j = t + 1; j < cols; ++j)
                    if (D[t][j] != 0 && abs(D[t][j]) < abs(D[bi][bj])) bi = t, bj = j;
                swap_rows(t, bi);
                swap_cols(t, bj);
                continue;
            }
            // Divisibility: the pivot must divide the trailing block.
            std::optional<std::size_t> offending;
            for (std::size_t i = t + 1; i < rows && !offending; ++i)
                for (std::size_t j = t + 1; j < cols; ++j)
                    if (D[i][j] % D[t][t] != 0) {
                        offending = i;
                        break;
                    }
            if (!offending) break;
            row_sub(t, *offending, Integer(-1)); // row_t += row_i
        }
        if (D[t][t] < 0) {
            for (auto& v : D[t]) v = -v;
            for (auto& v : S.P[t]) v = -v;
        }
        S.diagonal.push_back(D[t][t]);
        ++S.rank;
    }
    return S;
}

// ----------------------------------------------------------- Integral lift

LiftResult integral_lift(const Complex& K, const RealCochain& omega, double tolerance) {
    if (!K) throw ValidationError("integral_lift: null complex");
    if (omega.degree != 2 || omega.values.size() != K->count(2))
        throw ValidationError("integral_lift: ω must be a real 2-cochain");
    if (!coboundary(*K, omega, Overflow::zero).is_zero())
        throw ValidationError("integral_lift: ω is not closed (δω != 0)");

    LiftResult result;
    const std::size_t n1 = K->count(1);
    const std::size_t n2 = K->count(2);
    if (n2 == 0) {
        result.feasible = true;
        result.cocycle = DifferentialCocycle::make(K, zero_int(*K, 2), zero_real(*K, 1), omega, tolerance);
        return result;
    }

    const SmithForm S = smith_normal_form(K->boundary_matrix(2));
    // Z_2 = ker ∂_2 is spanned by the columns of Q past the rank.
    std::vector<Integer> y(n2, 0);
    for (std::size_t j = S.rank; j < n2; ++j) {
        PeriodEntry entry;
        Rational period = 0;
        for (std::size_t i = 0; i < n2; ++i) {
            entry.cycle.push_back(to_int64(S.Q[i][j], "integral_lift"));
            if (S.Q[i][j] != 0) period += Rational(S.Q[i][j]) * omega.values[i];
        }
        entry.period = period;
        const Integer nearest = round_rational(period);
        entry.integral = std::abs((period - Rational(nearest)).convert_to<double>()) <= tolerance;
        if (!entry.integral && !result.certificate) result.certificate = entry.cycle;
        y[j] = nearest;
        result.periods.push_back(std::move(entry));
    }
    if (result.certificate) return result;

    // c = y Q⁻¹ has period n_j on the j-th basis cycle and vanishes on the
    // remaining columns of Q.
    IntCochain c{2, std::vector<std::int64_t>(n2, 0)};
    for (std::size_t i = 0; i < n2; ++i) {
        Integer acc = 0;
        for (std::size_t j = S.rank; j < n2; ++j) acc += y[j] * S.Q_inv[j][i];
        c.values[i] = to_int64(acc, "integral_lift");
    }
    // δh = b with δ_1 = ∂_2ᵀ = Q⁻ᵀ Dᵀ P⁻ᵀ: u = P⁻ᵀ h solves Dᵀ u = Qᵀ b.
    const RealCochain b = omega - to_real(c);
    std::vector<Rational> u(n1, Rational(0));
    for (std::size_t j = 0; j < S.rank; ++j) {
        Rational qb = 0;
        for (std::size_t i = 0; i < n2; ++i)
            if (S.Q[i][j] != 0) qb += Rational(S.Q[i][j]) * b.values[i];
        u[j] = qb / Rational(S.diagonal[j]);
    }
    RealCochain h{1, std::vector<Rational>(n1, Rational(0))};
    for (std::size_t e = 0; e < n1; ++e)
        for (std::size_t j = 0; j < S.rank; ++j)
            if (S.P[j][e] != 0) h.values[e] += Rational(S.P[j][e]) * u[j];

    const double residual = max_abs(b - coboundary(*K, h, Overflow::zero));
    if (residual > tolerance)
        throw Error("integral_lift: linear solve left residual " + std::to_string(residual), true);
    result.feasible = true;
    result.cocycle = DifferentialCocycle::make(K, std::move(c), std::move(h), omega, tolerance);
    return result;
}

// ---------------------------------------------------------- Form sampling

namespace {
constexpr double kStable = 1e-9;

template <class Level>
double refine(Level level, int max_level, const char* what) {
    double prev = level(0);
    double prev_extrapolated = prev;
    for (int L = 1; L <= max_level; ++L) {
        const double cur = level(L);
        // Midpoint error is O(h²): Richardson-extrapolate successive levels.
        const double extrapolated = (4.0 * cur - prev) / 3.0;
        if (L >= 2 && std::abs(extrapolated - prev_extrapolated) <= kStable) return extrapolated;
        prev = cur;
        prev_extrapolated = extrapolated;
    }
    throw Error(std::string(what) + ": midpoint quadrature did not stabilise to 1e-9", true);
}

void require_xy(const Expression& e) {
    if (e.variables()->size() != 2 || (*e.variables())[0] != "x" || (*e.variables())[1] != "y")
        throw ValidationError("form sampling: expressions must be over (x, y)");
}
} // namespace

RealCochain sample_one_form(const SimplicialComplex& K, const Expression& A, const Expression& B) {
    if (!K.has_geometry()) throw ValidationError("form sampling: complex '" + K.name() + "' has no geometry");
    require_xy(A);
    require_xy(B);
    RealCochain out{1, {}};
    for (std::size_t s = 0; s < K.count(1); ++s) {
        const auto& p = K.simplex_points(1, s);
        const double dx = p[1][0] - p[0][0], dy = p[1][1] - p[0][1];
        auto level = [&](int L) {
            const std::size_t n = std::size_t{1} << L;
            double acc = 0.0;
            for (std::size_t i = 0; i < n; ++i) {
                const double t = (static_cast<double>(i) + 0.5) / static_cast<double>(n);
                const double x[2] = {p[0][0] + t * dx, p[0][1] + t * dy};
                acc += A.evaluate(x) * dx + B.evaluate(x) * dy;
            }
            return acc / static_cast<double>(n);
        };
        out.values.emplace_back(refine(level, 20, "edge integral"));
    }
    return out;
}

RealCochain sample_two_form(const SimplicialComplex& K, const Expression& F) {
    if (!K.has_geometry()) throw ValidationError("form sampling: complex '" + K.name() + "' has no geometry");
    require_xy(F);
    RealCochain out{2, {}};
    for (std::size_t s = 0; s < K.count(2); ++s) {
        const auto& p = K.simplex_points(2, s);
        const double ux = p[1][0] - p[0][0], uy = p[1][1] - p[0][1];
        const double vx = p[2][0] - p[0][0], vy = p[2][1] - p[0][1];
        const double det = ux * vy - uy * vx; // signed: orientation relative to dx∧dy
        auto level = [&](int L) {
            const std::size_t n = std::size_t{1} << L;
            const double inv = 1.0 / static_cast<double>(n);
            double acc = 0.0;
            auto at = [&](double a, double b) {
                const double x[2] = {p[0][0] + a * inv * ux + b * inv * vx, p[0][1] + a * inv * uy + b * inv * vy};
                return F.evaluate(x);
            };
            for (std::size_t i = 0; i < n; ++i)
                for (std::size_t j = 0; i + j < n; ++j) {
                    const double a = static_cast<double>(i), b = static_cast<double>(j);
                    acc += at(a + 1.0 / 3.0, b + 1.0 / 3.0);
                    if (i + j + 1 < n) acc += at(a + 2.0 / 3.0, b + 2.0 / 3.0);
                }
            return acc * det * 0.5 * inv * inv;
        };
        out.values.emplace_back(refine(level, 9, "triangle integral"));
    }
    return out;
}

} // namespace pq::dc
