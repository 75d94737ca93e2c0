#include "hpc/certificate.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <limits>
#include <random>
#include <sstream>

namespace hpc {

// ---------------------------------------------------------------- polynomials

Polynomial Polynomial::constant(std::size_t n, double c) {
    Polynomial p;
    p.dim = n;
    if (c != 0.0) p.terms[std::vector<int>(n, 0)] = c;
    return p;
}

Polynomial Polynomial::variable(std::size_t n, std::size_t i) {
    Polynomial p;
    p.dim = n;
    std::vector<int> e(n, 0);
    e[i] = 1;
    p.terms[e] = 1.0;
    return p;
}

double Polynomial::eval(const double* x) const {
    double s = 0.0;
    for (auto& [e, c] : terms) {
        double m = c;
        for (std::size_t i = 0; i < dim; ++i)
            for (int k = 0; k < e[i]; ++k) m *= x[i];
        s += m;
    }
    return s;
}

Polynomial Polynomial::derivative(std::size_t i) const {
    Polynomial r;
    r.dim = dim;
    for (auto& [e, c] : terms) {
        if (e[i] == 0) continue;
        auto f = e;
        f[i] -= 1;
        r.terms[f] += c * e[i];
    }
    return r;
}

int Polynomial::degree() const {
    int d = 0;
    for (auto& [e, c] : terms) {
        int s = 0;
        for (int k : e) s += k;
        d = std::max(d, s);
    }
    return d;
}

bool Polynomial::is_zero() const {
    return std::all_of(terms.begin(), terms.end(), [](auto& t) { return t.second == 0.0; });
}

std::string Polynomial::text(const std::vector<std::string>& names) const {
    std::ostringstream os;
    os.precision(10);
    bool first = true;
    // higher degree first, constant last
    std::vector<std::pair<std::vector<int>, double>> ts(terms.begin(), terms.end());
    std::stable_sort(ts.begin(), ts.end(), [](auto& a, auto& b) {
        int da = 0, db = 0;
        for (int k : a.first) da += k;
        for (int k : b.first) db += k;
        if ((da == 0) != (db == 0)) return db == 0;
        return a.first > b.first;
    });
    for (auto& [e, c] : ts) {
        if (c == 0.0) continue;
        double a = std::abs(c);
        if (first) os << (c < 0 ? "-" : "");
        else os << (c < 0 ? " - " : " + ");
        first = false;
        bool mono = false;
        std::ostringstream m;
        for (std::size_t i = 0; i < dim; ++i) {
            if (e[i] == 0) continue;
            if (mono) m << '*';
            m << names[i];
            if (e[i] > 1) m << '^' << e[i];
            mono = true;
        }
        if (!mono) os << a;
        else if (a == 1.0) os << m.str();
        else os << a << '*' << m.str();
    }
    if (first) os << '0';
    return os.str();
}

Polynomial Polynomial::operator+(const Polynomial& o) const {
    Polynomial r = *this;
    for (auto& [e, c] : o.terms) r.terms[e] += c;
    std::erase_if(r.terms, [](auto& t) { return t.second == 0.0; });
    return r;
}

Polynomial Polynomial::operator-(const Polynomial& o) const { return *this + o.scaled(-1.0); }

Polynomial Polynomial::operator*(const Polynomial& o) const {
    Polynomial r;
    r.dim = dim;
    for (auto& [e1, c1] : terms)
        for (auto& [e2, c2] : o.terms) {
            std::vector<int> e(dim);
            for (std::size_t i = 0; i < dim; ++i) e[i] = e1[i] + e2[i];
            r.terms[e] += c1 * c2;
        }
    std::erase_if(r.terms, [](auto& t) { return t.second == 0.0; });
    return r;
}

Polynomial Polynomial::scaled(double k) const {
    Polynomial r;
    r.dim = dim;
    if (k == 0.0) return r;
    for (auto& [e, c] : terms) r.terms[e] = c * k;
    return r;
}

Polynomial lie_derivative(const Polynomial& phi, const std::vector<Polynomial>& f) {
    if (f.size() != phi.dim) throw CertError("vector field dimension does not match the polynomial");
    Polynomial r = Polynomial::constant(phi.dim, 0.0);
    for (std::size_t i = 0; i < phi.dim; ++i) r = r + phi.derivative(i) * f[i];
    return r;
}

namespace {

struct PolyParser {
    const std::string& s;
    const std::vector<std::string>& names;
    std::size_t i = 0;

    [[noreturn]] void fail(const std::string& msg) const {
        throw CertError("polynomial '" + s + "' at offset " + std::to_string(i) + ": " + msg);
    }
    void ws() {
        while (i < s.size() && std::isspace(static_cast<unsigned char>(s[i]))) ++i;
    }
    bool eat(char c) {
        ws();
        if (i < s.size() && s[i] == c) {
            ++i;
            return true;
        }
        return false;
    }
    Polynomial sum() {
        Polynomial p = product();
        for (;;) {
            if (eat('+')) p = p + product();
            else if (eat('-')) p = p - product();
            else return p;
        }
    }
    Polynomial product() {
        Polynomial p = power();
        while (eat('*')) p = p * power();
        return p;
    }
    Polynomial power() {
        Polynomial b = atom();
        if (eat('^')) {
            ws();
            std::size_t j = i;
            while (j < s.size() && std::isdigit(static_cast<unsigned char>(s[j]))) ++j;
            if (j == i) fail("expected an integer exponent");
            int k = std::stoi(s.substr(i, j - i));
            i = j;
            Polynomial r = Polynomial::constant(names.size(), 1.0);
            for (int n = 0; n < k; ++n) r = r * b;
            return r;
        }
        return b;
    }
    Polynomial atom() {
        ws();
        if (eat('-')) return atom().scaled(-1.0);
        if (eat('+')) return atom();
        if (eat('(')) {
            Polynomial p = sum();
            if (!eat(')')) fail("expected ')'");
            return p;
        }
        if (i < s.size() && (std::isdigit(static_cast<unsigned char>(s[i])) || s[i] == '.')) {
            std::size_t used = 0;
            double v = std::stod(s.substr(i), &used);
            i += used;
            return Polynomial::constant(names.size(), v);
        }
        std::size_t j = i;
        while (j < s.size() && (std::isalnum(static_cast<unsigned char>(s[j])) || s[j] == '_')) ++j;
        if (j == i) fail("unexpected character");
        std::string id = s.substr(i, j - i);
        i = j;
        auto it = std::find(names.begin(), names.end(), id);
        if (it == names.end()) fail("unknown coordinate '" + id + "'");
        return Polynomial::variable(names.size(), static_cast<std::size_t>(it - names.begin()));
    }
};

}  // namespace

Polynomial parse_polynomial(const std::string& s, const std::vector<std::string>& names) {
    PolyParser p{s, names};
    Polynomial r = p.sum();
    p.ws();
    if (p.i != s.size()) p.fail("trailing input");
    r.dim = names.size();
    return r;
}

bool Constraint::holds(const double* x) const {
    double v = poly.eval(x);
    switch (rel) {
        case Rel::Le: return v <= 0.0;
        case Rel::Lt: return v < 0.0;
        case Rel::Ge: return v >= 0.0;
        case Rel::Gt: return v > 0.0;
    }
    return false;
}

Constraint parse_constraint(const std::string& s, const std::vector<std::string>& names) {
    static const std::pair<const char*, Constraint::Rel> ops[] = {
        {"<=", Constraint::Rel::Le}, {">=", Constraint::Rel::Ge}, {"<", Constraint::Rel::Lt}, {">", Constraint::Rel::Gt}};
    for (auto& [op, rel] : ops) {
        auto k = s.find(op);
        if (k == std::string::npos) continue;
        Constraint c;
        c.rel = rel;
        c.poly = parse_polynomial(s.substr(0, k), names) - parse_polynomial(s.substr(k + std::string(op).size()), names);
        return c;
    }
    throw CertError("constraint '" + s + "' has no relational operator");
}

bool Region::contains(const double* x) const {
    for (std::size_t i = 0; i < lo.size(); ++i)
        if (x[i] < lo[i] || x[i] > hi[i]) return false;
    return std::all_of(constraints.begin(), constraints.end(), [&](const Constraint& c) { return c.holds(x); });
}

int HybridAutomaton::coord(const std::string& n) const {
    auto it = std::find(coords.begin(), coords.end(), n);
    return it == coords.end() ? -1 : static_cast<int>(it - coords.begin());
}

// ---------------------------------------------------------------- JSON

namespace {

Region region_from_json(const nlohmann::json& j, const HybridAutomaton& h) {
    Region r;
    r.lo = h.lo;
    r.hi = h.hi;
    if (j.contains("box"))
        for (auto& [k, v] : j.at("box").items()) {
            int i = h.coord(k);
            if (i < 0) throw CertError("box bound for unknown coordinate '" + k + "'");
            r.lo[static_cast<std::size_t>(i)] = std::max(r.lo[static_cast<std::size_t>(i)], v.at(0).get<double>());
            r.hi[static_cast<std::size_t>(i)] = std::min(r.hi[static_cast<std::size_t>(i)], v.at(1).get<double>());
        }
    if (j.contains("constraints"))
        for (auto& c : j.at("constraints")) r.constraints.push_back(parse_constraint(c.get<std::string>(), h.coords));
    return r;
}

std::vector<Polynomial> field_from_json(const nlohmann::json& j, const HybridAutomaton& h, bool identity) {
    std::size_t n = h.coords.size();
    std::vector<Polynomial> f;
    for (std::size_t i = 0; i < n; ++i) f.push_back(identity ? Polynomial::variable(n, i) : Polynomial::constant(n, 0.0));
    if (j.is_object())
        for (auto& [k, v] : j.items()) {
            int i = h.coord(k);
            if (i < 0) throw CertError("unknown coordinate '" + k + "'");
            f[static_cast<std::size_t>(i)] = parse_polynomial(v.is_string() ? v.get<std::string>() : v.dump(), h.coords);
        }
    return f;
}

int location_index(const HybridAutomaton& h, const std::string& n) {
    for (std::size_t i = 0; i < h.locations.size(); ++i)
        if (h.locations[i].name == n) return static_cast<int>(i);
    throw CertError("unknown location '" + n + "'");
}

}  // namespace

HybridAutomaton automaton_from_json(const nlohmann::json& j) {
    HybridAutomaton h;
    try {
        h.coords = j.at("coordinates").get<std::vector<std::string>>();
        std::size_t n = h.coords.size();
        h.lo.assign(n, -std::numeric_limits<double>::infinity());
        h.hi.assign(n, std::numeric_limits<double>::infinity());
        if (j.contains("box"))
            for (auto& [k, v] : j.at("box").items()) {
                int i = h.coord(k);
                if (i < 0) throw CertError("box bound for unknown coordinate '" + k + "'");
                h.lo[static_cast<std::size_t>(i)] = v.at(0).get<double>();
                h.hi[static_cast<std::size_t>(i)] = v.at(1).get<double>();
            }
        for (auto& lj : j.at("locations")) {
            Location l;
            l.name = lj.at("name").get<std::string>();
            l.flow = field_from_json(lj.value("flow", nlohmann::json::object()), h, false);
            l.invariant = region_from_json(lj.value("invariant", nlohmann::json::object()), h);
            for (auto& r : lj.value("init", nlohmann::json::array())) l.init.push_back(region_from_json(r, h));
            for (auto& r : lj.value("unsafe", nlohmann::json::array())) l.unsafe.push_back(region_from_json(r, h));
            h.locations.push_back(std::move(l));
        }
        for (auto& ej : j.value("edges", nlohmann::json::array())) {
            Edge e;
            e.name = ej.value("name", "e" + std::to_string(h.edges.size()));
            e.from = location_index(h, ej.at("from").get<std::string>());
            e.to = location_index(h, ej.at("to").get<std::string>());
            e.guard = region_from_json(ej.value("guard", nlohmann::json::object()), h);
            e.reset = field_from_json(ej.value("reset", nlohmann::json::object()), h, true);
            h.edges.push_back(std::move(e));
        }
    } catch (const nlohmann::json::exception& e) {
        throw CertError(std::string("automaton JSON: ") + e.what());
    }
    return h;
}

BarrierCertificate certificate_from_json(const nlohmann::json& j, const HybridAutomaton& h) {
    BarrierCertificate c;
    try {
        std::size_t nl = h.locations.size(), ne = h.edges.size();
        auto per = [&](const char* key, std::size_t count, auto name_of, double dflt) {
            std::vector<double> v(count, dflt);
            if (!j.contains(key)) return v;
            const auto& x = j.at(key);
            if (x.is_number()) std::fill(v.begin(), v.end(), x.get<double>());
            else
                for (std::size_t i = 0; i < count; ++i)
                    if (x.contains(name_of(i))) v[i] = x.at(name_of(i)).template get<double>();
            return v;
        };
        c.lambda = per("lambda", nl, [&](std::size_t i) { return h.locations[i].name; }, 0.0);
        c.gamma = per("gamma", ne, [&](std::size_t i) { return h.edges[i].name; }, 1.0);
        for (std::size_t i = 0; i < ne; ++i)
            if (c.gamma[i] < 0.0)
                throw CertError("gamma for edge '" + h.edges[i].name + "' is negative");
        if (j.contains("phi")) {
            const auto& ph = j.at("phi");
            for (std::size_t i = 0; i < nl; ++i) {
                std::string s;
                if (ph.is_string()) s = ph.get<std::string>();
                else if (ph.contains(h.locations[i].name)) s = ph.at(h.locations[i].name).get<std::string>();
                else throw CertError("no certificate for location '" + h.locations[i].name + "'");
                c.phi.push_back(parse_polynomial(s, h.coords));
            }
        }
    } catch (const nlohmann::json::exception& e) {
        throw CertError(std::string("certificate JSON: ") + e.what());
    }
    return c;
}

// ---------------------------------------------------------------- sampling

std::vector<double> halton(std::uint64_t index, std::size_t dim) {
    static const int primes[] = {2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37, 41, 43, 47, 53, 59, 61, 67, 71, 73, 79, 83, 89, 97};
    if (dim > std::size(primes)) throw CertError("Halton sampling supports at most 25 dimensions");
    std::vector<double> out(dim);
    for (std::size_t d = 0; d < dim; ++d) {
        double f = 1.0, r = 0.0;
        std::uint64_t i = index;
        int b = primes[d];
        while (i > 0) {
            f /= b;
            r += f * static_cast<double>(i % static_cast<std::uint64_t>(b));
            i /= static_cast<std::uint64_t>(b);
        }
        out[d] = r;
    }
    return out;
}

namespace {

// Narrows the box with constraints of the form a*x + b REL 0.
void tighten(Region& r) {
    for (auto& c : r.constraints) {
        int var = -1;
        double a = 0.0, b = 0.0;
        bool linear = true;
        for (auto& [e, coef] : c.poly.terms) {
            int deg = 0, which = -1;
            for (std::size_t i = 0; i < e.size(); ++i)
                if (e[i]) {
                    deg += e[i];
                    which = static_cast<int>(i);
                }
            if (deg == 0) b += coef;
            else if (deg == 1 && (var < 0 || var == which)) {
                var = which;
                a += coef;
            } else linear = false;
        }
        if (!linear || var < 0 || a == 0.0) continue;
        double bound = -b / a;
        bool upper = (c.rel == Constraint::Rel::Le || c.rel == Constraint::Rel::Lt) == (a > 0);
        auto i = static_cast<std::size_t>(var);
        if (upper) r.hi[i] = std::min(r.hi[i], bound);
        else r.lo[i] = std::max(r.lo[i], bound);
    }
}

template <class Margin>
ConditionReport sample_condition(const std::string& cond, const std::string& where, Region r, const CheckConfig& cfg,
                                 Margin margin) {
    ConditionReport rep;
    rep.condition = cond;
    rep.where = where;
    rep.min_margin = std::numeric_limits<double>::infinity();
    rep.max_margin = -std::numeric_limits<double>::infinity();
    tighten(r);
    std::size_t n = r.lo.size();
    for (std::size_t i = 0; i < n; ++i) {
        if (!std::isfinite(r.lo[i]) || !std::isfinite(r.hi[i]))
            throw CertError(cond + " at " + where + ": set is unbounded; box bounds are required for sampling");
        if (r.lo[i] > r.hi[i]) {
            rep.note = "empty set";
            rep.min_margin = rep.max_margin = 0.0;
            return rep;
        }
    }
    std::vector<double> x(n);
    auto visit = [&](const std::vector<double>& pt) {
        double m = margin(pt.data());
        if (m < rep.min_margin) {
            rep.min_margin = m;
            rep.witness = pt;
        }
        rep.max_margin = std::max(rep.max_margin, m);
        if (m < -cfg.tol) ++rep.violations;
    };
    // box vertices over non-degenerate coordinates
    std::vector<std::size_t> free_dims;
    for (std::size_t i = 0; i < n; ++i)
        if (r.hi[i] > r.lo[i]) free_dims.push_back(i);
    if (free_dims.size() <= 16) {
        for (std::uint64_t mask = 0; mask < (1ULL << free_dims.size()); ++mask) {
            for (std::size_t i = 0; i < n; ++i) x[i] = r.lo[i];
            for (std::size_t k = 0; k < free_dims.size(); ++k)
                if (mask >> k & 1ULL) x[free_dims[k]] = r.hi[free_dims[k]];
            if (!r.contains(x.data())) continue;
            ++rep.vertices;
            visit(x);
        }
    }
    long attempts = 0, limit = cfg.samples * cfg.max_attempts_factor;
    std::vector<double> seed_pt;
    for (std::uint64_t idx = 1; rep.samples < cfg.samples && attempts < limit; ++idx, ++attempts) {
        auto h = halton(idx, n);
        for (std::size_t i = 0; i < n; ++i) x[i] = r.lo[i] + (r.hi[i] - r.lo[i]) * h[i];
        if (!r.contains(x.data())) continue;
        ++rep.samples;
        visit(x);
        seed_pt = x;
    }
    if (rep.samples < cfg.samples && !seed_pt.empty()) {
        // thin set: hit-and-run with shrinking chords from the last accepted point
        long before = rep.samples;
        std::mt19937_64 rng(1);
        std::normal_distribution<double> gauss;
        std::uniform_real_distribution<double> unit;
        std::vector<double> cur = seed_pt, dir(n), cand(n);
        long stalls = 0;
        while (rep.samples < cfg.samples && stalls < cfg.samples) {
            for (std::size_t i = 0; i < n; ++i) dir[i] = r.hi[i] > r.lo[i] ? gauss(rng) * (r.hi[i] - r.lo[i]) : 0.0;
            double tmin = -std::numeric_limits<double>::infinity(), tmax = std::numeric_limits<double>::infinity();
            for (std::size_t i = 0; i < n; ++i) {
                if (dir[i] == 0.0) continue;
                double a = (r.lo[i] - cur[i]) / dir[i], b = (r.hi[i] - cur[i]) / dir[i];
                tmin = std::max(tmin, std::min(a, b));
                tmax = std::min(tmax, std::max(a, b));
            }
            bool moved = false;
            for (int k = 0; k < 60 && tmax > tmin; ++k) {
                double t = tmin + (tmax - tmin) * unit(rng);
                for (std::size_t i = 0; i < n; ++i) cand[i] = std::clamp(cur[i] + t * dir[i], r.lo[i], r.hi[i]);
                if (r.contains(cand.data())) {
                    moved = true;
                    break;
                }
                (t > 0 ? tmax : tmin) = t;
            }
            if (!moved) {
                ++stalls;
                continue;
            }
            cur = cand;
            ++rep.samples;
            visit(cur);
        }
        rep.note = "rejection accepted " + std::to_string(before) + "; " + std::to_string(rep.samples - before) +
                   " more from hit-and-run";
    }
    if (rep.samples < cfg.samples) rep.note = "acceptance rate too low; fewer samples than requested";
    if (rep.samples == 0 && rep.vertices == 0) {
        rep.note = "no sample satisfied the set constraints";
        rep.min_margin = rep.max_margin = 0.0;
    }
    return rep;
}

Region intersect(const Region& a, const Region& b) {
    Region r = a;
    for (std::size_t i = 0; i < r.lo.size(); ++i) {
        r.lo[i] = std::max(r.lo[i], b.lo[i]);
        r.hi[i] = std::min(r.hi[i], b.hi[i]);
    }
    r.constraints.insert(r.constraints.end(), b.constraints.begin(), b.constraints.end());
    return r;
}

}  // namespace

CertReport check_certificate(const HybridAutomaton& h, const BarrierCertificate& c, const CheckConfig& cfg) {
    if (c.phi.size() != h.locations.size()) throw CertError("certificate has no function for every location");
    CertReport rep;
    rep.coords = h.coords;
    for (std::size_t l = 0; l < h.locations.size(); ++l) {
        const Location& loc = h.locations[l];
        const Polynomial& phi = c.phi[l];
        for (std::size_t k = 0; k < loc.init.size(); ++k)
            rep.conditions.push_back(sample_condition("BC-1", loc.name + (loc.init.size() > 1 ? "#" + std::to_string(k) : ""),
                                                      loc.init[k], cfg, [&](const double* x) { return -phi.eval(x); }));
        Polynomial lie = lie_derivative(phi, loc.flow);
        Polynomial bc2 = lie - phi.scaled(c.lambda[l]);
        rep.conditions.push_back(sample_condition("BC-2", loc.name, loc.invariant, cfg,
                                                  [&](const double* x) { return -bc2.eval(x); }));
        for (std::size_t k = 0; k < loc.unsafe.size(); ++k)
            rep.conditions.push_back(sample_condition("BC-4", loc.name + (loc.unsafe.size() > 1 ? "#" + std::to_string(k) : ""),
                                                      loc.unsafe[k], cfg, [&](const double* x) { return phi.eval(x); }));
    }
    for (std::size_t e = 0; e < h.edges.size(); ++e) {
        const Edge& ed = h.edges[e];
        const Polynomial& src = c.phi[static_cast<std::size_t>(ed.from)];
        const Polynomial& dst = c.phi[static_cast<std::size_t>(ed.to)];
        double g = c.gamma[e];
        Region dom = intersect(ed.guard, h.locations[static_cast<std::size_t>(ed.from)].invariant);
        std::vector<double> xp(h.coords.size());
        rep.conditions.push_back(sample_condition("BC-3", ed.name, dom, cfg, [&](const double* x) {
            for (std::size_t i = 0; i < xp.size(); ++i) xp[i] = ed.reset[i].eval(x);
            return g * src.eval(x) - dst.eval(xp.data());
        }));
    }
    for (auto& r : rep.conditions) rep.violated |= r.violations > 0;
    return rep;
}

nlohmann::json report_json(const CertReport& r) {
    nlohmann::json j;
    j["violated"] = r.violated;
    j["coordinates"] = r.coords;
    auto arr = nlohmann::json::array();
    for (auto& c : r.conditions) {
        nlohmann::json x;
        x["condition"] = c.condition;
        x["where"] = c.where;
        x["samples"] = c.samples;
        x["vertices"] = c.vertices;
        x["min_margin"] = c.min_margin;
        x["max_margin"] = c.max_margin;
        x["violations"] = c.violations;
        if (!c.witness.empty()) {
            nlohmann::json w;
            for (std::size_t i = 0; i < c.witness.size() && i < r.coords.size(); ++i) w[r.coords[i]] = c.witness[i];
            x["witness"] = w;
        }
        if (!c.note.empty()) x["note"] = c.note;
        arr.push_back(x);
    }
    j["conditions"] = arr;
    return j;
}

std::vector<std::string> invariant_region(const HybridAutomaton& h, const BarrierCertificate& c) {
    std::vector<std::string> out;
    for (std::size_t l = 0; l < c.phi.size() && l < h.locations.size(); ++l)
        out.push_back(h.locations[l].name + ": " + c.phi[l].text(h.coords) + " <= 0");
    if (out.empty()) out.push_back("whole state space");
    return out;
}

}  // namespace hpc
