#pragma once

#include <cstdint>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

namespace hpc {

struct CertError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Sparse polynomial over a fixed coordinate list.
struct Polynomial {
    std::size_t dim = 0;
    std::map<std::vector<int>, double> terms;  // exponent vector -> coefficient

    static Polynomial constant(std::size_t n, double c);
    static Polynomial variable(std::size_t n, std::size_t i);

    double eval(const double* x) const;
    double eval(const std::vector<double>& x) const { return eval(x.data()); }
    Polynomial derivative(std::size_t i) const;
    int degree() const;
    bool is_zero() const;
    std::string text(const std::vector<std::string>& names) const;

    Polynomial operator+(const Polynomial& o) const;
    Polynomial operator-(const Polynomial& o) const;
    Polynomial operator*(const Polynomial& o) const;
    Polynomial scaled(double k) const;
};

// "0.5*p1^2 - 3*(v1 + u)" over the given coordinates
Polynomial parse_polynomial(const std::string& s, const std::vector<std::string>& names);

// <grad phi, f>
Polynomial lie_derivative(const Polynomial& phi, const std::vector<Polynomial>& f);

struct Constraint {
    enum class Rel { Le, Lt, Ge, Gt } rel = Rel::Le;  // poly REL 0
    Polynomial poly;
    bool holds(const double* x) const;
};
// "lhs <= rhs" etc.
Constraint parse_constraint(const std::string& s, const std::vector<std::string>& names);

struct Region {
    std::vector<double> lo, hi;  // box, per coordinate
    std::vector<Constraint> constraints;
    bool contains(const double* x) const;
};

struct Location {
    std::string name;
    std::vector<Polynomial> flow;  // one per coordinate
    Region invariant;
    std::vector<Region> init;
    std::vector<Region> unsafe;
};

struct Edge {
    std::string name;
    int from = 0, to = 0;
    Region guard;
    std::vector<Polynomial> reset;  // one per coordinate
};

struct HybridAutomaton {
    std::vector<std::string> coords;
    std::vector<double> lo, hi;  // global box
    std::vector<Location> locations;
    std::vector<Edge> edges;
    int coord(const std::string& n) const;
};

struct BarrierCertificate {
    std::vector<Polynomial> phi;    // per location; empty means no certificate
    std::vector<double> lambda;     // per location
    std::vector<double> gamma;      // per edge, >= 0
};

HybridAutomaton automaton_from_json(const nlohmann::json& j);
// Throws CertError on a negative gamma.
BarrierCertificate certificate_from_json(const nlohmann::json& j, const HybridAutomaton& h);

struct CheckConfig {
    long samples = 100000;
    double tol = 1e-6;
    long max_attempts_factor = 50;
};

struct ConditionReport {
    std::string condition;  // BC-1 .. BC-4
    std::string where;      // location or edge name
    long samples = 0;
    long vertices = 0;
    double min_margin = 0.0;
    double max_margin = 0.0;
    long violations = 0;
    std::vector<double> witness;  // argmin of the margin
    std::string note;
};

struct CertReport {
    std::vector<ConditionReport> conditions;
    bool violated = false;
    std::vector<std::string> coords;
};

CertReport check_certificate(const HybridAutomaton& h, const BarrierCertificate& c, const CheckConfig& cfg = {});
nlohmann::json report_json(const CertReport& r);

// Omega as per-location inequalities
std::vector<std::string> invariant_region(const HybridAutomaton& h, const BarrierCertificate& c);

// radical-inverse Halton point, index >= 1
std::vector<double> halton(std::uint64_t index, std::size_t dim);

}  // namespace hpc
