#pragma once

#include "lck/hermitian.hpp"

#include <map>
#include <optional>
#include <random>
#include <string>
#include <vector>

namespace lck {

// Real profile with a complex extension (for complex-step derivatives).
struct ProfileFn {
  std::string name;
  std::function<double(double)> value;
  std::function<cplx(cplx)> complex_value;
  std::function<double(double)> derivative;         // optional
  std::function<double(double)> second_derivative;  // optional
  std::function<double(double)> half_integral;      // closed form of 1/2 int_0^r, optional
  std::vector<double> boundary_series;  // Taylor coefficients of A(x), l^2(r) = r^2 (1 + A(r^2))
  double lo = 0.0, hi = 0.0;

  double operator()(double x) const { return value(x); }
  cplx operator()(cplx x) const { return complex_value(x); }
  bool is_constant() const;
};

// "sin", "sin2" (= sin(2r)/2), "zero".
ProfileFn named_profile(const std::string& name);

// 1/2 int_0^r l(t) dt by Gauss-Legendre; generic so complex-step passes through.
template <class T>
T half_integral(const ProfileFn& l, T r) {
  const auto& gl = gauss_legendre24();
  T acc = T(0.0);
  for (int i = 0; i < gl.nodes.size(); ++i) acc += gl.weights[i] * l(T(gl.nodes[i]) * r);
  return 0.5 * r * acc;
}

enum class Tol { id, fd, chain, ode };
std::string to_string(Tol t);
double tolerance(const Settings& s, Tol t);

struct Check {
  std::string name;
  double value = 0.0;
  Tol tol = Tol::id;
};
using PointCheck = std::function<std::vector<Check>(const Vec& p, std::mt19937_64& rng, const Settings& s)>;
using GlobalCheck = std::function<std::vector<Check>(const Settings& s)>;

struct HolonomyTarget {
  Chart chart;
  std::vector<EndoFn> j_candidates;
  std::string expected;   // "SO(2n)", "SO(2n-1)", "U(n)", "reducible/other"
  int expected_dim = -1;  // exact dimension when known, -1 otherwise
  int max_dim = -1;       // upper bound when only that is asserted
  VectorField fixed_field;  // expected common fixed vector, optional
};

// Conformal family of the Calabi construction. phi is the potential of the
// Lee form of (g_l, J_+): theta_+ = d phi = l/2 dr. The Kaehler metrics are
// g_+ = exp(-2 phi) g_l and g_- = exp(2 phi) g_l. Phi = -2 phi is the
// potential of the Lee form of (g_+, J_-), and g0 = exp(-Phi) g_+ = exp(Phi) g_-.
struct CalabiParts {
  ProfileFn ell;
  double b = 0.0;
  double normalization = 0.0;  // computed factor relating the base metric to d(omega)
  Chart g_l, g_plus, g_minus, g0;
  HermitianStructure Jplus_l, Jminus_l;  // (g_l, J_+-)
  HermitianStructure kaehler_plus, kaehler_minus;  // (g_+, J_+), (g_-, J_-)
  HermitianStructure pair_J;  // (g_+, J_-)
  HermitianStructure average;  // (g0, J_+)
  ScalarField Phi;  // closed form
  VectorField dPhi;  // covariant components
};

struct ZooEntry {
  std::string name;    // canonical selector
  std::string family;
  int n = 0;
  std::map<std::string, std::string> params;
  std::vector<Chart> charts;                      // charts[0] is the primary chart
  std::vector<HermitianStructure> structures;     // structures[0] is the primary structure
  std::vector<Loop> loops;                        // period loops in charts[0]
  StructureKind expected_kind = StructureKind::kaehler;
  VectorField expected_lee;                       // for structures[0], optional
  std::optional<double> einstein_lambda;
  VectorField parallel_field;                     // unit parallel field, optional
  std::optional<HolonomyTarget> holonomy;
  std::optional<CalabiParts> calabi;
  PointCheck point_checks;    // entry-specific pointwise checks, optional
  GlobalCheck global_checks;  // entry-specific non-pointwise checks, optional
};

ZooEntry euclidean(int n);
ZooEntry hopf(int n, double circumference);
ZooEntry flat_inversion(int n);
// base: "S2" (round, area 2 pi) or "flat_C"
ZooEntry warped_vaisman_gck(const ProfileFn& c, const std::string& base);
ZooEntry calabi_ansatz(const ProfileFn& ell, double b);
// Flat C, flat C^2 and the normalized round S^2 with Kaehler structures.
std::vector<ZooEntry> kaehler_bases();

// Parses "family{key=value,...}" and builds the entry; throws ParameterError.
ZooEntry resolve_selector(const std::string& selector);
std::vector<std::string> zoo_families();

}  // namespace lck
