#pragma once

#include "lck/tensor.hpp"

#include <map>
#include <memory>
#include <string>
#include <utility>
#include <vector>

namespace lck {

using EndoFn = std::function<Mat(const Vec&)>;
using VectorField = std::function<Vec(const Vec&)>;
using ScalarField = std::function<double(const Vec&)>;
// Ordered so that reports iterate deterministically.
using ResidualMap = std::map<std::string, double>;

struct HermitianStructure {
  Chart chart;
  EndoFn J_fn;                                          // J^i_j, acting on column vectors
  std::function<std::vector<Mat>(const Vec&)> J_derivative_fn;  // optional
  int n = 0;                                            // complex dimension, chart.dim = 2n
  std::string label;
  bool integrable = true;
};

template <class JT>
HermitianStructure make_structure(const Chart& chart, std::string label, int n, JT jfield) {
  HermitianStructure h;
  h.chart = chart;
  h.n = n;
  h.label = std::move(label);
  h.J_fn = [jfield](const Vec& p) -> Mat { return jfield(p); };
  h.J_derivative_fn = [jfield](const Vec& p) {
    return complex_step_partials([&](const CVec& q) -> CMat { return jfield(q); }, p);
  };
  return h;
}

// Same complex structure over another metric in the conformal class.
HermitianStructure with_chart(const HermitianStructure& h, const Chart& chart, std::string label);

struct LeeData {
  Vec theta;        // Lee form, covariant components
  Vec J_theta;      // (J theta)(X) = -theta(JX)
  double norm_sq = 0.0;
  Mat nabla_theta;  // (nabla theta)_{ab} = (nabla_a theta)_b
  Mat S;            // S = nabla theta + theta (x) theta, covariant
  double closedness = 0.0;  // |d theta| from the antisymmetric part of nabla theta
  double gate_residual = 0.0;  // normalized |dOmega - 2 theta ^ Omega|
};

enum class StructureKind { kaehler, gck, strictly_lck_candidate, vaisman };
std::string to_string(StructureKind k);

struct StructureClass {
  StructureKind kind = StructureKind::kaehler;
  ResidualMap evidence;
  std::vector<std::pair<std::string, double>> periods;
};

// ---- pointwise algebra ----------------------------------------------------------
// (J tau)(X) = -tau(JX)
Vec J_on_form(const Mat& J, const Vec& tau);
// (X ^ tau)(Y) = g(X,Y) tau# - tau(Y) X
Mat wedge_endo(const Mat& G, const Vec& X, const Vec& tau);
// Omega = g(J.,.)
Mat fundamental_form(const Mat& G, const Mat& J);

Mat fundamental_form(const HermitianStructure& H, const Vec& p, const Settings& s);
std::vector<Mat> J_partials(const HermitianStructure& H, const Vec& p, const Settings& s);
// nabla_{d_a} J for each coordinate direction a.
std::vector<Mat> nabla_J(const HermitianStructure& H, const Vec& p, const Settings& s);
// Normalized J^2 + 1 and g(J.,J.) - g defects.
double almost_complex_defect(const HermitianStructure& H, const Vec& p);
double compatibility_defect(const HermitianStructure& H, const Vec& p);
double nijenhuis_residual(const HermitianStructure& H, const Vec& p, const Settings& s);

// theta = J(delta Omega) / (2n - 2); no consistency gate.
Vec lee_theta(const HermitianStructure& H, const Vec& p, const Settings& s);
// Least-squares solution of dOmega = 2 theta ^ Omega (independent path).
Vec lee_theta_from_dOmega(const HermitianStructure& H, const Vec& p, const Settings& s);
// Gated extraction; throws NotLckError when dOmega - 2 theta ^ Omega exceeds 100 tol_id.
LeeData lee_form(const HermitianStructure& H, const Vec& p, const Settings& s, bool with_S = true);
TensorField lee_field(const HermitianStructure& H, const Settings& s);

// ---- identity residuals (all normalized) ----------------------------------------
double nabla_j_residual(const HermitianStructure& H, const Vec& p, const Vec& X, const Settings& s);
double d_omega_residual(const HermitianStructure& H, const Vec& p, const Settings& s);
double delta_omega_residual(const HermitianStructure& H, const Vec& p, const Settings& s);
// (RJ) and (RJcontr)
std::pair<double, double> curvature_j_residuals(const HermitianStructure& H, const Vec& p,
                                                const Vec& X, const Vec& Y, const Settings& s);
double s_commutator_residual(const HermitianStructure& H, const Vec& p, const Settings& s);
// Max |Ric - lambda g| normalized; used as the Einstein precondition.
double einstein_deviation(const Chart& chart, const Vec& p, double lambda, const Settings& s);
ResidualMap einstein_chain_residuals(const HermitianStructure& H, const Vec& p, double lambda,
                                     const Settings& s);

struct ParallelFieldResult {
  ResidualMap residuals;
  double a = 0.0;  // theta(V)
  double b = 0.0;  // theta(JV)
};
ParallelFieldResult parallel_field_residuals(const HermitianStructure& H, const Vec& p,
                                             const VectorField& V, const Settings& s);

// Potential of an exact Lee form by Gauss-Legendre line integration from a
// fixed base point. Pure after construction; safe to share across threads.
class LinePotential {
 public:
  LinePotential(HermitianStructure H, Vec base, Settings s);
  double operator()(const Vec& p) const;
  // Difference between the straight path and a coordinate staircase path.
  double path_independence_defect(const Vec& p) const;
  const Vec& base() const { return base_; }

 private:
  double integrate(const Vec& a, const Vec& b) const;
  std::shared_ptr<const HermitianStructure> H_;
  Vec base_;
  Settings s_;
};

ResidualMap commuting_pair_residuals(const Chart& gplus, const HermitianStructure& I,
                                     const HermitianStructure& J, const Vec& p, const Settings& s);
// (tilom) residual plus the trace identity tr(sigma~) = exp(potential).
ResidualMap hamiltonian_form_residuals(const Chart& gplus, const HermitianStructure& I,
                                       const HermitianStructure& J, const ScalarField& potential,
                                       const Vec& p, const Vec& X, const Settings& s);
double hamiltonian_form_residual(const Chart& gplus, const HermitianStructure& I,
                                 const HermitianStructure& J, const ScalarField& potential,
                                 const Vec& p, const Vec& X, const Settings& s);
// dpotential: covariant components of d(phi) for the theta0 = -1/2 d phi check;
// may be empty. The map carries the fitted f under "f_value".
ResidualMap average_metric_residuals(const HermitianStructure& g0I, const VectorField& dpotential,
                                     const Vec& p, const Settings& s);

StructureClass classify_structure(const HermitianStructure& H, const std::vector<Vec>& samples,
                                  const std::vector<Loop>& loops, const Settings& s);

}  // namespace lck
