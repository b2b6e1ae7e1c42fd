#pragma once

#include "lck/numerics.hpp"

#include <random>
#include <string>
#include <utility>
#include <vector>

namespace lck {

struct Box {
  Vec lo, hi;
  int dim() const { return static_cast<int>(lo.size()); }
  bool contains(const Vec& p, double margin) const;
  // Uniform point in the box shrunk by margin on every side.
  Vec sample(std::mt19937_64& rng, double margin) const;
  Vec center() const { return 0.5 * (lo + hi); }
};

using MetricFn = std::function<Mat(const Vec&)>;
using MetricDerivativeFn = std::function<std::vector<Mat>(const Vec&)>;

struct Chart {
  int dim = 0;
  Box domain;
  MetricFn metric_fn;
  MetricDerivativeFn metric_derivative_fn;  // optional; empty in pure fd charts
  std::string label;
};

// Builds a chart from a metric written once for real and complex scalars; the
// complex instantiation supplies exact first partials for analytic mode.
template <class G>
Chart make_chart(std::string label, Box box, G metric) {
  Chart c;
  c.dim = box.dim();
  c.domain = std::move(box);
  c.label = std::move(label);
  c.metric_fn = [metric](const Vec& p) -> Mat { return metric(p); };
  c.metric_derivative_fn = [metric](const Vec& p) {
    return complex_step_partials([&](const CVec& q) -> CMat { return metric(q); }, p);
  };
  return c;
}

// Conformal rescaling exp(2u) g of a chart; u given generically over the scalar.
template <class U>
Chart conformal_chart(const Chart& base, std::string label, U u) {
  Chart c = base;
  c.label = std::move(label);
  MetricFn g = base.metric_fn;
  MetricDerivativeFn dg = base.metric_derivative_fn;
  c.metric_fn = [g, u](const Vec& p) -> Mat { return std::exp(2.0 * u(p)) * g(p); };
  if (dg) {
    c.metric_derivative_fn = [g, dg, u](const Vec& p) {
      std::vector<Mat> d = dg(p);
      Mat gp = g(p);
      double e = std::exp(2.0 * u(p));
      for (int j = 0; j < p.size(); ++j) {
        CVec q = p.cast<cplx>();
        q[j] += cplx(0.0, kComplexStep);
        double du = std::imag(u(q)) / kComplexStep;
        d[j] = e * (d[j] + 2.0 * du * gp);
      }
      return d;
    };
  }
  return c;
}

// Components of a tensor at a point. Index order: contravariant slots first,
// then covariant slots, row-major over an m-dimensional frame.
struct FrameTensor {
  int cov = 0;
  int contra = 0;
  int dim = 0;
  std::vector<double> comp;
  Vec point;

  FrameTensor() = default;
  FrameTensor(int covariant, int contravariant, int m, Vec at);
  int rank() const { return cov + contra; }
  std::size_t size() const { return comp.size(); }
  double& operator[](std::size_t i) { return comp[i]; }
  double operator[](std::size_t i) const { return comp[i]; }
  std::size_t flat(const std::vector<int>& idx) const;
  double norm() const;

  FrameTensor& operator+=(const FrameTensor& o);
  FrameTensor& operator-=(const FrameTensor& o);
  FrameTensor& operator*=(double s);

  static FrameTensor scalar(double v, const Vec& at);
  static FrameTensor vector(const Vec& v, const Vec& at);
  static FrameTensor one_form(const Vec& a, const Vec& at);
  static FrameTensor two_form(const Mat& w, const Vec& at);
  static FrameTensor endomorphism(const Mat& A, const Vec& at);
  double as_scalar() const { return comp.at(0); }
  Vec as_vector() const;  // valid for rank-1 tensors of either kind
  Mat as_matrix() const;  // valid for rank-2 tensors
};

FrameTensor operator+(FrameTensor a, const FrameTensor& b);
FrameTensor operator-(FrameTensor a, const FrameTensor& b);
FrameTensor operator*(double s, FrameTensor a);
FrameTensor operator*(FrameTensor a, double s);
FrameTensor operator/(FrameTensor a, double s);

// Index gymnastics with the chart metric at t.point.
FrameTensor lower_index(const Chart& chart, const FrameTensor& t, int contra_slot);
FrameTensor raise_index(const Chart& chart, const FrameTensor& t, int cov_slot);

using TensorField = std::function<FrameTensor(const Vec&)>;

// Smooth curve on [0,1] with its ODE resolution.
struct Curve {
  std::function<Vec(double)> curve_fn;
  std::function<Vec(double)> velocity_fn;
  int steps = 2000;
};

// Piecewise-smooth closed curve. curve_fn/velocity_fn cover [0,1]; transport
// and quadrature integrate piece by piece so kinks never sit inside a step.
// A non-zero deck_shift marks a loop that closes after a deck translation of a
// covering chart: curve_fn(1) = curve_fn(0) + deck_shift.
struct Loop {
  std::function<Vec(double)> curve_fn;
  std::function<Vec(double)> velocity_fn;
  int steps = 0;
  std::string label;
  Vec deck_shift;
  std::vector<Curve> pieces;
};

Curve segment(const Vec& a, const Vec& b, int steps);
// Steps for a segment: steps_per_unit times its coordinate length, at least 16.
int steps_for(const Vec& a, const Vec& b, int steps_per_unit);
Loop make_loop(std::vector<Curve> pieces, std::string label, Vec deck_shift);
Loop polygon_loop(const std::vector<Vec>& vertices, int steps_per_unit, std::string label = "polygon");
Loop translation_loop(const Vec& start, const Vec& shift, int steps_per_unit, std::string label);
// Lasso: out along a segment to corner, around a square of side eps in the
// (i,j) coordinate plane, and back to base.
Loop lasso_loop(const Vec& base, const Vec& corner, int i, int j, double eps, int steps_per_unit);
double closure_defect(const Loop& loop);

// ---- metric-level quantities -------------------------------------------------
Mat metric(const Chart& chart, const Vec& p);
std::vector<Mat> metric_partials(const Chart& chart, const Vec& p, const Settings& s);
void check_in_domain(const Chart& chart, const Vec& p, const Settings& s);

// Gamma[k](i,j) = Christoffel symbol of the second kind.
std::vector<Mat> christoffel_symbols(const Chart& chart, const Vec& p, const Settings& s);
FrameTensor christoffel(const Chart& chart, const Vec& p, const Settings& s);

// R^l_{ijk} with R(d_i,d_j)d_k = R^l_{ijk} d_l and
// R(X,Y) = nabla_X nabla_Y - nabla_Y nabla_X - nabla_[X,Y].
FrameTensor riemann(const Chart& chart, const Vec& p, const Settings& s);
// Endomorphism R(X,Y) from a riemann() result.
Mat curvature_endomorphism(const FrameTensor& R, const Vec& X, const Vec& Y);
std::pair<FrameTensor, double> ricci_scalar(const Chart& chart, const Vec& p, const Settings& s);
std::pair<FrameTensor, double> ricci_scalar(const Chart& chart, const FrameTensor& R);

// ---- differential operators on fields ----------------------------------------
// `level` is the derivative depth already contained in the field (1 for
// closed-form fields); it selects the stencil and step.
std::vector<FrameTensor> field_partials(const TensorField& field, const Vec& p, const Settings& s,
                                        int level);
FrameTensor covariant_derivative(const Chart& chart, const TensorField& field, const Vec& p,
                                 const Vec& X, const Settings& s, int level = 1);
// Full covariant derivative; the new covariant index is the first covariant slot.
FrameTensor nabla(const Chart& chart, const TensorField& field, const Vec& p, const Settings& s,
                  int level = 1);
FrameTensor exterior_derivative(const Chart& chart, const TensorField& kform, const Vec& p,
                                const Settings& s, int level = 1);
// delta = - sum_i e_i -| nabla_{e_i}
FrameTensor codifferential(const Chart& chart, const TensorField& kform, const Vec& p,
                           const Settings& s, int level = 1);
// Independent path for 1-forms: -(1/sqrt|g|) d_i(sqrt|g| g^{ij} tau_j).
double codifferential_divergence(const Chart& chart, const TensorField& one_form, const Vec& p,
                                 const Settings& s, int level = 1);

// Alternating wedge of forms given as FrameTensors (determinant convention).
FrameTensor wedge(const FrameTensor& a, const FrameTensor& b);
Mat wedge11(const Vec& a, const Vec& b);  // a^b as an antisymmetric matrix
FrameTensor wedge12(const Vec& a, const Mat& w);  // 1-form ^ 2-form

// ---- transport ----------------------------------------------------------------
// Columns of frame are transported; result columns live at the curve endpoint.
Mat transport_along(const Chart& chart, const Curve& curve, const Mat& frame, const Settings& s);
Mat parallel_transport(const Chart& chart, const Loop& loop, const Mat& frame, const Settings& s);
// max |M^T G M - G^T| style orthogonality defect of a transport result.
double orthogonality_defect(const Mat& G, const Mat& frame_in, const Mat& frame_out);

struct GeodesicResult {
  Vec point;
  Vec velocity;
  double energy_drift = 0.0;
  bool exited = false;
  double exit_time = 0.0;
};
GeodesicResult geodesic(const Chart& chart, const Vec& p, const Vec& v, double T, int steps,
                        const Settings& s);

double loop_integral(const Chart& chart, const TensorField& one_form, const Loop& loop);

// Orthonormal frame (columns) from Gram-Schmidt of the coordinate frame.
Mat orthonormal_frame(const Mat& G);

// Norms taken in an orthonormal frame of G (contravariant slots use E^{-1},
// covariant slots use E).
double metric_norm(const Mat& G, const FrameTensor& t);
double norm_vector(const Mat& G, const Vec& v);
double norm_covector(const Mat& G, const Vec& a);
double norm_endo(const Mat& G, const Mat& A);
double norm_form2(const Mat& G, const Mat& w);

}  // namespace lck
