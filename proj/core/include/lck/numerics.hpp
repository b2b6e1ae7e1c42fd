#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <complex>
#include <functional>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace lck {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;
using cplx = std::complex<double>;
using CVec = Eigen::VectorXcd;
using CMat = Eigen::MatrixXcd;

enum class DiffMode { fd, analytic };

// Step sizes, integration resolution and tolerances shared by every module.
struct Settings {
  double fd_step = 1e-5;      // first derivatives of closed-form fields
  double nested_step = 1e-4;  // derivatives of fields built from first derivatives
  double outer_step = 2e-2;   // third derivative level; balances stencil noise of depth-2 inputs against truncation
  DiffMode mode = DiffMode::fd;
  int ode_steps_per_unit = 2000;

  double tol_fd = 1e-5;
  std::optional<double> tol_id_override;
  double tol_chain = 1e-3;
  double tol_ode = 1e-6;

  double tol_id() const {
    if (tol_id_override) return *tol_id_override;
    return mode == DiffMode::analytic ? 1e-8 : 1e-4;
  }
  // Step for differentiating a field of the given derivative level.
  double step(int level) const {
    if (level <= 1) return fd_step;
    if (level == 2) return nested_step;
    return outer_step;
  }
  // Largest coordinate excursion of a third-level stencil.
  double reach() const { return 2 * outer_step + 2 * nested_step + fd_step; }
  // Sampling keeps this distance from the chart boundary.
  double margin() const { return 2 * fd_step + reach(); }
};

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};
#define LCK_ERROR_KIND(Name) \
  class Name : public Error { \
   public: \
    using Error::Error; \
  };
LCK_ERROR_KIND(DomainError)
LCK_ERROR_KIND(MetricError)
LCK_ERROR_KIND(IntegrationError)
LCK_ERROR_KIND(ParameterError)
LCK_ERROR_KIND(CompatibilityError)
LCK_ERROR_KIND(NotLckError)
LCK_ERROR_KIND(SingularPointError)
LCK_ERROR_KIND(PreconditionError)
LCK_ERROR_KIND(InconsistencyError)
LCK_ERROR_KIND(BundleError)
LCK_ERROR_KIND(LoopTooLargeError)
#undef LCK_ERROR_KIND

// Partial derivative along coordinate j. Level 1 uses the two-point central
// stencil, deeper levels the five-point one (their inputs carry more noise).
template <class F>
auto partial(const F& f, const Vec& p, int j, double h, int level) {
  Vec q = p;
  if (level <= 1) {
    q[j] = p[j] + h;
    auto fp = f(q);
    q[j] = p[j] - h;
    auto fm = f(q);
    return decltype(fp)((fp - fm) / (2 * h));
  }
  q[j] = p[j] + 2 * h;
  auto f2p = f(q);
  q[j] = p[j] + h;
  auto f1p = f(q);
  q[j] = p[j] - h;
  auto f1m = f(q);
  q[j] = p[j] - 2 * h;
  auto f2m = f(q);
  return decltype(f2p)((-f2p + 8.0 * f1p - 8.0 * f1m + f2m) / (12 * h));
}

// Directional derivative along X, stepping along X / |X|_inf.
template <class F>
auto directional(const F& f, const Vec& p, const Vec& X, double h, int level) {
  double s = X.cwiseAbs().maxCoeff();
  using R = decltype(f(p));
  if (s == 0.0) return R(f(p) * 0.0);
  Vec u = X / s;
  if (level <= 1) {
    auto fp = f(Vec(p + h * u));
    auto fm = f(Vec(p - h * u));
    return R((fp - fm) * (s / (2 * h)));
  }
  auto f2p = f(Vec(p + 2 * h * u));
  auto f1p = f(Vec(p + h * u));
  auto f1m = f(Vec(p - h * u));
  auto f2m = f(Vec(p - 2 * h * u));
  return R((-f2p + 8.0 * f1p - 8.0 * f1m + f2m) * (s / (12 * h)));
}

// Complex-step derivative of a matrix field written generically over its scalar.
inline constexpr double kComplexStep = 1e-30;

template <class G>
std::vector<Mat> complex_step_partials(const G& field, const Vec& p) {
  std::vector<Mat> out;
  out.reserve(p.size());
  for (int j = 0; j < p.size(); ++j) {
    CVec pc = p.cast<cplx>();
    pc[j] += cplx(0.0, kComplexStep);
    CMat v = field(pc);
    out.push_back(v.imag() / kComplexStep);
  }
  return out;
}

// Gauss-Legendre rule on [0, 1] (Golub-Welsch).
struct GaussLegendre {
  Vec nodes, weights;
  explicit GaussLegendre(int N) {
    Mat T = Mat::Zero(N, N);
    for (int i = 1; i < N; ++i) {
      const double b = i / std::sqrt(4.0 * i * i - 1.0);
      T(i, i - 1) = T(i - 1, i) = b;
    }
    Eigen::SelfAdjointEigenSolver<Mat> es(T);
    nodes = 0.5 * (es.eigenvalues().array() + 1.0);
    weights = es.eigenvectors().row(0).transpose().array().square();
  }
};

inline const GaussLegendre& gauss_legendre24() {
  static const GaussLegendre gl(24);
  return gl;
}

// Residual normalization: absolute defect over (1 + size of the largest term).
inline double normalized(double defect, double term_scale) {
  return defect / (1.0 + term_scale);
}

}  // namespace lck
