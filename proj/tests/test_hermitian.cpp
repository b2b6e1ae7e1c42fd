#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "lck/hermitian.hpp"
#include "lck/zoo.hpp"

#include <cmath>

using namespace lck;

namespace {

template <class P>
using Scalar = std::decay_t<decltype(std::declval<P>()[0])>;
template <class T>
using MatT = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic>;

Box cube(int m, double lo, double hi) {
  Box b;
  b.lo = Vec::Constant(m, lo);
  b.hi = Vec::Constant(m, hi);
  return b;
}

template <class T>
MatT<T> standard(int m) {
  MatT<T> J = MatT<T>::Zero(m, m);
  for (int k = 0; k < m / 2; ++k) {
    J(2 * k + 1, 2 * k) = T(1.0);
    J(2 * k, 2 * k + 1) = T(-1.0);
  }
  return J;
}

Vec point(std::initializer_list<double> v) {
  Vec out(static_cast<Eigen::Index>(v.size()));
  int i = 0;
  for (double x : v) out[i++] = x;
  return out;
}

// A(p) J0 A(p)^-1 with the metric A^-T A^-1: Hermitian but not integrable.
HermitianStructure twisted() {
  auto A = [](const auto& p) {
    using T = Scalar<decltype(p)>;
    MatT<T> a = MatT<T>::Identity(4, 4);
    a(0, 2) = p[1];
    a(1, 3) = T(0.5) * p[0] * p[0];
    return a;
  };
  Chart c = make_chart("twisted", cube(4, -1, 1), [A](const auto& p) {
    const auto Ai = A(p).inverse().eval();
    return (Ai.transpose() * Ai).eval();
  });
  return make_structure(c, "twisted", 2, [A](const auto& p) {
    using T = Scalar<decltype(p)>;
    const auto a = A(p);
    return (a * standard<T>(4) * a.inverse()).eval();
  });
}

// diag(1, 1, e^{2u}, e^{2u}, 1, 1) on R^6 with u = u(x0): Hermitian, dOmega not of the form theta ^ Omega.
HermitianStructure not_lck() {
  Chart c = make_chart("not_lck", cube(6, -1, 1), [](const auto& p) {
    using T = Scalar<decltype(p)>;
    using std::exp;
    MatT<T> g = MatT<T>::Identity(6, 6);
    g(2, 2) = g(3, 3) = exp(T(0.6) * p[0]);
    return g;
  });
  return make_structure(c, "not_lck", 3, [](const auto&) {
    using T = double;
    return standard<T>(6);
  });
}

}  // namespace

TEST_CASE("fundamental form of the standard structure on R^4") {
  const ZooEntry e = euclidean(2);
  const Vec p = point({0.1, 0.2, 0.3, 0.4});
  const Mat Om = fundamental_form(e.structures[0], p, Settings{});
  Mat expect = Mat::Zero(4, 4);
  expect(0, 1) = expect(2, 3) = 1.0;
  expect(1, 0) = expect(3, 2) = -1.0;
  CHECK((Om - expect).norm() < 1e-15);
  CHECK(lee_theta(e.structures[0], p, Settings{}).norm() < 1e-10);
}

TEST_CASE("J acting on forms squares to minus the identity") {
  const Mat J = standard<double>(4);
  const Vec tau = point({1.0, -2.0, 0.5, 3.0});
  CHECK((J_on_form(J, J_on_form(J, tau)) + tau).norm() < 1e-15);
  // (J tau)(X) = -tau(JX)
  const Vec X = point({0.3, 0.1, -0.7, 0.2});
  CHECK(J_on_form(J, tau).dot(X) == doctest::Approx(-tau.dot(J * X)));
}

TEST_CASE("incompatible structures are refused") {
  Chart c = make_chart("skewed", cube(4, -1, 1), [](const auto& p) {
    (void)p;
    using T = Scalar<decltype(p)>;
    MatT<T> g = MatT<T>::Identity(4, 4);
    g(0, 0) = T(2.0);
    return g;
  });
  HermitianStructure H = make_structure(c, "bad", 2, [](const auto&) { return standard<double>(4); });
  CHECK(compatibility_defect(H, point({0, 0, 0, 0})) > 0.1);
  CHECK_THROWS_AS(fundamental_form(H, point({0, 0, 0, 0}), Settings{}), CompatibilityError);
}

TEST_CASE("Nijenhuis residual separates integrable from non-integrable structures") {
  const Settings s;
  const Vec p = point({0.3, -0.2, 0.4, 0.1});
  CHECK(nijenhuis_residual(twisted(), p, s) > 1e-2);
  const ZooEntry h = hopf(2, 2 * std::acos(-1.0));
  CHECK(nijenhuis_residual(h.structures[0], h.charts[0].domain.center(), s) < 1e-8);
}

TEST_CASE("the Lee form gate rejects a non-lcK Hermitian structure in complex dimension 3") {
  const Settings s;
  const Vec p = point({0.2, 0.1, -0.3, 0.4, 0.0, 0.5});
  CHECK_THROWS_AS(lee_form(not_lck(), p, s), NotLckError);
}

TEST_CASE("Hopf Lee form is the unit parallel ds") {
  const Settings s;
  const ZooEntry h = hopf(2, 2 * std::acos(-1.0));
  std::mt19937_64 rng(4);
  for (int k = 0; k < 5; ++k) {
    const Vec p = h.charts[0].domain.sample(rng, s.margin());
    const LeeData L = lee_form(h.structures[0], p, s);
    CHECK((L.theta - Vec::Unit(4, 0)).norm() < 1e-8);
    CHECK(L.norm_sq == doctest::Approx(1.0).epsilon(1e-8));
    CHECK(L.nabla_theta.norm() < 1e-5);
    CHECK((lee_theta_from_dOmega(h.structures[0], p, s) - L.theta).norm() < 1e-8);
  }
}

TEST_CASE("analytic and finite-difference Lee forms agree") {
  Settings fd, an;
  an.mode = DiffMode::analytic;
  const ZooEntry e = calabi_ansatz(named_profile("sin"), std::acos(-1.0));
  const Vec p = e.charts[0].domain.center() + Vec::Constant(4, 0.05);
  for (const HermitianStructure& H : e.structures)
    CHECK((lee_theta(H, p, fd) - lee_theta(H, p, an)).norm() < 1e-8);
}

TEST_CASE("flat inversion: codifferential of the Lee form") {
  const Settings s;
  const ZooEntry e = flat_inversion(2);
  Vec p = Vec::Constant(4, 0.5);  // r = 1
  const TensorField th = lee_field(e.structures[0], s);
  CHECK(codifferential(e.charts[0], th, p, s, 2).as_scalar() == doctest::Approx(-4.0).epsilon(1e-6));
  CHECK(codifferential_divergence(e.charts[0], th, p, s, 2) == doctest::Approx(-4.0).epsilon(1e-6));
}

TEST_CASE("Einstein chain: precondition and flat-inversion residuals") {
  const Settings s;
  const ZooEntry h = hopf(2, 2 * std::acos(-1.0));
  CHECK_THROWS_AS(einstein_chain_residuals(h.structures[0], h.charts[0].domain.center(), 0.0, s), PreconditionError);
  const ZooEntry f = flat_inversion(2);
  const ResidualMap r = einstein_chain_residuals(f.structures[0], f.charts[0].domain.center(), 0.0, s);
  CHECK(r.size() >= 11);
  for (const auto& [k, v] : r) {
    INFO(k);
    CHECK(v < s.tol_chain);
  }
}

TEST_CASE("parallel field decomposition on Hopf") {
  const Settings s;
  const ZooEntry h = hopf(3, 2 * std::acos(-1.0));
  const ParallelFieldResult r = parallel_field_residuals(h.structures[0], h.charts[0].domain.center(), h.parallel_field, s);
  CHECK(r.a == doctest::Approx(1.0).epsilon(1e-6));
  CHECK(std::abs(r.b) < 1e-6);
  for (const auto& [k, v] : r.residuals) {
    INFO(k);
    CHECK(v < s.tol_id());
  }
  // a non-parallel field is refused
  const VectorField bad = [](const Vec& q) { return Vec(Vec::Unit(q.size(), 1) * (1.0 + q[1])); };
  CHECK_THROWS_AS(parallel_field_residuals(h.structures[0], h.charts[0].domain.center(), bad, s), PreconditionError);
}

TEST_CASE("line potential reproduces the closed-form Calabi potential") {
  const Settings s;
  const ZooEntry e = calabi_ansatz(named_profile("sin"), std::acos(-1.0));
  const CalabiParts& cp = *e.calabi;
  const Vec base = cp.g_plus.domain.center();
  const LinePotential pot(cp.pair_J, base, s);
  std::mt19937_64 rng(9);
  for (int k = 0; k < 4; ++k) {
    const Vec p = cp.g_plus.domain.sample(rng, s.margin());
    CHECK(pot(p) == doctest::Approx(cp.Phi(p) - cp.Phi(base)).epsilon(1e-7));
    CHECK(pot.path_independence_defect(p) < s.tol_ode);
  }
}

TEST_CASE("commuting pair refuses points where the two Lee forms vanish") {
  // both Lee forms vanish on flat space, so every point is singular
  const Settings s;
  const ZooEntry e = euclidean(2);
  CHECK_THROWS_AS(
      commuting_pair_residuals(e.charts[0], e.structures[0], e.structures[0], e.charts[0].domain.center(), s),
      SingularPointError);
}

TEST_CASE("structure classification") {
  const Settings s;
  std::mt19937_64 rng(2);
  auto samples = [&](const ZooEntry& e) {
    std::vector<Vec> v;
    for (int k = 0; k < 6; ++k) v.push_back(e.charts[0].domain.sample(rng, s.margin()));
    return v;
  };
  const ZooEntry eu = euclidean(2), fi = flat_inversion(2), hp = hopf(2, 5.0);
  CHECK(classify_structure(eu.structures[0], samples(eu), eu.loops, s).kind == StructureKind::kaehler);
  CHECK(classify_structure(fi.structures[0], samples(fi), fi.loops, s).kind == StructureKind::gck);
  const StructureClass c = classify_structure(hp.structures[0], samples(hp), hp.loops, s);
  CHECK(c.kind == StructureKind::vaisman);
  REQUIRE(!c.periods.empty());
  CHECK(c.periods[0].second == doctest::Approx(5.0).epsilon(1e-6));
}
