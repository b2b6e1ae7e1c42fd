#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "lck/tensor.hpp"

#include <cmath>

using namespace lck;

namespace {

const double kPi = std::acos(-1.0);

Box box(std::vector<std::pair<double, double>> ranges) {
  Box b;
  b.lo.resize(static_cast<Eigen::Index>(ranges.size()));
  b.hi.resize(static_cast<Eigen::Index>(ranges.size()));
  for (std::size_t i = 0; i < ranges.size(); ++i) {
    b.lo[static_cast<Eigen::Index>(i)] = ranges[i].first;
    b.hi[static_cast<Eigen::Index>(i)] = ranges[i].second;
  }
  return b;
}

template <class P>
using Scalar = std::decay_t<decltype(std::declval<P>()[0])>;

Chart flat(int m) {
  return make_chart("flat", box(std::vector<std::pair<double, double>>(m, {-1.0, 1.0})), [m](const auto& p) {
    using T = Scalar<decltype(p)>;
    return Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic>::Identity(m, m).eval();
  });
}

// Round sphere of radius `rad` in (polar, azimuth); the azimuth range holds a full turn.
Chart sphere2(double rad = 1.0) {
  return make_chart("S2", box({{0.2, kPi - 0.2}, {-3.5, 3.5}}), [rad](const auto& q) {
    using T = Scalar<decltype(q)>;
    using std::sin;
    Eigen::Matrix<T, 2, 2> g = Eigen::Matrix<T, 2, 2>::Zero();
    g(0, 0) = T(rad * rad);
    g(1, 1) = rad * rad * sin(q[0]) * sin(q[0]);
    return Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic>(g);
  });
}

// Unit three-sphere in hyperspherical coordinates.
Chart sphere3() {
  return make_chart("S3", box({{0.2, kPi - 0.2}, {0.2, kPi - 0.2}, {-3.0, 3.0}}), [](const auto& q) {
    using T = Scalar<decltype(q)>;
    using std::sin;
    Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic> g = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic>::Zero(3, 3);
    g(0, 0) = T(1.0);
    g(1, 1) = sin(q[0]) * sin(q[0]);
    g(2, 2) = sin(q[0]) * sin(q[0]) * sin(q[1]) * sin(q[1]);
    return g;
  });
}

Vec vec(std::initializer_list<double> v) {
  Vec out(static_cast<Eigen::Index>(v.size()));
  int i = 0;
  for (double x : v) out[i++] = x;
  return out;
}

}  // namespace

TEST_CASE("flat chart: every derived quantity vanishes") {
  const Chart C = flat(4);
  const Settings s;
  const Vec p = vec({0.1, -0.3, 0.2, 0.4});
  for (const Mat& g : christoffel_symbols(C, p, s)) CHECK(g.norm() == doctest::Approx(0.0).epsilon(1e-12));
  CHECK(riemann(C, p, s).norm() < 1e-8);
  const auto [ric, scal] = ricci_scalar(C, p, s);
  CHECK(ric.norm() < 1e-8);
  CHECK(std::abs(scal) < 1e-8);

  const Vec a = vec({1.0, 2.0, -1.0, 0.5});
  const TensorField constant = [a](const Vec& q) { return FrameTensor::one_form(a, q); };
  CHECK(exterior_derivative(C, constant, p, s).norm() < 1e-12);
  CHECK(codifferential(C, constant, p, s).norm() < 1e-12);
  CHECK(nabla(C, constant, p, s).norm() < 1e-12);

  const Loop L = polygon_loop({vec({0, 0, 0, 0}), vec({0.5, 0, 0, 0}), vec({0.5, 0.5, 0.3, 0}), vec({0, 0, 0, 0})}, 500);
  CHECK((parallel_transport(C, L, Mat::Identity(4, 4), s) - Mat::Identity(4, 4)).norm() < 1e-12);

  const Vec v = vec({0.1, 0.2, -0.1, 0.05});
  const GeodesicResult gr = geodesic(C, p, v, 2.0, 200, s);
  CHECK((gr.point - (p + 2.0 * v)).norm() < 1e-12);
  CHECK(gr.energy_drift < 1e-12);
}

TEST_CASE("round sphere Christoffel symbols") {
  const Settings s;
  const Vec p = vec({kPi / 4, 0.3});
  const auto gam = christoffel_symbols(sphere2(), p, s);
  CHECK(gam[0](1, 1) == doctest::Approx(-0.5).epsilon(1e-9));   // -sin cos
  CHECK(gam[1](0, 1) == doctest::Approx(1.0).epsilon(1e-9));    // cot at pi/4
  CHECK(gam[1](1, 0) == doctest::Approx(1.0).epsilon(1e-9));
  CHECK(std::abs(gam[0](0, 0)) < 1e-12);

  Settings an = s;
  an.mode = DiffMode::analytic;
  const auto exact = christoffel_symbols(sphere2(), p, an);
  CHECK(exact[0](1, 1) == doctest::Approx(-0.5).epsilon(1e-14));
}

TEST_CASE("three-sphere has constant curvature one") {
  const Settings s;
  const Chart C = sphere3();
  const Vec p = vec({1.1, 0.8, 0.4});
  const auto [ric, scal] = ricci_scalar(C, p, s);
  CHECK(scal == doctest::Approx(6.0).epsilon(1e-6));
  const Mat G = metric(C, p);
  CHECK((ric.as_matrix() - 2.0 * G).norm() < 1e-6);
  // sectional curvature through R(X,Y)Y = g(Y,Y)X - g(X,Y)Y
  const Vec X = vec({0.3, -0.2, 0.5}), Y = vec({-0.1, 0.4, 0.2});
  const Mat RXY = curvature_endomorphism(riemann(C, p, s), X, Y);
  const Vec expect = Y.dot(G * Y) * X - X.dot(G * Y) * Y;
  CHECK((RXY * Y - expect).norm() < 1e-6);
}

TEST_CASE("transport around a latitude rotates by 2 pi cos of the polar angle") {
  Settings s;
  const Chart C = sphere2(0.7);
  for (double polar : {0.6, 1.0, 2.2}) {
    const Vec start = vec({polar, -kPi});
    const Loop L = translation_loop(start, vec({0.0, 2 * kPi}), 400, "latitude");
    const Mat G = metric(C, start);
    const Mat E = orthonormal_frame(G);
    const Mat H = E.inverse() * parallel_transport(C, L, E, s);
    const double angle = std::atan2(H(1, 0), H(0, 0));
    double expect = std::remainder(2 * kPi * std::cos(polar), 2 * kPi);
    CHECK(std::abs(std::remainder(std::abs(angle) - std::abs(expect), 2 * kPi)) < 1e-7);
    CHECK(orthogonality_defect(G, E, parallel_transport(C, L, E, s)) < 1e-8);
  }
}

TEST_CASE("RK4 transport converges at fourth order") {
  const Settings s;
  const Chart C = sphere2();
  const Vec start = vec({0.9, -kPi});
  const Mat G = metric(C, start);
  const Mat E = orthonormal_frame(G);
  auto defect = [&](int spu) {
    const Loop L = translation_loop(start, vec({0.0, 2 * kPi}), spu, "latitude");
    return orthogonality_defect(G, E, parallel_transport(C, L, E, s));
  };
  CHECK(defect(4) / defect(8) > 8.0);
}

TEST_CASE("wedge uses the determinant convention") {
  const Vec p = vec({0, 0, 0});
  const FrameTensor dx = FrameTensor::one_form(Vec::Unit(3, 0), p);
  const FrameTensor dy = FrameTensor::one_form(Vec::Unit(3, 1), p);
  const FrameTensor dz = FrameTensor::one_form(Vec::Unit(3, 2), p);
  const FrameTensor w = wedge(dx, dy);
  CHECK(w[w.flat({0, 1})] == doctest::Approx(1.0));
  CHECK(w[w.flat({1, 0})] == doctest::Approx(-1.0));
  const FrameTensor vol = wedge(w, dz);
  CHECK(vol[vol.flat({0, 1, 2})] == doctest::Approx(1.0));
  CHECK(vol[vol.flat({2, 1, 0})] == doctest::Approx(-1.0));
  CHECK((wedge11(Vec::Unit(3, 0), Vec::Unit(3, 1)) - w.as_matrix()).norm() < 1e-15);
}

TEST_CASE("d squares to zero and the two codifferential paths agree") {
  const Settings s;
  const Chart C = sphere3();
  const Vec p = vec({1.2, 0.7, -0.5});
  const TensorField f = [](const Vec& q) {
    return FrameTensor::one_form(vec({std::sin(q[1]) * q[2], q[0] * q[0], std::cos(q[0] + q[1])}), q);
  };
  const TensorField df = [&](const Vec& q) { return exterior_derivative(C, f, q, s, 1); };
  CHECK(exterior_derivative(C, df, p, s, 2).norm() < 1e-6);
  const double a = codifferential(C, f, p, s).as_scalar();
  const double b = codifferential_divergence(C, f, p, s);
  CHECK(a == doctest::Approx(b).epsilon(1e-7));
}

TEST_CASE("finite-difference Christoffels converge to the analytic ones") {
  const Chart C = sphere3();
  const Vec p = vec({1.0, 0.9, 0.2});
  Settings an;
  an.mode = DiffMode::analytic;
  const auto exact = christoffel_symbols(C, p, an);
  auto err = [&](double h) {
    Settings s;
    s.fd_step = h;
    const auto approx = christoffel_symbols(C, p, s);
    double e = 0;
    for (std::size_t k = 0; k < exact.size(); ++k) e = std::max(e, (approx[k] - exact[k]).cwiseAbs().maxCoeff());
    return e;
  };
  CHECK(err(1e-5) < 1e-5);
  CHECK(err(1e-3) / err(5e-4) > 3.0);
}

TEST_CASE("points outside the safe margin are rejected") {
  const Chart C = sphere2();
  CHECK_THROWS_AS(christoffel_symbols(C, vec({0.2, 0.0}), Settings{}), DomainError);
}

TEST_CASE("orthonormal frame is orthonormal") {
  const Mat G = metric(sphere3(), vec({0.7, 1.3, 0.1}));
  const Mat E = orthonormal_frame(G);
  CHECK((E.transpose() * G * E - Mat::Identity(3, 3)).norm() < 1e-12);
}
