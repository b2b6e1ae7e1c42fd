#include "lck/zoo.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numbers>
#include <sstream>

namespace lck {

namespace {

constexpr double kPi = std::numbers::pi;

template <class T>
using MatT = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic>;

template <class V>
using ScalarOf = typename std::decay_t<V>::Scalar;

// Standard complex structure on R^{2k} ordered (x1, y1, x2, y2, ...).
template <class T>
MatT<T> standard_J(int m) {
  MatT<T> J = MatT<T>::Zero(m, m);
  for (int k = 0; k + 1 < m; k += 2) {
    J(k + 1, k) = T(1.0);
    J(k, k + 1) = T(-1.0);
  }
  return J;
}

Box make_box(std::vector<std::pair<double, double>> ranges) {
  Box b;
  b.lo.resize(static_cast<Eigen::Index>(ranges.size()));
  b.hi.resize(static_cast<Eigen::Index>(ranges.size()));
  for (std::size_t i = 0; i < ranges.size(); ++i) {
    b.lo[static_cast<Eigen::Index>(i)] = ranges[i].first;
    b.hi[static_cast<Eigen::Index>(i)] = ranges[i].second;
  }
  return b;
}

std::string fmt_real(double x) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.10g", x);
  return buf;
}

double vec_residual(const Mat& G, const Vec& lhs, const Vec& rhs) {
  return normalized(norm_vector(G, lhs - rhs), std::max(norm_vector(G, lhs), norm_vector(G, rhs)));
}

double covec_residual(const Mat& G, const Vec& lhs, const Vec& rhs) {
  return normalized(norm_covector(G, lhs - rhs), std::max(norm_covector(G, lhs), norm_covector(G, rhs)));
}

TensorField constant_vector(const Vec& v) {
  return [v](const Vec& q) { return FrameTensor::vector(v, q); };
}

Vec random_normal(std::mt19937_64& rng, int m) {
  std::normal_distribution<double> nd;
  Vec v(m);
  for (int i = 0; i < m; ++i) v[i] = nd(rng);
  return v;
}

Loop square_loop(const Vec& center, int i, int j, double half, int spu, std::string label) {
  std::vector<Vec> v(4, center);
  v[0][i] -= half, v[0][j] -= half;
  v[1][i] += half, v[1][j] -= half;
  v[2][i] += half, v[2][j] += half;
  v[3][i] -= half, v[3][j] += half;
  return polygon_loop(v, spu, std::move(label));
}

// Kaehler gate for bases of any dimension: nabla J = 0 and g(J,J) = g.
void require_kaehler(const HermitianStructure& H, const Settings& s) {
  std::mt19937_64 rng(11);
  for (int k = 0; k < 8; ++k) {
    const Vec p = H.chart.domain.sample(rng, s.margin());
    double worst = 0;
    for (const Mat& A : nabla_J(H, p, s)) worst = std::max(worst, A.norm());
    if (worst > s.tol_id() || compatibility_defect(H, p) > s.tol_id())
      throw ParameterError("base " + H.label + " fails the Kaehler gate");
  }
}

}  // namespace

// ---- profiles -------------------------------------------------------------------

bool ProfileFn::is_constant() const {
  if (!derivative) return false;
  for (int k = 1; k < 8; ++k)
    if (std::abs(derivative(lo + (hi - lo) * k / 8.0)) > 1e-14) return false;
  return true;
}

ProfileFn named_profile(const std::string& name) {
  ProfileFn f;
  f.name = name;
  if (name == "sin") {
    f.value = [](double x) { return std::sin(x); };
    f.complex_value = [](cplx x) { return std::sin(x); };
    f.derivative = [](double x) { return std::cos(x); };
    f.second_derivative = [](double x) { return -std::sin(x); };
    f.half_integral = [](double r) { return 0.5 * (1.0 - std::cos(r)); };
    // sin^2(u)/u^2 - 1 in x = u^2
    f.boundary_series = {0.0, -1.0 / 3, 2.0 / 45, -1.0 / 315, 2.0 / 14175};
    f.lo = 0.0;
    f.hi = kPi;
  } else if (name == "sin2") {
    f.value = [](double x) { return 0.5 * std::sin(2 * x); };
    f.complex_value = [](cplx x) { return 0.5 * std::sin(2.0 * x); };
    f.derivative = [](double x) { return std::cos(2 * x); };
    f.second_derivative = [](double x) { return -2.0 * std::sin(2 * x); };
    f.half_integral = [](double r) { return (1.0 - std::cos(2 * r)) / 8.0; };
    f.boundary_series = {0.0, -4.0 / 3, 32.0 / 45, -64.0 / 315, 512.0 / 14175};
    f.lo = 0.0;
    f.hi = kPi / 2;
  } else if (name == "zero") {
    f.value = [](double) { return 0.0; };
    f.complex_value = [](cplx) { return cplx(0.0); };
    f.derivative = [](double) { return 0.0; };
    f.second_derivative = [](double) { return 0.0; };
    f.half_integral = [](double) { return 0.0; };
    f.lo = -1e300;
    f.hi = 1e300;
  } else {
    throw ParameterError("unknown profile '" + name + "' (known: sin, sin2, zero)");
  }
  return f;
}

std::string to_string(Tol t) {
  switch (t) {
    case Tol::id: return "tol_id";
    case Tol::fd: return "tol_fd";
    case Tol::chain: return "tol_chain";
    case Tol::ode: return "tol_ode";
  }
  return "tol_id";
}

double tolerance(const Settings& s, Tol t) {
  switch (t) {
    case Tol::id: return s.tol_id();
    case Tol::fd: return s.tol_fd;
    case Tol::chain: return s.tol_chain;
    case Tol::ode: return s.tol_ode;
  }
  return s.tol_id();
}

// ---- flat space -----------------------------------------------------------------

ZooEntry euclidean(int n) {
  if (n < 1) throw ParameterError("euclidean needs n >= 1");
  const int m = 2 * n;
  ZooEntry e;
  e.family = "euclidean";
  e.n = n;
  e.params["n"] = std::to_string(n);
  e.name = "euclidean{n=" + std::to_string(n) + "}";
  Box box = make_box(std::vector<std::pair<double, double>>(m, {-1.0, 1.0}));
  Chart c = make_chart("euclidean", box, [m](const auto& p) {
    using T = ScalarOf<decltype(p)>;
    return MatT<T>::Identity(m, m).eval();
  });
  e.charts.push_back(c);
  e.structures.push_back(make_structure(c, "J0", n, [m](const auto& p) {
    return standard_J<ScalarOf<decltype(p)>>(m);
  }));
  if (m >= 2) e.loops.push_back(square_loop(box.center(), 0, 1, 0.3, 2000, "square"));
  e.expected_kind = StructureKind::kaehler;
  e.expected_lee = [m](const Vec&) -> Vec { return Vec::Zero(m); };
  e.einstein_lambda = 0.0;
  HolonomyTarget h;
  h.chart = c;
  h.j_candidates = {e.structures[0].J_fn};
  h.expected = "reducible/other";
  h.expected_dim = 0;
  e.holonomy = h;
  return e;
}

// ---- Hopf manifold --------------------------------------------------------------

namespace {

// Real Jacobian of x = exp(-s) mu(eta) exp(i xi) in C^n, rows (Re x1, Im x1, ...).
// Coordinates: s, eta_1..eta_{n-1}, xi_1..xi_n.
template <class V>
MatT<ScalarOf<V>> hopf_jacobian(const V& p, int n) {
  using T = ScalarOf<V>;
  using std::cos;
  using std::exp;
  using std::sin;
  const int m = 2 * n;
  const T es = exp(-p[0]);
  // mu_k = prod_{i<k} sin(eta_i) * (k < n-1 ? cos(eta_k) : 1)
  auto factor = [&](int k, int i, bool diff) -> T {
    const T eta = p[1 + i];
    if (i < k) return diff ? cos(eta) : sin(eta);
    if (i == k && k < n - 1) return diff ? T(-sin(eta)) : cos(eta);
    return diff ? T(0.0) : T(1.0);
  };
  MatT<T> D = MatT<T>::Zero(m, m);
  for (int k = 0; k < n; ++k) {
    T mu = T(1.0);
    for (int i = 0; i < n - 1; ++i) mu *= factor(k, i, false);
    const T xi = p[n + k];
    const T cx = cos(xi), sx = sin(xi);
    D(2 * k, 0) = -es * mu * cx;
    D(2 * k + 1, 0) = -es * mu * sx;
    for (int j = 0; j < n - 1; ++j) {
      T dmu = T(1.0);
      for (int i = 0; i < n - 1; ++i) dmu *= factor(k, i, i == j);
      D(2 * k, 1 + j) = es * dmu * cx;
      D(2 * k + 1, 1 + j) = es * dmu * sx;
    }
    D(2 * k, n + k) = -es * mu * sx;
    D(2 * k + 1, n + k) = es * mu * cx;
  }
  return D;
}

}  // namespace

ZooEntry hopf(int n, double circumference) {
  if (n < 2) throw ParameterError("hopf needs n >= 2");
  if (!(circumference > 0)) throw ParameterError("hopf needs a positive circumference");
  const int m = 2 * n;
  ZooEntry e;
  e.family = "hopf";
  e.n = n;
  e.params["n"] = std::to_string(n);
  e.params["circumference"] = fmt_real(circumference);
  e.name = "hopf{circumference=" + fmt_real(circumference) + ",n=" + std::to_string(n) + "}";
  std::vector<std::pair<double, double>> ranges{{-0.5, circumference + 0.5}};
  for (int i = 0; i < n - 1; ++i) ranges.push_back({0.2, kPi / 2 - 0.2});
  for (int i = 0; i < n; ++i) ranges.push_back({-kPi, kPi});
  const Box box = make_box(ranges);
  // exp(2s) times the flat metric of C^n: ds^2 + round S^{2n-1}
  Chart c = make_chart("hopf", box, [n](const auto& p) {
    using std::exp;
    const auto D = hopf_jacobian(p, n);
    return (exp(2.0 * p[0]) * (D.transpose() * D)).eval();
  });
  e.charts.push_back(c);
  HermitianStructure H = make_structure(c, "J", n, [n, m](const auto& p) {
    using T = ScalarOf<decltype(p)>;
    const auto D = hopf_jacobian(p, n);
    return MatT<T>(D.partialPivLu().solve(standard_J<T>(m) * D));
  });
  e.structures.push_back(H);
  Vec start = box.center();
  start[0] = 0.0;
  Vec shift = Vec::Zero(m);
  shift[0] = circumference;
  e.loops.push_back(translation_loop(start, shift, 2000, "circle"));
  e.expected_kind = StructureKind::vaisman;
  e.expected_lee = [m](const Vec&) -> Vec { return Vec::Unit(m, 0); };
  e.parallel_field = [m](const Vec&) -> Vec { return Vec::Unit(m, 0); };
  HolonomyTarget h;
  h.chart = c;
  h.j_candidates = {H.J_fn};
  h.expected = "SO(2n-1)";
  h.expected_dim = (2 * n - 1) * (n - 1);
  h.fixed_field = e.parallel_field;
  e.holonomy = h;

  e.point_checks = [H, m](const Vec& p, std::mt19937_64& rng, const Settings& s) {
    std::vector<Check> out;
    const Mat G = metric(H.chart, p);
    const Vec th = lee_theta(H, p, s);
    out.push_back({"theta_is_ds", covec_residual(G, th, Vec::Unit(m, 0)), Tol::fd});
    out.push_back({"theta_unit", std::abs(norm_covector(G, th) - 1.0), Tol::fd});
    const Mat N = nabla(H.chart, lee_field(H, s), p, s, 2).as_matrix();
    out.push_back({"nabla_theta", norm_form2(G, N), Tol::fd});
    // curvature of the sphere factor against xi = (J theta)#
    const FrameTensor R = riemann(H.chart, p, s);
    const Vec xi = G.ldlt().solve(J_on_form(H.J_fn(p), th));
    Vec X = random_normal(rng, m), Y = random_normal(rng, m);
    X[0] = 0.0;
    Y[0] = 0.0;
    const Vec lhs = curvature_endomorphism(R, X, Y) * xi;
    const Vec rhs = Y.dot(G * xi) * X - X.dot(G * xi) * Y;
    out.push_back({"rs", vec_residual(G, lhs, rhs), Tol::id});
    return out;
  };
  e.global_checks = [c, H, circumference, loop = e.loops[0]](const Settings& s) {
    std::vector<Check> out;
    const double period = loop_integral(c, lee_field(H, s), loop);
    out.push_back({"circle_period", std::abs(period - circumference), Tol::id});
    return out;
  };
  return e;
}

// ---- conformally flat example -----------------------------------------------------

ZooEntry flat_inversion(int n) {
  if (n < 2) throw ParameterError("flat_inversion needs n >= 2");
  const int m = 2 * n;
  ZooEntry e;
  e.family = "flat_inversion";
  e.n = n;
  e.params["n"] = std::to_string(n);
  e.name = "flat_inversion{n=" + std::to_string(n) + "}";
  // positive orthant box inside the annulus 1/2 <= r <= 1.9
  const double lo = 0.5 / std::sqrt(static_cast<double>(m));
  const double hi = 1.9 / std::sqrt(static_cast<double>(m));
  const Box box = make_box(std::vector<std::pair<double, double>>(m, {lo, hi}));
  Chart c = make_chart("flat_inversion", box, [m](const auto& p) {
    using T = ScalarOf<decltype(p)>;
    T r2 = T(0.0);
    for (int i = 0; i < m; ++i) r2 += p[i] * p[i];
    return (MatT<T>::Identity(m, m) / (r2 * r2)).eval();
  });
  e.charts.push_back(c);
  HermitianStructure H = make_structure(c, "J0", n, [m](const auto& p) {
    return standard_J<ScalarOf<decltype(p)>>(m);
  });
  e.structures.push_back(H);
  e.loops.push_back(square_loop(box.center(), 0, 1, 0.1, 2000, "square"));
  e.expected_kind = StructureKind::gck;
  e.expected_lee = [](const Vec& p) -> Vec { return -2.0 * p / p.squaredNorm(); };
  e.einstein_lambda = 0.0;
  HolonomyTarget h;
  h.chart = c;
  h.j_candidates = {H.J_fn};
  h.expected = "reducible/other";
  h.expected_dim = 0;
  e.holonomy = h;
  e.point_checks = [H, n, expected = e.expected_lee](const Vec& p, std::mt19937_64&, const Settings& s) {
    std::vector<Check> out;
    const Mat G = metric(H.chart, p);
    const Vec th = lee_theta(H, p, s);
    out.push_back({"theta_is_minus_2dlnr", covec_residual(G, th, expected(p)), Tol::fd});
    const double nsq = th.dot(G.ldlt().solve(th));
    out.push_back({"norm_theta_sq_is_4r2", normalized(std::abs(nsq - 4 * p.squaredNorm()), nsq), Tol::id});
    out.push_back({"riemann_norm", metric_norm(G, riemann(H.chart, p, s)), Tol::id});
    const double delta = codifferential(H.chart, lee_field(H, s), p, s, 2).as_scalar();
    out.push_back({"codiff_theta", normalized(std::abs(delta - (1.0 - n) * nsq), std::abs(delta)), Tol::id});
    return out;
  };
  return e;
}

// ---- warped products ------------------------------------------------------------

ZooEntry warped_vaisman_gck(const ProfileFn& cprof, const std::string& base) {
  if (base != "S2" && base != "flat_C") throw ParameterError("warped base must be S2 or flat_C");
  const bool sphere = base == "S2";
  const int n = 2;
  ZooEntry e;
  e.family = "warped";
  e.n = n;
  e.params["c"] = cprof.name;
  e.params["base"] = base;
  e.name = "warped{base=" + base + ",c=" + cprof.name + "}";

  // base (N, g_N, J_N): round sphere of area 2 pi, or the flat plane
  auto gN = [sphere](const auto& q) {
    using T = ScalarOf<decltype(q)>;
    MatT<T> g = MatT<T>::Identity(2, 2);
    if (sphere) {
      using std::sin;
      g *= T(0.5);
      g(1, 1) = 0.5 * sin(q[0]) * sin(q[0]);
    }
    return g;
  };
  auto JN = [sphere](const auto& q) {
    using T = ScalarOf<decltype(q)>;
    if (!sphere) return standard_J<T>(2);
    using std::sin;
    MatT<T> J = MatT<T>::Zero(2, 2);
    J(1, 0) = T(1.0) / sin(q[0]);
    J(0, 1) = -sin(q[0]);
    return J;
  };
  const Box nbox = sphere ? make_box({{0.3, kPi - 0.3}, {-2.8, 2.8}}) : make_box({{-1.0, 1.0}, {-1.0, 1.0}});
  HermitianStructure baseH = make_structure(make_chart(base, nbox, gN), "J_N", 1, JN);
  require_kaehler(baseH, Settings{});

  const Box box = make_box({{-1.0, 1.0}, {0.1, 2 * kPi - 0.1}, {nbox.lo[0], nbox.hi[0]}, {nbox.lo[1], nbox.hi[1]}});
  Chart c = make_chart("warped", box, [cprof, gN](const auto& p) {
    using T = ScalarOf<decltype(p)>;
    using std::exp;
    MatT<T> g = MatT<T>::Zero(4, 4);
    g(0, 0) = g(1, 1) = T(1.0);
    Eigen::Matrix<T, Eigen::Dynamic, 1> q(2);
    q << p[2], p[3];
    g.block(2, 2, 2, 2) = exp(2.0 * cprof(p[1])) * gN(q);
    return g;
  });
  e.charts.push_back(c);
  HermitianStructure H = make_structure(c, "J", n, [JN](const auto& p) {
    using T = ScalarOf<decltype(p)>;
    MatT<T> J = MatT<T>::Zero(4, 4);
    J(1, 0) = T(1.0);  // J d_s = d_t
    J(0, 1) = T(-1.0);
    Eigen::Matrix<T, Eigen::Dynamic, 1> q(2);
    q << p[2], p[3];
    J.block(2, 2, 2, 2) = JN(q);
    return J;
  });
  e.structures.push_back(H);
  e.loops.push_back(square_loop(box.center(), 0, 1, 0.4, 2000, "square"));
  const bool flat_profile = cprof.is_constant();
  e.expected_kind = flat_profile ? StructureKind::kaehler : StructureKind::gck;
  e.expected_lee = [cprof](const Vec& p) -> Vec {
    Vec t = Vec::Zero(4);
    t[1] = cprof.derivative(p[1]);
    return t;
  };
  e.parallel_field = [](const Vec&) -> Vec { return Vec::Unit(4, 0); };
  HolonomyTarget h;
  h.chart = c;
  h.j_candidates = {H.J_fn};
  if (!flat_profile) {
    h.expected = "SO(2n-1)";
    h.expected_dim = 3;
    h.fixed_field = e.parallel_field;
  } else if (sphere) {
    h.expected = "U(n)";
    h.expected_dim = 1;
  } else {
    h.expected = "reducible/other";
    h.expected_dim = 0;
  }
  e.holonomy = h;

  e.point_checks = [H, cprof, baseH, expected = e.expected_lee](const Vec& p, std::mt19937_64&, const Settings& s) {
    std::vector<Check> out;
    const Mat G = metric(H.chart, p);
    out.push_back({"theta_is_dc", covec_residual(G, lee_theta(H, p, s), expected(p)), Tol::fd});
    // Omega = ds ^ dt + exp(2c) Omega_N
    {
      Mat rhs = Mat::Zero(4, 4);
      rhs(0, 1) = 1.0;
      rhs(1, 0) = -1.0;
      Vec q(2);
      q << p[2], p[3];
      rhs.block(2, 2, 2, 2) = std::exp(2 * cprof(p[1])) * fundamental_form(metric(baseH.chart, q), baseH.J_fn(q));
      const Mat lhs = fundamental_form(H, p, s);
      out.push_back({"omega_split", normalized(norm_form2(G, lhs - rhs), norm_form2(G, lhs)), Tol::id});
    }
    const FrameTensor R = riemann(H.chart, p, s);
    const double ct = cprof.derivative(p[1]);
    const double fddf = cprof.second_derivative(p[1]) + ct * ct;  // f''/f with f = exp(c)
    const Vec dt = Vec::Unit(4, 1);
    double worst = 0;
    for (int a = 2; a < 4; ++a) {
      const Vec X = Vec::Unit(4, a);
      const Vec lhs = curvature_endomorphism(R, X, dt) * dt;
      worst = std::max(worst, vec_residual(G, lhs, -fddf * X));
    }
    out.push_back({"rs3", worst, Tol::id});
    // trace over the 2n-2 base directions
    const Mat Ric = ricci_scalar(H.chart, R).first.as_matrix();
    const double rhs4 = -(2.0 * 2 - 2.0) * fddf;
    out.push_back({"rs4", normalized(std::abs(Ric(1, 1) - rhs4), std::max(std::abs(Ric(1, 1)), std::abs(rhs4))), Tol::id});
    return out;
  };
  return e;
}

// ---- Calabi construction --------------------------------------------------------

namespace {

// Coordinates (eta, xi1, xi2, r): S^3 = (cos eta e^{i xi1}, sin eta e^{i xi2}),
// base CP^1 with coordinates (eta, psi = xi2 - xi1).
template <class V>
MatT<ScalarOf<V>> calabi_metric(const V& p, const ProfileFn& ell, double k) {
  using T = ScalarOf<V>;
  using std::cos;
  using std::sin;
  const T s = sin(p[0]), c = cos(p[0]);
  Eigen::Matrix<T, Eigen::Dynamic, 1> deta = Eigen::Matrix<T, Eigen::Dynamic, 1>::Zero(4), dpsi = deta, om = deta, dr = deta;
  deta[0] = T(1.0);
  dpsi[1] = T(-1.0);
  dpsi[2] = T(1.0);
  om[1] = c * c;
  om[2] = s * s;
  dr[3] = T(1.0);
  const T l = ell(p[3]);
  MatT<T> g = k * (deta * deta.transpose() + s * s * c * c * dpsi * dpsi.transpose());
  g += l * l * om * om.transpose() + dr * dr.transpose();
  return g;
}

// J_eps in the frame (d_eta, xi, d_psi*, d_r), mapped to coordinates.
template <class V>
MatT<ScalarOf<V>> calabi_J(const V& p, const ProfileFn& ell, double eps) {
  using T = ScalarOf<V>;
  using std::cos;
  using std::sin;
  const T s = sin(p[0]), c = cos(p[0]);
  const T l = ell(p[3]);
  MatT<T> B = MatT<T>::Zero(4, 4), Binv = MatT<T>::Zero(4, 4), JB = MatT<T>::Zero(4, 4);
  B(0, 0) = T(1.0);
  B(1, 1) = T(1.0), B(2, 1) = T(1.0);       // xi = d_xi1 + d_xi2
  B(1, 2) = -s * s, B(2, 2) = c * c;        // horizontal lift of d_psi
  B(3, 3) = T(1.0);
  Binv(0, 0) = T(1.0);
  Binv(1, 1) = c * c, Binv(1, 2) = s * s;   // omega
  Binv(2, 1) = T(-1.0), Binv(2, 2) = T(1.0);  // d psi
  Binv(3, 3) = T(1.0);
  JB(2, 0) = eps / (s * c);  // J d_eta* = eps (J_N d_eta)* = eps/(sc) d_psi*
  JB(0, 2) = -eps * s * c;   // J d_psi* = -eps sc d_eta*
  JB(3, 1) = l;              // J xi = l d_r
  JB(1, 3) = T(-1.0) / l;
  return B * JB * Binv;
}

template <class V>
MatT<ScalarOf<V>> base_metric_unit(const V& q) {
  using T = ScalarOf<V>;
  using std::cos;
  using std::sin;
  MatT<T> g = MatT<T>::Identity(2, 2);
  const T s = sin(q[0]), c = cos(q[0]);
  g(1, 1) = s * s * c * c;
  return g;
}

template <class V>
MatT<ScalarOf<V>> base_J(const V& q) {
  using T = ScalarOf<V>;
  using std::cos;
  using std::sin;
  const T s = sin(q[0]), c = cos(q[0]);
  MatT<T> J = MatT<T>::Zero(2, 2);
  J(1, 0) = T(1.0) / (s * c);
  J(0, 1) = -s * c;
  return J;
}

Vec connection_form(const Vec& p) {
  Vec om = Vec::Zero(4);
  om[1] = std::cos(p[0]) * std::cos(p[0]);
  om[2] = std::sin(p[0]) * std::sin(p[0]);
  return om;
}

// Pullback of a base 2-form in (eta, psi) to (eta, xi1, xi2, r).
Mat pull_back(const Mat& w) {
  Mat P = Mat::Zero(2, 4);  // rows d eta, d psi
  P(0, 0) = 1.0;
  P(1, 1) = -1.0;
  P(1, 2) = 1.0;
  return P.transpose() * w * P;
}

}  // namespace

ZooEntry calabi_ansatz(const ProfileFn& ell, double b) {
  if (!(b > 0.3)) throw ParameterError("calabi needs b > 0.3");
  for (int k = 1; k < 200; ++k) {
    const double r = b * k / 200.0;
    if (!(ell(r) > 0)) throw ParameterError("profile " + ell.name + " is not positive on (0, b)");
  }
  if (!ell.derivative) throw ParameterError("calabi profile needs an analytic derivative");
  const int n = 2;
  ZooEntry e;
  e.family = "calabi";
  e.n = n;
  e.params["ell"] = ell.name;
  e.params["b"] = fmt_real(b);
  e.name = "calabi{b=" + fmt_real(b) + ",ell=" + ell.name + "}";
  const Box box = make_box({{0.15, kPi / 2 - 0.15}, {-kPi, 3 * kPi}, {-kPi, 3 * kPi}, {0.15, b - 0.15}});
  // psi = xi2 - xi1 spans (-4 pi, 4 pi); the base metric does not depend on it
  const Box nbox = make_box({{0.15, kPi / 2 - 0.15}, {-5 * kPi, 5 * kPi}});

  // Normalization: factor k with d(omega) = k * Omega of the unit base metric.
  Settings s0;
  double k = 0;
  {
    Chart probe = make_chart("probe", box, [ell](const auto& p) { return calabi_metric(p, ell, 2.0); });
    TensorField om = [](const Vec& q) { return FrameTensor::one_form(connection_form(q), q); };
    std::vector<double> ks;
    for (double eta : {0.3, 0.7, 1.1}) {
      Vec p(4);
      p << eta, 0.4, 1.3, 0.5 * b;
      const Mat dom = exterior_derivative(probe, om, p, s0, 1).as_matrix();
      Vec q(2);
      q << eta, 0.9;
      const Mat Om1 = fundamental_form(base_metric_unit(q), base_J(q));
      // compare on (d_eta, d_psi*): lifts of the base frame
      Vec lift_psi = Vec::Zero(4);
      lift_psi[1] = -std::sin(eta) * std::sin(eta);
      lift_psi[2] = std::cos(eta) * std::cos(eta);
      ks.push_back(Vec::Unit(4, 0).dot(dom * lift_psi) / Om1(0, 1));
    }
    k = ks[0];
    for (double v : ks)
      if (std::abs(v - k) > 1e-6 * std::abs(k)) throw BundleError("d(omega) is not a multiple of the base form");
    if (std::abs(k - 2.0) > 1e-6) throw BundleError("connection normalization differs from the Hodge class");
  }

  CalabiParts cp;
  cp.ell = ell;
  cp.b = b;
  cp.normalization = k;
  cp.g_l = make_chart("g_l", box, [ell, k](const auto& p) { return calabi_metric(p, ell, k); });
  auto phi = [ell](const auto& p) { return half_integral(ell, p[3]); };
  auto minus_phi = [ell](const auto& p) { return -half_integral(ell, p[3]); };
  cp.g_plus = conformal_chart(cp.g_l, "g_plus", minus_phi);
  cp.g_minus = conformal_chart(cp.g_l, "g_minus", phi);
  cp.g0 = conformal_chart(cp.g_plus, "g0", phi);
  auto Jp = [ell](const auto& p) { return calabi_J(p, ell, 1.0); };
  auto Jm = [ell](const auto& p) { return calabi_J(p, ell, -1.0); };
  cp.Jplus_l = make_structure(cp.g_l, "g_l,J+", n, Jp);
  cp.Jminus_l = make_structure(cp.g_l, "g_l,J-", n, Jm);
  cp.kaehler_plus = with_chart(cp.Jplus_l, cp.g_plus, "g+,J+");
  cp.kaehler_minus = with_chart(cp.Jminus_l, cp.g_minus, "g-,J-");
  cp.pair_J = with_chart(cp.Jminus_l, cp.g_plus, "g+,J-");
  cp.average = with_chart(cp.Jplus_l, cp.g0, "g0,J+");
  cp.Phi = [ell](const Vec& p) { return -2.0 * ell.half_integral(p[3]); };
  cp.dPhi = [ell](const Vec& p) -> Vec {
    Vec d = Vec::Zero(4);
    d[3] = -ell(p[3]);
    return d;
  };
  if (!ell.half_integral) cp.Phi = [ell](const Vec& p) { return -2.0 * half_integral(ell, p[3]); };

  e.charts = {cp.g_l, cp.g_plus, cp.g_minus, cp.g0};
  e.structures = {cp.Jplus_l, cp.Jminus_l, cp.kaehler_plus, cp.kaehler_minus, cp.pair_J};
  Vec start = box.center();
  Vec fiber = Vec::Zero(4);
  fiber[1] = fiber[2] = 2 * kPi;
  start[1] = start[2] = 0.0;
  e.loops.push_back(translation_loop(start, fiber, 500, "fiber"));
  e.loops.push_back(square_loop(box.center(), 0, 3, 0.2, 2000, "eta_r_square"));
  e.expected_kind = StructureKind::gck;
  e.expected_lee = [ell](const Vec& p) -> Vec {
    Vec t = Vec::Zero(4);
    t[3] = 0.5 * ell(p[3]);
    return t;
  };
  HolonomyTarget h;
  h.chart = cp.g_plus;
  h.j_candidates = {cp.kaehler_plus.J_fn};
  h.expected = "U(n)";
  h.max_dim = n * n;
  e.holonomy = h;

  Chart base_chart = make_chart("CP1", nbox, [k](const auto& q) { return (k * base_metric_unit(q)).eval(); });
  e.point_checks = [cp, base_chart](const Vec& p, std::mt19937_64&, const Settings& s) {
    std::vector<Check> out;
    const Chart& C = cp.g_l;
    const Mat G = metric(C, p);
    const double l = cp.ell(p[3]), dl = cp.ell.derivative(p[3]);
    Vec xi = Vec::Zero(4);
    xi[1] = xi[2] = 1.0;
    const Vec dr = Vec::Unit(4, 3);
    Vec q(2);
    q << p[0], p[2] - p[1];
    auto lift = [](const Vec& at, const Vec& X) -> Vec {
      Vec v = Vec::Zero(4);
      v[0] = X[0];
      v[1] = -std::sin(at[0]) * std::sin(at[0]) * X[1];
      v[2] = std::cos(at[0]) * std::cos(at[0]) * X[1];
      return v;
    };
    auto lift_field = [lift](const Vec& X) -> TensorField {
      return [lift, X](const Vec& at) { return FrameTensor::vector(lift(at, X), at); };
    };
    auto D = [&](const TensorField& F, const Vec& dir) { return covariant_derivative(C, F, p, dir, s, 1).as_vector(); };
    auto res = [&](const Vec& lhs, const Vec& rhs) { return vec_residual(G, lhs, rhs); };
    const TensorField XiF = constant_vector(xi), DrF = constant_vector(dr);
    const Mat JNq = base_J(q);
    const Mat OmN = fundamental_form(metric(base_chart, q), JNq);
    const std::vector<Vec> base_frame{Vec::Unit(2, 0), Vec::Unit(2, 1)};

    out.push_back({"table_xi_dr", std::max(res(D(DrF, xi), (dl / l) * xi), res(D(XiF, dr), (dl / l) * xi)), Tol::id});
    out.push_back({"table_xi_xi", res(D(XiF, xi), -l * dl * dr), Tol::id});
    {
      double w = res(D(DrF, dr), Vec::Zero(4));
      for (const Vec& X : base_frame) {
        w = std::max(w, res(D(DrF, lift(p, X)), Vec::Zero(4)));
        w = std::max(w, res(D(lift_field(X), dr), Vec::Zero(4)));
      }
      out.push_back({"table_dr_flat", w, Tol::id});
    }
    {
      double w = 0;
      for (const Vec& X : base_frame) {
        const Vec rhs = 0.5 * l * l * lift(p, JNq * X);
        w = std::max(w, res(D(XiF, lift(p, X)), rhs));
        w = std::max(w, res(D(lift_field(X), xi), rhs));
      }
      out.push_back({"table_lift_xi", w, Tol::id});
    }
    {
      const auto gam = christoffel_symbols(base_chart, q, s);
      double w = 0;
      for (const Vec& X : base_frame)
        for (const Vec& Y : base_frame) {
          Vec nh(2);
          for (int kk = 0; kk < 2; ++kk) nh[kk] = X.dot(gam[kk] * Y);
          const Vec rhs = lift(p, nh) - 0.5 * X.dot(OmN * Y) * xi;
          w = std::max(w, res(D(lift_field(Y), lift(p, X)), rhs));
        }
      out.push_back({"table_lift_lift", w, Tol::id});
    }
    // connection curvature equals the base Kaehler form
    {
      TensorField om = [](const Vec& at) { return FrameTensor::one_form(connection_form(at), at); };
      const Mat dom = exterior_derivative(C, om, p, s, 1).as_matrix();
      const Mat rhs = pull_back(OmN);
      out.push_back({"d_omega_is_base_form", normalized(norm_form2(G, dom - rhs), norm_form2(G, rhs)), Tol::id});
    }
    // Omega(xi, d_r) = g(J xi, d_r) = l
    out.push_back({"omega_xi_dr", std::abs(xi.dot(fundamental_form(cp.Jplus_l, p, s) * dr) - l) / (1 + l), Tol::id});
    // Lee forms theta_eps = eps l/2 dr
    for (double eps : {1.0, -1.0}) {
      const HermitianStructure& H = eps > 0 ? cp.Jplus_l : cp.Jminus_l;
      const std::string tag = eps > 0 ? "plus" : "minus";
      out.push_back({"theta_eps_" + tag, covec_residual(G, lee_theta(H, p, s), 0.5 * eps * l * dr), Tol::fd});
      out.push_back({"nijenhuis_" + tag, nijenhuis_residual(H, p, s), Tol::id});
    }
    // conformal Kaehler metrics
    for (const HermitianStructure* K : {&cp.kaehler_plus, &cp.kaehler_minus}) {
      const Mat GK = metric(K->chart, p);
      TensorField OmF = [K](const Vec& at) {
        return FrameTensor::two_form(fundamental_form(metric(K->chart, at), K->J_fn(at)), at);
      };
      const double dOm = metric_norm(GK, exterior_derivative(K->chart, OmF, p, s, 1));
      out.push_back({std::string("dOmega_") + (K == &cp.kaehler_plus ? "plus" : "minus"), dOm, Tol::id});
    }
    {
      const Vec dPhi = cp.dPhi(p);
      const Mat Gp = metric(cp.g_plus, p), Gm = metric(cp.g_minus, p);
      out.push_back({"lee_gplus_Jminus", covec_residual(Gp, lee_theta(cp.pair_J, p, s), dPhi), Tol::id});
      const HermitianStructure mJp = with_chart(cp.Jplus_l, cp.g_minus, "g-,J+");
      out.push_back({"lee_gminus_Jplus", covec_residual(Gm, lee_theta(mJp, p, s), -dPhi), Tol::id});
      const double Phi = cp.Phi(p);
      const Mat G0 = metric(cp.g0, p);
      const double d1 = (G0 - std::exp(-Phi) * Gp).norm(), d2 = (G0 - std::exp(Phi) * Gm).norm();
      const double d3 = (G0 - G).norm();
      out.push_back({"g0_consistency", std::max({d1, d2, d3}) / (1 + G0.norm()), Tol::id});
    }
    {
      const Mat A = cp.Jplus_l.J_fn(p), B = cp.Jminus_l.J_fn(p);
      out.push_back({"Jplus_Jminus_commute", (A * B - B * A).norm() / (1 + (A * B).norm()), Tol::id});
      out.push_back({"trace_Jplus_Jminus", std::abs((A * B).trace() - (2.0 * 2 - 4)), Tol::id});
    }
    return out;
  };

  e.global_checks = [cp, base_chart, box, loops = e.loops](const Settings& s) {
    std::vector<Check> out;
    out.push_back({"normalization_factor", std::abs(cp.normalization - 2.0), Tol::ode});
    // total base area under Omega_N
    {
      const auto& gl = gauss_legendre24();
      double area = 0;
      for (int i = 0; i < gl.nodes.size(); ++i) {
        Vec q(2);
        q << gl.nodes[i] * kPi / 2, 0.0;
        const Mat OmN = fundamental_form(metric(base_chart, q), base_J(q));
        area += gl.weights[i] * (kPi / 2) * OmN(0, 1) * 2 * kPi;
      }
      out.push_back({"base_area", std::abs(area - 2 * kPi), Tol::ode});
    }
    // potential: quadrature vs closed form vs line integral of the Lee form
    {
      double w = 0;
      LinePotential pot(cp.Jplus_l, box.center(), s);
      const double phi_c = cp.ell.half_integral ? cp.ell.half_integral(box.center()[3]) : 0.0;
      for (int k = 1; k <= 5; ++k) {
        const double r = box.lo[3] + (box.hi[3] - box.lo[3]) * k / 6.0;
        const double quad = half_integral(cp.ell, r);
        if (cp.ell.half_integral) w = std::max(w, std::abs(quad - cp.ell.half_integral(r)));
        Vec p = box.center();
        p[3] = r;
        p[0] += 0.1 * (k - 3);
        w = std::max(w, std::abs(pot(p) - (cp.ell.half_integral ? cp.ell.half_integral(r) - phi_c
                                                                  : quad - half_integral(cp.ell, box.center()[3]))));
      }
      out.push_back({"phi_closed_form", w, Tol::ode});
    }
    if (cp.ell.boundary_series.size() > 1) {
      double w = 0;
      for (double r : {0.05, 0.1, 0.2}) {
        const double x = r * r;
        const double direct = cp.ell(r) * cp.ell(r) / x - 1.0;
        double series = 0, xp = 1;
        for (double a : cp.ell.boundary_series) {
          series += a * xp;
          xp *= x;
        }
        w = std::max(w, std::abs(direct - series));
      }
      out.push_back({"boundary_series", w, Tol::ode});
      const double r0 = 1e-4;
      out.push_back({"boundary_limit", std::abs(cp.ell(r0) * cp.ell(r0) / (r0 * r0) - 1.0), Tol::ode});
    }
    // exact form d(phi) over random polygons
    {
      std::mt19937_64 rng(20240917);
      TensorField dphi = [cp](const Vec& at) {
        Vec d = Vec::Zero(4);
        d[3] = 0.5 * cp.ell(at[3]);
        return FrameTensor::one_form(d, at);
      };
      std::uniform_int_distribution<int> nv(3, 6);
      double w = 0;
      for (int k = 0; k < 20; ++k) {
        std::vector<Vec> verts;
        const int count = nv(rng);
        for (int v = 0; v < count; ++v) verts.push_back(box.sample(rng, s.margin()));
        w = std::max(w, std::abs(loop_integral(cp.g_l, dphi, polygon_loop(verts, 200, "polygon"))));
      }
      out.push_back({"dphi_polygon_periods", w, Tol::ode});
    }
    {
      const double period = loop_integral(cp.g_l, lee_field(cp.Jplus_l, s), loops[0]);
      out.push_back({"fiber_period", std::abs(period), Tol::fd});
    }
    return out;
  };
  e.calabi = cp;
  return e;
}

// ---- Kaehler bases -----------------------------------------------------------------

std::vector<ZooEntry> kaehler_bases() {
  std::vector<ZooEntry> out;
  {
    ZooEntry e = euclidean(1);
    e.name = "flat_C";
    e.family = "base";
    out.push_back(e);
  }
  {
    ZooEntry e = euclidean(2);
    e.name = "flat_C2";
    e.family = "base";
    out.push_back(e);
  }
  {
    ZooEntry e;
    e.name = "S2";
    e.family = "base";
    e.n = 1;
    const Box nbox = make_box({{0.3, kPi - 0.3}, {-2.8, 2.8}});
    // radius^2 = 1/2 so the total area is 2 pi
    Chart c = make_chart("S2", nbox, [](const auto& q) {
      using T = ScalarOf<decltype(q)>;
      using std::sin;
      MatT<T> g = MatT<T>::Identity(2, 2) * T(0.5);
      g(1, 1) = 0.5 * sin(q[0]) * sin(q[0]);
      return g;
    });
    e.charts.push_back(c);
    e.structures.push_back(make_structure(c, "J_N", 1, [](const auto& q) {
      using T = ScalarOf<decltype(q)>;
      using std::sin;
      MatT<T> J = MatT<T>::Zero(2, 2);
      J(1, 0) = T(1.0) / sin(q[0]);
      J(0, 1) = -sin(q[0]);
      return J;
    }));
    e.expected_kind = StructureKind::kaehler;
    HolonomyTarget h;
    h.chart = c;
    h.j_candidates = {e.structures[0].J_fn};
    // SO(2) and U(1) coincide; the classifier reports the first matching rule
    h.expected = "SO(2n)";
    h.expected_dim = 1;
    e.holonomy = h;
    e.global_checks = [c, J = e.structures[0].J_fn](const Settings&) {
      const auto& gl = gauss_legendre24();
      double area = 0;
      for (int i = 0; i < gl.nodes.size(); ++i) {
        Vec q(2);
        q << gl.nodes[i] * kPi, 0.0;
        const Mat Om = fundamental_form(metric(c, q), J(q));
        area += gl.weights[i] * kPi * Om(0, 1) * 2 * kPi;
      }
      return std::vector<Check>{{"area", std::abs(area - 2 * kPi), Tol::ode}};
    };
    out.push_back(e);
  }
  return out;
}

// ---- selectors --------------------------------------------------------------------

namespace {

double parse_real(const std::string& raw) {
  std::string v;
  for (char ch : raw)
    if (ch != ' ') v += ch;
  auto number = [&](const std::string& t) -> double {
    if (t.empty()) return 1.0;
    std::size_t used = 0;
    double x = 0;
    try {
      x = std::stod(t, &used);
    } catch (const std::exception&) {
      throw ParameterError("cannot parse number '" + raw + "'");
    }
    if (used != t.size()) throw ParameterError("cannot parse number '" + raw + "'");
    return x;
  };
  const auto at = v.find("pi");
  if (at == std::string::npos) return number(v);
  std::string pre = v.substr(0, at), post = v.substr(at + 2);
  if (!pre.empty() && pre.back() == '*') pre.pop_back();
  double x = number(pre) * kPi;
  if (!post.empty()) {
    if (post[0] != '/') throw ParameterError("cannot parse number '" + raw + "'");
    x /= number(post.substr(1));
  }
  return x;
}

int parse_int(const std::string& raw) {
  const double x = parse_real(raw);
  if (x != std::floor(x)) throw ParameterError("expected an integer, got '" + raw + "'");
  return static_cast<int>(x);
}

}  // namespace

std::vector<std::string> zoo_families() {
  return {"euclidean{n}", "hopf{n,circumference}", "flat_inversion{n}", "warped{c,base}", "calabi{ell,b}",
          "flat_C", "flat_C2", "S2"};
}

ZooEntry resolve_selector(const std::string& selector) {
  std::string family = selector, body;
  const auto open = selector.find('{');
  if (open != std::string::npos) {
    if (selector.back() != '}') throw ParameterError("selector '" + selector + "' lacks a closing brace");
    family = selector.substr(0, open);
    body = selector.substr(open + 1, selector.size() - open - 2);
  }
  std::map<std::string, std::string> kv;
  std::stringstream ss(body);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (item.find_first_not_of(' ') == std::string::npos) continue;
    const auto eq = item.find('=');
    if (eq == std::string::npos) throw ParameterError("selector item '" + item + "' is not key=value");
    auto trim = [](std::string t) {
      t.erase(0, t.find_first_not_of(' '));
      t.erase(t.find_last_not_of(' ') + 1);
      return t;
    };
    kv[trim(item.substr(0, eq))] = trim(item.substr(eq + 1));
  }
  auto take = [&](const std::string& key, const std::string& dflt) {
    auto it = kv.find(key);
    if (it == kv.end()) return dflt;
    std::string v = it->second;
    kv.erase(it);
    return v;
  };
  auto done = [&]() {
    if (!kv.empty()) throw ParameterError("unknown parameter '" + kv.begin()->first + "' for " + family);
  };
  if (family == "euclidean") {
    const int n = parse_int(take("n", "2"));
    done();
    return euclidean(n);
  }
  if (family == "hopf") {
    const int n = parse_int(take("n", "2"));
    const double c = parse_real(take("circumference", "2pi"));
    done();
    return hopf(n, c);
  }
  if (family == "flat_inversion") {
    const int n = parse_int(take("n", "2"));
    done();
    return flat_inversion(n);
  }
  if (family == "warped") {
    const ProfileFn c = named_profile(take("c", "sin"));
    const std::string base = take("base", "S2");
    done();
    return warped_vaisman_gck(c, base);
  }
  if (family == "calabi") {
    const ProfileFn l = named_profile(take("ell", "sin"));
    const double b = parse_real(take("b", fmt_real(l.hi)));
    done();
    return calabi_ansatz(l, b);
  }
  for (ZooEntry& e : kaehler_bases())
    if (e.name == family) {
      done();
      return e;
    }
  throw ParameterError("unknown manifold '" + family + "'");
}

}  // namespace lck
