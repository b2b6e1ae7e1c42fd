#include "lck/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

namespace lck {

namespace {

std::size_t ipow(int m, int k) {
  std::size_t r = 1;
  for (int i = 0; i < k; ++i) r *= static_cast<std::size_t>(m);
  return r;
}

std::vector<int> unflat(std::size_t f, int rank, int m) {
  std::vector<int> idx(rank);
  for (int s = rank - 1; s >= 0; --s) {
    idx[s] = static_cast<int>(f % m);
    f /= m;
  }
  return idx;
}

std::size_t flat_of(const std::vector<int>& idx, int m) {
  std::size_t f = 0;
  for (int i : idx) f = f * m + i;
  return f;
}

// out[.. i ..] = sum_e A(i,e) T[.. e ..] in the given slot (A^T when transposed).
FrameTensor contract_slot(const FrameTensor& T, int slot, const Mat& A, bool transposed) {
  FrameTensor out = T;
  const int m = T.dim, r = T.rank();
  for (std::size_t f = 0; f < T.size(); ++f) {
    std::vector<int> idx = unflat(f, r, m);
    const int i = idx[slot];
    double acc = 0.0;
    for (int e = 0; e < m; ++e) {
      idx[slot] = e;
      acc += (transposed ? A(e, i) : A(i, e)) * T.comp[flat_of(idx, m)];
    }
    out.comp[f] = acc;
  }
  return out;
}

int permutation_sign(const std::vector<int>& perm) {
  int sign = 1;
  std::vector<int> p = perm;
  for (std::size_t i = 0; i < p.size(); ++i) {
    while (p[i] != static_cast<int>(i)) {
      std::swap(p[i], p[p[i]]);
      sign = -sign;
    }
  }
  return sign;
}

double factorial(int k) {
  double r = 1;
  for (int i = 2; i <= k; ++i) r *= i;
  return r;
}

std::string describe(const Vec& p) {
  std::ostringstream os;
  os << "(";
  for (int i = 0; i < p.size(); ++i) os << (i ? ", " : "") << p[i];
  os << ")";
  return os.str();
}

}  // namespace

// ---- Box -------------------------------------------------------------------

bool Box::contains(const Vec& p, double margin) const {
  if (p.size() != lo.size()) return false;
  for (int i = 0; i < p.size(); ++i) {
    if (!(p[i] > lo[i] + margin && p[i] < hi[i] - margin)) return false;
  }
  return true;
}

Vec Box::sample(std::mt19937_64& rng, double margin) const {
  Vec p(lo.size());
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int i = 0; i < p.size(); ++i) {
    const double a = lo[i] + margin, b = hi[i] - margin;
    if (!(b > a)) throw DomainError("chart box thinner than the safe margin");
    p[i] = a + (b - a) * u(rng);
  }
  return p;
}

// ---- FrameTensor -------------------------------------------------------------

FrameTensor::FrameTensor(int covariant, int contravariant, int m, Vec at)
    : cov(covariant), contra(contravariant), dim(m),
      comp(ipow(m, covariant + contravariant), 0.0), point(std::move(at)) {}

std::size_t FrameTensor::flat(const std::vector<int>& idx) const { return flat_of(idx, dim); }

double FrameTensor::norm() const {
  double s = 0;
  for (double c : comp) s += c * c;
  return std::sqrt(s);
}

FrameTensor& FrameTensor::operator+=(const FrameTensor& o) {
  for (std::size_t i = 0; i < comp.size(); ++i) comp[i] += o.comp[i];
  return *this;
}
FrameTensor& FrameTensor::operator-=(const FrameTensor& o) {
  for (std::size_t i = 0; i < comp.size(); ++i) comp[i] -= o.comp[i];
  return *this;
}
FrameTensor& FrameTensor::operator*=(double s) {
  for (double& c : comp) c *= s;
  return *this;
}
FrameTensor operator+(FrameTensor a, const FrameTensor& b) { return a += b; }
FrameTensor operator-(FrameTensor a, const FrameTensor& b) { return a -= b; }
FrameTensor operator*(double s, FrameTensor a) { return a *= s; }
FrameTensor operator*(FrameTensor a, double s) { return a *= s; }
FrameTensor operator/(FrameTensor a, double s) { return a *= (1.0 / s); }

FrameTensor FrameTensor::scalar(double v, const Vec& at) {
  FrameTensor t(0, 0, static_cast<int>(at.size()), at);
  t.comp[0] = v;
  return t;
}
FrameTensor FrameTensor::vector(const Vec& v, const Vec& at) {
  FrameTensor t(0, 1, static_cast<int>(v.size()), at);
  for (int i = 0; i < v.size(); ++i) t.comp[i] = v[i];
  return t;
}
FrameTensor FrameTensor::one_form(const Vec& a, const Vec& at) {
  FrameTensor t(1, 0, static_cast<int>(a.size()), at);
  for (int i = 0; i < a.size(); ++i) t.comp[i] = a[i];
  return t;
}
FrameTensor FrameTensor::two_form(const Mat& w, const Vec& at) {
  const int m = static_cast<int>(w.rows());
  FrameTensor t(2, 0, m, at);
  for (int i = 0; i < m; ++i)
    for (int j = 0; j < m; ++j) t.comp[i * m + j] = w(i, j);
  return t;
}
FrameTensor FrameTensor::endomorphism(const Mat& A, const Vec& at) {
  FrameTensor t = two_form(A, at);
  t.cov = 1;
  t.contra = 1;
  return t;
}
Vec FrameTensor::as_vector() const {
  Vec v(dim);
  for (int i = 0; i < dim; ++i) v[i] = comp[i];
  return v;
}
Mat FrameTensor::as_matrix() const {
  Mat A(dim, dim);
  for (int i = 0; i < dim; ++i)
    for (int j = 0; j < dim; ++j) A(i, j) = comp[i * dim + j];
  return A;
}

FrameTensor lower_index(const Chart& chart, const FrameTensor& t, int contra_slot) {
  const Mat G = metric(chart, t.point);
  FrameTensor c = contract_slot(t, contra_slot, G, true);
  // move the slot to the first covariant position
  FrameTensor out(t.cov + 1, t.contra - 1, t.dim, t.point);
  const int r = t.rank();
  for (std::size_t f = 0; f < c.size(); ++f) {
    std::vector<int> idx = unflat(f, r, t.dim);
    std::vector<int> nidx;
    for (int s = 0; s < t.contra; ++s)
      if (s != contra_slot) nidx.push_back(idx[s]);
    nidx.push_back(idx[contra_slot]);
    for (int s = t.contra; s < r; ++s) nidx.push_back(idx[s]);
    out.comp[flat_of(nidx, t.dim)] = c.comp[f];
  }
  return out;
}

FrameTensor raise_index(const Chart& chart, const FrameTensor& t, int cov_slot) {
  const Mat Ginv = metric(chart, t.point).inverse();
  const int slot = t.contra + cov_slot;
  FrameTensor c = contract_slot(t, slot, Ginv, false);
  // move to the last contravariant position
  FrameTensor out(t.cov - 1, t.contra + 1, t.dim, t.point);
  const int r = t.rank();
  for (std::size_t f = 0; f < c.size(); ++f) {
    std::vector<int> idx = unflat(f, r, t.dim);
    std::vector<int> nidx;
    for (int s = 0; s < t.contra; ++s) nidx.push_back(idx[s]);
    nidx.push_back(idx[slot]);
    for (int s = t.contra; s < r; ++s)
      if (s != slot) nidx.push_back(idx[s]);
    out.comp[flat_of(nidx, t.dim)] = c.comp[f];
  }
  return out;
}

// ---- curves and loops -------------------------------------------------------

Curve segment(const Vec& a, const Vec& b, int steps) {
  Curve c;
  c.curve_fn = [a, b](double t) -> Vec { return a + t * (b - a); };
  Vec d = b - a;
  c.velocity_fn = [d](double) -> Vec { return d; };
  c.steps = std::max(steps, 1);
  return c;
}

int steps_for(const Vec& a, const Vec& b, int steps_per_unit) {
  const double len = (b - a).norm();
  return std::max(16, static_cast<int>(std::ceil(len * steps_per_unit)));
}

Loop make_loop(std::vector<Curve> pieces, std::string label, Vec deck_shift) {
  Loop L;
  L.label = std::move(label);
  const int K = static_cast<int>(pieces.size());
  if (K == 0) throw ParameterError("loop needs at least one piece");
  if (deck_shift.size() == 0) deck_shift = Vec::Zero(pieces.front().curve_fn(0.0).size());
  L.deck_shift = deck_shift;
  L.pieces = std::move(pieces);
  L.steps = 0;
  for (const Curve& c : L.pieces) L.steps += c.steps;
  auto ps = L.pieces;
  Vec start = ps.front().curve_fn(0.0);
  L.curve_fn = [ps, K, start, deck_shift](double t) -> Vec {
    if (t >= 1.0) return Vec(start + deck_shift);  // closure by construction
    if (t <= 0.0) return start;
    const double u = t * K;
    const int k = std::min(K - 1, static_cast<int>(std::floor(u)));
    return ps[k].curve_fn(u - k);
  };
  L.velocity_fn = [ps, K](double t) -> Vec {
    const double u = std::clamp(t, 0.0, 1.0) * K;
    const int k = std::min(K - 1, static_cast<int>(std::floor(u)));
    return K * ps[k].velocity_fn(u - k);
  };
  return L;
}

Loop polygon_loop(const std::vector<Vec>& vertices, int steps_per_unit, std::string label) {
  if (vertices.size() < 2) throw ParameterError("polygon loop needs two or more vertices");
  std::vector<Curve> pieces;
  for (std::size_t i = 0; i < vertices.size(); ++i) {
    const Vec& a = vertices[i];
    const Vec& b = vertices[(i + 1) % vertices.size()];
    pieces.push_back(segment(a, b, steps_for(a, b, steps_per_unit)));
  }
  return make_loop(std::move(pieces), std::move(label), Vec());
}

Loop translation_loop(const Vec& start, const Vec& shift, int steps_per_unit, std::string label) {
  Vec end = start + shift;
  std::vector<Curve> pieces{segment(start, end, steps_for(start, end, steps_per_unit))};
  return make_loop(std::move(pieces), std::move(label), shift);
}

Loop lasso_loop(const Vec& base, const Vec& corner, int i, int j, double eps, int steps_per_unit) {
  Vec a = corner, b = corner, c = corner, d = corner;
  b[i] += eps;
  c[i] += eps;
  c[j] += eps;
  d[j] += eps;
  std::vector<Vec> path{base, a, b, c, d, a, base};
  std::vector<Curve> pieces;
  for (std::size_t k = 0; k + 1 < path.size(); ++k) {
    if ((path[k + 1] - path[k]).norm() == 0.0) continue;
    pieces.push_back(segment(path[k], path[k + 1], steps_for(path[k], path[k + 1], steps_per_unit)));
  }
  return make_loop(std::move(pieces), "lasso", Vec());
}

double closure_defect(const Loop& loop) {
  return (loop.curve_fn(1.0) - loop.curve_fn(0.0) - loop.deck_shift).norm();
}

// ---- metric level -------------------------------------------------------------

Mat metric(const Chart& chart, const Vec& p) { return chart.metric_fn(p); }

std::vector<Mat> metric_partials(const Chart& chart, const Vec& p, const Settings& s) {
  if (s.mode == DiffMode::analytic && chart.metric_derivative_fn) return chart.metric_derivative_fn(p);
  std::vector<Mat> d;
  d.reserve(chart.dim);
  for (int j = 0; j < chart.dim; ++j)
    d.push_back(partial([&](const Vec& q) { return chart.metric_fn(q); }, p, j, s.fd_step, 1));
  return d;
}

void check_in_domain(const Chart& chart, const Vec& p, const Settings& s) {
  if (!chart.domain.contains(p, 2 * s.fd_step))
    throw DomainError("point " + describe(p) + " outside the safe margin of chart " + chart.label);
}

std::vector<Mat> christoffel_symbols(const Chart& chart, const Vec& p, const Settings& s) {
  check_in_domain(chart, p, s);
  const int m = chart.dim;
  const Mat G = chart.metric_fn(p);
  Eigen::LLT<Mat> llt(G);
  if (llt.info() != Eigen::Success) throw MetricError("metric not positive definite at " + describe(p));
  const Mat Ginv = llt.solve(Mat::Identity(m, m));
  const std::vector<Mat> dg = metric_partials(chart, p, s);
  // first kind: Gamma_{l,ij} = 1/2 (d_i g_jl + d_j g_il - d_l g_ij)
  std::vector<Mat> first(m, Mat::Zero(m, m));
  for (int l = 0; l < m; ++l)
    for (int i = 0; i < m; ++i)
      for (int j = 0; j < m; ++j) first[l](i, j) = 0.5 * (dg[i](j, l) + dg[j](i, l) - dg[l](i, j));
  std::vector<Mat> gam(m, Mat::Zero(m, m));
  for (int k = 0; k < m; ++k)
    for (int l = 0; l < m; ++l) gam[k] += Ginv(k, l) * first[l];
  return gam;
}

FrameTensor christoffel(const Chart& chart, const Vec& p, const Settings& s) {
  const int m = chart.dim;
  auto gam = christoffel_symbols(chart, p, s);
  FrameTensor t(2, 1, m, p);
  for (int k = 0; k < m; ++k)
    for (int i = 0; i < m; ++i)
      for (int j = 0; j < m; ++j) t.comp[(k * m + i) * m + j] = gam[k](i, j);
  return t;
}

FrameTensor riemann(const Chart& chart, const Vec& p, const Settings& s) {
  const int m = chart.dim;
  auto packed = [&](const Vec& q) {
    auto g = christoffel_symbols(chart, q, s);
    Vec v(m * m * m);
    for (int k = 0; k < m; ++k)
      for (int i = 0; i < m; ++i)
        for (int j = 0; j < m; ++j) v[(k * m + i) * m + j] = g[k](i, j);
    return v;
  };
  const Vec G0 = packed(p);
  std::vector<Vec> dG(m);
  for (int i = 0; i < m; ++i) dG[i] = partial(packed, p, i, s.nested_step, 2);
  auto at = [m](const Vec& v, int k, int i, int j) { return v[(k * m + i) * m + j]; };
  FrameTensor R(3, 1, m, p);
  for (int l = 0; l < m; ++l)
    for (int i = 0; i < m; ++i)
      for (int j = 0; j < m; ++j)
        for (int k = 0; k < m; ++k) {
          double v = at(dG[i], l, j, k) - at(dG[j], l, i, k);
          for (int a = 0; a < m; ++a) v += at(G0, l, i, a) * at(G0, a, j, k) - at(G0, l, j, a) * at(G0, a, i, k);
          R.comp[((l * m + i) * m + j) * m + k] = v;
        }
  return R;
}

Mat curvature_endomorphism(const FrameTensor& R, const Vec& X, const Vec& Y) {
  const int m = R.dim;
  Mat E = Mat::Zero(m, m);
  for (int l = 0; l < m; ++l)
    for (int i = 0; i < m; ++i) {
      if (X[i] == 0.0) continue;
      for (int j = 0; j < m; ++j) {
        const double w = X[i] * Y[j];
        if (w == 0.0) continue;
        for (int k = 0; k < m; ++k) E(l, k) += w * R.comp[((l * m + i) * m + j) * m + k];
      }
    }
  return E;
}

std::pair<FrameTensor, double> ricci_scalar(const Chart& chart, const FrameTensor& R) {
  const int m = R.dim;
  FrameTensor Ric(2, 0, m, R.point);
  for (int j = 0; j < m; ++j)
    for (int k = 0; k < m; ++k) {
      double v = 0;
      for (int i = 0; i < m; ++i) v += R.comp[((i * m + i) * m + j) * m + k];
      Ric.comp[j * m + k] = v;
    }
  const Mat Ginv = metric(chart, R.point).inverse();
  double scal = 0;
  for (int j = 0; j < m; ++j)
    for (int k = 0; k < m; ++k) scal += Ginv(j, k) * Ric.comp[j * m + k];
  return {Ric, scal};
}

std::pair<FrameTensor, double> ricci_scalar(const Chart& chart, const Vec& p, const Settings& s) {
  return ricci_scalar(chart, riemann(chart, p, s));
}

// ---- field operators ----------------------------------------------------------

namespace {

// Adds the connection terms of nabla_X to the plain directional derivative.
FrameTensor connection_terms(const std::vector<Mat>& gam, const FrameTensor& T, const Vec& X) {
  const int m = T.dim;
  Mat GX = Mat::Zero(m, m);  // GX(a,e) = X^c Gamma^a_{ce}
  for (int a = 0; a < m; ++a)
    for (int c = 0; c < m; ++c)
      if (X[c] != 0.0) GX.row(a) += X[c] * gam[a].row(c);
  FrameTensor out(T.cov, T.contra, m, T.point);
  for (int slot = 0; slot < T.contra; ++slot) out += contract_slot(T, slot, GX, false);
  for (int slot = T.contra; slot < T.rank(); ++slot) out -= contract_slot(T, slot, GX, true);
  return out;
}

FrameTensor tensor_difference(const TensorField& field, const Vec& p, const Vec& X, double h, int level) {
  const double scale = X.cwiseAbs().maxCoeff();
  if (scale == 0.0) {
    FrameTensor z = field(p);
    z *= 0.0;
    return z;
  }
  const Vec u = X / scale;
  if (level <= 1) {
    FrameTensor d = field(Vec(p + h * u)) - field(Vec(p - h * u));
    d *= scale / (2 * h);
    d.point = p;
    return d;
  }
  FrameTensor d = (field(Vec(p + h * u)) - field(Vec(p - h * u))) * 8.0 -
                  (field(Vec(p + 2 * h * u)) - field(Vec(p - 2 * h * u)));
  d *= scale / (12 * h);
  d.point = p;
  return d;
}

}  // namespace

std::vector<FrameTensor> field_partials(const TensorField& field, const Vec& p, const Settings& s,
                                        int level) {
  std::vector<FrameTensor> out;
  const int m = static_cast<int>(p.size());
  for (int j = 0; j < m; ++j) out.push_back(tensor_difference(field, p, Vec::Unit(m, j), s.step(level), level));
  return out;
}

FrameTensor covariant_derivative(const Chart& chart, const TensorField& field, const Vec& p,
                                 const Vec& X, const Settings& s, int level) {
  FrameTensor T = field(p);
  FrameTensor D = tensor_difference(field, p, X, s.step(level), level);
  D += connection_terms(christoffel_symbols(chart, p, s), T, X);
  return D;
}

FrameTensor nabla(const Chart& chart, const TensorField& field, const Vec& p, const Settings& s,
                  int level) {
  const int m = chart.dim;
  const FrameTensor T = field(p);
  const auto gam = christoffel_symbols(chart, p, s);
  const auto parts = field_partials(field, p, s, level);
  FrameTensor out(T.cov + 1, T.contra, m, p);
  const int r = T.rank();
  for (int c = 0; c < m; ++c) {
    FrameTensor D = parts[c] + connection_terms(gam, T, Vec::Unit(m, c));
    for (std::size_t f = 0; f < D.size(); ++f) {
      std::vector<int> idx = unflat(f, r, m);
      idx.insert(idx.begin() + T.contra, c);
      out.comp[flat_of(idx, m)] = D.comp[f];
    }
  }
  return out;
}

FrameTensor exterior_derivative(const Chart& chart, const TensorField& kform, const Vec& p,
                                const Settings& s, int level) {
  check_in_domain(chart, p, s);
  const int m = chart.dim;
  const FrameTensor a = kform(p);
  const int k = a.cov;
  const auto parts = field_partials(kform, p, s, level);
  FrameTensor out(k + 1, 0, m, p);
  for (std::size_t f = 0; f < out.size(); ++f) {
    std::vector<int> idx = unflat(f, k + 1, m);
    double v = 0;
    for (int j = 0; j <= k; ++j) {
      std::vector<int> rest;
      for (int q = 0; q <= k; ++q)
        if (q != j) rest.push_back(idx[q]);
      v += ((j % 2) ? -1.0 : 1.0) * parts[idx[j]].comp[flat_of(rest, m)];
    }
    out.comp[f] = v;
  }
  return out;
}

FrameTensor codifferential(const Chart& chart, const TensorField& kform, const Vec& p,
                           const Settings& s, int level) {
  const int m = chart.dim;
  const FrameTensor N = nabla(chart, kform, p, s, level);
  const int k = N.cov - 1;
  if (k < 1) throw ParameterError("codifferential of a 0-form");
  const Mat Ginv = metric(chart, p).inverse();
  FrameTensor out(k - 1, 0, m, p);
  const std::size_t inner = ipow(m, k - 1);
  for (std::size_t f = 0; f < inner; ++f) {
    double v = 0;
    for (int a = 0; a < m; ++a)
      for (int b = 0; b < m; ++b) v += Ginv(a, b) * N.comp[(static_cast<std::size_t>(a) * m + b) * inner + f];
    out.comp[f] = -v;
  }
  return out;
}

double codifferential_divergence(const Chart& chart, const TensorField& one_form, const Vec& p,
                                 const Settings& s, int level) {
  check_in_domain(chart, p, s);
  const int m = chart.dim;
  auto flux = [&](const Vec& q) -> Vec {
    const Mat G = chart.metric_fn(q);
    return std::sqrt(G.determinant()) * G.inverse() * one_form(q).as_vector();
  };
  double div = 0;
  for (int i = 0; i < m; ++i) div += partial(flux, p, i, s.step(level), level)[i];
  return -div / std::sqrt(chart.metric_fn(p).determinant());
}

FrameTensor wedge(const FrameTensor& a, const FrameTensor& b) {
  const int m = a.dim, k = a.cov, l = b.cov, r = k + l;
  FrameTensor out(r, 0, m, a.point);
  std::vector<int> perm(r);
  std::iota(perm.begin(), perm.end(), 0);
  std::vector<std::pair<std::vector<int>, int>> perms;
  do {
    perms.emplace_back(perm, permutation_sign(perm));
  } while (std::next_permutation(perm.begin(), perm.end()));
  const double norm = 1.0 / (factorial(k) * factorial(l));
  for (std::size_t f = 0; f < out.size(); ++f) {
    std::vector<int> idx = unflat(f, r, m);
    double v = 0;
    for (const auto& [pm, sg] : perms) {
      std::vector<int> ia(k), ib(l);
      for (int q = 0; q < k; ++q) ia[q] = idx[pm[q]];
      for (int q = 0; q < l; ++q) ib[q] = idx[pm[k + q]];
      v += sg * a.comp[flat_of(ia, m)] * b.comp[flat_of(ib, m)];
    }
    out.comp[f] = norm * v;
  }
  return out;
}

Mat wedge11(const Vec& a, const Vec& b) { return a * b.transpose() - b * a.transpose(); }

FrameTensor wedge12(const Vec& a, const Mat& w) {
  const int m = static_cast<int>(a.size());
  FrameTensor out(3, 0, m, Vec());
  for (int i = 0; i < m; ++i)
    for (int j = 0; j < m; ++j)
      for (int k = 0; k < m; ++k)
        out.comp[(i * m + j) * m + k] = a[i] * w(j, k) - a[j] * w(i, k) + a[k] * w(i, j);
  return out;
}

// ---- transport ------------------------------------------------------------------

namespace {

Mat connection_along(const Chart& chart, const Vec& x, const Vec& v, const Settings& s) {
  const auto gam = christoffel_symbols(chart, x, s);
  const int m = chart.dim;
  Mat GX = Mat::Zero(m, m);
  for (int a = 0; a < m; ++a)
    for (int c = 0; c < m; ++c)
      if (v[c] != 0.0) GX.row(a) += v[c] * gam[a].row(c);
  return GX;
}

}  // namespace

Mat transport_along(const Chart& chart, const Curve& curve, const Mat& frame, const Settings& s) {
  const int N = std::max(curve.steps, 1);
  const double h = 1.0 / N;
  Mat F = frame;
  auto rhs = [&](double t, const Mat& Y) -> Mat {
    return -connection_along(chart, curve.curve_fn(t), curve.velocity_fn(t), s) * Y;
  };
  for (int i = 0; i < N; ++i) {
    const double t = i * h;
    const Mat k1 = rhs(t, F);
    const Mat k2 = rhs(t + h / 2, F + (h / 2) * k1);
    const Mat k3 = rhs(t + h / 2, F + (h / 2) * k2);
    const Mat k4 = rhs(t + h, F + h * k3);
    F += (h / 6) * (k1 + 2 * k2 + 2 * k3 + k4);
    if (!F.allFinite()) throw IntegrationError("non-finite transport state on chart " + chart.label);
  }
  return F;
}

Mat parallel_transport(const Chart& chart, const Loop& loop, const Mat& frame, const Settings& s) {
  Mat F = frame;
  for (const Curve& c : loop.pieces) F = transport_along(chart, c, F, s);
  return F;
}

double orthogonality_defect(const Mat& G, const Mat& frame_in, const Mat& frame_out) {
  const Mat a = frame_in.transpose() * G * frame_in;
  const Mat b = frame_out.transpose() * G * frame_out;
  return (b - a).cwiseAbs().maxCoeff();
}

GeodesicResult geodesic(const Chart& chart, const Vec& p, const Vec& v, double T, int steps,
                        const Settings& s) {
  const int m = chart.dim;
  const int N = std::max(steps, 1);
  const double h = T / N;
  auto accel = [&](const Vec& x, const Vec& u) -> Vec {
    const auto gam = christoffel_symbols(chart, x, s);
    Vec a(m);
    for (int k = 0; k < m; ++k) a[k] = -u.dot(gam[k] * u);
    return a;
  };
  GeodesicResult res;
  Vec x = p, u = v;
  const double e0 = v.dot(chart.metric_fn(p) * v);
  auto inside = [&](const Vec& q) { return chart.domain.contains(q, 2 * s.fd_step); };
  for (int i = 0; i < N; ++i) {
    try {
      const Vec k1x = u, k1v = accel(x, u);
      const Vec k2x = u + (h / 2) * k1v, k2v = accel(x + (h / 2) * k1x, k2x);
      const Vec k3x = u + (h / 2) * k2v, k3v = accel(x + (h / 2) * k2x, k3x);
      const Vec k4x = u + h * k3v, k4v = accel(x + h * k3x, k4x);
      Vec nx = x + (h / 6) * (k1x + 2 * k2x + 2 * k3x + k4x);
      Vec nu = u + (h / 6) * (k1v + 2 * k2v + 2 * k3v + k4v);
      if (!inside(nx)) throw DomainError("exit");
      x = nx;
      u = nu;
    } catch (const DomainError&) {
      res.exited = true;
      res.exit_time = i * h;
      break;
    }
    if (!x.allFinite() || !u.allFinite()) throw IntegrationError("non-finite geodesic state");
  }
  res.point = x;
  res.velocity = u;
  res.energy_drift = std::abs(u.dot(chart.metric_fn(x) * u) - e0);
  return res;
}

double loop_integral(const Chart& chart, const TensorField& one_form, const Loop& loop) {
  (void)chart;
  double total = 0;
  for (const Curve& c : loop.pieces) {
    int N = std::max(c.steps, 2);
    if (N % 2) ++N;
    const double h = 1.0 / N;
    double acc = 0;
    for (int i = 0; i <= N; ++i) {
      const double t = i * h;
      const double w = (i == 0 || i == N) ? 1.0 : ((i % 2) ? 4.0 : 2.0);
      acc += w * one_form(c.curve_fn(t)).as_vector().dot(c.velocity_fn(t));
    }
    total += acc * h / 3.0;
  }
  return total;
}

Mat orthonormal_frame(const Mat& G) {
  const int m = static_cast<int>(G.rows());
  Mat E = Mat::Identity(m, m);
  for (int i = 0; i < m; ++i) {
    for (int j = 0; j < i; ++j) E.col(i) -= (E.col(j).dot(G * E.col(i))) * E.col(j);
    E.col(i) /= std::sqrt(E.col(i).dot(G * E.col(i)));
  }
  return E;
}

double metric_norm(const Mat& G, const FrameTensor& t) {
  const Mat E = orthonormal_frame(G);
  const Mat Einv = E.inverse();
  FrameTensor u = t;
  for (int slot = 0; slot < t.contra; ++slot) u = contract_slot(u, slot, Einv, false);
  for (int slot = t.contra; slot < t.rank(); ++slot) u = contract_slot(u, slot, E, true);
  return u.norm();
}

double norm_vector(const Mat& G, const Vec& v) { return std::sqrt(std::max(0.0, v.dot(G * v))); }

double norm_covector(const Mat& G, const Vec& a) {
  return std::sqrt(std::max(0.0, a.dot(G.ldlt().solve(a))));
}

double norm_endo(const Mat& G, const Mat& A) {
  const Mat E = orthonormal_frame(G);
  return (E.inverse() * A * E).norm();
}

double norm_form2(const Mat& G, const Mat& w) {
  const Mat E = orthonormal_frame(G);
  return (E.transpose() * w * E).norm();
}

}  // namespace lck
