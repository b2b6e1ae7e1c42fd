#include "lck/hermitian.hpp"

#include <algorithm>
#include <cmath>

namespace lck {

namespace {

Vec gradient(const ScalarField& f, const Vec& p, const Settings& s, int level) {
  Vec g(p.size());
  for (int j = 0; j < p.size(); ++j) g[j] = partial(f, p, j, s.step(level), level);
  return g;
}

// Jacobian d_j V^k of a vector field: column j holds d_j V.
Mat jacobian(const VectorField& V, const Vec& p, const Settings& s, int level) {
  const int m = static_cast<int>(p.size());
  Mat D(m, m);
  for (int j = 0; j < m; ++j) D.col(j) = partial(V, p, j, s.step(level), level);
  return D;
}

double max_of(std::initializer_list<double> xs) {
  double r = 0;
  for (double x : xs) r = std::max(r, x);
  return r;
}

// <alpha, beta> = 1/2 alpha_ab beta^ab for 2-forms; full contraction for (0,2).
double form_inner(const Mat& Ginv, const Mat& a, const Mat& b) {
  return (a.transpose() * Ginv * b * Ginv).trace();
}

double cov_norm(const Mat& G, const FrameTensor& t) { return metric_norm(G, t); }

Mat S_tensor(const HermitianStructure& H, const Vec& q, const Settings& s) {
  const Vec th = lee_theta(H, q, s);
  const Mat N = nabla(H.chart, lee_field(H, s), q, s, 2).as_matrix();
  return N + th * th.transpose();
}

}  // namespace

std::string to_string(StructureKind k) {
  switch (k) {
    case StructureKind::kaehler: return "Kaehler";
    case StructureKind::gck: return "gcK";
    case StructureKind::strictly_lck_candidate: return "strictly-lcK-candidate";
    case StructureKind::vaisman: return "Vaisman";
  }
  return "unknown";
}

HermitianStructure with_chart(const HermitianStructure& h, const Chart& chart, std::string label) {
  HermitianStructure out = h;
  out.chart = chart;
  out.label = std::move(label);
  return out;
}

Vec J_on_form(const Mat& J, const Vec& tau) { return -J.transpose() * tau; }

Mat wedge_endo(const Mat& G, const Vec& X, const Vec& tau) {
  const Vec sharp = G.ldlt().solve(tau);
  return sharp * (G * X).transpose() - X * tau.transpose();
}

Mat fundamental_form(const Mat& G, const Mat& J) { return J.transpose() * G; }

Mat fundamental_form(const HermitianStructure& H, const Vec& p, const Settings& s) {
  const Mat G = metric(H.chart, p);
  const Mat J = H.J_fn(p);
  const double defect = (J.transpose() * G * J - G).norm() / (1.0 + G.norm());
  if (defect > s.tol_id()) throw CompatibilityError("J not compatible with g on " + H.label);
  return fundamental_form(G, J);
}

std::vector<Mat> J_partials(const HermitianStructure& H, const Vec& p, const Settings& s) {
  if (s.mode == DiffMode::analytic && H.J_derivative_fn) return H.J_derivative_fn(p);
  std::vector<Mat> d;
  for (int j = 0; j < H.chart.dim; ++j) d.push_back(partial(H.J_fn, p, j, s.fd_step, 1));
  return d;
}

std::vector<Mat> nabla_J(const HermitianStructure& H, const Vec& p, const Settings& s) {
  const int m = H.chart.dim;
  const auto gam = christoffel_symbols(H.chart, p, s);
  const auto dJ = J_partials(H, p, s);
  const Mat J = H.J_fn(p);
  std::vector<Mat> out;
  for (int a = 0; a < m; ++a) {
    Mat Ga(m, m);  // Ga(k,j) = Gamma^k_{aj}
    for (int k = 0; k < m; ++k) Ga.row(k) = gam[k].row(a);
    out.push_back(dJ[a] + Ga * J - J * Ga);
  }
  return out;
}

double almost_complex_defect(const HermitianStructure& H, const Vec& p) {
  const Mat J = H.J_fn(p);
  const int m = static_cast<int>(J.rows());
  return (J * J + Mat::Identity(m, m)).norm() / (1.0 + J.norm());
}

double compatibility_defect(const HermitianStructure& H, const Vec& p) {
  const Mat G = metric(H.chart, p);
  const Mat J = H.J_fn(p);
  return (J.transpose() * G * J - G).norm() / (1.0 + G.norm());
}

double nijenhuis_residual(const HermitianStructure& H, const Vec& p, const Settings& s) {
  const int m = H.chart.dim;
  const Mat J = H.J_fn(p);
  const auto dJ = J_partials(H, p, s);
  double n2 = 0, scale = 0;
  for (const Mat& d : dJ) scale += d.squaredNorm();
  scale = std::sqrt(scale) * J.norm();
  for (int i = 0; i < m; ++i)
    for (int j = 0; j < m; ++j) {
      Vec N = Vec::Zero(m);
      for (int l = 0; l < m; ++l) {
        N += J(l, i) * dJ[l].col(j) - J(l, j) * dJ[l].col(i);
        N += J.col(l) * (dJ[j](l, i) - dJ[i](l, j));
      }
      n2 += N.squaredNorm();
    }
  return normalized(std::sqrt(n2), scale);
}

// ---- Lee form -------------------------------------------------------------------

namespace {

TensorField omega_field(const HermitianStructure& H) {
  return [H](const Vec& q) {
    return FrameTensor::two_form(fundamental_form(metric(H.chart, q), H.J_fn(q)), q);
  };
}

}  // namespace

Vec lee_theta(const HermitianStructure& H, const Vec& p, const Settings& s) {
  if (H.n < 2) throw ParameterError("Lee form extraction needs complex dimension >= 2");
  Vec dOm;
  if (s.mode == DiffMode::analytic && H.chart.metric_derivative_fn && H.J_derivative_fn) {
    // exact partials of Omega keep the Lee form free of stencil noise, so
    // nested derivatives of it stay well below the analytic tolerance
    const int m = H.chart.dim;
    const Mat G = metric(H.chart, p);
    const Mat Gi = G.inverse();
    const Mat J = H.J_fn(p);
    const Mat Om = fundamental_form(G, J);
    const auto dG = H.chart.metric_derivative_fn(p);
    const auto dJ = H.J_derivative_fn(p);
    const auto gam = christoffel_symbols(H.chart, p, s);
    dOm = Vec::Zero(m);
    for (int a = 0; a < m; ++a) {
      const Mat dOma = dJ[a].transpose() * G + J.transpose() * dG[a];
      for (int b = 0; b < m; ++b) {
        if (Gi(a, b) == 0.0) continue;
        for (int f = 0; f < m; ++f) {
          double v = dOma(b, f);
          for (int d = 0; d < m; ++d) v -= gam[d](a, b) * Om(d, f) + gam[d](a, f) * Om(b, d);
          dOm[f] -= Gi(a, b) * v;
        }
      }
    }
  } else {
    dOm = codifferential(H.chart, omega_field(H), p, s, 1).as_vector();
  }
  return J_on_form(H.J_fn(p), dOm) / (2.0 * H.n - 2.0);
}

Vec lee_theta_from_dOmega(const HermitianStructure& H, const Vec& p, const Settings& s) {
  const int m = H.chart.dim;
  const Mat Om = fundamental_form(metric(H.chart, p), H.J_fn(p));
  const FrameTensor dOm = exterior_derivative(H.chart, omega_field(H), p, s, 1);
  Mat A(dOm.size(), m);
  for (int a = 0; a < m; ++a) {
    const FrameTensor col = wedge12(2.0 * Vec::Unit(m, a), Om);
    for (std::size_t f = 0; f < col.size(); ++f) A(static_cast<Eigen::Index>(f), a) = col.comp[f];
  }
  Vec rhs(dOm.size());
  for (std::size_t f = 0; f < dOm.size(); ++f) rhs[static_cast<Eigen::Index>(f)] = dOm.comp[f];
  return A.colPivHouseholderQr().solve(rhs);
}

TensorField lee_field(const HermitianStructure& H, const Settings& s) {
  return [H, s](const Vec& q) { return FrameTensor::one_form(lee_theta(H, q, s), q); };
}

double d_omega_residual(const HermitianStructure& H, const Vec& p, const Settings& s) {
  const Mat G = metric(H.chart, p);
  const Mat Om = fundamental_form(G, H.J_fn(p));
  const Vec th = lee_theta(H, p, s);
  const FrameTensor lhs = exterior_derivative(H.chart, omega_field(H), p, s, 1);
  FrameTensor rhs = wedge12(2.0 * th, Om);
  rhs.point = p;
  return normalized(cov_norm(G, lhs - rhs), max_of({cov_norm(G, lhs), cov_norm(G, rhs)}));
}

double delta_omega_residual(const HermitianStructure& H, const Vec& p, const Settings& s) {
  const Mat G = metric(H.chart, p);
  const Vec lhs = codifferential(H.chart, omega_field(H), p, s, 1).as_vector();
  const Vec rhs = (2.0 - 2.0 * H.n) * J_on_form(H.J_fn(p), lee_theta_from_dOmega(H, p, s));
  return normalized(norm_covector(G, lhs - rhs), max_of({norm_covector(G, lhs), norm_covector(G, rhs)}));
}

LeeData lee_form(const HermitianStructure& H, const Vec& p, const Settings& s, bool with_S) {
  LeeData d;
  const Mat G = metric(H.chart, p);
  const Mat J = H.J_fn(p);
  d.theta = lee_theta(H, p, s);
  d.J_theta = J_on_form(J, d.theta);
  d.norm_sq = d.theta.dot(G.ldlt().solve(d.theta));
  d.gate_residual = d_omega_residual(H, p, s);
  if (d.gate_residual > 100 * s.tol_id())
    throw NotLckError("structure " + H.label + " violates dOmega = 2 theta ^ Omega");
  if (with_S) {
    d.nabla_theta = nabla(H.chart, lee_field(H, s), p, s, 2).as_matrix();
    d.S = d.nabla_theta + d.theta * d.theta.transpose();
    d.closedness = normalized(norm_form2(G, d.nabla_theta - d.nabla_theta.transpose()),
                              norm_form2(G, d.nabla_theta));
  }
  return d;
}

// ---- identities -------------------------------------------------------------------

double nabla_j_residual(const HermitianStructure& H, const Vec& p, const Vec& X, const Settings& s) {
  const Mat G = metric(H.chart, p);
  const Mat J = H.J_fn(p);
  const auto nJ = nabla_J(H, p, s);
  Mat lhs = Mat::Zero(G.rows(), G.cols());
  for (int a = 0; a < X.size(); ++a) lhs += X[a] * nJ[a];
  const Vec th = lee_theta(H, p, s);
  const Mat t1 = wedge_endo(G, X, J_on_form(J, th));
  const Mat t2 = wedge_endo(G, J * X, th);
  return normalized(norm_endo(G, lhs - t1 - t2),
                    max_of({norm_endo(G, lhs), norm_endo(G, t1), norm_endo(G, t2)}));
}

std::pair<double, double> curvature_j_residuals(const HermitianStructure& H, const Vec& p,
                                                const Vec& X, const Vec& Y, const Settings& s) {
  const int m = H.chart.dim;
  const int n = H.n;
  const Mat G = metric(H.chart, p);
  const Mat Gi = G.inverse();
  const Mat J = H.J_fn(p);
  const FrameTensor R = riemann(H.chart, p, s);
  const Vec th = lee_theta(H, p, s);
  const Vec Jth = J_on_form(J, th);
  const double nsq = th.dot(Gi * th);
  const Mat Nth = nabla(H.chart, lee_field(H, s), p, s, 2).as_matrix();
  auto W = [&](const Vec& v, const Vec& tau) { return wedge_endo(G, v, tau); };
  auto nab = [&](const Vec& Z) -> Vec { return Nth.transpose() * Z; };

  // (RJ)
  const Mat RXY = curvature_endomorphism(R, X, Y);
  const Mat lhs = RXY * J - J * RXY;
  const double thX = th.dot(X), thY = th.dot(Y);
  std::vector<Mat> terms{
      thX * W(Y, Jth),
      -thY * W(X, Jth),
      -thY * W(J * X, th),
      thX * W(J * Y, th),
      -nsq * W(Y, G * (J * X)),
      nsq * W(X, G * (J * Y)),
      W(Y, J_on_form(J, nab(X))),
      W(J * Y, nab(X)),
      -W(X, J_on_form(J, nab(Y))),
      -W(J * X, nab(Y))};
  Mat rhs = Mat::Zero(m, m);
  double scale = norm_endo(G, lhs);
  for (const Mat& t : terms) {
    rhs += t;
    scale = std::max(scale, norm_endo(G, t));
  }
  const double rj = normalized(norm_endo(G, lhs - rhs), scale);

  // (RJcontr)
  Vec lc = Vec::Zero(m);
  for (int a = 0; a < m; ++a) {
    const Mat Ra = curvature_endomorphism(R, X, Vec::Unit(m, a));
    const Mat C = Ra * J - J * Ra;
    for (int b = 0; b < m; ++b) lc += Gi(a, b) * C.col(b);
  }
  const double delta_th = -(Gi * Nth).trace();
  const Vec JX = J * X;
  std::vector<Vec> rterms{
      (2.0 * n - 3) * thX * (Gi * Jth),
      -(2.0 * n - 3) * nsq * JX,
      (2.0 * n - 3) * (Gi * J_on_form(J, nab(X))),
      -th.dot(JX) * (Gi * th),
      -(Gi * nab(JX)),
      -delta_th * JX};
  Vec rc = Vec::Zero(m);
  double rscale = norm_vector(G, lc);
  for (const Vec& t : rterms) {
    rc += t;
    rscale = std::max(rscale, norm_vector(G, t));
  }
  const double rjc = normalized(norm_vector(G, lc - rc), rscale);
  return {rj, rjc};
}

double s_commutator_residual(const HermitianStructure& H, const Vec& p, const Settings& s) {
  const Mat G = metric(H.chart, p);
  const Mat J = H.J_fn(p);
  const Mat Se = G.ldlt().solve(S_tensor(H, p, s));
  return normalized(norm_endo(G, Se * J - J * Se), max_of({norm_endo(G, Se * J), norm_endo(G, J * Se)}));
}

double einstein_deviation(const Chart& chart, const Vec& p, double lambda, const Settings& s) {
  const Mat G = metric(chart, p);
  const Mat Ric = ricci_scalar(chart, p, s).first.as_matrix();
  return normalized(norm_form2(G, Ric - lambda * G), max_of({norm_form2(G, Ric), std::abs(lambda) * norm_form2(G, G)}));
}

ResidualMap einstein_chain_residuals(const HermitianStructure& H, const Vec& p, double lambda,
                                     const Settings& s) {
  if (einstein_deviation(H.chart, p, lambda, s) > s.tol_id())
    throw PreconditionError("metric of " + H.label + " is not Einstein with the given constant");
  const Chart& C = H.chart;
  const int n = H.n;
  const Mat G = metric(C, p);
  const Mat Gi = G.inverse();
  const Mat J = H.J_fn(p);

  // fields, tagged by the derivative depth they contain
  const TensorField thetaF = lee_field(H, s);  // depth 1
  auto jthetaF = [H, s](const Vec& q) {
    return FrameTensor::one_form(J_on_form(H.J_fn(q), lee_theta(H, q, s)), q);
  };
  auto nsqF = [H, s](const Vec& q) {
    const Vec t = lee_theta(H, q, s);
    return t.dot(metric(H.chart, q).ldlt().solve(t));
  };
  auto deltaF = [H, s, thetaF](const Vec& q) {  // depth 2
    return codifferential(H.chart, thetaF, q, s, 2).as_scalar();
  };
  auto SF = [H, s](const Vec& q) { return FrameTensor::two_form(S_tensor(H, q, s), q); };  // depth 2
  auto JSF = [H, s](const Vec& q) {
    const Mat Gq = metric(H.chart, q);
    const Mat Se = Gq.ldlt().solve(S_tensor(H, q, s));
    return FrameTensor::two_form((H.J_fn(q) * Se).transpose() * Gq, q);
  };
  auto fF = [deltaF, nsqF](const Vec& q) { return deltaF(q) + nsqF(q); };

  const Vec th = lee_theta(H, p, s);
  const Vec thS = Gi * th;
  const Vec Jth = J_on_form(J, th);
  const double nsq = th.dot(thS);
  const Mat Nth = nabla(C, thetaF, p, s, 2).as_matrix();
  const Mat S = Nth + th * th.transpose();
  const Mat Se = Gi * S;
  const double delta = -(Gi * Nth).trace();
  const double delta_div = codifferential_divergence(C, thetaF, p, s, 2);
  const Vec dnsq = gradient(nsqF, p, s, 2);
  const Mat Om = fundamental_form(G, J);
  const Mat JSform = (J * Se).transpose() * G;

  auto cn = [&](const Vec& a) { return norm_covector(G, a); };
  auto fn = [&](const Mat& w) { return norm_form2(G, w); };
  ResidualMap out;
  auto put1 = [&](const std::string& name, const Vec& l, const Vec& r, std::initializer_list<Vec> terms) {
    double sc = std::max(cn(l), cn(r));
    for (const Vec& t : terms) sc = std::max(sc, cn(t));
    out[name] = normalized(cn(l - r), sc);
  };

  // (Sth): S theta = 1/2 d|theta|^2 + |theta|^2 theta
  put1("Sth", S.transpose() * thS, 0.5 * dnsq + nsq * th, {Nth.transpose() * thS, nsq * th});
  // (trS)
  {
    const double l = (Gi * S).trace(), r = nsq - delta_div;
    out["trS"] = normalized(std::abs(l - r), max_of({std::abs(l), nsq, std::abs(delta_div)}));
  }
  // (eq nablaJth): rows a = nabla_{e_a} J theta
  {
    const Mat lhs = nabla(C, jthetaF, p, s, 2).as_matrix();
    const Mat rhs = (G * J * Se).transpose() - Jth * th.transpose() - nsq * (G * J).transpose();
    out["eq_nablaJth"] = normalized(norm_form2(G, lhs - rhs),
                                    max_of({norm_form2(G, lhs), norm_form2(G, rhs)}));
  }
  // (diffJth)
  {
    const Mat lhs = exterior_derivative(C, jthetaF, p, s, 2).as_matrix();
    const Mat t1 = 2.0 * JSform, t2 = wedge11(th, Jth), t3 = -2.0 * nsq * Om;
    out["diffJth"] = normalized(fn(lhs - t1 - t2 - t3), max_of({fn(lhs), fn(t1), fn(t2), fn(t3)}));
  }
  // (lieJth): [theta, J theta] = -|theta|^2 J theta, as vector fields
  {
    VectorField A = [H, s](const Vec& q) -> Vec {
      return metric(H.chart, q).ldlt().solve(lee_theta(H, q, s));
    };
    VectorField B = [H, s](const Vec& q) -> Vec {
      return metric(H.chart, q).ldlt().solve(J_on_form(H.J_fn(q), lee_theta(H, q, s)));
    };
    const Mat DA = jacobian(A, p, s, 2), DB = jacobian(B, p, s, 2);
    const Vec a = A(p), b = B(p);
    const Vec br = DB * a - DA * b;
    const Vec rhs = -nsq * b;
    out["lieJth"] = normalized(norm_vector(G, br - rhs), max_of({norm_vector(G, br), norm_vector(G, rhs)}));
  }
  // (codiffth)
  {
    auto wF = [H, s](const Vec& q) {
      const Vec t = lee_theta(H, q, s);
      return FrameTensor::two_form(wedge11(t, J_on_form(H.J_fn(q), t)), q);
    };
    const Vec lhs = codifferential(C, wF, p, s, 2).as_vector();
    put1("codiffth", lhs, (delta + nsq) * Jth, {});
  }
  // (codiffom)
  {
    auto wF = [H, s, nsqF](const Vec& q) {
      return FrameTensor::two_form(nsqF(q) * fundamental_form(metric(H.chart, q), H.J_fn(q)), q);
    };
    const Vec lhs = codifferential(C, wF, p, s, 2).as_vector();
    put1("codiffom", lhs, -J_on_form(J, dnsq) + (2.0 - 2.0 * n) * nsq * Jth,
         {J_on_form(J, dnsq), (2.0 - 2.0 * n) * nsq * Jth});
  }
  // third derivative level
  const Vec deltaJS = codifferential(C, JSF, p, s, 3).as_vector();
  const Vec JdeltaJS = J_on_form(J, deltaJS);
  const Vec deltaS = codifferential(C, SF, p, s, 3).as_vector();
  const Vec ddelta = gradient(deltaF, p, s, 3);
  // (eqJdel)
  put1("eqJdel", JdeltaJS, delta * th + 0.5 * dnsq + 2.0 * (n - 1) * nsq * th - lambda * th,
       {delta * th, 0.5 * dnsq, 2.0 * (n - 1) * nsq * th, lambda * th});
  // (eqJdel2)
  put1("eqJdel2", deltaS, delta * th - 0.5 * dnsq - lambda * th + ddelta,
       {delta * th, 0.5 * dnsq, lambda * th, ddelta});
  // (eqJdel3)
  put1("eqJdel3", JdeltaJS + deltaS, -delta * th - dnsq - nsq * th, {JdeltaJS, deltaS, delta * th, dnsq, nsq * th});
  // (summ)
  {
    std::vector<Vec> terms{3.0 * delta * th, -2.0 * lambda * th, ddelta, dnsq, (2.0 * n - 1) * nsq * th};
    Vec sum = Vec::Zero(th.size());
    double sc = 0;
    for (const Vec& t : terms) {
      sum += t;
      sc = std::max(sc, cn(t));
    }
    out["summ"] = normalized(cn(sum), sc);
  }
  // (eqf)
  {
    const double f = delta + nsq;
    const Vec df = gradient(fF, p, s, 3);
    put1("eqf", df, (2.0 * lambda - 3.0 * f + (4.0 - 2.0 * n) * nsq) * th, {3.0 * f * th, (4.0 - 2.0 * n) * nsq * th});
  }
  return out;
}

ParallelFieldResult parallel_field_residuals(const HermitianStructure& H, const Vec& p,
                                             const VectorField& V, const Settings& s) {
  const Chart& C = H.chart;
  const int m = C.dim;
  const Mat G = metric(C, p);
  const Mat J = H.J_fn(p);
  const Vec v = V(p);
  TensorField vF = [V](const Vec& q) { return FrameTensor::vector(V(q), q); };
  const Mat nV = nabla(C, vF, p, s, 1).as_matrix();
  const double par = normalized(norm_endo(G, nV), 0.0);
  if (par > s.tol_id()) throw PreconditionError("field is not parallel on " + H.label);
  if (std::abs(norm_vector(G, v) - 1.0) > s.tol_id()) throw PreconditionError("field is not unit");

  ParallelFieldResult res;
  res.residuals["nablaV"] = par;
  const Vec th = lee_theta(H, p, s);
  const Vec Jv = J * v;
  res.a = th.dot(v);
  res.b = th.dot(Jv);
  const double a = res.a, b = res.b;
  {
    const Vec rhs = a * (G * v) + b * (G * Jv);
    res.residuals["decomposition"] =
        normalized(norm_covector(G, th - rhs), max_of({norm_covector(G, th), norm_covector(G, rhs)}));
  }
  // (nablaJV): column a holds nabla_{e_a} JV
  {
    TensorField jvF = [H, V](const Vec& q) { return FrameTensor::vector(H.J_fn(q) * V(q), q); };
    const Mat lhs = nabla(C, jvF, p, s, 1).as_matrix();
    const Mat rhs = (-b * v + a * Jv) * (G * v).transpose() + b * Mat::Identity(m, m) -
                    (a * v + b * Jv) * (G * Jv).transpose() - a * J;
    res.residuals["nablaJV"] = normalized(norm_endo(G, lhs - rhs), max_of({norm_endo(G, lhs), norm_endo(G, rhs)}));
  }
  // (ddJV)
  {
    TensorField jvFlat = [H, V](const Vec& q) {
      return FrameTensor::one_form(metric(H.chart, q) * (H.J_fn(q) * V(q)), q);
    };
    const Mat lhs = exterior_derivative(C, jvFlat, p, s, 1).as_matrix();
    const Mat rhs = 2.0 * a * (wedge11(G * v, G * Jv) - fundamental_form(G, J));
    res.residuals["ddJV"] = normalized(norm_form2(G, lhs - rhs), max_of({norm_form2(G, lhs), norm_form2(G, rhs)}));
  }
  res.residuals["ab"] = std::abs(a * b);
  return res;
}

// ---- potentials -------------------------------------------------------------------


LinePotential::LinePotential(HermitianStructure H, Vec base, Settings s)
    : H_(std::make_shared<const HermitianStructure>(std::move(H))), base_(std::move(base)), s_(s) {}

double LinePotential::integrate(const Vec& a, const Vec& b) const {
  const auto& gl = gauss_legendre24();
  const Vec d = b - a;
  if (d.norm() == 0.0) return 0.0;
  double acc = 0;
  for (int i = 0; i < gl.nodes.size(); ++i) acc += gl.weights[i] * lee_theta(*H_, Vec(a + gl.nodes[i] * d), s_).dot(d);
  return acc;
}

double LinePotential::operator()(const Vec& p) const { return integrate(base_, p); }

double LinePotential::path_independence_defect(const Vec& p) const {
  double stair = 0;
  Vec cur = base_;
  for (int i = 0; i < p.size(); ++i) {
    Vec next = cur;
    next[i] = p[i];
    stair += integrate(cur, next);
    cur = next;
  }
  const double straight = integrate(base_, p);
  return normalized(std::abs(stair - straight), std::abs(straight));
}

// ---- commuting pair --------------------------------------------------------------

ResidualMap commuting_pair_residuals(const Chart& gplus, const HermitianStructure& I,
                                     const HermitianStructure& J, const Vec& p, const Settings& s) {
  const int n = J.n;
  const Mat G = metric(gplus, p);
  const Mat Gi = G.inverse();
  const Mat Im = I.J_fn(p), Jm = J.J_fn(p);
  const HermitianStructure Jg = with_chart(J, gplus, J.label);
  const Vec th = lee_theta(Jg, p, s);
  const double nsq = th.dot(Gi * th);
  if (nsq < 10 * s.tol_id()) throw SingularPointError("Lee form vanishes at the sample point");
  const Vec Ith = J_on_form(Im, th), Jth = J_on_form(Jm, th);
  const Mat OmI = fundamental_form(G, Im), OmJ = fundamental_form(G, Jm);
  ResidualMap out;
  const Mat IJ = Im * Jm, JI = Jm * Im;
  out["commutator"] = normalized(norm_endo(G, IJ - JI), norm_endo(G, IJ));
  out["trace"] = normalized(std::abs(IJ.trace() - (2.0 * n - 4)), std::abs(2.0 * n - 4));
  out["Itheta_Jtheta"] = normalized(norm_covector(G, Ith - Jth), norm_covector(G, Ith));
  {
    const Mat rhs = -Im + (2.0 / nsq) * ((Gi * Ith) * th.transpose() - (Gi * th) * Ith.transpose());
    out["J_formula"] = normalized(norm_endo(G, Jm - rhs), max_of({norm_endo(G, Jm), norm_endo(G, rhs)}));
  }
  {
    FrameTensor a = wedge12(th, OmJ), b = wedge12(th, OmI);
    out["to"] = normalized(cov_norm(G, a + b), max_of({cov_norm(G, a), cov_norm(G, b)}));
  }
  const Mat sigma = 0.5 * (OmI + OmJ);
  {
    const Mat rhs = wedge11(th, Ith) / nsq;
    out["sigma"] = normalized(norm_form2(G, sigma - rhs), max_of({norm_form2(G, sigma), norm_form2(G, rhs)}));
  }
  {
    TensorField sF = [I, J, gplus](const Vec& q) {
      const Mat Gq = metric(gplus, q);
      return FrameTensor::two_form(0.5 * (fundamental_form(Gq, I.J_fn(q)) + fundamental_form(Gq, J.J_fn(q))), q);
    };
    const FrameTensor Ns = nabla(gplus, sF, p, s, 1);
    const int m = gplus.dim;
    double worst = 0, sc = 0;
    for (int a = 0; a < m; ++a) {
      Mat lhs(m, m);
      for (int b = 0; b < m; ++b)
        for (int c = 0; c < m; ++c) lhs(b, c) = Ns.comp[(a * m + b) * m + c];
      const Vec X = Vec::Unit(m, a);
      const Mat rhs = 0.5 * (wedge11(G * X, Ith) - wedge11(G * (Im * X), th)) - th[a] * sigma;
      worst = std::max(worst, norm_form2(G, lhs - rhs));
      sc = max_of({sc, norm_form2(G, lhs), norm_form2(G, rhs)});
    }
    out["deromega"] = normalized(worst, sc);
  }
  const Mat Nth = nabla(gplus, lee_field(Jg, s), p, s, 2).as_matrix();
  const double delta = codifferential_divergence(gplus, lee_field(Jg, s), p, s, 2);
  {
    const Mat A = Gi * Nth.transpose();
    const double lhs = (Im * Jm * A).trace();
    const double rhs = 2.0 * (n - 1) * nsq + delta;
    out["nablath"] = normalized(std::abs(lhs - rhs), max_of({std::abs(lhs), 2.0 * (n - 1) * nsq, std::abs(delta)}));
  }
  {
    const double c1 = delta / nsq + n + 1, c2 = delta / nsq + n - 1;
    const Mat rhs = 0.5 * nsq * G - 0.5 * c1 * th * th.transpose() - 0.5 * c2 * Ith * Ith.transpose();
    out["et"] = normalized(norm_form2(G, Nth - rhs), max_of({norm_form2(G, Nth), norm_form2(G, rhs)}));
  }
  return out;
}

ResidualMap hamiltonian_form_residuals(const Chart& gplus, const HermitianStructure& I,
                                       const HermitianStructure& J, const ScalarField& potential,
                                       const Vec& p, const Vec& X, const Settings& s) {
  const Mat G = metric(gplus, p);
  const Mat Gi = G.inverse();
  const Mat Im = I.J_fn(p);
  auto sigmaT = [I, J, gplus, potential](const Vec& q) -> Mat {
    const Mat Gq = metric(gplus, q);
    return std::exp(potential(q)) * 0.5 * (fundamental_form(Gq, I.J_fn(q)) + fundamental_form(Gq, J.J_fn(q)));
  };
  TensorField sF = [sigmaT](const Vec& q) { return FrameTensor::two_form(sigmaT(q), q); };
  ScalarField trF = [sigmaT, I, gplus](const Vec& q) {
    const Mat Gq = metric(gplus, q);
    return 0.5 * form_inner(Gq.inverse(), sigmaT(q), fundamental_form(Gq, I.J_fn(q)));
  };
  const Mat lhs = covariant_derivative(gplus, sF, p, X, s, 2).as_matrix();
  const Vec dF = gradient(trF, p, s, 2);
  const Vec dcF = G * Im * (Gi * dF);  // sum_ab g^ab (I e_a)^flat d_b F
  const Mat t1 = 0.5 * wedge11(dF, G * (Im * X)), t2 = -0.5 * wedge11(dcF, G * X);
  ResidualMap out;
  out["tilom"] = normalized(norm_form2(G, lhs - t1 - t2), max_of({norm_form2(G, lhs), norm_form2(G, t1), norm_form2(G, t2)}));
  const double tr = trF(p), e = std::exp(potential(p));
  out["trace_sigma"] = normalized(std::abs(tr - e), e);
  return out;
}

double hamiltonian_form_residual(const Chart& gplus, const HermitianStructure& I,
                                 const HermitianStructure& J, const ScalarField& potential,
                                 const Vec& p, const Vec& X, const Settings& s) {
  return hamiltonian_form_residuals(gplus, I, J, potential, p, X, s).at("tilom");
}

// ---- average metric ---------------------------------------------------------------

ResidualMap average_metric_residuals(const HermitianStructure& g0I, const VectorField& dpotential,
                                     const Vec& p, const Settings& s) {
  const Chart& C = g0I.chart;
  const Mat G = metric(C, p);
  const Mat Gi = G.inverse();
  const Mat Im = g0I.J_fn(p);
  const Vec th0 = lee_theta(g0I, p, s);
  const Vec Ith0 = J_on_form(Im, th0);
  VectorField xiF = [g0I, s](const Vec& q) -> Vec {
    return metric(g0I.chart, q).ldlt().solve(J_on_form(g0I.J_fn(q), lee_theta(g0I, q, s)));
  };
  const Vec xi = xiF(p);
  const Vec Ixi = Im * xi;
  const double xin = norm_vector(G, xi);
  if (xin * xin < 10 * s.tol_id()) throw SingularPointError("xi vanishes at the sample point");
  ResidualMap out;
  if (dpotential) {
    const Vec rhs = -0.5 * dpotential(p);
    out["theta0"] = normalized(norm_covector(G, th0 - rhs), max_of({norm_covector(G, th0), norm_covector(G, rhs)}));
  }
  // (der0theta) with least-squares f
  const Mat N = nabla(C, lee_field(g0I, s), p, s, 2).as_matrix();
  const Mat T = th0 * th0.transpose() + Ith0 * Ith0.transpose();
  const double f = form_inner(Gi, N, T) / form_inner(Gi, T, T);
  out["f_value"] = f;
  out["der0theta"] = normalized(norm_form2(G, N - f * T), norm_form2(G, N));

  auto vec_field = [](VectorField V) -> TensorField {
    return [V](const Vec& q) { return FrameTensor::vector(V(q), q); };
  };
  auto endo_res = [&](const Mat& lhs, const Mat& rhs) {
    return normalized(norm_endo(G, lhs - rhs), max_of({norm_endo(G, lhs), norm_endo(G, rhs)}));
  };
  VectorField IxiF = [g0I, xiF](const Vec& q) -> Vec { return g0I.J_fn(q) * xiF(q); };
  {
    const Mat lhs = nabla(C, vec_field(IxiF), p, s, 2).as_matrix();
    const Mat rhs = -f * (Ixi * (G * Ixi).transpose() + xi * (G * xi).transpose());
    out["der0Jxi"] = endo_res(lhs, rhs);
  }
  {
    const Mat lhs = nabla(C, vec_field(xiF), p, s, 2).as_matrix();
    const Mat rhs = (1 + f) * (Ixi * (G * xi).transpose() - xi * (G * Ixi).transpose()) - xin * xin * Im;
    out["der0xi"] = endo_res(lhs, rhs);
  }
  VectorField zetaF = [g0I, IxiF](const Vec& q) -> Vec {
    const Vec v = IxiF(q);
    return v / norm_vector(metric(g0I.chart, q), v);
  };
  {
    const Mat lhs = nabla(C, vec_field(zetaF), p, s, 2).as_matrix();
    const Mat rhs = -(f / xin) * xi * (G * xi).transpose();
    out["derIxi"] = endo_res(lhs, rhs);
  }
  {
    VectorField IzetaF = [g0I, zetaF](const Vec& q) -> Vec { return g0I.J_fn(q) * zetaF(q); };
    const Vec v = covariant_derivative(C, vec_field(IzetaF), p, zetaF(p), s, 2).as_vector();
    out["derzeta"] = normalized(norm_vector(G, v), 0.0);
  }
  {
    const auto dg = metric_partials(C, p, s);
    const Mat Dxi = jacobian(xiF, p, s, 2);
    Mat L = Mat::Zero(C.dim, C.dim);
    for (int c = 0; c < C.dim; ++c) L += xi[c] * dg[c];
    const Mat tail = Dxi.transpose() * G;  // (a,b) -> d_a xi^c g_cb
    L += tail + tail.transpose();
    out["killing"] = normalized(norm_form2(G, L), norm_form2(G, tail));
  }
  return out;
}

// ---- classification ------------------------------------------------------------

StructureClass classify_structure(const HermitianStructure& H, const std::vector<Vec>& samples,
                                  const std::vector<Loop>& loops, const Settings& s) {
  if (samples.empty()) throw ParameterError("classification needs sample points");
  const int m = H.chart.dim;
  // scale-free norms: measure in g / c with c the mean conformal size of g
  double c = 0;
  for (const Vec& p : samples) c += std::pow(metric(H.chart, p).determinant(), 1.0 / m);
  c /= static_cast<double>(samples.size());
  double max_theta = 0, max_nabla = 0, max_d = 0, max_gate = 0;
  for (const Vec& p : samples) {
    const LeeData L = lee_form(H, p, s, true);
    const Mat G = metric(H.chart, p) / c;
    max_theta = std::max(max_theta, norm_covector(G, L.theta));
    max_nabla = std::max(max_nabla, norm_form2(G, L.nabla_theta));
    max_d = std::max(max_d, L.closedness);
    max_gate = std::max(max_gate, L.gate_residual);
  }
  StructureClass out;
  out.evidence["max_theta"] = max_theta;
  out.evidence["max_nabla_theta"] = max_nabla;
  out.evidence["max_dtheta"] = max_d;
  out.evidence["max_dOmega_gate"] = max_gate;
  const TensorField th = lee_field(H, s);
  double max_period = 0;
  for (const Loop& L : loops) {
    const double v = loop_integral(H.chart, th, L);
    out.periods.emplace_back(L.label, v);
    max_period = std::max(max_period, std::abs(v));
  }
  out.evidence["max_period"] = max_period;
  const double tol = s.tol_id();
  if (max_theta < tol) {
    out.kind = StructureKind::kaehler;
    return out;
  }
  const bool closed = max_d < tol;
  if (max_nabla < tol) {
    if (!closed) throw InconsistencyError("parallel Lee form that is not closed");
    out.kind = StructureKind::vaisman;
    return out;
  }
  if (closed && max_period < s.tol_ode) {
    out.kind = StructureKind::gck;
    return out;
  }
  if (max_period >= 10 * s.tol_ode) {
    out.kind = StructureKind::strictly_lck_candidate;
    return out;
  }
  throw InconsistencyError("classification evidence is ambiguous for " + H.label);
}

}  // namespace lck
