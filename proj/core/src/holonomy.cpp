#include "lck/holonomy.hpp"

#include <unsupported/Eigen/MatrixFunctions>

#include <algorithm>
#include <cmath>

namespace lck {

std::string to_string(HolonomyClass c) {
  switch (c) {
    case HolonomyClass::so_2n: return "SO(2n)";
    case HolonomyClass::so_2n_minus_1: return "SO(2n-1)";
    case HolonomyClass::u_n: return "U(n)";
    case HolonomyClass::reducible_other: return "reducible/other";
    case HolonomyClass::inconclusive: return "inconclusive";
  }
  return "inconclusive";
}

namespace {

Vec upper(const Mat& A) {
  const int m = static_cast<int>(A.rows());
  Vec v(m * (m - 1) / 2);
  int k = 0;
  for (int i = 0; i < m; ++i)
    for (int j = i + 1; j < m; ++j) v[k++] = A(i, j);
  return v;
}

Mat from_upper(const Vec& v, int m) {
  Mat A = Mat::Zero(m, m);
  int k = 0;
  for (int i = 0; i < m; ++i)
    for (int j = i + 1; j < m; ++j) {
      A(i, j) = v[k];
      A(j, i) = -v[k];
      ++k;
    }
  return A;
}

struct RankResult {
  int rank = 0;
  double gap = 0.0;
  std::vector<double> sv;
  std::vector<Mat> basis;
};

// Rank of a stack of skew matrices, with an orthonormal basis of the span.
RankResult span_rank(const std::vector<Mat>& mats, int m, double rel, double floor) {
  RankResult out;
  const int d = m * (m - 1) / 2;
  if (mats.empty()) {
    out.gap = 1e300;
    return out;
  }
  Mat S(static_cast<Eigen::Index>(mats.size()), d);
  for (std::size_t i = 0; i < mats.size(); ++i) S.row(static_cast<Eigen::Index>(i)) = upper(mats[i]).transpose();
  Eigen::JacobiSVD<Mat> svd(S, Eigen::ComputeThinV);
  const Vec sv = svd.singularValues();
  for (int i = 0; i < sv.size(); ++i) out.sv.push_back(sv[i]);
  const double cut = std::max(rel * (sv.size() ? sv[0] : 0.0), floor);
  while (out.rank < sv.size() && sv[out.rank] > cut) ++out.rank;
  const double above = out.rank > 0 ? sv[out.rank - 1] : cut;
  const double below = out.rank < sv.size() ? sv[out.rank] : 0.0;
  // a full or empty rank compares against the cut itself
  if (out.rank == 0) out.gap = cut / std::max(below, 1e-300);
  else if (out.rank == sv.size()) out.gap = above / cut;
  else out.gap = above / std::max(below, 1e-300);
  out.gap = std::min(out.gap, 1e16);  // exact separation; keeps reports readable
  for (int i = 0; i < out.rank; ++i) out.basis.push_back(from_upper(svd.matrixV().col(i), m) / std::sqrt(2.0));
  return out;
}

HolonomyEstimate close_algebra(std::vector<Mat> raw, const Vec& base, const Mat& E, double floor,
                               const HolonomyOptions& o) {
  HolonomyEstimate est;
  est.base = base;
  est.frame = E;
  est.raw_count = static_cast<int>(raw.size());
  const int m = static_cast<int>(E.rows());
  for (const Mat& A : raw) {
    const double nA = A.norm();
    if (nA > floor) est.skew_defect = std::max(est.skew_defect, (A + A.transpose()).norm() / nA);
  }
  RankResult r = span_rank(raw, m, o.relative_cut, floor);
  double gap = r.gap;
  for (int pass = 0; pass < o.closure_passes && r.rank > 0; ++pass) {
    std::vector<Mat> ext = r.basis;
    for (std::size_t i = 0; i < r.basis.size(); ++i)
      for (std::size_t j = i + 1; j < r.basis.size(); ++j) ext.push_back(r.basis[i] * r.basis[j] - r.basis[j] * r.basis[i]);
    // unit-scale basis from here on
    r = span_rank(ext, m, o.relative_cut, o.relative_cut);
    gap = std::min(gap, r.gap);
  }
  est.algebra_dim = r.rank;
  est.generators = r.basis;
  est.singular_values = r.sv;
  est.rank_gap = gap;
  return est;
}

}  // namespace

std::vector<Probe> random_probes(const Chart& chart, int count, std::mt19937_64& rng, const Settings& s) {
  std::normal_distribution<double> nd;
  std::vector<Probe> out;
  for (int k = 0; k < count; ++k) {
    Probe pr;
    pr.point = chart.domain.sample(rng, s.margin());
    pr.X = Vec(chart.dim);
    pr.Y = Vec(chart.dim);
    for (int i = 0; i < chart.dim; ++i) {
      pr.X[i] = nd(rng);
      pr.Y[i] = nd(rng);
    }
    out.push_back(pr);
  }
  return out;
}

HolonomyEstimate curvature_span(const Chart& chart, const Vec& base, const std::vector<Probe>& probes,
                                const Settings& s, const HolonomyOptions& o) {
  const int m = chart.dim;
  const Mat G = metric(chart, base);
  const Mat E = orthonormal_frame(G);
  const Mat Einv = E.inverse();
  std::vector<Mat> raw;
  for (const Probe& pr : probes) {
    const FrameTensor R = riemann(chart, pr.point, s);
    const Mat Rxy = curvature_endomorphism(R, pr.X, pr.Y);
    Mat P = Mat::Identity(m, m);
    if ((pr.point - base).norm() > 0)
      P = transport_along(chart, segment(pr.point, base, steps_for(pr.point, base, o.steps_per_unit)),
                          Mat::Identity(m, m), s);
    raw.push_back(Einv * (P * Rxy * P.inverse()) * E);
  }
  return close_algebra(std::move(raw), base, E, o.span_floor, o);
}

std::vector<Loop> lasso_family(const Chart& chart, const Vec& base, int corners, std::mt19937_64& rng,
                               const Settings& s, const HolonomyOptions& o) {
  const int m = chart.dim;
  std::vector<Loop> out;
  Box inner = chart.domain;
  inner.hi.array() -= o.loop_eps;  // room for the square
  for (int c = 0; c < corners; ++c) {
    const Vec corner = inner.sample(rng, s.margin());
    for (int i = 0; i < m; ++i)
      for (int j = i + 1; j < m; ++j) out.push_back(lasso_loop(base, corner, i, j, o.loop_eps, o.steps_per_unit));
  }
  return out;
}

Mat orthogonal_log(const Mat& H) {
  const int m = static_cast<int>(H.rows());
  if ((H - Mat::Identity(m, m)).operatorNorm() >= 0.5)
    throw LoopTooLargeError("transport too far from identity for a principal logarithm");
  Mat L = H.log();
  return 0.5 * (L - L.transpose());
}

HolonomyEstimate loop_holonomy(const Chart& chart, const std::vector<Loop>& loops, const Vec& base,
                               const Settings& s, const HolonomyOptions& o) {
  const Mat E = orthonormal_frame(metric(chart, base));
  std::vector<Mat> raw;
  for (const Loop& L : loops) {
    const Mat H = parallel_transport(chart, L, E, s);  // columns: transported frame
    raw.push_back(orthogonal_log(E.inverse() * H));
  }
  return close_algebra(std::move(raw), base, E, o.loop_floor, o);
}

HolonomyEstimate loop_holonomy_auto(const Chart& chart, const Vec& base, int corners, std::mt19937_64& rng,
                                    const Settings& s, HolonomyOptions o) {
  const auto state = rng;
  for (int attempt = 0; attempt < 6; ++attempt) {
    std::mt19937_64 local = state;
    try {
      const auto loops = lasso_family(chart, base, corners, local, s, o);
      HolonomyEstimate est = loop_holonomy(chart, loops, base, s, o);
      rng = local;
      return est;
    } catch (const LoopTooLargeError&) {
      o.loop_eps *= 0.5;
      o.loop_floor *= 0.25;
    }
  }
  throw LoopTooLargeError("loops stayed too large after repeated subdivision");
}

HolonomyClass classify_holonomy(HolonomyEstimate& est, int n, const std::vector<Mat>& j_candidates,
                                const HolonomyOptions& o) {
  const int m = 2 * n;
  const int d = est.algebra_dim;
  const Mat Einv = est.frame.inverse();
  // commutation with a candidate complex structure
  est.commutes_with_candidate = false;
  est.commutator_defect = d > 0 ? 1e300 : 0.0;
  for (const Mat& Jc : j_candidates) {
    const Mat J = Einv * Jc * est.frame;
    double worst = 0;
    for (const Mat& A : est.generators) worst = std::max(worst, (A * J - J * A).norm());
    est.commutator_defect = std::min(est.commutator_defect, worst);
    if (d > 0 && worst < o.structure_tol) est.commutes_with_candidate = true;
  }
  // common kernel
  est.fixed_dim = 0;
  est.fixed_vector = Vec();
  if (d > 0) {
    Mat S(d * m, m);
    for (int i = 0; i < d; ++i) S.block(i * m, 0, m, m) = est.generators[static_cast<std::size_t>(i)];
    Eigen::JacobiSVD<Mat> svd(S, Eigen::ComputeFullV);
    const Vec sv = svd.singularValues();
    for (int i = 0; i < sv.size(); ++i)
      if (sv[i] < o.structure_tol) ++est.fixed_dim;
    if (est.fixed_dim > 0) {
      Vec v = est.frame * svd.matrixV().col(m - 1);
      est.fixed_vector = v / v.norm();
    }
  } else {
    est.fixed_dim = m;
  }

  HolonomyClass c;
  if (est.rank_gap < o.min_gap) c = HolonomyClass::inconclusive;
  else if (d == 0) c = HolonomyClass::reducible_other;
  else if (d == n * (2 * n - 1)) c = HolonomyClass::so_2n;
  else if (d == (2 * n - 1) * (n - 1) && est.fixed_dim >= 1) c = HolonomyClass::so_2n_minus_1;
  else if (est.commutes_with_candidate && d <= n * n) c = HolonomyClass::u_n;
  else c = HolonomyClass::reducible_other;
  est.classification = c;
  return c;
}

}  // namespace lck
