#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "lck/holonomy.hpp"
#include "lck/zoo.hpp"

#include <unsupported/Eigen/MatrixFunctions>

#include <cmath>

using namespace lck;

namespace {

struct Both {
  HolonomyEstimate span, loops;
  HolonomyClass span_class, loop_class;
};

Both estimate(const ZooEntry& e, std::uint64_t seed, const HolonomyOptions& o = {}) {
  const Settings s;
  const HolonomyTarget& h = *e.holonomy;
  const Vec base = h.chart.domain.center();
  std::vector<Mat> cands;
  for (const EndoFn& J : h.j_candidates) cands.push_back(J(base));
  std::mt19937_64 rng(seed);
  Both b;
  b.span = curvature_span(h.chart, base, random_probes(h.chart, 3 * e.n * (2 * e.n - 1), rng, s), s, o);
  b.loops = loop_holonomy_auto(h.chart, base, 2, rng, s, o);
  b.span_class = classify_holonomy(b.span, e.n, cands, o);
  b.loop_class = classify_holonomy(b.loops, e.n, cands, o);
  return b;
}

}  // namespace

TEST_CASE("flat space has trivial restricted holonomy") {
  const Both b = estimate(euclidean(2), 1);
  CHECK(b.span.algebra_dim == 0);
  CHECK(b.loops.algebra_dim == 0);
  CHECK(b.span_class == HolonomyClass::reducible_other);
  CHECK(b.loop_class == HolonomyClass::reducible_other);
}

TEST_CASE("flat inversion stays confidently trivial despite stencil noise") {
  for (int n : {2, 3}) {
    const Both b = estimate(flat_inversion(n), 3);
    CHECK(b.span.algebra_dim == 0);
    CHECK(b.span.rank_gap >= 10);
    CHECK(b.span_class == HolonomyClass::reducible_other);
    CHECK(b.loop_class == HolonomyClass::reducible_other);
  }
}

TEST_CASE("principal logarithm of a rotation") {
  Mat A = Mat::Zero(3, 3);
  A(0, 1) = 0.2;
  A(1, 0) = -0.2;
  A(1, 2) = 0.1;
  A(2, 1) = -0.1;
  const Mat H = A.exp();
  CHECK((orthogonal_log(H) - A).norm() < 1e-12);
  CHECK_THROWS_AS(orthogonal_log(Mat(-Mat::Identity(3, 3))), LoopTooLargeError);
}

TEST_CASE("Hopf surface: SO(3) fixing the Lee field") {
  const ZooEntry e = hopf(2, 2 * std::acos(-1.0));
  const Both b = estimate(e, 5);
  CHECK(b.span.algebra_dim == 3);
  CHECK(b.loops.algebra_dim == 3);
  CHECK(b.span_class == HolonomyClass::so_2n_minus_1);
  CHECK(b.loop_class == HolonomyClass::so_2n_minus_1);
  CHECK(b.span.rank_gap >= 10);
  CHECK(b.loops.rank_gap >= 10);
  CHECK(std::abs(std::abs(b.span.fixed_vector.normalized().dot(Vec::Unit(4, 0))) - 1.0) < 1e-6);
}

TEST_CASE("Calabi Kaehler metric: generators commute with J+") {
  const ZooEntry e = calabi_ansatz(named_profile("sin"), std::acos(-1.0));
  const Both b = estimate(e, 8);
  CHECK(b.span.algebra_dim <= 4);
  CHECK(b.span.algebra_dim == b.loops.algebra_dim);
  CHECK(b.span.commutes_with_candidate);
  CHECK(b.loops.commutes_with_candidate);
  CHECK(b.span_class == HolonomyClass::u_n);
  CHECK(b.loop_class == HolonomyClass::u_n);
}

TEST_CASE("round sphere: a one-dimensional algebra") {
  const ZooEntry e = resolve_selector("S2");
  const Both b = estimate(e, 2);
  CHECK(b.span.algebra_dim == 1);
  CHECK(b.loops.algebra_dim == 1);
}

TEST_CASE("an impossible confidence threshold yields inconclusive") {
  HolonomyOptions o;
  o.min_gap = 1e300;
  const Both b = estimate(hopf(2, 6.0), 3, o);
  CHECK(b.span_class == HolonomyClass::inconclusive);
}

TEST_CASE("labels") {
  CHECK(to_string(HolonomyClass::so_2n) == "SO(2n)");
  CHECK(to_string(HolonomyClass::u_n) == "U(n)");
  CHECK(to_string(HolonomyClass::reducible_other) == "reducible/other");
}
