#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "lck/zoo.hpp"

#include <cmath>

using namespace lck;

namespace {
const double kPi = std::acos(-1.0);

// Every entry check passes at a handful of points.
void entry_checks_pass(const ZooEntry& e, int points) {
  const Settings s;
  std::mt19937_64 rng(17);
  if (e.point_checks)
    for (int k = 0; k < points; ++k) {
      const Vec p = e.charts[0].domain.sample(rng, s.margin());
      for (const Check& c : e.point_checks(p, rng, s)) {
        INFO(e.name << " " << c.name);
        CHECK(c.value <= tolerance(s, c.tol));
      }
    }
  if (e.global_checks)
    for (const Check& c : e.global_checks(s)) {
      INFO(e.name << " " << c.name);
      CHECK(c.value <= tolerance(s, c.tol));
    }
}
}  // namespace

TEST_CASE("selector parsing and canonical names") {
  CHECK(resolve_selector("hopf{n=3}").n == 3);
  CHECK(resolve_selector("hopf{circumference=2pi,n=2}").name == resolve_selector("hopf{n=2}").name);
  CHECK(resolve_selector("flat_inversion{n=3}").charts[0].dim == 6);
  CHECK(resolve_selector("warped{c=sin,base=flat_C}").params.at("base") == "flat_C");
  CHECK(resolve_selector("calabi{ell=sin,b=pi}").family == "calabi");
  CHECK(resolve_selector("S2").n == 1);
  CHECK_THROWS_AS(resolve_selector("hopf{n=2,radius=1}"), ParameterError);
  CHECK_THROWS_AS(resolve_selector("torus{}"), ParameterError);
  CHECK_THROWS_AS(resolve_selector("hopf{n=1}"), ParameterError);
  CHECK_THROWS_AS(resolve_selector("warped{c=cosh}"), ParameterError);
}

TEST_CASE("Calabi construction rejects profiles that are not positive") {
  CHECK_THROWS_AS(calabi_ansatz(named_profile("zero"), kPi), ParameterError);
  CHECK_THROWS_AS(calabi_ansatz(named_profile("sin"), 4.0), ParameterError);  // sin < 0 past pi
}

TEST_CASE("profile half-integral closed forms agree with quadrature") {
  for (const char* name : {"sin", "sin2"}) {
    const ProfileFn l = named_profile(name);
    REQUIRE(l.half_integral);
    for (double r : {0.1, 0.9, 2.5}) {
      INFO(name << " r=" << r);
      CHECK(l.half_integral(r) == doctest::Approx(half_integral(l, r)).epsilon(1e-12));
    }
  }
}

TEST_CASE("Hopf entry: expected Lee form and fixed holonomy vector") {
  const Settings s;
  const ZooEntry e = hopf(2, 2 * kPi);
  const Vec p = e.charts[0].domain.center();
  CHECK((lee_theta(e.structures[0], p, s) - e.expected_lee(p)).norm() < 1e-8);
  CHECK(e.expected_kind == StructureKind::vaisman);
  REQUIRE(e.holonomy);
  CHECK(e.holonomy->expected == "SO(2n-1)");
  entry_checks_pass(e, 5);
  entry_checks_pass(hopf(3, 5.0), 3);
}

TEST_CASE("flat inversion entry") {
  const Settings s;
  for (int n : {2, 3}) {
    const ZooEntry e = flat_inversion(n);
    const Vec p = e.charts[0].domain.center();
    CHECK((lee_theta(e.structures[0], p, s) - e.expected_lee(p)).norm() < 1e-8);
    CHECK(e.einstein_lambda.value_or(-1) == 0.0);
    entry_checks_pass(e, 5);
  }
}

TEST_CASE("warped entries") {
  entry_checks_pass(warped_vaisman_gck(named_profile("sin"), "S2"), 5);
  entry_checks_pass(warped_vaisman_gck(named_profile("sin"), "flat_C"), 5);
  const ZooEntry flat = warped_vaisman_gck(named_profile("zero"), "S2");
  CHECK(flat.expected_kind == StructureKind::kaehler);
}

TEST_CASE("Calabi entry: tables, potentials and normalization") {
  const ZooEntry e = calabi_ansatz(named_profile("sin"), kPi);
  REQUIRE(e.calabi);
  CHECK(e.calabi->normalization == doctest::Approx(2.0).epsilon(1e-9));
  CHECK(e.structures.size() == 5);
  entry_checks_pass(e, 5);
  entry_checks_pass(calabi_ansatz(named_profile("sin2"), 1.5), 3);
}

TEST_CASE("Kaehler bases") {
  for (const ZooEntry& e : kaehler_bases()) {
    CHECK(e.expected_kind == StructureKind::kaehler);
    entry_checks_pass(e, 3);
  }
}
