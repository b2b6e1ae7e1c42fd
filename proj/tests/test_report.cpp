#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "lck/report.hpp"

#include <json.hpp>

using namespace lck;

namespace {

SuiteConfig config(std::string manifold, std::vector<std::string> suites, int samples, std::uint64_t seed = 0) {
  SuiteConfig c;
  c.manifold = std::move(manifold);
  c.suites = std::move(suites);
  c.samples = samples;
  c.seed = seed;
  return c;
}

const SuiteResult& suite(const Report& r, const std::string& name) {
  for (const SuiteResult& s : r.suites)
    if (s.suite == name) return s;
  throw std::runtime_error("missing suite " + name);
}

template <class T>
T info(const SuiteResult& s, const std::string& key) {
  for (const auto& [k, v] : s.classification)
    if (k == key) return std::get<T>(v);
  throw std::runtime_error("missing classification " + key);
}

}  // namespace

TEST_CASE("empty suite list echoes the configuration and passes") {
  const Report r = run(config("hopf{n=2}", {}, 10));
  CHECK(r.pass);
  CHECK(r.exit_code == 0);
  CHECK(r.suites.empty());
  const auto j = nlohmann::json::parse(emit_json(r));
  CHECK(j["schema_version"] == 1);
  CHECK(j["config"]["manifold"] == "hopf{n=2}");
  CHECK(j["suites"].empty());
  CHECK(j["pass"] == true);
  CHECK_FALSE(j.contains("wall_time_s"));
}

TEST_CASE("configuration validation") {
  CHECK_THROWS_AS(validate(config("hopf{n=2}", {"nonsense"}, 10)), ParameterError);
  CHECK_THROWS_AS(validate(config("hopf{n=2}", {}, 0)), ParameterError);
  SuiteConfig c = config("hopf{n=2}", {}, 10);
  c.settings.tol_chain = -1;
  CHECK_THROWS_AS(validate(c), ParameterError);
  CHECK_THROWS_AS(run(config("nowhere{}", {"classify"}, 10)), ParameterError);
}

TEST_CASE("identical configuration gives byte-identical JSON, serial or parallel") {
  SuiteConfig c = config("calabi{ell=sin,b=pi}", {"lck-identities", "commuting-pair"}, 12, 99);
  const std::string a = emit_json(run(c));
  const std::string b = emit_json(run(c));
  c.parallel = true;
  c.max_threads = 4;
  const std::string p = emit_json(run(c));
  CHECK(a == b);
  CHECK(a == p);
  c.seed = 100;
  CHECK(emit_json(run(c)) != a);
}

TEST_CASE("forced failure via an impossible tolerance") {
  SuiteConfig c = config("hopf{n=2}", {"lck-identities"}, 5);
  c.settings.tol_id_override = 1e-20;
  const Report r = run(c);
  CHECK_FALSE(r.pass);
  CHECK(r.exit_code == 1);
  CHECK(nlohmann::json::parse(emit_json(r))["suites"][0]["pass"] == false);
}

TEST_CASE("suites that do not apply give exit code 2") {
  const Report r = run(config("hopf{n=2}", {"commuting-pair"}, 5));
  CHECK(suite(r, "commuting-pair").status == SuiteStatus::inapplicable);
  CHECK(r.exit_code == 2);
}

TEST_CASE("JSON uses the documented field names") {
  const Report r = run(config("flat_inversion{n=2}", {"lck-identities"}, 4, 5));
  const auto j = nlohmann::json::parse(emit_json(r));
  const auto& s = j["suites"][0];
  CHECK(s["suite"] == "lck-identities");
  REQUIRE(s["residuals"].contains("J0/nablaJ"));
  for (const char* key : {"max", "mean", "count", "worst_point", "pass", "tolerance"})
    CHECK(s["residuals"]["J0/nablaJ"].contains(key));
  CHECK(s.contains("classification"));
  CHECK(s["residuals"]["J0/nablaJ"]["count"] == 4);
}

TEST_CASE("the worst point reproduces with --at") {
  const Report r = run(config("hopf{n=2}", {"lck-identities"}, 15, 21));
  const ResidualStats& worst = suite(r, "lck-identities").residuals.at("J/RJ");
  SuiteConfig again = config("hopf{n=2}", {"lck-identities"}, 1, 21);
  again.at = worst.worst_point;
  const Report single = run(again);
  const ResidualStats& rep = suite(single, "lck-identities").residuals.at("J/RJ");
  CHECK(rep.count == 1);
  CHECK((rep.worst_point - worst.worst_point).norm() == 0.0);
  CHECK(rep.max > 0.0);
  SuiteConfig outside = again;
  outside.at = Vec::Constant(4, 100.0);
  CHECK_THROWS_AS(run(outside), ParameterError);
}

TEST_CASE("example runs") {
  const Report chain = run(config("flat_inversion{n=2}", {"einstein-chain"}, 50, 7));
  CHECK(chain.pass);
  const Report hopf = run(config("hopf{n=2}", {"classify", "holonomy"}, 20));
  CHECK(info<std::string>(suite(hopf, "classify"), "kind") == "Vaisman");
  CHECK(info<std::string>(suite(hopf, "holonomy"), "span_classification") == "SO(2n-1)");
  CHECK(hopf.pass);
  const Report pair = run(config("calabi{ell=sin,b=pi}", {"commuting-pair"}, 30));
  CHECK(pair.pass);
}

TEST_CASE("text output is a readable summary") {
  const std::string t = emit_text(run(config("flat_inversion{n=2}", {"classify"}, 5)));
  CHECK(t.find("classify") != std::string::npos);
  CHECK(t.find("PASS") != std::string::npos);
}

TEST_CASE("worker count honours the cap") {
  SuiteConfig c;
  CHECK(worker_count(c) == 1);
  c.parallel = true;
  c.max_threads = 2;
  CHECK(worker_count(c) <= 2);
}
