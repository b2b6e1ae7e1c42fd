#include "lck/report.hpp"

#include <json.hpp>

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <sstream>
#include <thread>

namespace lck {

const std::vector<std::string>& known_suites() {
  static const std::vector<std::string> names{"lck-identities", "einstein-chain",   "parallel-field",
                                              "commuting-pair", "hamiltonian-form", "average-metric",
                                              "holonomy",       "classify"};
  return names;
}

void validate(const SuiteConfig& c) {
  for (const std::string& s : c.suites)
    if (std::find(known_suites().begin(), known_suites().end(), s) == known_suites().end())
      throw ParameterError("unknown suite '" + s + "'");
  if (c.samples < 1) throw ParameterError("samples must be >= 1");
  const Settings& s = c.settings;
  if (!(s.fd_step > 0) || !(s.nested_step > 0) || !(s.outer_step > 0)) throw ParameterError("steps must be positive");
  if (!(s.tol_id() > 0) || !(s.tol_chain > 0) || !(s.tol_ode > 0) || !(s.tol_fd > 0))
    throw ParameterError("tolerances must be positive");
  if (s.ode_steps_per_unit < 1) throw ParameterError("ode steps must be positive");
}

std::string to_string(SuiteStatus s) {
  switch (s) {
    case SuiteStatus::pass: return "pass";
    case SuiteStatus::fail: return "fail";
    case SuiteStatus::inconclusive: return "inconclusive";
    case SuiteStatus::inapplicable: return "inapplicable";
  }
  return "fail";
}

unsigned worker_count(const SuiteConfig& c) {
  if (!c.parallel) return 1;
  unsigned n = std::max(1u, std::thread::hardware_concurrency());
  if (c.max_threads > 0) n = std::min(n, c.max_threads);
  if (const char* env = std::getenv("LCK_THREADS")) {
    const long cap = std::strtol(env, nullptr, 10);
    if (cap > 0) n = std::min(n, static_cast<unsigned>(cap));
  }
  return n;
}

namespace {

// Runs f(i) for i in [0, count); results land in caller-owned slots, so the
// reduction order never depends on scheduling.
template <class F>
void for_each_index(int count, unsigned workers, F f) {
  if (workers <= 1 || count <= 1) {
    for (int i = 0; i < count; ++i) f(i);
    return;
  }
  std::atomic<int> next{0};
  std::vector<std::thread> pool;
  for (unsigned w = 0; w < std::min<unsigned>(workers, static_cast<unsigned>(count)); ++w)
    pool.emplace_back([&] {
      for (int i = next++; i < count; i = next++) f(i);
    });
  for (auto& t : pool) t.join();
}

struct SampleOutcome {
  std::vector<Check> checks;
  bool singular = false;
  std::string error;
};

class SuiteRunner {
 public:
  SuiteRunner(const SuiteConfig& c, const ZooEntry& e, std::vector<Vec> points, std::vector<std::uint64_t> seeds)
      : c_(c), e_(e), points_(std::move(points)), seeds_(std::move(seeds)) {}

  SuiteResult run(const std::string& suite, int suite_index) const {
    SuiteResult r;
    r.suite = suite;
    try {
      if (suite == "lck-identities") identities(r, suite_index);
      else if (suite == "einstein-chain") einstein(r, suite_index);
      else if (suite == "parallel-field") parallel(r, suite_index);
      else if (suite == "commuting-pair") commuting(r, suite_index);
      else if (suite == "hamiltonian-form") hamiltonian(r, suite_index);
      else if (suite == "average-metric") average(r, suite_index);
      else if (suite == "holonomy") holonomy(r);
      else if (suite == "classify") classify(r);
    } catch (const Error& ex) {
      r.status = SuiteStatus::fail;
      r.notes.push_back(ex.what());
    }
    if (r.status == SuiteStatus::pass)
      for (const auto& [name, st] : r.residuals)
        if (!st.pass()) r.status = SuiteStatus::fail;
    return r;
  }

 private:
  using PointFn = std::function<std::vector<Check>(int, const Vec&, std::mt19937_64&)>;

  void sampled(SuiteResult& r, int suite_index, const PointFn& fn) const {
    const int count = static_cast<int>(points_.size());
    std::vector<SampleOutcome> out(static_cast<std::size_t>(count));
    for_each_index(count, worker_count(c_), [&](int i) {
      std::mt19937_64 rng(seeds_[static_cast<std::size_t>(i)] + 0x9E3779B97F4A7C15ull * (suite_index + 1));
      SampleOutcome& o = out[static_cast<std::size_t>(i)];
      try {
        o.checks = fn(i, points_[static_cast<std::size_t>(i)], rng);
      } catch (const SingularPointError&) {
        o.singular = true;
      } catch (const Error& ex) {
        o.error = ex.what();
      }
    });
    for (int i = 0; i < count; ++i) {
      const SampleOutcome& o = out[static_cast<std::size_t>(i)];
      if (o.singular) {
        ++r.excluded_samples;
        continue;
      }
      if (!o.error.empty()) {
        r.status = SuiteStatus::fail;
        if (r.notes.size() < 5) r.notes.push_back("sample " + std::to_string(i) + ": " + o.error);
        continue;
      }
      for (const Check& ch : o.checks) add(r, ch, points_[static_cast<std::size_t>(i)]);
    }
  }

  void add(SuiteResult& r, const Check& ch, const Vec& at) const {
    ResidualStats& st = r.residuals[ch.name];
    st.tol = ch.tol;
    st.tolerance = tolerance(c_.settings, ch.tol);
    const double v = std::isfinite(ch.value) ? ch.value : 1e300;
    if (st.count == 0 || v > st.max) {
      st.max = v;
      st.worst_point = at;
    }
    st.sum += v;
    ++st.count;
  }

  void global(SuiteResult& r, const std::vector<Check>& checks) const {
    for (const Check& ch : checks) add(r, ch, Vec());
  }

  static void inapplicable(SuiteResult& r, const std::string& why) {
    r.status = SuiteStatus::inapplicable;
    r.notes.push_back(why);
  }

  void identities(SuiteResult& r, int idx) const {
    const Settings& s = c_.settings;
    sampled(r, idx, [&](int, const Vec& p, std::mt19937_64& rng) {
      std::vector<Check> out;
      std::normal_distribution<double> nd;
      auto rnd = [&](int m) {
        Vec v(m);
        for (int i = 0; i < m; ++i) v[i] = nd(rng);
        return v;
      };
      for (const HermitianStructure& H : e_.structures) {
        const std::string L = H.label + "/";
        const int m = H.chart.dim;
        out.push_back({L + "J_squared", almost_complex_defect(H, p), Tol::id});
        out.push_back({L + "compatibility", compatibility_defect(H, p), Tol::id});
        out.push_back({L + "nijenhuis", nijenhuis_residual(H, p, s), Tol::id});
        if (H.n < 2) continue;
        out.push_back({L + "nablaJ", nabla_j_residual(H, p, rnd(m), s), Tol::id});
        out.push_back({L + "dOmega", d_omega_residual(H, p, s), Tol::id});
        out.push_back({L + "deltaOmega", delta_omega_residual(H, p, s), Tol::id});
        const auto [rj, rjc] = curvature_j_residuals(H, p, rnd(m), rnd(m), s);
        out.push_back({L + "RJ", rj, Tol::id});
        out.push_back({L + "RJcontr", rjc, Tol::id});
        const Mat G = metric(H.chart, p);
        const Vec th = lee_theta(H, p, s);
        const Mat dth = exterior_derivative(H.chart, lee_field(H, s), p, s, 2).as_matrix();
        out.push_back({L + "dtheta", normalized(norm_form2(G, dth), th.dot(G.ldlt().solve(th))), Tol::id});
      }
      if (e_.point_checks) {
        std::vector<Check> extra = e_.point_checks(p, rng, s);
        for (Check& ch : extra) ch.name = "entry/" + ch.name;
        out.insert(out.end(), extra.begin(), extra.end());
      }
      return out;
    });
    if (e_.global_checks) {
      std::vector<Check> g = e_.global_checks(s);
      for (Check& ch : g) ch.name = "entry/" + ch.name;
      global(r, g);
    }
  }

  void einstein(SuiteResult& r, int idx) const {
    if (!e_.einstein_lambda) return inapplicable(r, "manifold has no Einstein constant");
    if (e_.structures.empty() || e_.structures[0].n < 2) return inapplicable(r, "needs complex dimension >= 2");
    const double lambda = *e_.einstein_lambda;
    sampled(r, idx, [&](int, const Vec& p, std::mt19937_64&) {
      std::vector<Check> out;
      for (const auto& [k, v] : einstein_chain_residuals(e_.structures[0], p, lambda, c_.settings))
        out.push_back({k, v, Tol::chain});
      // J-invariance of S holds once the metric is Einstein, not in general
      out.push_back({"S_commutes_J", s_commutator_residual(e_.structures[0], p, c_.settings), Tol::chain});
      return out;
    });
    r.classification.push_back({"lambda", lambda});
  }

  void parallel(SuiteResult& r, int idx) const {
    if (!e_.parallel_field) return inapplicable(r, "manifold has no declared parallel field");
    const int count = static_cast<int>(points_.size());
    std::vector<double> as(static_cast<std::size_t>(count), NAN), bs(static_cast<std::size_t>(count), NAN);
    sampled(r, idx, [&](int i, const Vec& p, std::mt19937_64&) {
      const ParallelFieldResult res = parallel_field_residuals(e_.structures[0], p, e_.parallel_field, c_.settings);
      as[static_cast<std::size_t>(i)] = res.a;
      bs[static_cast<std::size_t>(i)] = res.b;
      std::vector<Check> out;
      for (const auto& [k, v] : res.residuals) out.push_back({k, v, Tol::id});
      return out;
    });
    double amin = 1e300, amax = -1e300, bmin = 1e300, bmax = -1e300;
    for (int i = 0; i < count; ++i) {
      if (std::isnan(as[static_cast<std::size_t>(i)])) continue;
      amin = std::min(amin, as[static_cast<std::size_t>(i)]);
      amax = std::max(amax, as[static_cast<std::size_t>(i)]);
      bmin = std::min(bmin, bs[static_cast<std::size_t>(i)]);
      bmax = std::max(bmax, bs[static_cast<std::size_t>(i)]);
    }
    if (amax >= amin) {
      global(r, {{"a_constancy", amax - amin, Tol::id}});
      r.classification.push_back({"a_range", std::vector<double>{amin, amax}});
      r.classification.push_back({"b_range", std::vector<double>{bmin, bmax}});
    }
  }

  const CalabiParts* calabi(SuiteResult& r) const {
    if (!e_.calabi) {
      inapplicable(r, "suite needs the Calabi construction");
      return nullptr;
    }
    return &*e_.calabi;
  }

  void commuting(SuiteResult& r, int idx) const {
    const CalabiParts* cp = calabi(r);
    if (!cp) return;
    sampled(r, idx, [&](int, const Vec& p, std::mt19937_64&) {
      std::vector<Check> out;
      for (const auto& [k, v] : commuting_pair_residuals(cp->g_plus, cp->kaehler_plus, cp->pair_J, p, c_.settings))
        out.push_back({k, v, Tol::id});
      return out;
    });
  }

  void hamiltonian(SuiteResult& r, int idx) const {
    const CalabiParts* cp = calabi(r);
    if (!cp) return;
    const LinePotential pot(cp->pair_J, cp->g_plus.domain.center(), c_.settings);
    const ScalarField Phi = [pot](const Vec& q) { return pot(q); };
    sampled(r, idx, [&](int, const Vec& p, std::mt19937_64& rng) {
      std::normal_distribution<double> nd;
      Vec X(p.size());
      for (int i = 0; i < X.size(); ++i) X[i] = nd(rng);
      std::vector<Check> out;
      const ResidualMap m = hamiltonian_form_residuals(cp->g_plus, cp->kaehler_plus, cp->pair_J, Phi, p, X, c_.settings);
      out.push_back({"tilom", m.at("tilom"), Tol::chain});
      out.push_back({"trace_sigma", m.at("trace_sigma"), Tol::id});
      out.push_back({"potential_path_independence", pot.path_independence_defect(p), Tol::ode});
      return out;
    });
  }

  void average(SuiteResult& r, int idx) const {
    const CalabiParts* cp = calabi(r);
    if (!cp) return;
    const int count = static_cast<int>(points_.size());
    std::vector<double> fs(static_cast<std::size_t>(count), NAN);
    sampled(r, idx, [&](int i, const Vec& p, std::mt19937_64&) {
      std::vector<Check> out;
      for (const auto& [k, v] : average_metric_residuals(cp->average, cp->dPhi, p, c_.settings)) {
        if (k == "f_value") fs[static_cast<std::size_t>(i)] = v;
        else out.push_back({k, v, Tol::id});
      }
      return out;
    });
    std::vector<double> seen;
    for (double f : fs)
      if (!std::isnan(f)) seen.push_back(f);
    if (!seen.empty())
      r.classification.push_back(
          {"f_range", std::vector<double>{*std::min_element(seen.begin(), seen.end()), *std::max_element(seen.begin(), seen.end())}});
  }

  void holonomy(SuiteResult& r) const {
    if (!e_.holonomy) return inapplicable(r, "manifold has no holonomy target");
    const HolonomyTarget& h = *e_.holonomy;
    const Settings& s = c_.settings;
    const int n = e_.n;
    const Vec base = h.chart.domain.center();
    std::vector<Mat> cands;
    for (const EndoFn& J : h.j_candidates) cands.push_back(J(base));
    std::mt19937_64 rng(c_.seed ^ 0x5DEECE66Dull);
    const int probes = std::max(3 * n * (2 * n - 1), 6);
    HolonomyEstimate span = curvature_span(h.chart, base, random_probes(h.chart, probes, rng, s), s);
    HolonomyEstimate loops = loop_holonomy_auto(h.chart, base, 3, rng, s);
    const HolonomyClass cs = classify_holonomy(span, n, cands);
    const HolonomyClass cl = classify_holonomy(loops, n, cands);
    auto describe = [&](const std::string& tag, const HolonomyEstimate& est) {
      r.classification.push_back({tag + "_classification", to_string(est.classification)});
      r.classification.push_back({tag + "_dim", static_cast<double>(est.algebra_dim)});
      r.classification.push_back({tag + "_rank_gap", est.rank_gap});
      r.classification.push_back({tag + "_fixed_dim", static_cast<double>(est.fixed_dim)});
      r.classification.push_back({tag + "_commutes_with_J", est.commutes_with_candidate});
      r.classification.push_back({tag + "_singular_values", est.singular_values});
      global(r, {{tag + "_skew_defect", est.skew_defect, Tol::id}});
    };
    r.classification.push_back({"group", std::string("restricted holonomy")});
    r.classification.push_back({"expected", h.expected});
    describe("span", span);
    describe("loops", loops);
    r.classification.push_back({"agree", cs == cl});
    if (cs == HolonomyClass::inconclusive || cl == HolonomyClass::inconclusive) {
      r.status = SuiteStatus::inconclusive;
      r.notes.push_back("rank gap below the confidence threshold");
      return;
    }
    bool ok = cs == cl && to_string(cs) == h.expected && span.algebra_dim == loops.algebra_dim;
    if (h.expected_dim >= 0) ok = ok && span.algebra_dim == h.expected_dim;
    if (h.max_dim >= 0) ok = ok && span.algebra_dim <= h.max_dim;
    if (h.fixed_field) {
      const Mat G = metric(h.chart, base);
      double worst = 0;
      for (const HolonomyEstimate* est : {&span, &loops}) {
        if (est->fixed_dim < 1) {
          worst = 1.0;
          continue;
        }
        const Vec u = h.fixed_field(base);
        const double cosang = std::abs(u.dot(G * est->fixed_vector)) / (norm_vector(G, u) * norm_vector(G, est->fixed_vector));
        worst = std::max(worst, 1.0 - cosang);
      }
      global(r, {{"fixed_vector_alignment", worst, Tol::id}});
    }
    if (!ok) {
      r.status = SuiteStatus::fail;
      r.notes.push_back("holonomy label or dimension differs from the expected " + h.expected);
    }
  }

  void classify(SuiteResult& r) const {
    if (e_.structures.empty() || e_.structures[0].n < 2) return inapplicable(r, "needs complex dimension >= 2");
    std::vector<Vec> pts(points_.begin(), points_.begin() + std::min<std::size_t>(points_.size(), 20));
    const StructureClass k = classify_structure(e_.structures[0], pts, e_.loops, c_.settings);
    r.classification.push_back({"kind", to_string(k.kind)});
    r.classification.push_back({"expected", to_string(e_.expected_kind)});
    for (const auto& [name, v] : k.evidence) r.classification.push_back({"evidence_" + name, v});
    for (const auto& [label, v] : k.periods) r.classification.push_back({"period_" + label, v});
    if (k.kind != e_.expected_kind) {
      r.status = SuiteStatus::fail;
      r.notes.push_back("classified as " + to_string(k.kind));
    }
  }

  const SuiteConfig& c_;
  const ZooEntry& e_;
  std::vector<Vec> points_;
  std::vector<std::uint64_t> seeds_;
};

}  // namespace

Report run(const SuiteConfig& config) {
  validate(config);
  return run(config, resolve_selector(config.manifold));
}

Report run(const SuiteConfig& config, const ZooEntry& entry) {
  validate(config);
  const auto t0 = std::chrono::steady_clock::now();
  Report rep;
  rep.config = config;
  rep.manifold = entry.name;
  rep.family = entry.family;
  rep.n = entry.n;
  rep.dim = entry.charts.empty() ? 0 : entry.charts[0].dim;
  rep.params = entry.params;

  std::mt19937_64 master(config.seed);
  std::vector<Vec> points;
  std::vector<std::uint64_t> seeds;
  if (config.at) {
    if (config.at->size() != rep.dim) throw ParameterError("--at point has the wrong dimension");
    if (!entry.charts[0].domain.contains(*config.at, config.settings.margin()))
      throw ParameterError("--at point lies outside the safe domain");
    points.push_back(*config.at);
    seeds.push_back(master());
  } else if (!config.suites.empty()) {
    for (int i = 0; i < config.samples; ++i) {
      points.push_back(entry.charts[0].domain.sample(master, config.settings.margin()));
      seeds.push_back(master());
    }
  }
  SuiteRunner runner(config, entry, points, seeds);
  for (std::size_t i = 0; i < config.suites.size(); ++i)
    rep.suites.push_back(runner.run(config.suites[i], static_cast<int>(i)));

  bool fail = false, inconclusive = false, inapplicable = false;
  for (const SuiteResult& s : rep.suites) {
    fail |= s.status == SuiteStatus::fail;
    inconclusive |= s.status == SuiteStatus::inconclusive;
    inapplicable |= s.status == SuiteStatus::inapplicable;
  }
  rep.pass = !(fail || inconclusive || inapplicable);
  rep.exit_code = inapplicable ? 2 : fail ? 1 : inconclusive ? 3 : 0;
  rep.wall_time = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return rep;
}

namespace {

using json = nlohmann::ordered_json;

json vec_json(const Vec& v) {
  json a = json::array();
  for (int i = 0; i < v.size(); ++i) a.push_back(v[i]);
  return a;
}

json info_json(const InfoValue& v) {
  return std::visit([](const auto& x) -> json { return json(x); }, v);
}

}  // namespace

std::string emit_json(const Report& r) {
  json j;
  j["schema_version"] = 1;
  const Settings& s = r.config.settings;
  json cfg;
  cfg["manifold"] = r.config.manifold;
  cfg["suites"] = r.config.suites;
  cfg["samples"] = r.config.samples;
  cfg["seed"] = r.config.seed;
  cfg["mode"] = s.mode == DiffMode::fd ? "fd" : "analytic";
  cfg["fd_step"] = s.fd_step;
  cfg["nested_step"] = s.nested_step;
  cfg["outer_step"] = s.outer_step;
  cfg["ode_steps_per_unit"] = s.ode_steps_per_unit;
  cfg["tol_id"] = s.tol_id();
  cfg["tol_fd"] = s.tol_fd;
  cfg["tol_chain"] = s.tol_chain;
  cfg["tol_ode"] = s.tol_ode;
  if (r.config.at) cfg["at"] = vec_json(*r.config.at);
  j["config"] = cfg;
  json man;
  man["name"] = r.manifold;
  man["family"] = r.family;
  man["n"] = r.n;
  man["dim"] = r.dim;
  man["params"] = json(r.params);
  j["manifold"] = man;
  json suites = json::array();
  for (const SuiteResult& sr : r.suites) {
    json sj;
    sj["suite"] = sr.suite;
    sj["status"] = to_string(sr.status);
    sj["pass"] = sr.status == SuiteStatus::pass;
    json res = json::object();
    for (const auto& [name, st] : sr.residuals) {
      json e;
      e["max"] = st.max;
      e["mean"] = st.mean();
      e["count"] = st.count;
      e["tolerance"] = st.tolerance;
      e["tolerance_kind"] = to_string(st.tol);
      e["pass"] = st.pass();
      e["worst_point"] = vec_json(st.worst_point);
      res[name] = e;
    }
    sj["residuals"] = res;
    sj["excluded_samples"] = sr.excluded_samples;
    json cl = json::object();
    for (const auto& [k, v] : sr.classification) cl[k] = info_json(v);
    sj["classification"] = cl;
    sj["notes"] = sr.notes;
    suites.push_back(sj);
  }
  j["suites"] = suites;
  j["pass"] = r.pass;
  j["exit_code"] = r.exit_code;
  if (r.config.timing) j["wall_time_s"] = r.wall_time;
  return j.dump(2) + "\n";
}

std::string emit_text(const Report& r) {
  std::ostringstream o;
  o.precision(3);
  o << "manifold " << r.manifold << "  (n=" << r.n << ", dim=" << r.dim << ")\n";
  o << "samples " << r.config.samples << "  seed " << r.config.seed << "  mode "
    << (r.config.settings.mode == DiffMode::fd ? "fd" : "analytic") << "\n";
  for (const SuiteResult& sr : r.suites) {
    o << "\n[" << to_string(sr.status) << "] " << sr.suite;
    if (sr.excluded_samples) o << "  (" << sr.excluded_samples << " singular samples skipped)";
    o << "\n";
    for (const auto& [name, st] : sr.residuals)
      o << "  " << (st.pass() ? "ok  " : "FAIL") << "  " << name << "  max " << std::scientific << st.max << "  mean "
        << st.mean() << "  tol " << st.tolerance << std::defaultfloat << "\n";
    for (const auto& [k, v] : sr.classification) {
      o << "  " << k << ": ";
      std::visit(
          [&](const auto& x) {
            using X = std::decay_t<decltype(x)>;
            if constexpr (std::is_same_v<X, std::vector<double>>) {
              o << "[";
              for (std::size_t i = 0; i < x.size(); ++i) o << (i ? ", " : "") << x[i];
              o << "]";
            } else if constexpr (std::is_same_v<X, bool>) {
              o << (x ? "yes" : "no");
            } else {
              o << x;
            }
          },
          v);
      o << "\n";
    }
    for (const std::string& note : sr.notes) o << "  note: " << note << "\n";
  }
  o << "\n" << (r.pass ? "PASS" : "FAIL") << "  exit code " << r.exit_code;
  if (r.config.timing) o << "  wall " << r.wall_time << " s";
  o << "\n";
  return o.str();
}

}  // namespace lck
