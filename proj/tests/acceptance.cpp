// Acceptance run: one PASS/FAIL line per criterion, exit status 1 if any fails.
#include "lck/report.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <sstream>

using namespace lck;

namespace {

struct Outcome {
  bool ok = true;
  std::ostringstream detail;
  void require(bool cond, const std::string& what) {
    if (!cond) {
      ok = false;
      detail << " [" << what << "]";
    }
  }
};

SuiteConfig config(const std::string& manifold, std::vector<std::string> suites, int samples, std::uint64_t seed) {
  SuiteConfig c;
  c.manifold = manifold;
  c.suites = std::move(suites);
  c.samples = samples;
  c.seed = seed;
  return c;
}

const SuiteResult* find_suite(const Report& r, const std::string& name) {
  for (const SuiteResult& s : r.suites)
    if (s.suite == name) return &s;
  return nullptr;
}

bool ends_with(const std::string& s, const std::string& tail) {
  return s.size() >= tail.size() && s.compare(s.size() - tail.size(), tail.size(), tail) == 0;
}

// Largest max over residuals whose name ends with `tail`; -1 when none exist.
double worst(const SuiteResult& s, const std::string& tail, int* min_count = nullptr) {
  double w = -1;
  int cnt = 1 << 30;
  for (const auto& [name, st] : s.residuals)
    if (ends_with(name, tail)) {
      w = std::max(w, st.max);
      cnt = std::min(cnt, st.count);
    }
  if (min_count) *min_count = w < 0 ? 0 : cnt;
  return w;
}

const InfoValue* info(const SuiteResult& s, const std::string& key) {
  for (const auto& [k, v] : s.classification)
    if (k == key) return &v;
  return nullptr;
}

template <class T>
T info_as(const SuiteResult& s, const std::string& key, T fallback) {
  const InfoValue* v = info(s, key);
  if (!v || !std::holds_alternative<T>(*v)) return fallback;
  return std::get<T>(*v);
}

// Requires residual `tail` of suite to exist and stay below `bound`.
void bound(Outcome& o, const SuiteResult* s, const std::string& label, const std::string& tail, double limit,
           int min_samples = 1) {
  if (!s) {
    o.require(false, label + ": suite missing");
    return;
  }
  int count = 0;
  const double w = worst(*s, tail, &count);
  std::ostringstream m;
  m << label << " " << tail << "=" << w;
  o.require(w >= 0 && w < limit && count >= min_samples, m.str());
}

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2e", v);
  return buf;
}

Outcome criterion1() {
  Outcome o;
  const auto t0 = std::chrono::steady_clock::now();
  double overall = 0;
  for (const char* m : {"hopf{n=2}", "hopf{n=3}", "flat_inversion{n=2}", "flat_inversion{n=3}", "warped{c=sin}",
                        "calabi{ell=sin,b=pi}"}) {
    const Report r = run(config(m, {"lck-identities"}, 100, 1));
    const SuiteResult* s = find_suite(r, "lck-identities");
    for (const char* key : {"/nablaJ", "/dOmega", "/deltaOmega", "/RJ", "/RJcontr"}) {
      bound(o, s, m, key, 1e-4, 100);
      if (s) overall = std::max(overall, worst(*s, key));
    }
  }
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  o.require(secs < 60.0, "runtime " + fmt(secs) + " s");
  o.detail << " worst " << fmt(overall) << ", " << fmt(secs) << " s";
  return o;
}

Outcome criterion2() {
  Outcome o;
  for (const char* m : {"flat_inversion{n=2}", "flat_inversion{n=3}"}) {
    const Report r = run(config(m, {"lck-identities"}, 100, 2));
    const SuiteResult* s = find_suite(r, "lck-identities");
    bound(o, s, m, "entry/riemann_norm", 1e-4, 100);
    bound(o, s, m, "entry/theta_is_minus_2dlnr", 1e-5, 100);
    bound(o, s, m, "entry/codiff_theta", 1e-4, 100);
    if (s) o.detail << " " << m << " riemann " << fmt(worst(*s, "entry/riemann_norm"));
  }
  return o;
}

Outcome criterion3() {
  Outcome o;
  const Report r = run(config("flat_inversion{n=2}", {"einstein-chain"}, 50, 3));
  const SuiteResult* s = find_suite(r, "einstein-chain");
  o.require(s && s->status == SuiteStatus::pass, "suite status");
  if (s) {
    o.require(s->residuals.size() >= 11, "only " + std::to_string(s->residuals.size()) + " residuals");
    double w = 0;
    for (const auto& [name, st] : s->residuals) {
      o.require(st.max < 1e-3 && st.count >= 50, name + "=" + fmt(st.max));
      w = std::max(w, st.max);
    }
    o.detail << " " << s->residuals.size() << " residuals, worst " << fmt(w);
  }
  return o;
}

Outcome criterion4() {
  Outcome o;
  for (const char* m : {"hopf{n=2}", "hopf{n=3}"}) {
    const Report r = run(config(m, {"lck-identities", "parallel-field"}, 100, 4));
    const SuiteResult* s = find_suite(r, "lck-identities");
    bound(o, s, m, "entry/nabla_theta", 1e-5, 100);
    bound(o, s, m, "entry/theta_unit", 1e-5, 100);
    bound(o, s, m, "entry/rs", 1e-4, 100);
    const SuiteResult* pf = find_suite(r, "parallel-field");
    o.require(pf && pf->status == SuiteStatus::pass, std::string(m) + " parallel-field");
    bound(o, pf, m, "a_constancy", 1e-5);
    if (s) o.detail << " " << m << " nabla_theta " << fmt(worst(*s, "entry/nabla_theta"));
  }
  return o;
}

Outcome criterion5() {
  Outcome o;
  const Report r = run(config("calabi{ell=sin,b=pi}", {"lck-identities"}, 100, 5));
  const SuiteResult* s = find_suite(r, "lck-identities");
  for (const char* row : {"table_xi_dr", "table_xi_xi", "table_dr_flat", "table_lift_xi", "table_lift_lift"})
    bound(o, s, "calabi", std::string("entry/") + row, 1e-4, 100);
  bound(o, s, "calabi", "entry/dOmega_plus", 1e-4, 100);
  bound(o, s, "calabi", "entry/dOmega_minus", 1e-4, 100);
  bound(o, s, "calabi", "entry/theta_eps_plus", 1e-5, 100);
  bound(o, s, "calabi", "entry/theta_eps_minus", 1e-5, 100);
  bound(o, s, "calabi", "entry/nijenhuis_plus", 1e-4, 100);
  bound(o, s, "calabi", "entry/nijenhuis_minus", 1e-4, 100);
  if (s) o.detail << " tables " << fmt(worst(*s, "entry/table_xi_dr")) << ".." << fmt(worst(*s, "entry/table_lift_lift"));
  return o;
}

Outcome criterion6() {
  Outcome o;
  const Report r = run(config("calabi{ell=sin,b=pi}", {"commuting-pair"}, 100, 6));
  const SuiteResult* s = find_suite(r, "commuting-pair");
  bound(o, s, "pair", "commutator", 1e-4, 90);
  bound(o, s, "pair", "trace", 1e-4, 90);
  bound(o, s, "pair", "Itheta_Jtheta", 1e-5, 90);
  bound(o, s, "pair", "J_formula", 1e-3, 90);
  bound(o, s, "pair", "et", 1e-3, 90);
  bound(o, s, "pair", "nablath", 1e-3, 90);
  if (s) o.detail << " excluded " << s->excluded_samples << ", nablath " << fmt(worst(*s, "nablath"));
  return o;
}

Outcome criterion7() {
  Outcome o;
  const Report r = run(config("calabi{ell=sin,b=pi}", {"hamiltonian-form", "average-metric"}, 100, 7));
  const SuiteResult* h = find_suite(r, "hamiltonian-form");
  bound(o, h, "hamiltonian", "tilom", 1e-3, 100);
  const SuiteResult* a = find_suite(r, "average-metric");
  for (const char* key : {"der0theta", "der0Jxi", "der0xi", "derIxi", "derzeta"}) bound(o, a, "average", key, 1e-3, 90);
  bound(o, a, "average", "killing", 1e-4, 90);
  if (h && a) o.detail << " tilom " << fmt(worst(*h, "tilom")) << ", killing " << fmt(worst(*a, "killing"));
  return o;
}

Outcome criterion8() {
  Outcome o;
  struct Case {
    const char* manifold;
    std::function<void(Outcome&, const SuiteResult&)> extra;
  };
  auto dim = [](const SuiteResult& s, const std::string& tag) { return info_as<double>(s, tag + "_dim", -1); };
  const std::vector<Case> cases{
      {"hopf{n=2}",
       [&](Outcome& o, const SuiteResult& s) {
         for (const char* t : {"span", "loops"}) {
           o.require(dim(s, t) == 3, std::string("hopf ") + t + " dim");
           o.require(info_as<std::string>(s, std::string(t) + "_classification", "") == "SO(2n-1)", "hopf label");
         }
         bound(o, &s, "hopf", "fixed_vector_alignment", 1e-4);
       }},
      {"calabi{ell=sin,b=pi}",
       [&](Outcome& o, const SuiteResult& s) {
         for (const char* t : {"span", "loops"}) {
           o.require(dim(s, t) >= 1 && dim(s, t) <= 4, std::string("calabi ") + t + " dim");
           o.require(info_as<std::string>(s, std::string(t) + "_classification", "") == "U(n)", "calabi label");
           o.require(info_as<bool>(s, std::string(t) + "_commutes_with_J", false), "calabi J+ commutation");
         }
       }},
      {"euclidean{n=2}",
       [&](Outcome& o, const SuiteResult& s) {
         o.require(dim(s, "span") == 0 && dim(s, "loops") == 0, "euclidean dim");
       }},
      {"warped{c=sin}",
       [&](Outcome& o, const SuiteResult& s) {
         for (const char* t : {"span", "loops"})
           o.require(info_as<std::string>(s, std::string(t) + "_classification", "") == "SO(2n-1)", "warped label");
         bound(o, &s, "warped", "fixed_vector_alignment", 1e-4);
       }},
  };
  for (const Case& c : cases) {
    const Report r = run(config(c.manifold, {"holonomy"}, 1, 8));
    const SuiteResult* s = find_suite(r, "holonomy");
    if (!s) {
      o.require(false, std::string(c.manifold) + " missing");
      continue;
    }
    o.require(s->status == SuiteStatus::pass, std::string(c.manifold) + " status " + to_string(s->status));
    o.require(info_as<bool>(*s, "agree", false), std::string(c.manifold) + " span/loop disagreement");
    const double gap = std::min(info_as<double>(*s, "span_rank_gap", 0), info_as<double>(*s, "loops_rank_gap", 0));
    o.require(gap >= 10, std::string(c.manifold) + " rank gap " + fmt(gap));
    c.extra(o, *s);
    o.detail << " " << c.manifold << ":" << info_as<std::string>(*s, "span_classification", "?") << "/"
             << dim(*s, "span") << " gap " << fmt(gap) << ";";
  }
  return o;
}

Outcome criterion9() {
  Outcome o;
  const double circumference = 5.0;
  const Report h = run(config("hopf{n=2,circumference=5}", {"classify"}, 20, 9));
  const SuiteResult* hs = find_suite(h, "classify");
  o.require(hs && info_as<std::string>(*hs, "kind", "") == "Vaisman", "hopf kind");
  const double period = hs ? info_as<double>(*hs, "period_circle", 0) : 0;
  o.require(std::abs(period - circumference) < 1e-4, "hopf period " + fmt(period));
  for (const char* m : {"calabi{ell=sin,b=pi}", "flat_inversion{n=2}", "flat_inversion{n=3}"}) {
    const Report r = run(config(m, {"classify"}, 20, 9));
    const SuiteResult* s = find_suite(r, "classify");
    o.require(s && info_as<std::string>(*s, "kind", "") == "gcK", std::string(m) + " kind");
    int periods = 0;
    if (s)
      for (const auto& [k, v] : s->classification)
        if (k.rfind("period_", 0) == 0) {
          ++periods;
          const double p = std::get<double>(v);
          o.require(std::abs(p) < 1e-5, std::string(m) + " " + k + "=" + fmt(p));
        }
    o.require(periods > 0, std::string(m) + " has no loops");
  }
  o.detail << " hopf period " << period;
  return o;
}

Outcome criterion10() {
  Outcome o;
  const Settings s;
  // ODE: orthogonality defect of transport around a coordinate square at N and 2N
  // steps per unit; N is chosen above the per-segment step floor
  double ode_ratio = 1e300;
  for (const char* m : {"calabi{ell=sin,b=pi}", "flat_inversion{n=2}"}) {
    const ZooEntry e = resolve_selector(m);
    const Chart& C = e.holonomy->chart;
    const Vec c0 = C.domain.center();
    const Mat G = metric(C, c0);
    const Mat E = orthonormal_frame(G);
    auto defect = [&](int spu) {
      Vec a = c0, b = c0, d = c0;
      const Eigen::Index last = c0.size() - 1;
      a[0] += 0.3;
      b[0] += 0.3;
      b[last] += 0.3;
      d[last] += 0.3;
      return orthogonality_defect(G, E, parallel_transport(C, polygon_loop({c0, a, b, d, c0}, spu), E, s));
    };
    const double ratio = defect(80) / defect(160);
    ode_ratio = std::min(ode_ratio, ratio);
    o.require(ratio >= 4.0, std::string(m) + " ode ratio " + fmt(ratio));
  }

  // fd: Christoffel error against analytic mode when the step halves
  Settings an;
  an.mode = DiffMode::analytic;
  double worst_ratio = 1e300;
  for (const char* m : {"hopf{n=2}", "calabi{ell=sin,b=pi}", "flat_inversion{n=2}", "warped{c=sin}"}) {
    const ZooEntry e = resolve_selector(m);
    const Vec p = e.charts[0].domain.center();
    const auto exact = christoffel_symbols(e.charts[0], p, an);
    auto err = [&](double h) {
      Settings fd;
      fd.fd_step = h;
      const auto approx = christoffel_symbols(e.charts[0], p, fd);
      double w = 0;
      for (std::size_t k = 0; k < exact.size(); ++k) w = std::max(w, (approx[k] - exact[k]).cwiseAbs().maxCoeff());
      return w;
    };
    const double ratio = err(1e-3) / err(5e-4);
    worst_ratio = std::min(worst_ratio, ratio);
    o.require(ratio >= 3.0, std::string(m) + " fd ratio " + fmt(ratio));
    o.require(err(s.fd_step) < s.tol_fd, std::string(m) + " default-step error " + fmt(err(s.fd_step)));
  }
  o.detail << " ode ratio >= " << fmt(ode_ratio) << ", fd ratio >= " << fmt(worst_ratio);
  return o;
}

}  // namespace

int main() {
  const std::vector<std::pair<const char*, std::function<Outcome()>>> criteria{
      {"lcK identity suite on six manifolds", criterion1},
      {"flatness and Lee form of the inverted flat metric", criterion2},
      {"Einstein chain at lambda = 0", criterion3},
      {"Vaisman witness on Hopf manifolds", criterion4},
      {"Calabi ansatz tables and conformal structures", criterion5},
      {"commuting pair conclusions on Calabi", criterion6},
      {"Hamiltonian 2-form and averaged-metric equations", criterion7},
      {"holonomy trichotomy", criterion8},
      {"period discrimination", criterion9},
      {"convergence witnesses", criterion10},
  };
  int failures = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    Outcome o;
    try {
      o = criteria[i].second();
    } catch (const std::exception& ex) {
      o.ok = false;
      o.detail << " exception: " << ex.what();
    }
    if (!o.ok) ++failures;
    std::printf("criterion %2zu: %s  %s:%s\n", i + 1, o.ok ? "PASS" : "FAIL", criteria[i].first, o.detail.str().c_str());
    std::fflush(stdout);
  }
  std::printf("%d of %zu criteria failed\n", failures, criteria.size());
  return failures == 0 ? 0 : 1;
}
