#pragma once

#include "lck/holonomy.hpp"
#include "lck/zoo.hpp"

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <variant>
#include <vector>

namespace lck {

const std::vector<std::string>& known_suites();

struct SuiteConfig {
  std::string manifold = "hopf{n=2}";
  std::vector<std::string> suites;
  int samples = 100;
  std::uint64_t seed = 0;
  Settings settings;
  bool parallel = false;
  unsigned max_threads = 0;  // 0: hardware concurrency, further capped by LCK_THREADS
  std::optional<Vec> at;     // evaluate pointwise suites at this point only
  bool timing = false;       // adds wall time, which breaks byte-identical output
};

// Throws ParameterError on unknown suites, non-positive tolerances or samples.
void validate(const SuiteConfig& c);

struct ResidualStats {
  double max = 0.0;
  double sum = 0.0;
  int count = 0;
  Vec worst_point;
  double tolerance = 0.0;
  Tol tol = Tol::id;
  double mean() const { return count ? sum / count : 0.0; }
  bool pass() const { return max <= tolerance; }
};

using InfoValue = std::variant<bool, double, std::string, std::vector<double>>;

enum class SuiteStatus { pass, fail, inconclusive, inapplicable };
std::string to_string(SuiteStatus s);

struct SuiteResult {
  std::string suite;
  SuiteStatus status = SuiteStatus::pass;
  std::map<std::string, ResidualStats> residuals;
  std::vector<std::pair<std::string, InfoValue>> classification;
  int excluded_samples = 0;  // singular points skipped
  std::vector<std::string> notes;
};

struct Report {
  SuiteConfig config;
  std::string manifold;
  std::string family;
  int n = 0;
  int dim = 0;
  std::map<std::string, std::string> params;
  std::vector<SuiteResult> suites;
  bool pass = true;
  int exit_code = 0;
  double wall_time = 0.0;
};

// Exit codes: 0 all pass, 1 residual failure, 2 configuration error or a suite
// that does not apply to the manifold, 3 inconclusive holonomy.
Report run(const SuiteConfig& config);
Report run(const SuiteConfig& config, const ZooEntry& entry);

std::string emit_json(const Report& r);
std::string emit_text(const Report& r);

unsigned worker_count(const SuiteConfig& c);

}  // namespace lck
