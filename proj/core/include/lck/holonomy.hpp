#pragma once

#include "lck/hermitian.hpp"

#include <random>
#include <string>
#include <vector>

namespace lck {

enum class HolonomyClass { so_2n, so_2n_minus_1, u_n, reducible_other, inconclusive };
// Labels use the abstract names: "SO(2n)", "SO(2n-1)", "U(n)", "reducible/other", "inconclusive".
std::string to_string(HolonomyClass c);

struct HolonomyEstimate {
  Vec base;
  Mat frame;                    // orthonormal frame at base (columns, coordinates)
  int algebra_dim = 0;
  std::vector<Mat> generators;  // orthonormal basis of the algebra, skew in the frame
  std::vector<double> singular_values;  // of the final closure pass
  double rank_gap = 0.0;
  double skew_defect = 0.0;     // worst |A + A^T| / |A| over raw generators
  int raw_count = 0;
  HolonomyClass classification = HolonomyClass::inconclusive;
  // filled by classify_holonomy
  bool commutes_with_candidate = false;
  double commutator_defect = 0.0;
  int fixed_dim = 0;
  Vec fixed_vector;             // coordinates at base, unit, when fixed_dim >= 1
};

struct Probe {
  Vec point;
  Vec X, Y;
};

struct HolonomyOptions {
  double relative_cut = 1e-6;
  double span_floor = 1e-4;   // absolute singular-value floor for curvature spans; fd noise on flat charts reaches ~3e-6
  double loop_floor = 1e-8;   // same for loop logarithms (scale eps^2)
  double min_gap = 10.0;
  int closure_passes = 2;
  double structure_tol = 1e-4;  // commutation and fixed-vector tests on unit generators
  double loop_eps = 0.02;
  int steps_per_unit = 1000;
};

std::vector<Probe> random_probes(const Chart& chart, int count, std::mt19937_64& rng, const Settings& s);

// Curvature endomorphisms R(X,Y) at the probes, transported to base along
// straight segments, closed under brackets.
HolonomyEstimate curvature_span(const Chart& chart, const Vec& base, const std::vector<Probe>& probes,
                                const Settings& s, const HolonomyOptions& o = {});

// Lassos: segment from base to a corner, small coordinate square, back.
std::vector<Loop> lasso_family(const Chart& chart, const Vec& base, int corners, std::mt19937_64& rng,
                               const Settings& s, const HolonomyOptions& o = {});
// Logarithms of transports around contractible loops. Throws
// LoopTooLargeError when a transport stays 0.5 or more away from identity.
HolonomyEstimate loop_holonomy(const Chart& chart, const std::vector<Loop>& loops, const Vec& base,
                               const Settings& s, const HolonomyOptions& o = {});
// Builds lassos and halves their squares until every transport is near identity.
HolonomyEstimate loop_holonomy_auto(const Chart& chart, const Vec& base, int corners, std::mt19937_64& rng,
                                    const Settings& s, HolonomyOptions o = {});

// Labels the estimate; J candidates are coordinate matrices at est.base.
HolonomyClass classify_holonomy(HolonomyEstimate& est, int n, const std::vector<Mat>& j_candidates,
                                const HolonomyOptions& o = {});

// Principal matrix logarithm of an orthogonal matrix near identity.
Mat orthogonal_log(const Mat& H);

}  // namespace lck
