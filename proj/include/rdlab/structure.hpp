#pragma once

#include <array>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "rdlab/geometry.hpp"
#include "rdlab/model.hpp"

namespace rdlab {

struct CheckerConfig {
  double u_max = 10.0;
  int samples = 2000;        // random concentration samples per region
  int reps_per_region = 3;   // spatial representatives per region
  unsigned seed = 20240801u;
  std::vector<double> r_grid;      // empty: default grid for the dimension
  bool nonneg_below_diag = false;  // restrict A below-diagonal entries to >= 0
  double var_cap = 1024.0;         // upper box for b and A entries in the LPs
};

/// Finite verification set: concentration vectors on a stratified grid plus
/// random fills, paired with representative points of every region. Every
/// species gets samples with u_k = 0 exactly.
struct SampleCloud {
  struct Sample {
    int region = 0;  // index into `regions`
    std::array<double, 2> x{0.0, 0.0};
    std::vector<double> u;
    std::vector<double> f;  // reaction field at (0, x, u)
    double chi_u_sum = 0.0;  // sum over species present at x of u_j
  };
  std::vector<RegionSignature> regions;
  std::vector<Sample> samples;
  double u_max = 0.0;
};

SampleCloud build_sample_cloud(const ModelSpec& model, const CheckerConfig& cfg);

struct QpViolation {
  int k = 0;
  std::array<double, 2> x{0.0, 0.0};
  std::vector<double> u;
  double value = 0.0;
};

struct QpReport {
  bool ok = false;
  long checked = 0;
  std::vector<QpViolation> violations;  // capped at 100 entries
};

QpReport check_quasi_positivity(const ModelSpec& model, const SampleCloud& cloud);

struct BalReport {
  bool feasible = false;
  std::vector<double> b;
  double K1 = 0.0;
  double K2 = 0.0;
  double residual = 0.0;  // max over the cloud of sum b_k f_k - RHS
  bool symbolic = false;  // certificate from exact term domination
  // sample-range LP cross-check (valid only up to u_max)
  bool sample_feasible = false;
  std::vector<double> sample_b;
  double sample_K1 = 0.0;
  double sample_K2 = 0.0;
  std::string note;
};

BalReport fit_mass_control(const ModelSpec& model, const SampleCloud& cloud,
                           const CheckerConfig& cfg);

struct PolyReport {
  double l = 0.0;
  double C = 0.0;
  double residual = 0.0;
};

PolyReport fit_growth_exponent(const ModelSpec& model, const SampleCloud& cloud);

struct IntWitness {
  bool present = false;
  std::array<double, 2> x{0.0, 0.0};
  std::vector<double> u;
  int species = 0;
  double lhs = 0.0;
  double required_C = 0.0;  // lhs / (chi_u_sum + 1)^r, unbounded in u_max when r is too small
};

struct IntAttempt {
  double r = 0.0;
  bool feasible = false;
  std::string reason;
  IntWitness witness;
};

struct IntReport {
  int domain = 0;
  bool feasible = false;
  std::vector<int> ordering;  // species ids, row order of A
  std::vector<std::vector<double>> A;
  double r = 0.0;
  double C = 0.0;
  double residual = 0.0;
  std::vector<IntAttempt> attempts;
};

IntReport fit_intermediate_sum(const ModelSpec& model, int domain_j, const SampleCloud& cloud,
                               std::span<const double> r_grid, const CheckerConfig& cfg);

std::vector<double> default_r_grid(int dim);

struct StructureReport {
  QpReport qp;
  BalReport bal;
  PolyReport poly;
  std::vector<IntReport> ints;  // one per domain
  double r = 0.0;               // max over domains
  double growth_limit = 0.0;    // 1 + 2/n
  bool growth_ok = false;
  bool uniform_bound = false;  // K1 < 0 or K1 = K2 = 0
  bool corollary1 = false;     // n = 1 and l <= 2
  bool all_ok = false;
  double u_max = 0.0;
  std::string validation;  // held-out re-verification failures, empty if clean
};

StructureReport certify(const ModelSpec& model, const CheckerConfig& cfg = {});

}  // namespace rdlab
