#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "rdlab/geometry.hpp"

namespace rdlab {

/// Species-to-habitat assignment sigma and the induced groups O_1..O_N.
struct SpeciesMap {
  std::vector<int> sigma;              // sigma[k-1] = home domain id of species k
  std::vector<std::vector<int>> groups;  // groups[j-1] = species ids living on domain j

  int species_count() const { return static_cast<int>(sigma.size()); }
  int domain_of(int k) const { return sigma[static_cast<std::size_t>(k - 1)]; }
  const std::vector<int>& group(int j) const { return groups[static_cast<std::size_t>(j - 1)]; }
  int group_size(int j) const { return static_cast<int>(group(j).size()); }

  static SpeciesMap from_sigma(std::vector<int> sigma, int domain_count);
};

/// One gated monomial of the reaction field: coeff * prod_j u_j^exponents[j],
/// contributing to component `target` wherever x lies in every gate domain.
struct ReactionTerm {
  int target = 0;
  double coeff = 0.0;
  std::vector<int> gate;       // ascending domain ids; never empty
  std::vector<int> exponents;  // length m, non-negative

  int total_degree() const;
};

struct ReactionField {
  int m = 0;
  std::vector<ReactionTerm> terms;
};

/// Per-species diffusion: a base value optionally overridden on specific
/// region signatures. All values are >= alpha > 0.
struct DiffusionField {
  struct PerSpecies {
    double base = 1.0;
    std::vector<std::pair<std::vector<int>, double>> region_values;
  };
  std::vector<PerSpecies> per_species;

  double alpha() const;
  double value(int k, const std::vector<int>& signature) const;
};

struct InitialCondition {
  enum class Kind { constant, gaussian };
  Kind kind = Kind::constant;
  double value = 0.0;  // constant
  std::array<double, 2> center{0.0, 0.0};
  double width = 1.0;
  double amplitude = 0.0;

  double eval(std::span<const double> x) const;
};

/// Full problem data for one system: habitats, species map, gated polynomial
/// reaction field, diffusion, initial data and the truncation parameter.
struct ModelSpec {
  DomainSet domains;
  SpeciesMap species;
  ReactionField reaction;
  DiffusionField diffusion;
  std::vector<InitialCondition> initial;
  double epsilon = 1e-3;

  int species_count() const { return species.species_count(); }
  int dim() const { return domains.dim(); }

  void validate() const;

  /// f(t, x, u) for u >= 0 componentwise; component k is zero outside the
  /// home habitat of species k. Throws on negative input.
  void eval_reaction(double t, std::span<const double> x, std::span<const double> u,
                     std::span<double> out) const;

  /// The truncated field f^eps(t, x, u_+): the positive part is applied to
  /// u_raw, then each component is divided by 1 + eps * sum_j |f_j|.
  void truncate_reaction(double t, std::span<const double> x,
                         std::span<const double> u_raw, std::span<double> out) const;

  /// Symbolic bound on max_k sum_j |df_k/du_j| over [0, box_radius]^m.
  double lipschitz_bound(double box_radius) const;
};

bool operator==(const ModelSpec& a, const ModelSpec& b);

struct BuiltinParams {
  double k1 = 1.0, k2 = 1.0, k3 = 1.0, k4 = 1.0;  // contact-rate amplitudes (ex1)
  double lambda1 = 1.0, lambda2 = 1.0, lambda3 = 1.0;
  double a = 1.0, b = 1.0;  // forward/backward rates (ex2); a doubles as the ex3 amplitude
  std::vector<double> diffusion;  // per-species override
  std::vector<double> init_amp;   // per-species amplitude override
  double epsilon = 1e-3;
};

/// The built-in example models: "ex1" (two hosts and a vector on three
/// habitats), "ex2" (A+B <-> C on two habitats), "ex3" (1D two-species).
ModelSpec builtin(const std::string& name, const BuiltinParams& params = {});

}  // namespace rdlab
