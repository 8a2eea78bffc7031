#pragma once

#include <span>
#include <vector>

#include "rdlab/geometry.hpp"
#include "rdlab/model.hpp"

namespace rdlab {

/// Cell-averaged concentrations, one array per species on the mesh of its
/// home habitat, stamped with time.
struct State {
  double t = 0.0;
  std::vector<std::vector<double>> fields;
};

/// Iterates all beta in Z_+^n with |beta| = p, starting at (p, 0, ..., 0) and
/// stepping in the order that ends at (0, ..., 0, p).
class CompositionIterator {
 public:
  CompositionIterator(int p, int n);
  bool valid() const { return valid_; }
  const std::vector<int>& beta() const { return beta_; }
  void next();

 private:
  std::vector<int> beta_;
  bool valid_ = true;
};

/// H_p[v] = sum_{|beta|=p} multinomial(p, beta) * prod theta_i^{beta_i^2}
///        * prod v_i^{beta_i}. Enumeration is used up to p = 8; larger p is
/// evaluated in log space to dodge overflow.
double multinomial_energy(std::span<const double> v, std::span<const double> theta, int p);

/// L_{k,p}: cell-volume-weighted sum of H_p over the group's habitat mesh.
/// Fields are evaluated at their positive part.
double group_energy(const State& state, std::span<const int> group,
                    std::span<const double> theta, int p, const MeshedDomain& mesh);

/// sum_k b_k * sum_cells vol * u_k.
double weighted_mass(const State& state, std::span<const double> b,
                     std::span<const MeshedDomain> meshes, const SpeciesMap& species);

/// The explicit mass bound: (K2/K1 + M0) e^{K1 t} - K2/K1, or M0 + K2 t when
/// K1 = 0.
double gronwall_envelope(double K1, double K2, double M0, double t);

struct ThetaCheck {
  int p = 0;
  std::vector<double> theta;
  bool ok = false;
  std::vector<int> failing_beta;  // empty when ok
};

/// Checks that every M(beta), |beta| = p-2, with diagonal theta_i^{4 beta_i+4}
/// and off-diagonal theta_i^{2 beta_i+1} theta_l^{2 beta_l+1} is positive
/// definite (all leading principal minors > 0).
ThetaCheck theta_pd_check(std::span<const double> theta, int p, int n_k);

/// Doubles components (largest index first) starting from all-ones until the
/// positive-definiteness check passes.
std::vector<double> auto_theta(int n_k, int p, int max_doublings = 256);

struct EnergyConfig {
  int p = 2;
  std::vector<std::vector<double>> theta_per_group;  // one vector per domain group

  static EnergyConfig auto_for(const ModelSpec& model, int p);
};

struct LedgerRow {
  double t = 0.0;
  std::vector<double> l1;   // per species, signed cell-volume-weighted sum
  std::vector<double> sup;  // per species, max |u|
  std::vector<double> min;  // per species
  double weighted_mass = 0.0;
  double envelope = 0.0;
  std::vector<double> lp;  // one entry per configured energy
};

struct DiagnosticsLedger {
  std::vector<int> energy_p;  // column meta for `lp`
  std::vector<LedgerRow> rows;
};

/// Mass-control data driving the ledger envelope. K2 is scaled by the union
/// measure when integrating the pointwise bound, and negative K1 is tempered
/// by max(b); both happen inside ledger_update.
struct MassControl {
  std::vector<double> b;  // defaults to all-ones when empty
  double K1 = 0.0;
  double K2 = 0.0;
};

LedgerRow ledger_update(const State& state, const ModelSpec& model,
                        std::span<const MeshedDomain> meshes, const MassControl& mass,
                        double M0, std::span<const EnergyConfig> energies);

}  // namespace rdlab
