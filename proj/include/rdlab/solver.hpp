#pragma once

#include <array>
#include <span>
#include <string>
#include <vector>

#include "rdlab/energy.hpp"
#include "rdlab/geometry.hpp"
#include "rdlab/model.hpp"

namespace rdlab {

struct SolverConfig {
  double dt = 1e-3;
  double t_end = 1.0;
  std::array<int, 2> cells{64, 64};  // per axis, applied to every domain
  double epsilon = 1e-3;
  double linear_tol = 1e-10;  // relative residual for implicit solves
  int record_every = 100;     // snapshot stride in steps
  double nonneg_floor = 1e-8;

  void validate() const;
};

struct Snapshot {
  int step = 0;
  State state;
};

struct Trajectory {
  std::vector<MeshedDomain> meshes;  // one per domain id
  std::vector<Snapshot> snapshots;
  DiagnosticsLedger ledger;
  std::string halt_message;  // non-empty if the run stopped on non-finite values

  bool halted() const { return !halt_message.empty(); }
};

/// One backward-Euler diffusion step (I - dt L_h) u_new = u_old on a uniform
/// mesh: finite-volume Laplacian, harmonic-mean face coefficients, zero-flux
/// boundary faces. 1D solves directly (tridiagonal); 2D uses Jacobi-
/// preconditioned conjugate gradients with an iteration budget of 10x cells.
std::vector<double> diffusion_step(const std::vector<double>& field,
                                   const std::vector<double>& diffusion, double dt,
                                   const MeshedDomain& mesh, double linear_tol = 1e-10);

/// Precomputed per-run machinery: meshes, per-cell diffusion values, gate
/// activity masks and cross-mesh sampling maps. Owns no state.
class Simulation {
 public:
  Simulation(const ModelSpec& model, const SolverConfig& config);

  const ModelSpec& model() const { return model_; }
  const SolverConfig& config() const { return config_; }
  std::span<const MeshedDomain> meshes() const { return meshes_; }

  State initial_state() const;

  /// Lie-split IMEX Euler: explicit truncated reaction, implicit diffusion.
  State advance(const State& state) const;

  /// The explicit reaction half-step alone (exposed for verification).
  State reaction_substep(const State& state) const;

 private:
  ModelSpec model_;
  SolverConfig config_;
  std::vector<MeshedDomain> meshes_;
  std::vector<std::vector<double>> diffusion_cells_;  // per species, per cell
  // per domain j-1: sample_map_[j-1][i-1][cell] = cell index of species i's
  // mesh at this cell center, or -1 when the center lies outside
  std::vector<std::vector<std::vector<int>>> sample_map_;
  // per domain j-1, per term: 1 where the term's gate and target habitat
  // contain the cell center
  std::vector<std::vector<std::vector<std::uint8_t>>> term_active_;
};

State advance(const State& state, const ModelSpec& model, const SolverConfig& config);

struct RunOptions {
  MassControl mass;                   // ledger envelope inputs
  std::vector<EnergyConfig> energies; // L_p columns
};

Trajectory run(const ModelSpec& model, const SolverConfig& config,
               const RunOptions& options = {});

struct EpsilonStudy {
  std::vector<double> eps;
  /// distances[i][k-1] = || u^{eps_i}(T) - u^{eps_{i+1}}(T) ||_2 for species k
  std::vector<std::vector<double>> distances;
  std::vector<State> final_states;
};

EpsilonStudy epsilon_study(const ModelSpec& model, const SolverConfig& config,
                           std::span<const double> eps_list);

}  // namespace rdlab
