#include "rdlab/solver.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <stdexcept>

namespace rdlab {

void SolverConfig::validate() const {
  if (!(dt > 0.0)) throw std::invalid_argument("dt must be positive");
  if (!(t_end >= 0.0)) throw std::invalid_argument("t_end must be >= 0");
  if (!(linear_tol > 0.0 && linear_tol <= 1e-4)) {
    throw std::invalid_argument("linear_tol must lie in (0, 1e-4]");
  }
  if (record_every < 1) throw std::invalid_argument("record_every must be >= 1");
  if (!(epsilon >= 0.0 && epsilon < 1.0)) {
    throw std::invalid_argument("epsilon must lie in [0, 1)");
  }
  for (int c : cells) {
    if (c < 1) throw std::invalid_argument("cells must be >= 1 per axis");
  }
}

namespace {

double harmonic(double a, double b) { return 2.0 * a * b / (a + b); }

// y = (I - dt L_h) x with zero-flux faces.
void apply_operator(const MeshedDomain& mesh, const std::vector<double>& d, double dt,
                    const std::vector<double>& x, std::vector<double>& y) {
  if (mesh.domain.dim == 1) {
    const int n = mesh.cells[0];
    const double r = dt / (mesh.h[0] * mesh.h[0]);
    for (int i = 0; i < n; ++i) {
      double acc = 0.0;
      if (i + 1 < n) {
        acc += harmonic(d[static_cast<std::size_t>(i)], d[static_cast<std::size_t>(i + 1)]) *
               (x[static_cast<std::size_t>(i + 1)] - x[static_cast<std::size_t>(i)]);
      }
      if (i > 0) {
        acc -= harmonic(d[static_cast<std::size_t>(i - 1)], d[static_cast<std::size_t>(i)]) *
               (x[static_cast<std::size_t>(i)] - x[static_cast<std::size_t>(i - 1)]);
      }
      y[static_cast<std::size_t>(i)] = x[static_cast<std::size_t>(i)] - r * acc;
    }
    return;
  }
  const int nx = mesh.cells[0];
  const int ny = mesh.cells[1];
  const double rx = dt / (mesh.h[0] * mesh.h[0]);
  const double ry = dt / (mesh.h[1] * mesh.h[1]);
  for (int j = 0; j < ny; ++j) {
    for (int i = 0; i < nx; ++i) {
      const int c = j * nx + i;
      const double xc = x[static_cast<std::size_t>(c)];
      const double dc = d[static_cast<std::size_t>(c)];
      double acc = 0.0;
      if (i + 1 < nx) {
        acc += rx * harmonic(dc, d[static_cast<std::size_t>(c + 1)]) *
               (x[static_cast<std::size_t>(c + 1)] - xc);
      }
      if (i > 0) {
        acc -= rx * harmonic(d[static_cast<std::size_t>(c - 1)], dc) *
               (xc - x[static_cast<std::size_t>(c - 1)]);
      }
      if (j + 1 < ny) {
        acc += ry * harmonic(dc, d[static_cast<std::size_t>(c + nx)]) *
               (x[static_cast<std::size_t>(c + nx)] - xc);
      }
      if (j > 0) {
        acc -= ry * harmonic(d[static_cast<std::size_t>(c - nx)], dc) *
               (xc - x[static_cast<std::size_t>(c - nx)]);
      }
      y[static_cast<std::size_t>(c)] = xc - acc;
    }
  }
}

std::vector<double> solve_tridiagonal(const MeshedDomain& mesh, const std::vector<double>& d,
                                      double dt, const std::vector<double>& u_old) {
  const int n = mesh.cells[0];
  const double r = dt / (mesh.h[0] * mesh.h[0]);

  // Increment form: (I - dt L) delta = dt L u_old keeps constants exact.
  std::vector<double> rhs(static_cast<std::size_t>(n), 0.0);
  for (int i = 0; i < n; ++i) {
    double acc = 0.0;
    if (i + 1 < n) {
      acc += harmonic(d[static_cast<std::size_t>(i)], d[static_cast<std::size_t>(i + 1)]) *
             (u_old[static_cast<std::size_t>(i + 1)] - u_old[static_cast<std::size_t>(i)]);
    }
    if (i > 0) {
      acc -= harmonic(d[static_cast<std::size_t>(i - 1)], d[static_cast<std::size_t>(i)]) *
             (u_old[static_cast<std::size_t>(i)] - u_old[static_cast<std::size_t>(i - 1)]);
    }
    rhs[static_cast<std::size_t>(i)] = r * acc;
  }

  std::vector<double> lower(static_cast<std::size_t>(n), 0.0);
  std::vector<double> diag(static_cast<std::size_t>(n), 1.0);
  std::vector<double> upper(static_cast<std::size_t>(n), 0.0);
  for (int i = 0; i < n; ++i) {
    if (i + 1 < n) {
      const double w = r * harmonic(d[static_cast<std::size_t>(i)], d[static_cast<std::size_t>(i + 1)]);
      diag[static_cast<std::size_t>(i)] += w;
      upper[static_cast<std::size_t>(i)] = -w;
      diag[static_cast<std::size_t>(i + 1)] += w;
      lower[static_cast<std::size_t>(i + 1)] = -w;
    }
  }

  // Thomas sweep.
  for (int i = 1; i < n; ++i) {
    const double f = lower[static_cast<std::size_t>(i)] / diag[static_cast<std::size_t>(i - 1)];
    diag[static_cast<std::size_t>(i)] -= f * upper[static_cast<std::size_t>(i - 1)];
    rhs[static_cast<std::size_t>(i)] -= f * rhs[static_cast<std::size_t>(i - 1)];
  }
  std::vector<double> delta(static_cast<std::size_t>(n));
  delta[static_cast<std::size_t>(n - 1)] =
      rhs[static_cast<std::size_t>(n - 1)] / diag[static_cast<std::size_t>(n - 1)];
  for (int i = n - 2; i >= 0; --i) {
    delta[static_cast<std::size_t>(i)] =
        (rhs[static_cast<std::size_t>(i)] -
         upper[static_cast<std::size_t>(i)] * delta[static_cast<std::size_t>(i + 1)]) /
        diag[static_cast<std::size_t>(i)];
  }

  std::vector<double> u_new(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) {
    u_new[static_cast<std::size_t>(i)] =
        u_old[static_cast<std::size_t>(i)] + delta[static_cast<std::size_t>(i)];
  }
  return u_new;
}

std::vector<double> solve_cg(const MeshedDomain& mesh, const std::vector<double>& d, double dt,
                             const std::vector<double>& u_old, double tol) {
  const int n = mesh.cell_count();
  const long budget = 10L * n;

  std::vector<double> x = u_old;  // warm start
  std::vector<double> ax(static_cast<std::size_t>(n));
  apply_operator(mesh, d, dt, x, ax);

  std::vector<double> r(static_cast<std::size_t>(n));
  double bnorm2 = 0.0;
  for (int i = 0; i < n; ++i) {
    r[static_cast<std::size_t>(i)] = u_old[static_cast<std::size_t>(i)] - ax[static_cast<std::size_t>(i)];
    bnorm2 += u_old[static_cast<std::size_t>(i)] * u_old[static_cast<std::size_t>(i)];
  }
  const double stop2 = tol * tol * std::max(bnorm2, std::numeric_limits<double>::min());

  std::vector<double> inv_diag(static_cast<std::size_t>(n));
  {
    const int nx = mesh.cells[0];
    const int ny = mesh.cells[1];
    const double rx = dt / (mesh.h[0] * mesh.h[0]);
    const double ry = dt / (mesh.h[1] * mesh.h[1]);
    for (int j = 0; j < ny; ++j) {
      for (int i = 0; i < nx; ++i) {
        const int c = j * nx + i;
        const double dc = d[static_cast<std::size_t>(c)];
        double diag = 1.0;
        if (i + 1 < nx) diag += rx * harmonic(dc, d[static_cast<std::size_t>(c + 1)]);
        if (i > 0) diag += rx * harmonic(d[static_cast<std::size_t>(c - 1)], dc);
        if (j + 1 < ny) diag += ry * harmonic(dc, d[static_cast<std::size_t>(c + nx)]);
        if (j > 0) diag += ry * harmonic(d[static_cast<std::size_t>(c - nx)], dc);
        inv_diag[static_cast<std::size_t>(c)] = 1.0 / diag;
      }
    }
  }

  auto dot = [n](const std::vector<double>& a, const std::vector<double>& b) {
    double s = 0.0;
    for (int i = 0; i < n; ++i) s += a[static_cast<std::size_t>(i)] * b[static_cast<std::size_t>(i)];
    return s;
  };

  double rnorm2 = dot(r, r);
  if (rnorm2 <= stop2) return x;

  std::vector<double> z(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) z[static_cast<std::size_t>(i)] = inv_diag[static_cast<std::size_t>(i)] * r[static_cast<std::size_t>(i)];
  std::vector<double> p = z;
  double rz = dot(r, z);

  for (long iter = 0; iter < budget; ++iter) {
    apply_operator(mesh, d, dt, p, ax);
    const double alpha = rz / dot(p, ax);
    for (int i = 0; i < n; ++i) {
      x[static_cast<std::size_t>(i)] += alpha * p[static_cast<std::size_t>(i)];
      r[static_cast<std::size_t>(i)] -= alpha * ax[static_cast<std::size_t>(i)];
    }
    rnorm2 = dot(r, r);
    if (rnorm2 <= stop2) return x;
    for (int i = 0; i < n; ++i) z[static_cast<std::size_t>(i)] = inv_diag[static_cast<std::size_t>(i)] * r[static_cast<std::size_t>(i)];
    const double rz_new = dot(r, z);
    const double beta = rz_new / rz;
    rz = rz_new;
    for (int i = 0; i < n; ++i) {
      p[static_cast<std::size_t>(i)] = z[static_cast<std::size_t>(i)] + beta * p[static_cast<std::size_t>(i)];
    }
  }
  throw std::runtime_error("diffusion_step: linear solve missed tolerance " +
                           std::to_string(tol) + " within the iteration budget");
}

}  // namespace

std::vector<double> diffusion_step(const std::vector<double>& field,
                                   const std::vector<double>& diffusion, double dt,
                                   const MeshedDomain& mesh, double linear_tol) {
  if (!(dt > 0.0)) throw std::invalid_argument("diffusion_step: dt must be positive");
  const int n = mesh.cell_count();
  if (static_cast<int>(field.size()) != n || static_cast<int>(diffusion.size()) != n) {
    throw std::invalid_argument("diffusion_step: array sizes must match the mesh");
  }
  for (double v : diffusion) {
    if (!(v > 0.0)) throw std::invalid_argument("diffusion_step: diffusion must be positive");
  }

  std::vector<double> u_new = mesh.domain.dim == 1
                                  ? solve_tridiagonal(mesh, diffusion, dt, field)
                                  : solve_cg(mesh, diffusion, dt, field, linear_tol);

  // The continuous solve obeys min u <= u_new <= max u; snap pure round-off
  // excursions so the discrete inequality is exact. Anything beyond the
  // rounding slack is left in place (it would indicate a real solver fault).
  double lo = std::numeric_limits<double>::infinity();
  double hi = -lo;
  for (double v : field) {
    lo = std::min(lo, v);
    hi = std::max(hi, v);
  }
  const double slack =
      16.0 * std::numeric_limits<double>::epsilon() * std::max({1.0, std::abs(lo), std::abs(hi)});
  for (double& v : u_new) {
    if (v > hi && v <= hi + slack) v = hi;
    if (v < lo && v >= lo - slack) v = lo;
  }
  return u_new;
}

Simulation::Simulation(const ModelSpec& model, const SolverConfig& config)
    : model_(model), config_(config) {
  config_.validate();
  model_.validate();
  model_.epsilon = config_.epsilon;  // the run's truncation wins

  const int n_dom = model_.domains.count();
  const int m = model_.species_count();
  const int dim = model_.dim();
  const std::array<int, 2> cells = config_.cells;

  for (int j = 1; j <= n_dom; ++j) {
    meshes_.push_back(build_mesh(model_.domains.at(j),
                                 std::span<const int>(cells.data(), static_cast<std::size_t>(dim))));
  }

  diffusion_cells_.resize(static_cast<std::size_t>(m));
  for (int k = 1; k <= m; ++k) {
    const MeshedDomain& mesh = meshes_[static_cast<std::size_t>(model_.species.domain_of(k) - 1)];
    auto& vals = diffusion_cells_[static_cast<std::size_t>(k - 1)];
    vals.resize(static_cast<std::size_t>(mesh.cell_count()));
    for (int c = 0; c < mesh.cell_count(); ++c) {
      const auto x = mesh.center(c);
      const auto sig = model_.domains.signature_at(std::span<const double>(x.data(), static_cast<std::size_t>(dim)));
      vals[static_cast<std::size_t>(c)] = model_.diffusion.value(k, sig);
    }
  }

  sample_map_.resize(static_cast<std::size_t>(n_dom));
  term_active_.resize(static_cast<std::size_t>(n_dom));
  for (int j = 1; j <= n_dom; ++j) {
    const MeshedDomain& mesh = meshes_[static_cast<std::size_t>(j - 1)];
    const int nc = mesh.cell_count();
    auto& maps = sample_map_[static_cast<std::size_t>(j - 1)];
    maps.resize(static_cast<std::size_t>(m));
    for (int i = 1; i <= m; ++i) {
      auto& map = maps[static_cast<std::size_t>(i - 1)];
      map.resize(static_cast<std::size_t>(nc));
      const MeshedDomain& other = meshes_[static_cast<std::size_t>(model_.species.domain_of(i) - 1)];
      for (int c = 0; c < nc; ++c) {
        const auto x = mesh.center(c);
        const std::span<const double> xs(x.data(), static_cast<std::size_t>(dim));
        map[static_cast<std::size_t>(c)] =
            other.domain.contains(xs) ? other.index_of(xs) : -1;
      }
    }
    auto& active = term_active_[static_cast<std::size_t>(j - 1)];
    active.resize(model_.reaction.terms.size());
    for (std::size_t t = 0; t < model_.reaction.terms.size(); ++t) {
      const ReactionTerm& trm = model_.reaction.terms[t];
      active[t].assign(static_cast<std::size_t>(nc), 0);
      for (int c = 0; c < nc; ++c) {
        const auto x = mesh.center(c);
        const std::span<const double> xs(x.data(), static_cast<std::size_t>(dim));
        bool on = model_.domains.contains(model_.species.domain_of(trm.target), xs);
        for (int g : trm.gate) {
          if (!on) break;
          on = model_.domains.contains(g, xs);
        }
        active[t][static_cast<std::size_t>(c)] = on ? 1 : 0;
      }
    }
  }
}

State Simulation::initial_state() const {
  State state;
  state.t = 0.0;
  const int m = model_.species_count();
  state.fields.resize(static_cast<std::size_t>(m));
  for (int k = 1; k <= m; ++k) {
    const MeshedDomain& mesh = meshes_[static_cast<std::size_t>(model_.species.domain_of(k) - 1)];
    auto& f = state.fields[static_cast<std::size_t>(k - 1)];
    f.resize(static_cast<std::size_t>(mesh.cell_count()));
    for (int c = 0; c < mesh.cell_count(); ++c) {
      const auto x = mesh.center(c);
      f[static_cast<std::size_t>(c)] = model_.initial[static_cast<std::size_t>(k - 1)].eval(
          std::span<const double>(x.data(), static_cast<std::size_t>(model_.dim())));
    }
  }
  return state;
}

State Simulation::reaction_substep(const State& state) const {
  const int m = model_.species_count();
  const double eps = model_.epsilon;
  const double dt = config_.dt;

  State next = state;
  std::vector<double> u(static_cast<std::size_t>(m));
  std::vector<double> f(static_cast<std::size_t>(m));

  for (int j = 1; j <= model_.domains.count(); ++j) {
    const auto& group = model_.species.group(j);
    if (group.empty()) continue;
    const MeshedDomain& mesh = meshes_[static_cast<std::size_t>(j - 1)];
    const auto& maps = sample_map_[static_cast<std::size_t>(j - 1)];
    const auto& active = term_active_[static_cast<std::size_t>(j - 1)];
    const int nc = mesh.cell_count();

    for (int c = 0; c < nc; ++c) {
      for (int i = 0; i < m; ++i) {
        const int src = maps[static_cast<std::size_t>(i)][static_cast<std::size_t>(c)];
        const double v = src < 0 ? 0.0
                                 : state.fields[static_cast<std::size_t>(i)][static_cast<std::size_t>(src)];
        u[static_cast<std::size_t>(i)] = v > 0.0 ? v : 0.0;
      }
      for (int i = 0; i < m; ++i) f[static_cast<std::size_t>(i)] = 0.0;
      for (std::size_t t = 0; t < model_.reaction.terms.size(); ++t) {
        if (!active[t][static_cast<std::size_t>(c)]) continue;
        const ReactionTerm& trm = model_.reaction.terms[t];
        double val = trm.coeff;
        for (int i = 0; i < m; ++i) {
          const int e = trm.exponents[static_cast<std::size_t>(i)];
          for (int q = 0; q < e; ++q) val *= u[static_cast<std::size_t>(i)];
        }
        f[static_cast<std::size_t>(trm.target - 1)] += val;
      }
      double divisor = 1.0;
      if (eps > 0.0) {
        double sum = 0.0;
        for (int i = 0; i < m; ++i) sum += std::abs(f[static_cast<std::size_t>(i)]);
        divisor = 1.0 + eps * sum;
      }
      for (int k : group) {
        const double feps = f[static_cast<std::size_t>(k - 1)] / divisor;
        next.fields[static_cast<std::size_t>(k - 1)][static_cast<std::size_t>(c)] =
            state.fields[static_cast<std::size_t>(k - 1)][static_cast<std::size_t>(c)] + dt * feps;
      }
    }
  }
  return next;
}

State Simulation::advance(const State& state) const {
  const int m = model_.species_count();
  for (int k = 1; k <= m; ++k) {
    const MeshedDomain& mesh = meshes_[static_cast<std::size_t>(model_.species.domain_of(k) - 1)];
    if (static_cast<int>(state.fields[static_cast<std::size_t>(k - 1)].size()) != mesh.cell_count()) {
      throw std::invalid_argument("advance: state arrays do not match the model meshes");
    }
  }
  State star = reaction_substep(state);
  for (int k = 1; k <= m; ++k) {
    const MeshedDomain& mesh = meshes_[static_cast<std::size_t>(model_.species.domain_of(k) - 1)];
    star.fields[static_cast<std::size_t>(k - 1)] =
        diffusion_step(star.fields[static_cast<std::size_t>(k - 1)],
                       diffusion_cells_[static_cast<std::size_t>(k - 1)], config_.dt, mesh,
                       config_.linear_tol);
  }
  star.t = state.t + config_.dt;
  return star;
}

State advance(const State& state, const ModelSpec& model, const SolverConfig& config) {
  return Simulation(model, config).advance(state);
}

namespace {

// Returns species/cell of the first non-finite entry, or empty.
std::string find_non_finite(const State& state) {
  for (std::size_t k = 0; k < state.fields.size(); ++k) {
    const auto& f = state.fields[k];
    for (std::size_t c = 0; c < f.size(); ++c) {
      if (!std::isfinite(f[c])) {
        return "non-finite value for species " + std::to_string(k + 1) + " at cell " +
               std::to_string(c) + ", t = " + std::to_string(state.t);
      }
    }
  }
  return {};
}

}  // namespace

Trajectory run(const ModelSpec& model, const SolverConfig& config, const RunOptions& options) {
  Simulation sim(model, config);

  Trajectory traj;
  traj.meshes.assign(sim.meshes().begin(), sim.meshes().end());
  for (const EnergyConfig& e : options.energies) traj.ledger.energy_p.push_back(e.p);

  State state = sim.initial_state();

  double sup0 = 0.0;
  for (const auto& f : state.fields) {
    for (double v : f) sup0 = std::max(sup0, std::abs(v));
  }
  if (sup0 > 0.0) {
    const double lip = sim.model().lipschitz_bound(2.0 * sup0);
    if (lip > 0.0 && config.dt > 0.5 / lip) {
      std::fprintf(stderr,
                   "warning: dt = %g exceeds 0.5 / lipschitz_bound = %g; "
                   "explicit reaction may be inaccurate\n",
                   config.dt, 0.5 / lip);
    }
  }

  const double m0 = weighted_mass(
      state,
      options.mass.b.empty()
          ? std::vector<double>(static_cast<std::size_t>(model.species_count()), 1.0)
          : options.mass.b,
      sim.meshes(), sim.model().species);

  traj.ledger.rows.push_back(
      ledger_update(state, sim.model(), sim.meshes(), options.mass, m0, options.energies));
  traj.snapshots.push_back({0, state});

  const long n_steps = static_cast<long>(std::ceil(config.t_end / config.dt - 1e-9));
  for (long step = 1; step <= n_steps; ++step) {
    state = sim.advance(state);
    const std::string bad = find_non_finite(state);
    if (!bad.empty()) {
      traj.halt_message = bad;
      break;
    }
    traj.ledger.rows.push_back(
        ledger_update(state, sim.model(), sim.meshes(), options.mass, m0, options.energies));
    if (step % config.record_every == 0 || step == n_steps) {
      traj.snapshots.push_back({static_cast<int>(step), state});
    }
  }
  return traj;
}

EpsilonStudy epsilon_study(const ModelSpec& model, const SolverConfig& config,
                           std::span<const double> eps_list) {
  if (eps_list.size() < 2) {
    throw std::invalid_argument("epsilon_study needs at least two epsilon values");
  }
  for (std::size_t i = 0; i < eps_list.size(); ++i) {
    if (!(eps_list[i] > 0.0)) throw std::invalid_argument("epsilon values must be positive");
    if (i > 0 && !(eps_list[i] < eps_list[i - 1])) {
      throw std::invalid_argument("epsilon values must be strictly decreasing");
    }
  }

  EpsilonStudy study;
  study.eps.assign(eps_list.begin(), eps_list.end());
  std::vector<MeshedDomain> meshes;
  for (double eps : eps_list) {
    SolverConfig cfg = config;
    cfg.epsilon = eps;
    Trajectory traj = run(model, cfg);
    if (traj.halted()) throw std::runtime_error("epsilon_study: " + traj.halt_message);
    study.final_states.push_back(traj.snapshots.back().state);
    if (meshes.empty()) meshes = traj.meshes;
  }

  const int m = model.species_count();
  for (std::size_t i = 0; i + 1 < study.final_states.size(); ++i) {
    std::vector<double> dist(static_cast<std::size_t>(m), 0.0);
    for (int k = 1; k <= m; ++k) {
      const auto& a = study.final_states[i].fields[static_cast<std::size_t>(k - 1)];
      const auto& b = study.final_states[i + 1].fields[static_cast<std::size_t>(k - 1)];
      const MeshedDomain& mesh = meshes[static_cast<std::size_t>(model.species.domain_of(k) - 1)];
      double q = 0.0;
      for (std::size_t c = 0; c < a.size(); ++c) {
        const double diff = a[c] - b[c];
        q += diff * diff;
      }
      dist[static_cast<std::size_t>(k - 1)] = std::sqrt(q * mesh.cell_volume());
    }
    study.distances.push_back(std::move(dist));
  }
  return study;
}

}  // namespace rdlab
