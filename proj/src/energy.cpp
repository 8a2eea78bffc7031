#include "rdlab/energy.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace rdlab {

CompositionIterator::CompositionIterator(int p, int n) {
  if (p < 0 || n < 1) throw std::invalid_argument("compositions need p >= 0, n >= 1");
  beta_.assign(static_cast<std::size_t>(n), 0);
  beta_[0] = p;
}

void CompositionIterator::next() {
  // Standard lexicographic step: move one unit from the leftmost positive
  // entry to its right, folding everything before it back onto the front.
  const int n = static_cast<int>(beta_.size());
  int i = 0;
  while (i < n && beta_[static_cast<std::size_t>(i)] == 0) ++i;
  if (i >= n - 1) {
    valid_ = false;
    return;
  }
  const int head = beta_[static_cast<std::size_t>(i)];
  beta_[static_cast<std::size_t>(i)] = 0;
  beta_[0] = head - 1;
  beta_[static_cast<std::size_t>(i + 1)] += 1;
}

namespace {

double multinomial_coeff(std::span<const int> beta) {
  // |beta|! / prod beta_i!  built incrementally as a product of binomials.
  double c = 1.0;
  int used = 0;
  for (int b : beta) {
    for (int i = 1; i <= b; ++i) {
      c *= static_cast<double>(used + i) / static_cast<double>(i);
    }
    used += b;
  }
  return std::round(c);
}

double log_multinomial_coeff(int p, std::span<const int> beta) {
  double lg = std::lgamma(p + 1.0);
  for (int b : beta) lg -= std::lgamma(b + 1.0);
  return lg;
}

}  // namespace

double multinomial_energy(std::span<const double> v, std::span<const double> theta, int p) {
  const int n = static_cast<int>(v.size());
  if (static_cast<int>(theta.size()) != n) {
    throw std::invalid_argument("theta and v must have equal length");
  }
  if (p < 0) throw std::invalid_argument("p must be >= 0");
  for (int i = 0; i < n; ++i) {
    if (!(theta[static_cast<std::size_t>(i)] > 0.0)) {
      throw std::invalid_argument("theta components must be positive");
    }
    if (v[static_cast<std::size_t>(i)] < 0.0) {
      throw std::invalid_argument("multinomial_energy requires v >= 0");
    }
  }
  if (p == 0) return 1.0;

  if (p <= 8) {
    double sum = 0.0;
    for (CompositionIterator it(p, n); it.valid(); it.next()) {
      const auto& beta = it.beta();
      double term = multinomial_coeff(beta);
      for (int i = 0; i < n; ++i) {
        const int b = beta[static_cast<std::size_t>(i)];
        if (b == 0) continue;
        for (int q = 0; q < b * b; ++q) term *= theta[static_cast<std::size_t>(i)];
        for (int q = 0; q < b; ++q) term *= v[static_cast<std::size_t>(i)];
      }
      sum += term;
    }
    return sum;
  }

  // Large p: log-sum-exp over the compositions with non-vanishing v factors.
  double max_log = -std::numeric_limits<double>::infinity();
  std::vector<double> logs;
  for (CompositionIterator it(p, n); it.valid(); it.next()) {
    const auto& beta = it.beta();
    double lg = log_multinomial_coeff(p, beta);
    bool zero = false;
    for (int i = 0; i < n; ++i) {
      const int b = beta[static_cast<std::size_t>(i)];
      if (b == 0) continue;
      const double vi = v[static_cast<std::size_t>(i)];
      if (vi == 0.0) {
        zero = true;
        break;
      }
      lg += static_cast<double>(b) * static_cast<double>(b) *
            std::log(theta[static_cast<std::size_t>(i)]);
      lg += static_cast<double>(b) * std::log(vi);
    }
    if (zero) continue;
    logs.push_back(lg);
    max_log = std::max(max_log, lg);
  }
  if (logs.empty()) return 0.0;
  double acc = 0.0;
  for (double lg : logs) acc += std::exp(lg - max_log);
  return std::exp(max_log) * acc;
}

double group_energy(const State& state, std::span<const int> group,
                    std::span<const double> theta, int p, const MeshedDomain& mesh) {
  const int nk = static_cast<int>(group.size());
  const int cells = mesh.cell_count();
  for (int i = 0; i < nk; ++i) {
    const auto& f = state.fields[static_cast<std::size_t>(group[static_cast<std::size_t>(i)] - 1)];
    if (static_cast<int>(f.size()) != cells) {
      throw std::invalid_argument("group species not on the group mesh");
    }
  }
  std::vector<double> v(static_cast<std::size_t>(nk));
  double sum = 0.0;
  for (int c = 0; c < cells; ++c) {
    for (int i = 0; i < nk; ++i) {
      const int k = group[static_cast<std::size_t>(i)];
      v[static_cast<std::size_t>(i)] =
          std::max(state.fields[static_cast<std::size_t>(k - 1)][static_cast<std::size_t>(c)], 0.0);
    }
    sum += multinomial_energy(v, theta, p);
  }
  return sum * mesh.cell_volume();
}

double weighted_mass(const State& state, std::span<const double> b,
                     std::span<const MeshedDomain> meshes, const SpeciesMap& species) {
  const int m = species.species_count();
  if (static_cast<int>(b.size()) != m) throw std::invalid_argument("b must have length m");
  double total = 0.0;
  for (int k = 1; k <= m; ++k) {
    if (!(b[static_cast<std::size_t>(k - 1)] > 0.0)) {
      throw std::invalid_argument("b must be positive componentwise");
    }
    const MeshedDomain& mesh = meshes[static_cast<std::size_t>(species.domain_of(k) - 1)];
    double cell_sum = 0.0;
    for (double u : state.fields[static_cast<std::size_t>(k - 1)]) cell_sum += u;
    total += b[static_cast<std::size_t>(k - 1)] * cell_sum * mesh.cell_volume();
  }
  return total;
}

double gronwall_envelope(double K1, double K2, double M0, double t) {
  if (t < 0.0) throw std::invalid_argument("envelope time must be >= 0");
  if (K1 == 0.0) return M0 + K2 * t;
  const double ratio = K2 / K1;
  return (ratio + M0) * std::exp(K1 * t) - ratio;
}

namespace {

// Leading principal minors are positive iff Gaussian elimination without
// pivoting yields positive pivots (Sylvester, symmetric case).
bool positive_definite(std::vector<std::vector<double>> mat) {
  const int n = static_cast<int>(mat.size());
  for (int k = 0; k < n; ++k) {
    const double pivot = mat[static_cast<std::size_t>(k)][static_cast<std::size_t>(k)];
    if (!(pivot > 0.0)) return false;
    for (int r = k + 1; r < n; ++r) {
      const double f = mat[static_cast<std::size_t>(r)][static_cast<std::size_t>(k)] / pivot;
      for (int c = k; c < n; ++c) {
        mat[static_cast<std::size_t>(r)][static_cast<std::size_t>(c)] -=
            f * mat[static_cast<std::size_t>(k)][static_cast<std::size_t>(c)];
      }
    }
  }
  return true;
}

}  // namespace

ThetaCheck theta_pd_check(std::span<const double> theta, int p, int n_k) {
  if (p < 2) throw std::invalid_argument("theta_pd_check needs p >= 2");
  if (static_cast<int>(theta.size()) != n_k) {
    throw std::invalid_argument("theta must have length n_k");
  }
  ThetaCheck check;
  check.p = p;
  check.theta.assign(theta.begin(), theta.end());
  check.ok = true;
  for (CompositionIterator it(p - 2, n_k); it.valid(); it.next()) {
    const auto& beta = it.beta();
    std::vector<std::vector<double>> mat(static_cast<std::size_t>(n_k),
                                         std::vector<double>(static_cast<std::size_t>(n_k)));
    for (int i = 0; i < n_k; ++i) {
      for (int l = 0; l < n_k; ++l) {
        const double ti = theta[static_cast<std::size_t>(i)];
        const double tl = theta[static_cast<std::size_t>(l)];
        const int bi = beta[static_cast<std::size_t>(i)];
        const int bl = beta[static_cast<std::size_t>(l)];
        mat[static_cast<std::size_t>(i)][static_cast<std::size_t>(l)] =
            (i == l) ? std::pow(ti, 4.0 * bi + 4.0)
                     : std::pow(ti, 2.0 * bi + 1.0) * std::pow(tl, 2.0 * bl + 1.0);
      }
    }
    if (!positive_definite(std::move(mat))) {
      check.ok = false;
      check.failing_beta = beta;
      return check;
    }
  }
  return check;
}

std::vector<double> auto_theta(int n_k, int p, int max_doublings) {
  std::vector<double> theta(static_cast<std::size_t>(n_k), 1.0);
  if (n_k == 1 || p < 2) return theta;
  int next = n_k - 1;  // double the largest index first
  for (int iter = 0; iter < max_doublings; ++iter) {
    if (theta_pd_check(theta, p, n_k).ok) return theta;
    theta[static_cast<std::size_t>(next)] *= 2.0;
    next = (next == 0) ? n_k - 1 : next - 1;
  }
  if (theta_pd_check(theta, p, n_k).ok) return theta;
  throw std::runtime_error("auto_theta: no positive definite theta found");
}

EnergyConfig EnergyConfig::auto_for(const ModelSpec& model, int p) {
  EnergyConfig cfg;
  cfg.p = p;
  for (int j = 1; j <= model.domains.count(); ++j) {
    cfg.theta_per_group.push_back(auto_theta(model.species.group_size(j), p));
  }
  return cfg;
}

LedgerRow ledger_update(const State& state, const ModelSpec& model,
                        std::span<const MeshedDomain> meshes, const MassControl& mass,
                        double M0, std::span<const EnergyConfig> energies) {
  const int m = model.species_count();
  std::vector<double> b = mass.b;
  if (b.empty()) b.assign(static_cast<std::size_t>(m), 1.0);

  LedgerRow row;
  row.t = state.t;
  row.l1.resize(static_cast<std::size_t>(m));
  row.sup.resize(static_cast<std::size_t>(m));
  row.min.resize(static_cast<std::size_t>(m));
  for (int k = 1; k <= m; ++k) {
    const auto& f = state.fields[static_cast<std::size_t>(k - 1)];
    const MeshedDomain& mesh = meshes[static_cast<std::size_t>(model.species.domain_of(k) - 1)];
    double sum = 0.0, sup = 0.0;
    double mn = std::numeric_limits<double>::infinity();
    for (double u : f) {
      sum += u;
      sup = std::max(sup, std::abs(u));
      mn = std::min(mn, u);
    }
    row.l1[static_cast<std::size_t>(k - 1)] = sum * mesh.cell_volume();
    row.sup[static_cast<std::size_t>(k - 1)] = sup;
    row.min[static_cast<std::size_t>(k - 1)] = mn;
  }
  row.weighted_mass = weighted_mass(state, b, meshes, model.species);

  // Integrating the pointwise bound over the union absorbs |Omega| into K2;
  // a negative K1 only controls the unweighted sum, hence the max(b) temper.
  const double omega = model.domains.union_measure();
  double k1_eff = mass.K1;
  if (k1_eff < 0.0) k1_eff /= *std::max_element(b.begin(), b.end());
  row.envelope = gronwall_envelope(k1_eff, mass.K2 * omega, M0, state.t);

  for (const EnergyConfig& cfg : energies) {
    double lp = 0.0;
    for (int j = 1; j <= model.domains.count(); ++j) {
      const auto& group = model.species.group(j);
      if (group.empty()) continue;
      lp += group_energy(state, group, cfg.theta_per_group[static_cast<std::size_t>(j - 1)],
                         cfg.p, meshes[static_cast<std::size_t>(j - 1)]);
    }
    row.lp.push_back(lp);
  }
  return row;
}

}  // namespace rdlab
