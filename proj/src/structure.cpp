#include "rdlab/structure.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <random>
#include <stdexcept>

#include "rdlab/simplex.hpp"

namespace rdlab {

namespace {

constexpr double kCertTol = 1e-9;  // certificate re-verification slack, times scale

double coeff_scale(const ModelSpec& model) {
  double s = 0.0;
  for (const ReactionTerm& t : model.reaction.terms) s += std::abs(t.coeff);
  return std::max(1.0, s);
}

}  // namespace

SampleCloud build_sample_cloud(const ModelSpec& model, const CheckerConfig& cfg) {
  if (!(cfg.u_max > 0.0)) throw std::invalid_argument("u_max must be positive");
  if (cfg.samples < 1) throw std::invalid_argument("samples must be >= 1");
  model.validate();

  const int m = model.species_count();
  const int dim = model.dim();
  SampleCloud cloud;
  cloud.u_max = cfg.u_max;

  RegionPartition part = region_partition(model.domains, cfg.reps_per_region, cfg.seed);
  cloud.regions = part.regions;

  // Grid levels per axis: as many as the budget allows, always including the
  // endpoints 0 and u_max so every species sees exact zero samples.
  int levels = 2;
  while (levels < 16 && std::pow(static_cast<double>(levels + 1), m) <= 4096.0) ++levels;

  std::mt19937 rng(cfg.seed + 1);
  std::uniform_real_distribution<double> unif(0.0, cfg.u_max);

  std::vector<std::vector<double>> u_list;
  {
    std::vector<int> idx(static_cast<std::size_t>(m), 0);
    while (true) {
      std::vector<double> u(static_cast<std::size_t>(m));
      for (int k = 0; k < m; ++k) {
        u[static_cast<std::size_t>(k)] =
            cfg.u_max * static_cast<double>(idx[static_cast<std::size_t>(k)]) /
            static_cast<double>(levels - 1);
      }
      u_list.push_back(std::move(u));
      int d = 0;
      while (d < m && ++idx[static_cast<std::size_t>(d)] == levels) {
        idx[static_cast<std::size_t>(d)] = 0;
        ++d;
      }
      if (d == m) break;
    }
  }
  for (int s = 0; s < cfg.samples; ++s) {
    std::vector<double> u(static_cast<std::size_t>(m));
    for (int k = 0; k < m; ++k) u[static_cast<std::size_t>(k)] = unif(rng);
    u_list.push_back(std::move(u));
  }
  const int faces = std::max(32, cfg.samples / 16);
  for (int k = 0; k < m; ++k) {
    for (int s = 0; s < faces; ++s) {
      std::vector<double> u(static_cast<std::size_t>(m));
      for (int i = 0; i < m; ++i) u[static_cast<std::size_t>(i)] = unif(rng);
      u[static_cast<std::size_t>(k)] = 0.0;
      u_list.push_back(std::move(u));
    }
    std::vector<double> axis(static_cast<std::size_t>(m), 0.0);
    axis[static_cast<std::size_t>(k)] = cfg.u_max;
    u_list.push_back(std::move(axis));
  }
  u_list.push_back(std::vector<double>(static_cast<std::size_t>(m), 0.0));

  std::vector<double> f(static_cast<std::size_t>(m));
  for (std::size_t r = 0; r < cloud.regions.size(); ++r) {
    const RegionSignature& region = cloud.regions[r];
    const auto& reps = region.representative_points;
    for (std::size_t i = 0; i < u_list.size(); ++i) {
      SampleCloud::Sample sample;
      sample.region = static_cast<int>(r);
      sample.x = reps[i % reps.size()];
      sample.u = u_list[i];
      model.eval_reaction(0.0, std::span<const double>(sample.x.data(), static_cast<std::size_t>(dim)),
                          sample.u, f);
      sample.f.assign(f.begin(), f.end());
      sample.chi_u_sum = 0.0;
      for (int k = 1; k <= m; ++k) {
        const int dom = model.species.domain_of(k);
        if (std::find(region.active.begin(), region.active.end(), dom) != region.active.end()) {
          sample.chi_u_sum += sample.u[static_cast<std::size_t>(k - 1)];
        }
      }
      cloud.samples.push_back(std::move(sample));
    }
  }
  return cloud;
}

QpReport check_quasi_positivity(const ModelSpec& model, const SampleCloud& cloud) {
  QpReport report;
  report.ok = true;
  const int m = model.species_count();
  for (const auto& s : cloud.samples) {
    for (int k = 1; k <= m; ++k) {
      if (s.u[static_cast<std::size_t>(k - 1)] != 0.0) continue;
      ++report.checked;
      const double fk = s.f[static_cast<std::size_t>(k - 1)];
      if (fk < -1e-12) {
        report.ok = false;
        if (report.violations.size() < 100) {
          report.violations.push_back({k, s.x, s.u, fk});
        }
      }
    }
  }
  return report;
}

namespace {

// Exact per-region monomial expansion of the gated field: for each region
// (by index into cloud.regions) a map exponent-vector -> per-species
// coefficient sum. Only species whose habitat covers the region can appear.
using MonomialMap = std::map<std::vector<int>, std::vector<double>>;

std::vector<MonomialMap> region_monomials(const ModelSpec& model,
                                          const std::vector<RegionSignature>& regions) {
  const int m = model.species_count();
  std::vector<MonomialMap> maps(regions.size());
  for (std::size_t r = 0; r < regions.size(); ++r) {
    const auto& active = regions[r].active;
    auto in_region = [&](int dom) {
      return std::find(active.begin(), active.end(), dom) != active.end();
    };
    for (const ReactionTerm& term : model.reaction.terms) {
      if (!in_region(model.species.domain_of(term.target))) continue;
      bool gated_in = true;
      for (int g : term.gate) gated_in = gated_in && in_region(g);
      if (!gated_in) continue;
      auto& coef = maps[r][term.exponents];
      if (coef.empty()) coef.assign(static_cast<std::size_t>(m), 0.0);
      coef[static_cast<std::size_t>(term.target - 1)] += term.coeff;
    }
  }
  return maps;
}

int monomial_degree(const std::vector<int>& e) {
  int d = 0;
  for (int v : e) d += v;
  return d;
}

struct LexStage {
  std::vector<double> objective;
};

// Runs stages in order, pinning each optimum with a <= constraint before the
// next. Returns the final solution (status from the first failing stage).
lp::Solution lexicographic(lp::Problem& prob, std::span<const LexStage> stages) {
  lp::Solution sol;
  for (const LexStage& stage : stages) {
    sol = prob.minimize(stage.objective);
    if (!sol.ok()) return sol;
    std::vector<int> idx;
    std::vector<double> coef;
    for (std::size_t v = 0; v < stage.objective.size(); ++v) {
      if (stage.objective[v] != 0.0) {
        idx.push_back(static_cast<int>(v));
        coef.push_back(stage.objective[v]);
      }
    }
    prob.add_le(idx, coef, sol.objective + 1e-9 * (1.0 + std::abs(sol.objective)));
  }
  return sol;
}

struct BalSymbolic {
  bool feasible = false;
  std::vector<double> b;
  double K1 = 0.0, K2 = 0.0;
};

BalSymbolic fit_bal_symbolic(const ModelSpec& model, const std::vector<RegionSignature>& regions,
                             const CheckerConfig& cfg) {
  const int m = model.species_count();
  const auto maps = region_monomials(model, regions);

  lp::Problem prob;
  std::vector<int> b_var(static_cast<std::size_t>(m));
  for (int k = 0; k < m; ++k) b_var[static_cast<std::size_t>(k)] = prob.add_variable(1.0, cfg.var_cap);
  const int k1 = prob.add_variable(-lp::infinity(), lp::infinity());
  const int k2 = prob.add_variable(0.0, lp::infinity());

  for (std::size_t r = 0; r < regions.size(); ++r) {
    std::vector<bool> linear_seen(static_cast<std::size_t>(m), false);
    for (const auto& [expo, coef] : maps[r]) {
      std::vector<int> idx;
      std::vector<double> cf;
      for (int k = 0; k < m; ++k) {
        if (coef[static_cast<std::size_t>(k)] != 0.0) {
          idx.push_back(b_var[static_cast<std::size_t>(k)]);
          cf.push_back(coef[static_cast<std::size_t>(k)]);
        }
      }
      const int deg = monomial_degree(expo);
      if (deg == 0) {
        idx.push_back(k2);
        cf.push_back(-1.0);
        prob.add_le(idx, cf, 0.0);
      } else if (deg == 1) {
        int sp = 0;
        for (int k = 0; k < m; ++k) {
          if (expo[static_cast<std::size_t>(k)] == 1) sp = k;
        }
        linear_seen[static_cast<std::size_t>(sp)] = true;
        idx.push_back(k1);
        cf.push_back(-1.0);
        prob.add_le(idx, cf, 0.0);
      } else {
        prob.add_le(idx, cf, 0.0);
      }
    }
    // Every species present in the region draws on the K1 budget, including
    // those with no linear monomial; that pins K1 >= 0 unless all linear
    // coefficients are strictly negative.
    for (int k = 1; k <= m; ++k) {
      const int dom = model.species.domain_of(k);
      const auto& active = regions[r].active;
      if (std::find(active.begin(), active.end(), dom) == active.end()) continue;
      if (linear_seen[static_cast<std::size_t>(k - 1)]) continue;
      const int idx1[] = {k1};
      const double cf1[] = {-1.0};
      prob.add_le(idx1, cf1, 0.0);
    }
  }

  const int nv = prob.variable_count();
  auto objective_for = [&](std::initializer_list<std::pair<int, double>> entries) {
    LexStage stage;
    stage.objective.assign(static_cast<std::size_t>(nv), 0.0);
    for (auto [v, c] : entries) stage.objective[static_cast<std::size_t>(v)] = c;
    return stage;
  };
  std::vector<LexStage> stages;
  stages.push_back(objective_for({{k1, 1.0}}));
  stages.push_back(objective_for({{k2, 1.0}}));
  LexStage sum_b;
  sum_b.objective.assign(static_cast<std::size_t>(nv), 0.0);
  for (int k = 0; k < m; ++k) sum_b.objective[static_cast<std::size_t>(b_var[static_cast<std::size_t>(k)])] = 1.0;
  stages.push_back(sum_b);

  lp::Solution sol = lexicographic(prob, stages);
  BalSymbolic out;
  if (!sol.ok()) return out;
  out.feasible = true;
  out.b.resize(static_cast<std::size_t>(m));
  for (int k = 0; k < m; ++k) out.b[static_cast<std::size_t>(k)] = sol.x[static_cast<std::size_t>(b_var[static_cast<std::size_t>(k)])];
  out.K1 = sol.x[static_cast<std::size_t>(k1)];
  out.K2 = sol.x[static_cast<std::size_t>(k2)];

  const double snap = 1e-9 * coeff_scale(model);
  if (std::abs(out.K1) <= snap) out.K1 = 0.0;
  if (std::abs(out.K2) <= snap) out.K2 = 0.0;
  for (double& v : out.b) {
    const double r = std::round(v);
    if (std::abs(v - r) <= 1e-7 * std::max(1.0, std::abs(v))) v = r;
  }
  return out;
}

struct BalSample {
  bool feasible = false;
  std::vector<double> b;
  double K1 = 0.0, K2 = 0.0;
};

// Sample-range LP with row generation: constraints sum_k b_k f_k(s) <=
// K1 chi_u(s) + K2 over the cloud, K1, K2 >= 0, lexicographic
// (K1, K2, sum b). Only certifies the inequality up to u_max.
BalSample fit_bal_samples(const ModelSpec& model, const SampleCloud& cloud,
                          const CheckerConfig& cfg) {
  const int m = model.species_count();
  const double tol = kCertTol * coeff_scale(model);

  std::vector<std::size_t> active;
  for (std::size_t s = 0; s < cloud.samples.size(); s += 97) active.push_back(s);

  BalSample out;
  for (int round = 0; round < 40; ++round) {
    lp::Problem prob;
    std::vector<int> b_var(static_cast<std::size_t>(m));
    for (int k = 0; k < m; ++k) b_var[static_cast<std::size_t>(k)] = prob.add_variable(1.0, cfg.var_cap);
    const int k1 = prob.add_variable(0.0, lp::infinity());
    const int k2 = prob.add_variable(0.0, lp::infinity());

    for (std::size_t s : active) {
      const auto& sample = cloud.samples[s];
      std::vector<int> idx;
      std::vector<double> cf;
      for (int k = 0; k < m; ++k) {
        if (sample.f[static_cast<std::size_t>(k)] != 0.0) {
          idx.push_back(b_var[static_cast<std::size_t>(k)]);
          cf.push_back(sample.f[static_cast<std::size_t>(k)]);
        }
      }
      idx.push_back(k1);
      cf.push_back(-sample.chi_u_sum);
      idx.push_back(k2);
      cf.push_back(-1.0);
      prob.add_le(idx, cf, 0.0);
    }

    const int nv = prob.variable_count();
    std::vector<LexStage> stages(3);
    stages[0].objective.assign(static_cast<std::size_t>(nv), 0.0);
    stages[0].objective[static_cast<std::size_t>(k1)] = 1.0;
    stages[1].objective.assign(static_cast<std::size_t>(nv), 0.0);
    stages[1].objective[static_cast<std::size_t>(k2)] = 1.0;
    stages[2].objective.assign(static_cast<std::size_t>(nv), 0.0);
    for (int k = 0; k < m; ++k) stages[2].objective[static_cast<std::size_t>(b_var[static_cast<std::size_t>(k)])] = 1.0;

    lp::Solution sol = lexicographic(prob, stages);
    if (!sol.ok()) return out;

    std::vector<double> b(static_cast<std::size_t>(m));
    for (int k = 0; k < m; ++k) b[static_cast<std::size_t>(k)] = sol.x[static_cast<std::size_t>(b_var[static_cast<std::size_t>(k)])];
    const double K1 = sol.x[static_cast<std::size_t>(k1)];
    const double K2 = sol.x[static_cast<std::size_t>(k2)];

    // Collect the worst violated rows and iterate.
    std::vector<std::pair<double, std::size_t>> violations;
    for (std::size_t s = 0; s < cloud.samples.size(); ++s) {
      const auto& sample = cloud.samples[s];
      double lhs = 0.0;
      for (int k = 0; k < m; ++k) lhs += b[static_cast<std::size_t>(k)] * sample.f[static_cast<std::size_t>(k)];
      const double gap = lhs - (K1 * sample.chi_u_sum + K2);
      if (gap > tol) violations.emplace_back(gap, s);
    }
    if (violations.empty()) {
      out.feasible = true;
      out.b = std::move(b);
      out.K1 = K1;
      out.K2 = K2;
      const double snap = 1e-9 * coeff_scale(model);
      if (out.K1 <= snap) out.K1 = 0.0;
      if (out.K2 <= snap) out.K2 = 0.0;
      for (double& v : out.b) {
        const double r = std::round(v);
        if (std::abs(v - r) <= 1e-7 * std::max(1.0, std::abs(v))) v = r;
      }
      return out;
    }
    std::sort(violations.rbegin(), violations.rend());
    const std::size_t add = std::min<std::size_t>(violations.size(), 256);
    for (std::size_t i = 0; i < add; ++i) active.push_back(violations[i].second);
    std::sort(active.begin(), active.end());
    active.erase(std::unique(active.begin(), active.end()), active.end());
  }
  return out;
}

}  // namespace

BalReport fit_mass_control(const ModelSpec& model, const SampleCloud& cloud,
                           const CheckerConfig& cfg) {
  BalReport report;
  const int m = model.species_count();

  const BalSymbolic sym = fit_bal_symbolic(model, cloud.regions, cfg);
  const BalSample smp = fit_bal_samples(model, cloud, cfg);
  report.sample_feasible = smp.feasible;
  report.sample_b = smp.b;
  report.sample_K1 = smp.K1;
  report.sample_K2 = smp.K2;

  if (sym.feasible) {
    report.feasible = true;
    report.symbolic = true;
    report.b = sym.b;
    report.K1 = sym.K1;
    report.K2 = sym.K2;
  } else if (smp.feasible) {
    // No exact term-by-term certificate; the sample fit only holds on the
    // sampled range and is reported as such.
    report.feasible = false;
    report.symbolic = false;
    report.b = smp.b;
    report.K1 = smp.K1;
    report.K2 = smp.K2;
    report.note = "no term-domination certificate; sample fit valid only for u <= " +
                  std::to_string(cloud.u_max);
  } else {
    report.feasible = false;
    report.note = "mass-control LP infeasible";
  }

  if (!report.b.empty()) {
    double worst = -std::numeric_limits<double>::infinity();
    for (const auto& s : cloud.samples) {
      double lhs = 0.0;
      for (int k = 0; k < m; ++k) lhs += report.b[static_cast<std::size_t>(k)] * s.f[static_cast<std::size_t>(k)];
      worst = std::max(worst, lhs - (report.K1 * s.chi_u_sum + report.K2));
    }
    report.residual = worst;
  }
  return report;
}

PolyReport fit_growth_exponent(const ModelSpec& model, const SampleCloud& cloud) {
  PolyReport report;
  int l = 0;
  double c = 0.0;
  for (const ReactionTerm& t : model.reaction.terms) {
    if (t.coeff == 0.0) continue;
    l = std::max(l, t.total_degree());
    c += std::abs(t.coeff);
  }
  report.l = static_cast<double>(l);
  report.C = c;

  double worst = -std::numeric_limits<double>::infinity();
  for (const auto& s : cloud.samples) {
    const double rhs = report.C * std::pow(s.chi_u_sum + 1.0, report.l);
    for (double fk : s.f) worst = std::max(worst, fk - rhs);
  }
  report.residual = cloud.samples.empty() ? 0.0 : worst;
  return report;
}

std::vector<double> default_r_grid(int dim) {
  const double limit = 1.0 + 2.0 / dim;
  std::vector<double> grid = {1.0, 1.25, 1.5, 1.75, 2.0 - 1e-6};
  for (int r = 2; r < limit; ++r) grid.push_back(static_cast<double>(r));
  std::sort(grid.begin(), grid.end());
  grid.erase(std::unique(grid.begin(), grid.end()), grid.end());
  std::erase_if(grid, [&](double r) { return r < 1.0 || r >= limit; });
  return grid;
}

namespace {

struct IntSymbolic {
  bool feasible = false;
  std::vector<int> perm;  // species ids in row order
  std::vector<std::vector<double>> A;
};

// Feasibility of the term-domination form of the intermediate-sum condition
// at integer cap `deg_cap` = floor(r): every monomial of (A f_Oj)_i with
// total degree above the cap must have a non-positive coefficient.
IntSymbolic fit_int_symbolic(const ModelSpec& model, int domain_j,
                             const std::vector<RegionSignature>& regions,
                             const std::vector<MonomialMap>& maps, int deg_cap,
                             const CheckerConfig& cfg) {
  std::vector<int> base = model.species.group(domain_j);
  std::sort(base.begin(), base.end());
  const int nj = static_cast<int>(base.size());
  if (nj > 6) throw std::invalid_argument("intermediate-sum search supports groups of size <= 6");

  std::vector<int> perm = base;
  IntSymbolic out;
  do {
    lp::Problem prob;
    // diag(i): variable index; below (i,l): pair (pos, neg) or single var
    std::vector<int> diag(static_cast<std::size_t>(nj));
    std::vector<std::vector<std::array<int, 2>>> below(static_cast<std::size_t>(nj));
    for (int i = 0; i < nj; ++i) {
      diag[static_cast<std::size_t>(i)] = prob.add_variable(1.0, cfg.var_cap);
      below[static_cast<std::size_t>(i)].resize(static_cast<std::size_t>(i));
      for (int l = 0; l < i; ++l) {
        const int pos = prob.add_variable(0.0, cfg.var_cap);
        const int neg = cfg.nonneg_below_diag ? -1 : prob.add_variable(0.0, cfg.var_cap);
        below[static_cast<std::size_t>(i)][static_cast<std::size_t>(l)] = {pos, neg};
      }
    }

    auto entry_vars = [&](int i, int l) {  // A[i][l] = pos - neg
      return below[static_cast<std::size_t>(i)][static_cast<std::size_t>(l)];
    };

    for (std::size_t r = 0; r < regions.size(); ++r) {
      const auto& active = regions[r].active;
      if (std::find(active.begin(), active.end(), domain_j) == active.end()) continue;
      for (const auto& [expo, coef] : maps[r]) {
        if (monomial_degree(expo) <= deg_cap) continue;
        for (int i = 0; i < nj; ++i) {
          std::vector<int> idx;
          std::vector<double> cf;
          for (int l = 0; l <= i; ++l) {
            const double c = coef[static_cast<std::size_t>(perm[static_cast<std::size_t>(l)] - 1)];
            if (c == 0.0) continue;
            if (l == i) {
              idx.push_back(diag[static_cast<std::size_t>(i)]);
              cf.push_back(c);
            } else {
              const auto [pos, neg] = entry_vars(i, l);
              idx.push_back(pos);
              cf.push_back(c);
              if (neg >= 0) {
                idx.push_back(neg);
                cf.push_back(-c);
              }
            }
          }
          if (!idx.empty()) prob.add_le(idx, cf, 0.0);
        }
      }
    }

    std::vector<double> objective(static_cast<std::size_t>(prob.variable_count()), 1.0);
    lp::Solution sol = prob.minimize(objective);
    if (sol.ok()) {
      out.feasible = true;
      out.perm = perm;
      out.A.assign(static_cast<std::size_t>(nj),
                   std::vector<double>(static_cast<std::size_t>(nj), 0.0));
      for (int i = 0; i < nj; ++i) {
        out.A[static_cast<std::size_t>(i)][static_cast<std::size_t>(i)] =
            sol.x[static_cast<std::size_t>(diag[static_cast<std::size_t>(i)])];
        for (int l = 0; l < i; ++l) {
          const auto [pos, neg] = entry_vars(i, l);
          double v = sol.x[static_cast<std::size_t>(pos)];
          if (neg >= 0) v -= sol.x[static_cast<std::size_t>(neg)];
          out.A[static_cast<std::size_t>(i)][static_cast<std::size_t>(l)] = v;
        }
      }
      for (auto& row : out.A) {
        for (double& v : row) {
          const double rv = std::round(v);
          if (std::abs(v - rv) <= 1e-7 * std::max(1.0, std::abs(v))) v = rv;
        }
      }
      return out;
    }
  } while (std::next_permutation(perm.begin(), perm.end()));
  return out;
}

double int_cert_constant(int domain_j,
                         const std::vector<RegionSignature>& regions,
                         const std::vector<MonomialMap>& maps, const IntSymbolic& sym) {
  const int nj = static_cast<int>(sym.perm.size());
  double c_max = 0.0;
  for (std::size_t r = 0; r < regions.size(); ++r) {
    const auto& active = regions[r].active;
    if (std::find(active.begin(), active.end(), domain_j) == active.end()) continue;
    for (int i = 0; i < nj; ++i) {
      double row_sum = 0.0;
      for (const auto& [expo, coef] : maps[r]) {
        double c = 0.0;
        for (int l = 0; l <= i; ++l) {
          c += sym.A[static_cast<std::size_t>(i)][static_cast<std::size_t>(l)] *
               coef[static_cast<std::size_t>(sym.perm[static_cast<std::size_t>(l)] - 1)];
        }
        if (c > 0.0) row_sum += c;
      }
      c_max = std::max(c_max, row_sum);
    }
  }
  return c_max;
}

IntWitness worst_rate_witness(const ModelSpec& model, int domain_j, const SampleCloud& cloud,
                              double r) {
  IntWitness w;
  double best = -std::numeric_limits<double>::infinity();
  for (const auto& s : cloud.samples) {
    const auto& active = cloud.regions[static_cast<std::size_t>(s.region)].active;
    if (std::find(active.begin(), active.end(), domain_j) == active.end()) continue;
    for (int k : model.species.group(domain_j)) {
      const double lhs = s.f[static_cast<std::size_t>(k - 1)];
      const double rate = lhs / std::pow(s.chi_u_sum + 1.0, r);
      if (rate > best) {
        best = rate;
        w.present = true;
        w.x = s.x;
        w.u = s.u;
        w.species = k;
        w.lhs = lhs;
        w.required_C = rate;
      }
    }
  }
  return w;
}

}  // namespace

IntReport fit_intermediate_sum(const ModelSpec& model, int domain_j, const SampleCloud& cloud,
                               std::span<const double> r_grid, const CheckerConfig& cfg) {
  if (r_grid.empty()) throw std::invalid_argument("r_grid must not be empty");
  for (std::size_t i = 1; i < r_grid.size(); ++i) {
    if (!(r_grid[i] > r_grid[i - 1])) {
      throw std::invalid_argument("r_grid must be strictly ascending");
    }
  }
  IntReport report;
  report.domain = domain_j;
  const auto maps = region_monomials(model, cloud.regions);
  const double tol = kCertTol * coeff_scale(model);

  std::map<int, IntSymbolic> by_cap;  // memoized over floor(r)
  for (double r : r_grid) {
    const int cap = static_cast<int>(std::floor(r + 1e-12));
    auto it = by_cap.find(cap);
    if (it == by_cap.end()) {
      it = by_cap.emplace(cap, fit_int_symbolic(model, domain_j, cloud.regions, maps, cap, cfg)).first;
    }
    const IntSymbolic& sym = it->second;

    IntAttempt attempt;
    attempt.r = r;
    attempt.feasible = sym.feasible;
    if (!sym.feasible) {
      attempt.reason = "a positive monomial of total degree > " + std::to_string(cap) +
                       " survives every admissible row combination";
      attempt.witness = worst_rate_witness(model, domain_j, cloud, r);
      report.attempts.push_back(std::move(attempt));
      continue;
    }

    const double c_cert = int_cert_constant(domain_j, cloud.regions, maps, sym);
    // Sample post-check of the emitted certificate.
    double worst = -std::numeric_limits<double>::infinity();
    const int nj = static_cast<int>(sym.perm.size());
    for (const auto& s : cloud.samples) {
      const auto& active = cloud.regions[static_cast<std::size_t>(s.region)].active;
      if (std::find(active.begin(), active.end(), domain_j) == active.end()) continue;
      const double rhs = c_cert * std::pow(s.chi_u_sum + 1.0, r);
      for (int i = 0; i < nj; ++i) {
        double lhs = 0.0;
        for (int l = 0; l <= i; ++l) {
          lhs += sym.A[static_cast<std::size_t>(i)][static_cast<std::size_t>(l)] *
                 s.f[static_cast<std::size_t>(sym.perm[static_cast<std::size_t>(l)] - 1)];
        }
        worst = std::max(worst, lhs - rhs);
      }
    }
    if (worst > tol) {
      attempt.feasible = false;
      attempt.reason = "certificate failed the sample post-check";
      report.attempts.push_back(std::move(attempt));
      continue;
    }

    report.attempts.push_back(attempt);
    report.feasible = true;
    report.ordering = sym.perm;
    report.A = sym.A;
    report.r = r;
    report.C = c_cert;
    report.residual = worst == -std::numeric_limits<double>::infinity() ? 0.0 : worst;
    return report;
  }
  return report;
}

StructureReport certify(const ModelSpec& model, const CheckerConfig& cfg) {
  model.validate();
  StructureReport report;
  report.u_max = cfg.u_max;

  SampleCloud cloud = build_sample_cloud(model, cfg);
  report.qp = check_quasi_positivity(model, cloud);
  report.bal = fit_mass_control(model, cloud, cfg);
  report.poly = fit_growth_exponent(model, cloud);

  const std::vector<double> grid = cfg.r_grid.empty() ? default_r_grid(model.dim()) : cfg.r_grid;
  bool ints_ok = true;
  double r_max = 0.0;
  for (int j = 1; j <= model.domains.count(); ++j) {
    IntReport ir = fit_intermediate_sum(model, j, cloud, grid, cfg);
    ints_ok = ints_ok && ir.feasible;
    if (ir.feasible) r_max = std::max(r_max, ir.r);
    report.ints.push_back(std::move(ir));
  }
  report.r = r_max;
  report.growth_limit = 1.0 + 2.0 / model.dim();
  report.growth_ok = ints_ok && r_max < report.growth_limit;
  report.uniform_bound =
      report.bal.feasible && (report.bal.K1 < 0.0 || (report.bal.K1 == 0.0 && report.bal.K2 == 0.0));
  report.corollary1 =
      model.dim() == 1 && report.qp.ok && report.bal.feasible && report.poly.l <= 2.0;

  // Held-out soundness pass: every emitted inequality re-verified on a fresh
  // cloud ten times the size before the report goes out.
  CheckerConfig held = cfg;
  held.seed = cfg.seed + 1;
  held.samples = cfg.samples * 10;
  SampleCloud fresh = build_sample_cloud(model, held);
  const int m = model.species_count();
  auto fail = [&](const std::string& what) {
    if (!report.validation.empty()) report.validation += "; ";
    report.validation += what;
  };
  long qp_viol = 0;
  for (const auto& s : fresh.samples) {
    for (int k = 1; k <= m; ++k) {
      if (report.qp.ok && s.u[static_cast<std::size_t>(k - 1)] == 0.0 &&
          s.f[static_cast<std::size_t>(k - 1)] < -1e-12) {
        ++qp_viol;
      }
    }
    const double scale_pt = 1.0 + std::abs(s.chi_u_sum);
    if (report.bal.feasible) {
      double lhs = 0.0;
      for (int k = 0; k < m; ++k) lhs += report.bal.b[static_cast<std::size_t>(k)] * s.f[static_cast<std::size_t>(k)];
      const double rhs = report.bal.K1 * s.chi_u_sum + report.bal.K2;
      if (lhs - rhs > kCertTol * (scale_pt + std::abs(lhs) + std::abs(rhs))) {
        fail("mass-control certificate violated on held-out samples");
        report.bal.feasible = false;
      }
    }
    const double poly_rhs = report.poly.C * std::pow(s.chi_u_sum + 1.0, report.poly.l);
    for (int k = 0; k < m; ++k) {
      if (s.f[static_cast<std::size_t>(k)] - poly_rhs >
          kCertTol * (scale_pt + std::abs(poly_rhs) + std::abs(s.f[static_cast<std::size_t>(k)]))) {
        fail("growth certificate violated on held-out samples");
      }
    }
  }
  if (qp_viol > 0) {
    fail("quasi-positivity violated on held-out samples");
    report.qp.ok = false;
  }
  for (IntReport& ir : report.ints) {
    if (!ir.feasible) continue;
    const int nj = static_cast<int>(ir.ordering.size());
    for (const auto& s : fresh.samples) {
      const auto& active = fresh.regions[static_cast<std::size_t>(s.region)].active;
      if (std::find(active.begin(), active.end(), ir.domain) == active.end()) continue;
      const double rhs = ir.C * std::pow(s.chi_u_sum + 1.0, ir.r);
      for (int i = 0; i < nj; ++i) {
        double lhs = 0.0;
        for (int l = 0; l <= i; ++l) {
          lhs += ir.A[static_cast<std::size_t>(i)][static_cast<std::size_t>(l)] *
                 s.f[static_cast<std::size_t>(ir.ordering[static_cast<std::size_t>(l)] - 1)];
        }
        if (lhs - rhs > kCertTol * (1.0 + std::abs(lhs) + std::abs(rhs))) {
          fail("intermediate-sum certificate violated on held-out samples (domain " +
               std::to_string(ir.domain) + ")");
          ir.feasible = false;
          break;
        }
      }
      if (!ir.feasible) break;
    }
  }
  bool ints_still_ok = true;
  for (const IntReport& ir : report.ints) ints_still_ok = ints_still_ok && ir.feasible;
  report.growth_ok = report.growth_ok && ints_still_ok;

  report.all_ok = report.qp.ok && report.bal.feasible && report.growth_ok;
  return report;
}

}  // namespace rdlab
