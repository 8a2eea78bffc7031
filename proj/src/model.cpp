#include "rdlab/model.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <tuple>

namespace rdlab {

namespace {

double pow_int(double base, int e) {
  double v = 1.0;
  for (int i = 0; i < e; ++i) v *= base;
  return v;
}

}  // namespace

SpeciesMap SpeciesMap::from_sigma(std::vector<int> sigma, int domain_count) {
  SpeciesMap map;
  map.sigma = std::move(sigma);
  map.groups.assign(static_cast<std::size_t>(domain_count), {});
  for (std::size_t k = 0; k < map.sigma.size(); ++k) {
    const int j = map.sigma[k];
    if (j < 1 || j > domain_count) {
      throw std::invalid_argument("species " + std::to_string(k + 1) +
                                  " references unknown domain " + std::to_string(j));
    }
    map.groups[static_cast<std::size_t>(j - 1)].push_back(static_cast<int>(k + 1));
  }
  return map;
}

int ReactionTerm::total_degree() const {
  int d = 0;
  for (int e : exponents) d += e;
  return d;
}

double DiffusionField::alpha() const {
  double a = std::numeric_limits<double>::infinity();
  for (const PerSpecies& s : per_species) {
    a = std::min(a, s.base);
    for (const auto& [sig, v] : s.region_values) a = std::min(a, v);
  }
  return a;
}

double DiffusionField::value(int k, const std::vector<int>& signature) const {
  const PerSpecies& s = per_species[static_cast<std::size_t>(k - 1)];
  for (const auto& [sig, v] : s.region_values) {
    if (sig == signature) return v;
  }
  return s.base;
}

double InitialCondition::eval(std::span<const double> x) const {
  if (kind == Kind::constant) return value;
  double q = 0.0;
  for (std::size_t d = 0; d < x.size(); ++d) {
    const double dx = x[d] - center[d];
    q += dx * dx;
  }
  return amplitude * std::exp(-q / (2.0 * width * width));
}

void ModelSpec::validate() const {
  domains.validate();
  const int m = species_count();
  const int n_dom = domains.count();
  if (m < 1) throw std::invalid_argument("model has no species");
  if (reaction.m != m) throw std::invalid_argument("reaction field species count mismatch");
  if (static_cast<int>(initial.size()) != m) {
    throw std::invalid_argument("initial data must cover every species");
  }
  if (static_cast<int>(diffusion.per_species.size()) != m) {
    throw std::invalid_argument("diffusion must cover every species");
  }
  if (!(epsilon >= 0.0 && epsilon < 1.0)) {
    throw std::invalid_argument("epsilon must lie in [0, 1)");
  }

  std::vector<int> check_sigma = species.sigma;
  SpeciesMap rebuilt = SpeciesMap::from_sigma(check_sigma, n_dom);
  if (rebuilt.groups != species.groups) {
    throw std::invalid_argument("species groups inconsistent with sigma");
  }

  for (const auto& s : diffusion.per_species) {
    if (!(s.base > 0.0)) throw std::invalid_argument("diffusion values must be positive");
    for (const auto& [sig, v] : s.region_values) {
      if (!(v > 0.0)) throw std::invalid_argument("diffusion values must be positive");
      for (int id : sig) domains.at(id);
    }
  }

  for (const InitialCondition& ic : initial) {
    if (ic.kind == InitialCondition::Kind::constant) {
      if (!(ic.value >= 0.0)) throw std::invalid_argument("initial data must be non-negative");
    } else {
      if (!(ic.amplitude >= 0.0) || !(ic.width > 0.0)) {
        throw std::invalid_argument("gaussian initial data needs amplitude >= 0, width > 0");
      }
    }
  }

  for (const ReactionTerm& term : reaction.terms) {
    if (term.target < 1 || term.target > m) {
      throw std::invalid_argument("reaction term targets unknown species");
    }
    if (static_cast<int>(term.exponents.size()) != m) {
      throw std::invalid_argument("reaction term exponent vector must have length m");
    }
    if (term.gate.empty()) throw std::invalid_argument("reaction term needs a gate");
    if (!std::is_sorted(term.gate.begin(), term.gate.end())) {
      throw std::invalid_argument("gate ids must be ascending");
    }
    for (int g : term.gate) domains.at(g);
    const int target_dom = species.domain_of(term.target);
    for (int j = 1; j <= m; ++j) {
      const int e = term.exponents[static_cast<std::size_t>(j - 1)];
      if (e < 0) throw std::invalid_argument("exponents must be non-negative");
      if (e == 0) continue;
      const int dom_j = species.domain_of(j);
      const bool in_gate = std::find(term.gate.begin(), term.gate.end(), dom_j) != term.gate.end();
      if (!in_gate && dom_j != target_dom) {
        throw std::invalid_argument(
            "term for species " + std::to_string(term.target) + " reads species " +
            std::to_string(j) + " whose habitat does not cover the gate region");
      }
      if (!domains.overlap_nonempty(dom_j, target_dom)) {
        throw std::invalid_argument("term reads a species with disjoint habitat");
      }
    }
    if (!std::isfinite(term.coeff)) throw std::invalid_argument("term coefficient must be finite");
  }
}

void ModelSpec::eval_reaction(double /*t*/, std::span<const double> x,
                              std::span<const double> u, std::span<double> out) const {
  const int m = species_count();
  for (int k = 0; k < m; ++k) {
    if (u[static_cast<std::size_t>(k)] < 0.0) {
      throw std::invalid_argument("eval_reaction requires u >= 0 (component " +
                                  std::to_string(k + 1) + " is negative)");
    }
    out[static_cast<std::size_t>(k)] = 0.0;
  }
  for (const ReactionTerm& term : reaction.terms) {
    if (!domains.contains(species.domain_of(term.target), x)) continue;
    bool active = true;
    for (int g : term.gate) {
      if (!domains.contains(g, x)) {
        active = false;
        break;
      }
    }
    if (!active) continue;
    double val = term.coeff;
    for (int j = 0; j < m; ++j) {
      const int e = term.exponents[static_cast<std::size_t>(j)];
      if (e > 0) val *= pow_int(u[static_cast<std::size_t>(j)], e);
    }
    out[static_cast<std::size_t>(term.target - 1)] += val;
  }
}

void ModelSpec::truncate_reaction(double t, std::span<const double> x,
                                  std::span<const double> u_raw,
                                  std::span<double> out) const {
  const int m = species_count();
  std::vector<double> u_plus(static_cast<std::size_t>(m));
  for (int k = 0; k < m; ++k) {
    u_plus[static_cast<std::size_t>(k)] = std::max(u_raw[static_cast<std::size_t>(k)], 0.0);
  }
  eval_reaction(t, x, u_plus, out);
  if (epsilon > 0.0) {
    double sum = 0.0;
    for (int k = 0; k < m; ++k) sum += std::abs(out[static_cast<std::size_t>(k)]);
    const double divisor = 1.0 + epsilon * sum;
    for (int k = 0; k < m; ++k) out[static_cast<std::size_t>(k)] /= divisor;
  }
}

double ModelSpec::lipschitz_bound(double box_radius) const {
  if (!(box_radius > 0.0)) throw std::invalid_argument("box_radius must be positive");
  std::vector<double> per_species(static_cast<std::size_t>(species_count()), 0.0);
  for (const ReactionTerm& term : reaction.terms) {
    const int deg = term.total_degree();
    if (deg == 0) continue;
    per_species[static_cast<std::size_t>(term.target - 1)] +=
        std::abs(term.coeff) * deg * pow_int(box_radius, deg - 1);
  }
  double bound = 0.0;
  for (double v : per_species) bound = std::max(bound, v);
  return bound;
}

bool operator==(const ModelSpec& a, const ModelSpec& b) {
  auto dom_eq = [](const Domain& x, const Domain& y) {
    return x.id == y.id && x.dim == y.dim && x.lo == y.lo && x.hi == y.hi;
  };
  if (a.domains.count() != b.domains.count()) return false;
  for (int j = 0; j < a.domains.count(); ++j) {
    if (!dom_eq(a.domains.domains[static_cast<std::size_t>(j)],
                b.domains.domains[static_cast<std::size_t>(j)])) {
      return false;
    }
  }
  if (a.species.sigma != b.species.sigma) return false;
  auto term_key = [](const ReactionTerm& t) {
    return std::tuple(t.target, t.gate, t.exponents, t.coeff);
  };
  auto ta = a.reaction.terms;
  auto tb = b.reaction.terms;
  auto cmp = [&](const ReactionTerm& x, const ReactionTerm& y) {
    return term_key(x) < term_key(y);
  };
  std::sort(ta.begin(), ta.end(), cmp);
  std::sort(tb.begin(), tb.end(), cmp);
  if (ta.size() != tb.size()) return false;
  for (std::size_t i = 0; i < ta.size(); ++i) {
    if (term_key(ta[i]) != term_key(tb[i])) return false;
  }
  if (a.diffusion.per_species.size() != b.diffusion.per_species.size()) return false;
  for (std::size_t k = 0; k < a.diffusion.per_species.size(); ++k) {
    const auto& da = a.diffusion.per_species[k];
    const auto& db = b.diffusion.per_species[k];
    if (da.base != db.base || da.region_values != db.region_values) return false;
  }
  if (a.initial.size() != b.initial.size()) return false;
  for (std::size_t k = 0; k < a.initial.size(); ++k) {
    const auto& ia = a.initial[k];
    const auto& ib = b.initial[k];
    if (ia.kind != ib.kind || ia.value != ib.value || ia.center != ib.center ||
        ia.width != ib.width || ia.amplitude != ib.amplitude) {
      return false;
    }
  }
  return a.epsilon == b.epsilon;
}

namespace {

Domain box1d(int id, double lo, double hi) {
  Domain d;
  d.id = id;
  d.dim = 1;
  d.lo = {lo, 0.0};
  d.hi = {hi, 0.0};
  return d;
}

Domain box2d(int id, double lx, double hx, double ly, double hy) {
  Domain d;
  d.id = id;
  d.dim = 2;
  d.lo = {lx, ly};
  d.hi = {hx, hy};
  return d;
}

ReactionTerm term(int target, double coeff, std::vector<int> gate, int m,
                  std::vector<std::pair<int, int>> factors) {
  ReactionTerm t;
  t.target = target;
  t.coeff = coeff;
  t.gate = std::move(gate);
  t.exponents.assign(static_cast<std::size_t>(m), 0);
  for (auto [j, e] : factors) t.exponents[static_cast<std::size_t>(j - 1)] = e;
  return t;
}

InitialCondition ic_const(double v) {
  InitialCondition ic;
  ic.kind = InitialCondition::Kind::constant;
  ic.value = v;
  return ic;
}

InitialCondition ic_gauss(std::array<double, 2> center, double width, double amp) {
  InitialCondition ic;
  ic.kind = InitialCondition::Kind::gaussian;
  ic.center = center;
  ic.width = width;
  ic.amplitude = amp;
  return ic;
}

void apply_overrides(ModelSpec& model, const BuiltinParams& p) {
  const int m = model.species_count();
  if (!p.diffusion.empty()) {
    if (static_cast<int>(p.diffusion.size()) != m) {
      throw std::invalid_argument("diffusion override must list one value per species");
    }
    for (int k = 0; k < m; ++k) {
      model.diffusion.per_species[static_cast<std::size_t>(k)].base =
          p.diffusion[static_cast<std::size_t>(k)];
    }
  }
  if (!p.init_amp.empty()) {
    if (static_cast<int>(p.init_amp.size()) != m) {
      throw std::invalid_argument("init_amp override must list one value per species");
    }
    for (int k = 0; k < m; ++k) {
      InitialCondition& ic = model.initial[static_cast<std::size_t>(k)];
      if (ic.kind == InitialCondition::Kind::constant) {
        ic.value = p.init_amp[static_cast<std::size_t>(k)];
      } else {
        ic.amplitude = p.init_amp[static_cast<std::size_t>(k)];
      }
    }
  }
  model.epsilon = p.epsilon;
}

// Two hosts and a vector: species (u1..u6) = (phi, psi, alpha, beta, v, w) on
// habitats Omega_1, Omega_2, Omega_3 with Omega_1 and Omega_3 disjoint.
ModelSpec build_ex1(const BuiltinParams& p) {
  ModelSpec model;
  model.domains.domains = {box2d(1, 0.0, 2.0, 0.0, 2.0), box2d(2, 1.0, 3.0, 0.0, 2.0),
                           box2d(3, 2.5, 4.5, 0.0, 2.0)};
  model.species = SpeciesMap::from_sigma({1, 1, 2, 2, 3, 3}, 3);
  const int m = 6;
  model.reaction.m = m;
  auto& terms = model.reaction.terms;
  // host 1: susceptible/infected exchange driven by the infected vector
  terms.push_back(term(1, -p.k1, {1, 2}, m, {{1, 1}, {4, 1}}));
  terms.push_back(term(1, p.lambda1, {1}, m, {{2, 1}}));
  terms.push_back(term(2, p.k1, {1, 2}, m, {{1, 1}, {4, 1}}));
  terms.push_back(term(2, -p.lambda1, {1}, m, {{2, 1}}));
  // vector
  terms.push_back(term(3, -p.k2, {1, 2}, m, {{3, 1}, {2, 1}}));
  terms.push_back(term(3, -p.k3, {2, 3}, m, {{3, 1}, {5, 1}}));
  terms.push_back(term(3, p.lambda2, {2}, m, {{4, 1}}));
  terms.push_back(term(4, p.k2, {1, 2}, m, {{3, 1}, {2, 1}}));
  terms.push_back(term(4, p.k3, {2, 3}, m, {{3, 1}, {5, 1}}));
  terms.push_back(term(4, -p.lambda2, {2}, m, {{4, 1}}));
  // host 2
  terms.push_back(term(5, -p.k4, {2, 3}, m, {{5, 1}, {4, 1}}));
  terms.push_back(term(6, p.k4, {2, 3}, m, {{5, 1}, {4, 1}}));
  terms.push_back(term(6, -p.lambda3, {3}, m, {{6, 1}}));

  model.diffusion.per_species.assign(static_cast<std::size_t>(m), {});
  const double d_default[m] = {0.1, 0.1, 0.1, 0.1, 0.1, 0.1};
  for (int k = 0; k < m; ++k) model.diffusion.per_species[static_cast<std::size_t>(k)].base = d_default[k];

  model.initial = {
      ic_const(1.0),                        // phi
      ic_gauss({1.5, 1.0}, 0.3, 0.5),       // psi: infection seeded in the overlap
      ic_const(1.0),                        // alpha
      ic_const(0.05),                       // beta
      ic_const(0.8),                        // v
      ic_const(0.3),                        // w
  };
  apply_overrides(model, p);
  model.validate();
  return model;
}

// A + B <-> C: A on Omega_1, B and C on Omega_2, rate gated to the overlap.
ModelSpec build_ex2(const BuiltinParams& p) {
  ModelSpec model;
  model.domains.domains = {box2d(1, 0.0, 2.0, 0.0, 2.0), box2d(2, 1.0, 3.0, 0.0, 2.0)};
  model.species = SpeciesMap::from_sigma({1, 2, 2}, 2);
  const int m = 3;
  model.reaction.m = m;
  auto& terms = model.reaction.terms;
  terms.push_back(term(1, p.b, {1, 2}, m, {{3, 1}}));
  terms.push_back(term(1, -p.a, {1, 2}, m, {{1, 1}, {2, 1}}));
  terms.push_back(term(2, p.b, {1, 2}, m, {{3, 1}}));
  terms.push_back(term(2, -p.a, {1, 2}, m, {{1, 1}, {2, 1}}));
  terms.push_back(term(3, p.a, {1, 2}, m, {{1, 1}, {2, 1}}));
  terms.push_back(term(3, -p.b, {1, 2}, m, {{3, 1}}));

  model.diffusion.per_species.assign(static_cast<std::size_t>(m), {});
  model.diffusion.per_species[0].base = 0.1;
  model.diffusion.per_species[1].base = 0.12;
  model.diffusion.per_species[2].base = 0.15;

  model.initial = {
      ic_gauss({0.5, 1.0}, 0.35, 1.0),
      ic_gauss({2.5, 1.0}, 0.35, 1.0),
      ic_const(0.0),
  };
  apply_overrides(model, p);
  model.validate();
  return model;
}

// 1D follow-up: Omega_1 = (0,2), Omega_2 = (1,3), one species each.
ModelSpec build_ex3(const BuiltinParams& p) {
  ModelSpec model;
  model.domains.domains = {box1d(1, 0.0, 2.0), box1d(2, 1.0, 3.0)};
  model.species = SpeciesMap::from_sigma({1, 2}, 2);
  const int m = 2;
  model.reaction.m = m;
  auto& terms = model.reaction.terms;
  terms.push_back(term(1, p.a, {1, 2}, m, {{2, 2}}));
  terms.push_back(term(1, -p.a, {1, 2}, m, {{1, 1}, {2, 1}}));
  terms.push_back(term(2, p.a, {1, 2}, m, {{1, 1}, {2, 1}}));
  terms.push_back(term(2, -p.a, {1, 2}, m, {{2, 2}}));

  model.diffusion.per_species.assign(static_cast<std::size_t>(m), {});
  model.diffusion.per_species[0].base = 0.1;
  model.diffusion.per_species[1].base = 0.1;

  model.initial = {
      ic_gauss({0.5, 0.0}, 0.2, 1.0),
      ic_gauss({2.5, 0.0}, 0.2, 1.0),
  };
  apply_overrides(model, p);
  model.validate();
  return model;
}

}  // namespace

ModelSpec builtin(const std::string& name, const BuiltinParams& params) {
  for (double v : params.diffusion) {
    if (!(v > 0.0)) throw std::invalid_argument("builtin: diffusion values must be positive");
  }
  if (name == "ex1") return build_ex1(params);
  if (name == "ex2") return build_ex2(params);
  if (name == "ex3") return build_ex3(params);
  throw std::invalid_argument("unknown builtin model '" + name + "'");
}

}  // namespace rdlab
