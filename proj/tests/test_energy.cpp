#include <doctest.h>

#include <cmath>
#include <random>

#include "rdlab/energy.hpp"
#include "rdlab/model.hpp"
#include "rdlab/solver.hpp"

using namespace rdlab;

namespace {

// Independent oracle for H_p: dynamic program over species,
//   T[j][q] = sum over beta_{1..j}, |beta| = q of multin * theta^{beta^2} v^beta
// via T[j][q] = sum_s C(q, s) theta_j^{s^2} v_j^s T[j-1][q-s].
double energy_dp(std::span<const double> v, std::span<const double> theta, int p) {
  const int n = static_cast<int>(v.size());
  std::vector<double> prev(static_cast<std::size_t>(p + 1), 0.0);
  prev[0] = 1.0;
  for (int j = 0; j < n; ++j) {
    std::vector<double> cur(static_cast<std::size_t>(p + 1), 0.0);
    for (int q = 0; q <= p; ++q) {
      for (int s = 0; s <= q; ++s) {
        double binom = 1.0;
        for (int i = 1; i <= s; ++i) binom *= static_cast<double>(q - s + i) / i;
        cur[static_cast<std::size_t>(q)] += binom *
                                            std::pow(theta[static_cast<std::size_t>(j)],
                                                     static_cast<double>(s) * s) *
                                            std::pow(v[static_cast<std::size_t>(j)], s) *
                                            prev[static_cast<std::size_t>(q - s)];
      }
    }
    prev = std::move(cur);
  }
  return prev[static_cast<std::size_t>(p)];
}

long composition_count(int p, int n) {
  long c = 0;
  for (CompositionIterator it(p, n); it.valid(); it.next()) ++c;
  return c;
}

}  // namespace

TEST_CASE("multinomial energy: p = 0 and p = 1 identities") {
  const std::vector<double> theta = {1.5, 2.0, 0.5};
  const std::vector<double> v = {0.3, 1.2, 2.5};
  CHECK(multinomial_energy(v, theta, 0) == 1.0);
  const double h1 = theta[0] * v[0] + theta[1] * v[1] + theta[2] * v[2];
  CHECK(multinomial_energy(v, theta, 1) == h1);
}

TEST_CASE("multinomial energy: hand-computed values") {
  const std::vector<double> ones = {1.0, 1.0};
  const std::vector<double> v = {2.0, 3.0};
  CHECK(multinomial_energy(v, ones, 2) == doctest::Approx(25.0).epsilon(1e-15));

  const std::vector<double> theta1 = {2.0};
  const std::vector<double> v1 = {3.0};
  CHECK(multinomial_energy(v1, theta1, 2) == doctest::Approx(144.0).epsilon(1e-15));
}

TEST_CASE("multinomial energy: theta = 1 collapses to a plain power") {
  std::mt19937 rng(31);
  std::uniform_real_distribution<double> unif(0.0, 3.0);
  std::uniform_int_distribution<int> dim(1, 6);
  std::uniform_int_distribution<int> deg(0, 8);
  for (int trial = 0; trial < 1000; ++trial) {
    const int n = dim(rng);
    const int p = deg(rng);
    std::vector<double> v(static_cast<std::size_t>(n));
    double sum = 0.0;
    for (double& x : v) {
      x = unif(rng);
      sum += x;
    }
    const std::vector<double> theta(static_cast<std::size_t>(n), 1.0);
    const double got = multinomial_energy(v, theta, p);
    const double want = std::pow(sum, p);
    CHECK(got == doctest::Approx(want).epsilon(1e-12));
  }
}

TEST_CASE("multinomial energy: enumeration agrees with the DP recursion") {
  std::mt19937 rng(37);
  std::uniform_real_distribution<double> unif(0.0, 2.0);
  std::uniform_real_distribution<double> th(0.5, 3.0);
  for (int trial = 0; trial < 300; ++trial) {
    const int n = 1 + trial % 5;
    const int p = trial % 9;
    std::vector<double> v(static_cast<std::size_t>(n)), theta(static_cast<std::size_t>(n));
    for (double& x : v) x = unif(rng);
    for (double& x : theta) x = th(rng);
    const double got = multinomial_energy(v, theta, p);
    const double want = energy_dp(v, theta, p);
    CHECK(got == doctest::Approx(want).epsilon(1e-12));
  }
}

TEST_CASE("composition enumeration counts") {
  // |{beta : |beta| = p}| = C(p + n - 1, n - 1)
  CHECK(composition_count(4, 1) == 1);
  CHECK(composition_count(4, 2) == 5);
  CHECK(composition_count(3, 3) == 10);
  CHECK(composition_count(8, 6) == 1287);
}

TEST_CASE("large p falls back to log space without overflow") {
  const std::vector<double> v = {1.5, 2.5};
  const std::vector<double> theta = {1.0, 1.0};
  const double got = multinomial_energy(v, theta, 12);
  CHECK(got == doctest::Approx(std::pow(4.0, 12)).epsilon(1e-9));
}

TEST_CASE("group energy basics") {
  const auto model = builtin("ex2");
  SolverConfig cfg;
  cfg.cells = {16, 16};
  Simulation sim(model, cfg);
  State zero = sim.initial_state();
  for (auto& f : zero.fields) std::fill(f.begin(), f.end(), 0.0);

  const std::vector<int> group2 = {2, 3};
  const std::vector<double> theta = {1.0, 1.0};
  const MeshedDomain& mesh2 = sim.meshes()[1];
  CHECK(group_energy(zero, group2, theta, 2, mesh2) == 0.0);
  CHECK(group_energy(zero, group2, theta, 0, mesh2) ==
        doctest::Approx(mesh2.domain.measure()).epsilon(1e-12));

  State uniform = zero;
  std::fill(uniform.fields[1].begin(), uniform.fields[1].end(), 1.0);
  std::fill(uniform.fields[2].begin(), uniform.fields[2].end(), 1.0);
  CHECK(group_energy(uniform, group2, theta, 2, mesh2) ==
        doctest::Approx(4.0 * mesh2.domain.measure()).epsilon(1e-12));

  // p = 1 with theta = 1 is the plain L1 sum over the group
  std::mt19937 rng(41);
  std::uniform_real_distribution<double> unif(0.0, 2.0);
  State random = zero;
  for (int k : group2) {
    for (double& x : random.fields[static_cast<std::size_t>(k - 1)]) x = unif(rng);
  }
  double l1 = 0.0;
  for (int k : group2) {
    for (double x : random.fields[static_cast<std::size_t>(k - 1)]) l1 += x;
  }
  l1 *= mesh2.cell_volume();
  CHECK(group_energy(random, group2, theta, 1, mesh2) == doctest::Approx(l1).epsilon(1e-12));
}

TEST_CASE("weighted mass on uniform ex2 state") {
  const auto model = builtin("ex2");
  SolverConfig cfg;
  cfg.cells = {32, 32};
  Simulation sim(model, cfg);
  State state = sim.initial_state();
  for (auto& f : state.fields) std::fill(f.begin(), f.end(), 1.0);

  const std::vector<double> b = {1.0, 1.0, 2.0};
  // both habitats have area 4: 4 + 4 + 2 * 4 = 16
  CHECK(weighted_mass(state, b, sim.meshes(), model.species) ==
        doctest::Approx(16.0).epsilon(1e-12));

  for (auto& f : state.fields) std::fill(f.begin(), f.end(), 0.0);
  CHECK(weighted_mass(state, b, sim.meshes(), model.species) == 0.0);

  const std::vector<double> ones = {1.0, 1.0, 1.0};
  State mixed = state;
  std::fill(mixed.fields[0].begin(), mixed.fields[0].end(), 0.5);
  CHECK(weighted_mass(mixed, ones, sim.meshes(), model.species) ==
        doctest::Approx(2.0).epsilon(1e-12));
}

TEST_CASE("gronwall envelope formulas") {
  CHECK(gronwall_envelope(0.0, 0.0, 3.5, 10.0) == 3.5);
  CHECK(gronwall_envelope(0.0, 2.0, 1.0, 3.0) == doctest::Approx(7.0).epsilon(1e-15));
  CHECK(gronwall_envelope(-1.0, 0.0, 5.0, 1.0) ==
        doctest::Approx(5.0 * std::exp(-1.0)).epsilon(1e-15));
  CHECK(gronwall_envelope(0.5, 1.0, 2.0, 1.0) ==
        doctest::Approx((2.0 + 2.0) * std::exp(0.5) - 2.0).epsilon(1e-15));
}

TEST_CASE("theta positive definiteness check") {
  const std::vector<double> ones = {1.0, 1.0};
  const auto fail = theta_pd_check(ones, 2, 2);
  CHECK_FALSE(fail.ok);
  CHECK(fail.failing_beta == std::vector<int>{0, 0});

  const std::vector<double> good = {1.0, 2.0};
  CHECK(theta_pd_check(good, 2, 2).ok);

  const std::vector<double> single = {1.0};
  CHECK(theta_pd_check(single, 4, 1).ok);
}

TEST_CASE("theta_pd_check scaling monotonicity") {
  std::mt19937 rng(43);
  std::uniform_real_distribution<double> scale(1.0, 8.0);
  for (int p : {2, 3, 4}) {
    for (int nk : {2, 3}) {
      const auto theta = auto_theta(nk, p);
      CHECK(theta_pd_check(theta, p, nk).ok);
      for (int trial = 0; trial < 20; ++trial) {
        auto scaled = theta;
        const double c = scale(rng);
        for (double& v : scaled) v *= c;
        CHECK(theta_pd_check(scaled, p, nk).ok);
      }
    }
  }
}

TEST_CASE("auto theta doubles the largest index first") {
  const auto theta = auto_theta(2, 2);
  CHECK(theta == std::vector<double>{1.0, 2.0});
}

TEST_CASE("ledger rows") {
  const auto model = builtin("ex2");
  SolverConfig cfg;
  cfg.cells = {16, 16};
  Simulation sim(model, cfg);
  const State state = sim.initial_state();

  MassControl mass;
  mass.b = {1.0, 1.0, 2.0};
  const double m0 = weighted_mass(state, mass.b, sim.meshes(), model.species);
  std::vector<EnergyConfig> energies = {EnergyConfig::auto_for(model, 2)};
  const LedgerRow row = ledger_update(state, model, sim.meshes(), mass, m0, energies);

  CHECK(row.t == 0.0);
  CHECK(row.weighted_mass == doctest::Approx(m0).epsilon(1e-15));
  CHECK(row.envelope == doctest::Approx(m0).epsilon(1e-12));  // K1 = K2 = 0
  CHECK(row.lp.size() == 1);
  CHECK(row.min[2] == 0.0);  // species 3 starts at zero
  CHECK(row.sup[0] > 0.9);   // the gaussian bump
}
