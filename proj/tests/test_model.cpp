#include <doctest.h>

#include <array>
#include <cmath>
#include <random>

#include "rdlab/model.hpp"

using namespace rdlab;

namespace {

std::vector<double> eval(const ModelSpec& model, std::array<double, 2> x,
                         std::vector<double> u) {
  std::vector<double> f(u.size());
  model.eval_reaction(0.0, std::span<const double>(x.data(), static_cast<std::size_t>(model.dim())), u, f);
  return f;
}

std::vector<double> truncate(const ModelSpec& model, std::array<double, 2> x,
                             std::vector<double> u) {
  std::vector<double> f(u.size());
  model.truncate_reaction(0.0, std::span<const double>(x.data(), static_cast<std::size_t>(model.dim())), u, f);
  return f;
}

const std::array<double, 2> kOverlap2{1.5, 1.0};    // inside Omega_1 and Omega_2 of ex1/ex2
const std::array<double, 2> kOnlyOmega1{0.5, 1.0};  // inside Omega_1 only

}  // namespace

TEST_CASE("ex2 reaction: equilibrium at u = (1,1,1) in the overlap") {
  const auto model = builtin("ex2");
  const auto f = eval(model, kOverlap2, {1.0, 1.0, 1.0});
  for (double v : f) CHECK(v == doctest::Approx(0.0).epsilon(1e-15));
}

TEST_CASE("ex2 reaction: gate inactive outside the overlap") {
  const auto model = builtin("ex2");
  const auto f = eval(model, kOnlyOmega1, {2.0, 3.0, 1.0});
  CHECK(f[0] == 0.0);
}

TEST_CASE("ex2 reaction: hand-evaluated value in the overlap") {
  const auto model = builtin("ex2");
  const auto f = eval(model, kOverlap2, {2.0, 3.0, 0.0});
  CHECK(f[0] == doctest::Approx(-6.0).epsilon(1e-14));
  CHECK(f[1] == doctest::Approx(-6.0).epsilon(1e-14));
  CHECK(f[2] == doctest::Approx(6.0).epsilon(1e-14));
}

TEST_CASE("truncation with eps = 0 matches plain evaluation at u_+") {
  auto model = builtin("ex2");
  model.epsilon = 0.0;
  const auto f = eval(model, kOverlap2, {2.0, 3.0, 0.0});
  const auto g = truncate(model, kOverlap2, {2.0, 3.0, 0.0});
  for (std::size_t k = 0; k < f.size(); ++k) CHECK(f[k] == g[k]);
}

TEST_CASE("truncation divisor arithmetic") {
  auto model = builtin("ex2");
  model.epsilon = 0.1;
  // f = (-6, -6, 6): divisor 1 + 0.1 * 18 = 2.8
  const auto g = truncate(model, kOverlap2, {2.0, 3.0, 0.0});
  CHECK(g[0] == doctest::Approx(-15.0 / 7.0).epsilon(1e-14));
  CHECK(g[1] == doctest::Approx(-15.0 / 7.0).epsilon(1e-14));
  CHECK(g[2] == doctest::Approx(15.0 / 7.0).epsilon(1e-14));
}

TEST_CASE("truncation applies the positive part before evaluating") {
  auto model = builtin("ex2");
  model.epsilon = 0.0;
  // u_+ = (0, 3, 0) has no active monomial left in ex2
  const auto g = truncate(model, kOverlap2, {-1.0, 3.0, 0.0});
  CHECK(g[0] == 0.0);
  CHECK(g[1] == 0.0);
  CHECK(g[2] == 0.0);

  // the 1D model keeps its u_2^2 source at the same positive part
  auto m3 = builtin("ex3");
  m3.epsilon = 0.0;
  std::array<double, 2> x{1.5, 0.0};
  const auto g3 = truncate(m3, x, {-1.0, 3.0});
  CHECK(g3[0] == doctest::Approx(9.0).epsilon(1e-14));
  CHECK(g3[1] == doctest::Approx(-9.0).epsilon(1e-14));
}

TEST_CASE("eval_reaction rejects negative input") {
  const auto model = builtin("ex2");
  std::vector<double> f(3);
  std::vector<double> u = {-0.5, 1.0, 1.0};
  CHECK_THROWS_AS(
      model.eval_reaction(0.0, std::span<const double>(kOverlap2.data(), 2), u, f),
      std::invalid_argument);
}

TEST_CASE("ex2: weighted components sum to zero identically") {
  const auto model = builtin("ex2");
  std::mt19937 rng(11);
  std::uniform_real_distribution<double> unif(0.0, 5.0);
  for (int trial = 0; trial < 200; ++trial) {
    const std::array<double, 2> x{unif(rng) * 0.6, unif(rng) * 0.4};
    const auto f = eval(model, x, {unif(rng), unif(rng), unif(rng)});
    CHECK(f[0] + f[1] + 2.0 * f[2] == doctest::Approx(0.0).epsilon(1e-13));
  }
}

TEST_CASE("ex1: total reaction is non-positive on the positive cone") {
  const auto model = builtin("ex1");
  std::mt19937 rng(13);
  std::uniform_real_distribution<double> ux(0.0, 4.5);
  std::uniform_real_distribution<double> uy(0.0, 2.0);
  std::uniform_real_distribution<double> uu(0.0, 8.0);
  for (int trial = 0; trial < 300; ++trial) {
    const std::array<double, 2> x{ux(rng), uy(rng)};
    std::vector<double> u(6);
    for (double& v : u) v = uu(rng);
    const auto f = eval(model, x, u);
    double sum = 0.0;
    for (double v : f) sum += v;
    CHECK(sum <= 1e-12);
  }
}

TEST_CASE("ex3 habitats") {
  const auto model = builtin("ex3");
  CHECK(model.dim() == 1);
  CHECK(model.domains.at(1).lo[0] == 0.0);
  CHECK(model.domains.at(1).hi[0] == 2.0);
  CHECK(model.domains.at(2).lo[0] == 1.0);
  CHECK(model.domains.at(2).hi[0] == 3.0);
  // overlap (1, 2)
  std::array<double, 2> inside{1.5, 0.0};
  std::array<double, 2> outside{0.5, 0.0};
  CHECK(model.domains.contains(2, std::span<const double>(inside.data(), 1)));
  CHECK_FALSE(model.domains.contains(2, std::span<const double>(outside.data(), 1)));
}

TEST_CASE("lipschitz bound on gated monomials") {
  BuiltinParams quad;
  quad.b = 0.0;  // keep only the +-a u1 u2 terms
  CHECK(builtin("ex2", quad).lipschitz_bound(3.0) == doctest::Approx(6.0).epsilon(1e-14));

  BuiltinParams off;
  off.a = 0.0;
  off.b = 0.0;
  CHECK(builtin("ex2", off).lipschitz_bound(5.0) == 0.0);

  BuiltinParams lin;
  lin.a = 0.0;
  lin.b = 2.5;  // a linear term contributes its coefficient independent of R
  CHECK(builtin("ex2", lin).lipschitz_bound(100.0) == doctest::Approx(2.5).epsilon(1e-14));
}

TEST_CASE("masking: components ignore species absent at x") {
  const auto model = builtin("ex1");
  std::mt19937 rng(17);
  std::uniform_real_distribution<double> uu(0.0, 3.0);
  // x in Omega_1 \ Omega_2: species 3..6 are absent there, so components of
  // species living on Omega_1 may not react to them.
  const std::array<double, 2> x{0.5, 1.0};
  for (int trial = 0; trial < 100; ++trial) {
    std::vector<double> u(6), v(6);
    for (int k = 0; k < 6; ++k) u[static_cast<std::size_t>(k)] = v[static_cast<std::size_t>(k)] = uu(rng);
    for (int k = 2; k < 6; ++k) v[static_cast<std::size_t>(k)] = uu(rng);
    const auto fu = eval(model, x, u);
    const auto fv = eval(model, x, v);
    CHECK(fu[0] == fv[0]);
    CHECK(fu[1] == fv[1]);
  }
}

TEST_CASE("truncation cap and sign preservation") {
  auto model = builtin("ex1");
  const double eps = 0.05;
  model.epsilon = eps;
  std::mt19937 rng(19);
  std::uniform_real_distribution<double> ux(0.0, 4.5);
  std::uniform_real_distribution<double> uy(0.0, 2.0);
  std::uniform_real_distribution<double> uu(-3.0, 12.0);
  const int m = 6;
  for (int trial = 0; trial < 300; ++trial) {
    const std::array<double, 2> x{ux(rng), uy(rng)};
    std::vector<double> u(m), f(m), g(m);
    for (double& v : u) v = uu(rng);
    model.truncate_reaction(0.0, std::span<const double>(x.data(), 2), u, g);
    std::vector<double> up(m);
    for (int k = 0; k < m; ++k) up[static_cast<std::size_t>(k)] = std::max(u[static_cast<std::size_t>(k)], 0.0);
    model.eval_reaction(0.0, std::span<const double>(x.data(), 2), up, f);
    double total = 0.0;
    for (int k = 0; k < m; ++k) {
      CHECK(std::abs(g[static_cast<std::size_t>(k)]) <= std::abs(f[static_cast<std::size_t>(k)]) + 1e-15);
      CHECK(g[static_cast<std::size_t>(k)] * f[static_cast<std::size_t>(k)] >= 0.0);
      total += std::abs(g[static_cast<std::size_t>(k)]);
    }
    CHECK(total <= m / eps + 1e-9);
  }
}

TEST_CASE("quasi-positivity survives truncation at sampled points") {
  auto model = builtin("ex1");
  model.epsilon = 0.2;
  std::mt19937 rng(23);
  std::uniform_real_distribution<double> ux(0.0, 4.5);
  std::uniform_real_distribution<double> uy(0.0, 2.0);
  std::uniform_real_distribution<double> uu(0.0, 6.0);
  for (int trial = 0; trial < 200; ++trial) {
    const std::array<double, 2> x{ux(rng), uy(rng)};
    std::vector<double> u(6), g(6);
    for (double& v : u) v = uu(rng);
    const int zeroed = trial % 6;
    u[static_cast<std::size_t>(zeroed)] = 0.0;
    model.truncate_reaction(0.0, std::span<const double>(x.data(), 2), u, g);
    CHECK(g[static_cast<std::size_t>(zeroed)] >= -1e-12);
  }
}

TEST_CASE("mass-control inheritance under truncation") {
  auto model = builtin("ex2");
  model.epsilon = 0.3;
  auto plain = model;
  plain.epsilon = 0.0;
  const std::vector<double> b = {1.0, 1.0, 2.0};
  std::mt19937 rng(29);
  std::uniform_real_distribution<double> uu(0.0, 10.0);
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<double> u(3), f(3), g(3);
    for (double& v : u) v = uu(rng);
    model.truncate_reaction(0.0, std::span<const double>(kOverlap2.data(), 2), u, g);
    plain.eval_reaction(0.0, std::span<const double>(kOverlap2.data(), 2), u, f);
    double bf = 0.0, bg = 0.0;
    for (int k = 0; k < 3; ++k) {
      bf += b[static_cast<std::size_t>(k)] * f[static_cast<std::size_t>(k)];
      bg += b[static_cast<std::size_t>(k)] * g[static_cast<std::size_t>(k)];
    }
    CHECK(bg <= std::max(0.0, bf) + 1e-12);
  }
}

TEST_CASE("builtin rejects bad input") {
  CHECK_THROWS_AS(builtin("ex9"), std::invalid_argument);
  BuiltinParams p;
  p.diffusion = {0.1, -1.0, 0.1};
  CHECK_THROWS_AS(builtin("ex2", p), std::invalid_argument);
}

TEST_CASE("term invariant: reads must be covered by the gate region") {
  auto model = builtin("ex2");
  ReactionTerm bad;
  bad.target = 1;  // species on Omega_1
  bad.coeff = 1.0;
  bad.gate = {1};
  bad.exponents = {0, 1, 0};  // reads species 2 (Omega_2) outside any shared gate
  model.reaction.terms.push_back(bad);
  CHECK_THROWS_AS(model.validate(), std::invalid_argument);
}
