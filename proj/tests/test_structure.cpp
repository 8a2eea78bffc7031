#include <doctest.h>

#include <cmath>

#include "rdlab/structure.hpp"

using namespace rdlab;

namespace {

CheckerConfig fast_cfg() {
  CheckerConfig cfg;
  cfg.samples = 400;
  return cfg;
}

// single species on one habitat with f = +u^2: mass control must fail
ModelSpec quadratic_growth_model() {
  ModelSpec model;
  Domain d;
  d.id = 1;
  d.dim = 1;
  d.lo = {0.0, 0.0};
  d.hi = {1.0, 0.0};
  model.domains.domains = {d};
  model.species = SpeciesMap::from_sigma({1}, 1);
  model.reaction.m = 1;
  ReactionTerm t;
  t.target = 1;
  t.coeff = 1.0;
  t.gate = {1};
  t.exponents = {2};
  model.reaction.terms = {t};
  model.diffusion.per_species.assign(1, {});
  model.initial.assign(1, {});
  return model;
}

}  // namespace

TEST_CASE("sample cloud covers zero faces and regions") {
  const auto model = builtin("ex2");
  const auto cloud = build_sample_cloud(model, fast_cfg());
  CHECK(cloud.regions.size() == 3);  // {1}, {1,2}, {2}
  for (int k = 0; k < 3; ++k) {
    bool found = false;
    for (const auto& s : cloud.samples) {
      if (s.u[static_cast<std::size_t>(k)] == 0.0) found = true;
    }
    CHECK(found);
  }
}

TEST_CASE("quasi-positivity: built-ins pass, a constant sink fails with witness") {
  const auto cfg = fast_cfg();
  for (const char* name : {"ex1", "ex2", "ex3"}) {
    const auto model = builtin(name);
    const auto cloud = build_sample_cloud(model, cfg);
    const auto qp = check_quasi_positivity(model, cloud);
    CHECK(qp.ok);
    CHECK(qp.checked > 0);
  }

  auto model = builtin("ex2");
  ReactionTerm sink;
  sink.target = 1;
  sink.coeff = -1.0;
  sink.gate = {1};
  sink.exponents = {0, 0, 0};
  model.reaction.terms.push_back(sink);
  const auto cloud = build_sample_cloud(model, cfg);
  const auto qp = check_quasi_positivity(model, cloud);
  CHECK_FALSE(qp.ok);
  REQUIRE(!qp.violations.empty());
  CHECK(qp.violations[0].k == 1);
  CHECK(qp.violations[0].value < 0.0);
}

TEST_CASE("mass control: ex2 certificate b = (1,1,2), K1 = K2 = 0") {
  const auto model = builtin("ex2");
  const auto cfg = fast_cfg();
  const auto cloud = build_sample_cloud(model, cfg);
  const auto bal = fit_mass_control(model, cloud, cfg);
  REQUIRE(bal.feasible);
  CHECK(bal.symbolic);
  CHECK(bal.K1 == 0.0);
  CHECK(bal.K2 == 0.0);
  REQUIRE(bal.b.size() == 3);
  CHECK(bal.b[0] == doctest::Approx(1.0).epsilon(1e-7));
  CHECK(bal.b[1] == doctest::Approx(1.0).epsilon(1e-7));
  CHECK(bal.b[2] == doctest::Approx(2.0).epsilon(1e-7));
  CHECK(bal.residual <= 1e-9);
  // the sample-range LP agrees here
  CHECK(bal.sample_feasible);
  CHECK(bal.sample_K1 == 0.0);
  CHECK(bal.sample_K2 == 0.0);
}

TEST_CASE("mass control: ex1 gets the all-ones vector") {
  const auto model = builtin("ex1");
  const auto cfg = fast_cfg();
  const auto cloud = build_sample_cloud(model, cfg);
  const auto bal = fit_mass_control(model, cloud, cfg);
  REQUIRE(bal.feasible);
  CHECK(bal.K1 == 0.0);
  CHECK(bal.K2 == 0.0);
  for (double bk : bal.b) CHECK(bk == doctest::Approx(1.0).epsilon(1e-7));
}

TEST_CASE("mass control: zero reaction") {
  BuiltinParams off;
  off.a = 0.0;
  off.b = 0.0;
  const auto model = builtin("ex2", off);
  const auto cfg = fast_cfg();
  const auto cloud = build_sample_cloud(model, cfg);
  const auto bal = fit_mass_control(model, cloud, cfg);
  REQUIRE(bal.feasible);
  CHECK(bal.K1 == 0.0);
  CHECK(bal.K2 == 0.0);
  for (double bk : bal.b) CHECK(bk == doctest::Approx(1.0).epsilon(1e-9));
}

TEST_CASE("mass control: pure quadratic growth is infeasible") {
  const auto model = quadratic_growth_model();
  const auto cfg = fast_cfg();
  const auto cloud = build_sample_cloud(model, cfg);
  const auto bal = fit_mass_control(model, cloud, cfg);
  CHECK_FALSE(bal.feasible);
}

TEST_CASE("mass control: constant source yields K2 > 0 with K1 = 0") {
  auto model = builtin("ex1");
  ReactionTerm source;
  source.target = 2;
  source.coeff = 0.05;
  source.gate = {1};
  source.exponents.assign(6, 0);
  model.reaction.terms.push_back(source);
  const auto cfg = fast_cfg();
  const auto cloud = build_sample_cloud(model, cfg);
  const auto bal = fit_mass_control(model, cloud, cfg);
  REQUIRE(bal.feasible);
  CHECK(bal.K1 == 0.0);
  CHECK(bal.K2 == doctest::Approx(0.05).epsilon(1e-6));
}

TEST_CASE("growth exponent") {
  const auto cfg = fast_cfg();
  {
    const auto model = builtin("ex2");
    const auto cloud = build_sample_cloud(model, cfg);
    const auto poly = fit_growth_exponent(model, cloud);
    CHECK(poly.l == 2.0);
    CHECK(poly.residual <= 1e-9);
  }
  {
    BuiltinParams lin;
    lin.a = 0.0;
    const auto model = builtin("ex2", lin);
    const auto cloud = build_sample_cloud(model, cfg);
    CHECK(fit_growth_exponent(model, cloud).l == 1.0);
  }
  {
    BuiltinParams off;
    off.a = 0.0;
    off.b = 0.0;
    const auto model = builtin("ex2", off);
    const auto cloud = build_sample_cloud(model, cfg);
    const auto poly = fit_growth_exponent(model, cloud);
    CHECK(poly.l == 0.0);
    CHECK(poly.C == 0.0);
  }
}

TEST_CASE("intermediate sum: ex2 domain 2 gets the unit lower-triangular matrix") {
  const auto model = builtin("ex2");
  const auto cfg = fast_cfg();
  const auto cloud = build_sample_cloud(model, cfg);
  const auto grid = default_r_grid(model.dim());
  const auto ir = fit_intermediate_sum(model, 2, cloud, grid, cfg);
  REQUIRE(ir.feasible);
  CHECK(ir.r == 1.0);
  CHECK(ir.ordering == std::vector<int>{2, 3});
  REQUIRE(ir.A.size() == 2);
  CHECK(ir.A[0][0] == doctest::Approx(1.0).epsilon(1e-7));
  CHECK(ir.A[0][1] == 0.0);
  CHECK(ir.A[1][0] == doctest::Approx(1.0).epsilon(1e-7));
  CHECK(ir.A[1][1] == doctest::Approx(1.0).epsilon(1e-7));
}

TEST_CASE("intermediate sum: every ex1 domain at r = 1") {
  const auto model = builtin("ex1");
  const auto cfg = fast_cfg();
  const auto cloud = build_sample_cloud(model, cfg);
  const auto grid = default_r_grid(model.dim());
  for (int j = 1; j <= 3; ++j) {
    const auto ir = fit_intermediate_sum(model, j, cloud, grid, cfg);
    REQUIRE(ir.feasible);
    CHECK(ir.r == 1.0);
    CHECK(ir.A[0][0] == doctest::Approx(1.0).epsilon(1e-7));
    CHECK(ir.A[1][0] == doctest::Approx(1.0).epsilon(1e-7));
    CHECK(ir.A[1][1] == doctest::Approx(1.0).epsilon(1e-7));
  }
}

TEST_CASE("intermediate sum: ex3 needs r = 2 and reports the r = 1 witness") {
  const auto model = builtin("ex3");
  const auto cfg = fast_cfg();
  const auto cloud = build_sample_cloud(model, cfg);
  const auto grid = default_r_grid(model.dim());
  const auto ir = fit_intermediate_sum(model, 1, cloud, grid, cfg);
  REQUIRE(ir.feasible);
  CHECK(ir.r == 2.0);
  bool saw_r1 = false;
  for (const auto& at : ir.attempts) {
    if (at.r == 1.0) {
      saw_r1 = true;
      CHECK_FALSE(at.feasible);
      CHECK(at.witness.present);
      CHECK(at.witness.required_C > 1.0);  // grows with u_max, here ~ u_max^2 / u_max
    }
  }
  CHECK(saw_r1);
}

TEST_CASE("intermediate sum: feasibility is monotone in r on the sample route") {
  const auto model = builtin("ex3");
  const auto cfg = fast_cfg();
  const auto cloud = build_sample_cloud(model, cfg);
  const std::vector<double> grid = {2.0, 2.5};
  for (int j : {1, 2}) {
    const auto at2 = fit_intermediate_sum(model, j, cloud, std::vector<double>{2.0}, cfg);
    REQUIRE(at2.feasible);
    const auto at25 = fit_intermediate_sum(model, j, cloud, std::vector<double>{2.5}, cfg);
    CHECK(at25.feasible);  // same certificate passes with a larger exponent
  }
}

TEST_CASE("certify: ex1 passes everything with the uniform-bound flag") {
  const auto report = certify(builtin("ex1"), fast_cfg());
  CHECK(report.qp.ok);
  CHECK(report.bal.feasible);
  CHECK(report.growth_ok);
  CHECK(report.r == 1.0);
  CHECK(report.uniform_bound);
  CHECK(report.all_ok);
  CHECK(report.validation.empty());
}

TEST_CASE("certify: ex3 accepts r = 2 in one dimension") {
  const auto report = certify(builtin("ex3"), fast_cfg());
  CHECK(report.all_ok);
  CHECK(report.r == 2.0);
  CHECK(report.growth_limit == 3.0);
  CHECK(report.growth_ok);
  CHECK(report.corollary1);  // n = 1 and l = 2
}

TEST_CASE("certify: quadratic growth model is rejected") {
  const auto report = certify(quadratic_growth_model(), fast_cfg());
  CHECK_FALSE(report.bal.feasible);
  CHECK_FALSE(report.all_ok);
}

TEST_CASE("scale coherence: scaling the coefficients scales the constants") {
  BuiltinParams scaled;
  const double c = 3.0;
  scaled.a = c;
  scaled.b = c;
  const auto base = builtin("ex2");
  const auto big = builtin("ex2", scaled);
  const auto cfg = fast_cfg();
  const auto cloud0 = build_sample_cloud(base, cfg);
  const auto cloud1 = build_sample_cloud(big, cfg);

  const auto poly0 = fit_growth_exponent(base, cloud0);
  const auto poly1 = fit_growth_exponent(big, cloud1);
  CHECK(poly1.C == doctest::Approx(c * poly0.C).epsilon(1e-12));

  const auto bal0 = fit_mass_control(base, cloud0, cfg);
  const auto bal1 = fit_mass_control(big, cloud1, cfg);
  REQUIRE(bal0.feasible);
  REQUIRE(bal1.feasible);
  // K's scale (both zero here) while b stays feasible unchanged
  CHECK(bal1.K1 == doctest::Approx(c * bal0.K1).epsilon(1e-9));
  CHECK(bal1.K2 == doctest::Approx(c * bal0.K2).epsilon(1e-9));
  for (std::size_t k = 0; k < bal0.b.size(); ++k) {
    CHECK(bal1.b[k] == doctest::Approx(bal0.b[k]).epsilon(1e-7));
  }

  const auto grid = default_r_grid(base.dim());
  const auto ir0 = fit_intermediate_sum(base, 2, cloud0, grid, cfg);
  const auto ir1 = fit_intermediate_sum(big, 2, cloud1, grid, cfg);
  REQUIRE(ir0.feasible);
  REQUIRE(ir1.feasible);
  CHECK(ir1.r == ir0.r);
  CHECK(ir1.C == doctest::Approx(c * ir0.C).epsilon(1e-9));
  for (std::size_t i = 0; i < ir0.A.size(); ++i) {
    for (std::size_t l = 0; l < ir0.A.size(); ++l) {
      CHECK(ir1.A[i][l] == doctest::Approx(ir0.A[i][l]).epsilon(1e-7));
    }
  }
}

TEST_CASE("default r grids per dimension") {
  const auto g1 = default_r_grid(1);
  CHECK(g1.front() == 1.0);
  CHECK(g1.back() == 2.0);
  const auto g2 = default_r_grid(2);
  CHECK(g2.front() == 1.0);
  CHECK(g2.back() < 2.0);
}
