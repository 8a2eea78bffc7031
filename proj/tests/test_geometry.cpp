#include <doctest.h>

#include <algorithm>
#include <random>
#include <set>

#include "rdlab/geometry.hpp"

using namespace rdlab;

namespace {

Domain interval(int id, double lo, double hi) {
  Domain d;
  d.id = id;
  d.dim = 1;
  d.lo = {lo, 0.0};
  d.hi = {hi, 0.0};
  return d;
}

Domain rect(int id, double lx, double hx, double ly, double hy) {
  Domain d;
  d.id = id;
  d.dim = 2;
  d.lo = {lx, ly};
  d.hi = {hx, hy};
  return d;
}

// Independent point-in-open-box check used as the mask oracle.
bool inside(const Domain& d, const std::array<double, 2>& x) {
  for (int a = 0; a < d.dim; ++a) {
    if (x[a] <= d.lo[a] || x[a] >= d.hi[a]) return false;
  }
  return true;
}

std::set<std::vector<int>> signatures(const RegionPartition& part) {
  std::set<std::vector<int>> sigs;
  for (const auto& r : part.regions) sigs.insert(r.active);
  return sigs;
}

}  // namespace

TEST_CASE("build_mesh: 1d uniform partition") {
  const auto mesh = build_mesh(interval(1, 0.0, 2.0), std::vector<int>{4});
  CHECK(mesh.cell_count() == 4);
  CHECK(mesh.h[0] == doctest::Approx(0.5).epsilon(1e-15));
  const double expected[] = {0.25, 0.75, 1.25, 1.75};
  for (int c = 0; c < 4; ++c) CHECK(mesh.center(c)[0] == doctest::Approx(expected[c]).epsilon(1e-15));
}

TEST_CASE("build_mesh: 2d cells and volumes") {
  const auto mesh = build_mesh(rect(1, 0.0, 1.0, 0.0, 1.0), std::vector<int>{2, 2});
  CHECK(mesh.cell_count() == 4);
  CHECK(mesh.cell_volume() == doctest::Approx(0.25).epsilon(1e-15));
  // total volume matches the box measure
  CHECK(mesh.cell_volume() * mesh.cell_count() ==
        doctest::Approx(mesh.domain.measure()).epsilon(1e-12));
}

TEST_CASE("build_mesh: rejects non-positive cell counts") {
  CHECK_THROWS_AS(build_mesh(interval(1, 0.0, 2.0), std::vector<int>{0}), std::invalid_argument);
  CHECK_THROWS_AS(build_mesh(rect(1, 0.0, 1.0, 0.0, 1.0), std::vector<int>{4, -1}),
                  std::invalid_argument);
}

TEST_CASE("overlap_mask: interval pair") {
  const auto mesh = build_mesh(interval(1, 0.0, 2.0), std::vector<int>{4});
  const auto mask = overlap_mask(mesh, interval(2, 1.0, 3.0));
  REQUIRE(mask.flags.size() == 4);
  // oracle: centers 0.25, 0.75, 1.25, 1.75 against (1, 3)
  CHECK(mask.flags[0] == 0);
  CHECK(mask.flags[1] == 0);
  CHECK(mask.flags[2] == 1);
  CHECK(mask.flags[3] == 1);
}

TEST_CASE("overlap_mask: self mask is all true") {
  const auto dom = rect(1, 0.0, 2.0, 0.0, 1.0);
  const auto mesh = build_mesh(dom, std::vector<int>{8, 4});
  CHECK(overlap_mask(mesh, dom).all());
}

TEST_CASE("overlap_mask: disjoint habitats give an all-false mask") {
  // three-domain layout with Omega_1 and Omega_3 disjoint
  const auto o1 = rect(1, 0.0, 2.0, 0.0, 2.0);
  const auto o3 = rect(3, 2.5, 4.5, 0.0, 2.0);
  const auto mesh = build_mesh(o1, std::vector<int>{16, 16});
  CHECK_FALSE(overlap_mask(mesh, o3).any());
  const auto mesh3 = build_mesh(o3, std::vector<int>{16, 16});
  CHECK_FALSE(overlap_mask(mesh3, o1).any());
}

TEST_CASE("overlap_mask agrees with direct point checks on random boxes") {
  std::mt19937 rng(7);
  std::uniform_real_distribution<double> unif(-2.0, 2.0);
  for (int trial = 0; trial < 50; ++trial) {
    auto bounds = [&](Domain& d) {
      for (int a = 0; a < d.dim; ++a) {
        double lo = unif(rng), hi = unif(rng);
        if (lo > hi) std::swap(lo, hi);
        d.lo[a] = lo;
        d.hi[a] = hi + 0.1;
      }
    };
    Domain a = rect(1, 0, 1, 0, 1), b = rect(2, 0, 1, 0, 1);
    bounds(a);
    bounds(b);
    const auto mesh = build_mesh(a, std::vector<int>{5, 7});
    const auto mask = overlap_mask(mesh, b);
    for (int c = 0; c < mesh.cell_count(); ++c) {
      CHECK(static_cast<bool>(mask.flags[c]) == inside(b, mesh.center(c)));
    }
  }
}

TEST_CASE("overlap_mask: refinement keeps decided cells decided") {
  const auto a = interval(1, 0.0, 2.0);
  const auto b = interval(2, 1.0, 3.0);
  const auto coarse = build_mesh(a, std::vector<int>{8});
  const auto fine = build_mesh(a, std::vector<int>{16});
  const auto mc = overlap_mask(coarse, b);
  const auto mf = overlap_mask(fine, b);
  for (int c = 0; c < coarse.cell_count(); ++c) {
    const double left = a.lo[0] + c * coarse.h[0];
    const double right = left + coarse.h[0];
    const bool fully_inside = left >= b.lo[0] && right <= b.hi[0];
    const bool fully_outside = right <= b.lo[0] || left >= b.hi[0];
    if (fully_inside || fully_outside) {
      CHECK(mf.flags[2 * c] == mc.flags[c]);
      CHECK(mf.flags[2 * c + 1] == mc.flags[c]);
    }
  }
}

TEST_CASE("region_partition: three-domain chain layout") {
  DomainSet ds;
  ds.domains = {rect(1, 0.0, 2.0, 0.0, 2.0), rect(2, 1.0, 3.0, 0.0, 2.0),
                rect(3, 2.5, 4.5, 0.0, 2.0)};
  const auto part = region_partition(ds, 3);
  const auto sigs = signatures(part);
  const std::set<std::vector<int>> expected = {{1}, {1, 2}, {2}, {2, 3}, {3}};
  CHECK(sigs == expected);
  CHECK(sigs.count({1, 3}) == 0);
  CHECK(sigs.count({1, 2, 3}) == 0);
  // the empty intersections are reported as not found
  CHECK(std::find(part.not_found.begin(), part.not_found.end(), std::vector<int>{1, 3}) !=
        part.not_found.end());
}

TEST_CASE("region_partition: single domain") {
  DomainSet ds;
  ds.domains = {interval(1, 0.0, 1.0)};
  const auto part = region_partition(ds, 2);
  REQUIRE(part.regions.size() == 1);
  CHECK(part.regions[0].active == std::vector<int>{1});
  CHECK(part.not_found.empty());
}

TEST_CASE("region_partition: nested boxes") {
  DomainSet ds;
  ds.domains = {rect(1, 0.0, 4.0, 0.0, 4.0), rect(2, 1.0, 2.0, 1.0, 2.0)};
  const auto sigs = signatures(region_partition(ds, 2));
  const std::set<std::vector<int>> expected = {{1}, {1, 2}};
  CHECK(sigs == expected);
}

TEST_CASE("region_partition: representative points match their signature") {
  DomainSet ds;
  ds.domains = {interval(1, 0.0, 2.0), interval(2, 1.0, 3.0)};
  for (const auto& region : region_partition(ds, 4).regions) {
    for (const auto& p : region.representative_points) {
      CHECK(ds.signature_at(std::span<const double>(p.data(), 1)) == region.active);
    }
  }
}

TEST_CASE("domain invariants") {
  CHECK_THROWS_AS(interval(1, 2.0, 2.0).validate(), std::invalid_argument);
  DomainSet ds;
  ds.domains = {interval(1, 0.0, 1.0), interval(1, 0.0, 1.0)};
  CHECK_THROWS_AS(ds.validate(), std::invalid_argument);
  DomainSet gap;
  gap.domains = {interval(1, 0.0, 1.0)};
  gap.domains.push_back(interval(3, 0.0, 1.0));
  CHECK_THROWS_AS(gap.validate(), std::invalid_argument);
}

TEST_CASE("union measure of overlapping boxes") {
  DomainSet ds;
  ds.domains = {rect(1, 0.0, 2.0, 0.0, 2.0), rect(2, 1.0, 3.0, 0.0, 2.0)};
  CHECK(ds.union_measure() == doctest::Approx(6.0).epsilon(1e-12));
}
