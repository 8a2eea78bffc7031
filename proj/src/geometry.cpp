#include "rdlab/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <random>
#include <stdexcept>
#include <string>

namespace rdlab {

namespace {

std::string id_str(int id) { return "domain " + std::to_string(id); }

}  // namespace

bool Domain::contains(std::span<const double> x) const {
  for (int d = 0; d < dim; ++d) {
    if (!(lo[d] < x[d] && x[d] < hi[d])) return false;
  }
  return true;
}

double Domain::measure() const {
  double m = 1.0;
  for (int d = 0; d < dim; ++d) m *= hi[d] - lo[d];
  return m;
}

void Domain::validate() const {
  if (dim != 1 && dim != 2) {
    throw std::invalid_argument(id_str(id) + ": dim must be 1 or 2");
  }
  if (id < 1) throw std::invalid_argument("domain ids must be >= 1");
  for (int d = 0; d < dim; ++d) {
    if (!(lo[d] < hi[d])) {
      throw std::invalid_argument(id_str(id) + ": lo < hi required on every axis");
    }
    if (!std::isfinite(lo[d]) || !std::isfinite(hi[d])) {
      throw std::invalid_argument(id_str(id) + ": bounds must be finite");
    }
  }
}

int DomainSet::dim() const {
  return domains.empty() ? 0 : domains.front().dim;
}

const Domain& DomainSet::at(int id) const {
  if (id < 1 || id > count()) {
    throw std::out_of_range("no domain with id " + std::to_string(id));
  }
  return domains[static_cast<std::size_t>(id - 1)];
}

bool DomainSet::contains(int id, std::span<const double> x) const {
  return at(id).contains(x);
}

bool DomainSet::overlap_nonempty(int i, int j) const {
  const Domain& a = at(i);
  const Domain& b = at(j);
  for (int d = 0; d < a.dim; ++d) {
    if (!(std::max(a.lo[d], b.lo[d]) < std::min(a.hi[d], b.hi[d]))) return false;
  }
  return true;
}

std::vector<int> DomainSet::signature_at(std::span<const double> x) const {
  std::vector<int> sig;
  for (const Domain& d : domains) {
    if (d.contains(x)) sig.push_back(d.id);
  }
  return sig;
}

void DomainSet::validate() const {
  if (domains.empty()) throw std::invalid_argument("domain set is empty");
  const int n = count();
  std::vector<bool> seen(static_cast<std::size_t>(n), false);
  for (const Domain& d : domains) {
    d.validate();
    if (d.dim != domains.front().dim) {
      throw std::invalid_argument("all domains must share one dimension");
    }
    if (d.id > n || seen[static_cast<std::size_t>(d.id - 1)]) {
      throw std::invalid_argument("domain ids must be unique and contiguous 1..N");
    }
    seen[static_cast<std::size_t>(d.id - 1)] = true;
  }
  for (int j = 0; j < n; ++j) {
    if (domains[static_cast<std::size_t>(j)].id != j + 1) {
      throw std::invalid_argument("domains must be listed in id order 1..N");
    }
  }
}

int MeshedDomain::cell_count() const {
  int n = cells[0];
  if (domain.dim == 2) n *= cells[1];
  return n;
}

double MeshedDomain::cell_volume() const {
  double v = h[0];
  if (domain.dim == 2) v *= h[1];
  return v;
}

std::array<double, 2> MeshedDomain::center(int flat) const {
  std::array<double, 2> x{0.0, 0.0};
  if (domain.dim == 1) {
    x[0] = domain.lo[0] + (flat + 0.5) * h[0];
  } else {
    const int ix = flat % cells[0];
    const int iy = flat / cells[0];
    x[0] = domain.lo[0] + (ix + 0.5) * h[0];
    x[1] = domain.lo[1] + (iy + 0.5) * h[1];
  }
  return x;
}

int MeshedDomain::index_of(std::span<const double> x) const {
  std::array<int, 2> idx{0, 0};
  for (int d = 0; d < domain.dim; ++d) {
    if (x[d] < domain.lo[d] || x[d] > domain.hi[d]) return -1;
    int i = static_cast<int>(std::floor((x[d] - domain.lo[d]) / h[d]));
    idx[d] = std::clamp(i, 0, cells[d] - 1);
  }
  return domain.dim == 1 ? idx[0] : idx[1] * cells[0] + idx[0];
}

bool OverlapMask::any() const {
  return std::any_of(flags.begin(), flags.end(), [](std::uint8_t f) { return f != 0; });
}

bool OverlapMask::all() const {
  return std::all_of(flags.begin(), flags.end(), [](std::uint8_t f) { return f != 0; });
}

MeshedDomain build_mesh(const Domain& domain, std::span<const int> cells_per_axis) {
  domain.validate();
  if (cells_per_axis.empty()) {
    throw std::invalid_argument("cells_per_axis must not be empty");
  }
  MeshedDomain mesh;
  mesh.domain = domain;
  for (int d = 0; d < domain.dim; ++d) {
    const int n = cells_per_axis.size() == 1 ? cells_per_axis[0]
                                             : cells_per_axis[static_cast<std::size_t>(d)];
    if (n < 1) {
      throw std::invalid_argument("cells_per_axis must be >= 1 on every axis");
    }
    mesh.cells[d] = n;
    mesh.h[d] = (domain.hi[d] - domain.lo[d]) / n;
  }
  return mesh;
}

OverlapMask overlap_mask(const MeshedDomain& mesh_j, const Domain& domain_i) {
  OverlapMask mask;
  mask.source = mesh_j.domain.id;
  mask.other = domain_i.id;
  const int n = mesh_j.cell_count();
  mask.flags.resize(static_cast<std::size_t>(n));
  for (int c = 0; c < n; ++c) {
    const auto x = mesh_j.center(c);
    mask.flags[static_cast<std::size_t>(c)] =
        domain_i.contains(std::span<const double>(x.data(), mesh_j.domain.dim)) ? 1 : 0;
  }
  return mask;
}

namespace {

std::vector<double> axis_breakpoints(const DomainSet& ds, int axis) {
  std::vector<double> pts;
  for (const Domain& d : ds.domains) {
    pts.push_back(d.lo[axis]);
    pts.push_back(d.hi[axis]);
  }
  std::sort(pts.begin(), pts.end());
  pts.erase(std::unique(pts.begin(), pts.end()), pts.end());
  return pts;
}

struct Stratum {
  std::array<double, 2> lo{0.0, 0.0};
  std::array<double, 2> hi{0.0, 0.0};
  double volume(int dim) const {
    double v = hi[0] - lo[0];
    if (dim == 2) v *= hi[1] - lo[1];
    return v;
  }
  std::array<double, 2> midpoint() const {
    return {0.5 * (lo[0] + hi[0]), 0.5 * (lo[1] + hi[1])};
  }
};

// The breakpoint arrangement: within each stratum every habitat indicator is
// constant, so the stratum midpoint decides its signature exactly.
std::vector<Stratum> build_strata(const DomainSet& ds) {
  const int dim = ds.dim();
  const auto bx = axis_breakpoints(ds, 0);
  std::vector<Stratum> strata;
  if (dim == 1) {
    for (std::size_t i = 0; i + 1 < bx.size(); ++i) {
      Stratum s;
      s.lo[0] = bx[i];
      s.hi[0] = bx[i + 1];
      strata.push_back(s);
    }
  } else {
    const auto by = axis_breakpoints(ds, 1);
    for (std::size_t i = 0; i + 1 < bx.size(); ++i) {
      for (std::size_t j = 0; j + 1 < by.size(); ++j) {
        Stratum s;
        s.lo = {bx[i], by[j]};
        s.hi = {bx[i + 1], by[j + 1]};
        strata.push_back(s);
      }
    }
  }
  return strata;
}

}  // namespace

double DomainSet::union_measure() const {
  validate();
  double total = 0.0;
  for (const Stratum& s : build_strata(*this)) {
    const auto mid = s.midpoint();
    if (!signature_at(std::span<const double>(mid.data(), dim())).empty()) {
      total += s.volume(dim());
    }
  }
  return total;
}

RegionPartition region_partition(const DomainSet& ds, int samples_per_region,
                                 unsigned seed) {
  ds.validate();
  if (samples_per_region < 1) {
    throw std::invalid_argument("samples_per_region must be >= 1");
  }
  const int dim = ds.dim();
  const auto strata = build_strata(ds);

  std::map<std::vector<int>, std::vector<std::array<double, 2>>> buckets;
  auto deposit = [&](const std::array<double, 2>& x) {
    const auto sig = ds.signature_at(std::span<const double>(x.data(), dim));
    if (sig.empty()) return;
    auto& pts = buckets[sig];
    if (static_cast<int>(pts.size()) < samples_per_region) pts.push_back(x);
  };

  for (const Stratum& s : strata) deposit(s.midpoint());

  // Extra stratified random points until each found region has its quota.
  std::mt19937 rng(seed);
  for (int round = 0; round < samples_per_region; ++round) {
    for (const Stratum& s : strata) {
      std::array<double, 2> x{0.0, 0.0};
      for (int d = 0; d < dim; ++d) {
        std::uniform_real_distribution<double> dist(s.lo[d], s.hi[d]);
        x[d] = dist(rng);
      }
      deposit(x);
    }
  }

  RegionPartition part;
  for (auto& [sig, pts] : buckets) {
    RegionSignature region;
    region.active = sig;
    region.representative_points = pts;
    part.regions.push_back(std::move(region));
  }

  const int n = ds.count();
  if (n <= 10) {
    for (unsigned subset = 1; subset < (1u << n); ++subset) {
      std::vector<int> ids;
      for (int j = 0; j < n; ++j) {
        if (subset & (1u << j)) ids.push_back(j + 1);
      }
      if (buckets.find(ids) == buckets.end()) part.not_found.push_back(ids);
    }
  }
  return part;
}

}  // namespace rdlab
