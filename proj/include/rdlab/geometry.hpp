#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <vector>

namespace rdlab {

/// Axis-aligned open box habitat. Only the first `dim` entries of lo/hi are
/// meaningful; dim is 1 or 2.
struct Domain {
  int id = 0;
  int dim = 1;
  std::array<double, 2> lo{0.0, 0.0};
  std::array<double, 2> hi{0.0, 0.0};

  bool contains(std::span<const double> x) const;
  double measure() const;
  void validate() const;
};

/// The habitats Omega_1..Omega_N. Ids are contiguous 1..N and all domains
/// share the same spatial dimension.
struct DomainSet {
  std::vector<Domain> domains;  // index j-1 holds the domain with id j

  int count() const { return static_cast<int>(domains.size()); }
  int dim() const;
  const Domain& at(int id) const;
  bool contains(int id, std::span<const double> x) const;
  bool overlap_nonempty(int i, int j) const;

  /// Ids of all domains whose interior contains x, ascending.
  std::vector<int> signature_at(std::span<const double> x) const;

  /// Measure of the union of all habitats (exact for boxes).
  double union_measure() const;

  void validate() const;
};

/// Uniform Cartesian mesh over one habitat. Cell k has center
/// lo + (k + 1/2) h per axis; all cells share the same volume.
struct MeshedDomain {
  Domain domain;
  std::array<int, 2> cells{1, 1};
  std::array<double, 2> h{0.0, 0.0};

  int cell_count() const;
  double cell_volume() const;
  std::array<double, 2> center(int flat) const;

  /// Flat index of the cell containing x, or -1 if x lies outside the box.
  int index_of(std::span<const double> x) const;
};

/// Per-cell characteristic function of Omega_other sampled at the cell
/// centers of Omega_source's mesh.
struct OverlapMask {
  int source = 0;
  int other = 0;
  std::vector<std::uint8_t> flags;

  bool any() const;
  bool all() const;
};

/// A maximal region on which every habitat characteristic function is
/// constant: `active` lists the domains containing the region.
struct RegionSignature {
  std::vector<int> active;  // ascending domain ids
  std::vector<std::array<double, 2>> representative_points;
};

struct RegionPartition {
  std::vector<RegionSignature> regions;
  /// Non-empty id subsets for which no point was found (only enumerated for
  /// small N; for boxes these are exactly the empty intersections).
  std::vector<std::vector<int>> not_found;
};

MeshedDomain build_mesh(const Domain& domain, std::span<const int> cells_per_axis);

OverlapMask overlap_mask(const MeshedDomain& mesh_j, const Domain& domain_i);

RegionPartition region_partition(const DomainSet& domains, int samples_per_region,
                                 unsigned seed = 1234u);

}  // namespace rdlab
