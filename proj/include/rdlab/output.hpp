#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "rdlab/solver.hpp"
#include "rdlab/structure.hpp"

namespace rdlab {

inline constexpr const char* kVersion = "0.1.0";

struct OutputSet {
  std::vector<std::string> files;  // relative names, emission order
  std::filesystem::path directory;
};

/// Writes snap_<step>_<species>.csv per snapshot per species (columns
/// x(,y),value at 17 significant digits), ledger.csv and manifest.json.
OutputSet write_outputs(const Trajectory& trajectory, const ModelSpec& model,
                        const std::filesystem::path& directory, const std::string& config_echo,
                        const std::string& verdict_summary, double wall_clock_s);

/// Reads one snapshot CSV back into cell values (coordinate columns are
/// checked against the mesh).
std::vector<double> read_snapshot_csv(const std::filesystem::path& file,
                                      const MeshedDomain& mesh);

std::string structure_report_json(const StructureReport& report);

std::string ledger_csv(const DiagnosticsLedger& ledger, int species_count);

}  // namespace rdlab
