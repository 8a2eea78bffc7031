#include "rdlab/output.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

namespace rdlab {

namespace {

std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

void write_file(const std::filesystem::path& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open " + path.string() + " for writing");
  out << content;
  if (!out) throw std::runtime_error("write failed for " + path.string());
}

}  // namespace

std::string ledger_csv(const DiagnosticsLedger& ledger, int m) {
  std::ostringstream out;
  out << "t";
  for (int k = 1; k <= m; ++k) out << ",l1_" << k;
  for (int k = 1; k <= m; ++k) out << ",sup_" << k;
  for (int k = 1; k <= m; ++k) out << ",min_" << k;
  out << ",weighted_mass,envelope";
  for (int p : ledger.energy_p) out << ",lp_" << p;
  out << "\n";
  for (const LedgerRow& row : ledger.rows) {
    out << fmt(row.t);
    for (double v : row.l1) out << "," << fmt(v);
    for (double v : row.sup) out << "," << fmt(v);
    for (double v : row.min) out << "," << fmt(v);
    out << "," << fmt(row.weighted_mass) << "," << fmt(row.envelope);
    for (double v : row.lp) out << "," << fmt(v);
    out << "\n";
  }
  return out.str();
}

OutputSet write_outputs(const Trajectory& trajectory, const ModelSpec& model,
                        const std::filesystem::path& directory, const std::string& config_echo,
                        const std::string& verdict_summary, double wall_clock_s) {
  std::filesystem::create_directories(directory);
  OutputSet set;
  set.directory = directory;

  const int m = model.species_count();
  for (const Snapshot& snap : trajectory.snapshots) {
    for (int k = 1; k <= m; ++k) {
      const MeshedDomain& mesh =
          trajectory.meshes[static_cast<std::size_t>(model.species.domain_of(k) - 1)];
      std::ostringstream out;
      out << (mesh.domain.dim == 1 ? "x,value" : "x,y,value") << "\n";
      const auto& field = snap.state.fields[static_cast<std::size_t>(k - 1)];
      for (int c = 0; c < mesh.cell_count(); ++c) {
        const auto x = mesh.center(c);
        out << fmt(x[0]);
        if (mesh.domain.dim == 2) out << "," << fmt(x[1]);
        out << "," << fmt(field[static_cast<std::size_t>(c)]) << "\n";
      }
      const std::string name =
          "snap_" + std::to_string(snap.step) + "_" + std::to_string(k) + ".csv";
      write_file(directory / name, out.str());
      set.files.push_back(name);
    }
  }

  write_file(directory / "ledger.csv", ledger_csv(trajectory.ledger, m));
  set.files.push_back("ledger.csv");

  nlohmann::json manifest;
  manifest["version"] = kVersion;
  manifest["config"] = config_echo;
  manifest["outputs"] = set.files;
  manifest["wall_clock_s"] = wall_clock_s;
  manifest["verdict"] = verdict_summary;
  manifest["halted"] = trajectory.halted();
  if (trajectory.halted()) manifest["halt_message"] = trajectory.halt_message;
  write_file(directory / "manifest.json", manifest.dump(2) + "\n");
  set.files.push_back("manifest.json");
  return set;
}

std::vector<double> read_snapshot_csv(const std::filesystem::path& file,
                                      const MeshedDomain& mesh) {
  std::ifstream in(file);
  if (!in) throw std::runtime_error("cannot open " + file.string());
  std::string line;
  if (!std::getline(in, line)) throw std::runtime_error("empty snapshot " + file.string());
  std::vector<double> values;
  values.reserve(static_cast<std::size_t>(mesh.cell_count()));
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto comma = line.rfind(',');
    if (comma == std::string::npos) throw std::runtime_error("malformed row in " + file.string());
    values.push_back(std::stod(line.substr(comma + 1)));
  }
  if (static_cast<int>(values.size()) != mesh.cell_count()) {
    throw std::runtime_error("snapshot size mismatch in " + file.string());
  }
  return values;
}

namespace {

nlohmann::json point_json(const std::array<double, 2>& x, const std::vector<double>& u) {
  nlohmann::json j;
  j["x"] = std::vector<double>(x.begin(), x.end());
  j["u"] = u;
  return j;
}

}  // namespace

std::string structure_report_json(const StructureReport& report) {
  nlohmann::json j;
  j["qp_ok"] = report.qp.ok;
  j["qp_checked"] = report.qp.checked;
  j["qp_witnesses"] = nlohmann::json::array();
  for (const QpViolation& v : report.qp.violations) {
    nlohmann::json w = point_json(v.x, v.u);
    w["k"] = v.k;
    w["value"] = v.value;
    j["qp_witnesses"].push_back(w);
  }

  nlohmann::json bal;
  bal["feasible"] = report.bal.feasible;
  bal["b"] = report.bal.b;
  bal["K1"] = report.bal.K1;
  bal["K2"] = report.bal.K2;
  bal["residual"] = report.bal.residual;
  bal["symbolic"] = report.bal.symbolic;
  bal["sample_feasible"] = report.bal.sample_feasible;
  bal["sample_b"] = report.bal.sample_b;
  bal["sample_K1"] = report.bal.sample_K1;
  bal["sample_K2"] = report.bal.sample_K2;
  if (!report.bal.note.empty()) bal["note"] = report.bal.note;
  j["bal"] = bal;

  j["poly"] = {{"l", report.poly.l}, {"C", report.poly.C}, {"residual", report.poly.residual}};

  j["int"] = nlohmann::json::array();
  for (const IntReport& ir : report.ints) {
    nlohmann::json ij;
    ij["domain"] = ir.domain;
    ij["feasible"] = ir.feasible;
    ij["ordering"] = ir.ordering;
    ij["A"] = ir.A;
    ij["r"] = ir.r;
    ij["C"] = ir.C;
    ij["residual"] = ir.residual;
    ij["attempts"] = nlohmann::json::array();
    for (const IntAttempt& at : ir.attempts) {
      nlohmann::json aj;
      aj["r"] = at.r;
      aj["feasible"] = at.feasible;
      if (!at.reason.empty()) aj["reason"] = at.reason;
      if (at.witness.present) {
        nlohmann::json wj = point_json(at.witness.x, at.witness.u);
        wj["species"] = at.witness.species;
        wj["lhs"] = at.witness.lhs;
        wj["required_C"] = at.witness.required_C;
        aj["witness"] = wj;
      }
      ij["attempts"].push_back(aj);
    }
    j["int"].push_back(ij);
  }

  j["r"] = report.r;
  j["growth_limit"] = report.growth_limit;
  j["growth_ok"] = report.growth_ok;
  j["uniform_bound"] = report.uniform_bound;
  j["corollary1"] = report.corollary1;
  j["all_ok"] = report.all_ok;
  j["u_max"] = report.u_max;
  if (!report.validation.empty()) j["validation"] = report.validation;
  return j.dump(2) + "\n";
}

}  // namespace rdlab
