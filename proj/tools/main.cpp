#include <chrono>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "rdlab/config.hpp"
#include "rdlab/output.hpp"
#include "rdlab/solver.hpp"
#include "rdlab/structure.hpp"

namespace {

using namespace rdlab;

std::string read_config_source(const std::string& path) {
  if (path.empty() || path == "-") {
    std::ostringstream buf;
    buf << std::cin.rdbuf();
    return buf.str();
  }
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open config file '" + path + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

std::filesystem::path resolve_outdir(const std::string& flag_value) {
  if (const char* env = std::getenv("RD_OUTDIR"); env && *env) return env;
  return flag_value;
}

std::vector<double> parse_double_list(const std::string& csv) {
  std::vector<double> out;
  std::stringstream ss(csv);
  std::string tok;
  while (std::getline(ss, tok, ',')) {
    if (!tok.empty()) out.push_back(std::stod(tok));
  }
  return out;
}

int cmd_run(const std::string& config_path, const std::string& outdir_flag, int record_every) {
  const auto t0 = std::chrono::steady_clock::now();
  ConfigDocument doc = parse_config(read_config_source(config_path));
  SolverConfig solver = doc.solver_or_default();
  if (record_every > 0) solver.record_every = record_every;

  RunOptions options;
  options.energies = doc.energy_configs();
  // Fit the mass-control data up front so the ledger envelope is meaningful.
  StructureReport report = certify(doc.model, doc.checker_or_default());
  if (report.bal.feasible || !report.bal.b.empty()) {
    options.mass.b = report.bal.b;
    options.mass.K1 = report.bal.K1;
    options.mass.K2 = report.bal.K2;
  }

  Trajectory traj = run(doc.model, solver, options);
  const double wall =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

  std::string verdict = traj.halted() ? "halted" : "completed";
  const OutputSet outputs =
      write_outputs(traj, doc.model, resolve_outdir(outdir_flag), doc.echo, verdict, wall);
  std::cout << "run " << verdict << ": " << traj.ledger.rows.size() << " ledger rows, "
            << traj.snapshots.size() << " snapshots -> " << outputs.directory.string() << "\n";
  if (traj.halted()) {
    std::cerr << "error: " << traj.halt_message << "\n";
    return 1;
  }
  return 0;
}

int cmd_check(const std::string& config_path, const std::string& out_file) {
  ConfigDocument doc = parse_config(read_config_source(config_path));
  StructureReport report = certify(doc.model, doc.checker_or_default());
  const std::string json = structure_report_json(report);
  if (!out_file.empty()) {
    std::ofstream out(out_file);
    if (!out) throw std::runtime_error("cannot open '" + out_file + "' for writing");
    out << json;
  }
  std::cout << json;
  return report.all_ok ? 0 : 1;
}

int cmd_energy(const std::string& outdir, const std::string& p_list) {
  const std::filesystem::path dir = outdir;
  std::ifstream mf(dir / "manifest.json");
  if (!mf) throw std::runtime_error("no manifest.json under '" + outdir + "'");
  nlohmann::json manifest = nlohmann::json::parse(mf);
  ConfigDocument doc = parse_config(manifest.at("config").get<std::string>());
  SolverConfig solver = doc.solver_or_default();

  std::vector<int> ps = doc.energy_p;
  if (!p_list.empty()) {
    ps.clear();
    for (double v : parse_double_list(p_list)) ps.push_back(static_cast<int>(v));
  }
  if (ps.empty()) ps = {2};
  std::vector<EnergyConfig> energies;
  for (int p : ps) energies.push_back(EnergyConfig::auto_for(doc.model, p));

  Simulation sim(doc.model, solver);

  // Collect the recorded steps out of the manifest's file index.
  std::vector<int> steps;
  for (const auto& f : manifest.at("outputs")) {
    const std::string name = f.get<std::string>();
    if (name.rfind("snap_", 0) != 0) continue;
    const auto us = name.find('_', 5);
    const int step = std::stoi(name.substr(5, us - 5));
    if (steps.empty() || steps.back() != step) steps.push_back(step);
  }

  std::cout << "t";
  for (int p : ps) std::cout << ",lp_" << p;
  std::cout << "\n";
  const int m = doc.model.species_count();
  for (int step : steps) {
    State state;
    state.t = step * solver.dt;
    state.fields.resize(static_cast<std::size_t>(m));
    for (int k = 1; k <= m; ++k) {
      const MeshedDomain& mesh =
          sim.meshes()[static_cast<std::size_t>(doc.model.species.domain_of(k) - 1)];
      state.fields[static_cast<std::size_t>(k - 1)] = read_snapshot_csv(
          dir / ("snap_" + std::to_string(step) + "_" + std::to_string(k) + ".csv"), mesh);
    }
    std::cout << state.t;
    for (const EnergyConfig& cfg : energies) {
      double lp = 0.0;
      for (int j = 1; j <= doc.model.domains.count(); ++j) {
        const auto& group = doc.model.species.group(j);
        if (group.empty()) continue;
        lp += group_energy(state, group,
                           cfg.theta_per_group[static_cast<std::size_t>(j - 1)], cfg.p,
                           sim.meshes()[static_cast<std::size_t>(j - 1)]);
      }
      std::cout << "," << lp;
    }
    std::cout << "\n";
  }
  return 0;
}

int cmd_sweep(const std::string& config_path, const std::string& eps_csv,
              const std::string& outdir_flag) {
  ConfigDocument doc = parse_config(read_config_source(config_path));
  const std::vector<double> eps = parse_double_list(eps_csv);
  EpsilonStudy study = epsilon_study(doc.model, doc.solver_or_default(), eps);

  std::ostringstream table;
  table << "eps_hi,eps_lo";
  for (int k = 1; k <= doc.model.species_count(); ++k) table << ",d_" << k;
  table << "\n";
  for (std::size_t i = 0; i < study.distances.size(); ++i) {
    table << study.eps[i] << "," << study.eps[i + 1];
    for (double d : study.distances[i]) table << "," << d;
    table << "\n";
  }
  std::cout << table.str();

  if (!outdir_flag.empty() || std::getenv("RD_OUTDIR")) {
    const auto dir = resolve_outdir(outdir_flag.empty() ? "out" : outdir_flag);
    std::filesystem::create_directories(dir);
    std::ofstream out(dir / "sweep.csv");
    out << table.str();
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"rdlab: reaction-diffusion systems on overlapping habitats"};
  app.set_version_flag("--version", rdlab::kVersion);
  app.require_subcommand(1);

  std::string config_path, outdir = "out", out_file, eps_csv = "1e-2,1e-3,1e-4";
  std::string builtin_name, p_list;
  int record_every = 0;

  auto* c_run = app.add_subcommand("run", "simulate a config and write snapshots + ledger");
  c_run->add_option("config", config_path, "config file ('-' or empty reads stdin)");
  c_run->add_option("--out", outdir, "output directory (RD_OUTDIR overrides)");
  c_run->add_option("--record-every", record_every, "snapshot stride in steps");

  auto* c_check = app.add_subcommand("check", "certify the structural hypotheses");
  c_check->add_option("config", config_path, "config file ('-' or empty reads stdin)");
  c_check->add_option("--out", out_file, "also write the JSON report here");

  auto* c_energy = app.add_subcommand("energy", "recompute L_p energies from stored snapshots");
  c_energy->add_option("outdir", outdir)->required();
  c_energy->add_option("--p", p_list, "override the p list, e.g. 2,4");

  auto* c_sweep = app.add_subcommand("sweep-epsilon", "compare runs across truncation levels");
  c_sweep->add_option("config", config_path, "config file ('-' or empty reads stdin)");
  c_sweep->add_option("--eps", eps_csv, "decreasing epsilon list");
  c_sweep->add_option("--out", outdir, "directory for sweep.csv");

  auto* c_builtin = app.add_subcommand("builtin", "emit the config of a built-in example");
  c_builtin->add_option("name", builtin_name, "ex1, ex2 or ex3")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  try {
    if (c_run->parsed()) return cmd_run(config_path, outdir, record_every);
    if (c_check->parsed()) return cmd_check(config_path, out_file);
    if (c_energy->parsed()) return cmd_energy(outdir, p_list);
    if (c_sweep->parsed()) return cmd_sweep(config_path, eps_csv, outdir);
    if (c_builtin->parsed()) {
      std::cout << rdlab::builtin_config_text(builtin_name);
      return 0;
    }
  } catch (const rdlab::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const std::invalid_argument& e) {
    std::cerr << "usage error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 2;
}
