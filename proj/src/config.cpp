#include "rdlab/config.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <map>
#include <sstream>

namespace rdlab {

namespace {

std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::vector<std::string> tokenize(const std::string& line) {
  std::vector<std::string> tokens;
  std::istringstream in(line);
  std::string tok;
  while (in >> tok) tokens.push_back(tok);
  return tokens;
}

double parse_num(const std::string& tok, int line) {
  std::size_t pos = 0;
  double v = 0.0;
  try {
    v = std::stod(tok, &pos);
  } catch (const std::exception&) {
    throw ConfigError(line, "expected a number, got '" + tok + "'");
  }
  if (pos != tok.size()) throw ConfigError(line, "trailing characters in number '" + tok + "'");
  return v;
}

int parse_int(const std::string& tok, int line) {
  const double v = parse_num(tok, line);
  const int i = static_cast<int>(std::llround(v));
  if (static_cast<double>(i) != v) throw ConfigError(line, "expected an integer, got '" + tok + "'");
  return i;
}

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : s) {
    if (c == sep) {
      out.push_back(cur);
      cur.clear();
    } else {
      cur += c;
    }
  }
  out.push_back(cur);
  return out;
}

// `[a,b]` or `[a,b]x[c,d]`, whitespace-free.
void parse_intervals(const std::string& tok, int line, Domain& dom) {
  const auto parts = split(tok, 'x');
  if (parts.empty() || parts.size() > 2) throw ConfigError(line, "expected [lo,hi] or [lo,hi]x[lo,hi]");
  dom.dim = static_cast<int>(parts.size());
  for (std::size_t d = 0; d < parts.size(); ++d) {
    const std::string& p = parts[d];
    if (p.size() < 5 || p.front() != '[' || p.back() != ']') {
      throw ConfigError(line, "malformed interval '" + p + "'");
    }
    const auto nums = split(p.substr(1, p.size() - 2), ',');
    if (nums.size() != 2) throw ConfigError(line, "interval needs exactly two bounds");
    dom.lo[d] = parse_num(nums[0], line);
    dom.hi[d] = parse_num(nums[1], line);
  }
}

struct KeyValues {
  std::map<std::string, std::string> kv;
  int line = 0;

  std::string take(const std::string& key) {
    auto it = kv.find(key);
    if (it == kv.end()) throw ConfigError(line, "missing key '" + key + "'");
    std::string v = it->second;
    kv.erase(it);
    return v;
  }
  void expect_empty() const {
    if (!kv.empty()) throw ConfigError(line, "unknown key '" + kv.begin()->first + "'");
  }
};

KeyValues parse_kv(const std::vector<std::string>& tokens, std::size_t from, int line) {
  KeyValues out;
  out.line = line;
  for (std::size_t i = from; i < tokens.size(); ++i) {
    const auto eq = tokens[i].find('=');
    if (eq == std::string::npos) throw ConfigError(line, "expected key=value, got '" + tokens[i] + "'");
    const std::string key = tokens[i].substr(0, eq);
    if (out.kv.count(key)) throw ConfigError(line, "duplicate key '" + key + "'");
    out.kv[key] = tokens[i].substr(eq + 1);
  }
  return out;
}

struct SpeciesLine {
  int k = 0;
  int domain = 0;
  InitialCondition init;
  int line = 0;
};

struct DiffuseLine {
  int k = 0;
  DiffusionField::PerSpecies values;
  int line = 0;
};

struct ReactLine {
  int target = 0;
  double coeff = 0.0;
  std::vector<std::pair<int, int>> factors;
  std::vector<int> gate;
  int line = 0;
};

}  // namespace

SolverConfig ConfigDocument::solver_or_default() const {
  return solver.value_or(SolverConfig{});
}

CheckerConfig ConfigDocument::checker_or_default() const {
  return checker.value_or(CheckerConfig{});
}

std::vector<EnergyConfig> ConfigDocument::energy_configs() const {
  std::vector<EnergyConfig> configs;
  for (int p : energy_p) {
    if (energy_theta_auto) {
      configs.push_back(EnergyConfig::auto_for(model, p));
      continue;
    }
    EnergyConfig cfg;
    cfg.p = p;
    std::size_t pos = 0;
    for (int j = 1; j <= model.domains.count(); ++j) {
      const int nk = model.species.group_size(j);
      std::vector<double> theta;
      for (int i = 0; i < nk; ++i) {
        if (pos >= energy_theta_values.size()) {
          throw std::invalid_argument("energy theta list too short for the species groups");
        }
        theta.push_back(energy_theta_values[pos++]);
      }
      cfg.theta_per_group.push_back(std::move(theta));
    }
    if (pos != energy_theta_values.size()) {
      throw std::invalid_argument("energy theta list longer than the species groups");
    }
    configs.push_back(std::move(cfg));
  }
  return configs;
}

ConfigDocument parse_config(const std::string& text) {
  ConfigDocument doc;
  doc.echo = text;

  std::vector<Domain> domains;
  std::vector<SpeciesLine> species;
  std::vector<DiffuseLine> diffusion;
  std::vector<ReactLine> reactions;

  std::istringstream in(text);
  std::string raw;
  int line_no = 0;
  while (std::getline(in, raw)) {
    ++line_no;
    const auto hash = raw.find('#');
    if (hash != std::string::npos) raw.erase(hash);
    const auto tokens = tokenize(raw);
    if (tokens.empty()) continue;
    const std::string& head = tokens[0];

    if (head == "domain") {
      if (tokens.size() != 4 || tokens[2] != "=") {
        throw ConfigError(line_no, "expected: domain <id> = [lo,hi](x[lo,hi])?");
      }
      Domain dom;
      dom.id = parse_int(tokens[1], line_no);
      parse_intervals(tokens[3], line_no, dom);
      for (const Domain& d : domains) {
        if (d.id == dom.id) throw ConfigError(line_no, "duplicate domain id");
      }
      domains.push_back(dom);
    } else if (head == "species") {
      if (tokens.size() < 6 || tokens[2] != "on" || tokens[4] != "init") {
        throw ConfigError(line_no, "expected: species <k> on <domain> init const <v> | gauss ...");
      }
      SpeciesLine sp;
      sp.line = line_no;
      sp.k = parse_int(tokens[1], line_no);
      sp.domain = parse_int(tokens[3], line_no);
      if (tokens[5] == "const") {
        if (tokens.size() != 7) throw ConfigError(line_no, "expected: init const <v>");
        sp.init.kind = InitialCondition::Kind::constant;
        sp.init.value = parse_num(tokens[6], line_no);
      } else if (tokens[5] == "gauss") {
        // center has one value per axis; dimension is resolved afterwards
        const std::size_t rest = tokens.size() - 6;
        if (rest != 3 && rest != 4) {
          throw ConfigError(line_no, "expected: init gauss <center...> <width> <amp>");
        }
        sp.init.kind = InitialCondition::Kind::gaussian;
        sp.init.center[0] = parse_num(tokens[6], line_no);
        std::size_t next = 7;
        if (rest == 4) sp.init.center[1] = parse_num(tokens[next++], line_no);
        sp.init.width = parse_num(tokens[next++], line_no);
        sp.init.amplitude = parse_num(tokens[next], line_no);
      } else {
        throw ConfigError(line_no, "unknown initial kind '" + tokens[5] + "'");
      }
      species.push_back(sp);
    } else if (head == "diffuse") {
      if (tokens.size() < 4 || tokens[2] != "=") {
        throw ConfigError(line_no, "expected: diffuse <k> = <value> (region <ids> = <value>)*");
      }
      DiffuseLine df;
      df.line = line_no;
      df.k = parse_int(tokens[1], line_no);
      df.values.base = parse_num(tokens[3], line_no);
      std::size_t i = 4;
      while (i < tokens.size()) {
        if (tokens[i] != "region") throw ConfigError(line_no, "expected 'region', got '" + tokens[i] + "'");
        ++i;
        std::vector<int> ids;
        while (i < tokens.size() && tokens[i] != "=") ids.push_back(parse_int(tokens[i++], line_no));
        if (ids.empty() || i >= tokens.size()) throw ConfigError(line_no, "region clause needs ids and '= value'");
        ++i;  // '='
        if (i >= tokens.size()) throw ConfigError(line_no, "region clause missing value");
        std::sort(ids.begin(), ids.end());
        df.values.region_values.emplace_back(ids, parse_num(tokens[i++], line_no));
      }
      diffusion.push_back(df);
    } else if (head == "react") {
      if (tokens.size() < 4 || tokens[2] != "+=") {
        throw ConfigError(line_no, "expected: react <k> += <coeff> * u<j>^<e>... gate <ids>");
      }
      ReactLine rc;
      rc.line = line_no;
      rc.target = parse_int(tokens[1], line_no);
      rc.coeff = parse_num(tokens[3], line_no);
      std::size_t i = 4;
      if (i < tokens.size() && tokens[i] == "*") ++i;
      while (i < tokens.size() && tokens[i] != "gate") {
        const std::string& t = tokens[i];
        if (t.size() < 2 || t[0] != 'u') throw ConfigError(line_no, "expected u<j>^<e>, got '" + t + "'");
        const auto caret = t.find('^');
        const std::string js = t.substr(1, caret == std::string::npos ? std::string::npos : caret - 1);
        const int j = parse_int(js, line_no);
        const int e = caret == std::string::npos ? 1 : parse_int(t.substr(caret + 1), line_no);
        if (e < 1) throw ConfigError(line_no, "exponents must be >= 1");
        rc.factors.emplace_back(j, e);
        ++i;
      }
      if (i >= tokens.size() || tokens[i] != "gate") throw ConfigError(line_no, "reaction term needs a gate");
      ++i;
      while (i < tokens.size()) rc.gate.push_back(parse_int(tokens[i++], line_no));
      if (rc.gate.empty()) throw ConfigError(line_no, "gate needs at least one domain id");
      std::sort(rc.gate.begin(), rc.gate.end());
      rc.gate.erase(std::unique(rc.gate.begin(), rc.gate.end()), rc.gate.end());
      reactions.push_back(rc);
    } else if (head == "solve") {
      if (doc.solver) throw ConfigError(line_no, "duplicate solve line");
      KeyValues kv = parse_kv(tokens, 1, line_no);
      SolverConfig cfg;
      cfg.dt = parse_num(kv.take("dt"), line_no);
      cfg.t_end = parse_num(kv.take("T"), line_no);
      const auto cells = split(kv.take("cells"), ',');
      if (cells.empty() || cells.size() > 2) throw ConfigError(line_no, "cells takes 1 or 2 integers");
      cfg.cells[0] = parse_int(cells[0], line_no);
      cfg.cells[1] = cells.size() == 2 ? parse_int(cells[1], line_no) : cfg.cells[0];
      cfg.epsilon = parse_num(kv.take("eps"), line_no);
      kv.expect_empty();
      doc.solver = cfg;
    } else if (head == "check") {
      if (doc.checker) throw ConfigError(line_no, "duplicate check line");
      KeyValues kv = parse_kv(tokens, 1, line_no);
      CheckerConfig cfg;
      cfg.u_max = parse_num(kv.take("Umax"), line_no);
      cfg.samples = parse_int(kv.take("samples"), line_no);
      kv.expect_empty();
      doc.checker = cfg;
    } else if (head == "energy") {
      if (!doc.energy_p.empty()) throw ConfigError(line_no, "duplicate energy line");
      KeyValues kv = parse_kv(tokens, 1, line_no);
      for (const std::string& p : split(kv.take("p"), ',')) {
        doc.energy_p.push_back(parse_int(p, line_no));
      }
      const std::string theta = kv.take("theta");
      if (theta == "auto") {
        doc.energy_theta_auto = true;
      } else {
        doc.energy_theta_auto = false;
        for (const std::string& v : split(theta, ',')) {
          doc.energy_theta_values.push_back(parse_num(v, line_no));
        }
      }
      kv.expect_empty();
    } else {
      throw ConfigError(line_no, "unknown directive '" + head + "'");
    }
  }

  if (domains.empty()) throw ConfigError(line_no, "no domains");
  std::sort(domains.begin(), domains.end(), [](const Domain& a, const Domain& b) { return a.id < b.id; });
  doc.model.domains.domains = domains;
  doc.model.domains.validate();

  if (species.empty()) throw ConfigError(line_no, "no species");
  std::sort(species.begin(), species.end(),
            [](const SpeciesLine& a, const SpeciesLine& b) { return a.k < b.k; });
  const int m = static_cast<int>(species.size());
  std::vector<int> sigma(static_cast<std::size_t>(m));
  doc.model.initial.resize(static_cast<std::size_t>(m));
  for (int k = 0; k < m; ++k) {
    const SpeciesLine& sp = species[static_cast<std::size_t>(k)];
    if (sp.k != k + 1) throw ConfigError(sp.line, "species ids must be contiguous 1..m");
    if (sp.domain < 1 || sp.domain > doc.model.domains.count()) {
      throw ConfigError(sp.line, "species references unknown domain " + std::to_string(sp.domain));
    }
    sigma[static_cast<std::size_t>(k)] = sp.domain;
    doc.model.initial[static_cast<std::size_t>(k)] = sp.init;
  }
  doc.model.species = SpeciesMap::from_sigma(sigma, doc.model.domains.count());

  doc.model.diffusion.per_species.assign(static_cast<std::size_t>(m), {});
  std::vector<bool> have_d(static_cast<std::size_t>(m), false);
  for (const DiffuseLine& df : diffusion) {
    if (df.k < 1 || df.k > m) throw ConfigError(df.line, "diffuse references unknown species");
    if (have_d[static_cast<std::size_t>(df.k - 1)]) throw ConfigError(df.line, "duplicate diffuse line");
    have_d[static_cast<std::size_t>(df.k - 1)] = true;
    doc.model.diffusion.per_species[static_cast<std::size_t>(df.k - 1)] = df.values;
  }
  for (int k = 0; k < m; ++k) {
    if (!have_d[static_cast<std::size_t>(k)]) {
      throw ConfigError(line_no, "species " + std::to_string(k + 1) + " has no diffuse line");
    }
  }

  doc.model.reaction.m = m;
  for (const ReactLine& rc : reactions) {
    if (rc.target < 1 || rc.target > m) throw ConfigError(rc.line, "react targets unknown species");
    ReactionTerm term;
    term.target = rc.target;
    term.coeff = rc.coeff;
    term.gate = rc.gate;
    term.exponents.assign(static_cast<std::size_t>(m), 0);
    for (auto [j, e] : rc.factors) {
      if (j < 1 || j > m) throw ConfigError(rc.line, "react reads unknown species u" + std::to_string(j));
      term.exponents[static_cast<std::size_t>(j - 1)] += e;
    }
    try {
      for (int g : term.gate) doc.model.domains.at(g);
    } catch (const std::exception&) {
      throw ConfigError(rc.line, "gate references unknown domain");
    }
    doc.model.reaction.terms.push_back(std::move(term));
  }

  if (doc.solver) doc.model.epsilon = doc.solver->epsilon;
  try {
    doc.model.validate();
  } catch (const std::exception& e) {
    throw ConfigError(line_no, std::string("model validation failed: ") + e.what());
  }
  if (doc.solver) doc.solver->validate();
  return doc;
}

std::string serialize_config(const ModelSpec& model, const SolverConfig& solver,
                             const CheckerConfig& checker, const std::vector<int>& energy_p) {
  std::ostringstream out;
  for (const Domain& d : model.domains.domains) {
    out << "domain " << d.id << " = [" << fmt(d.lo[0]) << "," << fmt(d.hi[0]) << "]";
    if (d.dim == 2) out << "x[" << fmt(d.lo[1]) << "," << fmt(d.hi[1]) << "]";
    out << "\n";
  }
  const int m = model.species_count();
  for (int k = 1; k <= m; ++k) {
    const InitialCondition& ic = model.initial[static_cast<std::size_t>(k - 1)];
    out << "species " << k << " on " << model.species.domain_of(k) << " init ";
    if (ic.kind == InitialCondition::Kind::constant) {
      out << "const " << fmt(ic.value);
    } else {
      out << "gauss " << fmt(ic.center[0]);
      if (model.dim() == 2) out << " " << fmt(ic.center[1]);
      out << " " << fmt(ic.width) << " " << fmt(ic.amplitude);
    }
    out << "\n";
  }
  for (int k = 1; k <= m; ++k) {
    const auto& d = model.diffusion.per_species[static_cast<std::size_t>(k - 1)];
    out << "diffuse " << k << " = " << fmt(d.base);
    for (const auto& [ids, v] : d.region_values) {
      out << " region";
      for (int id : ids) out << " " << id;
      out << " = " << fmt(v);
    }
    out << "\n";
  }
  for (const ReactionTerm& t : model.reaction.terms) {
    out << "react " << t.target << " += " << fmt(t.coeff);
    bool any = false;
    for (std::size_t j = 0; j < t.exponents.size(); ++j) {
      if (t.exponents[j] > 0) {
        out << (any ? " " : " * ") << "u" << (j + 1) << "^" << t.exponents[j];
        any = true;
      }
    }
    out << " gate";
    for (int g : t.gate) out << " " << g;
    out << "\n";
  }
  out << "solve dt=" << fmt(solver.dt) << " T=" << fmt(solver.t_end) << " cells=" << solver.cells[0];
  if (model.dim() == 2) out << "," << solver.cells[1];
  out << " eps=" << fmt(solver.epsilon) << "\n";
  out << "check Umax=" << fmt(checker.u_max) << " samples=" << checker.samples << "\n";
  if (!energy_p.empty()) {
    out << "energy p=";
    for (std::size_t i = 0; i < energy_p.size(); ++i) out << (i ? "," : "") << energy_p[i];
    out << " theta=auto\n";
  }
  return out.str();
}

std::string builtin_config_text(const std::string& name, const BuiltinParams& params) {
  const ModelSpec model = builtin(name, params);
  SolverConfig solver;
  solver.epsilon = model.epsilon;
  if (name == "ex1") {
    solver.dt = 1e-3;
    solver.t_end = 2.0;
    solver.cells = {64, 64};
  } else if (name == "ex2") {
    solver.dt = 1e-3;
    solver.t_end = 2.0;
    solver.cells = {64, 64};
  } else {
    solver.dt = 1e-3;
    solver.t_end = 2.0;
    solver.cells = {256, 1};
  }
  CheckerConfig checker;
  return serialize_config(model, solver, checker, {2, 4});
}

}  // namespace rdlab
