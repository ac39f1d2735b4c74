#include "cavity_eit/config.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include "cavity_eit/errors.hpp"

namespace cavity_eit {

namespace {

using boost::property_tree::ptree;
using nlohmann::json;

constexpr const char* kVersion = "0.1.0";

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, sep)) out.push_back(trim(item));
  return out;
}

double to_number(const std::string& text, const std::string& path) {
  const std::string t = trim(text);
  char* end = nullptr;
  const double v = std::strtod(t.c_str(), &end);
  if (t.empty() || end != t.c_str() + t.size() || !std::isfinite(v)) {
    throw ConfigError(path + ": expected a number, got '" + text + "'");
  }
  return v;
}

// Typed, path-aware access to the parsed tree that remembers which keys were
// read, so that leftovers can be reported as unknown.
class Reader {
 public:
  explicit Reader(const ptree& root) : root_(root) {}

  std::optional<std::string> raw(const std::string& section, const std::string& key) {
    const std::string path = section.empty() ? key : section + "." + key;
    used_.insert(path);
    const ptree* node = section.empty() ? &root_ : find_section(section);
    if (!node) return std::nullopt;
    const auto child = node->get_child_optional(ptree::path_type(key, '\0'));
    if (!child) return std::nullopt;
    return trim(child->data());
  }

  std::string string(const std::string& section, const std::string& key,
                     const std::string& fallback) {
    return raw(section, key).value_or(fallback);
  }

  std::optional<double> number(const std::string& section, const std::string& key) {
    const auto v = raw(section, key);
    if (!v) return std::nullopt;
    return to_number(*v, path(section, key));
  }

  double number(const std::string& section, const std::string& key, double fallback) {
    return number(section, key).value_or(fallback);
  }

  double required(const std::string& section, const std::string& key) {
    const auto v = number(section, key);
    if (!v) throw ConfigError(path(section, key) + ": required field is missing");
    return *v;
  }

  int integer(const std::string& section, const std::string& key, int fallback) {
    const auto v = number(section, key);
    if (!v) return fallback;
    if (*v != std::floor(*v) || std::abs(*v) > 1e9) {
      throw ConfigError(path(section, key) + ": expected an integer");
    }
    return static_cast<int>(*v);
  }

  bool boolean(const std::string& section, const std::string& key, bool fallback) {
    const auto v = raw(section, key);
    if (!v) return fallback;
    if (*v == "true" || *v == "yes" || *v == "1") return true;
    if (*v == "false" || *v == "no" || *v == "0") return false;
    throw ConfigError(path(section, key) + ": expected true or false");
  }

  /// "a, b, c" or "linspace(lo, hi, n)".
  std::optional<std::vector<double>> list(const std::string& section, const std::string& key) {
    const auto v = raw(section, key);
    if (!v) return std::nullopt;
    const std::string p = path(section, key);
    std::vector<double> out;
    if (v->rfind("linspace(", 0) == 0 && v->back() == ')') {
      const auto args = split(v->substr(9, v->size() - 10), ',');
      if (args.size() != 3) throw ConfigError(p + ": linspace needs (lo, hi, n)");
      const double n = to_number(args[2], p);
      if (n < 2 || n != std::floor(n)) throw ConfigError(p + ": linspace count must be >= 2");
      return linear_grid(to_number(args[0], p), to_number(args[1], p), static_cast<int>(n));
    }
    for (const auto& item : split(*v, ',')) out.push_back(to_number(item, p));
    if (out.empty()) throw ConfigError(p + ": empty list");
    return out;
  }

  std::optional<std::pair<double, double>> range(const std::string& section,
                                                 const std::string& key) {
    const auto v = raw(section, key);
    if (!v || *v == "auto") return std::nullopt;
    const auto items = list(section, key);
    if (items->size() != 2 || !((*items)[0] < (*items)[1])) {
      throw ConfigError(path(section, key) + ": expected 'lower, upper' with lower < upper");
    }
    return std::make_pair((*items)[0], (*items)[1]);
  }

  /// Number or the literal "auto".
  std::optional<double> number_or_auto(const std::string& section, const std::string& key) {
    const auto v = raw(section, key);
    if (!v || *v == "auto") return std::nullopt;
    return to_number(*v, path(section, key));
  }

  std::vector<int> atom_list(const std::string& section) {
    const auto v = list(section, "n_atoms");
    if (!v) return {1};
    std::vector<int> out;
    for (double n : *v) {
      if (n < 1 || n != std::floor(n)) {
        throw ConfigError(path(section, "n_atoms") + ": atom counts must be positive integers");
      }
      out.push_back(static_cast<int>(n));
    }
    return out;
  }

  void reject_unknown(const std::set<std::string>& allowed_sections) {
    for (const auto& [name, node] : root_) {
      if (node.empty()) {
        if (!used_.count(name)) throw ConfigError(name + ": unknown key");
        continue;
      }
      if (!allowed_sections.count(name)) {
        throw ConfigError(name + ": section not valid for this experiment");
      }
      for (const auto& [key, leaf] : node) {
        if (!used_.count(name + "." + key)) throw ConfigError(name + "." + key + ": unknown key");
      }
    }
  }

 private:
  static std::string path(const std::string& section, const std::string& key) {
    return section.empty() ? key : section + "." + key;
  }
  const ptree* find_section(const std::string& section) const {
    const auto it = root_.find(section);
    return it == root_.not_found() ? nullptr : &it->second;
  }

  const ptree& root_;
  std::set<std::string> used_;
};

Experiment parse_experiment(const std::string& name) {
  for (auto kind : {Experiment::Spectrum, Experiment::FwhmMap, Experiment::ControlSweep,
                    Experiment::MinFwhm, Experiment::Statistics,
                    Experiment::SemiclassicalCompare}) {
    if (experiment_name(kind) == name) return kind;
  }
  throw ConfigError("experiment: unknown kind '" + name + "'");
}

std::string hex64(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

std::string label_number(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%g", v);
  return buf;
}

// Table collected in memory and written once at the end of the run.
struct Table {
  std::string name;
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  std::string render(const std::string& run_id) const {
    std::string out;
    for (std::size_t i = 0; i < header.size(); ++i) out += header[i] + ",";
    out += "run_id\n";
    for (const auto& row : rows) {
      for (const auto& cell : row) out += cell + ",";
      out += run_id + "\n";
    }
    return out;
  }
};

std::string cell(double v) { return format_number(v); }
std::string cell(int v) { return std::to_string(v); }
std::string cell(bool v) { return v ? "1" : "0"; }

class Runner {
 public:
  explicit Runner(const RunConfig& config) : c_(config) {}

  void run() {
    switch (c_.experiment) {
      case Experiment::Spectrum:
        run_spectrum();
        break;
      case Experiment::FwhmMap:
        run_fwhm_map();
        break;
      case Experiment::ControlSweep:
        run_control_sweep();
        break;
      case Experiment::MinFwhm:
        run_min_fwhm();
        break;
      case Experiment::Statistics:
        run_statistics();
        break;
      case Experiment::SemiclassicalCompare:
        run_compare();
        break;
    }
  }

  std::vector<Table> tables;
  std::vector<std::string> warnings;
  json fock_used = json::object();

 private:
  SystemParams params_for(int n, double omega) const {
    SystemParams p = c_.system;
    p.omega_c = omega;
    if (c_.scale_g_with_atoms) p.g = c_.system.g / std::sqrt(static_cast<double>(n));
    return p;
  }

  void note(const std::string& label, const std::vector<std::string>& ws, int fock) {
    for (const auto& w : ws) {
      const std::string m = label + ": " + w;
      if (std::find(warnings.begin(), warnings.end(), m) == warnings.end()) warnings.push_back(m);
    }
    if (fock > 0) fock_used[label] = fock;
  }

  // Scans with one Fock dimension for every point: when the automatic rule
  // grows the space mid-scan, the scan is repeated from that dimension.
  Spectrum consistent_spectrum(const SystemParams& p, int n, Method method,
                               std::pair<double, double> window, int points, int refine) const {
    SolverSettings s = c_.solver;
    for (;;) {
      PointSolver solver(p, n, method, s);
      const int start = solver.fock_dim();
      Spectrum spec = spectrum(solver, window, points, refine);
      if (method == Method::Semiclassical || s.fock_dim != 0 || spec.fock_dim == start) {
        return spec;
      }
      s.fock_min = spec.fock_dim;
    }
  }

  MeasureOptions measure_options() const {
    MeasureOptions m;
    m.half_width = c_.half_width;
    m.n_points = c_.points;
    m.fwhm.tolerance = c_.fwhm_tolerance;
    return m;
  }

  MinFwhmOptions min_options() const {
    MinFwhmOptions o;
    o.control.scale_g_with_atoms = c_.scale_g_with_atoms;
    o.control.measure = measure_options();
    o.tolerance = c_.min_tolerance;
    o.coarse_points = c_.coarse_points;
    return o;
  }

  void run_spectrum() {
    const std::vector<double> omegas =
        c_.omega_values.empty() ? std::vector<double>{c_.system.omega_c} : c_.omega_values;
    const bool single = omegas.size() == 1 && c_.n_atoms.size() == 1;
    for (int n : c_.n_atoms) {
      for (double omega : omegas) {
        const SystemParams p = params_for(n, omega);
        const auto window = c_.window.value_or(default_window(p));
        const Spectrum spec = consistent_spectrum(p, n, c_.method, window, c_.points, c_.refine);
        const std::string label = "N" + std::to_string(n) + "_omega" + label_number(omega);
        note(label, spec.warnings, spec.fock_dim);

        Table t;
        t.name = single ? "spectrum.csv" : "spectrum_" + label + ".csv";
        t.header = {"delta_p", "transmission_paper_norm", "transmission_unit_norm",
                    "pop11", "pop22", "pop33", "g2"};
        const std::size_t n_fock = spec.points.front().photon_distribution.size();
        for (std::size_t k = 0; k < n_fock; ++k) t.header.push_back("P" + std::to_string(k));
        if (c_.method == Method::Mcwf) t.header.push_back("transmission_se");
        for (std::size_t i = 0; i < spec.points.size(); ++i) {
          const ObservableSet& o = spec.points[i];
          std::vector<std::string> row{cell(spec.detunings[i]), cell(o.transmission_raw),
                                       cell(o.transmission), cell(o.populations[0]),
                                       cell(o.populations[1]), cell(o.populations[2]),
                                       cell(o.g2)};
          for (double pn : o.photon_distribution) row.push_back(cell(pn));
          if (c_.method == Method::Mcwf) row.push_back(cell(spec.transmission_errors[i]));
          t.rows.push_back(std::move(row));
        }
        tables.push_back(std::move(t));
      }
    }
  }

  static std::vector<std::string> fwhm_cells(const FwhmResult& r) {
    return {cell(r.fwhm), cell(r.peak_location), cell(r.peak_height), cell(r.left_cross),
            cell(r.right_cross), cell(r.central_peak), cell(r.merged), cell(r.uncertainty)};
  }
  static std::vector<std::string> fwhm_header() {
    return {"fwhm", "peak_location", "peak_height", "left_cross", "right_cross",
            "central_peak", "merged", "fwhm_uncertainty"};
  }

  void run_fwhm_map() {
    const std::vector<double> gs = c_.g_values.empty() ? std::vector<double>{c_.system.g}
                                                       : c_.g_values;
    const std::vector<double> omegas =
        c_.omega_grid.empty() ? std::vector<double>{c_.system.omega_c} : c_.omega_grid;
    for (int n : c_.n_atoms) {
      Table t;
      t.name = "fwhm_map_N" + std::to_string(n) + ".csv";
      t.header = {"g", "omega_c"};
      for (const auto& h : fwhm_header()) t.header.push_back(h);
      if (c_.observe_delta_p) {
        for (const char* h : {"observe_delta_p", "transmission_unit_norm_at", "pop11_at",
                              "pop22_at", "pop33_at"}) {
          t.header.push_back(h);
        }
      }
      for (double g0 : gs) {
        for (double omega : omegas) {
          SystemParams p = params_for(n, omega);
          p.g = c_.scale_g_with_atoms ? g0 / std::sqrt(static_cast<double>(n)) : g0;
          PointSolver solver(p, n, c_.method, c_.solver);
          const FwhmResult r = measure_fwhm(solver, measure_options());
          std::vector<std::string> row{cell(p.g), cell(omega)};
          for (auto& s : fwhm_cells(r)) row.push_back(std::move(s));
          if (c_.observe_delta_p) {
            const ObservableSet o = solver.solve(*c_.observe_delta_p);
            for (double v : {*c_.observe_delta_p, o.transmission, o.populations[0],
                             o.populations[1], o.populations[2]}) {
              row.push_back(cell(v));
            }
          }
          const std::string label = "N" + std::to_string(n) + "_g" + label_number(p.g) +
                                    "_omega" + label_number(omega);
          note(label, solver.warnings(), solver.fock_dim());
          if (!r.diagnostic.empty()) note(label, {r.diagnostic}, 0);
          t.rows.push_back(std::move(row));
        }
      }
      tables.push_back(std::move(t));
    }
  }

  void run_control_sweep() {
    if (c_.omega_grid.empty()) throw ConfigError("control-sweep.omega_c: required field is missing");
    Table mins;
    mins.name = "min_fwhm.csv";
    mins.header = {"n_atoms", "omega_star", "fwhm_min", "g", "grid_fallback"};
    for (int n : c_.n_atoms) {
      Table t;
      t.name = "control_sweep_N" + std::to_string(n) + ".csv";
      t.header = {"omega_c"};
      for (const auto& h : fwhm_header()) t.header.push_back(h);
      t.header.insert(t.header.begin() + 2, "g");
      for (double omega : c_.omega_grid) {
        const SystemParams p = params_for(n, omega);
        PointSolver solver(p, n, c_.method, c_.solver);
        const FwhmResult r = measure_fwhm(solver, measure_options());
        auto cells = fwhm_cells(r);
        std::vector<std::string> row{cell(omega), cells[0], cell(p.g)};
        row.insert(row.end(), cells.begin() + 1, cells.end());
        const std::string label = "N" + std::to_string(n) + "_omega" + label_number(omega);
        note(label, solver.warnings(), solver.fock_dim());
        if (!r.diagnostic.empty()) note(label, {r.diagnostic}, 0);
        t.rows.push_back(std::move(row));
      }
      tables.push_back(std::move(t));
      if (c_.find_minimum) mins.rows.push_back(minimum_row(n));
    }
    if (c_.find_minimum) tables.push_back(std::move(mins));
  }

  std::vector<std::string> minimum_row(int n) {
    const MinFwhmResult m =
        min_fwhm(c_.system, n, c_.omega_range, c_.method, c_.solver, min_options());
    note("N" + std::to_string(n) + "_min", m.warnings, 0);
    return {cell(n), cell(m.omega_star), cell(m.fwhm.fwhm), cell(params_for(n, 0.0).g),
            cell(m.grid_fallback)};
  }

  void run_min_fwhm() {
    Table mins;
    mins.name = "min_fwhm.csv";
    mins.header = {"n_atoms", "omega_star", "fwhm_min", "g", "grid_fallback"};
    for (int n : c_.n_atoms) mins.rows.push_back(minimum_row(n));
    tables.push_back(std::move(mins));
  }

  void run_statistics() {
    const std::vector<double> gs = c_.g_values.empty() ? std::vector<double>{c_.system.g}
                                                       : c_.g_values;
    Table t;
    t.name = "statistics.csv";
    t.header = {"n_atoms", "g", "omega_c", "fwhm", "delta_p", "transmission_unit_norm",
                "mean_photons", "g2", "p21"};
    std::size_t max_fock = 0;
    std::vector<std::vector<double>> dists;
    for (int n : c_.n_atoms) {
      for (double g0 : gs) {
        SystemParams base = c_.system;
        base.g = g0;
        const SystemParams scaled = [&] {
          SystemParams p = base;
          if (c_.scale_g_with_atoms) p.g = g0 / std::sqrt(static_cast<double>(n));
          return p;
        }();
        const std::string label = "N" + std::to_string(n) + "_g" + label_number(scaled.g);
        double omega = 0.0;
        double width = 0.0;
        if (c_.statistics_omega) {
          omega = *c_.statistics_omega;
          SystemParams p = scaled;
          p.omega_c = omega;
          PointSolver solver(p, n, c_.method, c_.solver);
          width = measure_fwhm(solver, measure_options()).fwhm;
          note(label, solver.warnings(), 0);
        } else {
          const MinFwhmResult m =
              min_fwhm(base, n, c_.omega_range, c_.method, c_.solver, min_options());
          omega = m.omega_star;
          width = m.fwhm.fwhm;
          note(label, m.warnings, 0);
        }
        const double delta = c_.statistics_delta.value_or(0.5 * width);
        SystemParams p = scaled;
        p.omega_c = omega;
        const Spectrum single = [&] {
          SolverSettings s = c_.solver;
          for (;;) {
            PointSolver solver(p, n, c_.method, s);
            const int start = solver.fock_dim();
            Spectrum out;
            out.points.push_back(solver.solve(delta));
            out.fock_dim = solver.fock_dim();
            out.warnings = solver.warnings();
            if (c_.method == Method::Semiclassical || s.fock_dim != 0 || out.fock_dim == start) {
              return out;
            }
            s.fock_min = out.fock_dim;
          }
        }();
        note(label, single.warnings, single.fock_dim);
        const ObservableSet& o = single.points.front();
        t.rows.push_back({cell(n), cell(scaled.g), cell(omega), cell(width), cell(delta),
                          cell(o.transmission), cell(o.mean_photons), cell(o.g2), cell(o.p21)});
        dists.push_back(o.photon_distribution);
        max_fock = std::max(max_fock, o.photon_distribution.size());
      }
    }
    for (std::size_t k = 0; k < max_fock; ++k) t.header.push_back("P" + std::to_string(k));
    for (std::size_t i = 0; i < t.rows.size(); ++i) {
      for (std::size_t k = 0; k < max_fock; ++k) {
        t.rows[i].push_back(k < dists[i].size() ? cell(dists[i][k]) : "");
      }
    }
    tables.push_back(std::move(t));
  }

  void run_compare() {
    if (c_.methods.size() < 2) {
      throw ConfigError("semiclassical-compare.methods: at least two methods are required");
    }
    for (int n : c_.n_atoms) {
      const SystemParams p = params_for(n, c_.system.omega_c);
      const auto window = c_.window.value_or(default_window(p));
      std::vector<Spectrum> specs;
      for (Method m : c_.methods) {
        specs.push_back(consistent_spectrum(p, n, m, window, c_.points, 0));
        note("N" + std::to_string(n) + "_" + method_name(m), specs.back().warnings,
             specs.back().fock_dim);
      }
      Table t;
      t.name = "comparison_N" + std::to_string(n) + ".csv";
      t.header = {"delta_p"};
      for (Method m : c_.methods) {
        t.header.push_back("transmission_unit_norm_" + method_name(m));
        if (m == Method::Mcwf) t.header.push_back("transmission_se_mcwf");
      }
      const std::string ref = method_name(c_.methods.front());
      for (std::size_t j = 1; j < c_.methods.size(); ++j) {
        const std::string other = method_name(c_.methods[j]);
        t.header.push_back("abs_delta_" + other + "_vs_" + ref);
        t.header.push_back("rel_delta_" + other + "_vs_" + ref);
      }
      for (std::size_t i = 0; i < specs.front().points.size(); ++i) {
        std::vector<std::string> row{cell(specs.front().detunings[i])};
        for (std::size_t j = 0; j < specs.size(); ++j) {
          row.push_back(cell(specs[j].points[i].transmission));
          if (c_.methods[j] == Method::Mcwf) row.push_back(cell(specs[j].transmission_errors[i]));
        }
        const double base = specs.front().points[i].transmission;
        for (std::size_t j = 1; j < specs.size(); ++j) {
          const double d = specs[j].points[i].transmission - base;
          row.push_back(cell(std::abs(d)));
          row.push_back(cell(base != 0.0 ? std::abs(d) / std::abs(base)
                                         : std::numeric_limits<double>::quiet_NaN()));
        }
        t.rows.push_back(std::move(row));
      }
      tables.push_back(std::move(t));
    }
  }

  const RunConfig& c_;
};

}  // namespace

std::string experiment_name(Experiment kind) {
  switch (kind) {
    case Experiment::Spectrum:
      return "spectrum";
    case Experiment::FwhmMap:
      return "fwhm-map";
    case Experiment::ControlSweep:
      return "control-sweep";
    case Experiment::MinFwhm:
      return "min-fwhm";
    case Experiment::Statistics:
      return "statistics";
    case Experiment::SemiclassicalCompare:
      return "semiclassical-compare";
  }
  return "unknown";
}

std::string format_number(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.12e", v);
  return buf;
}

RunConfig parse_config(const std::string& text) {
  ptree tree;
  std::istringstream in(text);
  try {
    boost::property_tree::ini_parser::read_ini(in, tree);
  } catch (const boost::property_tree::ini_parser_error& e) {
    throw ConfigError("config syntax error at line " + std::to_string(e.line()) + ": " +
                      e.message());
  }
  Reader r(tree);
  RunConfig c;
  const auto kind = r.raw("", "experiment");
  if (!kind) throw ConfigError("experiment: required field is missing");
  c.experiment = parse_experiment(*kind);
  c.method = parse_method(r.string("", "method", "quantum-steady"));
  const std::string sec = experiment_name(c.experiment);

  // [system]
  SystemParams& s = c.system;
  s.kappa = r.number("system", "kappa", 1.0);
  s.gamma31 = r.number("system", "gamma31", 0.0);
  s.gamma32 = r.number("system", "gamma32", 0.0);
  s.gamma1 = r.number("system", "gamma1", 0.0);
  s.gamma2 = r.number("system", "gamma2", 0.0);
  s.g = r.required("system", "g");
  s.omega_c = r.number("system", "omega_c", 0.0);
  const auto eps = r.number("system", "epsilon");
  const auto eps_sq = r.number("system", "epsilon_sq");
  if (eps && eps_sq) throw ConfigError("system.epsilon: give epsilon or epsilon_sq, not both");
  if (!eps && !eps_sq) throw ConfigError("system.epsilon: required field is missing");
  if (eps_sq && *eps_sq < 0.0) throw ConfigError("system.epsilon_sq: must be non-negative");
  s.epsilon = eps ? *eps : std::sqrt(*eps_sq) * s.kappa;
  const std::string scaling = r.string("system", "g_scaling", "none");
  if (scaling == "inverse-sqrt-n") {
    c.scale_g_with_atoms = true;
  } else if (scaling != "none") {
    throw ConfigError("system.g_scaling: expected none or inverse-sqrt-n");
  }
  try {
    s.validate();
  } catch (const ConfigError& e) {
    throw ConfigError(std::string("system.") + e.what());
  }

  // [solver]
  SolverSettings& v = c.solver;
  const std::string fock = r.string("solver", "fock_dim", "auto");
  if (fock != "auto") {
    v.fock_dim = r.integer("solver", "fock_dim", 0);
    if (v.fock_dim < 2) throw ConfigError("solver.fock_dim: must be at least 2 or auto");
  }
  v.tail_tolerance = r.number("solver", "tail_tolerance", v.tail_tolerance);
  v.dimension_cap = r.integer("solver", "dimension_cap", v.dimension_cap);
  const std::string linear = r.string("solver", "linear_solver", "auto");
  if (linear == "auto") {
    v.steady.solver = LinearSolver::Auto;
  } else if (linear == "direct") {
    v.steady.solver = LinearSolver::Direct;
  } else if (linear == "iterative") {
    v.steady.solver = LinearSolver::Iterative;
  } else {
    throw ConfigError("solver.linear_solver: expected auto, direct or iterative");
  }
  v.mcwf.trajectories = r.integer("solver", "trajectories", v.mcwf.trajectories);
  v.mcwf.base_seed = static_cast<std::uint64_t>(
      r.integer("solver", "base_seed", static_cast<int>(v.mcwf.base_seed)));
  v.mcwf.t_final = r.number("solver", "t_final", v.mcwf.t_final);
  v.mcwf.dt_max = r.number("solver", "dt_max", v.mcwf.dt_max);
  v.mcwf.threads = r.integer("solver", "threads", v.mcwf.threads);
  v.semiclassical.tolerance = r.number("solver", "semiclassical_tolerance", v.semiclassical.tolerance);
  v.semiclassical.window = r.number("solver", "semiclassical_window", v.semiclassical.window);
  v.semiclassical.time_budget =
      r.number("solver", "semiclassical_time_budget", v.semiclassical.time_budget);
  v.delta1 = r.number("solver", "delta1", 0.0);
  v.delta2 = r.number("solver", "delta2", 0.0);
  v.gamma3 = r.number("solver", "gamma3", 0.0);
  if (v.mcwf.trajectories < 1) throw ConfigError("solver.trajectories: must be at least 1");
  if (!(v.mcwf.t_final > 0.0)) throw ConfigError("solver.t_final: must be positive");
  if (!(v.mcwf.dt_max > 0.0)) throw ConfigError("solver.dt_max: must be positive");
  if (v.mcwf.threads < 1) throw ConfigError("solver.threads: must be at least 1");
  if (!(v.tail_tolerance > 0.0)) throw ConfigError("solver.tail_tolerance: must be positive");
  if (!(v.semiclassical.tolerance > 0.0)) {
    throw ConfigError("solver.semiclassical_tolerance: must be positive");
  }
  if (!(v.gamma3 >= 0.0)) throw ConfigError("solver.gamma3: must be non-negative");

  // experiment section
  c.n_atoms = r.atom_list(sec);
  c.points = r.integer(sec, "points", 41);
  c.half_width = r.number_or_auto(sec, "half_width");
  c.fwhm_tolerance = r.number(sec, "fwhm_tolerance", 1e-3);
  if (c.half_width && !(*c.half_width > 0.0)) throw ConfigError(sec + ".half_width: must be positive");
  if (c.points < 41) throw ConfigError(sec + ".points: at least 41 points are required");
  switch (c.experiment) {
    case Experiment::Spectrum:
      c.window = r.range(sec, "window");
      c.refine = r.integer(sec, "refine", 0);
      c.omega_values = r.list(sec, "omega_c").value_or(std::vector<double>{});
      break;
    case Experiment::FwhmMap:
      c.g_values = r.list(sec, "g").value_or(std::vector<double>{});
      c.omega_grid = r.list(sec, "omega_c").value_or(std::vector<double>{});
      c.observe_delta_p = r.number(sec, "observe_delta_p");
      break;
    case Experiment::ControlSweep:
      c.omega_grid = r.list(sec, "omega_c").value_or(std::vector<double>{});
      if (c.omega_grid.empty()) throw ConfigError(sec + ".omega_c: required field is missing");
      c.find_minimum = r.boolean(sec, "find_minimum", false);
      c.omega_range = r.range(sec, "min_range").value_or(c.omega_range);
      c.min_tolerance = r.number(sec, "min_tolerance", c.min_tolerance);
      c.coarse_points = r.integer(sec, "coarse_points", c.coarse_points);
      break;
    case Experiment::MinFwhm:
      c.omega_range = r.range(sec, "omega_range").value_or(c.omega_range);
      c.min_tolerance = r.number(sec, "tolerance", c.min_tolerance);
      c.coarse_points = r.integer(sec, "coarse_points", c.coarse_points);
      break;
    case Experiment::Statistics:
      c.g_values = r.list(sec, "g").value_or(std::vector<double>{});
      c.statistics_omega = r.number_or_auto(sec, "omega_c");
      c.statistics_delta = r.number_or_auto(sec, "delta_p");
      c.omega_range = r.range(sec, "omega_range").value_or(c.omega_range);
      c.min_tolerance = r.number(sec, "min_tolerance", c.min_tolerance);
      c.coarse_points = r.integer(sec, "coarse_points", c.coarse_points);
      break;
    case Experiment::SemiclassicalCompare: {
      c.window = r.range(sec, "window");
      const auto names = r.raw(sec, "methods");
      if (!names) throw ConfigError(sec + ".methods: required field is missing");
      for (const auto& m : split(*names, ',')) {
        try {
          c.methods.push_back(parse_method(m));
        } catch (const ConfigError& e) {
          throw ConfigError(sec + "." + e.what());
        }
      }
      break;
    }
  }
  if (c.min_tolerance <= 0.0) throw ConfigError(sec + ".min_tolerance: must be positive");
  if (c.coarse_points < 3) throw ConfigError(sec + ".coarse_points: must be at least 3");
  for (double w : c.omega_grid) {
    if (w < 0.0) throw ConfigError(sec + ".omega_c: values must be non-negative");
  }
  r.reject_unknown({"system", "solver", sec});
  return c;
}

RunConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read config file '" + path + "'");
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_config(buf.str());
}

void apply_overrides(RunConfig& config, const Overrides& overrides) {
  if (overrides.method) config.method = *overrides.method;
  if (overrides.threads) {
    if (*overrides.threads < 1) throw ConfigError("--threads: must be at least 1");
    config.solver.mcwf.threads = *overrides.threads;
  }
  if (overrides.seed) config.solver.mcwf.base_seed = *overrides.seed;
}

json RunConfig::to_json() const {
  json j;
  j["experiment"] = experiment_name(experiment);
  j["method"] = method_name(method);
  j["system"] = {{"kappa", system.kappa},     {"gamma31", system.gamma31},
                 {"gamma32", system.gamma32}, {"gamma1", system.gamma1},
                 {"gamma2", system.gamma2},   {"g", system.g},
                 {"omega_c", system.omega_c}, {"epsilon", system.epsilon},
                 {"g_scaling", scale_g_with_atoms ? "inverse-sqrt-n" : "none"}};
  const char* linear = solver.steady.solver == LinearSolver::Auto     ? "auto"
                       : solver.steady.solver == LinearSolver::Direct ? "direct"
                                                                      : "iterative";
  j["solver"] = {{"fock_dim", solver.fock_dim == 0 ? json("auto") : json(solver.fock_dim)},
                 {"tail_tolerance", solver.tail_tolerance},
                 {"dimension_cap", solver.dimension_cap},
                 {"linear_solver", linear},
                 {"trajectories", solver.mcwf.trajectories},
                 {"base_seed", solver.mcwf.base_seed},
                 {"t_final", solver.mcwf.t_final},
                 {"dt_max", solver.mcwf.dt_max},
                 {"semiclassical_tolerance", solver.semiclassical.tolerance},
                 {"semiclassical_window", solver.semiclassical.window},
                 {"semiclassical_time_budget", solver.semiclassical.time_budget},
                 {"delta1", solver.delta1},
                 {"delta2", solver.delta2},
                 {"gamma3", solver.gamma3}};
  json e;
  e["n_atoms"] = n_atoms;
  e["points"] = points;
  e["half_width"] = half_width ? json(*half_width) : json("auto");
  e["fwhm_tolerance"] = fwhm_tolerance;
  switch (experiment) {
    case Experiment::Spectrum:
      e["window"] = window ? json({window->first, window->second}) : json("auto");
      e["refine"] = refine;
      e["omega_c"] = omega_values;
      break;
    case Experiment::FwhmMap:
      e["g"] = g_values;
      e["omega_c"] = omega_grid;
      if (observe_delta_p) e["observe_delta_p"] = *observe_delta_p;
      break;
    case Experiment::ControlSweep:
      e["omega_c"] = omega_grid;
      e["find_minimum"] = find_minimum;
      e["min_range"] = {omega_range.first, omega_range.second};
      e["min_tolerance"] = min_tolerance;
      e["coarse_points"] = coarse_points;
      break;
    case Experiment::MinFwhm:
      e["omega_range"] = {omega_range.first, omega_range.second};
      e["tolerance"] = min_tolerance;
      e["coarse_points"] = coarse_points;
      break;
    case Experiment::Statistics:
      e["g"] = g_values;
      e["omega_c"] = statistics_omega ? json(*statistics_omega) : json("auto");
      e["delta_p"] = statistics_delta ? json(*statistics_delta) : json("auto");
      e["omega_range"] = {omega_range.first, omega_range.second};
      e["min_tolerance"] = min_tolerance;
      e["coarse_points"] = coarse_points;
      break;
    case Experiment::SemiclassicalCompare: {
      e["window"] = window ? json({window->first, window->second}) : json("auto");
      std::vector<std::string> names;
      for (Method m : methods) names.push_back(method_name(m));
      e["methods"] = names;
      break;
    }
  }
  j[experiment_name(experiment)] = e;
  return j;
}

std::string run_identifier(const RunConfig& config) {
  const std::string text = config.to_json().dump();
  std::uint64_t h = 1469598103934665603ULL;
  for (unsigned char ch : text) {
    h ^= ch;
    h *= 1099511628211ULL;
  }
  return hex64(h);
}

RunReport run_config(const RunConfig& config, const std::string& out_dir) {
  const auto start = std::chrono::steady_clock::now();
  RunReport report;
  report.run_id = run_identifier(config);

  Runner runner(config);
  runner.run();

  std::filesystem::create_directories(out_dir);
  for (const Table& t : runner.tables) {
    const std::filesystem::path path = std::filesystem::path(out_dir) / t.name;
    std::ofstream out(path, std::ios::binary);
    out << t.render(report.run_id);
    if (!out) throw std::runtime_error("failed to write " + path.string());
    report.files.push_back(t.name);
  }
  report.warnings = runner.warnings;
  report.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();

  json manifest;
  manifest["run_id"] = report.run_id;
  manifest["config"] = config.to_json();
  manifest["seed"] = config.solver.mcwf.base_seed;
  manifest["fock_dim_used"] = runner.fock_used;
  manifest["warnings"] = report.warnings;
  manifest["timings"] = {{"wall_seconds", report.seconds}};
  manifest["files"] = report.files;
  manifest["versions"] = {{"artifact", kVersion},
                          {"eigen", std::to_string(EIGEN_WORLD_VERSION) + "." +
                                        std::to_string(EIGEN_MAJOR_VERSION) + "." +
                                        std::to_string(EIGEN_MINOR_VERSION)},
                          {"compiler", __VERSION__}};
  const std::filesystem::path mpath = std::filesystem::path(out_dir) / "manifest.json";
  std::ofstream mout(mpath);
  mout << manifest.dump(2) << "\n";
  if (!mout) throw std::runtime_error("failed to write " + mpath.string());
  report.files.push_back("manifest.json");
  return report;
}

}  // namespace cavity_eit
