#pragma once

// YAML suite configuration: a list of named experiments plus output
// settings. Every field is range-checked; errors carry the field path and
// the line/column of the offending node.

#include <yaml-cpp/yaml.h>

#include <cmath>
#include <cstdint>
#include <fstream>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "levyvar/mc_harness.hpp"

namespace levyvar {

struct OutputFormats {
  bool json = true;
  bool csv = true;
  bool plot = true;
};

struct SuiteConfig {
  std::vector<ExperimentConfig> experiments;
  std::string output_dir = "results";
  OutputFormats formats;
};

class ConfigError : public std::runtime_error {
 public:
  ConfigError(const std::string& field, const std::string& what, int line = -1, int column = -1)
      : std::runtime_error(format(field, what, line, column)), field_(field), line_(line), column_(column) {}

  [[nodiscard]] const std::string& field() const { return field_; }
  [[nodiscard]] int line() const { return line_; }
  [[nodiscard]] int column() const { return column_; }

 private:
  static std::string format(const std::string& field, const std::string& what, int line, int column) {
    std::string s = "config error";
    if (line >= 0) s += " at line " + std::to_string(line + 1) + ", column " + std::to_string(column + 1);
    if (!field.empty()) s += ": " + field;
    return s + ": " + what;
  }
  std::string field_;
  int line_;
  int column_;
};

namespace detail {

class ConfigReader {
 public:
  [[noreturn]] static void fail(const YAML::Node& n, const std::string& field, const std::string& what) {
    const auto m = n.Mark();
    throw ConfigError(field, what, m.is_null() ? -1 : m.line, m.is_null() ? -1 : m.column);
  }

  static void only_keys(const YAML::Node& n, const std::string& path, const std::set<std::string>& allowed) {
    if (!n.IsMap()) fail(n, path, "must be a mapping");
    for (const auto& kv : n) {
      const auto key = kv.first.as<std::string>();
      if (!allowed.count(key)) fail(kv.first, join(path, key), "unknown key");
    }
  }

  static std::string join(const std::string& path, const std::string& key) {
    return path.empty() ? key : path + "." + key;
  }

  template <typename T>
  static T scalar(const YAML::Node& n, const std::string& field) {
    if (!n.IsScalar()) fail(n, field, "must be a scalar");
    try {
      return n.as<T>();
    } catch (const YAML::Exception&) {
      fail(n, field, "has the wrong type");
    }
  }

  template <typename T>
  static T get(const YAML::Node& parent, const std::string& path, const std::string& key, T fallback) {
    const auto n = parent[key];
    if (!n) return fallback;
    return scalar<T>(n, join(path, key));
  }

  template <typename T>
  static T need(const YAML::Node& parent, const std::string& path, const std::string& key) {
    const auto n = parent[key];
    if (!n) fail(parent, join(path, key), "is required");
    return scalar<T>(n, join(path, key));
  }

  static double positive(const YAML::Node& parent, const std::string& path, const std::string& key) {
    const double v = need<double>(parent, path, key);
    if (!(v > 0.0) || !std::isfinite(v)) fail(parent[key], join(path, key), "must be > 0");
    return v;
  }

  static JumpLaw law(const YAML::Node& n, const std::string& path) {
    if (!n) throw ConfigError(path, "is required");
    const auto type = need<std::string>(n, path, "type");
    if (type == "point_masses") {
      only_keys(n, path, {"type", "atoms"});
      const auto atoms = n["atoms"];
      if (!atoms || !atoms.IsSequence() || atoms.size() == 0) fail(n, join(path, "atoms"), "must be a non-empty list");
      PointMasses pm;
      for (std::size_t i = 0; i < atoms.size(); ++i) {
        const auto a = atoms[i];
        const auto field = join(path, "atoms[" + std::to_string(i) + "]");
        if (!a.IsSequence() || a.size() != 2) fail(a, field, "must be [value, weight]");
        pm.atoms.emplace_back(scalar<double>(a[0], field), scalar<double>(a[1], field));
      }
      return pm;
    }
    if (type == "gaussian") {
      only_keys(n, path, {"type", "mean", "sd"});
      return GaussianLaw{get<double>(n, path, "mean", 0.0), positive(n, path, "sd")};
    }
    if (type == "uniform") {
      only_keys(n, path, {"type", "lo", "hi"});
      return UniformLaw{need<double>(n, path, "lo"), need<double>(n, path, "hi")};
    }
    fail(n["type"], join(path, "type"), "must be point_masses, gaussian or uniform");
  }

  static JumpMeasureSpec jumps(const YAML::Node& n, const std::string& path) {
    if (!n) return NoJumps{};
    const auto type = need<std::string>(n, path, "type");
    if (type == "none") {
      only_keys(n, path, {"type"});
      return NoJumps{};
    }
    if (type == "compound_poisson") {
      only_keys(n, path, {"type", "intensity", "law"});
      return CompoundPoisson{positive(n, path, "intensity"), law(n["law"], join(path, "law"))};
    }
    if (type == "power_law") {
      only_keys(n, path, {"type", "alpha", "scale", "cutoff", "symmetric"});
      return PowerLawSmallJumps{need<double>(n, path, "alpha"), get<double>(n, path, "scale", 1.0),
                                get<double>(n, path, "cutoff", 1.0), get<bool>(n, path, "symmetric", true)};
    }
    fail(n["type"], join(path, "type"), "must be none, compound_poisson or power_law");
  }

  static LevyCharacteristics model(const YAML::Node& n, const std::string& path) {
    if (!n) throw ConfigError(path, "is required");
    only_keys(n, path, {"drift_b", "gauss_var_c", "jumps"});
    const double b = get<double>(n, path, "drift_b", 0.0);
    const double c = get<double>(n, path, "gauss_var_c", 0.0);
    if (!(c >= 0.0) || !std::isfinite(c)) fail(n["gauss_var_c"], join(path, "gauss_var_c"), "must be >= 0");
    const auto jm = jumps(n["jumps"], join(path, "jumps"));
    try {
      return LevyCharacteristics(b, c, jm);
    } catch (const std::invalid_argument& e) {
      fail(n, join(path, "jumps"), e.what());
    }
  }

  static TestFunction function(const YAML::Node& n, const std::string& path) {
    const auto form = need<std::string>(n, path, "form");
    try {
      if (form == "power_abs") {
        only_keys(n, path, {"form", "r", "functional"});
        return TestFunction(PowerAbs{need<double>(n, path, "r")});
      }
      if (form == "phi_r") {
        only_keys(n, path, {"form", "r", "functional"});
        return TestFunction(PhiR{need<double>(n, path, "r")});
      }
      if (form == "truncated_power") {
        only_keys(n, path, {"form", "r", "a", "functional"});
        return TestFunction(TruncatedPower{need<double>(n, path, "r"), need<double>(n, path, "a")});
      }
      if (form == "smooth_truncated_power") {
        only_keys(n, path, {"form", "r", "eta", "functional"});
        return TestFunction(SmoothTruncatedPower{need<double>(n, path, "r"), need<double>(n, path, "eta")});
      }
      if (form == "square_near_zero") {
        only_keys(n, path, {"form", "K", "functional"});
        return TestFunction(SquareNearZero{need<double>(n, path, "K")});
      }
      if (form == "cubic_plus") {
        only_keys(n, path, {"form", "p", "functional"});
        return TestFunction(CubicPlus{need<double>(n, path, "p")});
      }
      if (form == "signed_power") {
        only_keys(n, path, {"form", "r", "functional"});
        return TestFunction(SignedPower{need<double>(n, path, "r")});
      }
    } catch (const std::invalid_argument& e) {
      fail(n, path, e.what());
    }
    fail(n["form"], join(path, "form"),
         "must be power_abs, phi_r, truncated_power, smooth_truncated_power, square_near_zero, cubic_plus or signed_power");
  }

  static Functional functional(const YAML::Node& n, const std::string& field) {
    const auto s = scalar<std::string>(n, field);
    if (s == "V") return Functional::V;
    if (s == "VPrime") return Functional::VPrime;
    fail(n, field, "must be V or VPrime");
  }

  static std::vector<double> doubles(const YAML::Node& n, const std::string& field) {
    if (!n.IsSequence()) fail(n, field, "must be a list");
    std::vector<double> out;
    for (std::size_t i = 0; i < n.size(); ++i) out.push_back(scalar<double>(n[i], field + "[" + std::to_string(i) + "]"));
    return out;
  }

  static ExperimentConfig experiment(const YAML::Node& n, const std::string& path) {
    only_keys(n, path,
              {"name", "model", "functions", "functional", "verdict", "delta_ladder", "horizon", "mode", "growing",
               "replicas", "seed", "checks", "tolerances", "coupled_ladder", "centering_draws", "scenarios",
               "scenario_count", "simulation", "threads"});
    ExperimentConfig cfg;
    cfg.name = need<std::string>(n, path, "name");
    if (cfg.name.empty() || cfg.name.find_first_not_of(
                                "abcdefghijklmnopqrstuvwxyzABCDEFGHIJKLMNOPQRSTUVWXYZ0123456789_.-") != std::string::npos ||
        cfg.name[0] == '.')
      fail(n["name"], join(path, "name"), "must be non-empty and use only letters, digits, '_', '.', '-'");
    const std::string p = path + "[" + cfg.name + "]";
    cfg.model = model(n["model"], join(p, "model"));

    const auto fs = n["functions"];
    if (!fs || !fs.IsSequence() || fs.size() == 0) fail(fs ? fs : n, join(p, "functions"), "must be a non-empty list");
    bool per_f = false;
    for (std::size_t i = 0; i < fs.size(); ++i)
      per_f = per_f || (fs[i].IsMap() && fs[i]["functional"]);
    if (n["functional"]) cfg.functional = functional(n["functional"], join(p, "functional"));
    for (std::size_t i = 0; i < fs.size(); ++i) {
      const auto field = join(p, "functions[" + std::to_string(i) + "]");
      cfg.f_list.push_back(function(fs[i], field));
      if (per_f)
        cfg.functionals.push_back(fs[i]["functional"] ? functional(fs[i]["functional"], join(field, "functional"))
                                                      : cfg.functional);
    }
    if (n["verdict"]) cfg.verdict_label = scalar<std::string>(n["verdict"], join(p, "verdict"));
    if (n["delta_ladder"]) cfg.delta_ladder = doubles(n["delta_ladder"], join(p, "delta_ladder"));
    cfg.horizon = get<double>(n, p, "horizon", 1.0);
    const auto mode = get<std::string>(n, p, "mode", "fixed");
    if (mode == "fixed") {
      cfg.mode = HorizonMode::FixedHorizon;
    } else if (mode == "growing") {
      cfg.mode = HorizonMode::GrowingHorizon;
    } else {
      fail(n["mode"], join(p, "mode"), "must be fixed or growing");
    }
    if (const auto g = n["growing"]) {
      only_keys(g, join(p, "growing"), {"n", "gamma"});
      if (!g["n"]) fail(g, join(p, "growing.n"), "is required");
      for (double v : doubles(g["n"], join(p, "growing.n"))) {
        if (!(v >= 2.0) || v != std::floor(v)) fail(g["n"], join(p, "growing.n"), "entries must be integers >= 2");
        cfg.growing.n.push_back(static_cast<std::size_t>(v));
      }
      cfg.growing.gamma = get<double>(g, join(p, "growing"), "gamma", 0.5);
    }
    const long long replicas = get<long long>(n, p, "replicas", 100);
    if (replicas < 2) fail(n["replicas"], join(p, "replicas"), "must be >= 2");
    cfg.replicas = static_cast<std::size_t>(replicas);
    cfg.seed = get<std::uint64_t>(n, p, "seed", 1);
    const long long threads = get<long long>(n, p, "threads", 1);
    if (threads < 0) fail(n["threads"], join(p, "threads"), "must be >= 0");
    cfg.threads = static_cast<unsigned>(threads);
    cfg.coupled_ladder = get<bool>(n, p, "coupled_ladder", true);
    if (n["centering_draws"]) {
      const long long d = scalar<long long>(n["centering_draws"], join(p, "centering_draws"));
      if (d < 2) fail(n["centering_draws"], join(p, "centering_draws"), "must be >= 2");
      cfg.centering_draws = static_cast<std::size_t>(d);
    }

    if (const auto c = n["checks"]) {
      if (!c.IsSequence()) fail(c, join(p, "checks"), "must be a list");
      for (std::size_t i = 0; i < c.size(); ++i) {
        const auto s = scalar<std::string>(c[i], join(p, "checks"));
        if (s == "lln") cfg.checks.lln = true;
        else if (s == "rate") cfg.checks.rate = true;
        else if (s == "clt") cfg.checks.clt = true;
        else if (s == "joint") cfg.checks.joint = true;
        else if (s == "conditional") cfg.checks.conditional = true;
        else if (s == "long_horizon") cfg.checks.long_horizon = true;
        else fail(c[i], join(p, "checks"), "unknown check '" + s + "'");
      }
    }
    if (const auto t = n["tolerances"]) {
      const auto tp = join(p, "tolerances");
      only_keys(t, tp,
                {"lln_rel", "lln_replica_fraction", "clt_var_rel", "ks_factor", "rate_expected", "rate_slope",
                 "rate_r2", "joint_frob", "conditional_var_rel", "conditional_zero_abs", "long_rel",
                 "centering_budget", "monotone_fraction"});
      auto& tol = cfg.tol;
      const std::pair<const char*, double*> fields[] = {
          {"lln_rel", &tol.lln_rel},
          {"lln_replica_fraction", &tol.lln_replica_fraction},
          {"clt_var_rel", &tol.clt_var_rel},
          {"ks_factor", &tol.ks_factor},
          {"rate_expected", &tol.rate_expected},
          {"rate_slope", &tol.rate_slope},
          {"rate_r2", &tol.rate_r2},
          {"joint_frob", &tol.joint_frob},
          {"conditional_var_rel", &tol.conditional_var_rel},
          {"conditional_zero_abs", &tol.conditional_zero_abs},
          {"long_rel", &tol.long_rel},
          {"centering_budget", &tol.centering_budget},
          {"monotone_fraction", &tol.monotone_fraction},
      };
      for (const auto& [key, slot] : fields) {
        *slot = get<double>(t, tp, key, *slot);
        if (!(*slot >= 0.0) || !std::isfinite(*slot)) fail(t[key], join(tp, key), "must be >= 0");
      }
    }
    if (const auto s = n["scenarios"]) {
      if (!s.IsSequence()) fail(s, join(p, "scenarios"), "must be a list of jump lists");
      for (std::size_t k = 0; k < s.size(); ++k) {
        const auto field = join(p, "scenarios[" + std::to_string(k) + "]");
        if (!s[k].IsSequence()) fail(s[k], field, "must be a list of {time, size}");
        std::vector<JumpRecord> jumps;
        for (std::size_t i = 0; i < s[k].size(); ++i) {
          only_keys(s[k][i], field, {"time", "size"});
          jumps.push_back({need<double>(s[k][i], field, "time"), need<double>(s[k][i], field, "size")});
        }
        cfg.scenarios.push_back(std::move(jumps));
      }
    }
    const long long sc = get<long long>(n, p, "scenario_count", 0);
    if (sc < 0) fail(n["scenario_count"], join(p, "scenario_count"), "must be >= 0");
    cfg.scenario_count = static_cast<std::size_t>(sc);
    if (const auto s = n["simulation"]) {
      const auto sp = join(p, "simulation");
      only_keys(s, sp, {"small_jump_mode", "epsilon"});
      const auto m = get<std::string>(s, sp, "small_jump_mode", "gaussian");
      if (m == "gaussian") {
        cfg.simulation.small_jump_mode = SmallJumpMode::GaussianApprox;
      } else if (m == "truncate") {
        cfg.simulation.small_jump_mode = SmallJumpMode::Truncate;
      } else {
        fail(s["small_jump_mode"], join(sp, "small_jump_mode"), "must be gaussian or truncate");
      }
      if (s["epsilon"]) cfg.simulation.epsilon = positive(s, sp, "epsilon");
    }
    try {
      validate(cfg);
    } catch (const std::invalid_argument& e) {
      // "experiment 'name': <field> <what>"
      const std::string msg = e.what();
      const auto at = msg.find("': ");
      const auto rest = at == std::string::npos ? msg : msg.substr(at + 3);
      const auto field = rest.substr(0, rest.find(' '));
      const auto node = n[field.substr(0, field.find('.'))];
      fail(node ? node : n, join(p, field), rest.substr(std::min(rest.size(), field.size() + 1)));
    }
    return cfg;
  }
};

}  // namespace detail

/// Parses and validates a YAML suite. Throws ConfigError.
inline SuiteConfig parse_config(const std::string& text) {
  YAML::Node root;
  try {
    root = YAML::Load(text);
  } catch (const YAML::ParserException& e) {
    throw ConfigError("", e.msg, e.mark.line, e.mark.column);
  }
  using R = detail::ConfigReader;
  SuiteConfig suite;
  if (!root || root.IsNull()) return suite;
  R::only_keys(root, "", {"output_dir", "formats", "experiments"});
  suite.output_dir = R::get<std::string>(root, "", "output_dir", suite.output_dir);
  if (const auto f = root["formats"]) {
    R::only_keys(f, "formats", {"json", "csv", "plot"});
    suite.formats.json = R::get<bool>(f, "formats", "json", true);
    suite.formats.csv = R::get<bool>(f, "formats", "csv", true);
    suite.formats.plot = R::get<bool>(f, "formats", "plot", true);
  }
  if (const auto ex = root["experiments"]) {
    if (!ex.IsSequence()) R::fail(ex, "experiments", "must be a list");
    std::set<std::string> names;
    for (std::size_t i = 0; i < ex.size(); ++i) {
      auto cfg = R::experiment(ex[i], "experiments");
      if (!names.insert(cfg.name).second) R::fail(ex[i]["name"], "experiments", "duplicate experiment name '" + cfg.name + "'");
      suite.experiments.push_back(std::move(cfg));
    }
  }
  return suite;
}

inline SuiteConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open config " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str());
}

}  // namespace levyvar
