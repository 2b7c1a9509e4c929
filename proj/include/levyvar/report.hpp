#pragma once

// Report emission. An ExperimentReport is serialized to JSON once; CSV tables
// and gnuplot data files are rendered from that JSON, so saved reports can be
// re-rendered without rerunning anything.

#include <boost/math/distributions/normal.hpp>
#include <nlohmann/json.hpp>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "levyvar/mc_harness.hpp"

namespace levyvar {

using json = nlohmann::ordered_json;

// ---------------------------------------------------------------------------
// Config echo (same keys as the YAML schema)

inline json to_json(const TestFunction& f) {
  json j;
  std::visit(overloaded{
                 [&](const PowerAbs& x) { j = {{"form", "power_abs"}, {"r", x.r}}; },
                 [&](const TruncatedPower& x) { j = {{"form", "truncated_power"}, {"r", x.r}, {"a", x.a}}; },
                 [&](const PhiR& x) { j = {{"form", "phi_r"}, {"r", x.r}}; },
                 [&](const SmoothTruncatedPower& x) {
                   j = {{"form", "smooth_truncated_power"}, {"r", x.r}, {"eta", x.eta}};
                 },
                 [&](const SquareNearZero& x) { j = {{"form", "square_near_zero"}, {"K", x.K}}; },
                 [&](const CubicPlus& x) { j = {{"form", "cubic_plus"}, {"p", x.p}}; },
                 [&](const SignedPower& x) { j = {{"form", "signed_power"}, {"r", x.r}}; },
             },
             f.form());
  return j;
}

inline json to_json(const JumpLaw& law) {
  json j;
  std::visit(overloaded{
                 [&](const PointMasses& pm) {
                   json atoms = json::array();
                   for (const auto& [v, w] : pm.atoms) atoms.push_back({v, w});
                   j = {{"type", "point_masses"}, {"atoms", atoms}};
                 },
                 [&](const GaussianLaw& g) { j = {{"type", "gaussian"}, {"mean", g.mean}, {"sd", g.sd}}; },
                 [&](const UniformLaw& u) { j = {{"type", "uniform"}, {"lo", u.lo}, {"hi", u.hi}}; },
             },
             law);
  return j;
}

inline json to_json(const JumpMeasureSpec& jm) {
  json j;
  std::visit(overloaded{
                 [&](const NoJumps&) { j = {{"type", "none"}}; },
                 [&](const CompoundPoisson& cp) {
                   j = {{"type", "compound_poisson"}, {"intensity", cp.intensity}, {"law", to_json(cp.law)}};
                 },
                 [&](const PowerLawSmallJumps& pl) {
                   j = {{"type", "power_law"},
                        {"alpha", pl.alpha},
                        {"scale", pl.scale},
                        {"cutoff", pl.cutoff},
                        {"symmetric", pl.symmetric}};
                 },
             },
             jm);
  return j;
}

inline json to_json(const std::vector<JumpRecord>& jumps) {
  json a = json::array();
  for (const auto& r : jumps) a.push_back({{"time", r.time}, {"size", r.size}});
  return a;
}

inline json to_json(const ExperimentConfig& cfg) {
  json fs = json::array();
  for (std::size_t i = 0; i < cfg.f_list.size(); ++i) {
    auto f = to_json(cfg.f_list[i]);
    f["functional"] = to_string(cfg.functional_of(i));
    fs.push_back(f);
  }
  json checks = json::array();
  const std::pair<const char*, bool> enabled[] = {
      {"lln", cfg.checks.lln},   {"rate", cfg.checks.rate},
      {"clt", cfg.checks.clt},   {"joint", cfg.checks.joint},
      {"conditional", cfg.checks.conditional}, {"long_horizon", cfg.checks.long_horizon}};
  for (const auto& [name, on] : enabled)
    if (on) checks.push_back(name);
  const auto& t = cfg.tol;
  json scenarios = json::array();
  for (const auto& s : cfg.scenarios) scenarios.push_back(to_json(s));
  json j = {
      {"name", cfg.name},
      {"model",
       {{"drift_b", cfg.model.drift()},
        {"gauss_var_c", cfg.model.gauss_var()},
        {"jumps", to_json(cfg.model.jump_measure())}}},
      {"functions", fs},
      {"delta_ladder", cfg.delta_ladder},
      {"horizon", cfg.horizon},
      {"mode", cfg.mode == HorizonMode::FixedHorizon ? "fixed" : "growing"},
      {"growing", {{"n", cfg.growing.n}, {"gamma", cfg.growing.gamma}}},
      {"replicas", cfg.replicas},
      {"seed", cfg.seed},
      {"checks", checks},
      {"tolerances",
       {{"lln_rel", t.lln_rel},
        {"lln_replica_fraction", t.lln_replica_fraction},
        {"clt_var_rel", t.clt_var_rel},
        {"ks_factor", t.ks_factor},
        {"rate_expected", t.rate_expected},
        {"rate_slope", t.rate_slope},
        {"rate_r2", t.rate_r2},
        {"joint_frob", t.joint_frob},
        {"conditional_var_rel", t.conditional_var_rel},
        {"conditional_zero_abs", t.conditional_zero_abs},
        {"long_rel", t.long_rel},
        {"centering_budget", t.centering_budget},
        {"monotone_fraction", t.monotone_fraction}}},
      {"coupled_ladder", cfg.coupled_ladder},
      {"scenarios", scenarios},
      {"scenario_count", cfg.scenario_count},
      {"simulation",
       {{"small_jump_mode",
         cfg.simulation.small_jump_mode == SmallJumpMode::GaussianApprox ? "gaussian" : "truncate"}}},
  };
  if (cfg.verdict_label) j["verdict"] = *cfg.verdict_label;
  if (cfg.centering_draws) j["centering_draws"] = *cfg.centering_draws;
  if (cfg.simulation.epsilon) j["simulation"]["epsilon"] = *cfg.simulation.epsilon;
  return j;
}

// ---------------------------------------------------------------------------
// Verdicts

inline json to_json(const RegimeVerdict& v) {
  json j = {
      {"theorem", to_string(v.theorem)},
      {"label", v.label},
      {"query",
       {{"mode", to_string(v.query.mode)},
        {"functional", to_string(v.query.functional)},
        {"order", to_string(v.query.order)}}},
  };
  if (!v.covered()) {
    j["reason"] = v.reason;
    return j;
  }
  j["normalization"] = {{"delta_exponent", v.normalization_exponent},
                        {"n_exponent", v.normalization_n_exponent},
                        {"scale_kind", to_string(v.scale_kind)}};
  if (v.scale_target) j["normalization"]["scale_target"] = v.scale_target->describe();
  j["clt_scale"] = {{"delta_exponent", v.clt_delta_exponent}, {"n_exponent", v.clt_n_exponent}};
  j["centering"] = {{"kind", to_string(v.centering.kind)},
                    {"delta_exponent", v.centering.delta_exponent},
                    {"n_exponent", v.centering.n_exponent},
                    {"scaled_increments", v.centering.scaled_increments},
                    {"value", v.centering.value},
                    {"extra_slope", v.centering.extra_slope},
                    {"source", to_string(v.centering.source)}};
  if (v.centering.target) j["centering"]["target"] = v.centering.target->describe();
  j["limit"] = {{"kind", to_string(v.limit.kind)},
                {"value", v.limit.value},
                {"drift_slope", v.limit.drift_slope},
                {"extra_variance", v.limit.extra_variance},
                {"plus_compensated_jumps", v.limit.plus_compensated_jumps}};
  if (v.limit.function) j["limit"]["function"] = v.limit.function->describe();
  if (!v.limit.matrix.empty()) j["limit"]["matrix"] = v.limit.matrix;
  j["empirical_rate"] = v.empirical_rate;
  j["notes"] = v.notes;
  return j;
}

// ---------------------------------------------------------------------------
// Reports

inline json to_json(const ExperimentReport& rep) {
  json lln = json::array();
  for (const auto& r : rep.lln) {
    json ladder = json::array();
    for (const auto& p : r.ladder)
      ladder.push_back({{"delta", p.delta},
                        {"n", p.n},
                        {"horizon", p.horizon},
                        {"estimate", p.estimate},
                        {"predicted", p.predicted},
                        {"abs_error", p.abs_error},
                        {"rel_error", p.rel_error},
                        {"se", p.se},
                        {"mean_abs_error", p.mean_abs_error},
                        {"sup_error", p.sup_error},
                        {"within_fraction", p.within_fraction},
                        {"neglected_jump_bound", p.neglected_jump_bound}});
    json x = {{"f", r.f},
              {"label", r.label},
              {"limit_kind", r.limit_kind},
              {"random_limit", r.random_limit},
              {"slope", r.slope},
              {"centering_source", r.centering_source},
              {"ladder", ladder},
              {"monotone_fraction", r.monotone_fraction},
              {"notes", r.notes}};
    if (r.rate) x["rate"] = {{"slope", r.rate->slope}, {"intercept", r.rate->intercept}, {"r2", r.rate->r2}};
    lln.push_back(x);
  }
  json clt = json::array();
  for (const auto& r : rep.clt)
    clt.push_back({{"f", r.f},
                   {"label", r.label},
                   {"functional", r.functional},
                   {"delta", r.delta},
                   {"n", r.n},
                   {"horizon", r.horizon},
                   {"replicas", r.replicas},
                   {"mean", r.mean},
                   {"variance", r.variance},
                   {"variance_se", r.variance_se},
                   {"predicted_variance", r.predicted_variance},
                   {"rel_error", r.rel_error},
                   {"ks", r.ks},
                   {"ks_threshold", r.ks_threshold},
                   {"centering_source", r.centering_source},
                   {"centering_value", r.centering_value},
                   {"centering_se", r.centering_se},
                   {"centering_draws", r.centering_draws},
                   {"budget_ratio", r.budget_ratio},
                   {"ran", r.ran},
                   {"notes", r.notes},
                   {"samples", r.samples}});
  json conditional = json::array();
  for (const auto& r : rep.conditional) {
    json sc = json::array();
    for (const auto& s : r.scenarios)
      sc.push_back({{"jumps", to_json(s.jumps)},
                    {"mean", s.mean},
                    {"variance", s.variance},
                    {"predicted_variance", s.predicted_variance},
                    {"rel_error", s.rel_error}});
    conditional.push_back(
        {{"f", r.f}, {"label", r.label}, {"delta", r.delta}, {"resamples", r.resamples}, {"scenarios", sc}});
  }
  json long_horizon = json::array();
  for (const auto& r : rep.long_horizon) {
    json pts = json::array();
    for (const auto& p : r.points)
      pts.push_back({{"n", p.n},
                     {"delta", p.delta},
                     {"horizon", p.horizon},
                     {"estimate", p.estimate},
                     {"se", p.se},
                     {"predicted", p.predicted},
                     {"rel_error", p.rel_error}});
    long_horizon.push_back({{"f", r.f}, {"label", r.label}, {"slope", r.slope}, {"points", pts}});
  }
  json checks = json::array();
  for (const auto& c : rep.checks)
    checks.push_back({{"name", c.name},
                      {"subject", c.subject},
                      {"value", c.value},
                      {"threshold", c.threshold},
                      {"upper", c.upper},
                      {"hard", c.hard},
                      {"passed", c.passed}});
  json j = {{"name", rep.config.name},
            {"passed", rep.passed()},
            {"failures", rep.failures()},
            {"error", rep.error},
            {"config", to_json(rep.config)},
            {"lln", lln},
            {"clt", clt},
            {"joint", nullptr},
            {"conditional", conditional},
            {"long_horizon", long_horizon},
            {"checks", checks},
            {"caveats", rep.caveats},
            {"wall_clock_seconds", rep.wall_clock_seconds}};
  if (rep.joint) {
    const auto& r = *rep.joint;
    j["joint"] = {{"label", r.label},
                  {"components", r.components},
                  {"delta", r.delta},
                  {"replicas", r.replicas},
                  {"empirical", r.empirical},
                  {"predicted", r.predicted},
                  {"frobenius_rel_error", r.frobenius_rel_error},
                  {"budget_ratios", r.budget_ratios},
                  {"ran", r.ran}};
  }
  return j;
}

// ---------------------------------------------------------------------------
// Rendering from JSON

namespace detail {

inline std::string fmt_num(const json& v) {
  if (v.is_null()) return "nan";
  if (v.is_boolean()) return v.get<bool>() ? "1" : "0";
  if (v.is_number_unsigned()) return std::to_string(v.get<std::uint64_t>());
  if (v.is_number_integer()) return std::to_string(v.get<std::int64_t>());
  if (v.is_number()) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.12g", v.get<double>());
    return buf;
  }
  return v.get<std::string>();
}

inline std::string csv_field(const json& v) {
  std::string s = v.is_string() ? v.get<std::string>() : fmt_num(v);
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string q = "\"";
  for (char ch : s) {
    if (ch == '"') q += '"';
    q += ch;
  }
  return q + "\"";
}

inline std::ofstream open_out(const std::filesystem::path& p) {
  std::ofstream os(p);
  if (!os) throw std::runtime_error("cannot write " + p.string());
  return os;
}

class CsvTable {
 public:
  explicit CsvTable(std::vector<std::string> columns) : columns_(std::move(columns)) {}

  void add(const json& row) { rows_.push_back(row); }

  [[nodiscard]] bool empty() const { return rows_.empty(); }

  void write(const std::filesystem::path& p) const {
    auto os = open_out(p);
    for (std::size_t i = 0; i < columns_.size(); ++i) os << (i ? "," : "") << columns_[i];
    os << '\n';
    for (const auto& row : rows_) {
      for (std::size_t i = 0; i < columns_.size(); ++i) {
        const auto it = row.find(columns_[i]);
        os << (i ? "," : "") << (it == row.end() ? std::string() : csv_field(*it));
      }
      os << '\n';
    }
  }

 private:
  std::vector<std::string> columns_;
  std::vector<json> rows_;
};

inline void write_series(const std::filesystem::path& p, const std::string& title, const std::string& xname,
                         const std::string& yname, const std::vector<std::pair<json, json>>& pts) {
  auto os = open_out(p);
  os << "# " << title << '\n' << "# " << xname << ' ' << yname << '\n';
  for (const auto& [x, y] : pts) os << fmt_num(x) << ' ' << fmt_num(y) << '\n';
}

}  // namespace detail

/// Writes CSV tables for one report JSON into `dir`. Returns the files written.
inline std::vector<std::filesystem::path> write_csv_tables(const json& rep, const std::filesystem::path& dir) {
  using detail::CsvTable;
  std::vector<std::filesystem::path> out;
  auto flush = [&](const CsvTable& t, const char* file) {
    if (t.empty()) return;
    t.write(dir / file);
    out.push_back(dir / file);
  };

  CsvTable lln({"f", "label", "limit_kind", "delta", "n", "horizon", "estimate", "predicted", "abs_error",
                "rel_error", "se", "mean_abs_error", "sup_error", "within_fraction", "neglected_jump_bound"});
  CsvTable rate({"f", "label", "slope", "intercept", "r2"});
  for (const auto& r : rep.at("lln")) {
    for (auto p : r.at("ladder")) {
      p["f"] = r.at("f");
      p["label"] = r.at("label");
      p["limit_kind"] = r.at("limit_kind");
      lln.add(p);
    }
    if (r.contains("rate")) {
      auto row = r.at("rate");
      row["f"] = r.at("f");
      row["label"] = r.at("label");
      rate.add(row);
    }
  }
  flush(lln, "lln.csv");
  flush(rate, "rate.csv");

  CsvTable clt({"f", "label", "functional", "delta", "n", "horizon", "replicas", "mean", "variance", "variance_se",
                "predicted_variance", "rel_error", "ks", "ks_threshold", "centering_source", "centering_value",
                "centering_se", "centering_draws", "budget_ratio", "ran"});
  for (const auto& r : rep.at("clt")) clt.add(r);
  flush(clt, "clt.csv");

  CsvTable joint({"i", "j", "row", "column", "empirical", "predicted"});
  if (const auto& jr = rep.at("joint"); !jr.is_null()) {
    const auto& comps = jr.at("components");
    for (std::size_t i = 0; i < comps.size(); ++i)
      for (std::size_t k = 0; k < comps.size(); ++k)
        joint.add({{"i", i},
                   {"j", k},
                   {"row", comps[i]},
                   {"column", comps[k]},
                   {"empirical", jr.at("empirical")[i][k]},
                   {"predicted", jr.at("predicted")[i][k]}});
  }
  flush(joint, "joint.csv");

  CsvTable cond({"f", "label", "scenario", "jump_count", "mean", "variance", "predicted_variance", "rel_error"});
  for (const auto& r : rep.at("conditional")) {
    std::size_t k = 0;
    for (auto s : r.at("scenarios")) {
      s["f"] = r.at("f");
      s["label"] = r.at("label");
      s["scenario"] = k++;
      s["jump_count"] = s.at("jumps").size();
      cond.add(s);
    }
  }
  flush(cond, "conditional.csv");

  CsvTable lh({"f", "label", "n", "delta", "horizon", "estimate", "se", "predicted", "rel_error"});
  for (const auto& r : rep.at("long_horizon"))
    for (auto p : r.at("points")) {
      p["f"] = r.at("f");
      p["label"] = r.at("label");
      lh.add(p);
    }
  flush(lh, "long_horizon.csv");

  CsvTable checks({"name", "subject", "value", "threshold", "upper", "hard", "passed"});
  for (const auto& c : rep.at("checks")) checks.add(c);
  flush(checks, "checks.csv");
  return out;
}

/// Writes gnuplot data files (two whitespace-separated columns, one series
/// per file) for one report JSON into `dir`. Returns the files written.
inline std::vector<std::filesystem::path> write_plot_data(const json& rep, const std::filesystem::path& dir) {
  std::vector<std::filesystem::path> out;
  auto emit = [&](const std::string& file, const std::string& title, const char* x, const char* y,
                  const std::vector<std::pair<json, json>>& pts) {
    if (pts.empty()) return;
    detail::write_series(dir / file, title, x, y, pts);
    out.push_back(dir / file);
  };

  std::size_t k = 0;
  for (const auto& r : rep.at("lln")) {
    const std::string tag = "lln_" + std::to_string(k++);
    const std::string title = r.at("f").get<std::string>() + " " + r.at("label").get<std::string>();
    std::vector<std::pair<json, json>> err, est;
    for (const auto& p : r.at("ladder")) {
      err.emplace_back(p.at("delta"), p.at("rel_error"));
      est.emplace_back(p.at("delta"), p.at("estimate"));
    }
    emit(tag + "_rel_error.dat", title, "delta", "rel_error", err);
    emit(tag + "_estimate.dat", title, "delta", "estimate", est);
  }

  k = 0;
  for (const auto& r : rep.at("clt")) {
    const std::string tag = "clt_" + std::to_string(k++);
    const auto& xs = r.at("samples");
    const double var = r.at("predicted_variance").is_number() ? r.at("predicted_variance").get<double>() : 0.0;
    if (xs.empty() || !(var > 0.0)) continue;
    std::vector<double> sorted;
    for (const auto& x : xs) sorted.push_back(x.is_number() ? x.get<double>() : std::nan(""));
    std::sort(sorted.begin(), sorted.end());
    const boost::math::normal_distribution<double> law(0.0, std::sqrt(var));
    std::vector<std::pair<json, json>> qq;
    for (std::size_t i = 0; i < sorted.size(); ++i)
      qq.emplace_back(boost::math::quantile(law, (static_cast<double>(i) + 0.5) / static_cast<double>(sorted.size())),
                      sorted[i]);
    emit(tag + "_qq.dat", r.at("f").get<std::string>() + " " + r.at("label").get<std::string>(), "normal_quantile",
         "sample", qq);
  }

  k = 0;
  for (const auto& r : rep.at("conditional")) {
    const std::string tag = "conditional_" + std::to_string(k++);
    std::vector<std::pair<json, json>> pts;
    for (const auto& s : r.at("scenarios")) pts.emplace_back(s.at("predicted_variance"), s.at("variance"));
    emit(tag + "_variance.dat", r.at("f").get<std::string>() + " " + r.at("label").get<std::string>(),
         "predicted_variance", "variance", pts);
  }

  k = 0;
  for (const auto& r : rep.at("long_horizon")) {
    const std::string tag = "long_horizon_" + std::to_string(k++);
    std::vector<std::pair<json, json>> pts;
    for (const auto& p : r.at("points")) pts.emplace_back(p.at("horizon"), p.at("estimate"));
    emit(tag + "_estimate.dat", r.at("f").get<std::string>() + " " + r.at("label").get<std::string>(), "horizon",
         "estimate", pts);
  }
  return out;
}

inline json read_json(const std::filesystem::path& p) {
  std::ifstream in(p);
  if (!in) throw std::runtime_error("cannot open " + p.string());
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    throw std::runtime_error(p.string() + ": " + e.what());
  }
}

inline void write_json(const json& j, const std::filesystem::path& p) {
  auto os = detail::open_out(p);
  os << j.dump(2) << '\n';
}

}  // namespace levyvar
