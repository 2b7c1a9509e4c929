#pragma once

// Suite orchestration: runs experiments in order, writes one directory of
// outputs per experiment plus a summary, and maps hard failures to the exit
// status.

#include <cstdio>
#include <filesystem>
#include <optional>
#include <ostream>
#include <stdexcept>
#include <string>
#include <vector>

#include "levyvar/config.hpp"
#include "levyvar/report.hpp"

namespace levyvar {

struct RunOptions {
  std::optional<std::uint64_t> seed;
  std::optional<unsigned> threads;
  std::optional<std::string> only;
  std::optional<std::string> out_dir;
};

/// Applies command-line overrides and the --only filter.
inline SuiteConfig apply_options(SuiteConfig suite, const RunOptions& opt) {
  if (opt.only) {
    std::vector<ExperimentConfig> kept;
    for (auto& e : suite.experiments)
      if (e.name == *opt.only) kept.push_back(std::move(e));
    if (kept.empty()) throw std::invalid_argument("no experiment named '" + *opt.only + "'");
    suite.experiments = std::move(kept);
  }
  for (auto& e : suite.experiments) {
    if (opt.seed) e.seed = *opt.seed;
    if (opt.threads) e.threads = *opt.threads;
  }
  if (opt.out_dir) suite.output_dir = *opt.out_dir;
  return suite;
}

/// Writes the enabled formats for one report JSON into `dir`.
inline void render_report(const json& rep, const std::filesystem::path& dir, const OutputFormats& formats) {
  std::filesystem::create_directories(dir);
  if (formats.json) write_json(rep, dir / "report.json");
  if (formats.csv) write_csv_tables(rep, dir);
  if (formats.plot) write_plot_data(rep, dir);
}

struct SuiteOutcome {
  std::vector<ExperimentReport> reports;
  int exit_status = 0;
};

inline json summary_json(const std::vector<ExperimentReport>& reports) {
  json exps = json::array();
  std::size_t passed = 0;
  for (const auto& r : reports) {
    passed += r.passed() ? 1 : 0;
    exps.push_back({{"name", r.config.name},
                    {"passed", r.passed()},
                    {"failures", r.failures()},
                    {"wall_clock_seconds", r.wall_clock_seconds}});
  }
  return {{"experiments", reports.size()},
          {"passed", passed},
          {"failed", reports.size() - passed},
          {"results", exps}};
}

inline void write_summary_text(std::ostream& os, const json& summary) {
  const auto total = summary.at("experiments").get<std::size_t>();
  if (total == 0) {
    os << "suite: zero experiments\n";
    return;
  }
  os << "suite: " << total << " experiments, " << summary.at("passed").get<std::size_t>() << " passed, "
     << summary.at("failed").get<std::size_t>() << " failed\n";
  for (const auto& e : summary.at("results")) {
    char secs[32];
    std::snprintf(secs, sizeof secs, "%.1f", e.at("wall_clock_seconds").get<double>());
    os << "  " << (e.at("passed").get<bool>() ? "PASS " : "FAIL ") << e.at("name").get<std::string>() << " ("
       << secs << " s)\n";
    for (const auto& f : e.at("failures")) os << "       " << f.get<std::string>() << '\n';
  }
}

/// Runs every experiment and writes outputs under suite.output_dir.
/// Exit status is 1 iff some hard tolerance failed or an experiment errored.
inline SuiteOutcome run_suite_detailed(const SuiteConfig& suite, std::ostream* log = nullptr) {
  namespace fs = std::filesystem;
  const fs::path root(suite.output_dir);
  fs::create_directories(root);
  SuiteOutcome out;
  for (const auto& cfg : suite.experiments) {
    if (log) *log << "running " << cfg.name << " ..." << std::flush;
    auto rep = run_experiment(cfg);
    if (log) *log << (rep.passed() ? " pass" : " FAIL") << '\n';
    render_report(to_json(rep), root / cfg.name, suite.formats);
    if (!rep.passed()) out.exit_status = 1;
    out.reports.push_back(std::move(rep));
  }
  const auto summary = summary_json(out.reports);
  write_json(summary, root / "summary.json");
  auto os = detail::open_out(root / "summary.txt");
  write_summary_text(os, summary);
  if (log) write_summary_text(*log, summary);
  return out;
}

inline int run_suite(const SuiteConfig& suite, std::ostream* log = nullptr) {
  return run_suite_detailed(suite, log).exit_status;
}

}  // namespace levyvar
