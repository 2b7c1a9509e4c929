// levyvar: simulate paths, query the regime oracle, run verification suites
// and re-render saved reports.

#include <CLI11.hpp>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include "levyvar/levyvar.hpp"

namespace fs = std::filesystem;
using namespace levyvar;

namespace {

struct Flags {
  std::string config;
  std::string out;
  std::optional<std::uint64_t> seed;
  std::optional<unsigned> threads;
  std::optional<std::string> only;
  std::optional<double> delta;
  std::uint32_t replica = 0;
};

RunOptions run_options(const Flags& f) {
  RunOptions o;
  o.seed = f.seed;
  o.threads = f.threads;
  o.only = f.only;
  if (!f.out.empty()) o.out_dir = f.out;
  return o;
}

SuiteConfig load(const Flags& f) { return apply_options(load_config(f.config), run_options(f)); }

SamplingGrid simulation_grid(const ExperimentConfig& cfg, std::optional<double> delta) {
  if (cfg.mode == HorizonMode::GrowingHorizon && !delta) {
    const auto n = cfg.growing.n.back();
    return SamplingGrid(std::pow(static_cast<double>(n), -cfg.growing.gamma), n, HorizonMode::GrowingHorizon);
  }
  if (!delta && cfg.delta_ladder.empty()) throw std::invalid_argument(cfg.name + ": no delta_ladder; pass --delta");
  return SamplingGrid::for_horizon(cfg.horizon, delta ? *delta : cfg.delta_ladder.back());
}

int simulate(const Flags& flags) {
  const auto suite = load(flags);
  const fs::path root(suite.output_dir);
  for (const auto& cfg : suite.experiments) {
    const auto grid = simulation_grid(cfg, flags.delta);
    const auto path = sample_path(cfg.model, grid, {cfg.seed, flags.replica}, cfg.simulation);
    const fs::path dir = root / cfg.name;
    fs::create_directories(dir);
    {
      std::ofstream os(dir / "path.bin", std::ios::binary);
      if (!os) throw std::runtime_error("cannot write " + (dir / "path.bin").string());
      write_binary(os, path);
    }
    {
      std::ofstream os(dir / "path.dat");
      os << "# " << cfg.name << " replica " << flags.replica << "\n# time X\n";
      CompensatedSum<double> x;
      os << "0 0\n";
      for (std::size_t i = 0; i < path.size(); ++i) {
        x += path.increments[i];
        os << path.grid.delta * static_cast<double>(i + 1) << ' ' << x.value() << '\n';
      }
    }
    {
      std::ofstream os(dir / "jumps.csv");
      os << "time,size\n";
      for (const auto& j : path.big_jumps) os << j.time << ',' << j.size << '\n';
    }
    for (std::size_t k = 0; k < cfg.f_list.size(); ++k) {
      const auto s = detail::functional_series(path, cfg.f_list[k], cfg.functional_of(k), cfg.mode);
      std::ofstream os(dir / ("variation_" + std::to_string(k) + ".dat"));
      os << "# " << cfg.f_list[k].describe() << ' ' << to_string(cfg.functional_of(k)) << "\n# time value\n";
      for (std::size_t i = 0; i < s.size(); ++i) os << s.times[i] << ' ' << s.values[i] << '\n';
    }
    std::cout << cfg.name << ": " << path.size() << " increments, delta " << grid.delta << ", "
              << path.big_jumps.size() << " ledgered jumps -> " << dir.string() << '\n';
  }
  return 0;
}

int predict(const Flags& flags) {
  const auto suite = load(flags);
  json out = json::array();
  for (const auto& cfg : suite.experiments) {
    json fs_out = json::array();
    for (std::size_t k = 0; k < cfg.f_list.size(); ++k) {
      const auto& f = cfg.f_list[k];
      json verdicts = json::array();
      for (auto order : {Order::LLN, Order::CLT})
        for (const auto& v : classify_all(cfg.model, f, {cfg.mode, cfg.functional_of(k), order}))
          verdicts.push_back(to_json(v));
      fs_out.push_back({{"f", f.describe()}, {"verdicts", verdicts}});
    }
    out.push_back({{"name", cfg.name}, {"functions", fs_out}});
  }
  if (!flags.out.empty()) {
    fs::create_directories(flags.out);
    write_json(out, fs::path(flags.out) / "predict.json");
  }
  std::cout << out.dump(2) << '\n';
  return 0;
}

int verify(const Flags& flags) { return run_suite(load(flags), &std::cerr); }

int report(const Flags& flags) {
  const fs::path root(flags.out.empty() ? "results" : flags.out);
  if (!fs::is_directory(root)) throw std::runtime_error("no report directory " + root.string());
  std::vector<fs::path> dirs;
  for (const auto& e : fs::directory_iterator(root))
    if (e.is_directory() && fs::exists(e.path() / "report.json")) dirs.push_back(e.path());
  std::sort(dirs.begin(), dirs.end());
  int status = 0;
  for (const auto& d : dirs) {
    if (flags.only && d.filename() != *flags.only) continue;
    const auto rep = read_json(d / "report.json");
    const auto csv = write_csv_tables(rep, d);
    const auto plots = write_plot_data(rep, d);
    const bool ok = rep.at("passed").get<bool>();
    if (!ok) status = 1;
    std::cout << (ok ? "PASS " : "FAIL ") << rep.at("name").get<std::string>() << ": " << csv.size()
              << " tables, " << plots.size() << " plot files\n";
    for (const auto& f : rep.at("failures")) std::cout << "       " << f.get<std::string>() << '\n';
  }
  if (dirs.empty()) std::cout << "no reports under " << root.string() << '\n';
  return status;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Power and truncated variations of Levy processes: simulation, oracle and verification"};
  app.require_subcommand(1);
  Flags flags;

  auto add_common = [&](CLI::App* sub, bool needs_config) {
    auto* c = sub->add_option("--config", flags.config, "YAML suite file");
    if (needs_config) c->required()->check(CLI::ExistingFile);
    sub->add_option("--out", flags.out, "output directory (overrides output_dir)");
    sub->add_option("--only", flags.only, "run only the experiment with this name");
  };

  auto* sim = app.add_subcommand("simulate", "dump one sample path per experiment");
  add_common(sim, true);
  sim->add_option("--seed", flags.seed, "override every experiment seed");
  sim->add_option("--delta", flags.delta, "step size (default: finest of the ladder)")->check(CLI::PositiveNumber);
  sim->add_option("--replica", flags.replica, "replica index");

  auto* pre = app.add_subcommand("predict", "print the regime verdicts for each model and function");
  add_common(pre, true);

  auto* ver = app.add_subcommand("verify", "run the suite; exit 1 iff a hard tolerance fails");
  add_common(ver, true);
  ver->add_option("--seed", flags.seed, "override every experiment seed");
  ver->add_option("--threads", flags.threads, "worker threads (0: hardware); results do not depend on it");

  auto* rep = app.add_subcommand("report", "re-render saved JSON reports to CSV and plot data");
  add_common(rep, false);

  CLI11_PARSE(app, argc, argv);
  try {
    if (sim->parsed()) return simulate(flags);
    if (pre->parsed()) return predict(flags);
    if (ver->parsed()) return verify(flags);
    return report(flags);
  } catch (const std::exception& e) {
    std::cerr << "levyvar: " << e.what() << '\n';
    return 2;
  }
}
