#include <catch_amalgamated.hpp>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "levyvar/suite.hpp"

using namespace levyvar;
namespace fs = std::filesystem;

namespace {

const fs::path kSource(LEVYVAR_SOURCE_DIR);

const char* kMinimal = R"(
experiments:
  - name: bm_qv
    model: {gauss_var_c: 1.0}
    functions:
      - {form: power_abs, r: 2}
    delta_ladder: [0.001, 0.00001]
    replicas: 10
    checks: [lln]
)";

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

struct TempDir {
  fs::path path;
  explicit TempDir(const std::string& tag) {
    path = fs::temp_directory_path() / ("levyvar_" + tag + "_" + std::to_string(std::rand()));
    fs::remove_all(path);
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
};

ConfigError config_error(const std::string& text) {
  try {
    parse_config(text);
  } catch (const ConfigError& e) {
    return e;
  }
  FAIL("expected a ConfigError");
  throw std::logic_error("unreachable");
}

json strip_clock(json j) {
  if (j.is_object()) {
    j.erase("wall_clock_seconds");
    for (auto& [k, v] : j.items()) v = strip_clock(v);
  } else if (j.is_array()) {
    for (auto& v : j) v = strip_clock(v);
  }
  return j;
}

}  // namespace

TEST_CASE("minimal config parses") {
  const auto s = parse_config(kMinimal);
  REQUIRE(s.experiments.size() == 1);
  const auto& e = s.experiments.front();
  CHECK(e.name == "bm_qv");
  CHECK(e.model.gauss_var() == 1.0);
  CHECK(!e.model.has_jumps());
  CHECK(e.f_list.front().describe() == "power_abs(r=2)");
  CHECK(e.checks.lln);
  CHECK_FALSE(e.checks.clt);
  CHECK(e.replicas == 10);
  CHECK(s.output_dir == "results");
  CHECK(s.formats.json);
}

TEST_CASE("config errors name the field and position") {
  SECTION("negative c") {
    const auto e = config_error(R"(
experiments:
  - name: x
    model: {gauss_var_c: -1.0}
    functions: [{form: power_abs, r: 2}]
    delta_ladder: [0.01]
    checks: [lln]
)");
    CHECK(e.field().find("gauss_var_c") != std::string::npos);
    CHECK(std::string(e.what()).find("gauss_var_c") != std::string::npos);
    CHECK(e.line() == 3);
  }
  SECTION("duplicate names") {
    const std::string one = R"(
  - name: same
    model: {gauss_var_c: 1.0}
    functions: [{form: power_abs, r: 2}]
    delta_ladder: [0.01]
    checks: [lln]
)";
    const auto e = config_error("experiments:" + one + one);
    CHECK(std::string(e.what()).find("duplicate") != std::string::npos);
  }
  SECTION("syntax error carries line and column") {
    const auto e = config_error("experiments:\n  - name: [unclosed\n");
    CHECK(e.line() >= 1);
    CHECK(e.column() >= 0);
    CHECK(std::string(e.what()).find("line") != std::string::npos);
  }
  SECTION("parameter ranges are checked") {
    CHECK(config_error(R"(
experiments:
  - name: x
    functions: [{form: power_abs, r: -1}]
    model: {gauss_var_c: 1.0}
    delta_ladder: [0.01]
)").field().find("functions[0]") != std::string::npos);
    CHECK(config_error(R"(
experiments:
  - name: x
    model: {gauss_var_c: 1.0, jumps: {type: power_law, alpha: 2.5}}
    functions: [{form: power_abs, r: 2}]
)").field().find("jumps") != std::string::npos);
    CHECK(config_error(R"(
experiments:
  - name: x
    model: {gauss_var_c: 1.0}
    functions: [{form: power_abs, r: 2}]
    delta_ladder: [0.01, 0.02]
    checks: [lln]
)").field().find("delta_ladder") != std::string::npos);
    CHECK(config_error(R"(
experiments:
  - name: x
    model: {gauss_var_c: 1.0}
    functions: [{form: power_abs, r: 2}]
    replicas: 1
)").field().find("replicas") != std::string::npos);
    CHECK(config_error(R"(
experiments:
  - name: x
    model: {gauss_var_c: 1.0, sigma: 2}
    functions: [{form: power_abs, r: 2}]
)").field().find("model.sigma") != std::string::npos);
    CHECK(config_error(R"(
experiments:
  - name: ../escape
    model: {gauss_var_c: 1.0}
    functions: [{form: power_abs, r: 2}]
)").field().find("name") != std::string::npos);
  }
}

TEST_CASE("every shipped example config parses") {
  std::size_t files = 0;
  for (const auto& e : fs::directory_iterator(kSource / "configs")) {
    if (e.path().extension() != ".yaml") continue;
    INFO(e.path().string());
    SuiteConfig s;
    REQUIRE_NOTHROW(s = load_config(e.path().string()));
    CHECK_FALSE(s.experiments.empty());
    ++files;
  }
  CHECK(files >= 8);
}

TEST_CASE("config echo round-trips through the parser") {
  const auto s = load_config((kSource / "tests/data/golden_suite.yaml").string());
  for (const auto& e : s.experiments) {
    const json echo = to_json(e);
    const auto again = parse_config("experiments: [" + echo.dump() + "]\n");
    REQUIRE(again.experiments.size() == 1);
    CHECK(to_json(again.experiments.front()) == echo);
  }
}

TEST_CASE("run_suite exit status and outputs") {
  TempDir tmp("suite");
  SECTION("passing suite writes one directory per experiment") {
    auto s = parse_config(kMinimal);
    s.output_dir = tmp.path.string();
    CHECK(run_suite(s) == 0);
    CHECK(fs::exists(tmp.path / "bm_qv" / "report.json"));
    CHECK(fs::exists(tmp.path / "bm_qv" / "lln.csv"));
    CHECK(fs::exists(tmp.path / "bm_qv" / "checks.csv"));
    CHECK(fs::exists(tmp.path / "bm_qv" / "lln_0_rel_error.dat"));
    const auto summary = read_json(tmp.path / "summary.json");
    CHECK(summary.at("experiments") == 1);
    CHECK(summary.at("failed") == 0);
  }
  SECTION("a failing tolerance exits 1 and is named in the summary") {
    auto s = parse_config(kMinimal);
    s.output_dir = tmp.path.string();
    s.experiments.front().tol.lln_replica_fraction = 1.01;
    CHECK(run_suite(s) == 1);
    const auto text = slurp(tmp.path / "summary.txt");
    CHECK(text.find("FAIL bm_qv") != std::string::npos);
    CHECK(text.find("lln_replica_fraction") != std::string::npos);
  }
  SECTION("experiments that cannot run fail without crashing") {
    auto s = parse_config(R"(
experiments:
  - name: tiny_budget
    model:
      gauss_var_c: 1.0
      jumps: {type: compound_poisson, intensity: 1.0, law: {type: point_masses, atoms: [[1.0, 1.0]]}}
    functions: [{form: power_abs, r: 0.5}]
    delta_ladder: [0.001]
    replicas: 100
    checks: [clt]
    centering_draws: 100
)");
    s.output_dir = tmp.path.string();
    int status = -1;
    REQUIRE_NOTHROW(status = run_suite(s));
    CHECK(status == 1);
    CHECK(slurp(tmp.path / "summary.txt").find("centering_budget") != std::string::npos);
  }
  SECTION("empty suite") {
    auto s = parse_config("experiments: []\n");
    s.output_dir = tmp.path.string();
    CHECK(run_suite(s) == 0);
    CHECK(slurp(tmp.path / "summary.txt").find("zero experiments") != std::string::npos);
    CHECK(read_json(tmp.path / "summary.json").at("experiments") == 0);
  }
  SECTION("format flags select outputs") {
    auto s = parse_config(kMinimal);
    s.output_dir = tmp.path.string();
    s.formats = {true, false, false};
    CHECK(run_suite(s) == 0);
    CHECK(fs::exists(tmp.path / "bm_qv" / "report.json"));
    CHECK_FALSE(fs::exists(tmp.path / "bm_qv" / "lln.csv"));
    CHECK_FALSE(fs::exists(tmp.path / "bm_qv" / "lln_0_rel_error.dat"));
  }
}

TEST_CASE("command-line overrides") {
  const auto base = load_config((kSource / "tests/data/golden_suite.yaml").string());
  const auto only = apply_options(base, {.seed = 99, .threads = 3, .only = "golden_clt", .out_dir = "x"});
  REQUIRE(only.experiments.size() == 1);
  CHECK(only.experiments.front().seed == 99);
  CHECK(only.experiments.front().threads == 3);
  CHECK(only.output_dir == "x");
  CHECK_THROWS_AS(apply_options(base, {.only = "missing"}), std::invalid_argument);
}

TEST_CASE("report rendering") {
  TempDir tmp("render");
  auto s = load_config((kSource / "tests/data/golden_suite.yaml").string());
  for (const auto& cfg : s.experiments) {
    const auto j = to_json(run_experiment(cfg));
    const auto dir = tmp.path / cfg.name;
    fs::create_directories(dir);
    const auto csv = write_csv_tables(j, dir);
    const auto plots = write_plot_data(j, dir);
    CHECK_FALSE(csv.empty());
    for (const auto& p : plots) {
      std::ifstream in(p);
      std::string line;
      std::size_t rows = 0;
      while (std::getline(in, line)) {
        if (line.empty() || line[0] == '#') continue;
        std::istringstream ls(line);
        double x, y;
        std::string extra;
        CHECK(static_cast<bool>(ls >> x >> y));
        CHECK_FALSE(static_cast<bool>(ls >> extra));
        ++rows;
      }
      CHECK(rows > 0);
    }
    // Each CSV row has as many fields as the header.
    for (const auto& p : csv) {
      std::ifstream in(p);
      std::string header, line;
      std::getline(in, header);
      const auto cols = std::count(header.begin(), header.end(), ',');
      while (std::getline(in, line)) {
        if (line.find('"') != std::string::npos) continue;
        CHECK(std::count(line.begin(), line.end(), ',') == cols);
      }
    }
  }
  CHECK(fs::exists(tmp.path / "golden_clt" / "joint.csv"));
  CHECK(fs::exists(tmp.path / "golden_clt" / "clt_0_qq.dat"));
  CHECK(fs::exists(tmp.path / "golden_conditional" / "conditional.csv"));
  CHECK(fs::exists(tmp.path / "golden_long" / "long_horizon_0_estimate.dat"));
  CHECK(fs::exists(tmp.path / "golden_lln" / "rate.csv"));
}

TEST_CASE("reports are schema-stable (golden files)") {
  const auto s = load_config((kSource / "tests/data/golden_suite.yaml").string());
  const bool update = std::getenv("LEVYVAR_UPDATE_GOLDEN") != nullptr;
  for (const auto& cfg : s.experiments) {
    INFO(cfg.name);
    auto rep = run_experiment(cfg);
    CHECK(rep.error.empty());
    const auto golden = kSource / "tests/golden" / (cfg.name + ".json");
    const std::string produced = strip_clock(to_json(rep)).dump(2) + "\n";
    if (update) {
      std::ofstream(golden, std::ios::binary) << produced;
      continue;
    }
    REQUIRE(fs::exists(golden));
    CHECK(produced == slurp(golden));
    // Thread count must not change a single bit.
    auto threaded = cfg;
    threaded.threads = 4;
    CHECK(strip_clock(to_json(run_experiment(threaded))).dump(2) + "\n" == produced);
  }
}
