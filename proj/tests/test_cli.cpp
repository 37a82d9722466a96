#include <catch2/catch_amalgamated.hpp>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <sys/wait.h>

#include "ocfem/csv.hpp"
#include "ocfem/runner.hpp"

using namespace ocfem;
namespace fs = std::filesystem;

namespace {

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  REQUIRE(in.good());
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::vector<std::string> lines_of(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string line;
  while (std::getline(ss, line)) out.push_back(line);
  return out;
}

fs::path fresh_dir(const std::string& tag) {
  const fs::path d = fs::temp_directory_path() / ("ocfem_test_" + tag);
  fs::remove_all(d);
  return d;
}

// minimal valid config: unconstrained cubic problem
const char* kMinimalCfg =
    "nonlinearity = cubic\n"
    "alpha = 1e-2\n"
    "y0 = -1\n";

std::string benchmark_cfg() {
  return slurp(fs::path(OCFEM_CONFIG_DIR) / "neitzel_example.cfg");
}

int run_cli(const std::string& args) {
  const std::string cmd = std::string(OCFEM_CLI_PATH) + " " + args + " >/dev/null 2>&1";
  const int rc = std::system(cmd.c_str());
  REQUIRE(rc != -1);
  return WEXITSTATUS(rc);
}

}  // namespace

TEST_CASE("csv number formatting round-trips doubles", "[cli]") {
  for (double v : {0.3386, -1.5, 0.1, 3.141592653589793, 1e-300, 1e17, 0.0}) {
    const std::string s = csv::num(v);
    CHECK(std::strtod(s.c_str(), nullptr) == v);
  }
  CHECK(csv::num(1.0) == "1");
  CHECK(csv::num(0.5) == "0.5");
}

TEST_CASE("field csv has the contracted header and one row per vertex", "[cli]") {
  const MeshPtr m = uniform_triangulation(1);
  const FeFunction f = interpolate(m, [](const Vec2& p) { return p.x + 2.0 * p.y; });
  const auto rows = lines_of(csv::fe_function_csv(f));
  REQUIRE(rows.size() == 1 + static_cast<size_t>(m->n_vertices()));
  CHECK(rows[0] == "x,y,value");
  // vertex 3 of n=1 is (1,1), value 3
  CHECK(rows[4] == "1,1,3");
}

TEST_CASE("multiplier csv lists stored point masses with coordinates", "[cli]") {
  const MeshPtr m = uniform_triangulation(2);
  KktSolution sol;
  sol.y = interpolate(m, constant_field(0.0));
  sol.mu[4] = -0.25;  // center vertex of the level-1 grid
  const auto rows = lines_of(csv::multiplier_csv(sol));
  REQUIRE(rows.size() == 2);
  CHECK(rows[0] == "node_index,x,y,mu");
  CHECK(rows[1] == "4,0.5,0.5,-0.25");
}

TEST_CASE("study and eoc csv headers are pinned", "[cli]") {
  StudyReport rep;
  CHECK(lines_of(csv::study_csv(rep))[0] ==
        "level,h,E_uL2,E_yH1,E_yL2,E_yLinf,p_norm_L4,eta,classification");
  CHECK(lines_of(csv::eoc_csv(rep))[0] == "pair,EOC_uL2,EOC_yH1,EOC_yL2,EOC_yLinf");
  std::vector<csv::SweepRow> rows{{1e-2, 0.25, 0.5}};
  const auto sw = lines_of(csv::sweep_csv(rows));
  CHECK(sw[0] == "alpha,p_norm_L4,eta");
  CHECK(sw[1] == "0.01,0.25,0.5");
}

TEST_CASE("shipped config reproduces the benchmark problem", "[cli]") {
  const RunConfig cfg = parse_config((fs::path(OCFEM_CONFIG_DIR) / "neitzel_example.cfg").string());

  CHECK(cfg.problem.alpha == 1e-2);
  CHECK(cfg.problem.phi.r == 2.0);
  CHECK(cfg.problem.phi.M == Catch::Approx(2.0 * std::sqrt(3.0)).epsilon(1e-15));
  CHECK(cfg.problem.phi.phi(2.0) == 8.0);  // cubic
  CHECK(cfg.problem.y0({0.3, 0.9}) == -1.0);
  CHECK(cfg.problem.u_lower == -infinity);
  CHECK(cfg.problem.u_upper == infinity);
  CHECK(cfg.problem.y_upper({0.5, 0.5}) == infinity);
  // pyramid: apex at the center, -1/2 at corners, -1/4 at edge midpoints
  CHECK(cfg.problem.y_lower({0.5, 0.5}) == 0.0);
  CHECK(cfg.problem.y_lower({0.0, 0.0}) == -0.5);
  CHECK(cfg.problem.y_lower({0.5, 0.0}) == Catch::Approx(-0.25).margin(1e-15));
  CHECK(cfg.problem.region.kind() == ConstraintRegion::Kind::whole_domain);
  CHECK(cfg.problem.quad_order == 4);

  CHECK(cfg.mode == RunMode::solve);
  CHECK(cfg.level == 6);
  CHECK(cfg.level_lo == 1);
  CHECK(cfg.level_hi == 7);
  CHECK(cfg.reference_level == 9);
  CHECK(cfg.alphas == std::vector<double>{1e-4, 1e-3, 1e-2, 1e-1});
  CHECK(cfg.pdas.tol_kkt == 1e-9);
  CHECK(!cfg.source_text.empty());
}

TEST_CASE("config diagnostics carry line numbers and catalogs", "[cli]") {
  using Catch::Matchers::ContainsSubstring;

  CHECK_THROWS_WITH(parse_config_text(""), ContainsSubstring("nonlinearity"));
  CHECK_THROWS_WITH(parse_config_text("nonlinearity = cubic\n"),
                    ContainsSubstring("missing required key 'alpha'"));

  CHECK_THROWS_WITH(parse_config_text("nonlinearity = septic\nalpha = 1e-2\ny0 = 0\n"),
                    ContainsSubstring("catalog: linear, cubic, linear_cubic, polynomial"));

  const std::string unknown = "nonlinearity = cubic\nalpha = 1e-2\ny0 = 0\nbogus = 3\n";
  CHECK_THROWS_WITH(parse_config_text(unknown),
                    ContainsSubstring("line 4") && ContainsSubstring("bogus"));

  CHECK_THROWS_WITH(parse_config_text("nonlinearity = cubic\nalpha = abc\ny0 = 0\n"),
                    ContainsSubstring("line 2") && ContainsSubstring("malformed number"));

  CHECK_THROWS_WITH(parse_config_text("alpha = 1\nalpha = 2\n"),
                    ContainsSubstring("duplicate key 'alpha'") && ContainsSubstring("line 1"));

  CHECK_THROWS_WITH(parse_config_text("nonlinearity cubic\n"),
                    ContainsSubstring("expected 'key = value'"));

  CHECK_THROWS_WITH(parse_config_text(std::string(kMinimalCfg) + "y_lower = gaussian\n"),
                    ContainsSubstring("built-ins: constant:<value>, pyramid_lower"));

  CHECK_THROWS_WITH(parse_config_text(std::string(kMinimalCfg) + "levels = 2-5\n"),
                    ContainsSubstring("expected a range 'A..B'"));

  CHECK_THROWS_WITH(parse_config_text(std::string(kMinimalCfg) + "mode = paint\n"),
                    ContainsSubstring("unknown mode"));

  // semantic validation is wrapped as a config error too
  CHECK_THROWS_AS(parse_config_text("nonlinearity = cubic\nalpha = -1\ny0 = 0\n"), ConfigError);
}

TEST_CASE("config accepts comments, constants, ranges and polygon regions", "[cli]") {
  const std::string text =
      "# header comment\n"
      "nonlinearity = linear_cubic   # trailing comment\n"
      "\n"
      "alpha = 2.5e-3\n"
      "y0 = constant:0.75\n"
      "y_lower = -inf\n"
      "u_lower = -4\n"
      "u_upper = 4\n"
      "region = polygon:0.25,0.25;0.75,0.25;0.75,0.75;0.25,0.75\n"
      "levels = 2..5\n"
      "mode = study\n"
      "reference_level = 7\n";
  const RunConfig cfg = parse_config_text(text);
  CHECK(cfg.problem.alpha == 2.5e-3);
  CHECK(cfg.problem.y0({0.1, 0.1}) == 0.75);
  CHECK(cfg.problem.y_lower({0.1, 0.1}) == -infinity);
  CHECK(cfg.problem.u_lower == -4.0);
  CHECK(cfg.problem.region.kind() == ConstraintRegion::Kind::polygon);
  CHECK(cfg.mode == RunMode::study);
  CHECK(cfg.level_lo == 2);
  CHECK(cfg.level_hi == 5);
  CHECK(cfg.reference_level == 7);
}

TEST_CASE("mode validation rejects malformed level requests", "[cli]") {
  RunConfig cfg = parse_config_text(kMinimalCfg);

  cfg.mode = RunMode::solve;
  cfg.level = 0;
  CHECK_THROWS_AS(validate_for_mode(cfg), ConfigError);
  cfg.level = 13;
  CHECK_THROWS_AS(validate_for_mode(cfg), ConfigError);
  cfg.level = 3;
  CHECK_NOTHROW(validate_for_mode(cfg));

  cfg.mode = RunMode::study;
  cfg.level_lo = 2;
  cfg.level_hi = 4;
  cfg.reference_level = 5;  // too close to level_hi
  CHECK_THROWS_AS(validate_for_mode(cfg), ConfigError);
  cfg.reference_level = 6;
  CHECK_NOTHROW(validate_for_mode(cfg));
  cfg.level_lo = 5;
  CHECK_THROWS_AS(validate_for_mode(cfg), ConfigError);

  cfg.mode = RunMode::alpha_sweep;
  cfg.level = 2;
  cfg.alphas = {};
  CHECK_THROWS_AS(validate_for_mode(cfg), ConfigError);
  cfg.alphas = {1e-2, -1.0};
  CHECK_THROWS_AS(validate_for_mode(cfg), ConfigError);
}

TEST_CASE("solve run persists all artifacts and is byte-deterministic", "[cli]") {
  RunConfig cfg = parse_config_text(benchmark_cfg());
  cfg.mode = RunMode::solve;
  cfg.level = 2;

  const fs::path d1 = fresh_dir("solve_a");
  const fs::path d2 = fresh_dir("solve_b");
  cfg.output_dir = d1.string();
  const auto files1 = execute_run(cfg);
  cfg.output_dir = d2.string();
  const auto files2 = execute_run(cfg);

  const std::vector<std::string> expected{"u.csv",           "y.csv",           "p.csv",
                                          "multiplier.csv",  "certificate.csv", "manifest.txt"};
  CHECK(files1 == expected);
  CHECK(files2 == expected);
  for (const std::string& f : expected) {
    CAPTURE(f);
    REQUIRE(fs::exists(d1 / f));
    CHECK(slurp(d1 / f) == slurp(d2 / f));  // identical run, identical bytes
  }

  const std::string manifest = slurp(d1 / "manifest.txt");
  CHECK(manifest.find("version = ") != std::string::npos);
  CHECK(manifest.find("config_hash = fnv1a:") != std::string::npos);
  CHECK(manifest.find("mode = solve") != std::string::npos);
  CHECK(manifest.find("tol_kkt = ") != std::string::npos);
  CHECK(manifest.find("c_pdas = 1/alpha") != std::string::npos);
  CHECK(manifest.find("artifact = u.csv") != std::string::npos);

  const auto cert = lines_of(slurp(d1 / "certificate.csv"));
  REQUIRE(cert.size() == 2);
  CHECK(cert[0] == "level,h,p_norm_Lq,eta,margin,classification");
  CHECK(cert[1].find("unique_global") != std::string::npos);

  // vertex count for n = 4 is 25
  CHECK(lines_of(slurp(d1 / "u.csv")).size() == 26);

  fs::remove_all(d1);
  fs::remove_all(d2);
}

TEST_CASE("certify and sweep runs emit only their artifact", "[cli]") {
  RunConfig cfg = parse_config_text(benchmark_cfg());
  cfg.mode = RunMode::certify;
  cfg.level = 2;
  const fs::path d = fresh_dir("certify");
  cfg.output_dir = d.string();
  CHECK(execute_run(cfg) == std::vector<std::string>{"certificate.csv", "manifest.txt"});
  CHECK(!fs::exists(d / "u.csv"));
  fs::remove_all(d);

  cfg.mode = RunMode::alpha_sweep;
  cfg.alphas = {1e-3, 1e-2};
  const fs::path ds = fresh_dir("sweep");
  cfg.output_dir = ds.string();
  CHECK(execute_run(cfg) == std::vector<std::string>{"sweep.csv", "manifest.txt"});
  const auto rows = lines_of(slurp(ds / "sweep.csv"));
  REQUIRE(rows.size() == 3);
  for (size_t k = 1; k < rows.size(); ++k) {
    double alpha, p_norm, eta_val;
    REQUIRE(std::sscanf(rows[k].c_str(), "%lf,%lf,%lf", &alpha, &p_norm, &eta_val) == 3);
    CHECK(p_norm < eta_val);  // certificate satisfied strictly on this benchmark
  }
  fs::remove_all(ds);
}

TEST_CASE("study run emits a level table and eoc pairs", "[cli]") {
  RunConfig cfg = parse_config_text(benchmark_cfg());
  cfg.mode = RunMode::study;
  cfg.level_lo = 2;
  cfg.level_hi = 3;
  cfg.reference_level = 5;
  const fs::path d = fresh_dir("study");
  cfg.output_dir = d.string();
  CHECK(execute_run(cfg) == std::vector<std::string>{"study.csv", "eoc.csv", "manifest.txt"});
  CHECK(lines_of(slurp(d / "study.csv")).size() == 3);
  const auto eoc_rows = lines_of(slurp(d / "eoc.csv"));
  REQUIRE(eoc_rows.size() == 2);
  CHECK(eoc_rows[1].rfind("2-3,", 0) == 0);
  fs::remove_all(d);
}

TEST_CASE("cli exit codes follow the 0/1/2 contract", "[cli]") {
  const std::string shipped = (fs::path(OCFEM_CONFIG_DIR) / "neitzel_example.cfg").string();
  const fs::path d = fresh_dir("cli_smoke");

  CHECK(run_cli("--help") == 0);
  CHECK(run_cli("solve --config " + shipped + " --level 2 --output " + d.string()) == 0);
  CHECK(fs::exists(d / "certificate.csv"));
  CHECK(fs::exists(d / "manifest.txt"));

  CHECK(run_cli("solve --config " + shipped + " --level 0 --output " + d.string()) == 2);
  CHECK(run_cli("solve --config /nonexistent.cfg --level 2") == 2);
  CHECK(run_cli("solve --level 2") == 2);         // missing required --config
  CHECK(run_cli("frobnicate") == 2);              // unknown subcommand
  CHECK(run_cli("") == 2);                        // subcommand required

  fs::remove_all(d);
}
