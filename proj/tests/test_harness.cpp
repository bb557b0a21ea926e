#include <doctest.h>

#include "lmc/harness.hpp"

#include <fstream>

using namespace lmc;

namespace {

std::filesystem::path scratch(const std::string& name) {
  auto p = std::filesystem::temp_directory_path() / ("lmc_harness_" + name);
  std::filesystem::remove_all(p);
  std::filesystem::create_directories(p);
  return p;
}

ExperimentConfig small_od(const std::filesystem::path& dir) {
  ExperimentConfig c;
  c.name = "smoke";
  c.sampler = "od";
  c.potential = {{"kind", "quadratic"}, {"dim", 2}, {"m", 1.0}};
  c.epsilon = 0.5;
  c.ensemble = 200;
  c.seed = 3;
  c.output_dir = dir.string();
  c.overrides.delta = 0.05;
  c.overrides.n = 200;
  c.overrides.checkpoints = 5;
  c.overrides.reference_size = 20000;
  return c;
}

}  // namespace

TEST_CASE("config toml round trip") {
  const char* text = R"(
name = "rt"
sampler = "coupled-ud"
epsilon = 0.25
ensemble = 16
seed = 18446744073709551615
x0 = [4.0, 0]
starts = [[4.0, 0.0], [12.0, 0.0]]

[potential]
kind = "gaussian_mixture"
centers = [[1.0, 0.0], [-1.0, 0.0]]
sigma2 = 1.0

[overrides]
delta = 0.1
substep = 0.005
friction_c = 1
deltas = [0.1, 0.01]
)";
  // 2^64 - 1 does not fit a TOML integer; strings are accepted for seeds.
  CHECK_THROWS_AS(parse_config_toml(text), UsageError);
  std::string fixed = text;
  fixed.replace(fixed.find("18446744073709551615"), 20, "\"18446744073709551615\"");
  auto c = parse_config_toml(fixed);
  CHECK(c.seed == 18446744073709551615ull);
  CHECK(c.x0 == std::vector<double>{4.0, 0.0});
  CHECK(*c.overrides.friction_c == 1.0);
  c.validate();
  auto again = parse_config_toml(c.to_toml());
  CHECK(again == c);
  CHECK(ExperimentConfig::from_json(c.to_json()) == c);
}

TEST_CASE("config errors name the field") {
  auto msg = [](const std::string& t) {
    try {
      parse_config_toml(t).validate();
    } catch (const UsageError& e) {
      return std::string(e.what());
    }
    return std::string("no error");
  };
  const std::string pot = "[potential]\nkind = \"quadratic\"\ndim = 2\n";
  CHECK(msg("sampler = \"od\"\nbogus = 1\n" + pot).find("bogus") != std::string::npos);
  CHECK(msg("sampler = \"od\"\nepsilon = \"x\"\n" + pot).find("epsilon") != std::string::npos);
  CHECK(msg("sampler = \"zz\"\n" + pot).find("sampler") != std::string::npos);
  CHECK(msg("sampler = \"od\"\nx0 = [1.0]\n" + pot).find("x0") != std::string::npos);
  CHECK(msg("sampler = \"od\"\n" + pot + "[overrides]\ndelta = -1\n").find("overrides.delta") != std::string::npos);
  CHECK(msg("sampler = \"od\"\n" + pot + "[overrides]\ndeltas = [0.1, 0.2]\n").find("overrides.deltas") !=
        std::string::npos);
  CHECK(msg("sampler = \"od\"\nreference = \"/nonexistent.csv\"\n" + pot).find("reference") != std::string::npos);
  CHECK(msg("sampler = \"od\"\n[potential]\nkind = \"cubic\"\n").find("potential") != std::string::npos);
  CHECK(msg("sampler = \n").find("TOML parse error") != std::string::npos);
}

TEST_CASE("sample run writes a deterministic report") {
  auto dir = scratch("smoke");
  auto c = small_od(dir);
  auto a = run_experiment(c);
  CHECK(a.exit_code == 0);
  CHECK(std::filesystem::exists(dir / "smoke.report.json"));
  CHECK(std::filesystem::exists(dir / "smoke.series.csv"));
  const auto& r = a.report;
  CHECK(r["passed"] == true);
  CHECK(r["results"]["series"].size() == 6);
  CHECK(r["results"]["series"][0]["method"] == "sliced");
  CHECK(r["timing"].contains("wall_seconds"));
  CHECK(r["software"]["version"] == software_version());

  auto b = run_experiment(c, false);
  CHECK(without_timing(a.report) == without_timing(b.report));

  auto plots = emit_plots(dir / "smoke.report.json");
  REQUIRE(plots.files.size() == 1);
  std::ifstream in(plots.files[0]);
  std::string head;
  std::getline(in, head);
  CHECK(head.rfind("<svg", 0) == 0);
}

TEST_CASE("infeasible theorem plan exits cleanly") {
  auto dir = scratch("infeasible");
  ExperimentConfig c;
  c.name = "inf";
  c.sampler = "ud";
  c.potential = {{"kind", "gaussian_mixture"}, {"centers", {{6.0, 0.0}, {-6.0, 0.0}}}, {"sigma2", 1.0}};
  c.epsilon = 0.01;
  c.ensemble = 4;
  c.output_dir = dir.string();
  auto out = run_experiment(c);
  CHECK(out.exit_code == 0);
  CHECK(out.report["plan"]["feasible"] == false);
  CHECK(out.report["results"]["status"] == "infeasible");
  auto plots = emit_plots(dir / "inf.report.json");
  CHECK(plots.files.empty());
  CHECK(plots.warnings.size() == 1);
}

TEST_CASE("assertion failure gives exit code 2") {
  auto dir = scratch("fail");
  auto c = small_od(dir);
  c.epsilon = 1e-4;
  c.overrides.n = 2;  // nowhere near stationarity
  c.x0 = {5.0, 5.0};
  auto out = run_experiment(c, false);
  CHECK(out.exit_code == 2);
  CHECK(out.report["passed"] == false);
}

TEST_CASE("coupled ud run reports no jump violations") {
  auto dir = scratch("cud");
  ExperimentConfig c;
  c.name = "cud";
  c.sampler = "coupled-ud";
  c.potential = {{"kind", "gaussian_mixture"}, {"centers", {{1.0, 0.0}, {-1.0, 0.0}}}, {"sigma2", 1.0}};
  c.ensemble = 8;
  c.seed = 5;
  c.output_dir = dir.string();
  c.starts = {{4.0, 0.0}, {12.0, 0.0}};
  c.overrides.friction_c = 1.0;
  c.overrides.horizon = 150.0;
  c.overrides.delta = 0.1;
  c.overrides.substep = 0.01;
  auto out = run_experiment(c);
  CHECK(out.report["results"]["violations"].empty());
  CHECK(out.report["results"]["switches"].get<int>() >= 1);
  CHECK(std::filesystem::exists(dir / "cud.trace.csv"));
  CHECK(emit_plots(dir / "cud.report.json").files.size() == 1);
}

TEST_CASE("sweep reports and plots") {
  auto dir = scratch("sweep");
  ExperimentConfig c;
  c.name = "sw";
  c.sampler = "discretization-od";
  c.potential = {{"kind", "quadratic"}, {"dim", 1}, {"m", 1.0}};
  c.ensemble = 300;
  c.output_dir = dir.string();
  c.overrides.deltas = std::vector<double>{0.01, 0.001};
  auto out = run_experiment(c);
  const auto w = out.report["warnings"].dump();
  CHECK(w.find("fewer than 5") != std::string::npos);
  CHECK(w.find("2 decades") != std::string::npos);
  c.overrides.deltas = std::vector<double>{0.01};
  CHECK(run_experiment(c, false).report["results"]["status"] == "insufficient-points");
  CHECK(emit_plots(dir / "sw.report.json").files.size() == 1);
}

TEST_CASE("atomic write and sample csv") {
  auto dir = scratch("io");
  atomic_write(dir / "a.csv", "x,y\n1,2\n3,4\n");
  auto M = load_samples_csv(dir / "a.csv");
  CHECK(M.rows() == 2);
  CHECK(M(1, 0) == 3.0);
  int leftovers = 0;
  for (auto& e : std::filesystem::directory_iterator(dir)) leftovers += e.path().string().find(".tmp-") != std::string::npos;
  CHECK(leftovers == 0);
  atomic_write(dir / "b.csv", "1,2\n3\n");
  CHECK_THROWS_AS(load_samples_csv(dir / "b.csv"), UsageError);
}
