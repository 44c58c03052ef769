#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <json.hpp>
#include <sstream>
#include <string>

namespace fs = std::filesystem;

namespace {

const std::string kCli = BDLP_CLI_PATH;
const std::string kConfigs = BDLP_CONFIG_DIR;

const std::string kSmall = R"([domain]
d = 1
L = 20.0

[model]
m = 0.2

[kernel.minus]
type = "gaussian"
c = 1.0
sigma = 1.0

[kernel.plus]
type = "gaussian"
c = 0.8
sigma = 1.0

[simulate]
t_end = 0.5
observe_every = 0.25
replicas = 8
seed = 3
initial_intensity = 2.0
bins = 16

[hierarchy]
grid_points = 64
dt = 0.01

[stability]
trials = 200
)";

fs::path scratch(const std::string& name) {
  fs::path p = fs::temp_directory_path() / ("bdlp_cli_" + name + "_" + std::to_string(::getpid()));
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

int run(const std::string& args) {
  const std::string cmd = kCli + " " + args + " > /dev/null 2>&1";
  int rc = std::system(cmd.c_str());
  return WIFEXITED(rc) ? WEXITSTATUS(rc) : -1;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

fs::path write_config(const fs::path& dir, const std::string& text) {
  fs::path p = dir / "config.toml";
  std::ofstream(p) << text;
  return p;
}

}  // namespace

TEST_CASE("simulate is reproducible for a fixed seed") {
  auto dir = scratch("sim");
  auto cfg = write_config(dir, kSmall);
  REQUIRE(run("simulate --config " + cfg.string() + " --seed 7 --out " + (dir / "a").string()) == 0);
  REQUIRE(run("simulate --config " + cfg.string() + " --seed 7 --out " + (dir / "b").string()) == 0);
  REQUIRE(run("simulate --config " + cfg.string() + " --seed 8 --out " + (dir / "c").string()) == 0);
  for (const char* f : {"density.csv", "pair_correlation.csv", "snapshots.csv", "resolved_config.toml"}) {
    INFO(f);
    auto a = slurp(dir / "a" / f);
    CHECK_FALSE(a.empty());
    CHECK(a == slurp(dir / "b" / f));
    CHECK(a.rfind("# bdlp 0.1.0 config_hash=", 0) == 0);
    CHECK(a.find("seed=7") != std::string::npos);
  }
  CHECK(slurp(dir / "a" / "density.csv") != slurp(dir / "c" / "density.csv"));
  fs::remove_all(dir);
}

TEST_CASE("hierarchy and bounds subcommands") {
  auto dir = scratch("hier");
  auto cfg = write_config(dir, kSmall);
  CHECK(run("hierarchy --config " + cfg.string() + " --out " + dir.string()) == 0);
  auto rho = slurp(dir / "hierarchy_rho.csv");
  CHECK(rho.find("time,rho") != std::string::npos);
  CHECK(fs::exists(dir / "hierarchy_k2.csv"));
  CHECK(run("bounds --config " + cfg.string() + " --out " + dir.string()) == 0);
  fs::remove_all(dir);
}

TEST_CASE("stability writes a certificate") {
  auto dir = scratch("stab");
  auto cfg = write_config(dir, kSmall);
  CHECK(run("stability --config " + cfg.string() + " --out " + dir.string()) == 0);
  std::ifstream in(dir / "certificate.json");
  REQUIRE(in.good());
  std::string first;
  std::getline(in, first);
  CHECK(first.rfind("# bdlp", 0) != 0);
  in.seekg(0);
  auto j = nlohmann::json::parse(in);
  CHECK(j["certified"] == true);
  CHECK(j["theta"].get<double>() > 0.0);
  CHECK(j["worst_U"].get<double>() >= -1e-9);
  CHECK(j["version"] == "0.1.0");
  fs::remove_all(dir);
}

TEST_CASE("stationary sample compares cleanly") {
  auto dir = scratch("cmp");
  CHECK(run("compare --config " + kConfigs + "/stationary.toml --replicas 10 --out " + dir.string()) == 0);
  auto ledger = slurp(dir / "ledger.csv");
  CHECK(ledger.find("check,time,bound_value,observed,margin,status") != std::string::npos);
  CHECK(ledger.find(",fail") == std::string::npos);
  CHECK(fs::exists(dir / "compare.csv"));
  fs::remove_all(dir);
}

TEST_CASE("configuration errors exit with 2") {
  auto dir = scratch("bad");
  auto cfg = write_config(dir, kSmall + "\n[model]\nm = 1\n");
  CHECK(run("simulate --config " + cfg.string() + " --out " + dir.string()) == 2);
  CHECK(run("simulate --config " + (dir / "missing.toml").string()) == 2);
  CHECK(run("frobnicate") == 2);
  fs::remove_all(dir);
}
