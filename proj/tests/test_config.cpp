#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <string>

#include "bdlp/config.hpp"
#include "bdlp/errors.hpp"

using namespace bdlp;

namespace {

const std::string kMinimal = R"(# minimal
[domain]
d = 1
L = 20.0

[model]
m = 0.5

[kernel.minus]
type = "gaussian"
c = 2.0
sigma = 1.0

[kernel.plus]
type = "tophat"
c = 1.0
radius = 0.5
)";

ConfigError error_of(const std::string& text) {
  try {
    parse_config(text);
  } catch (const ConfigError& e) {
    return e;
  }
  FAIL("no ConfigError for:\n" << text);
  return ConfigError("unreachable");
}

std::string replace(std::string s, const std::string& from, const std::string& to) {
  auto at = s.find(from);
  REQUIRE(at != std::string::npos);
  return s.replace(at, from.size(), to);
}

}  // namespace

TEST_CASE("minimal file gets defaults") {
  auto cfg = parse_config(kMinimal);
  CHECK(cfg.dim == 1);
  CHECK(cfg.L == 20.0);
  CHECK(cfg.m == 0.5);
  CHECK(cfg.minus.type == "gaussian");
  CHECK(cfg.plus.radius == 0.5);
  CHECK(cfg.simulate.replicas == 1);
  CHECK(cfg.simulate.seed == 1);
  CHECK(cfg.simulate.bins == 64);
  CHECK(cfg.hierarchy.closure == "kirkwood");
  CHECK(cfg.stability.n_max == 6);
  CHECK(cfg.bounds.variant == "full");
  CHECK_FALSE(cfg.bounds.delta.has_value());
  CHECK(cfg.k0_sup_root() == cfg.simulate.initial_intensity);
  auto pair = cfg.pair();
  CHECK(pair.a_minus.l1_norm() == doctest::Approx(2.0));
}

TEST_CASE("resolved configuration round-trips") {
  std::string text = kMinimal + R"(
[simulate]
seed = 18446744073709551615
t_end = 0.30000000000000004
replicas = 3

[bounds]
delta = 0.25

[compare]
r0 = 1.5
)";
  auto cfg = parse_config(text);
  CHECK(cfg.simulate.seed == 18446744073709551615ull);
  auto resolved = resolved_config(cfg);
  auto again = parse_config(resolved);
  CHECK(resolved_config(again) == resolved);
  CHECK(again.simulate.seed == cfg.simulate.seed);
  CHECK(again.simulate.t_end == cfg.simulate.t_end);
  CHECK(*again.bounds.delta == 0.25);
  CHECK(*again.compare.r0 == 1.5);
  CHECK(config_hash(again) == config_hash(cfg));
  cfg.simulate.replicas = 4;
  CHECK(config_hash(again) != config_hash(cfg));
}

TEST_CASE("fnv1a reference values") {
  CHECK(fnv1a("") == 0xcbf29ce484222325ull);
  CHECK(fnv1a("a") == 0xaf63dc4c8601ec8cull);
  CHECK(fnv1a("foobar") == 0x85944171f73967e8ull);
}

TEST_CASE("toml subset") {
  auto secs = parse_toml("a = 1\n[x.y]\ns = \"q\\\"t\" # c\nt = [[0, 1.5], [2e0, -3]]\nb = true\n");
  REQUIRE(secs.size() == 2);
  CHECK(secs[0].name.empty());
  CHECK(secs[0].entries[0].value.integral);
  CHECK(secs[1].name == "x.y");
  CHECK(secs[1].line == 2);
  CHECK(secs[1].entries[0].value.text == "q\"t");
  const auto& t = secs[1].entries[1].value;
  REQUIRE(t.items.size() == 2);
  CHECK(t.items[1].items[1].number == -3.0);
  CHECK_FALSE(t.items[0].items[1].integral);
  CHECK(secs[1].entries[2].value.boolean);
  CHECK_THROWS_AS(parse_toml("a = \"open\n"), ConfigError);
  CHECK_THROWS_AS(parse_toml("a = 1 2\n"), ConfigError);
}

TEST_CASE("duplicates cite their position") {
  auto dup_key = error_of(replace(kMinimal, "m = 0.5\n", "m = 0.5\nm = 0.6\n"));
  CHECK(dup_key.line() == 8);
  CHECK(dup_key.column() == 1);
  CHECK(std::string(dup_key.what()).find("duplicate key 'm'") != std::string::npos);

  auto dup_section = error_of(kMinimal + "\n[model]\n");
  CHECK(dup_section.line() == 19);
  CHECK(std::string(dup_section.what()).find("duplicate section [model]") != std::string::npos);
}

TEST_CASE("unknown keys and sections") {
  auto k = error_of(replace(kMinimal, "m = 0.5\n", "m = 0.5\nmu = 1\n"));
  CHECK(k.line() == 8);
  CHECK(std::string(k.what()).find("unknown key 'mu'") != std::string::npos);
  auto s = error_of(kMinimal + "[extras]\n");
  CHECK(std::string(s.what()).find("unknown section [extras]") != std::string::npos);
  auto field = error_of(replace(kMinimal, "sigma = 1.0\n", "sigma = 1.0\nradius = 2.0\n"));
  CHECK(field.line() == 13);
}

TEST_CASE("missing required entries") {
  CHECK_THROWS_AS(parse_config(replace(kMinimal, "L = 20.0\n", "")), ConfigError);
  CHECK_THROWS_AS(parse_config(replace(kMinimal, "m = 0.5\n", "")), ConfigError);
  CHECK_THROWS_AS(parse_config("[domain]\nd = 1\nL = 2.0\n[model]\nm = 0\n"), ConfigError);
}

TEST_CASE("type errors") {
  auto t = error_of(replace(kMinimal, "d = 1\n", "d = 1.5\n"));
  CHECK(t.line() == 3);
  CHECK(t.column() == 5);
  CHECK(std::string(t.what()).find("integer") != std::string::npos);
  auto s = error_of(replace(kMinimal, "type = \"gaussian\"", "type = gaussian"));
  CHECK(s.line() == 10);
  auto b = error_of(kMinimal + "[simulate]\nwrite_points = 1\n");
  CHECK(std::string(b.what()).find("true or false") != std::string::npos);
  auto neg = error_of(kMinimal + "[simulate]\nreplicas = -3\n");
  CHECK(neg.line() == 19);
}

TEST_CASE("torus rule for finite-range kernels") {
  auto e = error_of(replace(kMinimal, "radius = 0.5", "radius = 10.0"));
  CHECK(e.line() == 17);
  CHECK(std::string(e.what()).find("L/2") != std::string::npos);
  CHECK_NOTHROW(parse_config(replace(kMinimal, "radius = 0.5", "radius = 9.99")));
}

TEST_CASE("kernel dimension must match the domain") {
  auto e = error_of(replace(kMinimal, "type = \"tophat\"", "type = \"tophat\"\nd = 2"));
  CHECK(e.line() == 16);
  CHECK_NOTHROW(parse_config(replace(kMinimal, "type = \"tophat\"", "type = \"tophat\"\nd = 1")));
}

TEST_CASE("competition is required unless waived") {
  const std::string none = replace(kMinimal, "type = \"gaussian\"\nc = 2.0\nsigma = 1.0\n", "type = \"zero\"\n");
  auto e = error_of(none);
  CHECK(std::string(e.what()).find("allow_no_competition") != std::string::npos);
  CHECK_NOTHROW(parse_config(replace(none, "m = 0.5\n", "m = 0.5\nallow_no_competition = true\n")));
}

TEST_CASE("delta and epsilon ranges") {
  auto d = error_of(kMinimal + "[bounds]\ndelta = 0.6\n");
  CHECK(d.line() == 19);
  CHECK(std::string(d.what()).find("delta") != std::string::npos);
  CHECK_NOTHROW(parse_config(kMinimal + "[bounds]\ndelta = 0.5\n"));
  CHECK_THROWS_AS(parse_config(kMinimal + "[stability]\nb = 0.1\n[bounds]\ndelta = 0.5\n"), ConfigError);

  const std::string sub = replace(kMinimal, "m = 0.5\n", "m = 2.0\n");
  CHECK_NOTHROW(parse_config(sub + "[bounds]\nepsilon = 0.5\n"));
  auto eps = error_of(sub + "[bounds]\nepsilon = 1.0\n");
  CHECK(eps.line() == 19);
  CHECK_THROWS_AS(parse_config(sub + "[bounds]\nepsilon = 1.5\n"), ConfigError);
  CHECK_THROWS_AS(parse_config(sub + "[bounds]\nepsilon = 0\n"), ConfigError);
}

TEST_CASE("value ranges") {
  CHECK_THROWS_AS(parse_config(replace(kMinimal, "L = 20.0", "L = -1")), ConfigError);
  CHECK_THROWS_AS(parse_config(replace(kMinimal, "m = 0.5", "m = -0.1")), ConfigError);
  CHECK_THROWS_AS(parse_config(kMinimal + "[hierarchy]\nclosure = \"gauss\"\n"), ConfigError);
  CHECK_THROWS_AS(parse_config(kMinimal + "[bounds]\nalpha1 = 2\n"), ConfigError);
  CHECK_THROWS_AS(parse_config(kMinimal + "[bounds]\nvariant = \"half\"\n"), ConfigError);
  CHECK_THROWS_AS(parse_config(kMinimal + "[simulate]\nbins = 1\n"), ConfigError);
}

TEST_CASE("missing file") { CHECK_THROWS_AS(load_config("/nonexistent/bdlp.toml"), ConfigError); }
