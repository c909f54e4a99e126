#include <cmath>

#include "doctest.h"
#include "solspeck/config.hpp"

using namespace solspeck;

namespace {

int error_line(const std::string& text) {
  try {
    parse_config_text(text, "test.cfg");
  } catch (const ConfigError& e) {
    return e.line();
  }
  return -1;
}

}  // namespace

TEST_CASE("defaults round-trip through the canonical rendering") {
  ExperimentConfig cfg;
  auto back = parse_config_text(canonical_config(cfg), "canon");
  CHECK(config_hash(back) == config_hash(cfg));
  CHECK(back.n == cfg.n);
  CHECK(back.g == cfg.g);
  CHECK(back.dt == cfg.dt);
  CHECK(back.seeds == cfg.seeds);
}

TEST_CASE("xi is an alternative spelling of g") {
  auto cfg = parse_config_text("[physics]\nn = 25\nxi = 1.0\n", "t");
  CHECK(cfg.g == doctest::Approx(-0.08).epsilon(1e-15));
  CHECK(cfg.xi() == doctest::Approx(1.0).epsilon(1e-15));
}

TEST_CASE("diagnostics carry file and line") {
  CHECK(error_line("[physics]\nn = 25\nbogus = 1\n") == 3);
  CHECK(error_line("[nope]\n") == 1);
  CHECK(error_line("[physics]\nn twenty\n") == 2);
  CHECK(error_line("n = 25\n") == 1);                      // key before section
  CHECK(error_line("[physics]\nn = 25\nn = 26\n") == 3);   // duplicate
  CHECK(error_line("[physics]\ng = 0.3\n") == 2);          // repulsive
  CHECK(error_line("[physics]\ng = -0.1\nxi = 1\n") == 3); // both spellings
  CHECK(error_line("[lattice]\nm = 40\n") == 2);           // even M
  CHECK(error_line("[ground_state]\nschedule = 0.01,0.05\n") == 2);  // not decreasing
  CHECK(error_line("[evolution]\ndt = 0\n") == 2);
}

TEST_CASE("comments and blank lines are ignored") {
  auto cfg = parse_config_text("# leading\n\n[physics]\nn = 7  # trailing\n", "t");
  CHECK(cfg.n == 7);
}

TEST_CASE("seed lists: singletons, ranges, duplicates") {
  auto s = parse_seed_list("3,5,9..12");
  CHECK(s == std::vector<uint64_t>{3, 5, 9, 10, 11, 12});
  CHECK(parse_seed_list("1..96").size() == 96);
  CHECK_THROWS(parse_seed_list("4,4"));
  CHECK_THROWS(parse_seed_list("7..3"));
  CHECK_THROWS(parse_seed_list("a"));
  CHECK_THROWS(parse_seed_list(""));
}

TEST_CASE("hash ignores run identity but tracks physics") {
  ExperimentConfig a;
  ExperimentConfig b = a;
  b.out_dir = "elsewhere";
  b.workers = 64;
  b.seeds = {900, 901};
  CHECK(config_hash(a) == config_hash(b));
  ExperimentConfig c = a;
  c.v0 *= 2;
  CHECK(config_hash(a) != config_hash(c));
  ExperimentConfig d = a;
  d.chi += 1;
  CHECK(config_hash(a) != config_hash(d));
}

TEST_CASE("paper preset resolves and carries the headline parameters") {
  auto cfg = parse_config_file(resolve_preset("paper"));
  CHECK(cfg.n == 25);
  CHECK(cfg.xi() == doctest::Approx(1.0).epsilon(1e-15));
  CHECK(cfg.m == 1921);
  CHECK(cfg.delta == doctest::Approx(0.2));      // xi / 5
  CHECK(cfg.dt == doctest::Approx(0.008));
  CHECK(cfg.chi == 30);
  CHECK(cfg.nmax == 14);
  CHECK(cfg.effective_nmax() == 14);
  CHECK(cfg.v0 == doctest::Approx(2.5e-4));
  CHECK(cfg.sigma0 == doctest::Approx(0.4));
  CHECK(cfg.omega == doctest::Approx(0.025));
  CHECK(cfg.seeds.size() == 96);
  CHECK(cfg.t_max == doctest::Approx(4000.0));
}

TEST_CASE("other presets parse") {
  CHECK_NOTHROW(parse_config_file(resolve_preset("desk")));
  CHECK_NOTHROW(parse_config_file(resolve_preset("smoke")));
  CHECK_THROWS(resolve_preset("no-such-preset"));
}

TEST_CASE("ideal gas configuration keeps xi infinite") {
  auto cfg = parse_config_text("[physics]\nn = 4\ng = 0\n", "t");
  CHECK(std::isinf(cfg.xi()));
}
