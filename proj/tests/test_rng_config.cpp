#include "weaksup/config.hpp"
#include "weaksup/rng.hpp"

#include <doctest.h>

#include <cstdio>
#include <set>
#include <vector>

using namespace weaksup;

TEST_CASE("derived seeds are stable and component-separated") {
  CHECK(derive_seed(42, "sampler") == derive_seed(42, "sampler"));
  CHECK(derive_seed(42, "sampler") != derive_seed(42, "trainer"));
  CHECK(derive_seed(42, "sampler") != derive_seed(43, "sampler"));
  CHECK(mix_seed(7, 1) != mix_seed(7, 2));
}

TEST_CASE("rng streams are deterministic") {
  Rng a(123), b(123);
  for (int i = 0; i < 100; ++i) CHECK(a.next_u64() == b.next_u64());

  Rng r(5);
  for (int i = 0; i < 1000; ++i) {
    const double u = r.uniform();
    CHECK(u >= 0.0);
    CHECK(u < 1.0);
  }
}

TEST_CASE("shuffle is a permutation") {
  Rng r(9);
  std::vector<int> items{0, 1, 2, 3, 4, 5, 6, 7};
  r.shuffle(items);
  std::set<int> seen(items.begin(), items.end());
  CHECK(seen.size() == 8);
}

TEST_CASE("ball points stay inside the ball") {
  Rng r(11);
  for (int i = 0; i < 200; ++i) {
    CHECK(r.ball_point(5, 2.5).norm() <= 2.5 * (1.0 + 1e-12));
  }
}

TEST_CASE("config parses key-value text with comments and arrays") {
  const Config cfg = Config::from_text(
      "# a comment\n"
      "sweep.n_grid = 64,128,256\n"
      "problem.label.p_flip=0.05  # trailing comment\n"
      "name = default_cat\n");
  CHECK(cfg.get_longs("sweep.n_grid") == std::vector<long>{64, 128, 256});
  CHECK(cfg.get_double("problem.label.p_flip") == 0.05);
  CHECK(cfg.get_str("name") == "default_cat");
  CHECK_THROWS_AS(cfg.get_str("missing"), ConfigError);
}

TEST_CASE("overrides replace values and malformed input throws") {
  Config cfg = Config::from_text("a = 1\n");
  cfg.apply_override("a=2");
  CHECK(cfg.get_long("a") == 2);
  CHECK_THROWS_AS(cfg.apply_override("no_equals"), ConfigError);
  CHECK_THROWS_AS(Config::from_text("just a line\n"), ConfigError);
}

TEST_CASE("canonical text is sorted and hash is content-stable") {
  Config a = Config::from_text("b = 2\na = 1\n");
  Config b = Config::from_text("a = 1\nb = 2\n");
  CHECK(a.canonical_text() == b.canonical_text());
  CHECK(a.content_hash() == b.content_hash());
  b.apply_override("b=3");
  CHECK(a.content_hash() != b.content_hash());
}

TEST_CASE("unknown keys are hard errors") {
  const Config cfg = Config::from_text("sweep.n_grid = 1,2,3\nsweep.n_gird = 4\n");
  CHECK_THROWS_AS(cfg.require_known({"sweep.n_grid"}, {}), ConfigError);
  CHECK_NOTHROW(cfg.require_known({"sweep.n_grid", "sweep.n_gird"}, {}));
  CHECK_NOTHROW(cfg.require_known({}, {"sweep."}));
}

TEST_CASE("config file round-trip") {
  Config cfg = Config::from_text("x = 1.5\nlist = 1,2,3\n");
  const std::string path = "/tmp/weaksup_test_config.cfg";
  cfg.write_file(path);
  const Config back = Config::from_file(path);
  CHECK(back.canonical_text() == cfg.canonical_text());
  std::remove(path.c_str());
}
