#include <doctest.h>

#include <cmath>

#include "tameflow/config.hpp"
#include "tameflow/errors.hpp"
#include "tameflow/market.hpp"
#include "tameflow/presets.hpp"
#include "tameflow/util.hpp"

using namespace tameflow;

TEST_CASE("spec validation rejects malformed markets") {
  auto m = presets::market_by_name("bs-1stock");
  market::validate_spec(m);

  auto bad = m;
  bad.n = 0;
  CHECK_THROWS_AS(market::validate_spec(bad), InvalidInput);

  bad = m;
  bad.p0 = Vec::Ones(5);
  CHECK_THROWS_AS(market::validate_spec(bad), InvalidInput);

  bad = m;
  bad.p0[1] = -1.0;
  CHECK_THROWS_AS(market::validate_spec(bad), InvalidInput);

  bad = m;
  bad.T = 0.0;
  CHECK_THROWS_AS(market::validate_spec(bad), InvalidInput);

  bad = m;
  bad.sigma = nullptr;
  CHECK_THROWS_AS(market::validate_spec(bad), InvalidInput);
}

TEST_CASE("coefficients of the single-stock preset") {
  const auto m = presets::market_by_name("bs-1stock");
  REQUIRE(m.n == 1);
  REQUIRE(m.d == 1);
  CHECK(m.constant_coefficients);
  CHECK(m.autonomous);
  market::Coeffs c;
  market::eval_coeffs(m, m.p0, 0.3, c);
  CHECK(c.b[0] == doctest::Approx(0.10));
  CHECK(c.sigma(0, 0) == doctest::Approx(0.20));
  CHECK(c.delta[0] == doctest::Approx(0.0));
  CHECK(c.r == doctest::Approx(0.05));
}

TEST_CASE("risk price on the complete preset: kappa vanishes") {
  const auto m = presets::market_by_name("bs-1stock");
  const auto rp = market::risk_price(m, m.p0, 0.0);
  CHECK(rp.theta[0] == doctest::Approx(0.25).epsilon(1e-12));
  CHECK(rp.kappa_norm < 1e-14);
  CHECK(rp.rank == 1);
}

TEST_CASE("risk price on the incompatible-returns preset") {
  const auto m = presets::market_by_name("kappa-arbitrage");
  REQUIRE(m.n == 2);
  REQUIRE(m.d == 1);
  const auto rp = market::risk_price(m, m.p0, 0.0);
  CHECK(rp.theta[0] == doctest::Approx(0.2).epsilon(1e-12));
  CHECK(rp.kappa[0] == doctest::Approx(-0.1).epsilon(1e-12));
  CHECK(rp.kappa[1] == doctest::Approx(0.1).epsilon(1e-12));
  CHECK(rp.kappa_norm == doctest::Approx(std::sqrt(0.02)).epsilon(1e-12));
}

TEST_CASE("risk price on the rank-deficient preset uses the traded factor") {
  const auto m = presets::market_by_name("rank-deficient-2factor");
  const auto rp = market::risk_price(m, m.p0, 0.0);
  REQUIRE(rp.theta.size() == 2);
  CHECK(rp.theta[0] == doctest::Approx(0.25).epsilon(1e-12));
  CHECK(rp.theta[1] == doctest::Approx(0.0));
  CHECK(rp.kappa_norm < 1e-14);
  CHECK(rp.rank == 1);
}

TEST_CASE("risk price reconstruction holds across sampled states") {
  for (const auto& name : presets::market_names()) {
    const auto m = presets::market_by_name(name);
    const auto box = market::default_box(m);
    market::Coeffs c;
    for (std::size_t i = 0; i < 512; ++i) {
      const Vec u = halton_point(i, m.n + 2);
      Vec p(m.n + 1);
      for (int j = 0; j <= m.n; ++j) {
        p[j] = box.lo[j] + u[j] * (box.hi[j] - box.lo[j]);
      }
      const double t = box.t_lo + u[m.n + 1] * (box.t_hi - box.t_lo);
      const auto rp = market::risk_price(m, p, t);
      market::eval_coeffs(m, p, t, c);
      const Vec excess =
          c.b + c.delta - c.r * Vec::Ones(m.n);
      const Vec recon = c.sigma * rp.theta + rp.kappa;
      CHECK((recon - excess).norm() <=
            1e-10 * std::max(1.0, excess.norm()));
    }
  }
}

TEST_CASE("arbitrage screen separates the presets") {
  const auto free_market = presets::market_by_name("bs-1stock");
  const auto free_report = market::is_state_arbitrage_free(
      free_market, market::default_box(free_market), 1024);
  CHECK(free_report.free);
  CHECK(free_report.worst_kappa < 1e-10);

  const auto bad_market = presets::market_by_name("kappa-arbitrage");
  const auto bad_report = market::is_state_arbitrage_free(
      bad_market, market::default_box(bad_market), 1024);
  CHECK_FALSE(bad_report.free);
  CHECK(bad_report.worst_kappa ==
        doctest::Approx(std::sqrt(0.02)).epsilon(1e-10));
}

TEST_CASE("completeness check reports spanned components") {
  const auto m = presets::market_by_name("rank-deficient-2factor");
  const auto box = market::default_box(m);
  const auto first = market::completeness_check(m, box, {0}, 256);
  CHECK(first.complete);
  const auto both = market::completeness_check(m, box, {0, 1}, 256);
  CHECK_FALSE(both.complete);

  const auto bs = presets::market_by_name("bs-1stock");
  const auto bs_report =
      market::completeness_check(bs, market::default_box(bs), {0}, 256);
  CHECK(bs_report.complete);
}

TEST_CASE("lipschitz screen stays bounded on the smooth presets") {
  for (const auto& name : presets::market_names()) {
    const auto m = presets::market_by_name(name);
    const auto report =
        market::lipschitz_screen(m, market::default_box(m), 128);
    CHECK(report.max_quotient < 100.0);
  }
}

TEST_CASE("default box brackets the start") {
  const auto m = presets::market_by_name("bs-1stock");
  const auto box = market::default_box(m);
  CHECK(box.lo[1] == doctest::Approx(50.0));
  CHECK(box.hi[1] == doctest::Approx(200.0));
  CHECK(box.t_hi == doctest::Approx(m.T));
}

TEST_CASE("preset catalogue is stable and validates") {
  const auto names = presets::market_names();
  REQUIRE(names.size() >= 4);
  for (const auto& name : names) {
    const auto m = presets::market_by_name(name);
    CHECK_NOTHROW(market::validate_spec(m));
    CHECK(m.name == name);
  }
  CHECK_THROWS_AS(presets::market_by_name("no-such-market"), InvalidInput);
}

TEST_CASE("config: preset market with overrides") {
  const std::string text = R"({
    "market": {"preset": "bs-1stock"},
    "grid": {"steps": 120},
    "noise": {"seed": 9, "paths": 5000},
    "task": {"name": "price-eu"},
    "claim": {"preset": "put", "strike": 95}
  })";
  const auto cfg = config::parse_config(text);
  CHECK(cfg.market_preset == "bs-1stock");
  CHECK(cfg.market.n == 1);
  CHECK(cfg.grid.steps == 120);
  CHECK(cfg.noise.seed == 9);
  CHECK(cfg.noise.paths == 5000);
  CHECK(cfg.task.name == "price-eu");
  CHECK(cfg.claim.preset == "put");
  CHECK(cfg.claim.params.strike == doctest::Approx(95.0));
}

TEST_CASE("config: expression market evaluates its coefficients") {
  const std::string text = R"json({
    "market": {
      "n": 1, "d": 1,
      "b": ["0.08 + 0.02 * t"],
      "sigma": [["0.15 + 0.10 * p1 / (100 + p1)"]],
      "r": 0.03,
      "p0": [1, 100],
      "T": 2.0,
      "name": "mixed"
    },
    "task": {"name": "simulate"}
  })json";
  const auto cfg = config::parse_config(text);
  CHECK(cfg.market_preset.empty());
  CHECK(cfg.market.T == doctest::Approx(2.0));
  CHECK_FALSE(cfg.market.autonomous);
  CHECK_FALSE(cfg.market.constant_coefficients);

  market::Coeffs c;
  Vec p(2);
  p << 1.0, 100.0;
  market::eval_coeffs(cfg.market, p, 0.5, c);
  CHECK(c.b[0] == doctest::Approx(0.09));
  CHECK(c.sigma(0, 0) == doctest::Approx(0.2));
  CHECK(c.r == doctest::Approx(0.03));
}

TEST_CASE("config: constant expression market is flagged constant") {
  const std::string text = R"({
    "market": {
      "n": 2, "d": 1,
      "b": [0.1, 0.3],
      "sigma": [[1.0], [1.0]],
      "r": 0,
      "p0": [1, 100, 100]
    },
    "task": {"name": "simulate"}
  })";
  const auto cfg = config::parse_config(text);
  CHECK(cfg.market.autonomous);
  CHECK(cfg.market.constant_coefficients);
  const auto rp = market::risk_price(cfg.market, cfg.market.p0, 0.0);
  CHECK(rp.kappa_norm == doctest::Approx(std::sqrt(0.02)).epsilon(1e-12));
}

TEST_CASE("config validation failures") {
  CHECK_THROWS_AS(config::parse_config("not json"), InvalidInput);
  CHECK_THROWS_AS(config::parse_config("[1,2]"), InvalidInput);
  CHECK_THROWS_AS(config::parse_config("{}"), InvalidInput);
  // unknown preset
  CHECK_THROWS_AS(config::parse_config(
                      R"({"market": {"preset": "nope"}})"),
                  InvalidInput);
  // sigma row count mismatch
  CHECK_THROWS_AS(config::parse_config(R"({
    "market": {"n": 2, "d": 1, "b": [0.1, 0.1],
               "sigma": [[1.0]], "p0": [1, 100, 100]}
  })"),
                  InvalidInput);
  // unknown task
  CHECK_THROWS_AS(config::parse_config(R"({
    "market": {"preset": "bs-1stock"}, "task": {"name": "dance"}
  })"),
                  InvalidInput);
  // unknown claim
  CHECK_THROWS_AS(config::parse_config(R"({
    "market": {"preset": "bs-1stock"}, "claim": {"preset": "swaption"}
  })"),
                  InvalidInput);
  // malformed expression
  CHECK_THROWS_AS(config::parse_config(R"({
    "market": {"n": 1, "d": 1, "b": ["0.1 +"],
               "sigma": [["0.2"]], "p0": [1, 100]}
  })"),
                  InvalidInput);
  // restart beyond the horizon
  CHECK_THROWS_AS(config::parse_config(R"({
    "market": {"preset": "bs-1stock"}, "task": {"name": "simulate", "restart": 2.0}
  })"),
                  InvalidInput);
}

TEST_CASE("config: every preset round-trips") {
  for (const auto& name : presets::market_names()) {
    const std::string text =
        std::string(R"({"market": {"preset": ")") + name + R"("}})";
    const auto cfg = config::parse_config(text);
    CHECK(cfg.market.name == name);
    CHECK_NOTHROW(market::validate_spec(cfg.market));
  }
}
