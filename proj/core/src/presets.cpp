#include "tameflow/presets.hpp"

#include "tameflow/errors.hpp"

namespace tameflow::presets {

using market::MarketSpec;

namespace {

MarketSpec bs_1stock() {
  MarketSpec m;
  m.name = "bs-1stock";
  m.n = 1;
  m.d = 1;
  m.b = [](const Vec&, double, Vec& out) { out[0] = 0.10; };
  m.sigma = [](const Vec&, double, Mat& out) { out(0, 0) = 0.20; };
  m.delta = [](const Vec&, double, Vec& out) { out[0] = 0.0; };
  m.r = [](const Vec&, double) { return 0.05; };
  m.p0 = Vec(2);
  m.p0 << 1.0, 100.0;
  m.T = 1.0;
  m.autonomous = true;
  m.constant_coefficients = true;
  return m;
}

MarketSpec kappa_arbitrage() {
  MarketSpec m;
  m.name = "kappa-arbitrage";
  m.n = 2;
  m.d = 1;
  m.b = [](const Vec&, double, Vec& out) {
    out[0] = 0.1;
    out[1] = 0.3;
  };
  m.sigma = [](const Vec&, double, Mat& out) {
    out(0, 0) = 1.0;
    out(1, 0) = 1.0;
  };
  m.delta = [](const Vec&, double, Vec& out) { out.setZero(); };
  m.r = [](const Vec&, double) { return 0.0; };
  m.p0 = Vec(3);
  m.p0 << 1.0, 100.0, 100.0;
  m.T = 1.0;
  m.autonomous = true;
  m.constant_coefficients = true;
  return m;
}

MarketSpec rank_deficient_2factor() {
  MarketSpec m;
  m.name = "rank-deficient-2factor";
  m.n = 1;
  m.d = 2;
  m.b = [](const Vec&, double, Vec& out) { out[0] = 0.10; };
  m.sigma = [](const Vec&, double, Mat& out) {
    out(0, 0) = 0.20;
    out(0, 1) = 0.0;
  };
  m.delta = [](const Vec&, double, Vec& out) { out[0] = 0.0; };
  m.r = [](const Vec&, double) { return 0.05; };
  m.p0 = Vec(2);
  m.p0 << 1.0, 100.0;
  m.T = 1.0;
  m.autonomous = true;
  m.constant_coefficients = true;
  return m;
}

MarketSpec state_dependent_vol() {
  MarketSpec m;
  m.name = "state-dependent-vol";
  m.n = 1;
  m.d = 1;
  m.b = [](const Vec&, double, Vec& out) { out[0] = 0.10; };
  // smooth, bounded in [0.15, 0.25], Lipschitz in p1; equals 0.20 at p1=100
  m.sigma = [](const Vec& p, double, Mat& out) {
    out(0, 0) = 0.15 + 0.10 * p[1] / (100.0 + p[1]);
  };
  m.delta = [](const Vec&, double, Vec& out) { out[0] = 0.0; };
  m.r = [](const Vec&, double) { return 0.05; };
  m.p0 = Vec(2);
  m.p0 << 1.0, 100.0;
  m.T = 1.0;
  m.autonomous = true;
  m.constant_coefficients = false;
  return m;
}

}  // namespace

std::vector<std::string> market_names() {
  return {"bs-1stock", "kappa-arbitrage", "rank-deficient-2factor",
          "state-dependent-vol"};
}

market::MarketSpec market_by_name(const std::string& name) {
  if (name == "bs-1stock") return bs_1stock();
  if (name == "kappa-arbitrage") return kappa_arbitrage();
  if (name == "rank-deficient-2factor") return rank_deficient_2factor();
  if (name == "state-dependent-vol") return state_dependent_vol();
  throw InvalidInput("unknown market preset: " + name);
}

}  // namespace tameflow::presets
