#pragma once

// Contingent-claim descriptions shared by the European and American
// valuation layers. A claim pays g(x, p) at its expiration, which is either
// the fixed horizon of the grid or the first grid time the price leaves an
// open region (capped at the horizon). An optional income stream with the
// same shape as the wealth-income dynamics may be attached; its deflated
// accumulation enters the valuation identity.

#include <functional>
#include <string>
#include <vector>

#include "tameflow/flow.hpp"

namespace tameflow::claims {

struct ClaimSpec {
  std::string id;
  // terminal payment; x is the claim's own wealth argument and is zero for
  // ordinary payoff claims
  std::function<double(double x, const Vec& p)> payoff;
  // open continuation region; null means fixed-horizon expiration. The
  // claim expires at the first grid time where inside() is false.
  std::function<bool(const Vec& p)> inside;
  // optional income stream, both callbacks or neither
  std::function<double(double x, const Vec& p, double t)> income_drift;
  std::function<void(double x, const Vec& p, double t, Vec& out)> income_vol;
  // Brownian components the payoff may load on; empty means unrestricted.
  // Representation estimates zero their coefficients outside this set.
  std::vector<int> driving;
  // payoff or income read the wealth argument; switches the regression
  // state to the full (x, p) basis downstream
  bool wealth_dependent = false;

  bool has_income() const { return static_cast<bool>(income_drift); }
};

// basic shape checks (payoff present, income halves paired, driving
// indices within [0, d)); throws InvalidInput
void validate_claim(const ClaimSpec& claim, int d);

struct ClaimParams {
  double strike = 100.0;
  double barrier = 150.0;
  double cash = 1.0;
};

std::vector<std::string> claim_names();

// call, put, digital, barrier-capped; throws InvalidInput on unknown names
ClaimSpec claim_preset(const std::string& name, const ClaimParams& params = {});

// first grid index at which the claim expires along a flow path: the first
// time outside the continuation region, or the last index
std::size_t expiry_index(const ClaimSpec& claim, const flow::FlowPath& f);

}  // namespace tameflow::claims
