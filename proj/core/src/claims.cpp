#include "tameflow/claims.hpp"

#include <algorithm>
#include <cmath>

#include "tameflow/errors.hpp"

namespace tameflow::claims {

void validate_claim(const ClaimSpec& claim, int d) {
  if (!claim.payoff) throw InvalidInput("claim has no payoff");
  if (static_cast<bool>(claim.income_drift) !=
      static_cast<bool>(claim.income_vol)) {
    throw InvalidInput("claim defines only one half of the income structure");
  }
  for (int j : claim.driving) {
    if (j < 0 || j >= d) {
      throw InvalidInput("claim driving index out of range");
    }
  }
}

std::vector<std::string> claim_names() {
  return {"call", "put", "digital", "barrier-capped"};
}

ClaimSpec claim_preset(const std::string& name, const ClaimParams& params) {
  const double strike = params.strike;
  if (!(strike > 0.0) || !std::isfinite(strike)) {
    throw InvalidInput("claim strike must be positive");
  }
  ClaimSpec claim;
  claim.id = name;
  if (name == "call") {
    claim.payoff = [strike](double, const Vec& p) {
      return std::max(p[1] - strike, 0.0);
    };
  } else if (name == "put") {
    claim.payoff = [strike](double, const Vec& p) {
      return std::max(strike - p[1], 0.0);
    };
  } else if (name == "digital") {
    const double cash = params.cash;
    if (!std::isfinite(cash)) throw InvalidInput("digital cash must be finite");
    claim.payoff = [strike, cash](double, const Vec& p) {
      return p[1] >= strike ? cash : 0.0;
    };
  } else if (name == "barrier-capped") {
    const double barrier = params.barrier;
    if (!(barrier > strike)) {
      throw InvalidInput("barrier must exceed the strike");
    }
    claim.payoff = [strike](double, const Vec& p) {
      return std::max(p[1] - strike, 0.0);
    };
    claim.inside = [barrier](const Vec& p) { return p[1] < barrier; };
  } else {
    throw InvalidInput("unknown claim preset '" + name + "'");
  }
  return claim;
}

std::size_t expiry_index(const ClaimSpec& claim, const flow::FlowPath& f) {
  const std::size_t last = f.valid_states == 0 ? 0 : f.valid_states - 1;
  if (!claim.inside) return last;
  for (std::size_t i = 0; i <= last; ++i) {
    if (!claim.inside(f.prices.col(i))) return i;
  }
  return last;
}

}  // namespace tameflow::claims
