#pragma once

// Built-in markets used across tests and the command line front end.
//
//   bs-1stock              one stock, constant coefficients, complete,
//                          arbitrage-free (b=0.10 sigma=0.20 r=0.05)
//   kappa-arbitrage        two stocks on one factor with incompatible excess
//                          returns; the residual kappa = (-0.1, 0.1) never
//                          vanishes, so pricing must refuse
//   rank-deficient-2factor one stock on two factors, second factor untraded;
//                          complete in component 0 only
//   state-dependent-vol    one stock whose volatility is a smooth bounded
//                          function of its own price (0.15..0.25)

#include <string>
#include <vector>

#include "tameflow/market.hpp"

namespace tameflow::presets {

std::vector<std::string> market_names();

// throws InvalidInput for unknown names
market::MarketSpec market_by_name(const std::string& name);

}  // namespace tameflow::presets
