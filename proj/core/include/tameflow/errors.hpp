#pragma once

// Error taxonomy for the engine. Every failure a caller can act on gets its
// own type; the command line front end maps these to process exit codes.

#include <stdexcept>
#include <string>

namespace tameflow {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// malformed arguments, dimension mismatches, non-finite inputs
class InvalidInput : public Error {
 public:
  using Error::Error;
};

// a linear solve was asked for a right hand side outside the attainable span
class NoSolution : public Error {
 public:
  NoSolution(const std::string& what, double residual)
      : Error(what), residual_(residual) {}
  double residual() const { return residual_; }

 private:
  double residual_ = 0.0;
};

// market coefficient callbacks returned a non-finite value at a finite state
class ModelEvaluation : public Error {
 public:
  using Error::Error;
};

// a simulated state left the representable range; carries the first bad time
class Explosion : public Error {
 public:
  Explosion(const std::string& what, double first_bad_time)
      : Error(what), time_(first_bad_time) {}
  double first_bad_time() const { return time_; }

 private:
  double time_ = 0.0;
};

// the operation is not defined for the given inputs (e.g. a shift on a
// non-uniform grid, or a cocycle check on time-dependent coefficients)
class Unsupported : public Error {
 public:
  using Error::Error;
};

// valuation declined because the sampled market admits arbitrage
class PricingRefused : public Error {
 public:
  PricingRefused(const std::string& what, double worst_kappa)
      : Error(what), worst_(worst_kappa) {}
  double worst_kappa() const { return worst_; }

 private:
  double worst_ = 0.0;
};

// the hedge equations have no solution in the traded span; the residual is
// the size of the unattainable component and doubles as an incompleteness
// measurement
class HedgingInfeasible : public Error {
 public:
  HedgingInfeasible(const std::string& what, double residual)
      : Error(what), residual_(residual) {}
  double residual() const { return residual_; }

 private:
  double residual_ = 0.0;
};

// a regression design matrix was unusable (non-finite entries, or fewer
// observations than basis functions)
class DegenerateBasis : public Error {
 public:
  using Error::Error;
};

// an unhedgeable-claim construction was requested in a market that is
// actually complete, so no witness exists
class WitnessUnavailable : public Error {
 public:
  using Error::Error;
};

}  // namespace tameflow
