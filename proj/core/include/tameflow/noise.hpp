#pragma once

// Driving-noise generation on time grids. Gaussian increments are produced by
// a counter-based generator keyed on (seed, path index, interval index,
// component), so any single increment is reproducible in isolation and the
// ensemble is identical no matter how paths are scheduled across workers.

#include <cstdint>
#include <iosfwd>
#include <memory>
#include <vector>

#include "tameflow/util.hpp"

namespace tameflow::noise {

class TimeGrid {
 public:
  // times must be finite, strictly increasing, with times.front() >= 0
  explicit TimeGrid(std::vector<double> times);

  static std::shared_ptr<const TimeGrid> uniform(double t0, double t1,
                                                 int steps);
  static std::shared_ptr<const TimeGrid> make(std::vector<double> times);

  std::size_t size() const { return times_.size(); }
  std::size_t steps() const { return times_.size() - 1; }
  double operator[](std::size_t i) const { return times_[i]; }
  double front() const { return times_.front(); }
  double back() const { return times_.back(); }
  double dt(std::size_t i) const { return times_[i + 1] - times_[i]; }
  const std::vector<double>& times() const { return times_; }

  bool is_uniform() const { return uniform_; }
  // index of the grid point equal to t (within a 1e-12 * span slack),
  // or -1 when t is not a grid point
  std::ptrdiff_t find(double t) const;
  // index i of the interval [t_i, t_{i+1}) containing t, clamped into
  // [0, steps() - 1]; for callers that freeze per-interval data and may be
  // queried at times between grid points
  std::size_t interval_of(double t) const;

 private:
  std::vector<double> times_;
  bool uniform_ = false;
};

using GridPtr = std::shared_ptr<const TimeGrid>;

// One path of Brownian increments over a grid. increments(i, j) is the
// component-j increment over [t_i, t_{i+1}], with variance dt(i).
struct NoisePath {
  GridPtr grid;
  int d = 0;
  std::uint64_t seed = 0;
  std::uint64_t path_index = 0;
  Mat increments;  // steps x d

  std::size_t steps() const { return grid ? grid->steps() : 0; }
};

// Deterministic in all four identifiers; changing any one changes the draw.
NoisePath generate(const GridPtr& grid, int d, std::uint64_t seed,
                   std::uint64_t path_index);

std::vector<NoisePath> generate_ensemble(const GridPtr& grid, int d,
                                         std::uint64_t seed,
                                         std::size_t n_paths, int threads = 1);

// Restriction to [s, end]: s must be a grid point; the retained increments
// are reused unchanged, so the restricted path drives the same randomness.
NoisePath restrict_after(const NoisePath& path, double s);

// Time relabeling t -> t - s on a uniform grid (the increment over
// [t_i - s, t_{i+1} - s] equals the original increment over [t_i, t_{i+1}]).
// Non-uniform grids are rejected as unsupported.
NoisePath shift(const NoisePath& path, double s);

// Sums consecutive groups of `factor` increments, producing the same
// Brownian path viewed on the coarser nested grid. steps() must be divisible
// by factor.
NoisePath coarsen(const NoisePath& path, int factor);

// Binary layout (little-endian):
//   8 bytes magic "TFNOISE1", u32 d, u32 reserved(0), u64 seed,
//   u64 path_index, u64 n_times, n_times f64 grid times,
//   (n_times-1)*d f64 increments, interval-major (row i holds interval i).
void write_binary(const NoisePath& path, std::ostream& out);
NoisePath read_binary(std::istream& in);

// Raw standard-normal draw for one (seed, path, interval, component) cell.
// Exposed for the statistical tests.
double normal_draw(std::uint64_t seed, std::uint64_t path_index,
                   std::uint32_t interval, std::uint32_t component);

}  // namespace tameflow::noise
