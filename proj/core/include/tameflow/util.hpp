#pragma once

// Shared small utilities: Eigen aliases, a deterministic parallel-for,
// sample statistics, Halton box sampling, number formatting for CSV output,
// and a streaming FNV-1a digest used to fingerprint result files.

#include <Eigen/Dense>
#include <cstdint>
#include <functional>
#include <string>
#include <vector>

namespace tameflow {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

// Runs fn(begin, end) over a static partition of [0, n). Workers own disjoint
// index ranges, so writes to per-index slots are race free and results do not
// depend on the worker count. threads <= 0 selects the hardware count.
void parallel_for(std::size_t n, int threads,
                  const std::function<void(std::size_t, std::size_t)>& fn);

struct MeanSE {
  double mean = 0.0;
  double se = 0.0;  // standard error of the mean
  std::size_t n = 0;
};

// Sequential reduction; independent of any threading above it.
MeanSE mean_se(const std::vector<double>& xs);

double sample_min(const std::vector<double>& xs);

// Least squares slope of y against x. Used for log-log order fits.
double fit_slope(const std::vector<double>& x, const std::vector<double>& y);

// Halton low-discrepancy sequence, one point per call index, dim coordinates
// in [0,1). Index 0 maps to the sequence's second element so the all-zeros
// point never appears. Deterministic and cheap; used to sweep coefficient
// boxes.
Vec halton_point(std::size_t index, int dim);

// Shortest round-trip decimal text for a double (C locale, '.' separator).
std::string format_double(double v);

// FNV-1a 64-bit over a byte stream.
class Fnv1a {
 public:
  void update(const void* data, std::size_t len);
  std::string hex() const;

 private:
  std::uint64_t state_ = 0xcbf29ce484222325ull;
};

std::string fnv1a_file_hex(const std::string& path);

}  // namespace tameflow
