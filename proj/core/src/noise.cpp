#include "tameflow/noise.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <istream>
#include <numbers>
#include <ostream>

#include "tameflow/errors.hpp"

namespace tameflow::noise {

namespace {

// ---- counter-based block cipher core (4x32, 10 rounds) ----

struct Block {
  std::uint32_t v[4];
};

inline std::uint32_t mul_hi(std::uint32_t a, std::uint32_t b) {
  return static_cast<std::uint32_t>(
      (static_cast<std::uint64_t>(a) * static_cast<std::uint64_t>(b)) >> 32);
}

inline Block philox_round(Block x, std::uint32_t k0, std::uint32_t k1) {
  constexpr std::uint32_t kMul0 = 0xD2511F53u;
  constexpr std::uint32_t kMul1 = 0xCD9E8D57u;
  std::uint32_t hi0 = mul_hi(kMul0, x.v[0]);
  std::uint32_t lo0 = kMul0 * x.v[0];
  std::uint32_t hi1 = mul_hi(kMul1, x.v[2]);
  std::uint32_t lo1 = kMul1 * x.v[2];
  return Block{{hi1 ^ x.v[1] ^ k0, lo1, hi0 ^ x.v[3] ^ k1, lo0}};
}

inline Block philox10(Block ctr, std::uint32_t k0, std::uint32_t k1) {
  constexpr std::uint32_t kGold = 0x9E3779B9u;
  constexpr std::uint32_t kRoot = 0xBB67AE85u;
  for (int r = 0; r < 10; ++r) {
    ctr = philox_round(ctr, k0, k1);
    k0 += kGold;
    k1 += kRoot;
  }
  return ctr;
}

inline double to_unit_open(std::uint64_t bits) {
  // 53 significant bits -> (0, 1]
  return (static_cast<double>(bits >> 11) + 1.0) * 0x1.0p-53;
}

inline double to_unit_half_open(std::uint64_t bits) {
  // 53 significant bits -> [0, 1)
  return static_cast<double>(bits >> 11) * 0x1.0p-53;
}

}  // namespace

double normal_draw(std::uint64_t seed, std::uint64_t path_index,
                   std::uint32_t interval, std::uint32_t component) {
  Block ctr{{static_cast<std::uint32_t>(path_index),
             static_cast<std::uint32_t>(path_index >> 32), interval,
             component}};
  Block w = philox10(ctr, static_cast<std::uint32_t>(seed),
                     static_cast<std::uint32_t>(seed >> 32));
  std::uint64_t a =
      (static_cast<std::uint64_t>(w.v[0]) << 32) | w.v[1];
  std::uint64_t b =
      (static_cast<std::uint64_t>(w.v[2]) << 32) | w.v[3];
  double u1 = to_unit_open(a);
  double u2 = to_unit_half_open(b);
  return std::sqrt(-2.0 * std::log(u1)) *
         std::cos(2.0 * std::numbers::pi * u2);
}

// ---- time grid ----

TimeGrid::TimeGrid(std::vector<double> times) : times_(std::move(times)) {
  if (times_.size() < 2) throw InvalidInput("TimeGrid: need at least 2 times");
  if (!(times_.front() >= 0.0))
    throw InvalidInput("TimeGrid: start time must be >= 0");
  for (std::size_t i = 0; i + 1 < times_.size(); ++i) {
    if (!std::isfinite(times_[i]) || !(times_[i] < times_[i + 1]))
      throw InvalidInput("TimeGrid: times must be finite and strictly increasing");
  }
  if (!std::isfinite(times_.back()))
    throw InvalidInput("TimeGrid: times must be finite");
  double dt0 = times_[1] - times_[0];
  uniform_ = true;
  for (std::size_t i = 0; i + 1 < times_.size(); ++i) {
    if (std::abs(dt(i) - dt0) > 1e-12 * std::max(1.0, dt0)) {
      uniform_ = false;
      break;
    }
  }
}

std::shared_ptr<const TimeGrid> TimeGrid::uniform(double t0, double t1,
                                                  int steps) {
  if (steps < 1) throw InvalidInput("TimeGrid::uniform: steps must be >= 1");
  std::vector<double> ts(static_cast<std::size_t>(steps) + 1);
  double dt = (t1 - t0) / steps;
  for (int i = 0; i <= steps; ++i) ts[static_cast<std::size_t>(i)] = t0 + i * dt;
  ts.back() = t1;  // land exactly on the endpoint
  return std::make_shared<const TimeGrid>(std::move(ts));
}

std::shared_ptr<const TimeGrid> TimeGrid::make(std::vector<double> times) {
  return std::make_shared<const TimeGrid>(std::move(times));
}

std::ptrdiff_t TimeGrid::find(double t) const {
  double slack = 1e-12 * std::max(1.0, std::abs(back()));
  for (std::size_t i = 0; i < times_.size(); ++i)
    if (std::abs(times_[i] - t) <= slack) return static_cast<std::ptrdiff_t>(i);
  return -1;
}

std::size_t TimeGrid::interval_of(double t) const {
  const auto it = std::upper_bound(times_.begin(), times_.end(), t);
  const std::ptrdiff_t idx = (it - times_.begin()) - 1;
  const std::ptrdiff_t last = static_cast<std::ptrdiff_t>(times_.size()) - 2;
  return static_cast<std::size_t>(std::clamp<std::ptrdiff_t>(idx, 0, last));
}

// ---- generation and structural operations ----

NoisePath generate(const GridPtr& grid, int d, std::uint64_t seed,
                   std::uint64_t path_index) {
  if (!grid) throw InvalidInput("generate: null grid");
  if (d < 1) throw InvalidInput("generate: d must be >= 1");
  NoisePath p;
  p.grid = grid;
  p.d = d;
  p.seed = seed;
  p.path_index = path_index;
  p.increments.resize(static_cast<Eigen::Index>(grid->steps()), d);
  for (std::size_t i = 0; i < grid->steps(); ++i) {
    double sdt = std::sqrt(grid->dt(i));
    for (int j = 0; j < d; ++j) {
      p.increments(static_cast<Eigen::Index>(i), j) =
          sdt * normal_draw(seed, path_index, static_cast<std::uint32_t>(i),
                            static_cast<std::uint32_t>(j));
    }
  }
  return p;
}

std::vector<NoisePath> generate_ensemble(const GridPtr& grid, int d,
                                         std::uint64_t seed,
                                         std::size_t n_paths, int threads) {
  std::vector<NoisePath> out(n_paths);
  parallel_for(n_paths, threads, [&](std::size_t b, std::size_t e) {
    for (std::size_t k = b; k < e; ++k)
      out[k] = generate(grid, d, seed, static_cast<std::uint64_t>(k));
  });
  return out;
}

NoisePath restrict_after(const NoisePath& path, double s) {
  if (!path.grid) throw InvalidInput("restrict_after: empty path");
  std::ptrdiff_t at = path.grid->find(s);
  if (at < 0) throw InvalidInput("restrict_after: s is not a grid point");
  auto offset = static_cast<std::size_t>(at);
  std::vector<double> ts(path.grid->times().begin() +
                             static_cast<std::ptrdiff_t>(offset),
                         path.grid->times().end());
  if (ts.size() < 2)
    throw InvalidInput("restrict_after: nothing remains after s");
  NoisePath out;
  out.grid = TimeGrid::make(std::move(ts));
  out.d = path.d;
  out.seed = path.seed;
  out.path_index = path.path_index;
  out.increments = path.increments.bottomRows(
      path.increments.rows() - static_cast<Eigen::Index>(offset));
  return out;
}

NoisePath shift(const NoisePath& path, double s) {
  if (!path.grid) throw InvalidInput("shift: empty path");
  if (!path.grid->is_uniform())
    throw Unsupported("shift: only uniform grids support time relabeling");
  NoisePath tail = restrict_after(path, s);
  std::vector<double> ts(tail.grid->size());
  for (std::size_t i = 0; i < ts.size(); ++i) ts[i] = (*tail.grid)[i] - s;
  if (!ts.empty()) ts[0] = std::max(ts[0], 0.0);  // clamp -0 style residue
  tail.grid = TimeGrid::make(std::move(ts));
  return tail;
}

NoisePath coarsen(const NoisePath& path, int factor) {
  if (!path.grid) throw InvalidInput("coarsen: empty path");
  if (factor < 1) throw InvalidInput("coarsen: factor must be >= 1");
  std::size_t steps = path.steps();
  if (steps % static_cast<std::size_t>(factor) != 0)
    throw InvalidInput("coarsen: steps not divisible by factor");
  std::size_t coarse_steps = steps / static_cast<std::size_t>(factor);
  std::vector<double> ts(coarse_steps + 1);
  for (std::size_t i = 0; i <= coarse_steps; ++i)
    ts[i] = (*path.grid)[i * static_cast<std::size_t>(factor)];
  NoisePath out;
  out.grid = TimeGrid::make(std::move(ts));
  out.d = path.d;
  out.seed = path.seed;
  out.path_index = path.path_index;
  out.increments = Mat::Zero(static_cast<Eigen::Index>(coarse_steps), path.d);
  for (std::size_t i = 0; i < coarse_steps; ++i)
    for (int f = 0; f < factor; ++f)
      out.increments.row(static_cast<Eigen::Index>(i)) += path.increments.row(
          static_cast<Eigen::Index>(i * static_cast<std::size_t>(factor) +
                                    static_cast<std::size_t>(f)));
  return out;
}

// ---- binary dump ----

namespace {
constexpr char kMagic[8] = {'T', 'F', 'N', 'O', 'I', 'S', 'E', '1'};

template <typename T>
void put(std::ostream& out, T v) {
  out.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
T get(std::istream& in) {
  T v{};
  in.read(reinterpret_cast<char*>(&v), sizeof(T));
  if (!in) throw InvalidInput("read_binary: truncated stream");
  return v;
}
}  // namespace

void write_binary(const NoisePath& path, std::ostream& out) {
  if (!path.grid) throw InvalidInput("write_binary: empty path");
  out.write(kMagic, sizeof(kMagic));
  put<std::uint32_t>(out, static_cast<std::uint32_t>(path.d));
  put<std::uint32_t>(out, 0u);
  put<std::uint64_t>(out, path.seed);
  put<std::uint64_t>(out, path.path_index);
  put<std::uint64_t>(out, path.grid->size());
  for (double t : path.grid->times()) put<double>(out, t);
  for (Eigen::Index i = 0; i < path.increments.rows(); ++i)
    for (int j = 0; j < path.d; ++j) put<double>(out, path.increments(i, j));
}

NoisePath read_binary(std::istream& in) {
  char magic[8];
  in.read(magic, sizeof(magic));
  if (!in || std::memcmp(magic, kMagic, sizeof(kMagic)) != 0)
    throw InvalidInput("read_binary: bad magic");
  NoisePath p;
  p.d = static_cast<int>(get<std::uint32_t>(in));
  (void)get<std::uint32_t>(in);
  p.seed = get<std::uint64_t>(in);
  p.path_index = get<std::uint64_t>(in);
  auto n_times = get<std::uint64_t>(in);
  if (p.d < 1 || n_times < 2 || n_times > (1ull << 32))
    throw InvalidInput("read_binary: implausible header");
  std::vector<double> ts(n_times);
  for (auto& t : ts) t = get<double>(in);
  p.grid = TimeGrid::make(std::move(ts));
  p.increments.resize(static_cast<Eigen::Index>(n_times - 1), p.d);
  for (Eigen::Index i = 0; i < p.increments.rows(); ++i)
    for (int j = 0; j < p.d; ++j) p.increments(i, j) = get<double>(in);
  return p;
}

}  // namespace tameflow::noise
