#include <doctest.h>

#include <atomic>
#include <cmath>
#include <random>
#include <sstream>
#include <vector>

#include "tameflow/errors.hpp"
#include "tameflow/expr.hpp"
#include "tameflow/linalg.hpp"
#include "tameflow/noise.hpp"
#include "tameflow/util.hpp"

using namespace tameflow;

TEST_CASE("mean_se matches hand computation") {
  const std::vector<double> xs = {1.0, 2.0, 3.0, 4.0};
  const auto ms = mean_se(xs);
  CHECK(ms.mean == doctest::Approx(2.5));
  // sample sd = sqrt(5/3), se = sd / 2
  CHECK(ms.se == doctest::Approx(std::sqrt(5.0 / 3.0) / 2.0));
  CHECK(ms.n == 4);
}

TEST_CASE("fit_slope recovers an exact line") {
  std::vector<double> x, y;
  for (int i = 1; i <= 6; ++i) {
    x.push_back(std::log(i));
    y.push_back(2.5 * std::log(i) - 1.0);
  }
  CHECK(fit_slope(x, y) == doctest::Approx(2.5).epsilon(1e-12));
}

TEST_CASE("parallel_for covers every index exactly once") {
  const std::size_t n = 1000;
  std::vector<std::atomic<int>> hits(n);
  for (auto& h : hits) h = 0;
  parallel_for(n, 4, [&](std::size_t lo, std::size_t hi) {
    for (std::size_t i = lo; i < hi; ++i) hits[i]++;
  });
  for (std::size_t i = 0; i < n; ++i) CHECK(hits[i] == 1);
}

TEST_CASE("halton points are deterministic and inside the unit cube") {
  for (std::size_t i = 0; i < 100; ++i) {
    const Vec a = halton_point(i, 3);
    const Vec b = halton_point(i, 3);
    REQUIRE(a.size() == 3);
    CHECK((a - b).norm() == 0.0);
    for (int c = 0; c < 3; ++c) {
      CHECK(a[c] >= 0.0);
      CHECK(a[c] < 1.0);
    }
  }
  // base-2 van der Corput opening values, zero point skipped
  CHECK(halton_point(0, 1)[0] == doctest::Approx(0.5));
  CHECK(halton_point(1, 1)[0] == doctest::Approx(0.25));
  CHECK(halton_point(2, 1)[0] == doctest::Approx(0.75));
  CHECK(halton_point(3, 1)[0] == doctest::Approx(0.125));
}

TEST_CASE("fnv1a matches the published offset basis and test vector") {
  Fnv1a empty;
  CHECK(empty.hex() == "cbf29ce484222325");
  Fnv1a a;
  a.update("a", 1);
  CHECK(a.hex() == "af63dc4c8601ec8c");
}

TEST_CASE("format_double round-trips exactly") {
  for (double v : {0.1, 1.0 / 3.0, 12345.6789, -2e-7, 0.0}) {
    const std::string text = format_double(v);
    CHECK(std::stod(text) == v);
  }
}

namespace {

Mat random_matrix(std::mt19937_64& rng, int rows, int cols, int rank) {
  std::normal_distribution<double> normal;
  Mat left(rows, rank), right(rank, cols);
  for (int i = 0; i < rows; ++i) {
    for (int j = 0; j < rank; ++j) left(i, j) = normal(rng);
  }
  for (int i = 0; i < rank; ++i) {
    for (int j = 0; j < cols; ++j) right(i, j) = normal(rng);
  }
  return left * right;
}

}  // namespace

TEST_CASE("project_kernel splits against Ker(A') + Range(A)") {
  std::mt19937_64 rng(7);
  std::normal_distribution<double> normal;
  for (int trial = 0; trial < 200; ++trial) {
    const int rows = 1 + static_cast<int>(rng() % 6);
    const int cols = 1 + static_cast<int>(rng() % 6);
    const int rank = 1 + static_cast<int>(rng() % std::min(rows, cols));
    const Mat A = random_matrix(rng, rows, cols, rank);
    Vec v(rows);
    for (int i = 0; i < rows; ++i) v[i] = normal(rng);

    const auto split = linalg::project_kernel(A, v);
    const double scale = std::max(1.0, v.norm());
    CHECK((split.v_ker + split.v_row - v).norm() / scale < 1e-10);
    // Pythagoras
    CHECK(std::abs(split.v_ker.squaredNorm() + split.v_row.squaredNorm() -
                   v.squaredNorm()) /
              (scale * scale) <
          1e-10);
    // v_ker is orthogonal to Range(A)
    CHECK((A.transpose() * split.v_ker).norm() / scale < 1e-10);
    // v_row reproduces under projection onto Range(A)
    const auto again = linalg::project_kernel(A, split.v_row);
    CHECK(again.v_ker.norm() / scale < 1e-10);
  }
}

TEST_CASE("rank_with_tolerance sees through constructed rank deficiency") {
  std::mt19937_64 rng(11);
  for (int trial = 0; trial < 100; ++trial) {
    const int rows = 2 + static_cast<int>(rng() % 5);
    const int cols = 2 + static_cast<int>(rng() % 5);
    const int rank = 1 + static_cast<int>(rng() % std::min(rows, cols));
    const Mat A = random_matrix(rng, rows, cols, rank);
    CHECK(linalg::rank_with_tolerance(A, 1e-10).rank == rank);
  }
}

TEST_CASE("solve_min_norm_rowspace on the two-stock one-factor example") {
  Mat sigma(2, 1);
  sigma << 1.0, 1.0;

  Vec consistent(2);
  consistent << 0.2, 0.2;
  const Vec theta = linalg::solve_min_norm_rowspace(sigma, consistent);
  REQUIRE(theta.size() == 1);
  CHECK(theta[0] == doctest::Approx(0.2).epsilon(1e-12));

  Vec inconsistent(2);
  inconsistent << 0.1, 0.3;
  CHECK_THROWS_AS(linalg::solve_min_norm_rowspace(sigma, inconsistent),
                  NoSolution);
  try {
    linalg::solve_min_norm_rowspace(sigma, inconsistent);
  } catch (const NoSolution& e) {
    CHECK(e.residual() == doctest::Approx(std::sqrt(0.02)).epsilon(1e-12));
  }
}

TEST_CASE("rowspace selector lands in the row space and vanishes only at zero") {
  Mat sigma(1, 2);
  sigma << 0.2, 0.0;
  const Vec sel = linalg::rowspace_selector(sigma);
  REQUIRE(sel.size() == 2);
  CHECK(sel.norm() == doctest::Approx(0.2).epsilon(1e-12));
  CHECK(sel[1] == doctest::Approx(0.0));

  std::mt19937_64 rng(13);
  for (int trial = 0; trial < 200; ++trial) {
    const int rows = 1 + static_cast<int>(rng() % 4);
    const int cols = 1 + static_cast<int>(rng() % 4);
    const int rank = 1 + static_cast<int>(rng() % std::min(rows, cols));
    const Mat A = random_matrix(rng, rows, cols, rank);
    const Vec v = linalg::rowspace_selector(A);
    REQUIRE(v.size() == cols);
    CHECK(v.norm() > 0.0);
    // membership in Range(A') checked by splitting within the domain of A
    const auto split = linalg::project_kernel(A.transpose(), v);
    CHECK(split.v_ker.norm() < 1e-10 * std::max(1.0, v.norm()));
  }

  const Mat zero = Mat::Zero(3, 2);
  CHECK(linalg::rowspace_selector(zero).norm() == 0.0);
}

TEST_CASE("noise generation is deterministic per identifier tuple") {
  const auto grid = noise::TimeGrid::uniform(0.0, 1.0, 16);
  const auto a = noise::generate(grid, 2, 42, 7);
  const auto b = noise::generate(grid, 2, 42, 7);
  CHECK((a.increments - b.increments).norm() == 0.0);

  const auto other_seed = noise::generate(grid, 2, 43, 7);
  const auto other_path = noise::generate(grid, 2, 42, 8);
  CHECK((a.increments - other_seed.increments).norm() > 0.0);
  CHECK((a.increments - other_path.increments).norm() > 0.0);
}

TEST_CASE("generate_ensemble is independent of the thread count") {
  const auto grid = noise::TimeGrid::uniform(0.0, 1.0, 32);
  const auto lone = noise::generate_ensemble(grid, 3, 99, 64, 1);
  const auto many = noise::generate_ensemble(grid, 3, 99, 64, 4);
  REQUIRE(lone.size() == many.size());
  for (std::size_t k = 0; k < lone.size(); ++k) {
    CHECK((lone[k].increments - many[k].increments).norm() == 0.0);
  }
}

TEST_CASE("raw draws pass basic moment checks") {
  const std::size_t n = 200000;
  double sum = 0.0, sumsq = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double x = noise::normal_draw(5, i, 3, 1);
    sum += x;
    sumsq += x * x;
  }
  const double mean = sum / n;
  const double var = sumsq / n - mean * mean;
  // 4 sigma bands
  CHECK(std::abs(mean) < 4.0 / std::sqrt(static_cast<double>(n)));
  CHECK(std::abs(var - 1.0) < 4.0 * std::sqrt(2.0 / static_cast<double>(n)));
}

TEST_CASE("increment sums scale like Brownian motion") {
  const auto grid = noise::TimeGrid::uniform(0.0, 2.0, 50);
  const std::size_t paths = 4000;
  double sumsq = 0.0;
  for (std::size_t k = 0; k < paths; ++k) {
    const auto w = noise::generate(grid, 1, 17, k);
    sumsq += std::pow(w.increments.col(0).sum(), 2);
  }
  const double var = sumsq / paths;  // should be near T = 2
  CHECK(std::abs(var - 2.0) < 4.0 * 2.0 * std::sqrt(2.0 / paths));
}

TEST_CASE("coarsen sums nested increments exactly") {
  const auto grid = noise::TimeGrid::uniform(0.0, 1.0, 8);
  const auto fine = noise::generate(grid, 2, 3, 0);
  const auto coarse = noise::coarsen(fine, 2);
  REQUIRE(coarse.steps() == 4);
  for (int i = 0; i < 4; ++i) {
    for (int j = 0; j < 2; ++j) {
      CHECK(coarse.increments(i, j) ==
            fine.increments(2 * i, j) + fine.increments(2 * i + 1, j));
    }
  }
}

TEST_CASE("restrict_after keeps the retained increments bit-identical") {
  const auto grid = noise::TimeGrid::uniform(0.0, 1.0, 10);
  const auto w = noise::generate(grid, 1, 23, 5);
  const auto tail = noise::restrict_after(w, 0.3);
  REQUIRE(tail.steps() == 7);
  CHECK(tail.grid->front() == doctest::Approx(0.3));
  for (int i = 0; i < 7; ++i) {
    CHECK(tail.increments(i, 0) == w.increments(i + 3, 0));
  }
}

TEST_CASE("shift relabels the time axis only") {
  const auto grid = noise::TimeGrid::uniform(0.5, 1.5, 10);
  const auto w = noise::generate(grid, 1, 29, 2);
  const auto moved = noise::shift(w, 0.5);
  CHECK(moved.grid->front() == doctest::Approx(0.0));
  CHECK(moved.grid->back() == doctest::Approx(1.0));
  CHECK((moved.increments - w.increments).norm() == 0.0);
}

TEST_CASE("noise binary round trip is exact") {
  const auto grid = noise::TimeGrid::uniform(0.0, 1.0, 12);
  const auto w = noise::generate(grid, 3, 31, 4);
  std::stringstream buffer;
  noise::write_binary(w, buffer);
  const auto back = noise::read_binary(buffer);
  CHECK(back.d == w.d);
  CHECK(back.seed == w.seed);
  CHECK(back.path_index == w.path_index);
  REQUIRE(back.grid->size() == w.grid->size());
  for (std::size_t i = 0; i < w.grid->size(); ++i) {
    CHECK(back.grid->times()[i] == w.grid->times()[i]);
  }
  CHECK((back.increments - w.increments).norm() == 0.0);
}

TEST_CASE("grid find locates members and rejects strangers") {
  const auto grid = noise::TimeGrid::uniform(0.0, 1.0, 4);
  CHECK(grid->find(0.5) == 2);
  CHECK(grid->find(0.51) == -1);
  CHECK(grid->find(1.0) == 4);
}

TEST_CASE("expression grammar: precedence, unary minus, functions") {
  Vec p(2);
  p << 1.0, 100.0;
  const auto eval = [&](const std::string& text) {
    return expr::Expression::parse(text, 1).eval(p, 0.25);
  };
  CHECK(eval("2+3*4") == doctest::Approx(14.0));
  CHECK(eval("(2+3)*4") == doctest::Approx(20.0));
  CHECK(eval("-2*3") == doctest::Approx(-6.0));
  CHECK(eval("2--3") == doctest::Approx(5.0));
  CHECK(eval("10/4/5") == doctest::Approx(0.5));
  CHECK(eval("1-2-3") == doctest::Approx(-4.0));
  CHECK(eval("exp(0)") == doctest::Approx(1.0));
  CHECK(eval("log(exp(2))") == doctest::Approx(2.0));
  CHECK(eval("min(3, t)") == doctest::Approx(0.25));
  CHECK(eval("max(p1, 150)") == doctest::Approx(150.0));
  CHECK(eval("0.15 + 0.10 * p1 / (100 + p1)") == doctest::Approx(0.2));
  CHECK(eval("1e-3 * p0") == doctest::Approx(1e-3));
}

TEST_CASE("expression variable usage flags") {
  const auto constant = expr::Expression::parse("0.2", 2);
  CHECK_FALSE(constant.uses_time());
  CHECK_FALSE(constant.uses_price());

  const auto timed = expr::Expression::parse("0.1 * t", 2);
  CHECK(timed.uses_time());
  CHECK_FALSE(timed.uses_price());

  const auto priced = expr::Expression::parse("p2 / 100", 2);
  CHECK_FALSE(priced.uses_time());
  CHECK(priced.uses_price());
}

TEST_CASE("expression parse errors carry positions and refuse bad input") {
  CHECK_THROWS_AS(expr::Expression::parse("2+", 1), InvalidInput);
  CHECK_THROWS_AS(expr::Expression::parse("p2", 1), InvalidInput);
  CHECK_THROWS_AS(expr::Expression::parse("foo(2)", 1), InvalidInput);
  CHECK_THROWS_AS(expr::Expression::parse("min(1)", 1), InvalidInput);
  CHECK_THROWS_AS(expr::Expression::parse("1 2", 1), InvalidInput);
  CHECK_THROWS_AS(expr::Expression::parse("(1", 1), InvalidInput);
  CHECK_THROWS_AS(expr::Expression::parse("", 1), InvalidInput);
}
