#include <doctest.h>

#include <cmath>
#include <random>

#include "generators.hpp"
#include "oracles.hpp"
#include "syntaxlens/causal.hpp"
#include "syntaxlens/error.hpp"

using namespace syntaxlens;

namespace {

template <typename Fn>
ErrorCode code_of(Fn&& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("expected an Error");
  return ErrorCode::Io;
}

std::vector<CausalSample> scm(std::size_t n, std::uint64_t seed, double effect, double noise = 1.0) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> z(0.0, 1.0);
  std::vector<CausalSample> out;
  for (std::size_t i = 0; i < n; ++i) {
    const double z1 = z(rng), z2 = z(rng), z3 = z(rng), z4 = z(rng);
    const double t = 0.8 * z1 - 0.5 * z2 + z(rng);
    CausalSample s;
    s.treatment = t;
    s.outcome = effect * t + 3.0 * z1 + 0.5 * z2 + 0.2 * z3 + noise * z(rng);
    s.confounders = {z1, z2, z3, z4};
    out.push_back(s);
  }
  return out;
}

}  // namespace

TEST_CASE("pearson") {
  const std::vector<double> x{1, 2, 3, 4, 5};
  const std::vector<double> y{2, 1, 4, 3, 5};
  CHECK(pearson(x, y) == doctest::Approx(0.8));
  const std::vector<double> y2{1, 3, 2, 5, 4};
  CHECK(pearson(x, y2) == doctest::Approx(oracle::pearson(x, y2)).epsilon(1e-12));
  CHECK(pearson(x, x) == doctest::Approx(1.0));
  CHECK(code_of([] { pearson(std::vector<double>{1, 2}, std::vector<double>{1, 2}); }) ==
        ErrorCode::InsufficientSamples);
  CHECK(code_of([] { pearson(std::vector<double>{1, 2, 3}, std::vector<double>{1, 2}); }) ==
        ErrorCode::LengthMismatch);
  CHECK(code_of([] { pearson(std::vector<double>{1, 1, 1}, std::vector<double>{1, 2, 3}); }) ==
        ErrorCode::DegenerateVariance);
}

TEST_CASE("pearson matches the textbook formula") {
  std::mt19937_64 rng(12);
  std::normal_distribution<double> z;
  for (int trial = 0; trial < 20; ++trial) {
    std::vector<double> a(50), b(50);
    for (std::size_t i = 0; i < a.size(); ++i) {
      a[i] = z(rng);
      b[i] = 0.3 * a[i] + z(rng);
    }
    const double r = pearson(a, b);
    CHECK(r == doctest::Approx(oracle::pearson(a, b)).epsilon(1e-10));
    CHECK(std::abs(r) <= 1.0);
  }
}

TEST_CASE("OLS agrees with the normal equations") {
  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    const auto samples = scm(200, seed, -1.5);
    std::vector<std::vector<double>> x;
    std::vector<double> y;
    for (const auto& s : samples) {
      x.push_back({1.0, *s.treatment, s.confounders[0], s.confounders[1], s.confounders[2], s.confounders[3]});
      y.push_back(s.outcome);
    }
    const auto beta = oracle::ols_normal_equations(x, y);
    const auto r = ate_linear(samples);
    CHECK(r.ate == doctest::Approx(beta[1]).epsilon(1e-9));
    CHECK(r.n == 200);
    CHECK(r.stderr_ > 0.0);
    // standardizing confounders leaves the treatment coefficient unchanged
    AteOptions std_opts;
    std_opts.standardize_confounders = true;
    CHECK(ate_linear(samples, std_opts).ate == doctest::Approx(r.ate).epsilon(1e-9));
  }
}

TEST_CASE("standard error matches sigma^2 (X'X)^-1") {
  const auto samples = scm(100, 5, 1.0);
  std::vector<std::vector<double>> x;
  std::vector<double> y;
  for (const auto& s : samples) {
    x.push_back({1.0, *s.treatment, s.confounders[0], s.confounders[1], s.confounders[2], s.confounders[3]});
    y.push_back(s.outcome);
  }
  const auto beta = oracle::ols_normal_equations(x, y);
  double rss = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    double fit = 0.0;
    for (std::size_t j = 0; j < beta.size(); ++j) fit += x[i][j] * beta[j];
    rss += (y[i] - fit) * (y[i] - fit);
  }
  const double sigma2 = rss / static_cast<double>(x.size() - beta.size());
  // The treatment entry of (X'X)^-1 is 1 / RSS of T regressed on the other columns.
  std::vector<std::vector<double>> others;
  std::vector<double> t;
  for (const auto& row : x) {
    others.push_back({row[0], row[2], row[3], row[4], row[5]});
    t.push_back(row[1]);
  }
  const auto g = oracle::ols_normal_equations(others, t);
  double t_rss = 0.0;
  for (std::size_t i = 0; i < others.size(); ++i) {
    double fit = 0.0;
    for (std::size_t j = 0; j < g.size(); ++j) fit += others[i][j] * g[j];
    t_rss += (t[i] - fit) * (t[i] - fit);
  }
  CHECK(ate_linear(samples).stderr_ == doctest::Approx(std::sqrt(sigma2 / t_rss)).epsilon(1e-8));
}

TEST_CASE("ATE preconditions") {
  auto few = scm(9, 1, 1.0);
  CHECK(code_of([&] { ate_linear(few); }) == ErrorCode::InsufficientSamples);

  auto collinear = scm(50, 2, 1.0);
  for (auto& s : collinear) s.confounders[3] = 2.0 * s.confounders[0] + 1.0;
  CHECK(code_of([&] { ate_linear(collinear); }) == ErrorCode::RankDeficient);

  auto constant = scm(50, 3, 1.0);
  for (auto& s : constant) s.confounders[2] = 7.0;
  CHECK(code_of([&] { ate_linear(constant); }) == ErrorCode::RankDeficient);
  AteOptions drop;
  drop.drop_constant_confounders = true;
  const auto r = ate_linear(constant, drop);
  CHECK(r.dropped_confounders == std::vector<std::string>{"node_count"});

  auto with_nulls = scm(40, 4, 1.0);
  for (std::size_t i = 0; i < with_nulls.size(); i += 2) with_nulls[i].treatment.reset();
  CHECK(ate_linear(with_nulls).n == 20);
}

TEST_CASE("placebo refutation") {
  const auto samples = scm(2000, 9, 2.0);
  const auto a = placebo_refute(samples, 1, 20);
  const auto b = placebo_refute(samples, 1, 20);
  CHECK(a.placebo_ate == b.placebo_ate);
  CHECK(a.placebo_ate < 0.05);
  CHECK(a.placebo_pass);
  const auto ates = placebo_ates(samples, 1, 20);
  CHECK(ates.size() == 20);
  double mean_abs = 0.0;
  for (double v : ates) mean_abs += std::abs(v);
  CHECK(a.placebo_ate == doctest::Approx(mean_abs / 20));
}

TEST_CASE("default treatments and seeds") {
  const auto& t = default_causal_treatments();
  CHECK(t.size() == 14);
  CHECK(std::find(t.begin(), t.end(), "identifier") != t.end());
  CHECK(derive_seed(1, "a") != derive_seed(1, "b"));
  CHECK(derive_seed(1, "a") == derive_seed(1, "a"));
}
