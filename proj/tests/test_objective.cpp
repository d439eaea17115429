#include <doctest.h>

#include <algorithm>
#include <random>

#include "oracles.hpp"
#include "refcast/error.hpp"
#include "refcast/objective.hpp"

using namespace refcast;

namespace {

ModelSpec spec_for(Variant v, double lambda, std::vector<double> s, double mu_bar, double sigma2 = 1.0) {
  ModelSpec m;
  m.transform = v.transform;
  m.penalty = v.penalty;
  m.lambda = lambda;
  m.priors = std::move(s);
  m.mu_bar = mu_bar;
  m.sigma2 = sigma2;
  return m;
}

int transform_code(Transform t) { return t == Transform::Identity ? 0 : (t == Transform::Log ? 1 : 2); }

std::vector<double> random_simplex(std::mt19937_64 &rng, std::size_t k) {
  std::gamma_distribution<double> g(1.0, 1.0);
  std::vector<double> s(k);
  double sum = 0.0;
  for (double &x : s) {
    x = g(rng) + 0.02;
    sum += x;
  }
  for (double &x : s) x /= sum;
  return s;
}

} // namespace

TEST_CASE("softmax") {
  auto w = softmax(std::vector<double>{0, 0, 0});
  for (double x : w) CHECK(x == doctest::Approx(1.0 / 3.0).epsilon(1e-15));
  w = softmax(std::vector<double>{std::log(2.0), 0.0});
  CHECK(w[0] == doctest::Approx(2.0 / 3.0).epsilon(1e-14));
  CHECK(w[1] == doctest::Approx(1.0 / 3.0).epsilon(1e-14));
  w = softmax(std::vector<double>{1000.0, 0.0});
  CHECK(std::isfinite(w[0]));
  CHECK(w[0] == doctest::Approx(1.0));
  CHECK(w[1] >= 0.0);
  CHECK(w[1] < 1e-300);
  std::mt19937_64 rng(1);
  std::normal_distribution<double> n(0, 5);
  for (int r = 0; r < 50; ++r) {
    std::vector<double> z(7);
    for (double &x : z) x = n(rng);
    auto a = softmax(z);
    double sum = 0.0;
    for (double x : a) sum += x;
    CHECK(std::abs(sum - 1.0) < 1e-12);
    for (double &x : z) x += 3.7;
    auto b = softmax(z);
    for (std::size_t i = 0; i < a.size(); ++i) CHECK(a[i] == doctest::Approx(b[i]).epsilon(1e-12));
  }
}

TEST_CASE("variance_core") {
  CHECK(variance_core(std::vector<double>{0.5, 0.5}, std::vector<double>{1.0, -2.0}, 0.0) == 1.25);
  CHECK(variance_core(std::vector<double>{0.3, 0.7}, std::vector<double>{4.0, 4.0}, 4.0) == 0.0);
  CHECK(variance_core(std::vector<double>{1.0 - 1e-12, 1e-12}, std::vector<double>{3.0, 1.0}, 0.0) ==
        doctest::Approx(9.0));
}

TEST_CASE("penalty") {
  const auto l2 = spec_for({Transform::Identity, Penalty::L2}, 1.0, {0.3, 0.7}, 0.0);
  CHECK(penalty(std::vector<double>{0.3, 0.7}, l2) == 0.0);
  const auto ent = spec_for({Transform::Identity, Penalty::Entropy}, 1.0, {0.5, 0.5}, 0.0);
  CHECK(penalty(std::vector<double>{0.5, 0.5}, ent) == doctest::Approx(0.693147180559945));
  const auto anti = spec_for({Transform::Identity, Penalty::L2}, 1.0, {1.0 - 1e-6, 1e-6}, 0.0);
  CHECK(penalty(std::vector<double>{0.0, 1.0}, anti) == doctest::Approx(2.0).epsilon(1e-5));
  CHECK_THROWS_AS(penalty(std::vector<double>{0.0, 1.0}, ent), DomainError);
}

TEST_CASE("objective examples") {
  const std::vector<double> w{0.5, 0.5};
  const std::vector<double> mu{1.0, 2.0}; // mu_bar 0: d2 = (1, 4)
  auto p = objective(w, mu, spec_for({Transform::Identity, Penalty::L2}, 10.0, {0.5, 0.5}, 0.0));
  CHECK(p.total == 1.25);
  CHECK(p.penalty_term == 0.0);
  p = objective(w, mu, spec_for({Transform::ShiftedLog, Penalty::L2}, 10.0, {0.5, 0.5}, 0.0, 1.0));
  CHECK(p.total == doctest::Approx(std::log(2.25)));
  CHECK(p.total == doctest::Approx(0.81093).epsilon(1e-5));
  CHECK(p.penalty_term == 0.0);
  for (auto v : all_variants()) {
    p = objective(w, mu, spec_for(v, 0.0, {0.2, 0.8}, 0.0));
    CHECK(p.total == p.variance_term);
    CHECK(p.penalty_term == 0.0);
    CHECK(p.variance_raw == 1.25);
  }
}

TEST_CASE("objective validation") {
  const std::vector<double> w{0.5, 0.5}, mu{1.0, 2.0};
  CHECK_THROWS_AS(objective(w, mu, spec_for({Transform::ShiftedLog, Penalty::L2}, 1.0, {0.5, 0.5}, 0.0, 0.0)),
                  DomainError);
  CHECK_THROWS_AS(objective(w, mu, spec_for({Transform::Identity, Penalty::L2}, -1.0, {0.5, 0.5}, 0.0)),
                  DomainError);
  CHECK_THROWS_AS(objective(w, mu, spec_for({Transform::Identity, Penalty::L2}, 1.0, {0.6, 0.6}, 0.0)),
                  DomainError);
  CHECK_THROWS_AS(objective(w, mu, spec_for({Transform::Identity, Penalty::L2}, 1.0, {1.0, 0.0}, 0.0)),
                  DomainError);
}

TEST_CASE("deviation floor keeps log finite at exact consensus") {
  const std::vector<double> mu{3.0, 3.0};
  const auto p = objective(std::vector<double>{0.5, 0.5}, mu, spec_for({Transform::Log, Penalty::L2}, 0.0, {0.5, 0.5}, 3.0));
  CHECK(std::isfinite(p.total));
  CHECK(p.variance_raw == doctest::Approx(0.5 * 1e-12 * 10.0));
}

TEST_CASE("objective matches the direct oracle and is permutation invariant") {
  std::mt19937_64 rng(11);
  std::normal_distribution<double> n(0, 2);
  for (auto v : all_variants()) {
    for (int r = 0; r < 20; ++r) {
      const std::size_t k = 5;
      std::vector<double> mu(k), z(k);
      for (auto &x : mu) x = n(rng);
      for (auto &x : z) x = n(rng) * 0.5;
      const auto s = random_simplex(rng, k);
      const double lambda = std::exp(n(rng));
      const auto spec = spec_for(v, lambda, s, 0.3, 0.7);
      const auto w = softmax(z);
      const double got = objective(w, mu, spec).total;
      CHECK(got == doctest::Approx(oracle::objective(w, mu, transform_code(v.transform),
                                                     v.penalty == Penalty::Entropy, lambda, s, 0.3, 0.7))
                       .epsilon(1e-12));
      std::vector<std::size_t> perm{3, 0, 4, 1, 2};
      std::vector<double> mu2(k), w2(k), s2(k);
      for (std::size_t i = 0; i < k; ++i) {
        mu2[i] = mu[perm[i]];
        w2[i] = w[perm[i]];
        s2[i] = s[perm[i]];
      }
      CHECK(objective(w2, mu2, spec_for(v, lambda, s2, 0.3, 0.7)).total == doctest::Approx(got).epsilon(1e-12));
    }
  }
}

TEST_CASE("gradient_z matches finite differences") {
  std::mt19937_64 rng(5);
  std::normal_distribution<double> n(0, 1);
  for (auto v : all_variants()) {
    for (std::size_t k : {2u, 5u, 17u}) {
      for (int r = 0; r < 100; ++r) {
        std::vector<double> mu(k), z(k);
        for (auto &x : mu) x = 2.0 * n(rng);
        for (auto &x : z) x = n(rng);
        const auto s = random_simplex(rng, k);
        const auto spec = spec_for(v, std::exp(2.0 * n(rng)), s, 0.5 * n(rng), 0.5);
        const auto g = gradient_z(z, mu, spec);
        const auto fd = oracle::fd_gradient(
            [&](const std::vector<double> &zz) { return objective(softmax(zz), mu, spec).total; }, z);
        double num = 0.0, den = 0.0;
        for (std::size_t i = 0; i < k; ++i) {
          num = std::max(num, std::abs(g[i] - fd[i]));
          den = std::max(den, std::abs(fd[i]));
        }
        CHECK(num <= 1e-5 * std::max(den, 1e-3));
      }
    }
  }
}

TEST_CASE("gradient_z examples") {
  const std::vector<double> mu{1.0, -1.0, 1.0};
  for (auto v : all_variants()) {
    const auto g = gradient_z(std::vector<double>{0, 0, 0}, mu,
                              spec_for(v, 2.0, {1.0 / 3, 1.0 / 3, 1.0 / 3}, 0.0));
    for (double x : g) CHECK(std::abs(x) < 1e-14);
  }
  // lambda = 0, identity, d2 = (1, 4): the descent direction raises w_1.
  const auto g = gradient_z(std::vector<double>{0, 0}, std::vector<double>{1.0, 2.0},
                            spec_for({Transform::Identity, Penalty::L2}, 0.0, {0.5, 0.5}, 0.0));
  CHECK(g[0] < 0.0);
  CHECK(g[1] > 0.0);
  const auto fd = oracle::fd_gradient(
      [&](const std::vector<double> &zz) {
        return objective(softmax(zz), std::vector<double>{1.0, 2.0},
                         spec_for({Transform::Identity, Penalty::L2}, 0.0, {0.5, 0.5}, 0.0))
            .total;
      },
      {0.0, 0.0});
  CHECK(g[0] == doctest::Approx(fd[0]).epsilon(1e-6));
}

TEST_CASE("variant names round trip") {
  for (auto v : all_variants()) CHECK(parse_variant(variant_name(v)) == v);
  CHECK_THROWS_AS(parse_variant("cubic-l1"), InputError);
}
