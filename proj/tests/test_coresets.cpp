#include <doctest.h>

#include <cmath>
#include <random>

#include "kdtopo/coresets.hpp"
#include "kdtopo/error.hpp"

using namespace kdtopo;

namespace {

PointCloud uniform_square(std::size_t n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<double> c(2 * n);
  for (double& x : c) x = u(rng);
  return PointCloud(2, std::move(c));
}

}  // namespace

TEST_CASE("sample size formula") {
  CoresetSpec s;
  s.eps = 0.1;
  s.delta = 0.1;
  s.constant_c = 0.5;
  CHECK(s.sample_size(2) == 216);
  s.eps = 0.9;
  s.delta = 0.9;
  s.constant_c = 1e-6;
  CHECK(s.sample_size(1) == 1);
  s.eps = 0.0;
  CHECK_THROWS_AS(s.validate(), ValidationError);
  s.eps = 0.5;
  s.delta = 1.0;
  CHECK_THROWS_AS(s.validate(), ValidationError);
  s.delta = 0.5;
  s.constant_c = 0.0;
  CHECK_THROWS_AS(s.validate(), ValidationError);
}

TEST_CASE("sampling is deterministic and uniform-weighted") {
  const PointCloud P = uniform_square(500, 1);
  CoresetSpec s;
  s.seed = 42;
  const PointCloud a = random_eps_sample(P, s), b = random_eps_sample(P, s);
  CHECK(a.size() == s.sample_size(2));
  CHECK(a.points().coords() == b.points().coords());
  CHECK(a.uniform());
  for (double w : a.weights()) CHECK(w == doctest::Approx(1.0 / a.size()));
  s.seed = 43;
  CHECK(random_eps_sample(P, s).points().coords() != a.points().coords());
}

TEST_CASE("weighted sampling follows the weights") {
  const PointCloud P(1, {0.0, 1.0}, {0.9, 0.1});
  const PointCloud Q = random_sample(P, 20000, 7);
  std::size_t ones = 0;
  for (std::size_t i = 0; i < Q.size(); ++i) ones += Q.point(i)[0] == 1.0;
  CHECK(static_cast<double>(ones) / Q.size() == doctest::Approx(0.1).epsilon(0.05));
}

TEST_CASE("trivial sup kde errors") {
  const KernelSpec k = KernelSpec::gaussian(0.2);
  const PointCloud single(2, {0.3, 0.3, 0.3, 0.3, 0.3, 0.3});
  const PointSet probes = padded_probe_grid(single, 1.0, 11);
  CHECK(probes.size() == 121);
  const PointCloud Q = random_sample(single, 5, 1);
  CHECK(sup_kde_error(k, single, Q, probes) <= 1e-15 * k.self_value());
  const PointCloud P = uniform_square(50, 2);
  CHECK(sup_kde_error(k, P, P, padded_probe_grid(P, 0.5, 9)) == 0.0);
  const auto t = kdist_error_transfer(k, P, P, padded_probe_grid(P, 0.5, 9));
  CHECK(t.squared == 0.0);
  CHECK(t.plain == 0.0);
  // duplicated points: dropping one copy leaves the measure unchanged
  const PointCloud D(1, {0.0, 0.0, 1.0, 1.0}), E(1, {0.0, 1.0});
  CHECK(sup_kde_error(k, D, E, padded_probe_grid(D, 1.0, 50)) < 1e-17);
  CHECK_THROWS_AS(sup_kde_error(k, P, P, PointSet()), ValidationError);
}

TEST_CASE("kdist error transfer bounds on random instances") {
  std::mt19937_64 rng(5);
  for (int t = 0; t < 30; ++t) {
    const KernelSpec k = KernelSpec::gaussian(0.05 + 0.3 * (t % 4));
    const PointCloud P = uniform_square(300, 100 + t);
    const PointCloud Q = random_sample(P, 40 + 5 * t, 200 + t);
    const PointSet probes = padded_probe_grid(P, 3.0 * k.sigma(), 25);
    const double e = sup_kde_error(k, P, Q, probes);
    const auto tr = kdist_error_transfer(k, P, Q, probes);
    CHECK(tr.squared <= 4.0 * e + 1e-10);
    // a measured kde error e is an (e'^2/4)-sample with e' = 2 sqrt(e)
    CHECK(tr.plain <= 2.0 * std::sqrt(e) + 1e-10);
  }
}

TEST_CASE("216-point samples meet eps = 0.1 K(x,x) in at least 90% of trials") {
  const KernelSpec k = KernelSpec::gaussian(0.1);
  const PointCloud P = uniform_square(2000, 2024);
  CoresetSpec s;
  const PointSet probes = padded_probe_grid(P, k.truncation_radius(1e-6 * k.self_value()), 31);
  int ok = 0;
  const int trials = 100;
  for (int t = 0; t < trials; ++t) {
    s.seed = static_cast<std::uint64_t>(t);
    const PointCloud Q = random_eps_sample(P, s);
    REQUIRE(Q.size() == 216);
    ok += sup_kde_error(k, P, Q, probes) <= 0.1 * k.self_value();
  }
  CHECK(ok >= 90);
}
