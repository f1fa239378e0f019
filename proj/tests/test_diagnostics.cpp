#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>

#include <json.hpp>

#include "kdtopo/coresets.hpp"
#include "kdtopo/diagnostics.hpp"
#include "kdtopo/error.hpp"
#include "oracles.hpp"

using namespace kdtopo;

namespace {

constexpr double kEll = 5.8392027599930895;              // 18/e^3 + 8/e + 2
constexpr double kDiracSigma100 = 0.99998750013020736;   // sqrt(2 sigma^2 (1 - e^{-1/(2 sigma^2)}))

PointCloud noisy_circle(std::size_t n, double noise, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(0.0, 2.0 * std::numbers::pi);
  std::normal_distribution<double> g(0.0, noise);
  std::vector<double> c;
  for (std::size_t i = 0; i < n; ++i) {
    const double t = u(rng);
    c.push_back(0.5 + 0.25 * std::cos(t) + g(rng));
    c.push_back(0.5 + 0.25 * std::sin(t) + g(rng));
  }
  return PointCloud(2, std::move(c));
}

}  // namespace

TEST_CASE("spatial Lipschitz probe") {
  const PointCloud P = noisy_circle(300, 0.01, 1);
  const auto r = check_lipschitz_x(KernelSpec::gaussian(0.05), P, 10000, 2);
  CHECK(r.pass);
  CHECK(r.trials == 10000);
  CHECK(r.max_violation <= 1e-10);
  const auto lap = check_lipschitz_x(KernelSpec(KernelFamily::laplace, 0.1), P, 2000, 3);
  CHECK(lap.pass);
}

TEST_CASE("semiconcavity second derivative matches the Dirac closed form") {
  // For a Dirac, T = 2 sigma^2 (1 - exp(-r^2 / 2 sigma^2)) - |x|^2 has radial
  // second derivative 2 exp(-r^2/2sigma^2)(1 - r^2/sigma^2) - 2 and tangential
  // second derivative 2 exp(-r^2/2sigma^2) - 2.
  const double sigma = 0.3;
  const KernelSpec k = KernelSpec::gaussian(sigma);
  const PointCloud P = PointCloud::dirac(Point{0.0, 0.0});
  for (double rr : {0.5, 1.0, std::sqrt(3.0), 2.5}) {
    const double r = rr * sigma;
    const Point x{r, 0.0};
    const double e = std::exp(-rr * rr / 2.0);
    const double radial = semiconcavity_second_derivative(k, P, x, Point{-1.0, 0.0}, 1e-3 * sigma);
    const double tangential = semiconcavity_second_derivative(k, P, x, Point{0.0, 1.0}, 1e-3 * sigma);
    CHECK(radial == doctest::Approx(2.0 * e * (1.0 - rr * rr) - 2.0).epsilon(1e-6));
    CHECK(tangential == doctest::Approx(2.0 * e - 2.0).epsilon(1e-6));
  }
  CHECK_THROWS_AS(semiconcavity_second_derivative(k, P, Point{0, 0}, Point{1, 0}, 0.0),
                  ValidationError);
}

TEST_CASE("semiconcavity probe passes on random instances") {
  const PointCloud P = noisy_circle(200, 0.01, 3);
  const auto r = check_semiconcavity(KernelSpec::gaussian(0.05), P, 1000, 0.0, 4);
  CHECK(r.pass);
  CHECK(r.max_violation <= 1e-6);
  CHECK(r.extra.at("h") == doctest::Approx(5e-5));
}

TEST_CASE("properness") {
  const KernelSpec k = KernelSpec::gaussian(1.0);
  CHECK(KernelDistanceField(k, PointCloud::dirac(Point{0.0, 0.0})).c_mu() ==
        doctest::Approx(std::sqrt(2.0)));
  const PointCloud P = noisy_circle(100, 0.01, 5);
  const auto r = check_properness(KernelSpec::gaussian(0.05), P, 64, 6);
  CHECK(r.pass);
  CHECK(r.extra.at("max_relative_gap") < 1e-8);
}

TEST_CASE("bandwidth Lipschitz constant and h-max peaks") {
  CHECK(std::abs(sigma_lipschitz_constant() - kEll) < 1e-14);
  for (double s : {0.05, 0.5, 2.0}) {
    const HMaxPeaks h = h_max_peaks(s);
    CHECK(h.d1_max == doctest::Approx(2.0 / (std::exp(1.0) * s)).epsilon(1e-10));
    CHECK(h.d1_argmax == doctest::Approx(std::sqrt(2.0) * s).epsilon(1e-6));
    // second derivative in sigma: (t^2 - 3t) e^{-t/2} / s^2 with t = z^2/s^2,
    // maximized at t = 6
    CHECK(h.d2_max == doctest::Approx(18.0 * std::exp(-3.0) / (s * s)).epsilon(1e-10));
    CHECK(h.d2_argmax == doctest::Approx(std::sqrt(6.0) * s).epsilon(1e-6));
  }
  const PointCloud two(2, {0.0, 0.0, 1.0, 0.0});
  std::vector<double> sig;
  for (int i = 0; i <= 400; ++i) sig.push_back(0.01 + i * (1.0 - 0.01) / 400);
  const PointSet probes(2, {0.5, 0.0, 0.0, 0.3, 2.0, 1.0, -0.5, -0.5});
  const auto r = check_sigma_lipschitz(two, probes, sig);
  CHECK(r.pass);
  CHECK(r.extra.at("max_ratio") <= kEll);
  const auto same = check_sigma_lipschitz(two, probes, {0.3, 0.3});
  CHECK(same.trials == 0);
  CHECK(same.pass);
}

TEST_CASE("K4 probe") {
  const KernelSpec k = KernelSpec::gaussian(0.1);
  const PointCloud P = noisy_circle(200, 0.02, 7);
  const PointCloud Q = random_sample(P, 50, 8);
  const auto r = check_k4(k, P, Q, padded_probe_grid(P, 0.3, 40));
  CHECK(r.pass);
  CHECK(r.extra.at("kernel_distance") == doctest::Approx(kernel_distance(k, P, Q)));
}

TEST_CASE("distance to a measure") {
  const PointCloud two(1, {0.0, 1.0});
  CHECK(dtm(two, 1.0, Point{0.0}) == doctest::Approx(0.70710678118654752));
  const PointCloud P = noisy_circle(50, 0.05, 9);
  CHECK(dtm(P, 1.0 / 50.0, P.point(3)) == 0.0);
  std::mt19937_64 rng(10);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (std::size_t kk = 1; kk <= 50; kk += 7) {
    const Point x{u(rng), u(rng)};
    const double m0 = static_cast<double>(kk) / 50.0;
    CHECK(dtm(P, m0, x) == doctest::Approx(oracle::knn_rms(P, kk, x)).epsilon(1e-12));
  }
  // fractional mass: half the weight of the second neighbour
  const PointCloud line(1, {0.0, 1.0, 3.0, 6.0});
  CHECK(dtm(line, 0.375, Point{0.0}) == doctest::Approx(std::sqrt(0.5 / 1.5)));
  CHECK_THROWS_AS(dtm(two, 0.0, Point{0.0}), ValidationError);
  CHECK_THROWS_AS(dtm(two, 1.5, Point{0.0}), ValidationError);
  CHECK_THROWS_AS(dtm(PointCloud(1, {0.0, 1.0}, {0.3, 0.7}), 0.5, Point{0.0}), ValidationError);
}

TEST_CASE("distance to a measure is not Lipschitz in the mass") {
  // P = {0, D}, x = 0: for m0 > 1/2 the mass past 1/2 sits at distance D, so
  // d^2 = D^2 (m0 - 1/2) / m0 and the one-sided slope of d at 1/2 is unbounded.
  const double D = 2.0;
  const PointCloud P(1, {0.0, D});
  CHECK(dtm(P, 0.5, Point{0.0}) == 0.0);
  for (double t : {1e-4, 1e-6, 1e-8}) {
    const double slope = dtm(P, 0.5 + t, Point{0.0}) / t;
    CHECK(slope > 2.0 * D);
    CHECK(dtm(P, 0.5 + t, Point{0.0}) == doctest::Approx(D * std::sqrt(t / (0.5 + t))));
  }
}

TEST_CASE("mean gap and W2 to a Dirac") {
  const PointCloud P(2, {0, 0, 1, 0, 0, 2});
  CHECK(mean_gap(P, P) == 0.0);
  CHECK(mean_gap(PointCloud::dirac(Point{0, 0}), PointCloud::dirac(Point{1, 0})) == 1.0);
  const PointCloud T(2, {0.3, -0.4, 1.3, -0.4, 0.3, 1.6});
  CHECK(mean_gap(P, T) == doctest::Approx(0.5));
  CHECK(w2_to_dirac(P, Point{0, 0}) == doctest::Approx(std::sqrt(5.0 / 3.0)));
  const KernelSpec k = KernelSpec::gaussian(100.0);
  CHECK(std::abs(dirac_kernel_distance(k, Point{0, 0}, Point{1, 0}) - kDiracSigma100) < 1e-14);
  CHECK(kernel_distance(k, P, P) == 0.0);
}

TEST_CASE("kernel distance to a Dirac is at most W2") {
  const PointCloud P = noisy_circle(60, 0.05, 11);
  const auto r = check_dk_w2_dirac(P, {0.01, 0.05, 0.2, 1.0, 10.0, 1000.0}, 1000, 12);
  CHECK(r.pass);
  CHECK(r.trials == 6000);
}

TEST_CASE("mean gap rate under translation") {
  const PointCloud P = noisy_circle(40, 0.05, 13);
  std::vector<double> c = P.points().coords();
  for (std::size_t i = 0; i < c.size(); i += 2) c[i] += 0.3;
  const PointCloud Q(2, c);
  const MeanGapRate m = check_mean_gap_rate(P, Q);
  CHECK(m.mean_gap == doctest::Approx(0.3));
  CHECK(m.constant > 0.0);
  CHECK(m.gap_at_100diam <= 1e-3 * m.mean_gap);
  INFO("worst ratio " << m.worst_ratio << " fit " << m.fitted_leading << " C " << m.constant << " gap100 " << m.gap_at_100diam);
  CHECK(m.pass);
  CHECK_THROWS_AS(check_mean_gap_rate(P, Q, 10.0, 1.0), ValidationError);
}

TEST_CASE("monotonicity regime constants") {
  CHECK(monotonicity_delta_g(4.0) == doctest::Approx(std::sqrt(12.0)));
  const auto reg = monotonicity_regime(1.0, 0.025);
  CHECK(reg.G == doctest::Approx(0.0125 * 0.0125));
  CHECK(reg.delta_g == doctest::Approx(std::sqrt(12.0 + 3.0 * std::log(4.0 / reg.G))));
  CHECK(reg.sigma_max == doctest::Approx(1.0 / (6.0 * reg.delta_g)));
  CHECK(reg.valid);
  CHECK_FALSE(monotonicity_regime(1.0, 0.2).valid);
}

TEST_CASE("monotonicity probe") {
  const double sigma = 0.025;
  const KernelSpec k = KernelSpec::gaussian(sigma);
  std::mt19937_64 rng(14);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<double> c;
  for (int i = 0; i < 5000; ++i) {
    const double r = std::sqrt(u(rng)), a = 2.0 * std::numbers::pi * u(rng);
    c.push_back(r * std::cos(a));
    c.push_back(r * std::sin(a));
  }
  const PointCloud P(2, c);
  const Point center{0.0, 0.0};
  const auto r = monotonicity_probe(k, P, center, 1.0, Point{1.015, 0.0}, 0.0007, 50);
  CHECK(r.status == "ok");
  CHECK(r.trials > 0);
  CHECK(r.pass);
  const auto far = monotonicity_probe(k, P, center, 1.0, Point{1.2, 0.0}, 0.0007, 10);
  CHECK(far.status == "not-applicable");
  const auto wide = monotonicity_probe(KernelSpec::gaussian(0.2), P, center, 1.0,
                                       Point{1.1, 0.0}, 0.001, 10);
  CHECK(wide.status == "not-applicable");
  CHECK_FALSE(wide.pass);
}

TEST_CASE("probe report JSON line") {
  ProbeReport r;
  r.property = "x";
  r.tolerance = 1.0;
  r.record(0.5, "here");
  r.record(0.25, "there");
  r.finish();
  const auto j = nlohmann::json::parse(r.to_json_line());
  CHECK(j["property"] == "x");
  CHECK(j["trials"] == 2);
  CHECK(j["max_violation"] == 0.5);
  CHECK(j["pass"] == true);
  CHECK(j["witness"] == "here");
}
