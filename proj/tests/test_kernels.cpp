#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <random>

#include "kdtopo/error.hpp"
#include "kdtopo/kernels.hpp"

using namespace kdtopo;

namespace {

// reference values computed with 50-digit arithmetic
constexpr double kInvE = 0.36787944117144233;
constexpr double kTwoPointKde = 0.56766764161830635;     // (1 + e^-2)/2
constexpr double kDiracSqrt2 = 1.1243847729568003;       // sqrt(2(1 - e^-1))
constexpr double kTwoPointKdist = 0.65751985398289963;   // sqrt(1 - (1+e^-2)/2)
constexpr double kTwoPointNorm = 0.75343721810002613;    // sqrt((1+e^-2)/2)

PointCloud random_cloud(std::size_t n, std::size_t d, std::mt19937_64& rng, bool weighted) {
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  std::vector<double> c(n * d);
  for (double& x : c) x = u(rng);
  if (!weighted) return PointCloud(d, std::move(c));
  std::vector<double> w(n);
  double s = 0.0;
  for (double& x : w) s += (x = 0.1 + std::abs(u(rng)));
  for (double& x : w) x /= s;
  double total = 0.0;
  for (std::size_t i = 0; i + 1 < n; ++i) total += w[i];
  w[n - 1] = 1.0 - total;
  return PointCloud(d, std::move(c), std::move(w));
}

const PointCloud two_points() { return PointCloud(2, {0.0, 0.0, 2.0, 0.0}); }

}  // namespace

TEST_CASE("kernel_eval gaussian values") {
  const Point p{0.3, -0.2};
  CHECK(kernel_eval(KernelSpec::gaussian(1.0), p, p) == doctest::Approx(1.0).epsilon(1e-15));
  CHECK(kernel_eval(KernelSpec::gaussian(2.0), p, p) == doctest::Approx(4.0).epsilon(1e-15));
  const Point a{0.0, 0.0}, b{1.0, 1.0};
  CHECK(std::abs(kernel_eval(KernelSpec::gaussian(1.0), a, b) - kInvE) < 1e-15);
  CHECK_THROWS_AS(kernel_eval(KernelSpec::gaussian(1.0), a, Point{1.0}), DimensionMismatch);
}

TEST_CASE("kernel families and self values") {
  const Point a{0.0}, b{0.5};
  const double s = 1.0;
  CHECK(KernelSpec(KernelFamily::laplace, s)(a, b) == doctest::Approx(std::exp(-1.0)));
  CHECK(KernelSpec(KernelFamily::triangle, s)(a, b) == doctest::Approx(0.5));
  CHECK(KernelSpec(KernelFamily::epanechnikov, s)(a, b) == doctest::Approx(0.75));
  CHECK(KernelSpec(KernelFamily::ball, s)(a, b) == 1.0);
  CHECK(KernelSpec(KernelFamily::ball, s)(a, Point{1.5}) == 0.0);
  CHECK(KernelSpec(KernelFamily::triangle, s)(a, Point{3.0}) == 0.0);
  for (auto f : {KernelFamily::laplace, KernelFamily::triangle, KernelFamily::epanechnikov,
                 KernelFamily::ball}) {
    CHECK(KernelSpec(f, 0.7).self_value() == 1.0);
    CHECK(KernelSpec(f, 0.7)(b, b) == 1.0);
  }
  CHECK(KernelSpec::gaussian(0.7).self_value() == doctest::Approx(0.49));
  CHECK(KernelSpec::gaussian(1.0).characteristic());
  CHECK(KernelSpec(KernelFamily::laplace, 1.0).characteristic());
  CHECK_FALSE(KernelSpec(KernelFamily::triangle, 1.0).characteristic());
  CHECK_FALSE(KernelSpec(KernelFamily::ball, 1.0).characteristic());
  CHECK_THROWS_AS(KernelSpec::gaussian(0.0), ValidationError);
  CHECK_THROWS_AS(KernelSpec::gaussian(-1.0), ValidationError);
  CHECK(parse_kernel_family("epanechnikov") == KernelFamily::epanechnikov);
  CHECK_THROWS_AS(parse_kernel_family("cosine"), ValidationError);
}

TEST_CASE("deficit matches K(x,x) - K and is accurate at tiny distances") {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(0.0, 9.0);
  for (auto f : {KernelFamily::gaussian, KernelFamily::laplace, KernelFamily::triangle,
                 KernelFamily::epanechnikov, KernelFamily::ball}) {
    const KernelSpec k(f, 1.3);
    for (int t = 0; t < 200; ++t) {
      const double r2 = u(rng);
      CHECK(k.deficit(r2) == doctest::Approx(k.self_value() - k.profile(r2)).epsilon(1e-12));
    }
  }
  const KernelSpec g = KernelSpec::gaussian(1.0);
  // K(x,x) - K = r^2/2 - r^4/8 + ...
  CHECK(g.deficit(1e-20) == doctest::Approx(0.5e-20).epsilon(1e-12));
}

TEST_CASE("kde examples") {
  const Point p{0.4, 0.1};
  CHECK(kde(KernelSpec::gaussian(1.0), PointCloud::dirac(p), p) == doctest::Approx(1.0));
  CHECK(std::abs(kde(KernelSpec::gaussian(1.0), two_points(), Point{0.0, 0.0}) - kTwoPointKde) <
        1e-15);
  CHECK(kde(KernelSpec::gaussian(1.0), two_points(), Point{1e3, 1e3}) == 0.0);
  const double v = kde(KernelSpec::gaussian(0.5), two_points(), Point{0.7, 0.2});
  CHECK(v >= 0.0);
  CHECK(v <= 0.25);
  CHECK_THROWS_AS(kde(KernelSpec::gaussian(1.0), two_points(), Point{0.0}), DimensionMismatch);
}

TEST_CASE("kappa examples and identities") {
  const KernelSpec k = KernelSpec::gaussian(1.0);
  const Point p{1.0, 2.0};
  CHECK(kappa(k, PointCloud::dirac(p), PointCloud::dirac(p)) == doctest::Approx(1.0));
  CHECK(std::abs(kappa(k, two_points(), two_points()) - kTwoPointKde) < 1e-15);
  std::mt19937_64 rng(11);
  const PointCloud P = random_cloud(5, 2, rng, true);
  const PointCloud Q = random_cloud(7, 2, rng, false);
  const Point x{0.2, -0.3};
  CHECK(std::abs(kappa(k, P, PointCloud::dirac(x)) - kde(k, P, x)) < 1e-12);
  CHECK(std::abs(kappa(k, P, Q) - kappa(k, Q, P)) < 1e-15);
}

TEST_CASE("kernel distance examples") {
  const KernelSpec k = KernelSpec::gaussian(1.0);
  const PointCloud P = two_points();
  CHECK(kernel_distance(k, P, P) == 0.0);
  const Point a{0.0, 0.0}, b{1.0, 1.0};
  CHECK(std::abs(kernel_distance(k, PointCloud::dirac(a), PointCloud::dirac(b)) - kDiracSqrt2) <
        1e-15);
  CHECK(std::abs(dirac_kernel_distance(k, a, b) - kDiracSqrt2) < 1e-15);

  std::mt19937_64 rng(5);
  for (int t = 0; t < 200; ++t) {
    const PointCloud A = random_cloud(4, 2, rng, true);
    const PointCloud B = random_cloud(4, 2, rng, true);
    const PointCloud C = random_cloud(4, 2, rng, false);
    for (auto f : {KernelFamily::gaussian, KernelFamily::laplace}) {
      const KernelSpec kk(f, 0.8);
      const double ab = kernel_distance(kk, A, B), bc = kernel_distance(kk, B, C);
      const double ac = kernel_distance(kk, A, C), ba = kernel_distance(kk, B, A);
      CHECK(ab >= 0.0);
      CHECK(std::abs(ab - ba) < 1e-10);
      CHECK(ac <= ab + bc + 1e-10);
    }
  }
}

TEST_CASE("non-characteristic kernels clamp and flag negative radicands") {
  // The ball kernel is not positive definite: two points 1.9 sigma apart
  // against their midpoint give a negative radicand.
  const KernelSpec k(KernelFamily::ball, 1.0);
  const PointCloud P(1, {0.0, 1.9});
  const PointCloud Q(1, {0.95});
  const auto r = kernel_distance_checked(k, P, Q);
  // kappa(P,P) = 1/2, kappa(Q,Q) = 1, kappa(P,Q) = 1 -> radicand -1/2
  CHECK(r.radicand == doctest::Approx(-0.5));
  CHECK(r.degenerate);
  CHECK(r.value == 0.0);
  const auto g = kernel_distance_checked(KernelSpec::gaussian(1.0), P, Q);
  CHECK_FALSE(g.degenerate);
}

TEST_CASE("kdist examples and the kde identity") {
  const KernelSpec k = KernelSpec::gaussian(1.0);
  const Point p{0.5, 0.5};
  CHECK(kdist_to_point(k, PointCloud::dirac(p), p) == 0.0);
  CHECK(std::abs(kdist_to_point(k, two_points(), Point{0.0, 0.0}) - kTwoPointKdist) < 1e-15);
  const KernelDistanceField f(k, two_points());
  CHECK(std::abs(f(Point{1e4, -1e4}) - f.c_mu()) < 1e-15);
  CHECK(f.c_mu() == doctest::Approx(std::sqrt(kTwoPointKde + 1.0)));

  std::mt19937_64 rng(9);
  std::uniform_real_distribution<double> u(-2.0, 2.0);
  for (double sigma : {0.3, 1.0, 2.5}) {
    const KernelSpec ks = KernelSpec::gaussian(sigma);
    const PointCloud P = random_cloud(30, 2, rng, true);
    const KernelDistanceField fs(ks, P);
    for (int t = 0; t < 100; ++t) {
      const Point x{u(rng), u(rng)};
      const double d = fs(x);
      CHECK(std::abs(d * d + 2.0 * fs.kde(x) - (fs.self_kappa() + ks.self_value())) < 1e-12);
      CHECK(std::abs(d - kernel_distance(ks, P, PointCloud::dirac(x))) < 1e-12);
    }
  }
}

TEST_CASE("rkhs norm examples") {
  const Point p{0.1, 0.1};
  CHECK(rkhs_norm(KernelSpec::gaussian(1.0), PointCloud::dirac(p)) == doctest::Approx(1.0));
  CHECK(rkhs_norm(KernelSpec::gaussian(3.0), PointCloud::dirac(p)) == doctest::Approx(3.0));
  CHECK(std::abs(rkhs_norm(KernelSpec::gaussian(1.0), two_points()) - kTwoPointNorm) < 1e-15);
}

TEST_CASE("Euclidean sandwich for Dirac pairs") {
  std::mt19937_64 rng(21);
  std::uniform_real_distribution<double> u(-3.0, 3.0);
  for (double sigma : {0.5, 1.0, 2.0}) {
    const KernelSpec k = KernelSpec::gaussian(sigma);
    for (int t = 0; t < 2000; ++t) {
      const Point p{u(rng), u(rng)}, q{u(rng), u(rng)};
      const double e = std::sqrt(squared_distance(p, q));
      const double d = dirac_kernel_distance(k, p, q);
      CHECK(d <= e + 1e-10);
      if (e <= std::sqrt(3.0) * sigma) CHECK(e / 2.0 <= d + 1e-10);
    }
  }
}

TEST_CASE("K4: d^K fields of two measures differ by at most their kernel distance") {
  std::mt19937_64 rng(33);
  std::uniform_real_distribution<double> u(-2.0, 2.0);
  const KernelSpec k = KernelSpec::gaussian(0.6);
  for (int t = 0; t < 20; ++t) {
    const PointCloud A = random_cloud(12, 2, rng, true), B = random_cloud(9, 2, rng, false);
    const KernelDistanceField fa(k, A), fb(k, B);
    const double D = kernel_distance(k, A, B);
    for (int s = 0; s < 50; ++s) {
      const Point x{u(rng), u(rng)};
      CHECK(std::abs(fa(x) - fb(x)) <= D + 1e-10);
    }
  }
}

TEST_CASE("point cloud validation") {
  CHECK_THROWS_AS(PointCloud(2, {1.0, 2.0, 3.0}), ValidationError);
  CHECK_THROWS_AS(PointCloud(2, {}), ValidationError);
  CHECK_THROWS_AS(PointCloud(1, {1.0, 2.0}, {0.5, 0.6}), ValidationError);
  CHECK_THROWS_AS(PointCloud(1, {1.0, 2.0}, {1.5, -0.5}), ValidationError);
  CHECK_THROWS_AS(PointCloud(1, {1.0, 2.0}, {1.0}), ValidationError);
  CHECK_THROWS_AS(PointCloud(1, {NAN}), ValidationError);
  const PointCloud P(1, {1.0, 3.0}, {0.25, 0.75});
  CHECK(P.mean()[0] == doctest::Approx(2.5));
}

TEST_CASE("permutation invariance of kde and kdist") {
  std::mt19937_64 rng(77);
  const std::size_t n = 3000;  // above the pairwise block size
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<double> c(2 * n);
  for (double& x : c) x = u(rng);
  std::vector<std::size_t> perm(n);
  for (std::size_t i = 0; i < n; ++i) perm[i] = i;
  std::shuffle(perm.begin(), perm.end(), rng);
  std::vector<double> c2(2 * n);
  for (std::size_t i = 0; i < n; ++i) {
    c2[2 * i] = c[2 * perm[i]];
    c2[2 * i + 1] = c[2 * perm[i] + 1];
  }
  const KernelSpec k = KernelSpec::gaussian(0.05);
  const PointCloud A(2, c), B(2, c2);
  const KernelDistanceField fa(k, A), fb(k, B);
  for (int t = 0; t < 20; ++t) {
    const Point x{u(rng), u(rng)};
    CHECK(fa.kde(x) == doctest::Approx(fb.kde(x)).epsilon(1e-13));
    CHECK(fa(x) == doctest::Approx(fb(x)).epsilon(1e-12));
    CHECK(fa.kde(x) == fa.kde(x));  // fixed order: repeated calls agree bitwise
  }
}
