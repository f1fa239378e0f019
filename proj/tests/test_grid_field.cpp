#include <doctest.h>

#include <cmath>
#include <random>

#include "kdtopo/error.hpp"
#include "kdtopo/grid_field.hpp"
#include "kdtopo/persistence.hpp"

using namespace kdtopo;

namespace {

constexpr double kDelta = 0.19778834660889772;  // sqrt(2 * 0.0025 * ln 2500)

PointCloud blob(std::size_t n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<double> c(2 * n);
  for (double& x : c) x = u(rng);
  return PointCloud(2, std::move(c));
}

}  // namespace

TEST_CASE("truncation radius") {
  const KernelSpec k = KernelSpec::gaussian(0.05);
  CHECK(std::abs(k.truncation_radius(1e-6) - kDelta) < 1e-15);
  CHECK(k.profile(kDelta * kDelta) == doctest::Approx(1e-6).epsilon(1e-12));
  CHECK(k.truncation_radius(k.self_value()) == 0.0);
  CHECK(k.truncation_radius(1.0) == 0.0);
}

TEST_CASE("grid geometry") {
  const KernelSpec k = KernelSpec::gaussian(0.1);
  const PointCloud P = blob(50, 1);
  const double eps = 0.005;
  const GridField F = eval_grid(k, P, eps, std::nullopt, FieldKind::kde);
  CHECK(F.spacing[0] == doctest::Approx(eps / (2.0 * std::sqrt(2.0))));
  CHECK(F.meta.eps == eps);
  CHECK(F.meta.truncation_radius == doctest::Approx(k.truncation_radius(eps)));
  CHECK_FALSE(F.meta.truncation_disabled);
  double lo = INFINITY, hi = -INFINITY;
  for (std::size_t i = 0; i < P.size(); ++i) {
    lo = std::min(lo, P.point(i)[0]);
    hi = std::max(hi, P.point(i)[0]);
  }
  CHECK(F.origin[0] == doctest::Approx(lo - F.meta.truncation_radius));
  const double last = F.origin[0] + F.spacing[0] * static_cast<double>(F.nodes[0] - 1);
  CHECK(last >= hi + F.meta.truncation_radius - 1e-12);
  CHECK(last < hi + F.meta.truncation_radius + F.spacing[0]);
  const Point x = F.node(F.nodes[0] + 2);
  CHECK(x[0] == doctest::Approx(F.origin[0] + 2 * F.spacing[0]));
  CHECK(x[1] == doctest::Approx(F.origin[1] + F.spacing[1]));
  CHECK_THROWS_AS(eval_grid(k, P, 0.0, std::nullopt, FieldKind::kde), ValidationError);
  CHECK_THROWS_AS(eval_grid(KernelSpec::gaussian(1.0), P, 1e-7, std::nullopt, FieldKind::kde),
                  NumericError);
}

TEST_CASE("single Dirac kde peak") {
  const KernelSpec k = KernelSpec::gaussian(0.05);
  const PointCloud P = PointCloud::dirac(Point{0.3, 0.4});
  const double eps = 1e-4;
  const GridField F = eval_grid(k, P, eps, std::nullopt, FieldKind::kde);
  double m = 0.0;
  for (double v : F.values) m = std::max(m, v);
  CHECK(m <= k.self_value());
  CHECK(m >= k.self_value() - eps);
}

TEST_CASE("truncated values stay within eps of exact values") {
  const KernelSpec k = KernelSpec::gaussian(0.1);
  const PointCloud P = blob(400, 2);
  const double eps = 0.2 * k.self_value();
  const Box b{{0.3, 0.3}, {0.7, 0.7}};
  const GridField F = eval_grid(k, P, eps, b, FieldKind::kde);
  const GridField D = eval_grid(k, P, eps, b, FieldKind::kdist);
  REQUIRE_FALSE(F.meta.truncation_disabled);
  const KernelDistanceField f(k, P);
  std::mt19937_64 rng(3);
  std::uniform_int_distribution<std::size_t> pick(0, F.size() - 1);
  const double e = F.meta.eps;
  for (int t = 0; t < 1000; ++t) {
    const std::size_t i = pick(rng);
    const Point x = F.node(i);
    const double exact_kde = f.kde(x), exact_d = f(x);
    CHECK(std::abs(F.values[i] - exact_kde) <= e);
    CHECK(std::abs(D.values[i] * D.values[i] - exact_d * exact_d) <= 2.0 * e + 1e-15);
    const double id = D.values[i] * D.values[i] + 2.0 * F.values[i];
    CHECK(std::abs(id - (f.self_kappa() + k.self_value())) <= 3.0 * e);
  }
}

TEST_CASE("large eps disables truncation") {
  const KernelSpec k = KernelSpec::gaussian(0.1);
  const PointCloud P = blob(20, 4);
  const GridField F = eval_grid(k, P, 0.05, std::nullopt, FieldKind::kdist);
  CHECK(F.meta.truncation_disabled);
  CHECK(std::isinf(F.meta.truncation_radius));
  const KernelDistanceField f(k, P);
  for (std::size_t i = 0; i < F.size(); i += 7) CHECK(F.values[i] == doctest::Approx(f(F.node(i))));
}

TEST_CASE("explicit node grids are exact") {
  const KernelSpec k = KernelSpec::gaussian(0.2);
  const PointCloud P = blob(30, 5);
  const Box b{{0.0, 0.0}, {1.0, 2.0}};
  const GridField F = eval_grid_nodes(k, P, b, {11, 21}, FieldKind::kdist);
  CHECK(F.spacing[0] == doctest::Approx(0.1));
  CHECK(F.spacing[1] == doctest::Approx(0.1));
  const KernelDistanceField f(k, P);
  for (std::size_t i = 0; i < F.size(); ++i) CHECK(F.values[i] == f(F.node(i)));
  CHECK_THROWS_AS(eval_grid_nodes(k, P, b, {1, 5}, FieldKind::kde), ValidationError);
  CHECK_THROWS_AS(eval_grid_nodes(k, P, b, {5}, FieldKind::kde), DimensionMismatch);
}

TEST_CASE("refining the grid moves the diagram by at most the old eps") {
  const KernelSpec k = KernelSpec::gaussian(0.1);
  const PointCloud P = blob(40, 6);
  const Box b{{-0.2, -0.2}, {1.2, 1.2}};
  const double eps = 0.02;
  const GridField a = eval_grid(k, P, eps, b, FieldKind::kdist);
  const GridField c = eval_grid(k, P, eps / 2.0, b, FieldKind::kdist);
  const auto da = lower_star_grid_persistence(a), dc = lower_star_grid_persistence(c);
  CHECK(bottleneck(da, dc, 0) <= eps);
  CHECK(bottleneck(da, dc, 1) <= eps);
}

TEST_CASE("level masks") {
  const KernelSpec k = KernelSpec::gaussian(0.1);
  const PointCloud P = blob(30, 7);
  const GridField F = eval_grid(k, P, 0.05, std::nullopt, FieldKind::kdist);
  double lo = INFINITY;
  for (double v : F.values) lo = std::min(lo, v);
  for (bool b : level_mask(F, lo * 0.999, LevelMode::sub)) CHECK_FALSE(b);
  for (bool b : level_mask(F, F.meta.c_mu, LevelMode::sub)) CHECK(b);
  const auto sup = level_mask(F, lo, LevelMode::super);
  for (bool b : sup) CHECK(b);
}

TEST_CASE("contours") {
  GridField C;
  C.origin = {0.0, 0.0};
  C.spacing = {1.0, 1.0};
  C.nodes = {4, 4};
  C.values.assign(16, 1.0);
  const auto flat = export_contours(C, {0.5, 1.5});
  REQUIRE(flat.size() == 2);
  CHECK(flat[0].lines.empty());
  CHECK(flat[1].lines.empty());

  const KernelSpec k = KernelSpec::gaussian(0.1);
  const GridField F = eval_grid_nodes(k, PointCloud::dirac(Point{0.5, 0.5}),
                                      Box{{0.0, 0.0}, {1.0, 1.0}}, {41, 41}, FieldKind::kde);
  const auto loops = export_contours(F, {0.5 * k.self_value()});
  REQUIRE(loops[0].lines.size() == 1);
  const auto& line = loops[0].lines[0];
  CHECK(line.front() == line.back());
  const double r = 0.1 * std::sqrt(2.0 * std::log(2.0));
  for (const auto& [x, y] : line) CHECK(std::hypot(x - 0.5, y - 0.5) == doctest::Approx(r).epsilon(0.02));
  CHECK(export_contours(F, {0.5 * k.self_value()})[0].lines == loops[0].lines);
  const std::string svg = contours_to_svg(F, loops);
  CHECK(svg.find("<svg") == 0);
  CHECK(svg.find("<polyline") != std::string::npos);

  GridField L;
  L.origin = {0.0};
  L.spacing = {1.0};
  L.nodes = {3};
  L.values = {0, 1, 0};
  CHECK_THROWS_AS(export_contours(L, {0.5}), ValidationError);
}

TEST_CASE("saddle cells are resolved deterministically") {
  GridField F;
  F.origin = {0.0, 0.0};
  F.spacing = {1.0, 1.0};
  F.nodes = {2, 2};
  F.values = {1.0, 0.0, 0.0, 1.0};
  const auto a = export_contours(F, {0.4});
  const auto b = export_contours(F, {0.4});
  CHECK(a[0].lines == b[0].lines);
  CHECK(a[0].lines.size() == 2);
}

TEST_CASE("field kind names") {
  CHECK(parse_field_kind("kde") == FieldKind::kde);
  CHECK(to_string(FieldKind::kdist) == "kdist");
  CHECK_THROWS_AS(parse_field_kind("density"), ValidationError);
}
