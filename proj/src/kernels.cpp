#include "kdtopo/kernels.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>

#include "kdtopo/error.hpp"

namespace kdtopo {

std::string_view to_string(KernelFamily family) {
  switch (family) {
    case KernelFamily::gaussian: return "gaussian";
    case KernelFamily::laplace: return "laplace";
    case KernelFamily::triangle: return "triangle";
    case KernelFamily::epanechnikov: return "epanechnikov";
    case KernelFamily::ball: return "ball";
  }
  return "unknown";
}

KernelFamily parse_kernel_family(std::string_view name) {
  for (auto f : {KernelFamily::gaussian, KernelFamily::laplace, KernelFamily::triangle,
                 KernelFamily::epanechnikov, KernelFamily::ball}) {
    if (to_string(f) == name) return f;
  }
  throw ValidationError("unknown kernel family '" + std::string(name) + "'");
}

KernelSpec::KernelSpec(KernelFamily family, double sigma) : family_(family), sigma_(sigma) {
  if (!(sigma > 0.0) || !std::isfinite(sigma)) {
    throw ValidationError("kernel bandwidth sigma must be positive and finite");
  }
}

double KernelSpec::self_value() const noexcept {
  return family_ == KernelFamily::gaussian ? sigma_ * sigma_ : 1.0;
}

bool KernelSpec::characteristic() const noexcept {
  return family_ == KernelFamily::gaussian || family_ == KernelFamily::laplace;
}

double KernelSpec::profile(double sq_dist) const noexcept {
  const double s2 = sigma_ * sigma_;
  switch (family_) {
    case KernelFamily::gaussian: return s2 * std::exp(-sq_dist / (2.0 * s2));
    case KernelFamily::laplace: return std::exp(-2.0 * std::sqrt(sq_dist) / sigma_);
    case KernelFamily::triangle: return std::max(0.0, 1.0 - std::sqrt(sq_dist) / sigma_);
    case KernelFamily::epanechnikov: return std::max(0.0, 1.0 - sq_dist / s2);
    case KernelFamily::ball: return sq_dist <= s2 ? 1.0 : 0.0;
  }
  return 0.0;
}

double KernelSpec::deficit(double sq_dist) const noexcept {
  const double s2 = sigma_ * sigma_;
  switch (family_) {
    case KernelFamily::gaussian: return -s2 * std::expm1(-sq_dist / (2.0 * s2));
    case KernelFamily::laplace: return -std::expm1(-2.0 * std::sqrt(sq_dist) / sigma_);
    case KernelFamily::triangle: return std::min(1.0, std::sqrt(sq_dist) / sigma_);
    case KernelFamily::epanechnikov: return std::min(1.0, sq_dist / s2);
    case KernelFamily::ball: return sq_dist <= s2 ? 0.0 : 1.0;
  }
  return 0.0;
}

double KernelSpec::truncation_radius(double eps) const {
  if (!(eps > 0.0)) throw ValidationError("truncation eps must be positive");
  switch (family_) {
    case KernelFamily::gaussian: {
      const double s2 = sigma_ * sigma_;
      if (eps >= s2) return 0.0;
      return std::sqrt(2.0 * s2 * std::log(s2 / eps));
    }
    case KernelFamily::laplace:
      if (eps >= 1.0) return 0.0;
      return 0.5 * sigma_ * std::log(1.0 / eps);
    case KernelFamily::triangle:
    case KernelFamily::epanechnikov:
    case KernelFamily::ball: return sigma_;
  }
  return std::numeric_limits<double>::infinity();
}

double KernelSpec::operator()(PointView p, PointView x) const {
  if (p.size() != x.size()) throw DimensionMismatch(p.size(), x.size());
  return profile(squared_distance(p, x));
}

double squared_distance(PointView a, PointView b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double d = a[i] - b[i];
    s += d * d;
  }
  return s;
}

// PointSet ------------------------------------------------------------------

PointSet::PointSet(std::size_t dim, std::vector<double> coords)
    : dim_(dim), coords_(std::move(coords)) {
  if (dim_ == 0) throw ValidationError("point dimension must be positive");
  if (coords_.size() % dim_ != 0) {
    throw ValidationError("coordinate count " + std::to_string(coords_.size()) +
                          " is not a multiple of dimension " + std::to_string(dim_));
  }
  for (double c : coords_) {
    if (!std::isfinite(c)) throw ValidationError("point coordinates must be finite");
  }
}

void PointSet::push_back(PointView p) {
  if (dim_ == 0) dim_ = p.size();
  if (p.size() != dim_) throw DimensionMismatch(dim_, p.size());
  coords_.insert(coords_.end(), p.begin(), p.end());
}

// PointCloud ----------------------------------------------------------------

PointCloud::PointCloud(std::size_t dim, std::vector<double> coords)
    : PointCloud(PointSet(dim, std::move(coords))) {}

PointCloud::PointCloud(std::size_t dim, std::vector<double> coords, std::vector<double> weights)
    : PointCloud(PointSet(dim, std::move(coords)), std::move(weights)) {}

PointCloud::PointCloud(PointSet points) : points_(std::move(points)) {
  if (points_.empty()) throw ValidationError("point cloud must contain at least one point");
  weights_.assign(points_.size(), 1.0 / static_cast<double>(points_.size()));
  uniform_ = true;
}

PointCloud::PointCloud(PointSet points, std::vector<double> weights)
    : points_(std::move(points)), weights_(std::move(weights)) {
  validate();
  uniform_ = false;
}

void PointCloud::validate() {
  if (points_.empty()) throw ValidationError("point cloud must contain at least one point");
  if (weights_.size() != points_.size()) {
    throw ValidationError("weight count " + std::to_string(weights_.size()) +
                          " does not match point count " + std::to_string(points_.size()));
  }
  double total = 0.0;
  for (double w : weights_) {
    if (!(w >= 0.0) || !std::isfinite(w)) throw ValidationError("weights must be nonnegative");
    total += w;
  }
  if (std::abs(total - 1.0) > 1e-12) {
    throw ValidationError("weights must sum to 1 (got " + std::to_string(total) + ")");
  }
}

PointCloud PointCloud::dirac(PointView x) {
  return PointCloud(PointSet(x.size(), std::vector<double>(x.begin(), x.end())));
}

Point PointCloud::mean() const {
  Point m(dim(), 0.0);
  for (std::size_t i = 0; i < size(); ++i) {
    const auto p = point(i);
    for (std::size_t j = 0; j < dim(); ++j) m[j] += weights_[i] * p[j];
  }
  return m;
}

// Kernel sums ---------------------------------------------------------------

namespace {

void require_same_dim(std::size_t a, std::size_t b) {
  if (a != b) throw DimensionMismatch(a, b);
}

}  // namespace

double kernel_eval(const KernelSpec& k, PointView p, PointView x) { return k(p, x); }

double kde(const KernelSpec& k, const PointCloud& P, PointView x) {
  require_same_dim(P.dim(), x.size());
  return detail::ordered_sum(
      [&](std::size_t i) { return P.weight(i) * k.profile(squared_distance(P.point(i), x)); }, 0,
      P.size());
}

double kappa(const KernelSpec& k, const PointCloud& P, const PointCloud& Q) {
  require_same_dim(P.dim(), Q.dim());
  return detail::ordered_sum([&](std::size_t i) { return P.weight(i) * kde(k, Q, P.point(i)); },
                             0, P.size());
}

namespace detail {

double cross_deficit(const KernelSpec& k, const PointCloud& P, const PointCloud& Q) {
  require_same_dim(P.dim(), Q.dim());
  return ordered_sum(
      [&](std::size_t i) {
        const auto p = P.point(i);
        return P.weight(i) *
               ordered_sum(
                   [&](std::size_t j) {
                     return Q.weight(j) * k.deficit(squared_distance(p, Q.point(j)));
                   },
                   0, Q.size());
      },
      0, P.size());
}

}  // namespace detail

KernelDistanceResult kernel_distance_checked(const KernelSpec& k, const PointCloud& P,
                                             const PointCloud& Q) {
  // With g = K(x,x) - K, kappa(A,B) = K(x,x) - G(A,B), so the radicand is
  // 2 G(P,Q) - G(P,P) - G(Q,Q); this form avoids cancelling two O(K(x,x)) terms.
  const double gpq = detail::cross_deficit(k, P, Q);
  const double gpp = detail::cross_deficit(k, P, P);
  const double gqq = detail::cross_deficit(k, Q, Q);
  KernelDistanceResult r;
  r.radicand = 2.0 * gpq - gpp - gqq;
  if (r.radicand < 0.0) {
    const double scale = std::max({gpq, gpp, gqq, k.self_value() * 1e-300});
    r.degenerate = !k.characteristic() && r.radicand < -1e-12 * scale;
    r.value = 0.0;
  } else {
    r.value = std::sqrt(r.radicand);
  }
  return r;
}

double kernel_distance(const KernelSpec& k, const PointCloud& P, const PointCloud& Q) {
  return kernel_distance_checked(k, P, Q).value;
}

double dirac_kernel_distance(const KernelSpec& k, PointView p, PointView q) {
  require_same_dim(p.size(), q.size());
  return std::sqrt(2.0 * k.deficit(squared_distance(p, q)));
}

double kdist_to_point(const KernelSpec& k, const PointCloud& P, PointView x) {
  require_same_dim(P.dim(), x.size());
  return KernelDistanceField(k, P)(x);
}

double rkhs_norm(const KernelSpec& k, const PointCloud& P) { return std::sqrt(kappa(k, P, P)); }

// KernelDistanceField -------------------------------------------------------

KernelDistanceField::KernelDistanceField(KernelSpec k, PointCloud P)
    : k_(k), P_(std::move(P)) {
  self_deficit_ = detail::cross_deficit(k_, P_, P_);
  self_kappa_ = kappa(k_, P_, P_);
}

double KernelDistanceField::c_mu() const noexcept {
  return std::sqrt(self_kappa_ + k_.self_value());
}

double KernelDistanceField::kde(PointView x) const { return kdtopo::kde(k_, P_, x); }

double KernelDistanceField::squared(PointView x) const {
  require_same_dim(P_.dim(), x.size());
  const double g = detail::ordered_sum(
      [&](std::size_t i) { return P_.weight(i) * k_.deficit(squared_distance(P_.point(i), x)); },
      0, P_.size());
  return std::max(0.0, 2.0 * g - self_deficit_);
}

double KernelDistanceField::operator()(PointView x) const { return std::sqrt(squared(x)); }

}  // namespace kdtopo
