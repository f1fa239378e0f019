#pragma once

#include <cstddef>
#include <span>
#include <string_view>
#include <vector>

namespace kdtopo {

using Point = std::vector<double>;
using PointView = std::span<const double>;

enum class KernelFamily { gaussian, laplace, triangle, epanechnikov, ball };

std::string_view to_string(KernelFamily family);
KernelFamily parse_kernel_family(std::string_view name);

/// Kernel family plus bandwidth.
///
/// The Gaussian is normalized so that K(x,x) = sigma^2:
///   K(p,x) = sigma^2 exp(-|p-x|^2 / (2 sigma^2)).
/// The other families take K(x,x) = 1:
///   laplace       exp(-2|p-x|/sigma)
///   triangle      max(0, 1 - |p-x|/sigma)
///   epanechnikov  max(0, 1 - |p-x|^2/sigma^2)
///   ball          1 if |p-x| <= sigma else 0
class KernelSpec {
 public:
  KernelSpec(KernelFamily family, double sigma);

  static KernelSpec gaussian(double sigma) { return {KernelFamily::gaussian, sigma}; }

  KernelFamily family() const noexcept { return family_; }
  double sigma() const noexcept { return sigma_; }

  /// K(x,x); constant in x for every supported family.
  double self_value() const noexcept;

  /// Whether the induced kernel distance is a metric on measures.
  bool characteristic() const noexcept;

  /// Kernel value as a function of the squared Euclidean distance.
  double profile(double sq_dist) const noexcept;

  /// K(x,x) - K(p,x) as a function of the squared distance, computed without
  /// cancellation (expm1 for the exponential families).
  double deficit(double sq_dist) const noexcept;

  /// Distance beyond which the kernel is at most `eps` (infinite support
  /// families) or exactly zero (compact support families, eps ignored).
  double truncation_radius(double eps) const;

  double operator()(PointView p, PointView x) const;

 private:
  KernelFamily family_;
  double sigma_;
};

double squared_distance(PointView a, PointView b);

/// Finite set of points in R^dim, stored row-major.
class PointSet {
 public:
  PointSet() = default;
  PointSet(std::size_t dim, std::vector<double> coords);

  std::size_t dim() const noexcept { return dim_; }
  std::size_t size() const noexcept { return dim_ == 0 ? 0 : coords_.size() / dim_; }
  bool empty() const noexcept { return size() == 0; }
  PointView operator[](std::size_t i) const { return {coords_.data() + i * dim_, dim_}; }
  const std::vector<double>& coords() const noexcept { return coords_; }

  void push_back(PointView p);

 private:
  std::size_t dim_ = 0;
  std::vector<double> coords_;
};

/// Empirical measure: weighted points with weights summing to one.
class PointCloud {
 public:
  PointCloud(std::size_t dim, std::vector<double> coords);
  PointCloud(std::size_t dim, std::vector<double> coords, std::vector<double> weights);
  explicit PointCloud(PointSet points);
  PointCloud(PointSet points, std::vector<double> weights);

  static PointCloud dirac(PointView x);

  std::size_t dim() const noexcept { return points_.dim(); }
  std::size_t size() const noexcept { return points_.size(); }
  PointView point(std::size_t i) const { return points_[i]; }
  double weight(std::size_t i) const { return weights_[i]; }
  const PointSet& points() const noexcept { return points_; }
  const std::vector<double>& weights() const noexcept { return weights_; }
  bool uniform() const noexcept { return uniform_; }

  Point mean() const;

 private:
  void validate();

  PointSet points_;
  std::vector<double> weights_;
  bool uniform_ = true;
};

double kernel_eval(const KernelSpec& k, PointView p, PointView x);

/// sum_p w_p K(p, x)
double kde(const KernelSpec& k, const PointCloud& P, PointView x);

/// sum_p sum_q w_p w_q K(p, q). Exact O(|P||Q|).
double kappa(const KernelSpec& k, const PointCloud& P, const PointCloud& Q);

struct KernelDistanceResult {
  double value = 0.0;
  /// kappa(P,P) + kappa(Q,Q) - 2 kappa(P,Q) before clamping.
  double radicand = 0.0;
  /// Set when the radicand came out negative beyond rounding (only possible
  /// for non positive-definite families) and was clamped to zero.
  bool degenerate = false;
};

KernelDistanceResult kernel_distance_checked(const KernelSpec& k, const PointCloud& P,
                                             const PointCloud& Q);
double kernel_distance(const KernelSpec& k, const PointCloud& P, const PointCloud& Q);

/// Kernel distance between the Dirac masses at p and q.
double dirac_kernel_distance(const KernelSpec& k, PointView p, PointView q);

/// d^K_P(x) = D_K(P, delta_x). Recomputes kappa(P,P); use KernelDistanceField
/// for repeated evaluation.
double kdist_to_point(const KernelSpec& k, const PointCloud& P, PointView x);

double rkhs_norm(const KernelSpec& k, const PointCloud& P);

/// d^K_P with kappa(P,P) cached.
class KernelDistanceField {
 public:
  KernelDistanceField(KernelSpec k, PointCloud P);

  const KernelSpec& kernel() const noexcept { return k_; }
  const PointCloud& cloud() const noexcept { return P_; }
  double self_kappa() const noexcept { return self_kappa_; }
  /// sup of d^K_P: sqrt(kappa(P,P) + K(x,x)).
  double c_mu() const noexcept;

  double kde(PointView x) const;
  double squared(PointView x) const;
  double operator()(PointView x) const;

 private:
  KernelSpec k_;
  PointCloud P_;
  double self_kappa_;
  /// sum_p sum_q w_p w_q (K(x,x) - K(p,q)); equals K(x,x) - kappa(P,P).
  double self_deficit_;
};

namespace detail {

/// Fixed-order summation: left to right below the block size, pairwise
/// (tree) splitting above it.
template <class Term>
double ordered_sum(Term&& term, std::size_t lo, std::size_t hi) {
  constexpr std::size_t kBlock = 1024;
  if (hi - lo <= kBlock) {
    double s = 0.0;
    for (std::size_t i = lo; i < hi; ++i) s += term(i);
    return s;
  }
  const std::size_t mid = lo + (hi - lo) / 2;
  return ordered_sum(term, lo, mid) + ordered_sum(term, mid, hi);
}

/// sum_p sum_q w_p w_q deficit(|p-q|^2)
double cross_deficit(const KernelSpec& k, const PointCloud& P, const PointCloud& Q);

}  // namespace detail

}  // namespace kdtopo
