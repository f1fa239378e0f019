#pragma once

#include <cstddef>
#include <functional>
#include <optional>
#include <vector>

#include "kdtopo/kernels.hpp"

namespace kdtopo {

/// Sites with power weights, usually w(p) = d^K_P(p).
class WeightedSiteSet {
 public:
  WeightedSiteSet(PointSet sites, std::vector<double> weights);

  std::size_t size() const noexcept { return sites_.size(); }
  std::size_t dim() const noexcept { return sites_.dim(); }
  PointView site(std::size_t i) const { return sites_[i]; }
  double weight(std::size_t i) const { return weights_[i]; }
  const PointSet& sites() const noexcept { return sites_; }
  const std::vector<double>& weights() const noexcept { return weights_; }

 private:
  PointSet sites_;
  std::vector<double> weights_;
};

/// Sites = points of P with weights d^K_P evaluated at each of them.
WeightedSiteSet kdist_weighted_sites(const KernelSpec& k, const PointCloud& P);

/// sqrt(min_p D_K(p,x)^2 + w(p)^2), D_K between Dirac masses.
double kpow(const KernelSpec& k, const WeightedSiteSet& S, PointView x);

struct CloudStats {
  double diameter = 0.0;              ///< Delta
  double min_separation = 0.0;        ///< smallest positive pairwise distance
  double spread = 0.0;                ///< beta_P = Delta / min_separation
  double median_concentration = 0.0;  ///< Lambda_P = min_p r_p
  std::vector<double> median_radius;  ///< r_p per point
};

/// Exact O(n^2) statistics. r_p is the (floor(n/2)+1)-th smallest distance
/// from p (p itself counts, at distance 0).
CloudStats cloud_stats(const PointCloud& P);

struct NetParams {
  double delta = 0.5;
  std::size_t max_net_points = 10'000'000;
  /// Number of best net candidates refined by mean-shift; 0 returns the raw
  /// net argmax.
  std::size_t polish_candidates = 16;
  void validate() const;
};

/// One lattice shell of the net around a point p. shell 0 is the ball
/// B_{R_p}(p); shell i >= 1 is the annulus R/2^i < |x-p| <= R/2^(i-1).
struct NetShell {
  std::size_t center = 0;
  int shell = 0;
  double inner = 0.0;
  double outer = 0.0;
  double spacing = 0.0;    ///< required covering distance
  double axis_step = 0.0;  ///< spacing / sqrt(d)
  std::size_t count = 0;   ///< lattice points kept
};

struct NetPlan {
  double r_sigma = 0.0;  ///< sigma sqrt(2 ln n)
  double radius = 0.0;   ///< R = min(R_sigma, Delta)
  CloudStats stats;
  std::vector<NetShell> shells;
  std::size_t total = 0;
};

/// Shell layout and sizes of the candidate net; gaussian kernel, dim <= 3.
NetPlan plan_net(const KernelSpec& k, const PointCloud& P, const NetParams& params);

/// Visits every lattice point of one shell. The lattice is p + axis_step * Z^d
/// restricted to the shell dilated by the lattice covering radius.
void for_each_shell_point(const PointCloud& P, const NetShell& shell,
                          const std::function<void(PointView)>& visit);

struct PhatResult {
  Point point;
  double kde = 0.0;
  double net_kde = 0.0;  ///< best value on the raw net, before refinement
  std::size_t net_size = 0;
};

/// Approximate maximizer of kde_P (equivalently minimizer of d^K_P) by
/// exhaustive evaluation over the net, then mean-shift refinement of the best
/// candidates. Throws NumericError if the net exceeds params.max_net_points.
PhatResult find_phat_plus_detailed(const KernelSpec& k, const PointCloud& P,
                                   const NetParams& params = {});
Point find_phat_plus(const KernelSpec& k, const PointCloud& P, const NetParams& params = {});

/// Multi-start ascent on kde from every point of P and from the mean.
Point find_pplus_gridascent(const KernelSpec& k, const PointCloud& P, double tol);

/// Mean-shift iteration for the gaussian kernel starting at x; stops when the
/// gradient norm of kde falls below tol or after max_iter steps.
Point mean_shift(const KernelSpec& k, const PointCloud& P, Point x, double tol,
                 std::size_t max_iter = 10000);

enum class PhatStrategy { net, ascent };

struct PhatSites {
  WeightedSiteSet sites;
  Point phat;
  std::size_t phat_index = 0;
  /// p-hat coincided with a point of P (to 1e-12) and was not added again.
  bool deduplicated = false;
};

PhatSites build_phat_sites(const KernelSpec& k, const PointCloud& P, PhatStrategy strategy,
                           const NetParams& params = {}, double ascent_tol = 1e-10);

}  // namespace kdtopo
