#pragma once

#include <cmath>
#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "kdtopo/kernels.hpp"

namespace kdtopo {

/// Outcome of a randomized property check. pass <=> max_violation <= tolerance,
/// except for not-applicable probes, which neither pass nor fail.
struct ProbeReport {
  std::string property;
  std::size_t trials = 0;
  double max_violation = -INFINITY;
  double tolerance = 0.0;
  bool pass = true;
  std::uint64_t seed = 0;
  std::string status = "ok";  ///< "ok" or "not-applicable"
  std::string witness;        ///< input that produced max_violation
  std::map<std::string, double> extra;

  void record(double violation, const std::string& where);
  void finish();
  std::string to_json_line() const;
};

/// |d(x) - d(y)| - |x - y| over random pairs around P; tolerance 1e-10.
ProbeReport check_lipschitz_x(const KernelSpec& k, const PointCloud& P, std::size_t trials,
                              std::uint64_t seed);

/// Second directional derivative of T(x) = d^K(x)^2 - |x|^2, by central
/// differences at steps h and h/2 combined by Richardson extrapolation.
double semiconcavity_second_derivative(const KernelSpec& k, const PointCloud& P, PointView x,
                                       PointView u, double h);

/// Asserts the second derivative of T is <= 1e-6 along random directions.
/// h <= 0 selects the default 1e-3 sigma.
ProbeReport check_semiconcavity(const KernelSpec& k, const PointCloud& P, std::size_t trials,
                                double h, std::uint64_t seed);

/// Along random rays from the mean, beyond the support radius, d^K must be
/// nondecreasing and reach c_mu to within 1e-8 c_mu at support + 10 sigma.
ProbeReport check_properness(const KernelSpec& k, const PointCloud& P, std::size_t rays,
                             std::uint64_t seed);

/// 18/e^3 + 8/e + 2
double sigma_lipschitz_constant();

/// For each probe, evaluates d^K over the sorted bandwidths and records
/// |Delta d| / |Delta sigma| - l between consecutive values (gaussian).
ProbeReport check_sigma_lipschitz(const PointCloud& P, const PointSet& probes,
                                  const std::vector<double>& sigmas);

struct HMaxPeaks {
  double d1_max = 0.0;  ///< max over z of d/dsigma exp(-z^2/2sigma^2)
  double d1_argmax = 0.0;
  double d2_max = 0.0;  ///< max over z of the second sigma-derivative
  double d2_argmax = 0.0;
};

/// Numeric maxima of the sigma-derivatives of h(sigma,z) = exp(-z^2/2sigma^2)
/// over z > 0 (dense scan then golden-section refinement).
HMaxPeaks h_max_peaks(double sigma);

/// |d_mu(x) - d_nu(x)| - D_K(mu, nu) over the probes; tolerance 1e-10.
ProbeReport check_k4(const KernelSpec& k, const PointCloud& mu, const PointCloud& nu,
                     const PointSet& probes);

/// Distance to a measure for a uniform-weight cloud:
/// sqrt((1/(m0 n)) [sum_{i<=floor(k)} d_(i)^2 + (k - floor(k)) d_(ceil k)^2]), k = m0 n.
double dtm(const PointCloud& P, double m0, PointView x);

/// |mean(P) - mean(Q)|
double mean_gap(const PointCloud& P, const PointCloud& Q);

/// W_2(P, delta_x) = sqrt(sum_p w_p |p - x|^2)
double w2_to_dirac(const PointCloud& P, PointView x);

/// D_K(P, delta_x) - W_2(P, delta_x) for random x and every bandwidth.
ProbeReport check_dk_w2_dirac(const PointCloud& P, const std::vector<double>& sigmas,
                              std::size_t trials, std::uint64_t seed);

struct MeanGapRate {
  double fitted_leading = 0.0;  ///< leading coefficient of the fit of gap * sigma^2
  double constant = 0.0;        ///< C = max(fitted_leading, max over the fit range of gap * sigma^2)
  double worst_ratio = 0.0;     ///< max over the check range of gap * sigma^2 / C
  double gap_at_100diam = 0.0;  ///< |D_K - mean_gap| at sigma = 100 diam
  double mean_gap = 0.0;
  double diameter = 0.0;
  bool pass = false;
};

/// Fits gap(sigma) = |D_K(P,Q) - mean_gap| ~ C / sigma^2 on the sigmas in
/// [fit_lo, fit_hi] (in units of the diameter of P u Q), as a quartic in
/// sigma^-2 for gap * sigma^2, and checks gap <= C / sigma^2 on
/// (fit_hi, check_hi], plus gap(100 diam) <= 1e-3 mean_gap.
MeanGapRate check_mean_gap_rate(const PointCloud& P, const PointCloud& Q, double fit_lo = 1.0,
                                double fit_hi = 10.0, double check_hi = 1000.0,
                                std::size_t steps = 200);

struct MonotonicityRegime {
  double R = 0.0;        ///< reach bound: the disk radius
  double G = 0.0;        ///< vol(B(sigma/2)) / vol(S)
  double delta_g = 0.0;  ///< sqrt(12 + 3 ln(4/G))
  double sigma_max = 0.0;
  bool valid = false;
};

double monotonicity_delta_g(double G);

/// S = closed disk of radius disk_radius in the plane.
MonotonicityRegime monotonicity_regime(double disk_radius, double sigma);

/// Walks `steps` radial flow steps of length `step` from x0 (outside the disk
/// centered at `center`) and asserts d^K_P strictly increases while
/// f_S in (0.014 R, 2 sigma). Not-applicable outside the regime. Violations
/// are increments of the squared distance, d_j^2 - d_{j+1}^2.
ProbeReport monotonicity_probe(const KernelSpec& k, const PointCloud& P, PointView center,
                               double disk_radius, PointView x0, double step, std::size_t steps);

}  // namespace kdtopo
