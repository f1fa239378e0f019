#pragma once

#include <cstdint>

#include "kdtopo/kernels.hpp"

namespace kdtopo {

/// Parameters of a random eps-kernel sample.
struct CoresetSpec {
  double eps = 0.1;
  double delta = 0.1;
  double constant_c = 0.5;
  std::uint64_t seed = 0;

  /// ceil(c (1/eps^2)(dim + ln(1/delta))), at least 1.
  std::size_t sample_size(std::size_t dim) const;
  void validate() const;
};

/// m i.i.d. draws from P in proportion to its weights (with replacement),
/// returned with uniform weights 1/m.
PointCloud random_eps_sample(const PointCloud& P, const CoresetSpec& params);

/// Same sampler with an explicit sample size.
PointCloud random_sample(const PointCloud& P, std::size_t m, std::uint64_t seed);

/// Regular grid over the bounding box of P padded by `pad` on every side,
/// with `per_axis` nodes per axis.
PointSet padded_probe_grid(const PointCloud& P, double pad, std::size_t per_axis);

/// max over probes of |kde_P - kde_Q|.
double sup_kde_error(const KernelSpec& k, const PointCloud& P, const PointCloud& Q,
                     const PointSet& probes);

struct KdistErrorTransfer {
  double squared = 0.0;  ///< sup |d_P^2 - d_Q^2|
  double plain = 0.0;    ///< sup |d_P - d_Q|
};

KdistErrorTransfer kdist_error_transfer(const KernelSpec& k, const PointCloud& P,
                                        const PointCloud& Q, const PointSet& probes);

}  // namespace kdtopo
