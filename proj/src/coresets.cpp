#include "kdtopo/coresets.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include "kdtopo/error.hpp"

namespace kdtopo {

void CoresetSpec::validate() const {
  if (!(eps > 0.0 && eps < 1.0)) throw ValidationError("coreset eps must lie in (0,1)");
  if (!(delta > 0.0 && delta < 1.0)) throw ValidationError("coreset delta must lie in (0,1)");
  if (!(constant_c > 0.0) || !std::isfinite(constant_c)) {
    throw ValidationError("coreset constant must be positive");
  }
}

std::size_t CoresetSpec::sample_size(std::size_t dim) const {
  validate();
  const double m =
      std::ceil(constant_c * (1.0 / (eps * eps)) * (static_cast<double>(dim) + std::log(1.0 / delta)));
  return std::max<std::size_t>(1, static_cast<std::size_t>(m));
}

PointCloud random_sample(const PointCloud& P, std::size_t m, std::uint64_t seed) {
  if (m == 0) throw ValidationError("sample size must be positive");
  std::mt19937_64 rng(seed);
  std::vector<double> coords;
  coords.reserve(m * P.dim());
  if (P.uniform()) {
    std::uniform_int_distribution<std::size_t> pick(0, P.size() - 1);
    for (std::size_t i = 0; i < m; ++i) {
      const auto p = P.point(pick(rng));
      coords.insert(coords.end(), p.begin(), p.end());
    }
  } else {
    std::discrete_distribution<std::size_t> pick(P.weights().begin(), P.weights().end());
    for (std::size_t i = 0; i < m; ++i) {
      const auto p = P.point(pick(rng));
      coords.insert(coords.end(), p.begin(), p.end());
    }
  }
  return PointCloud(P.dim(), std::move(coords));
}

PointCloud random_eps_sample(const PointCloud& P, const CoresetSpec& params) {
  return random_sample(P, params.sample_size(P.dim()), params.seed);
}

PointSet padded_probe_grid(const PointCloud& P, double pad, std::size_t per_axis) {
  if (per_axis < 2) throw ValidationError("probe grid needs at least 2 nodes per axis");
  const std::size_t d = P.dim();
  std::vector<double> lo(d, INFINITY), hi(d, -INFINITY);
  for (std::size_t i = 0; i < P.size(); ++i) {
    for (std::size_t j = 0; j < d; ++j) {
      lo[j] = std::min(lo[j], P.point(i)[j]);
      hi[j] = std::max(hi[j], P.point(i)[j]);
    }
  }
  std::size_t total = 1;
  for (std::size_t j = 0; j < d; ++j) total *= per_axis;
  std::vector<double> coords;
  coords.reserve(total * d);
  std::vector<std::size_t> idx(d, 0);
  for (std::size_t t = 0; t < total; ++t) {
    for (std::size_t j = 0; j < d; ++j) {
      const double a = lo[j] - pad, b = hi[j] + pad;
      coords.push_back(a + (b - a) * static_cast<double>(idx[j]) / static_cast<double>(per_axis - 1));
    }
    for (std::size_t j = 0; j < d; ++j) {
      if (++idx[j] < per_axis) break;
      idx[j] = 0;
    }
  }
  return PointSet(d, std::move(coords));
}

namespace {

void require_probes(const PointSet& probes, std::size_t dim) {
  if (probes.empty()) throw ValidationError("probe set is empty");
  if (probes.dim() != dim) throw DimensionMismatch(dim, probes.dim());
}

}  // namespace

double sup_kde_error(const KernelSpec& k, const PointCloud& P, const PointCloud& Q,
                     const PointSet& probes) {
  if (P.dim() != Q.dim()) throw DimensionMismatch(P.dim(), Q.dim());
  require_probes(probes, P.dim());
  double worst = 0.0;
  for (std::size_t i = 0; i < probes.size(); ++i) {
    worst = std::max(worst, std::abs(kde(k, P, probes[i]) - kde(k, Q, probes[i])));
  }
  return worst;
}

KdistErrorTransfer kdist_error_transfer(const KernelSpec& k, const PointCloud& P,
                                        const PointCloud& Q, const PointSet& probes) {
  if (P.dim() != Q.dim()) throw DimensionMismatch(P.dim(), Q.dim());
  require_probes(probes, P.dim());
  const KernelDistanceField fp(k, P), fq(k, Q);
  KdistErrorTransfer r;
  for (std::size_t i = 0; i < probes.size(); ++i) {
    const double a = fp.squared(probes[i]), b = fq.squared(probes[i]);
    r.squared = std::max(r.squared, std::abs(a - b));
    r.plain = std::max(r.plain, std::abs(std::sqrt(a) - std::sqrt(b)));
  }
  return r;
}

}  // namespace kdtopo
