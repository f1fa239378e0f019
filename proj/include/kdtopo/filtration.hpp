#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "kdtopo/kernels.hpp"
#include "kdtopo/power_distance.hpp"

namespace kdtopo {

using Vertex = std::uint32_t;

/// Smallest alpha at which the power balls B(p, sqrt(alpha^2 - w_p^2)) and
/// B(q, sqrt(alpha^2 - w_q^2)) intersect, for sites at distance ell.
double edge_time(double ell, double w_p, double w_q);

enum class SiteMetricKind { kernel, euclidean };

/// Dense symmetric matrix with zero diagonal.
class SymmetricMatrix {
 public:
  explicit SymmetricMatrix(std::size_t n) : n_(n), data_(n * n, 0.0) {}
  std::size_t size() const noexcept { return n_; }
  double operator()(std::size_t i, std::size_t j) const { return data_[i * n_ + j]; }
  void set(std::size_t i, std::size_t j, double v) {
    data_[i * n_ + j] = v;
    data_[j * n_ + i] = v;
  }

 private:
  std::size_t n_;
  std::vector<double> data_;
};

/// Pairwise distances between sites: D_K between Dirac masses, or Euclidean.
SymmetricMatrix site_metric(const KernelSpec& k, const WeightedSiteSet& S,
                            SiteMetricKind kind = SiteMetricKind::kernel);

struct SimplexInput {
  std::vector<Vertex> vertices;
  double value = 0.0;
};

/// Simplices sorted by (value, dim, lexicographic vertices), each proper face
/// present with a value no larger than the simplex's.
class FilteredComplex {
 public:
  FilteredComplex() = default;

  /// Sorts, canonicalizes vertex order and validates monotonicity. Throws
  /// ValidationError if a face is missing, a face comes later, or a simplex
  /// repeats.
  static FilteredComplex from_simplices(std::vector<SimplexInput> simplices);

  std::size_t size() const noexcept { return value_.size(); }
  int max_dim() const noexcept { return max_dim_; }
  int dim(std::size_t i) const {
    return static_cast<int>(offset_[i + 1] - offset_[i]) - 1;
  }
  double value(std::size_t i) const { return value_[i]; }
  std::span<const Vertex> vertices(std::size_t i) const {
    return {verts_.data() + offset_[i], offset_[i + 1] - offset_[i]};
  }
  std::size_t count(int d) const;

  /// Filtration indices of the codimension-1 faces of simplex i, in the order
  /// obtained by dropping vertex 0, 1, ...
  std::vector<std::size_t> facets(std::size_t i) const;

  /// Index of the simplex with exactly these (sorted) vertices, or size().
  std::size_t find(std::span<const Vertex> vertices) const;

 private:
  void build_index();

  int max_dim_ = -1;
  std::vector<Vertex> verts_;
  std::vector<std::size_t> offset_{0};
  std::vector<double> value_;
  /// per dimension: simplex indices sorted lexicographically by vertices
  std::vector<std::vector<std::size_t>> lex_;
};

/// Weighted Rips filtration: vertices at w(p), edges at
/// edge_time(metric(p,q), w_p, w_q) when at most alpha_max, cliques up to
/// max_dim at their largest edge value.
FilteredComplex weighted_rips(const KernelSpec& k, const WeightedSiteSet& S, int max_dim,
                              double alpha_max,
                              SiteMetricKind metric = SiteMetricKind::kernel);

/// Same, from a precomputed distance matrix.
FilteredComplex weighted_rips(const SymmetricMatrix& dist, const std::vector<double>& weights,
                              int max_dim, double alpha_max);

/// c_mu = sqrt(kappa(P,P) + K(x,x)), the largest value d^K_P takes.
double default_alpha_max(const KernelSpec& k, const PointCloud& P);

}  // namespace kdtopo
