#pragma once

#include <cstddef>
#include <limits>
#include <vector>

#include "kdtopo/filtration.hpp"
#include "kdtopo/grid_field.hpp"

namespace kdtopo {

constexpr double kInfinity = std::numeric_limits<double>::infinity();

struct PersistencePair {
  double birth = 0.0;
  double death = kInfinity;
  bool essential() const noexcept { return death == kInfinity; }
  double persistence() const noexcept { return death - birth; }
  bool operator==(const PersistencePair&) const = default;
};

class PersistenceDiagram {
 public:
  PersistenceDiagram() = default;
  explicit PersistenceDiagram(int max_dim) : dims_(static_cast<std::size_t>(max_dim + 1)) {}

  int max_dim() const noexcept { return static_cast<int>(dims_.size()) - 1; }
  const std::vector<PersistencePair>& pairs(int dim) const;
  void add(int dim, double birth, double death);
  std::size_t essential_count(int dim) const;
  /// Sorts each dimension by (birth, death).
  void sort();

 private:
  std::vector<std::vector<PersistencePair>> dims_;
};

struct PersistenceOptions {
  /// finite pairs with persistence <= this are dropped
  double min_persistence = 0.0;
};

/// Z/2 persistence of a filtered complex, by reducing the coboundary matrix
/// in increasing dimension with clearing. Reports dimensions 0..max_dim-1
/// (the top dimension of a truncated complex has no reliable classes); a
/// complex of dimension 0 reports H0 only.
PersistenceDiagram compute_persistence(const FilteredComplex& C,
                                       const PersistenceOptions& opt = {});

/// Persistence of the lower-star filtration of the Freudenthal triangulation
/// of the grid. superlevel=true computes the sublevel diagram of -F, so pairs
/// are reported in negated coordinates. Reports dimensions 0..d-1.
PersistenceDiagram lower_star_grid_persistence(const GridField& F, bool superlevel = false,
                                               const PersistenceOptions& opt = {});

/// Freudenthal triangulation of the grid with lower-star values, as an
/// explicit complex. Meant for small grids and for cross-checks.
FilteredComplex freudenthal_complex(const GridField& F, bool superlevel = false);

/// Bottleneck distance restricted to one homology dimension. Essential points
/// only match essential points; unequal counts give +infinity.
double bottleneck(const PersistenceDiagram& a, const PersistenceDiagram& b, int dim);

/// Clamps births and deaths below at `floor`, then takes natural logs.
PersistenceDiagram log_transform(const PersistenceDiagram& d, double floor);

}  // namespace kdtopo
