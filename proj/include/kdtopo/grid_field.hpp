#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include "kdtopo/kernels.hpp"

namespace kdtopo {

enum class FieldKind { kde, kdist };
std::string_view to_string(FieldKind kind);
FieldKind parse_field_kind(std::string_view name);

struct Box {
  Point lo;
  Point hi;
};

struct GridMeta {
  FieldKind kind = FieldKind::kdist;
  KernelFamily family = KernelFamily::gaussian;
  double sigma = 0.0;
  double eps = 0.0;
  /// Cutoff radius used for per-node truncation; infinite when disabled.
  double truncation_radius = 0.0;
  /// eps was too large for a positive truncation radius; every node was
  /// evaluated exactly.
  bool truncation_disabled = false;
  /// sup of d^K_P (c_mu), recorded for kdist fields.
  double c_mu = 0.0;
};

/// Regular grid of function values. Nodes are stored with axis 0 varying
/// fastest: index = i0 + n0*(i1 + n1*(i2 + ...)).
struct GridField {
  Point origin;
  std::vector<double> spacing;            ///< per axis
  std::vector<std::size_t> nodes;         ///< per axis, each >= 1
  std::vector<double> values;
  GridMeta meta;

  std::size_t dim() const noexcept { return nodes.size(); }
  std::size_t size() const noexcept { return values.size(); }
  Point node(std::size_t index) const;
  void validate() const;
};

/// Grid over `bbox` (default: bounding box of P padded by the truncation
/// radius) with edge length eps/(2 sqrt(d)). Each node drops the points of P
/// farther than the truncation radius, which moves a kde value by at most eps
/// (a kdist value squared by at most 2 eps).
GridField eval_grid(const KernelSpec& k, const PointCloud& P, double eps,
                    const std::optional<Box>& bbox, FieldKind kind);

/// Grid with an explicit node count per axis over `bbox`, exact evaluation.
GridField eval_grid_nodes(const KernelSpec& k, const PointCloud& P, const Box& bbox,
                          const std::vector<std::size_t>& nodes, FieldKind kind);

enum class LevelMode { sub, super };

/// sub: value <= r; super: value >= r.
std::vector<bool> level_mask(const GridField& F, double r, LevelMode mode);

using Polyline = std::vector<std::pair<double, double>>;

struct Contour {
  double level = 0.0;
  std::vector<Polyline> lines;  ///< closed lines repeat their first vertex
};

/// Marching squares on a 2-D grid.
std::vector<Contour> export_contours(const GridField& F, const std::vector<double>& levels);

std::string contours_to_svg(const GridField& F, const std::vector<Contour>& contours);

}  // namespace kdtopo
