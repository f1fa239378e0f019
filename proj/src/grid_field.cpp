#include "kdtopo/grid_field.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <map>
#include <sstream>
#include <string>
#include <thread>

#include "kdtopo/error.hpp"

namespace kdtopo {

std::string_view to_string(FieldKind kind) { return kind == FieldKind::kde ? "kde" : "kdist"; }

FieldKind parse_field_kind(std::string_view name) {
  if (name == "kde") return FieldKind::kde;
  if (name == "kdist") return FieldKind::kdist;
  throw ValidationError("unknown field kind '" + std::string(name) + "' (expected kde or kdist)");
}

Point GridField::node(std::size_t index) const {
  Point x(dim());
  for (std::size_t a = 0; a < dim(); ++a) {
    x[a] = origin[a] + spacing[a] * static_cast<double>(index % nodes[a]);
    index /= nodes[a];
  }
  return x;
}

void GridField::validate() const {
  if (nodes.empty()) throw ValidationError("grid has no axes");
  if (origin.size() != nodes.size() || spacing.size() != nodes.size()) {
    throw ValidationError("grid origin/spacing/shape lengths disagree");
  }
  std::size_t total = 1;
  for (std::size_t a = 0; a < nodes.size(); ++a) {
    if (nodes[a] == 0) throw ValidationError("grid axis with zero nodes");
    if (!(spacing[a] > 0.0)) throw ValidationError("grid spacing must be positive");
    total *= nodes[a];
  }
  if (total != values.size()) {
    throw ValidationError("grid holds " + std::to_string(values.size()) + " values, shape needs " +
                          std::to_string(total));
  }
}

namespace {

constexpr double kMaxNodes = 2e8;

Box bounding_box(const PointCloud& P) {
  Box b{Point(P.dim(), INFINITY), Point(P.dim(), -INFINITY)};
  for (std::size_t i = 0; i < P.size(); ++i) {
    for (std::size_t a = 0; a < P.dim(); ++a) {
      b.lo[a] = std::min(b.lo[a], P.point(i)[a]);
      b.hi[a] = std::max(b.hi[a], P.point(i)[a]);
    }
  }
  return b;
}

// Uniform buckets of side at least `cell` over the points of P. The side is
// doubled until the bucket count is O(|P|).
class BucketIndex {
 public:
  BucketIndex(const PointCloud& P, double cell) : P_(P), cell_(cell), d_(P.dim()) {
    const Box b = bounding_box(P);
    lo_ = b.lo;
    dims_.resize(d_);
    const double limit = 4.0 * static_cast<double>(P.size()) + 1024.0;
    for (;;) {
      double count = 1.0;
      for (std::size_t a = 0; a < d_; ++a) count *= std::floor((b.hi[a] - b.lo[a]) / cell_) + 1.0;
      if (count <= limit) break;
      cell_ *= 2.0;
    }
    std::size_t total = 1;
    for (std::size_t a = 0; a < d_; ++a) {
      dims_[a] = static_cast<std::size_t>(std::floor((b.hi[a] - b.lo[a]) / cell_)) + 1;
      total *= dims_[a];
    }
    start_.assign(total + 1, 0);
    std::vector<std::size_t> cell_of(P.size());
    for (std::size_t i = 0; i < P.size(); ++i) {
      cell_of[i] = cell_index(P.point(i));
      ++start_[cell_of[i] + 1];
    }
    for (std::size_t c = 0; c < total; ++c) start_[c + 1] += start_[c];
    items_.resize(P.size());
    std::vector<std::size_t> fill(start_.begin(), start_.end() - 1);
    for (std::size_t i = 0; i < P.size(); ++i) items_[fill[cell_of[i]]++] = i;
  }

  // Calls visit(i) for every point in the cells overlapping the cube of
  // half-width cell_ around x, in increasing cell and point order.
  template <class Visit>
  void near(PointView x, Visit&& visit) const {
    std::vector<long> lo(d_), hi(d_), c(d_);
    for (std::size_t a = 0; a < d_; ++a) {
      const double u = (x[a] - lo_[a]) / cell_;
      lo[a] = std::max(0L, static_cast<long>(std::floor(u)) - 1);
      hi[a] = std::min(static_cast<long>(dims_[a]) - 1, static_cast<long>(std::floor(u)) + 1);
      if (lo[a] > hi[a]) return;
      c[a] = lo[a];
    }
    for (;;) {
      std::size_t idx = 0, mul = 1;
      for (std::size_t a = 0; a < d_; ++a) {
        idx += static_cast<std::size_t>(c[a]) * mul;
        mul *= dims_[a];
      }
      for (std::size_t t = start_[idx]; t < start_[idx + 1]; ++t) visit(items_[t]);
      std::size_t a = 0;
      for (; a < d_; ++a) {
        if (++c[a] <= hi[a]) break;
        c[a] = lo[a];
      }
      if (a == d_) break;
    }
  }

 private:
  std::size_t cell_index(PointView p) const {
    std::size_t idx = 0, mul = 1;
    for (std::size_t a = 0; a < d_; ++a) {
      auto k = static_cast<std::size_t>(std::floor((p[a] - lo_[a]) / cell_));
      k = std::min(k, dims_[a] - 1);
      idx += k * mul;
      mul *= dims_[a];
    }
    return idx;
  }

  const PointCloud& P_;
  double cell_;
  std::size_t d_;
  Point lo_;
  std::vector<std::size_t> dims_;
  std::vector<std::size_t> start_;
  std::vector<std::size_t> items_;
};

template <class Fn>
void parallel_nodes(std::size_t n, Fn&& fn) {
  const unsigned hw = std::max(1u, std::thread::hardware_concurrency());
  const std::size_t chunk = 4096;
  std::atomic<std::size_t> next{0};
  auto work = [&]() {
    for (;;) {
      const std::size_t s = next.fetch_add(chunk);
      if (s >= n) break;
      const std::size_t e = std::min(n, s + chunk);
      for (std::size_t i = s; i < e; ++i) fn(i);
    }
  };
  std::vector<std::thread> pool;
  for (unsigned t = 1; t < hw && static_cast<std::size_t>(t) * chunk < n; ++t) pool.emplace_back(work);
  work();
  for (auto& t : pool) t.join();
}

GridField make_grid(const Box& box, const std::vector<double>& spacing,
                    const std::vector<std::size_t>& nodes) {
  GridField F;
  F.origin = box.lo;
  F.spacing = spacing;
  F.nodes = nodes;
  double total = 1.0;
  for (std::size_t n : nodes) total *= static_cast<double>(n);
  if (total > kMaxNodes) {
    throw NumericError("grid would have " + std::to_string(static_cast<long long>(total)) +
                       " nodes; use a larger eps or a smaller box");
  }
  F.values.assign(static_cast<std::size_t>(total), 0.0);
  return F;
}

}  // namespace

GridField eval_grid(const KernelSpec& k, const PointCloud& P, double eps,
                    const std::optional<Box>& bbox, FieldKind kind) {
  if (!(eps > 0.0) || !std::isfinite(eps)) throw ValidationError("grid eps must be positive");
  const std::size_t d = P.dim();
  const double cutoff = k.truncation_radius(eps);
  const bool disabled = !(cutoff > 0.0);

  Box box;
  if (bbox) {
    box = *bbox;
    if (box.lo.size() != d || box.hi.size() != d) throw DimensionMismatch(d, box.lo.size());
    for (std::size_t a = 0; a < d; ++a) {
      if (!(box.hi[a] >= box.lo[a])) throw ValidationError("bounding box has hi < lo");
    }
  } else {
    box = bounding_box(P);
    const double pad = disabled ? 3.0 * k.sigma() : cutoff;
    for (std::size_t a = 0; a < d; ++a) {
      box.lo[a] -= pad;
      box.hi[a] += pad;
    }
  }
  const double h = eps / (2.0 * std::sqrt(static_cast<double>(d)));
  std::vector<std::size_t> nodes(d);
  for (std::size_t a = 0; a < d; ++a) {
    const double cells = std::ceil((box.hi[a] - box.lo[a]) / h);
    if (cells > kMaxNodes) throw NumericError("grid axis too long for the requested eps");
    nodes[a] = static_cast<std::size_t>(cells) + 1;
  }
  GridField F = make_grid(box, std::vector<double>(d, h), nodes);
  F.meta.kind = kind;
  F.meta.family = k.family();
  F.meta.sigma = k.sigma();
  F.meta.eps = eps;
  F.meta.truncation_disabled = disabled;
  F.meta.truncation_radius = disabled ? INFINITY : cutoff;

  const KernelDistanceField field(k, P);
  F.meta.c_mu = field.c_mu();
  const double self = k.self_value();
  const double self_deficit = self - field.self_kappa();
  if (disabled) {
    parallel_nodes(F.size(), [&](std::size_t i) {
      const Point x = F.node(i);
      F.values[i] = kind == FieldKind::kde ? field.kde(x) : field(x);
    });
    return F;
  }
  // Deficit bookkeeping for the far points: they contribute K ~ 0, i.e. a
  // deficit of K(x,x), so d^2 = 2 (sum_near w g + w_far K(x,x)) - self_deficit.
  const double cut2 = cutoff * cutoff;
  const BucketIndex index(P, cutoff);
  parallel_nodes(F.size(), [&](std::size_t i) {
    const Point x = F.node(i);
    double kde_sum = 0.0, deficit_sum = 0.0, near_weight = 0.0;
    index.near(x, [&](std::size_t p) {
      const double r2 = squared_distance(P.point(p), x);
      if (r2 > cut2) return;
      const double w = P.weight(p);
      near_weight += w;
      if (kind == FieldKind::kde) {
        kde_sum += w * k.profile(r2);
      } else {
        deficit_sum += w * k.deficit(r2);
      }
    });
    if (kind == FieldKind::kde) {
      F.values[i] = kde_sum;
    } else {
      const double far = std::max(0.0, 1.0 - near_weight);
      const double sq = 2.0 * (deficit_sum + far * self) - self_deficit;
      F.values[i] = std::sqrt(std::max(0.0, sq));
    }
  });
  return F;
}

GridField eval_grid_nodes(const KernelSpec& k, const PointCloud& P, const Box& bbox,
                          const std::vector<std::size_t>& nodes, FieldKind kind) {
  const std::size_t d = P.dim();
  if (bbox.lo.size() != d || bbox.hi.size() != d || nodes.size() != d) {
    throw DimensionMismatch(d, nodes.size());
  }
  std::vector<double> spacing(d);
  for (std::size_t a = 0; a < d; ++a) {
    if (nodes[a] < 2) throw ValidationError("explicit grids need at least 2 nodes per axis");
    if (!(bbox.hi[a] > bbox.lo[a])) throw ValidationError("bounding box must have positive extent");
    spacing[a] = (bbox.hi[a] - bbox.lo[a]) / static_cast<double>(nodes[a] - 1);
  }
  GridField F = make_grid(bbox, spacing, nodes);
  F.meta.kind = kind;
  F.meta.family = k.family();
  F.meta.sigma = k.sigma();
  F.meta.eps = 0.0;
  F.meta.truncation_disabled = true;
  F.meta.truncation_radius = INFINITY;
  const KernelDistanceField field(k, P);
  F.meta.c_mu = field.c_mu();
  parallel_nodes(F.size(), [&](std::size_t i) {
    const Point x = F.node(i);
    F.values[i] = kind == FieldKind::kde ? field.kde(x) : field(x);
  });
  return F;
}

std::vector<bool> level_mask(const GridField& F, double r, LevelMode mode) {
  std::vector<bool> m(F.size());
  for (std::size_t i = 0; i < F.size(); ++i) {
    m[i] = mode == LevelMode::sub ? F.values[i] <= r : F.values[i] >= r;
  }
  return m;
}

// Marching squares ------------------------------------------------------------

namespace {

struct EdgePoint {
  double x, y;
};

}  // namespace

std::vector<Contour> export_contours(const GridField& F, const std::vector<double>& levels) {
  F.validate();
  if (F.dim() != 2) throw ValidationError("contours are only available for 2-D grids");
  const std::size_t nx = F.nodes[0], ny = F.nodes[1];
  auto val = [&](std::size_t i, std::size_t j) { return F.values[i + nx * j]; };
  // grid edge ids: 2*(i + nx*j) for (i,j)-(i+1,j), +1 for (i,j)-(i,j+1)
  auto hid = [&](std::size_t i, std::size_t j) { return 2 * (i + nx * j); };
  auto vid = [&](std::size_t i, std::size_t j) { return 2 * (i + nx * j) + 1; };

  std::vector<Contour> out;
  for (double level : levels) {
    Contour c;
    c.level = level;
    std::map<std::size_t, EdgePoint> pts;
    std::map<std::size_t, std::vector<std::size_t>> adj;
    auto point_on = [&](std::size_t id) {
      if (pts.count(id)) return;
      const std::size_t base = id / 2, i = base % nx, j = base / nx;
      const bool horiz = id % 2 == 0;
      const double a = val(i, j), b = horiz ? val(i + 1, j) : val(i, j + 1);
      const double t = (level - a) / (b - a);
      const double x0 = F.origin[0] + F.spacing[0] * static_cast<double>(i);
      const double y0 = F.origin[1] + F.spacing[1] * static_cast<double>(j);
      pts[id] = horiz ? EdgePoint{x0 + t * F.spacing[0], y0} : EdgePoint{x0, y0 + t * F.spacing[1]};
    };
    auto link = [&](std::size_t a, std::size_t b) {
      point_on(a);
      point_on(b);
      adj[a].push_back(b);
      adj[b].push_back(a);
    };
    for (std::size_t j = 0; j + 1 < ny; ++j) {
      for (std::size_t i = 0; i + 1 < nx; ++i) {
        const bool v0 = val(i, j) > level, v1 = val(i + 1, j) > level;
        const bool v2 = val(i + 1, j + 1) > level, v3 = val(i, j + 1) > level;
        const int code = v0 | v1 << 1 | v2 << 2 | v3 << 3;
        if (code == 0 || code == 15) continue;
        const std::size_t bottom = hid(i, j), right = vid(i + 1, j);
        const std::size_t top = hid(i, j + 1), left = vid(i, j);
        switch (code) {
          case 1: case 14: link(left, bottom); break;
          case 2: case 13: link(bottom, right); break;
          case 3: case 12: link(left, right); break;
          case 4: case 11: link(right, top); break;
          case 6: case 9: link(bottom, top); break;
          case 7: case 8: link(left, top); break;
          case 5: case 10: {
            const double center = 0.25 * (val(i, j) + val(i + 1, j) + val(i + 1, j + 1) + val(i, j + 1));
            const bool center_in = center > level;
            // corners 0 and 2 inside for code 5
            if ((code == 5) == center_in) {
              link(left, top);
              link(bottom, right);
            } else {
              link(left, bottom);
              link(right, top);
            }
            break;
          }
          default: break;
        }
      }
    }
    std::map<std::size_t, bool> used;
    auto walk = [&](std::size_t start) {
      Polyline line;
      std::size_t prev = static_cast<std::size_t>(-1), cur = start;
      for (;;) {
        used[cur] = true;
        line.emplace_back(pts[cur].x, pts[cur].y);
        std::size_t nxt = static_cast<std::size_t>(-1);
        for (std::size_t n : adj[cur]) {
          if (n != prev && !used[n]) {
            nxt = n;
            break;
          }
        }
        if (nxt == static_cast<std::size_t>(-1)) {
          // closed if we are back next to the start
          for (std::size_t n : adj[cur]) {
            if (n == start && n != prev && line.size() > 2) line.emplace_back(pts[start].x, pts[start].y);
          }
          break;
        }
        prev = cur;
        cur = nxt;
      }
      c.lines.push_back(std::move(line));
    };
    for (const auto& [id, nb] : adj) {
      if (nb.size() == 1 && !used[id]) walk(id);
    }
    for (const auto& [id, nb] : adj) {
      if (!used[id]) walk(id);
    }
    out.push_back(std::move(c));
  }
  return out;
}

std::string contours_to_svg(const GridField& F, const std::vector<Contour>& contours) {
  if (F.dim() != 2) throw ValidationError("contours are only available for 2-D grids");
  const double w = F.spacing[0] * static_cast<double>(F.nodes[0] - 1);
  const double h = F.spacing[1] * static_cast<double>(F.nodes[1] - 1);
  const double scale = 800.0 / std::max(w, h);
  std::ostringstream os;
  os.precision(10);
  os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << w * scale << "\" height=\""
     << h * scale << "\" viewBox=\"0 0 " << w * scale << ' ' << h * scale << "\">\n";
  os << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  for (std::size_t c = 0; c < contours.size(); ++c) {
    os << "<g stroke=\"hsl(" << (c * 47) % 360 << ",70%,40%)\" fill=\"none\" stroke-width=\"1.5\""
       << " data-level=\"" << contours[c].level << "\">\n";
    for (const auto& line : contours[c].lines) {
      os << "<polyline points=\"";
      for (std::size_t t = 0; t < line.size(); ++t) {
        if (t) os << ' ';
        os << (line[t].first - F.origin[0]) * scale << ','
           << (h - (line[t].second - F.origin[1])) * scale;
      }
      os << "\"/>\n";
    }
    os << "</g>\n";
  }
  os << "</svg>\n";
  return os.str();
}

}  // namespace kdtopo
