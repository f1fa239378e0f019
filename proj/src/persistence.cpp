#include "kdtopo/persistence.hpp"

#include <algorithm>
#include <array>
#include <bit>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <queue>
#include <string>

#include "kdtopo/error.hpp"

namespace kdtopo {

const std::vector<PersistencePair>& PersistenceDiagram::pairs(int dim) const {
  static const std::vector<PersistencePair> empty;
  if (dim < 0 || dim > max_dim()) return empty;
  return dims_[static_cast<std::size_t>(dim)];
}

void PersistenceDiagram::add(int dim, double birth, double death) {
  if (dim < 0) throw ValidationError("negative homology dimension");
  if (std::isnan(birth) || std::isnan(death)) throw ValidationError("NaN in persistence pair");
  if (death < birth) throw ValidationError("persistence pair dies before it is born");
  if (dim > max_dim()) dims_.resize(static_cast<std::size_t>(dim + 1));
  dims_[static_cast<std::size_t>(dim)].push_back({birth, death});
}

std::size_t PersistenceDiagram::essential_count(int dim) const {
  const auto& p = pairs(dim);
  return static_cast<std::size_t>(
      std::count_if(p.begin(), p.end(), [](const PersistencePair& q) { return q.essential(); }));
}

void PersistenceDiagram::sort() {
  for (auto& v : dims_) {
    std::sort(v.begin(), v.end(), [](const PersistencePair& a, const PersistencePair& b) {
      return a.birth != b.birth ? a.birth < b.birth : a.death < b.death;
    });
  }
}

// Complex persistence ---------------------------------------------------------

PersistenceDiagram compute_persistence(const FilteredComplex& C, const PersistenceOptions& opt) {
  const std::size_t N = C.size();
  if (N == 0) return PersistenceDiagram(0);
  if (N >= std::numeric_limits<std::uint32_t>::max()) {
    throw NumericError("complex too large for 32-bit simplex indices");
  }
  const int top = C.max_dim();
  const int report = top == 0 ? 0 : top - 1;
  PersistenceDiagram dg(report);

  std::vector<std::vector<std::uint32_t>> by_dim(static_cast<std::size_t>(top + 1));
  std::vector<std::uint32_t> local(N);
  for (std::size_t i = 0; i < N; ++i) {
    auto& v = by_dim[static_cast<std::size_t>(C.dim(i))];
    local[i] = static_cast<std::uint32_t>(v.size());
    v.push_back(static_cast<std::uint32_t>(i));
  }

  // cleared[j]: simplex j of the current dimension was a pivot one dimension down
  std::vector<char> cleared(by_dim[0].size(), 0);
  std::vector<std::uint32_t> scratch;
  for (int k = 0; k <= report; ++k) {
    const auto& cols = by_dim[static_cast<std::size_t>(k)];
    const bool has_up = k + 1 <= top;
    const std::vector<std::uint32_t> none;
    const auto& rows = has_up ? by_dim[static_cast<std::size_t>(k + 1)] : none;

    // coboundary in CSR form; cofaces come out in increasing filtration order
    std::vector<std::size_t> start(cols.size() + 1, 0);
    std::vector<std::uint32_t> entries;
    if (has_up) {
      std::vector<std::vector<std::size_t>> facets(rows.size());
      for (std::size_t r = 0; r < rows.size(); ++r) {
        facets[r] = C.facets(rows[r]);
        for (std::size_t f : facets[r]) ++start[local[f] + 1];
      }
      for (std::size_t c = 0; c < cols.size(); ++c) start[c + 1] += start[c];
      entries.resize(start.back());
      std::vector<std::size_t> fill(start.begin(), start.end() - 1);
      for (std::size_t r = 0; r < rows.size(); ++r) {
        for (std::size_t f : facets[r]) entries[fill[local[f]]++] = static_cast<std::uint32_t>(r);
      }
    }

    std::vector<std::int64_t> owner(rows.size(), -1);
    std::vector<std::vector<std::uint32_t>> reduced(cols.size());
    std::vector<char> next_cleared(rows.size(), 0);
    std::vector<std::uint32_t> col;
    for (std::size_t c = cols.size(); c-- > 0;) {
      if (cleared[c]) continue;
      col.assign(entries.begin() + static_cast<std::ptrdiff_t>(start[c]),
                 entries.begin() + static_cast<std::ptrdiff_t>(start[c + 1]));
      while (!col.empty()) {
        const std::int64_t o = owner[col.front()];
        if (o < 0) break;
        const auto& other = reduced[static_cast<std::size_t>(o)];
        scratch.clear();
        std::set_symmetric_difference(col.begin(), col.end(), other.begin(), other.end(),
                                      std::back_inserter(scratch));
        col.swap(scratch);
      }
      const double birth = C.value(cols[c]);
      if (col.empty()) {
        dg.add(k, birth, kInfinity);
        continue;
      }
      const std::uint32_t piv = col.front();
      owner[piv] = static_cast<std::int64_t>(c);
      next_cleared[piv] = 1;
      const double death = C.value(rows[piv]);
      if (death - birth > opt.min_persistence) dg.add(k, birth, death);
      reduced[c] = std::move(col);
      col = {};
    }
    cleared.swap(next_cleared);
  }
  dg.sort();
  return dg;
}

// Grid persistence ------------------------------------------------------------

namespace {

struct UnionFind {
  std::vector<std::uint32_t> parent;
  explicit UnionFind(std::size_t n) : parent(n) {
    std::iota(parent.begin(), parent.end(), std::uint32_t{0});
  }
  std::uint32_t find(std::uint32_t x) {
    while (parent[x] != x) {
      parent[x] = parent[parent[x]];
      x = parent[x];
    }
    return x;
  }
};

std::vector<double> signed_values(const GridField& F, bool superlevel) {
  std::vector<double> g(F.values);
  for (double& v : g) {
    if (!std::isfinite(v)) throw ValidationError("grid values must be finite (got NaN or inf)");
    if (superlevel) v = -v;
  }
  return g;
}

std::vector<std::uint32_t> vertex_ranks(const std::vector<double>& g) {
  std::vector<std::uint32_t> order(g.size());
  std::iota(order.begin(), order.end(), std::uint32_t{0});
  std::sort(order.begin(), order.end(), [&](std::uint32_t a, std::uint32_t b) {
    return g[a] != g[b] ? g[a] < g[b] : a < b;
  });
  std::vector<std::uint32_t> rank(g.size());
  for (std::uint32_t r = 0; r < order.size(); ++r) rank[order[r]] = r;
  return rank;
}

// Grid with the unit axes; degenerate 1-node axes are tolerated.
struct Grid2 {
  std::size_t nx, ny;
  std::size_t id(std::size_t i, std::size_t j) const { return i + nx * j; }
  std::size_t cells_x() const { return nx > 1 ? nx - 1 : 0; }
  std::size_t cells_y() const { return ny > 1 ? ny - 1 : 0; }
  std::size_t triangles() const { return 2 * cells_x() * cells_y(); }
  std::size_t tri(std::size_t ci, std::size_t cj, int t) const {
    return 2 * (ci + cells_x() * cj) + static_cast<std::size_t>(t);
  }
  // t=0: (i,j),(i+1,j),(i+1,j+1); t=1: (i,j),(i,j+1),(i+1,j+1)
  std::array<std::size_t, 3> tri_vertices(std::size_t ci, std::size_t cj, int t) const {
    if (t == 0) return {id(ci, cj), id(ci + 1, cj), id(ci + 1, cj + 1)};
    return {id(ci, cj), id(ci, cj + 1), id(ci + 1, cj + 1)};
  }
};

void lower_star_2d(const std::vector<double>& g, std::size_t nx, std::size_t ny,
                   const PersistenceOptions& opt, PersistenceDiagram& dg) {
  const Grid2 G{nx, ny};
  const std::size_t n = nx * ny;
  const std::vector<std::uint32_t> rank = vertex_ranks(g);
  std::vector<std::uint32_t> order(n);
  for (std::uint32_t v = 0; v < n; ++v) order[rank[v]] = v;

  auto neighbors = [&](std::size_t v, auto&& visit) {
    const std::size_t i = v % nx, j = v / nx;
    if (i + 1 < nx) visit(G.id(i + 1, j));
    if (i >= 1) visit(G.id(i - 1, j));
    if (j + 1 < ny) visit(G.id(i, j + 1));
    if (j >= 1) visit(G.id(i, j - 1));
    if (i + 1 < nx && j + 1 < ny) visit(G.id(i + 1, j + 1));
    if (i >= 1 && j >= 1) visit(G.id(i - 1, j - 1));
  };

  // H0: elder rule over vertices in increasing value.
  {
    UnionFind uf(n);
    // the root of each component is its oldest (lowest rank) vertex
    for (std::uint32_t r = 0; r < n; ++r) {
      const std::uint32_t v = order[r];
      neighbors(v, [&](std::size_t u) {
        if (rank[u] > r) return;
        std::uint32_t a = uf.find(v), b = uf.find(static_cast<std::uint32_t>(u));
        if (a == b) return;
        if (rank[a] < rank[b]) std::swap(a, b);  // a is younger
        if (g[v] - g[a] > opt.min_persistence) dg.add(0, g[a], g[v]);
        uf.parent[a] = b;
      });
    }
    dg.add(0, g[order[0]], kInfinity);
  }
  if (G.triangles() == 0) return;

  // H1: dual union-find over triangles plus one outer node, sweeping values
  // downward. An edge joining two dual components pairs with the component
  // born later in the sweep.
  const std::size_t T = G.triangles();
  const std::uint32_t outer = static_cast<std::uint32_t>(T);
  UnionFind uf(T + 1);
  std::vector<std::int64_t> born(T + 1, -1);  // sweep time; outer node is -1
  std::vector<double> born_value(T + 1, kInfinity);
  std::int64_t clock = 0;
  auto tri_max_rank = [&](std::size_t ci, std::size_t cj, int t) {
    const auto vs = G.tri_vertices(ci, cj, t);
    return std::max({rank[vs[0]], rank[vs[1]], rank[vs[2]]});
  };
  auto edge_sides = [&](std::size_t a, std::size_t b) {
    // a, b adjacent; returns the two triangles (or outer) sharing edge ab
    if (a > b) std::swap(a, b);
    const std::size_t i = a % nx, j = a / nx;
    std::array<std::uint32_t, 2> s{outer, outer};
    if (b == a + 1) {  // horizontal
      if (j >= 1) s[0] = static_cast<std::uint32_t>(G.tri(i, j - 1, 1));
      if (j + 1 < ny) s[1] = static_cast<std::uint32_t>(G.tri(i, j, 0));
    } else if (b == a + nx) {  // vertical
      if (i >= 1) s[0] = static_cast<std::uint32_t>(G.tri(i - 1, j, 0));
      if (i + 1 < nx) s[1] = static_cast<std::uint32_t>(G.tri(i, j, 1));
    } else {  // diagonal
      s[0] = static_cast<std::uint32_t>(G.tri(i, j, 0));
      s[1] = static_cast<std::uint32_t>(G.tri(i, j, 1));
    }
    return s;
  };
  for (std::uint32_t r = static_cast<std::uint32_t>(n); r-- > 0;) {
    const std::uint32_t v = order[r];
    const std::size_t i = v % nx, j = v / nx;
    const std::array<std::array<long, 3>, 6> incident{{{0, 0, 0},
                                                       {0, 0, 1},
                                                       {-1, 0, 0},
                                                       {0, -1, 1},
                                                       {-1, -1, 0},
                                                       {-1, -1, 1}}};
    for (const auto& c : incident) {
      const long ci = static_cast<long>(i) + c[0], cj = static_cast<long>(j) + c[1];
      if (ci < 0 || cj < 0 || ci >= static_cast<long>(G.cells_x()) ||
          cj >= static_cast<long>(G.cells_y())) {
        continue;
      }
      const int t = static_cast<int>(c[2]);
      if (tri_max_rank(static_cast<std::size_t>(ci), static_cast<std::size_t>(cj), t) != r) continue;
      const std::size_t id = G.tri(static_cast<std::size_t>(ci), static_cast<std::size_t>(cj), t);
      born[id] = clock++;
      born_value[id] = g[v];
    }
    neighbors(v, [&](std::size_t u) {
      if (rank[u] > r) return;
      const auto s = edge_sides(v, u);
      std::uint32_t a = uf.find(s[0]), b = uf.find(s[1]);
      if (a == b) return;
      if (born[a] < born[b]) std::swap(a, b);  // a is the later-born component
      if (born_value[a] - g[v] > opt.min_persistence) dg.add(1, g[v], born_value[a]);
      uf.parent[a] = b;
    });
  }
}

void lower_star_1d(const std::vector<double>& g, const PersistenceOptions& opt,
                   PersistenceDiagram& dg) {
  const std::size_t n = g.size();
  const std::vector<std::uint32_t> rank = vertex_ranks(g);
  std::vector<std::uint32_t> order(n);
  for (std::uint32_t v = 0; v < n; ++v) order[rank[v]] = v;
  UnionFind uf(n);
  for (std::uint32_t r = 0; r < n; ++r) {
    const std::uint32_t v = order[r];
    for (long du : {-1L, 1L}) {
      const long u = static_cast<long>(v) + du;
      if (u < 0 || u >= static_cast<long>(n) || rank[static_cast<std::size_t>(u)] > r) continue;
      std::uint32_t a = uf.find(v), b = uf.find(static_cast<std::uint32_t>(u));
      if (a == b) continue;
      if (rank[a] < rank[b]) std::swap(a, b);
      if (g[v] - g[a] > opt.min_persistence) dg.add(0, g[a], g[v]);
      uf.parent[a] = b;
    }
  }
  dg.add(0, g[order[0]], kInfinity);
}

}  // namespace

FilteredComplex freudenthal_complex(const GridField& F, bool superlevel) {
  F.validate();
  const std::vector<double> g = signed_values(F, superlevel);
  const std::size_t d = F.dim();
  std::vector<std::size_t> active;
  for (std::size_t a = 0; a < d; ++a) {
    if (F.nodes[a] > 1) active.push_back(a);
  }
  std::vector<std::size_t> stride(d, 1);
  for (std::size_t a = 1; a < d; ++a) stride[a] = stride[a - 1] * F.nodes[a - 1];

  std::vector<std::vector<Vertex>> all;
  for (std::size_t v = 0; v < F.size(); ++v) all.push_back({static_cast<Vertex>(v)});
  std::size_t cells = 1;
  for (std::size_t a : active) cells *= F.nodes[a] - 1;
  std::vector<std::size_t> perm(active.size());
  std::vector<std::size_t> z(active.size(), 0);
  for (std::size_t c = 0; c < cells && !active.empty(); ++c) {
    std::size_t base = 0;
    for (std::size_t t = 0; t < active.size(); ++t) base += z[t] * stride[active[t]];
    std::iota(perm.begin(), perm.end(), std::size_t{0});
    do {
      std::vector<Vertex> path{static_cast<Vertex>(base)};
      std::size_t cur = base;
      for (std::size_t t : perm) {
        cur += stride[active[t]];
        path.push_back(static_cast<Vertex>(cur));
      }
      const std::size_t m = path.size();
      for (std::size_t mask = 1; mask < (std::size_t{1} << m); ++mask) {
        if (std::popcount(mask) < 2) continue;
        std::vector<Vertex> s;
        for (std::size_t b = 0; b < m; ++b) {
          if (mask >> b & 1U) s.push_back(path[b]);
        }
        std::sort(s.begin(), s.end());
        all.push_back(std::move(s));
      }
    } while (std::next_permutation(perm.begin(), perm.end()));
    for (std::size_t t = 0; t < active.size(); ++t) {
      if (++z[t] < F.nodes[active[t]] - 1) break;
      z[t] = 0;
    }
  }
  std::sort(all.begin(), all.end());
  all.erase(std::unique(all.begin(), all.end()), all.end());
  std::vector<SimplexInput> simplices;
  simplices.reserve(all.size());
  for (auto& s : all) {
    double val = -kInfinity;
    for (Vertex v : s) val = std::max(val, g[v]);
    simplices.push_back({std::move(s), val});
  }
  return FilteredComplex::from_simplices(std::move(simplices));
}

PersistenceDiagram lower_star_grid_persistence(const GridField& F, bool superlevel,
                                               const PersistenceOptions& opt) {
  F.validate();
  const std::vector<double> g = signed_values(F, superlevel);
  const std::size_t d = F.dim();
  if (d == 1) {
    PersistenceDiagram dg(0);
    lower_star_1d(g, opt, dg);
    dg.sort();
    return dg;
  }
  if (d == 2) {
    if (F.size() >= std::numeric_limits<std::uint32_t>::max() / 2) {
      throw NumericError("grid too large for 32-bit indices");
    }
    PersistenceDiagram dg(1);
    lower_star_2d(g, F.nodes[0], F.nodes[1], opt, dg);
    dg.sort();
    return dg;
  }
  PersistenceDiagram dg = compute_persistence(freudenthal_complex(F, superlevel), opt);
  PersistenceDiagram out(static_cast<int>(d) - 1);
  for (int k = 0; k <= std::min(dg.max_dim(), static_cast<int>(d) - 1); ++k) {
    for (const auto& p : dg.pairs(k)) out.add(k, p.birth, p.death);
  }
  out.sort();
  return out;
}

// Bottleneck ------------------------------------------------------------------

namespace {

// Hopcroft-Karp on a bipartite graph given by an adjacency callback.
class Matcher {
 public:
  Matcher(std::size_t n, std::vector<std::vector<std::uint32_t>> adj)
      : n_(n), adj_(std::move(adj)), match_l_(n, kNone), match_r_(n, kNone), dist_(n) {}

  std::size_t run() {
    std::size_t matched = 0;
    while (bfs()) {
      for (std::size_t u = 0; u < n_; ++u) {
        if (match_l_[u] == kNone && dfs(static_cast<std::uint32_t>(u))) ++matched;
      }
    }
    return matched;
  }

 private:
  static constexpr std::uint32_t kNone = std::numeric_limits<std::uint32_t>::max();

  bool bfs() {
    std::queue<std::uint32_t> q;
    bool found = false;
    for (std::size_t u = 0; u < n_; ++u) {
      if (match_l_[u] == kNone) {
        dist_[u] = 0;
        q.push(static_cast<std::uint32_t>(u));
      } else {
        dist_[u] = kNone;
      }
    }
    while (!q.empty()) {
      const std::uint32_t u = q.front();
      q.pop();
      for (std::uint32_t v : adj_[u]) {
        const std::uint32_t w = match_r_[v];
        if (w == kNone) {
          found = true;
        } else if (dist_[w] == kNone) {
          dist_[w] = dist_[u] + 1;
          q.push(w);
        }
      }
    }
    return found;
  }

  bool dfs(std::uint32_t u) {
    for (std::uint32_t v : adj_[u]) {
      const std::uint32_t w = match_r_[v];
      if (w == kNone || (dist_[w] == dist_[u] + 1 && dfs(w))) {
        match_l_[u] = v;
        match_r_[v] = u;
        return true;
      }
    }
    dist_[u] = kNone;
    return false;
  }

  std::size_t n_;
  std::vector<std::vector<std::uint32_t>> adj_;
  std::vector<std::uint32_t> match_l_, match_r_, dist_;
};

double linf(const PersistencePair& a, const PersistencePair& b) {
  return std::max(std::abs(a.birth - b.birth), std::abs(a.death - b.death));
}

// Left: A points then B diagonal copies. Right: B points then A diagonal copies.
bool perfect_at(const std::vector<PersistencePair>& A, const std::vector<PersistencePair>& B,
                double t) {
  const std::size_t na = A.size(), nb = B.size(), n = na + nb;
  std::vector<std::vector<std::uint32_t>> adj(n);
  for (std::size_t i = 0; i < na; ++i) {
    for (std::size_t j = 0; j < nb; ++j) {
      if (linf(A[i], B[j]) <= t) adj[i].push_back(static_cast<std::uint32_t>(j));
    }
    if (A[i].persistence() / 2.0 <= t) adj[i].push_back(static_cast<std::uint32_t>(nb + i));
  }
  for (std::size_t j = 0; j < nb; ++j) {
    auto& row = adj[na + j];
    if (B[j].persistence() / 2.0 <= t) row.push_back(static_cast<std::uint32_t>(j));
    for (std::size_t i = 0; i < na; ++i) row.push_back(static_cast<std::uint32_t>(nb + i));
  }
  return Matcher(n, std::move(adj)).run() == n;
}

}  // namespace

double bottleneck(const PersistenceDiagram& a, const PersistenceDiagram& b, int dim) {
  std::vector<PersistencePair> A, B;
  std::vector<double> ea, eb;
  for (const auto& p : a.pairs(dim)) (p.essential() ? ea.push_back(p.birth) : A.push_back(p));
  for (const auto& p : b.pairs(dim)) (p.essential() ? eb.push_back(p.birth) : B.push_back(p));
  if (ea.size() != eb.size()) return kInfinity;
  std::sort(ea.begin(), ea.end());
  std::sort(eb.begin(), eb.end());
  double essential = 0.0;
  for (std::size_t i = 0; i < ea.size(); ++i) essential = std::max(essential, std::abs(ea[i] - eb[i]));
  if (A.empty() && B.empty()) return essential;

  std::vector<double> cand{0.0};
  for (const auto& p : A) cand.push_back(p.persistence() / 2.0);
  for (const auto& p : B) cand.push_back(p.persistence() / 2.0);
  for (const auto& p : A) {
    for (const auto& q : B) cand.push_back(linf(p, q));
  }
  std::sort(cand.begin(), cand.end());
  cand.erase(std::unique(cand.begin(), cand.end()), cand.end());
  std::size_t lo = 0, hi = cand.size() - 1;  // cand[hi] is always feasible
  while (lo < hi) {
    const std::size_t mid = lo + (hi - lo) / 2;
    if (perfect_at(A, B, cand[mid])) {
      hi = mid;
    } else {
      lo = mid + 1;
    }
  }
  return std::max(essential, cand[lo]);
}

PersistenceDiagram log_transform(const PersistenceDiagram& d, double floor) {
  if (!(floor > 0.0)) throw ValidationError("log floor must be positive");
  PersistenceDiagram out(d.max_dim());
  for (int k = 0; k <= d.max_dim(); ++k) {
    for (const auto& p : d.pairs(k)) {
      const double b = std::log(std::max(p.birth, floor));
      const double e = p.essential() ? kInfinity : std::log(std::max(p.death, floor));
      out.add(k, b, e);
    }
  }
  return out;
}

}  // namespace kdtopo
