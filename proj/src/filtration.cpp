#include "kdtopo/filtration.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "kdtopo/error.hpp"

namespace kdtopo {

double edge_time(double ell, double w_p, double w_q) {
  if (!(ell >= 0.0) || !(w_p >= 0.0) || !(w_q >= 0.0)) {
    throw ValidationError("edge_time needs nonnegative distance and weights");
  }
  const double dw = w_p * w_p - w_q * w_q;
  if (ell * ell <= std::abs(dw)) return std::max(w_p, w_q);
  const double a = (ell * ell + dw) / (2.0 * ell);
  return std::sqrt(a * a + w_q * w_q);
}

SymmetricMatrix site_metric(const KernelSpec& k, const WeightedSiteSet& S, SiteMetricKind kind) {
  SymmetricMatrix m(S.size());
  for (std::size_t i = 0; i < S.size(); ++i) {
    for (std::size_t j = i + 1; j < S.size(); ++j) {
      m.set(i, j,
            kind == SiteMetricKind::kernel
                ? dirac_kernel_distance(k, S.site(i), S.site(j))
                : std::sqrt(squared_distance(S.site(i), S.site(j))));
    }
  }
  return m;
}

std::size_t FilteredComplex::count(int d) const {
  if (d < 0 || d > max_dim_) return 0;
  return lex_[static_cast<std::size_t>(d)].size();
}

FilteredComplex FilteredComplex::from_simplices(std::vector<SimplexInput> simplices) {
  for (auto& s : simplices) {
    if (s.vertices.empty()) throw ValidationError("empty simplex");
    if (std::isnan(s.value)) throw ValidationError("simplex value is NaN");
    std::sort(s.vertices.begin(), s.vertices.end());
    if (std::adjacent_find(s.vertices.begin(), s.vertices.end()) != s.vertices.end()) {
      throw ValidationError("simplex has a repeated vertex");
    }
  }
  std::vector<std::size_t> order(simplices.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    const auto& x = simplices[a];
    const auto& y = simplices[b];
    if (x.value != y.value) return x.value < y.value;
    if (x.vertices.size() != y.vertices.size()) return x.vertices.size() < y.vertices.size();
    return x.vertices < y.vertices;
  });
  FilteredComplex c;
  c.value_.reserve(simplices.size());
  c.offset_.reserve(simplices.size() + 1);
  for (std::size_t i : order) {
    const auto& s = simplices[i];
    c.verts_.insert(c.verts_.end(), s.vertices.begin(), s.vertices.end());
    c.offset_.push_back(c.verts_.size());
    c.value_.push_back(s.value);
    c.max_dim_ = std::max(c.max_dim_, static_cast<int>(s.vertices.size()) - 1);
  }
  simplices.clear();
  c.build_index();
  // monotonicity: with the (value, dim, lex) order a face always precedes its
  // cofaces, so checking the index also checks the value.
  for (std::size_t i = 0; i < c.size(); ++i) {
    if (c.dim(i) == 0) continue;
    for (std::size_t f : c.facets(i)) {
      if (f >= c.size()) {
        throw ValidationError("filtration is not a complex: simplex " + std::to_string(i) +
                              " is missing a face");
      }
      if (f > i || c.value_[f] > c.value_[i]) {
        throw ValidationError("filtration is not monotone at simplex " + std::to_string(i));
      }
    }
  }
  return c;
}

void FilteredComplex::build_index() {
  lex_.assign(static_cast<std::size_t>(max_dim_ + 1), {});
  for (std::size_t i = 0; i < size(); ++i) lex_[static_cast<std::size_t>(dim(i))].push_back(i);
  for (std::size_t d = 0; d < lex_.size(); ++d) {
    auto& v = lex_[d];
    std::sort(v.begin(), v.end(), [&](std::size_t a, std::size_t b) {
      const auto x = vertices(a), y = vertices(b);
      return std::lexicographical_compare(x.begin(), x.end(), y.begin(), y.end());
    });
    for (std::size_t j = 1; j < v.size(); ++j) {
      const auto x = vertices(v[j - 1]), y = vertices(v[j]);
      if (std::equal(x.begin(), x.end(), y.begin(), y.end())) {
        throw ValidationError("simplex listed twice in filtration");
      }
    }
  }
}

std::size_t FilteredComplex::find(std::span<const Vertex> vs) const {
  if (vs.empty() || static_cast<int>(vs.size()) - 1 > max_dim_) return size();
  const auto& v = lex_[vs.size() - 1];
  auto it = std::lower_bound(v.begin(), v.end(), vs, [&](std::size_t a, std::span<const Vertex> key) {
    const auto x = vertices(a);
    return std::lexicographical_compare(x.begin(), x.end(), key.begin(), key.end());
  });
  if (it == v.end()) return size();
  const auto x = vertices(*it);
  return std::equal(x.begin(), x.end(), vs.begin(), vs.end()) ? *it : size();
}

std::vector<std::size_t> FilteredComplex::facets(std::size_t i) const {
  const auto vs = vertices(i);
  std::vector<std::size_t> out;
  if (vs.size() < 2) return out;
  out.reserve(vs.size());
  std::vector<Vertex> face(vs.size() - 1);
  for (std::size_t drop = 0; drop < vs.size(); ++drop) {
    std::size_t t = 0;
    for (std::size_t j = 0; j < vs.size(); ++j) {
      if (j != drop) face[t++] = vs[j];
    }
    out.push_back(find(face));
  }
  return out;
}

FilteredComplex weighted_rips(const SymmetricMatrix& dist, const std::vector<double>& weights,
                              int max_dim, double alpha_max) {
  const std::size_t n = dist.size();
  if (n == 0) throw ValidationError("weighted Rips needs at least one site");
  if (weights.size() != n) throw ValidationError("weight count does not match the metric");
  if (max_dim < 0) throw ValidationError("max_dim must be nonnegative");
  if (!(alpha_max > 0.0)) throw ValidationError("alpha_max must be positive");

  std::vector<SimplexInput> out;
  for (std::size_t i = 0; i < n; ++i) out.push_back({{static_cast<Vertex>(i)}, weights[i]});
  if (max_dim == 0) return FilteredComplex::from_simplices(std::move(out));

  // thresholded graph, neighbors with a larger index only
  std::vector<std::vector<Vertex>> up(n);
  std::vector<double> t(n * n, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      const double a = edge_time(dist(i, j), weights[i], weights[j]);
      t[i * n + j] = t[j * n + i] = a;
      if (a <= alpha_max) up[i].push_back(static_cast<Vertex>(j));
    }
  }

  struct Frame {
    std::vector<Vertex> simplex;
    std::vector<Vertex> candidates;
    double value;
  };
  for (std::size_t i = 0; i < n; ++i) {
    std::vector<Frame> stack;
    stack.push_back({{static_cast<Vertex>(i)}, up[i], weights[i]});
    while (!stack.empty()) {
      Frame f = std::move(stack.back());
      stack.pop_back();
      if (static_cast<int>(f.simplex.size()) > max_dim) continue;
      // push in reverse so cofaces come out in lexicographic order
      for (std::size_t c = f.candidates.size(); c-- > 0;) {
        const Vertex v = f.candidates[c];
        double val = f.value;
        for (Vertex u : f.simplex) val = std::max(val, t[static_cast<std::size_t>(u) * n + v]);
        Frame g;
        g.simplex = f.simplex;
        g.simplex.push_back(v);
        g.value = val;
        out.push_back({g.simplex, val});
        if (static_cast<int>(g.simplex.size()) <= max_dim) {
          for (std::size_t e = c + 1; e < f.candidates.size(); ++e) {
            const Vertex w = f.candidates[e];
            if (t[static_cast<std::size_t>(v) * n + w] <= alpha_max) g.candidates.push_back(w);
          }
          if (!g.candidates.empty()) stack.push_back(std::move(g));
        }
      }
    }
  }
  return FilteredComplex::from_simplices(std::move(out));
}

FilteredComplex weighted_rips(const KernelSpec& k, const WeightedSiteSet& S, int max_dim,
                              double alpha_max, SiteMetricKind metric) {
  if (S.size() == 0) throw ValidationError("weighted Rips needs at least one site");
  return weighted_rips(site_metric(k, S, metric), S.weights(), max_dim, alpha_max);
}

double default_alpha_max(const KernelSpec& k, const PointCloud& P) {
  return KernelDistanceField(k, P).c_mu();
}

}  // namespace kdtopo
