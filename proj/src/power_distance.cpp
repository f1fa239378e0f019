#include "kdtopo/power_distance.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <limits>
#include <string>
#include <thread>

#include "kdtopo/error.hpp"

namespace kdtopo {

WeightedSiteSet::WeightedSiteSet(PointSet sites, std::vector<double> weights)
    : sites_(std::move(sites)), weights_(std::move(weights)) {
  if (sites_.size() != weights_.size()) {
    throw ValidationError("site count " + std::to_string(sites_.size()) +
                          " does not match weight count " + std::to_string(weights_.size()));
  }
  for (double w : weights_) {
    if (!(w >= 0.0) || !std::isfinite(w)) throw ValidationError("site weights must be nonnegative");
  }
}

WeightedSiteSet kdist_weighted_sites(const KernelSpec& k, const PointCloud& P) {
  const KernelDistanceField f(k, P);
  std::vector<double> w(P.size());
  for (std::size_t i = 0; i < P.size(); ++i) w[i] = f(P.point(i));
  return WeightedSiteSet(P.points(), std::move(w));
}

double kpow(const KernelSpec& k, const WeightedSiteSet& S, PointView x) {
  if (S.size() == 0) throw ValidationError("kpow needs at least one site");
  if (S.dim() != x.size()) throw DimensionMismatch(S.dim(), x.size());
  double best = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < S.size(); ++i) {
    const double w = S.weight(i);
    best = std::min(best, 2.0 * k.deficit(squared_distance(S.site(i), x)) + w * w);
  }
  return std::sqrt(best);
}

CloudStats cloud_stats(const PointCloud& P) {
  const std::size_t n = P.size();
  if (n < 2) throw ValidationError("cloud statistics need at least two points");
  CloudStats s;
  s.median_radius.resize(n);
  s.min_separation = std::numeric_limits<double>::infinity();
  std::vector<double> dist(n);
  const std::size_t rank = n / 2;  // zero-based index of the (floor(n/2)+1)-th value
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      dist[j] = std::sqrt(squared_distance(P.point(i), P.point(j)));
      if (j > i) {
        s.diameter = std::max(s.diameter, dist[j]);
        if (dist[j] > 0.0) s.min_separation = std::min(s.min_separation, dist[j]);
      }
    }
    std::nth_element(dist.begin(), dist.begin() + static_cast<std::ptrdiff_t>(rank), dist.end());
    s.median_radius[i] = dist[rank];
  }
  if (!(s.diameter > 0.0)) throw ValidationError("all points are identical; spread is undefined");
  s.spread = s.diameter / s.min_separation;
  s.median_concentration = *std::min_element(s.median_radius.begin(), s.median_radius.end());
  return s;
}

void NetParams::validate() const {
  if (!(delta > 0.0 && delta <= 1.0)) throw ValidationError("net delta must lie in (0,1]");
  if (max_net_points == 0) throw ValidationError("net cap must be positive");
}

namespace {

void require_net_kernel(const KernelSpec& k, const PointCloud& P) {
  if (k.family() != KernelFamily::gaussian) {
    throw ValidationError("the p-hat net search is defined for the gaussian kernel only");
  }
  if (P.dim() > 3) throw ValidationError("the p-hat net search is limited to dimension <= 3");
}

double lattice_extent(const NetShell& sh, std::size_t d) {
  return sh.outer + 0.5 * sh.axis_step * std::sqrt(static_cast<double>(d));
}

// Number of lattice points in the bounding cube of a shell.
double cube_count(const NetShell& sh, std::size_t d) {
  const double m = std::floor(lattice_extent(sh, d) / sh.axis_step);
  return std::pow(2.0 * m + 1.0, static_cast<double>(d));
}

}  // namespace

void for_each_shell_point(const PointCloud& P, const NetShell& sh,
                          const std::function<void(PointView)>& visit) {
  const std::size_t d = P.dim();
  const auto c = P.point(sh.center);
  const double cover = 0.5 * sh.axis_step * std::sqrt(static_cast<double>(d));
  const double outer = sh.outer + cover;
  const double inner = sh.shell == 0 ? -1.0 : sh.inner - cover;
  const double outer2 = outer * outer;
  const double inner2 = inner > 0.0 ? inner * inner : -1.0;
  const long m = static_cast<long>(std::floor(outer / sh.axis_step));
  std::vector<long> z(d, -m);
  Point x(d);
  for (;;) {
    double r2 = 0.0;
    for (std::size_t j = 0; j < d; ++j) {
      const double off = sh.axis_step * static_cast<double>(z[j]);
      r2 += off * off;
      x[j] = c[j] + off;
    }
    if (r2 <= outer2 && r2 >= inner2) visit(x);
    std::size_t j = 0;
    for (; j < d; ++j) {
      if (++z[j] <= m) break;
      z[j] = -m;
    }
    if (j == d) break;
  }
}

NetPlan plan_net(const KernelSpec& k, const PointCloud& P, const NetParams& params) {
  params.validate();
  require_net_kernel(k, P);
  NetPlan plan;
  const std::size_t n = P.size();
  const std::size_t d = P.dim();
  const double sigma = k.sigma();
  const double sqrt_d = std::sqrt(static_cast<double>(d));
  plan.stats = cloud_stats(P);
  plan.r_sigma = sigma * std::sqrt(2.0 * std::log(static_cast<double>(n)));
  plan.radius = std::min(plan.r_sigma, plan.stats.diameter);
  const double R = plan.radius;
  const double cap_sigma = std::sqrt(3.0) * sigma;
  if (!(R > 0.0)) throw NumericError("net radius is zero");

  double estimate = 0.0;
  for (std::size_t p = 0; p < n; ++p) {
    const double rp = plan.stats.median_radius[p];
    if (!(rp > 0.0)) {
      throw NumericError("more than half of the points coincide with point " + std::to_string(p) +
                         "; the median concentration is zero");
    }
    NetShell ball;
    ball.center = p;
    ball.shell = 0;
    ball.outer = std::min(R, rp / 2.0);
    ball.spacing = std::min(params.delta * rp * rp / (32.0 * sigma), cap_sigma);
    ball.axis_step = ball.spacing / sqrt_d;
    plan.shells.push_back(ball);
    estimate += cube_count(ball, d);

    // smallest k with rp/2 >= R/2^k
    int kp = 0;
    while (rp / 2.0 < R / std::ldexp(1.0, kp)) ++kp;
    for (int i = 1; i <= kp; ++i) {
      NetShell sh;
      sh.center = p;
      sh.shell = i;
      sh.inner = R / std::ldexp(1.0, i);
      sh.outer = R / std::ldexp(1.0, i - 1);
      sh.spacing = std::min(cap_sigma, params.delta * sh.inner * sh.inner / (8.0 * sigma));
      sh.axis_step = sh.spacing / sqrt_d;
      plan.shells.push_back(sh);
      estimate += cube_count(sh, d);
    }
  }
  const double cap = static_cast<double>(params.max_net_points);
  auto too_big = [&](double size) {
    return NumericError("candidate net has about " + std::to_string(static_cast<long long>(size)) +
                        " points, above the cap of " + std::to_string(params.max_net_points) +
                        "; use a larger delta or the ascent strategy");
  };
  // The bounding cube holds at most 2^d / (unit ball volume) times the shell
  // count, so a wildly oversized cube estimate already rules the net out.
  if (estimate > 8.0 * cap) throw too_big(estimate);
  for (auto& sh : plan.shells) {
    std::size_t c = 0;
    for_each_shell_point(P, sh, [&](PointView) { ++c; });
    sh.count = c;
    plan.total += c;
  }
  if (static_cast<double>(plan.total) > cap) throw too_big(static_cast<double>(plan.total));
  return plan;
}

namespace {

struct Candidate {
  double value;
  Point x;
};

bool better(const Candidate& a, const Candidate& b) {
  if (a.value != b.value) return a.value > b.value;
  return std::lexicographical_compare(a.x.begin(), a.x.end(), b.x.begin(), b.x.end());
}

void offer(std::vector<Candidate>& top, std::size_t keep, double value, PointView x) {
  if (top.size() == keep && !better(Candidate{value, Point(x.begin(), x.end())}, top.back())) return;
  Candidate c{value, Point(x.begin(), x.end())};
  auto it = std::lower_bound(top.begin(), top.end(), c, better);
  if (it != top.end() && it->x == c.x) return;
  top.insert(it, std::move(c));
  if (top.size() > keep) top.pop_back();
}

}  // namespace

Point mean_shift(const KernelSpec& k, const PointCloud& P, Point x, double tol,
                 std::size_t max_iter) {
  if (k.family() != KernelFamily::gaussian) {
    throw ValidationError("mean-shift is defined for the gaussian kernel only");
  }
  const std::size_t d = P.dim();
  const double s2 = k.sigma() * k.sigma();
  Point num(d);
  for (std::size_t it = 0; it < max_iter; ++it) {
    std::fill(num.begin(), num.end(), 0.0);
    double den = 0.0;
    for (std::size_t i = 0; i < P.size(); ++i) {
      const auto p = P.point(i);
      const double wk = P.weight(i) * k.profile(squared_distance(p, x));
      den += wk;
      for (std::size_t j = 0; j < d; ++j) num[j] += wk * p[j];
    }
    if (!(den > 0.0)) break;
    double step2 = 0.0;
    for (std::size_t j = 0; j < d; ++j) {
      const double next = num[j] / den;
      step2 += (next - x[j]) * (next - x[j]);
      x[j] = next;
    }
    // grad kde = (den / sigma^2) * (mean-shift step)
    const double grad = den / s2 * std::sqrt(step2);
    if (grad < tol || step2 == 0.0) break;
  }
  return x;
}

namespace {

// Backtracking ascent with central-difference gradients, for families where
// mean-shift does not apply.
Point ascend_generic(const KernelSpec& k, const PointCloud& P, Point x, double tol) {
  const std::size_t d = P.dim();
  const double h = 1e-6 * k.sigma();
  double fx = kde(k, P, x);
  double step = 0.25 * k.sigma();
  Point g(d), y(d);
  for (int it = 0; it < 10000 && step > tol; ++it) {
    double gn = 0.0;
    for (std::size_t j = 0; j < d; ++j) {
      y = x;
      y[j] += h;
      const double fp = kde(k, P, y);
      y[j] -= 2.0 * h;
      const double fm = kde(k, P, y);
      g[j] = (fp - fm) / (2.0 * h);
      gn += g[j] * g[j];
    }
    gn = std::sqrt(gn);
    if (gn < tol) break;
    for (std::size_t j = 0; j < d; ++j) y[j] = x[j] + step * g[j] / gn;
    const double fy = kde(k, P, y);
    if (fy > fx) {
      x = y;
      fx = fy;
      step *= 1.5;
    } else {
      step *= 0.5;
    }
  }
  return x;
}

}  // namespace

PhatResult find_phat_plus_detailed(const KernelSpec& k, const PointCloud& P,
                                   const NetParams& params) {
  require_net_kernel(k, P);
  params.validate();
  PhatResult res;
  bool all_same = true;
  for (std::size_t i = 1; i < P.size() && all_same; ++i) {
    all_same = squared_distance(P.point(0), P.point(i)) == 0.0;
  }
  if (all_same) {
    res.point.assign(P.point(0).begin(), P.point(0).end());
    res.kde = res.net_kde = kde(k, P, res.point);
    res.net_size = 1;
    return res;
  }

  const NetPlan plan = plan_net(k, P, params);
  res.net_size = plan.total;
  const std::size_t keep = std::max<std::size_t>(1, params.polish_candidates);

  std::vector<std::vector<Candidate>> per_shell(plan.shells.size());
  std::atomic<std::size_t> next{0};
  auto work = [&]() {
    for (;;) {
      const std::size_t s = next.fetch_add(1);
      if (s >= plan.shells.size()) break;
      auto& top = per_shell[s];
      for_each_shell_point(P, plan.shells[s],
                           [&](PointView q) { offer(top, keep, kde(k, P, q), q); });
    }
  };
  const unsigned hw = std::max(1u, std::thread::hardware_concurrency());
  const unsigned nthreads = static_cast<unsigned>(std::min<std::size_t>(hw, plan.shells.size()));
  std::vector<std::thread> pool;
  for (unsigned t = 1; t < nthreads; ++t) pool.emplace_back(work);
  work();
  for (auto& t : pool) t.join();

  std::vector<Candidate> top;
  for (const auto& list : per_shell) {
    for (const auto& c : list) offer(top, keep, c.value, c.x);
  }
  res.net_kde = top.front().value;
  Candidate best = top.front();
  if (params.polish_candidates > 0) {
    const double tol = 1e-14 * k.self_value() / k.sigma();
    for (const auto& c : top) {
      Point y = mean_shift(k, P, c.x, tol, 2000);
      const double v = kde(k, P, y);
      Candidate cy{v, std::move(y)};
      if (better(cy, best)) best = std::move(cy);
    }
  }
  res.point = std::move(best.x);
  res.kde = best.value;
  return res;
}

Point find_phat_plus(const KernelSpec& k, const PointCloud& P, const NetParams& params) {
  return find_phat_plus_detailed(k, P, params).point;
}

Point find_pplus_gridascent(const KernelSpec& k, const PointCloud& P, double tol) {
  if (!(tol > 0.0)) throw ValidationError("ascent tolerance must be positive");
  std::vector<Point> starts;
  starts.reserve(P.size() + 1);
  for (std::size_t i = 0; i < P.size(); ++i) starts.emplace_back(P.point(i).begin(), P.point(i).end());
  std::sort(starts.begin(), starts.end());
  starts.erase(std::unique(starts.begin(), starts.end()), starts.end());
  starts.push_back(P.mean());

  std::vector<Candidate> results(starts.size());
  std::atomic<std::size_t> next{0};
  auto work = [&]() {
    for (;;) {
      const std::size_t i = next.fetch_add(1);
      if (i >= starts.size()) break;
      Point y = k.family() == KernelFamily::gaussian ? mean_shift(k, P, starts[i], tol)
                                                     : ascend_generic(k, P, starts[i], tol);
      const double v = kde(k, P, y);
      results[i] = Candidate{v, std::move(y)};
    }
  };
  const unsigned hw = std::max(1u, std::thread::hardware_concurrency());
  const unsigned nthreads = static_cast<unsigned>(std::min<std::size_t>(hw, starts.size()));
  std::vector<std::thread> pool;
  for (unsigned t = 1; t < nthreads; ++t) pool.emplace_back(work);
  work();
  for (auto& t : pool) t.join();

  const Candidate* best = &results.front();
  for (const auto& c : results) {
    if (better(c, *best)) best = &c;
  }
  return best->x;
}

PhatSites build_phat_sites(const KernelSpec& k, const PointCloud& P, PhatStrategy strategy,
                           const NetParams& params, double ascent_tol) {
  Point phat = strategy == PhatStrategy::net ? find_phat_plus(k, P, params)
                                             : find_pplus_gridascent(k, P, ascent_tol);
  const KernelDistanceField f(k, P);
  PointSet sites = P.points();
  std::vector<double> w(P.size());
  for (std::size_t i = 0; i < P.size(); ++i) w[i] = f(P.point(i));

  std::size_t index = P.size();
  bool dedup = false;
  for (std::size_t i = 0; i < P.size(); ++i) {
    if (std::sqrt(squared_distance(P.point(i), phat)) <= 1e-12) {
      index = i;
      dedup = true;
      break;
    }
  }
  if (!dedup) {
    sites.push_back(phat);
    w.push_back(f(phat));
  }
  return PhatSites{WeightedSiteSet(std::move(sites), std::move(w)), std::move(phat), index, dedup};
}

}  // namespace kdtopo
