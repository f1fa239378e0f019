#include "kdtopo/diagnostics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>
#include <sstream>
#include <tuple>

#include <json.hpp>

#include "kdtopo/error.hpp"

namespace kdtopo {

void ProbeReport::record(double violation, const std::string& where) {
  ++trials;
  if (violation > max_violation) {
    max_violation = violation;
    witness = where;
  }
}

void ProbeReport::finish() {
  if (status == "not-applicable") {
    pass = false;
    return;
  }
  pass = trials == 0 || max_violation <= tolerance;
}

std::string ProbeReport::to_json_line() const {
  auto num = [](double v) -> nlohmann::json {
    if (std::isfinite(v)) return v;
    return nullptr;
  };
  nlohmann::json j;
  j["property"] = property;
  j["trials"] = trials;
  j["max_violation"] = num(max_violation);
  j["tolerance"] = num(tolerance);
  j["pass"] = pass;
  j["seed"] = seed;
  j["status"] = status;
  if (!witness.empty()) j["witness"] = witness;
  for (const auto& [key, v] : extra) j["extra"][key] = num(v);
  return j.dump();
}

namespace {

std::string describe(PointView x) {
  std::ostringstream os;
  os.precision(17);
  os << '(';
  for (std::size_t i = 0; i < x.size(); ++i) os << (i ? "," : "") << x[i];
  os << ')';
  return os.str();
}

struct Box {
  Point lo, hi;
};

Box padded_box(const PointCloud& P, double pad) {
  Box b{Point(P.dim(), INFINITY), Point(P.dim(), -INFINITY)};
  for (std::size_t i = 0; i < P.size(); ++i) {
    for (std::size_t a = 0; a < P.dim(); ++a) {
      b.lo[a] = std::min(b.lo[a], P.point(i)[a] - pad);
      b.hi[a] = std::max(b.hi[a], P.point(i)[a] + pad);
    }
  }
  return b;
}

Point uniform_in(const Box& b, std::mt19937_64& rng) {
  Point x(b.lo.size());
  for (std::size_t a = 0; a < x.size(); ++a) {
    x[a] = std::uniform_real_distribution<double>(b.lo[a], b.hi[a])(rng);
  }
  return x;
}

Point unit_vector(std::size_t d, std::mt19937_64& rng) {
  std::normal_distribution<double> g(0.0, 1.0);
  Point u(d);
  double n = 0.0;
  while (n == 0.0) {
    n = 0.0;
    for (double& c : u) {
      c = g(rng);
      n += c * c;
    }
  }
  n = std::sqrt(n);
  for (double& c : u) c /= n;
  return u;
}

Point along(PointView x, PointView u, double t) {
  Point y(x.begin(), x.end());
  for (std::size_t a = 0; a < y.size(); ++a) y[a] += t * u[a];
  return y;
}

double norm(PointView x) { return std::sqrt(std::inner_product(x.begin(), x.end(), x.begin(), 0.0)); }

}  // namespace

ProbeReport check_lipschitz_x(const KernelSpec& k, const PointCloud& P, std::size_t trials,
                              std::uint64_t seed) {
  ProbeReport r;
  r.property = "lipschitz_x";
  r.tolerance = 1e-10;
  r.seed = seed;
  const KernelDistanceField f(k, P);
  const Box box = padded_box(P, 3.0 * k.sigma());
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  for (std::size_t t = 0; t < trials; ++t) {
    const Point x = uniform_in(box, rng);
    // alternate far pairs and close pairs, where the bound is tightest
    const Point y = t % 2 == 0 ? uniform_in(box, rng)
                               : along(x, unit_vector(P.dim(), rng), 0.1 * k.sigma() * unit(rng));
    const double v = std::abs(f(x) - f(y)) - std::sqrt(squared_distance(x, y));
    r.record(v, describe(x) + "-" + describe(y));
  }
  r.finish();
  return r;
}

double semiconcavity_second_derivative(const KernelSpec& k, const PointCloud& P, PointView x,
                                       PointView u, double h) {
  if (!(h > 0.0)) throw ValidationError("finite-difference step must be positive");
  if (x.size() != P.dim() || u.size() != P.dim()) throw DimensionMismatch(P.dim(), x.size());
  // T = d^2 - |x|^2 = 2 sum_p w g(p,x) - |x|^2 + const
  auto S = [&](const Point& z) {
    return 2.0 * detail::ordered_sum(
                     [&](std::size_t i) {
                       return P.weight(i) * k.deficit(squared_distance(P.point(i), z));
                     },
                     0, P.size());
  };
  const Point x0(x.begin(), x.end());
  const double s0 = S(x0);
  auto second = [&](double step) {
    return (S(along(x, u, step)) - 2.0 * s0 + S(along(x, u, -step))) / (step * step);
  };
  const double coarse = second(h), fine = second(h / 2.0);
  const double uu = std::inner_product(u.begin(), u.end(), u.begin(), 0.0);
  return (4.0 * fine - coarse) / 3.0 - 2.0 * uu;
}

ProbeReport check_semiconcavity(const KernelSpec& k, const PointCloud& P, std::size_t trials,
                                double h, std::uint64_t seed) {
  if (h <= 0.0) h = 1e-3 * k.sigma();
  ProbeReport r;
  r.property = "semiconcavity";
  r.tolerance = 1e-6;
  r.seed = seed;
  r.extra["h"] = h;
  const Box box = padded_box(P, 3.0 * k.sigma());
  std::mt19937_64 rng(seed);
  for (std::size_t t = 0; t < trials; ++t) {
    const Point x = uniform_in(box, rng);
    const Point u = unit_vector(P.dim(), rng);
    r.record(semiconcavity_second_derivative(k, P, x, u, h), describe(x) + " dir " + describe(u));
  }
  r.finish();
  return r;
}

ProbeReport check_properness(const KernelSpec& k, const PointCloud& P, std::size_t rays,
                             std::uint64_t seed) {
  ProbeReport r;
  r.property = "properness";
  r.tolerance = 0.0;
  r.seed = seed;
  const KernelDistanceField f(k, P);
  const double c = f.c_mu();
  const Point m = P.mean();
  double support = 0.0;
  for (std::size_t i = 0; i < P.size(); ++i) {
    support = std::max(support, std::sqrt(squared_distance(P.point(i), m)));
  }
  std::mt19937_64 rng(seed);
  double worst_gap = 0.0;
  for (std::size_t t = 0; t < rays; ++t) {
    const Point u = unit_vector(P.dim(), rng);
    double prev = f(along(m, u, support));
    double drop = -INFINITY;
    for (int j = 1; j <= 20; ++j) {
      const double cur = f(along(m, u, support + 0.5 * k.sigma() * j));
      drop = std::max(drop, prev - cur);
      prev = cur;
    }
    const double gap = c - prev;
    worst_gap = std::max(worst_gap, gap / c);
    // nondecreasing up to rounding, and within 1e-8 c_mu of c_mu at +10 sigma
    r.record(std::max(drop - 1e-12 * c, gap - 1e-8 * c), "ray " + describe(u));
  }
  r.extra["c_mu"] = c;
  r.extra["support_radius"] = support;
  r.extra["max_relative_gap"] = worst_gap;
  r.finish();
  return r;
}

double sigma_lipschitz_constant() {
  return 18.0 / std::exp(3.0) + 8.0 / std::exp(1.0) + 2.0;
}

ProbeReport check_sigma_lipschitz(const PointCloud& P, const PointSet& probes,
                                  const std::vector<double>& sigmas_in) {
  if (probes.dim() != P.dim()) throw DimensionMismatch(P.dim(), probes.dim());
  std::vector<double> sigmas(sigmas_in);
  std::sort(sigmas.begin(), sigmas.end());
  sigmas.erase(std::unique(sigmas.begin(), sigmas.end()), sigmas.end());
  ProbeReport r;
  r.property = "sigma_lipschitz";
  r.tolerance = 1e-6;
  const double ell = sigma_lipschitz_constant();
  std::vector<KernelDistanceField> fields;
  fields.reserve(sigmas.size());
  for (double s : sigmas) fields.emplace_back(KernelSpec::gaussian(s), P);
  double worst_ratio = 0.0;
  for (std::size_t q = 0; q < probes.size(); ++q) {
    double prev = fields[0](probes[q]);
    for (std::size_t i = 1; i < sigmas.size(); ++i) {
      const double cur = fields[i](probes[q]);
      const double ratio = std::abs(cur - prev) / (sigmas[i] - sigmas[i - 1]);
      worst_ratio = std::max(worst_ratio, ratio);
      r.record(ratio - ell, describe(probes[q]) + " sigma " + std::to_string(sigmas[i]));
      prev = cur;
    }
  }
  r.extra["max_ratio"] = worst_ratio;
  r.extra["ell"] = ell;
  r.finish();
  return r;
}

namespace {

template <class F>
std::pair<double, double> maximize_scan(F&& f, double lo, double hi) {
  const int n = 20000;
  double best_z = lo, best = -INFINITY;
  for (int i = 1; i <= n; ++i) {
    const double z = lo + (hi - lo) * i / n;
    const double v = f(z);
    if (v > best) {
      best = v;
      best_z = z;
    }
  }
  // golden-section refinement on the bracketing cells
  const double step = (hi - lo) / n;
  double a = std::max(lo, best_z - step), b = std::min(hi, best_z + step);
  const double g = (std::sqrt(5.0) - 1.0) / 2.0;
  double c = b - g * (b - a), d = a + g * (b - a);
  for (int it = 0; it < 200; ++it) {
    if (f(c) > f(d)) {
      b = d;
    } else {
      a = c;
    }
    c = b - g * (b - a);
    d = a + g * (b - a);
  }
  const double z = 0.5 * (a + b);
  return {f(z), z};
}

}  // namespace

HMaxPeaks h_max_peaks(double sigma) {
  if (!(sigma > 0.0)) throw ValidationError("sigma must be positive");
  auto w1 = [&](double z) {
    return z * z / (sigma * sigma * sigma) * std::exp(-z * z / (2.0 * sigma * sigma));
  };
  auto w2 = [&](double z) {
    const double s2 = sigma * sigma;
    return (z * z * z * z / (s2 * s2 * s2) - 3.0 * z * z / (s2 * s2)) *
           std::exp(-z * z / (2.0 * s2));
  };
  HMaxPeaks h;
  std::tie(h.d1_max, h.d1_argmax) = maximize_scan(w1, 0.0, 10.0 * sigma);
  std::tie(h.d2_max, h.d2_argmax) = maximize_scan(w2, 0.0, 10.0 * sigma);
  return h;
}

ProbeReport check_k4(const KernelSpec& k, const PointCloud& mu, const PointCloud& nu,
                     const PointSet& probes) {
  if (probes.dim() != mu.dim()) throw DimensionMismatch(mu.dim(), probes.dim());
  ProbeReport r;
  r.property = "k4_stability";
  r.tolerance = 1e-10;
  const KernelDistanceField fm(k, mu), fn(k, nu);
  const double D = kernel_distance(k, mu, nu);
  r.extra["kernel_distance"] = D;
  for (std::size_t i = 0; i < probes.size(); ++i) {
    r.record(std::abs(fm(probes[i]) - fn(probes[i])) - D, describe(probes[i]));
  }
  r.finish();
  return r;
}

double dtm(const PointCloud& P, double m0, PointView x) {
  if (!(m0 > 0.0 && m0 <= 1.0)) throw ValidationError("dtm mass m0 must lie in (0,1]");
  if (x.size() != P.dim()) throw DimensionMismatch(P.dim(), x.size());
  const auto& w = P.weights();
  const auto [lo, hi] = std::minmax_element(w.begin(), w.end());
  if (*hi - *lo > 1e-15) throw ValidationError("dtm needs a uniform-weight cloud");
  const std::size_t n = P.size();
  double k = m0 * static_cast<double>(n);
  if (std::abs(k - std::round(k)) <= 1e-9 * std::max(1.0, k)) k = std::round(k);
  const auto whole = static_cast<std::size_t>(std::floor(k));
  const double frac = k - static_cast<double>(whole);
  const std::size_t need = std::min(n, whole + (frac > 0.0 ? 1 : 0));
  std::vector<double> d2(n);
  for (std::size_t i = 0; i < n; ++i) d2[i] = squared_distance(P.point(i), x);
  std::partial_sort(d2.begin(), d2.begin() + static_cast<std::ptrdiff_t>(need), d2.end());
  double s = 0.0;
  for (std::size_t i = 0; i < whole; ++i) s += d2[i];
  if (frac > 0.0) s += frac * d2[whole];
  return std::sqrt(s / k);
}

double mean_gap(const PointCloud& P, const PointCloud& Q) {
  if (P.dim() != Q.dim()) throw DimensionMismatch(P.dim(), Q.dim());
  return std::sqrt(squared_distance(P.mean(), Q.mean()));
}

double w2_to_dirac(const PointCloud& P, PointView x) {
  if (x.size() != P.dim()) throw DimensionMismatch(P.dim(), x.size());
  double s = 0.0;
  for (std::size_t i = 0; i < P.size(); ++i) s += P.weight(i) * squared_distance(P.point(i), x);
  return std::sqrt(s);
}

ProbeReport check_dk_w2_dirac(const PointCloud& P, const std::vector<double>& sigmas,
                              std::size_t trials, std::uint64_t seed) {
  ProbeReport r;
  r.property = "dk_le_w2_dirac";
  r.tolerance = 0.0;
  r.seed = seed;
  double diam = 0.0;
  for (std::size_t i = 0; i < P.size(); ++i) {
    for (std::size_t j = i + 1; j < P.size(); ++j) {
      diam = std::max(diam, std::sqrt(squared_distance(P.point(i), P.point(j))));
    }
  }
  const Box box = padded_box(P, std::max(diam, 1e-12));
  std::vector<KernelDistanceField> fields;
  for (double s : sigmas) fields.emplace_back(KernelSpec::gaussian(s), P);
  std::mt19937_64 rng(seed);
  for (std::size_t t = 0; t < trials; ++t) {
    const Point x = uniform_in(box, rng);
    const double w2 = w2_to_dirac(P, x);
    for (std::size_t s = 0; s < fields.size(); ++s) {
      // relative rounding slack on the inequality
      r.record(fields[s](x) - w2 - 1e-12 * std::max(1.0, w2),
               describe(x) + " sigma " + std::to_string(sigmas[s]));
    }
  }
  r.finish();
  return r;
}

MeanGapRate check_mean_gap_rate(const PointCloud& P, const PointCloud& Q, double fit_lo,
                                double fit_hi, double check_hi, std::size_t steps) {
  if (!(0.0 < fit_lo && fit_lo < fit_hi && fit_hi < check_hi) || steps < 2) {
    throw ValidationError("mean-gap sweep needs 0 < fit_lo < fit_hi < check_hi");
  }
  MeanGapRate out;
  out.mean_gap = mean_gap(P, Q);
  double diam = 0.0;
  auto scan = [&](const PointCloud& A, const PointCloud& B) {
    for (std::size_t i = 0; i < A.size(); ++i) {
      for (std::size_t j = 0; j < B.size(); ++j) {
        diam = std::max(diam, std::sqrt(squared_distance(A.point(i), B.point(j))));
      }
    }
  };
  scan(P, P);
  scan(P, Q);
  scan(Q, Q);
  out.diameter = diam;
  if (!(diam > 0.0)) throw ValidationError("mean-gap sweep needs clouds with positive extent");
  auto gap = [&](double sigma) {
    return std::abs(kernel_distance(KernelSpec::gaussian(sigma), P, Q) - out.mean_gap);
  };
  const double l0 = std::log(fit_lo), l1 = std::log(check_hi);
  // Least-squares fit of gap * sigma^2 as a quartic in t = (diam/sigma)^2 over
  // the fit range; its constant term C is the leading coefficient of the
  // sigma^-2 decay.
  constexpr int kTerms = 5;
  double m[kTerms][kTerms + 1] = {};
  std::vector<double> check_vals;
  double fit_max = 0.0;
  for (std::size_t i = 0; i < steps; ++i) {
    const double rel = std::exp(l0 + (l1 - l0) * static_cast<double>(i) / static_cast<double>(steps - 1));
    const double s = rel * diam;
    const double scaled = gap(s) * s * s;
    if (rel <= fit_hi) {
      fit_max = std::max(fit_max, scaled);
      const double t = 1.0 / (rel * rel);
      double basis[kTerms];
      basis[0] = 1.0;
      for (int r = 1; r < kTerms; ++r) basis[r] = basis[r - 1] * t;
      for (int r = 0; r < kTerms; ++r) {
        for (int c = 0; c < kTerms; ++c) m[r][c] += basis[r] * basis[c];
        m[r][kTerms] += basis[r] * scaled;
      }
    } else {
      check_vals.push_back(scaled);
    }
  }
  for (int col = 0; col < kTerms; ++col) {
    int piv = col;
    for (int r = col + 1; r < kTerms; ++r) {
      if (std::abs(m[r][col]) > std::abs(m[piv][col])) piv = r;
    }
    std::swap(m[col], m[piv]);
    for (int r = 0; r < kTerms; ++r) {
      if (r == col || m[col][col] == 0.0) continue;
      const double f = m[r][col] / m[col][col];
      for (int c = col; c <= kTerms; ++c) m[r][c] -= f * m[col][c];
    }
  }
  out.fitted_leading = m[0][0] != 0.0 ? m[0][kTerms] / m[0][0] : 0.0;
  out.constant = std::max(out.fitted_leading, fit_max);
  for (double v : check_vals) {
    out.worst_ratio = std::max(out.worst_ratio, out.constant > 0.0 ? v / out.constant : INFINITY);
  }
  out.gap_at_100diam = gap(100.0 * diam);
  out.pass = out.worst_ratio <= 1.0 && out.gap_at_100diam <= 1e-3 * out.mean_gap;
  return out;
}

double monotonicity_delta_g(double G) {
  if (!(G > 0.0)) throw ValidationError("G must be positive");
  return std::sqrt(12.0 + 3.0 * std::log(4.0 / G));
}

MonotonicityRegime monotonicity_regime(double disk_radius, double sigma) {
  if (!(disk_radius > 0.0) || !(sigma > 0.0)) {
    throw ValidationError("disk radius and sigma must be positive");
  }
  MonotonicityRegime m;
  // a closed disk is convex, so only the complement's reach binds
  m.R = disk_radius;
  m.G = (sigma / 2.0) * (sigma / 2.0) / (disk_radius * disk_radius);
  m.delta_g = monotonicity_delta_g(m.G);
  m.sigma_max = m.R / (6.0 * m.delta_g);
  m.valid = sigma <= m.sigma_max;
  return m;
}

ProbeReport monotonicity_probe(const KernelSpec& k, const PointCloud& P, PointView center,
                               double disk_radius, PointView x0, double step, std::size_t steps) {
  if (P.dim() != 2 || center.size() != 2 || x0.size() != 2) {
    throw ValidationError("the monotonicity probe is planar");
  }
  if (!(step > 0.0)) throw ValidationError("flow step must be positive");
  ProbeReport r;
  r.property = "monotonicity";
  // strict increase of d^K: d_j^2 - d_{j+1}^2 must be negative
  r.tolerance = -std::numeric_limits<double>::denorm_min();
  const MonotonicityRegime reg = monotonicity_regime(disk_radius, k.sigma());
  r.extra["R"] = reg.R;
  r.extra["G"] = reg.G;
  r.extra["delta_G"] = reg.delta_g;
  r.extra["sigma_max"] = reg.sigma_max;
  Point u(x0.begin(), x0.end());
  u[0] -= center[0];
  u[1] -= center[1];
  const double r0 = norm(u);
  if (!reg.valid || k.family() != KernelFamily::gaussian || r0 <= disk_radius) {
    r.status = "not-applicable";
    r.finish();
    return r;
  }
  u[0] /= r0;
  u[1] /= r0;
  // d^2 = kappa(P,P) + K(x,x) - 2 kde(x) with the first two terms constant, so
  // the squared increment is 2 (kde_j - kde_{j+1}) and kappa(P,P) is never needed.
  auto in_regime = [&](double fs) { return fs > 0.014 * reg.R && fs < 2.0 * k.sigma(); };
  double prev = kde(k, P, x0);
  double fs_prev = r0 - disk_radius;
  for (std::size_t j = 1; j <= steps; ++j) {
    const Point x = along(x0, u, step * static_cast<double>(j));
    const double cur = kde(k, P, x);
    const double fs = fs_prev + step;
    if (in_regime(fs_prev) && in_regime(fs)) r.record(2.0 * (cur - prev), describe(x));
    prev = cur;
    fs_prev = fs;
  }
  if (r.trials == 0) r.status = "not-applicable";
  r.finish();
  return r;
}

}  // namespace kdtopo
