#include <chrono>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "kdtopo/coresets.hpp"
#include "kdtopo/diagnostics.hpp"
#include "kdtopo/error.hpp"
#include "kdtopo/filtration.hpp"
#include "kdtopo/grid_field.hpp"
#include "kdtopo/io.hpp"
#include "kdtopo/kernels.hpp"
#include "kdtopo/persistence.hpp"
#include "kdtopo/power_distance.hpp"

using namespace kdtopo;

namespace {

constexpr int kExitValidation = 2;
constexpr int kExitNumeric = 3;
constexpr int kExitReplayMismatch = 1;

std::vector<double> parse_list(const std::string& s, const std::string& what) {
  std::vector<double> out;
  std::string cell;
  std::istringstream is(s);
  while (std::getline(is, cell, ',')) out.push_back(parse_double(cell, what));
  if (out.empty()) throw ValidationError(what + ": empty list");
  return out;
}

void emit(const std::optional<std::string>& out, const std::string& content, RunManifest& m) {
  if (out) {
    write_file_atomic(*out, content);
    m.outputs.push_back(*out);
  } else {
    std::cout << content;
  }
}

PointCloud load_points(const std::string& path, RunManifest& m) {
  ReadResult r = read_points_csv(path);
  for (const auto& w : r.warnings) std::cerr << "warning: " << w << '\n';
  m.inputs.push_back(path);
  return std::move(r.cloud);
}

// Probe locations from --at (one point) or --probes (a point file).
PointSet load_probes(const std::optional<std::string>& at, const std::optional<std::string>& file,
                     std::size_t dim, RunManifest& m) {
  if (at.has_value() == file.has_value()) {
    throw ValidationError("give exactly one of --at and --probes");
  }
  if (at) {
    const auto x = parse_list(*at, "--at");
    if (x.size() != dim) throw DimensionMismatch(dim, x.size());
    return PointSet(dim, x);
  }
  const PointCloud Q = load_points(*file, m);
  if (Q.dim() != dim) throw DimensionMismatch(dim, Q.dim());
  return Q.points();
}

std::string values_csv(const PointSet& X, const std::vector<std::string>& names,
                       const std::vector<std::vector<double>>& cols) {
  std::string s;
  for (std::size_t a = 0; a < X.dim(); ++a) s += "x" + std::to_string(a + 1) + ",";
  for (std::size_t c = 0; c < names.size(); ++c) s += names[c] + (c + 1 < names.size() ? "," : "\n");
  for (std::size_t i = 0; i < X.size(); ++i) {
    for (std::size_t a = 0; a < X.dim(); ++a) s += format_double(X[i][a]) + ",";
    for (std::size_t c = 0; c < cols.size(); ++c) {
      s += format_double(cols[c][i]) + (c + 1 < cols.size() ? "," : "\n");
    }
  }
  return s;
}

nlohmann::json option_values(const CLI::App& app) {
  nlohmann::json j = nlohmann::json::object();
  for (const CLI::Option* o : app.get_options()) {
    if (o->get_lnames().empty()) continue;
    const std::string name = o->get_lnames().front();
    if (name == "help") continue;
    std::string v;
    if (o->count() > 0) {
      for (const auto& r : o->results()) v += (v.empty() ? "" : ",") + r;
    } else {
      v = o->get_default_str();
      if (v.empty()) continue;
    }
    j[name] = v;
  }
  return j;
}

struct Globals {
  std::string kernel = "gaussian";
  double sigma = 0.05;
  std::optional<std::string> manifest;
  bool no_manifest = false;

  KernelSpec kernel_spec() const { return KernelSpec(parse_kernel_family(kernel), sigma); }
};

int run(const std::vector<std::string>& args);

int dispatch(const std::vector<std::string>& args) {
  CLI::App app{"Kernel distance topology toolkit", "kdtopo"};
  app.require_subcommand(1);
  app.fallthrough();
  app.set_version_flag("--version", kVersion);
  Globals g;
  app.add_option("--kernel", g.kernel, "gaussian, laplace, triangle, epanechnikov or ball")
      ->capture_default_str();
  app.add_option("--sigma", g.sigma, "kernel bandwidth")->capture_default_str();
  app.add_option("--manifest", g.manifest, "manifest path (default: <first output>.manifest.json)");
  app.add_flag("--no-manifest", g.no_manifest, "do not write a run manifest");

  RunManifest m;
  std::function<void()> action;

  // generate ------------------------------------------------------------------
  auto* gen = app.add_subcommand("generate", "synthetic point clouds in [0,1]^2");
  struct {
    std::string shape = "circle_line", preset;
    std::size_t n = 2000;
    double noise = 0.01, background = 0.55;
    std::uint64_t seed = 0;
    std::string out;
  } go;
  gen->add_option("--shape", go.shape, "circle_line, circle, segment or uniform")->capture_default_str();
  gen->add_option("--n", go.n, "number of points")->capture_default_str();
  gen->add_option("--noise", go.noise, "Gaussian noise standard deviation")->capture_default_str();
  gen->add_option("--background", go.background, "uniform background fraction")->capture_default_str();
  gen->add_option("--preset", go.preset, "grid (2000 points) or coreset (10000 points)")
      ->check(CLI::IsMember({"grid", "coreset"}));
  gen->add_option("--seed", go.seed, "random seed")->required();
  gen->add_option("--out", go.out, "output point CSV")->required();
  gen->callback([&] {
    action = [&] {
      GeneratorSpec s;
      if (go.preset == "grid") {
        s = preset_grid_experiment(go.seed);
      } else if (go.preset == "coreset") {
        s = preset_coreset_figure(go.seed);
      } else {
        s.shape = parse_shape(go.shape);
        s.n = go.n;
        s.noise_sd = go.noise;
        s.background_frac = go.background;
        s.seed = go.seed;
      }
      write_points_csv(go.out, generate(s), false);
      m.outputs.push_back(go.out);
    };
  });

  // kde / kdist ---------------------------------------------------------------
  struct {
    std::string in;
    std::optional<std::string> at, probes, out;
  } fo;
  auto add_field = [&](const std::string& name, const std::string& help, bool distance) {
    auto* sc = app.add_subcommand(name, help);
    sc->add_option("--in", fo.in, "point CSV")->required();
    sc->add_option("--at", fo.at, "comma-separated evaluation point");
    sc->add_option("--probes", fo.probes, "point CSV of evaluation points");
    sc->add_option("--out", fo.out, "output CSV (stdout if omitted)");
    sc->callback([&, distance, name] {
      action = [&, distance, name] {
        const KernelSpec k = g.kernel_spec();
        const PointCloud P = load_points(fo.in, m);
        const PointSet X = load_probes(fo.at, fo.probes, P.dim(), m);
        const KernelDistanceField f(k, P);
        std::vector<double> v(X.size());
        std::size_t degenerate = 0;
        for (std::size_t i = 0; i < X.size(); ++i) {
          if (!distance) {
            v[i] = f.kde(X[i]);
          } else if (k.characteristic()) {
            v[i] = f(X[i]);
          } else {
            const auto r = kernel_distance_checked(k, P, PointCloud::dirac(X[i]));
            degenerate += r.degenerate;
            v[i] = r.value;
          }
        }
        if (fo.at && !fo.out) {
          std::cout << format_double(v[0]) << '\n';
        } else {
          emit(fo.out, values_csv(X, {name}, {v}), m);
        }
        if (degenerate > 0) {
          throw NumericError(std::to_string(degenerate) +
                             " probes had a negative kernel distance radicand (clamped to 0); "
                             "this kernel is not positive definite");
        }
      };
    });
  };
  add_field("kde", "kernel density estimate sum_p w_p K(p,x)", false);
  add_field("kdist", "kernel distance d^K_P(x)", true);

  // coreset -------------------------------------------------------------------
  auto* cor = app.add_subcommand("coreset", "random eps-kernel sample");
  struct {
    std::string in, out;
    double eps = 0.1, delta = 0.1, c = 0.5;
    std::optional<std::size_t> m;
    std::uint64_t seed = 0;
  } co;
  cor->add_option("--in", co.in, "point CSV")->required();
  cor->add_option("--eps", co.eps, "kde error target")->capture_default_str();
  cor->add_option("--delta", co.delta, "failure probability")->capture_default_str();
  cor->add_option("--c", co.c, "sample-size constant")->capture_default_str();
  cor->add_option("--m", co.m, "explicit sample size (overrides the formula)");
  cor->add_option("--seed", co.seed, "random seed")->required();
  cor->add_option("--out", co.out, "output point CSV")->required();
  cor->callback([&] {
    action = [&] {
      const PointCloud P = load_points(co.in, m);
      CoresetSpec s{co.eps, co.delta, co.c, co.seed};
      s.validate();
      const std::size_t size = co.m ? *co.m : s.sample_size(P.dim());
      m.params["sample_size"] = size;
      write_points_csv(co.out, random_sample(P, size, co.seed), false);
      m.outputs.push_back(co.out);
    };
  });

  // phat ----------------------------------------------------------------------
  struct {
    std::string in, strategy = "net";
    std::optional<std::string> out, sites;
    double delta = 0.5, tol = 1e-10;
    std::size_t max_net = 10'000'000;
  } po;
  auto phat_options = [&](CLI::App* sc) {
    sc->add_option("--strategy", po.strategy, "net or ascent")
        ->check(CLI::IsMember({"net", "ascent"}))
        ->capture_default_str();
    sc->add_option("--delta", po.delta, "net approximation parameter")->capture_default_str();
    sc->add_option("--max-net", po.max_net, "cap on the number of net points")->capture_default_str();
    sc->add_option("--tol", po.tol, "gradient tolerance of the ascent strategy")->capture_default_str();
  };
  auto make_sites = [&](const KernelSpec& k, const PointCloud& P) {
    NetParams np;
    np.delta = po.delta;
    np.max_net_points = po.max_net;
    const PhatSites ps = build_phat_sites(
        k, P, po.strategy == "net" ? PhatStrategy::net : PhatStrategy::ascent, np, po.tol);
    nlohmann::json ph = nlohmann::json::array();
    for (double c : ps.phat) ph.push_back(c);
    m.params["phat"] = ph;
    m.params["phat_deduplicated"] = ps.deduplicated;
    return ps;
  };
  auto* ph = app.add_subcommand("phat", "approximate kde maximizer and the weighted site set");
  ph->add_option("--in", po.in, "point CSV")->required();
  ph->add_option("--out", po.out, "sites CSV (P plus p-hat with weights d^K_P)");
  phat_options(ph);
  ph->callback([&] {
    action = [&] {
      const KernelSpec k = g.kernel_spec();
      const PointCloud P = load_points(po.in, m);
      const PhatSites ps = make_sites(k, P);
      std::string line;
      for (std::size_t a = 0; a < ps.phat.size(); ++a) line += (a ? "," : "") + format_double(ps.phat[a]);
      std::cout << line << '\n';
      if (po.out) emit(po.out, sites_to_csv(ps.sites), m);
    };
  });

  // rips ----------------------------------------------------------------------
  auto* rp = app.add_subcommand("rips", "weighted Rips filtration on P plus p-hat");
  struct {
    std::optional<std::string> sites, alpha;
    int max_dim = 2;
    std::string metric = "kernel", out;
  } ro;
  rp->add_option("--in", po.in, "point CSV (sites are built from it)");
  rp->add_option("--sites", ro.sites, "sites CSV from phat (instead of --in)");
  phat_options(rp);
  rp->add_option("--max-dim", ro.max_dim, "largest simplex dimension")->capture_default_str();
  rp->add_option("--alpha-max", ro.alpha, "largest filtration value (default c_mu; 'inf' allowed)");
  rp->add_option("--metric", ro.metric, "kernel or euclidean")
      ->check(CLI::IsMember({"kernel", "euclidean"}))
      ->capture_default_str();
  rp->add_option("--out", ro.out, "complex CSV")->required();
  rp->callback([&] {
    action = [&] {
      const KernelSpec k = g.kernel_spec();
      if (po.in.empty() == !ro.sites.has_value()) {
        throw ValidationError("give exactly one of --in and --sites");
      }
      std::optional<WeightedSiteSet> S;
      double alpha = INFINITY;
      if (ro.sites) {
        S = read_sites_csv(*ro.sites);
        m.inputs.push_back(*ro.sites);
        if (!ro.alpha) throw ValidationError("--sites needs an explicit --alpha-max");
      } else {
        const PointCloud P = load_points(po.in, m);
        S = make_sites(k, P).sites;
        alpha = default_alpha_max(k, P);
      }
      if (ro.alpha) alpha = parse_double(*ro.alpha, "--alpha-max");
      m.params["alpha_max_used"] = format_double(alpha);
      const auto C = weighted_rips(k, *S, ro.max_dim, alpha,
                                   ro.metric == "kernel" ? SiteMetricKind::kernel
                                                         : SiteMetricKind::euclidean);
      write_file_atomic(ro.out, complex_to_csv(C));
      m.outputs.push_back(ro.out);
    };
  });

  // persist -------------------------------------------------------------------
  auto* pe = app.add_subcommand("persist", "persistence diagram of a complex or a grid field");
  struct {
    std::optional<std::string> complex, grid, out;
    bool superlevel = false;
    double min_persistence = 0.0;
  } pso;
  pe->add_option("--complex", pso.complex, "complex CSV");
  pe->add_option("--grid", pso.grid, "grid CSV (lower-star filtration)");
  pe->add_flag("--superlevel", pso.superlevel, "superlevel filtration of a grid (negated values)");
  pe->add_option("--min-persistence", pso.min_persistence, "drop finite pairs this short")
      ->capture_default_str();
  pe->add_option("--out", pso.out, "diagram CSV (stdout if omitted)");
  pe->callback([&] {
    action = [&] {
      if (pso.complex.has_value() == pso.grid.has_value()) {
        throw ValidationError("give exactly one of --complex and --grid");
      }
      PersistenceOptions opt;
      opt.min_persistence = pso.min_persistence;
      PersistenceDiagram d;
      if (pso.complex) {
        if (pso.superlevel) throw ValidationError("--superlevel applies to grids only");
        d = compute_persistence(read_complex_csv(*pso.complex), opt);
        m.inputs.push_back(*pso.complex);
      } else {
        d = lower_star_grid_persistence(read_grid_csv(*pso.grid), pso.superlevel, opt);
        m.inputs.push_back(*pso.grid);
      }
      d.sort();
      emit(pso.out, diagram_to_csv(d), m);
    };
  });

  // bottleneck ----------------------------------------------------------------
  auto* bn = app.add_subcommand("bottleneck", "bottleneck distance between two diagrams");
  struct {
    std::string a, b;
    std::optional<int> dim;
    std::optional<double> log_floor;
    std::optional<std::string> out;
  } bo;
  bn->add_option("--a", bo.a, "first diagram CSV")->required();
  bn->add_option("--b", bo.b, "second diagram CSV")->required();
  bn->add_option("--dim", bo.dim, "homology dimension (default: all)");
  bn->add_option("--log-floor", bo.log_floor, "compare on a log scale, clamping below at this value");
  bn->add_option("--out", bo.out, "output CSV (stdout if omitted)");
  bn->callback([&] {
    action = [&] {
      PersistenceDiagram a = read_diagram_csv(bo.a), b = read_diagram_csv(bo.b);
      m.inputs = {bo.a, bo.b};
      if (bo.log_floor) {
        a = log_transform(a, *bo.log_floor);
        b = log_transform(b, *bo.log_floor);
      }
      std::string s = "dim,bottleneck\n";
      const int top = std::max(a.max_dim(), b.max_dim());
      for (int d = bo.dim ? *bo.dim : 0; d <= (bo.dim ? *bo.dim : top); ++d) {
        s += std::to_string(d) + "," + format_double(bottleneck(a, b, d)) + "\n";
      }
      emit(bo.out, s, m);
    };
  });

  // grid ----------------------------------------------------------------------
  auto* gr = app.add_subcommand("grid", "evaluate kde or d^K on a regular grid");
  struct {
    std::string in, kind = "kdist", out;
    double eps = 0.0;
    std::optional<std::string> box;
  } gro;
  gr->add_option("--in", gro.in, "point CSV")->required();
  gr->add_option("--grid-eps", gro.eps, "grid accuracy eps (edge length eps/(2 sqrt d))")->required();
  gr->add_option("--kind", gro.kind, "kde or kdist")->capture_default_str();
  gr->add_option("--box", gro.box, "lo1,...,lod,hi1,...,hid (default: padded bounding box)");
  gr->add_option("--out", gro.out, "grid CSV")->required();
  gr->callback([&] {
    action = [&] {
      const KernelSpec k = g.kernel_spec();
      const PointCloud P = load_points(gro.in, m);
      std::optional<Box> box;
      if (gro.box) {
        const auto v = parse_list(*gro.box, "--box");
        if (v.size() != 2 * P.dim()) throw DimensionMismatch(2 * P.dim(), v.size());
        box = Box{Point(v.begin(), v.begin() + static_cast<long>(P.dim())),
                  Point(v.begin() + static_cast<long>(P.dim()), v.end())};
      }
      const GridField F = eval_grid(k, P, gro.eps, box, parse_field_kind(gro.kind));
      if (F.meta.truncation_disabled) {
        std::cerr << "warning: eps >= K(x,x); kernel truncation disabled, all nodes exact\n";
      }
      m.params["grid_nodes"] = F.size();
      write_file_atomic(gro.out, grid_to_csv(F));
      m.outputs.push_back(gro.out);
    };
  });

  // contours ------------------------------------------------------------------
  auto* ct = app.add_subcommand("contours", "marching-squares level sets of a 2-D grid as SVG");
  struct {
    std::string grid, levels, out;
    std::optional<std::string> csv;
  } cto;
  ct->add_option("--grid", cto.grid, "grid CSV")->required();
  ct->add_option("--levels", cto.levels, "comma-separated levels")->required();
  ct->add_option("--out", cto.out, "SVG file")->required();
  ct->add_option("--csv", cto.csv, "also write polylines as CSV (level,line,x,y)");
  ct->callback([&] {
    action = [&] {
      const GridField F = read_grid_csv(cto.grid);
      m.inputs.push_back(cto.grid);
      const auto C = export_contours(F, parse_list(cto.levels, "--levels"));
      write_file_atomic(cto.out, contours_to_svg(F, C));
      m.outputs.push_back(cto.out);
      if (cto.csv) {
        std::string s = "level,line,x,y\n";
        for (const auto& c : C) {
          for (std::size_t l = 0; l < c.lines.size(); ++l) {
            for (const auto& [x, y] : c.lines[l]) {
              s += format_double(c.level) + "," + std::to_string(l) + "," + format_double(x) + "," +
                   format_double(y) + "\n";
            }
          }
        }
        write_file_atomic(*cto.csv, s);
        m.outputs.push_back(*cto.csv);
      }
    };
  });

  // diagnose ------------------------------------------------------------------
  auto* dg = app.add_subcommand("diagnose", "randomized checks of analytic properties (JSON lines)");
  struct {
    std::string in, property = "all";
    std::optional<std::string> other, out;
    std::size_t trials = 1000;
    std::uint64_t seed = 0;
  } dgo;
  dg->add_option("--in", dgo.in, "point CSV")->required();
  dg->add_option("--property", dgo.property,
                 "all, lipschitz, semiconcavity, properness, sigma-lipschitz, dk-w2 or k4")
      ->check(CLI::IsMember(
          {"all", "lipschitz", "semiconcavity", "properness", "sigma-lipschitz", "dk-w2", "k4"}))
      ->capture_default_str();
  dg->add_option("--other", dgo.other, "second point CSV for k4");
  dg->add_option("--trials", dgo.trials, "random trials per property")->capture_default_str();
  dg->add_option("--seed", dgo.seed, "random seed")->required();
  dg->add_option("--out", dgo.out, "JSON lines file (stdout if omitted)");
  dg->callback([&] {
    action = [&] {
      const KernelSpec k = g.kernel_spec();
      const PointCloud P = load_points(dgo.in, m);
      auto want = [&](const char* p) { return dgo.property == "all" || dgo.property == p; };
      std::string lines;
      auto add = [&](const ProbeReport& r) { lines += r.to_json_line() + "\n"; };
      if (want("lipschitz")) add(check_lipschitz_x(k, P, dgo.trials, dgo.seed));
      if (want("semiconcavity") && k.family() == KernelFamily::gaussian) {
        add(check_semiconcavity(k, P, dgo.trials, 0.0, dgo.seed));
      }
      if (want("properness")) add(check_properness(k, P, std::max<std::size_t>(1, dgo.trials / 10), dgo.seed));
      if (want("sigma-lipschitz")) {
        std::vector<double> sig;
        for (int i = 0; i <= 200; ++i) sig.push_back(k.sigma() * (0.5 + 1.5 * i / 200.0));
        const PointSet probes = padded_probe_grid(P, 3.0 * k.sigma(), 10);
        add(check_sigma_lipschitz(P, probes, sig));
      }
      if (want("dk-w2")) {
        add(check_dk_w2_dirac(P, {0.5 * k.sigma(), k.sigma(), 2.0 * k.sigma(), 10.0 * k.sigma()},
                              dgo.trials, dgo.seed));
      }
      if (want("k4") && dgo.other) {
        const PointCloud Q = load_points(*dgo.other, m);
        add(check_k4(k, P, Q, padded_probe_grid(P, 3.0 * k.sigma(), 30)));
      } else if (dgo.property == "k4") {
        throw ValidationError("k4 needs --other");
      }
      emit(dgo.out, lines, m);
    };
  });

  // compare-dtm ---------------------------------------------------------------
  auto* cd = app.add_subcommand("compare-dtm", "distance to a measure next to the kernel distance");
  struct {
    std::string in;
    double m0 = 0.1;
    std::optional<std::string> at, probes, out;
  } cdo;
  cd->add_option("--in", cdo.in, "point CSV (uniform weights)")->required();
  cd->add_option("--m0", cdo.m0, "mass parameter in (0,1]")->capture_default_str();
  cd->add_option("--at", cdo.at, "comma-separated evaluation point");
  cd->add_option("--probes", cdo.probes, "point CSV of evaluation points");
  cd->add_option("--out", cdo.out, "output CSV (stdout if omitted)");
  cd->callback([&] {
    action = [&] {
      const KernelSpec k = g.kernel_spec();
      const PointCloud P = load_points(cdo.in, m);
      const PointSet X = load_probes(cdo.at, cdo.probes, P.dim(), m);
      const KernelDistanceField f(k, P);
      std::vector<double> a(X.size()), b(X.size());
      for (std::size_t i = 0; i < X.size(); ++i) {
        a[i] = dtm(P, cdo.m0, X[i]);
        b[i] = f(X[i]);
      }
      emit(cdo.out, values_csv(X, {"dtm", "kdist"}, {a, b}), m);
    };
  });

  // replay --------------------------------------------------------------------
  auto* rl = app.add_subcommand("replay", "re-run a manifest and compare output digests");
  std::string replay_path;
  rl->add_option("--manifest-file", replay_path, "manifest JSON to replay")->required();
  bool replay = false;
  rl->callback([&] { replay = true; });

  try {
    std::vector<std::string> rev(args.rbegin(), args.rend());
    app.parse(rev);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitValidation;
  }

  if (replay) {
    const RunManifest old = RunManifest::from_json(nlohmann::json::parse(read_file(replay_path)));
    std::vector<std::string> again(old.argv.begin(), old.argv.end());
    again.insert(again.begin(), "--no-manifest");
    const int code = run(again);
    if (code != 0) return code;
    std::size_t same = 0;
    for (const auto& [path, digest] : old.digests) {
      const std::string now = file_digest(path);
      if (now == digest) {
        ++same;
      } else {
        std::cerr << "replay: " << path << " differs (" << digest << " -> " << now << ")\n";
      }
    }
    std::cout << "replay: " << same << "/" << old.digests.size() << " outputs identical\n";
    return same == old.digests.size() ? 0 : kExitReplayMismatch;
  }

  const CLI::App* chosen = app.get_subcommands().front();
  m.command = chosen->get_name();
  m.argv = args;
  m.params = option_values(app);
  const nlohmann::json sub = option_values(*chosen);
  for (const auto& [key, v] : sub.items()) m.params[key] = v;
  const auto t0 = std::chrono::steady_clock::now();
  action();
  m.wall_clock_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  for (const auto& o : m.outputs) m.digests[o] = file_digest(o);
  const std::optional<std::string> mpath =
      g.manifest ? g.manifest
                 : (m.outputs.empty() ? std::nullopt
                                      : std::optional<std::string>(m.outputs.front() + ".manifest.json"));
  if (mpath && !g.no_manifest) write_file_atomic(*mpath, m.to_json().dump(2) + "\n");
  return 0;
}

int run(const std::vector<std::string>& args) {
  try {
    return dispatch(args);
  } catch (const ValidationError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitValidation;
  } catch (const NumericError& e) {
    std::cerr << "numeric error: " << e.what() << '\n';
    return kExitNumeric;
  } catch (const nlohmann::json::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitValidation;
  } catch (const std::filesystem::filesystem_error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitValidation;
  }
}

}  // namespace

int main(int argc, char** argv) {
  return run(std::vector<std::string>(argv + 1, argv + argc));
}
