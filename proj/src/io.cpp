#include "kdtopo/io.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <numbers>
#include <random>
#include <sstream>

#include "kdtopo/error.hpp"

namespace kdtopo {

std::string format_double(double v) {
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  if (std::isnan(v)) return "nan";
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

namespace {

std::string format8(double v) {
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.8g", v);
  return buf;
}

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::string cur;
  std::istringstream is(s);
  while (std::getline(is, cur, sep)) out.push_back(trim(cur));
  if (!s.empty() && s.back() == sep) out.emplace_back();
  return out;
}

std::string at(const std::string& path, std::size_t line) {
  return path + ":" + std::to_string(line);
}

std::vector<std::string> read_lines(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open '" + path + "'");
  std::vector<std::string> lines;
  std::string line;
  while (std::getline(in, line)) lines.push_back(line);
  return lines;
}

}  // namespace

double parse_double(const std::string& raw, const std::string& where) {
  const std::string s = trim(raw);
  if (s == "inf" || s == "+inf" || s == "Infinity") return INFINITY;
  if (s == "-inf" || s == "-Infinity") return -INFINITY;
  double v = 0.0;
  const char* b = s.data();
  if (!s.empty() && s[0] == '+') ++b;
  const auto res = std::from_chars(b, s.data() + s.size(), v);
  if (res.ec != std::errc() || res.ptr != s.data() + s.size() || s.empty()) {
    throw ValidationError(where + ": cannot parse number '" + s + "'");
  }
  return v;
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ValidationError("cannot open '" + path + "'");
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

std::string file_digest(const std::string& path) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%016zx", std::hash<std::string>{}(read_file(path)));
  return buf;
}

void write_file_atomic(const std::string& path, const std::string& content) {
  namespace fs = std::filesystem;
  const fs::path target(path);
  if (target.has_parent_path()) fs::create_directories(target.parent_path());
  const fs::path tmp = target.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw ValidationError("cannot write '" + tmp.string() + "'");
    out << content;
    if (!out) throw ValidationError("write failed for '" + tmp.string() + "'");
  }
  fs::rename(tmp, target);
}

// Points ----------------------------------------------------------------------

ReadResult read_points_csv(const std::string& path) {
  const auto lines = read_lines(path);
  std::size_t ln = 0;
  while (ln < lines.size() && trim(lines[ln]).empty()) ++ln;
  if (ln == lines.size()) throw ValidationError(path + ": empty point file");
  const auto header = split(trim(lines[ln]), ',');
  std::size_t dim = 0;
  bool weighted = false;
  for (std::size_t c = 0; c < header.size(); ++c) {
    if (header[c] == "x" + std::to_string(c + 1)) {
      if (weighted) throw ValidationError(at(path, ln + 1) + ": weight column must be last");
      ++dim;
    } else if (header[c] == "w" && c + 1 == header.size()) {
      weighted = true;
    } else {
      throw ValidationError(at(path, ln + 1) + ": expected header x1,...,xd[,w], found '" +
                            header[c] + "'");
    }
  }
  if (dim == 0) throw ValidationError(at(path, ln + 1) + ": header has no coordinate columns");
  std::vector<double> coords, weights;
  for (++ln; ln < lines.size(); ++ln) {
    const std::string line = trim(lines[ln]);
    if (line.empty() || line[0] == '#') continue;
    const auto cells = split(line, ',');
    if (cells.size() != dim + (weighted ? 1 : 0)) {
      throw ValidationError(at(path, ln + 1) + ": expected " +
                            std::to_string(dim + (weighted ? 1 : 0)) + " fields, found " +
                            std::to_string(cells.size()));
    }
    for (std::size_t c = 0; c < dim; ++c) {
      const double v = parse_double(cells[c], at(path, ln + 1));
      if (!std::isfinite(v)) throw ValidationError(at(path, ln + 1) + ": non-finite coordinate");
      coords.push_back(v);
    }
    if (weighted) {
      const double w = parse_double(cells[dim], at(path, ln + 1));
      if (!(w >= 0.0) || !std::isfinite(w)) {
        throw ValidationError(at(path, ln + 1) + ": weights must be nonnegative");
      }
      weights.push_back(w);
    }
  }
  if (coords.empty()) throw ValidationError(path + ": no points");
  if (!weighted) return ReadResult{PointCloud(dim, std::move(coords)), {}};
  std::vector<std::string> warnings;
  double total = 0.0;
  for (double w : weights) total += w;
  if (!(total > 0.0)) throw ValidationError(path + ": weights sum to zero");
  if (std::abs(total - 1.0) > 1e-9) {
    warnings.push_back(path + ": weights sum to " + format_double(total) + "; renormalized");
  }
  for (double& w : weights) w /= total;
  return ReadResult{PointCloud(dim, std::move(coords), std::move(weights)), std::move(warnings)};
}

std::string points_to_csv(const PointCloud& P, bool with_weights) {
  std::string s;
  for (std::size_t a = 0; a < P.dim(); ++a) s += (a ? ",x" : "x") + std::to_string(a + 1);
  if (with_weights) s += ",w";
  s += '\n';
  for (std::size_t i = 0; i < P.size(); ++i) {
    for (std::size_t a = 0; a < P.dim(); ++a) {
      if (a) s += ',';
      s += format_double(P.point(i)[a]);
    }
    if (with_weights) s += "," + format_double(P.weight(i));
    s += '\n';
  }
  return s;
}

void write_points_csv(const std::string& path, const PointCloud& P, bool with_weights) {
  write_file_atomic(path, points_to_csv(P, with_weights));
}

// Sites -----------------------------------------------------------------------

std::string sites_to_csv(const WeightedSiteSet& S) {
  std::string s;
  for (std::size_t a = 0; a < S.dim(); ++a) s += "x" + std::to_string(a + 1) + ",";
  s += "site_weight\n";
  for (std::size_t i = 0; i < S.size(); ++i) {
    for (std::size_t a = 0; a < S.dim(); ++a) s += format_double(S.site(i)[a]) + ",";
    s += format_double(S.weight(i)) + "\n";
  }
  return s;
}

WeightedSiteSet read_sites_csv(const std::string& path) {
  const auto lines = read_lines(path);
  std::size_t ln = 0;
  while (ln < lines.size() && trim(lines[ln]).empty()) ++ln;
  if (ln == lines.size()) throw ValidationError(path + ": empty site file");
  const auto header = split(trim(lines[ln]), ',');
  const std::size_t dim = header.size() - 1;
  for (std::size_t c = 0; c < dim; ++c) {
    if (header[c] != "x" + std::to_string(c + 1)) {
      throw ValidationError(at(path, ln + 1) + ": expected header x1,...,xd,site_weight");
    }
  }
  if (dim == 0 || header.back() != "site_weight") {
    throw ValidationError(at(path, ln + 1) + ": expected header x1,...,xd,site_weight");
  }
  std::vector<double> coords, weights;
  for (++ln; ln < lines.size(); ++ln) {
    const std::string line = trim(lines[ln]);
    if (line.empty() || line[0] == '#') continue;
    const auto cells = split(line, ',');
    if (cells.size() != dim + 1) {
      throw ValidationError(at(path, ln + 1) + ": expected " + std::to_string(dim + 1) + " fields");
    }
    for (std::size_t c = 0; c < dim; ++c) coords.push_back(parse_double(cells[c], at(path, ln + 1)));
    weights.push_back(parse_double(cells[dim], at(path, ln + 1)));
  }
  if (weights.empty()) throw ValidationError(path + ": no sites");
  try {
    return WeightedSiteSet(PointSet(dim, std::move(coords)), std::move(weights));
  } catch (const ValidationError& e) {
    throw ValidationError(path + ": " + e.what());
  }
}

// Diagrams --------------------------------------------------------------------

std::string diagram_to_csv(const PersistenceDiagram& d) {
  std::string s = "dim,birth,death\n";
  for (int k = 0; k <= d.max_dim(); ++k) {
    for (const auto& p : d.pairs(k)) {
      s += std::to_string(k) + "," + format8(p.birth) + "," + format8(p.death) + "\n";
    }
  }
  return s;
}

PersistenceDiagram read_diagram_csv(const std::string& path) {
  const auto lines = read_lines(path);
  PersistenceDiagram d(0);
  bool header = false;
  for (std::size_t ln = 0; ln < lines.size(); ++ln) {
    const std::string line = trim(lines[ln]);
    if (line.empty() || line[0] == '#') continue;
    if (!header) {
      if (line != "dim,birth,death") {
        throw ValidationError(at(path, ln + 1) + ": expected header dim,birth,death");
      }
      header = true;
      continue;
    }
    const auto cells = split(line, ',');
    if (cells.size() != 3) throw ValidationError(at(path, ln + 1) + ": expected 3 fields");
    const double dim = parse_double(cells[0], at(path, ln + 1));
    if (dim < 0 || dim != std::floor(dim) || dim > 64) {
      throw ValidationError(at(path, ln + 1) + ": bad dimension");
    }
    const double b = parse_double(cells[1], at(path, ln + 1));
    const double e = parse_double(cells[2], at(path, ln + 1));
    if (e < b) throw ValidationError(at(path, ln + 1) + ": death before birth");
    d.add(static_cast<int>(dim), b, e);
  }
  if (!header) throw ValidationError(path + ": missing header dim,birth,death");
  d.sort();
  return d;
}

// Complexes -------------------------------------------------------------------

std::string complex_to_csv(const FilteredComplex& c) {
  std::string s = "dim,value,vertices\n";
  for (std::size_t i = 0; i < c.size(); ++i) {
    s += std::to_string(c.dim(i)) + "," + format_double(c.value(i)) + ",";
    const auto vs = c.vertices(i);
    for (std::size_t t = 0; t < vs.size(); ++t) {
      if (t) s += ';';
      s += std::to_string(vs[t]);
    }
    s += '\n';
  }
  return s;
}

FilteredComplex read_complex_csv(const std::string& path) {
  const auto lines = read_lines(path);
  std::vector<SimplexInput> simplices;
  bool header = false;
  for (std::size_t ln = 0; ln < lines.size(); ++ln) {
    const std::string line = trim(lines[ln]);
    if (line.empty() || line[0] == '#') continue;
    if (!header) {
      if (line != "dim,value,vertices") {
        throw ValidationError(at(path, ln + 1) + ": expected header dim,value,vertices");
      }
      header = true;
      continue;
    }
    const auto cells = split(line, ',');
    if (cells.size() != 3) throw ValidationError(at(path, ln + 1) + ": expected 3 fields");
    const double dim = parse_double(cells[0], at(path, ln + 1));
    SimplexInput s;
    s.value = parse_double(cells[1], at(path, ln + 1));
    for (const auto& v : split(cells[2], ';')) {
      const double x = parse_double(v, at(path, ln + 1));
      if (x < 0 || x != std::floor(x) || x > 4e9) {
        throw ValidationError(at(path, ln + 1) + ": bad vertex index '" + v + "'");
      }
      s.vertices.push_back(static_cast<Vertex>(x));
    }
    if (static_cast<double>(s.vertices.size()) != dim + 1) {
      throw ValidationError(at(path, ln + 1) + ": dimension does not match vertex count");
    }
    simplices.push_back(std::move(s));
  }
  if (!header) throw ValidationError(path + ": missing header dim,value,vertices");
  try {
    return FilteredComplex::from_simplices(std::move(simplices));
  } catch (const ValidationError& e) {
    throw ValidationError(path + ": " + e.what());
  }
}

// Grids -----------------------------------------------------------------------

std::string grid_to_csv(const GridField& F) {
  F.validate();
  std::string s;
  auto row = [&](const std::string& key, auto&& values) {
    s += key;
    for (const auto& v : values) s += "," + format_double(static_cast<double>(v));
    s += '\n';
  };
  row("origin", F.origin);
  row("spacing", F.spacing);
  row("shape", F.nodes);
  s += "meta,kind=" + std::string(to_string(F.meta.kind)) +
       ",kernel=" + std::string(to_string(F.meta.family)) + ",sigma=" + format_double(F.meta.sigma) +
       ",eps=" + format_double(F.meta.eps) +
       ",truncation=" + format_double(F.meta.truncation_radius) +
       ",c_mu=" + format_double(F.meta.c_mu) + "\n";
  s += "values\n";
  const std::size_t n0 = F.nodes[0];
  for (std::size_t i = 0; i < F.size(); i += n0) {
    for (std::size_t t = 0; t < n0; ++t) {
      if (t) s += ',';
      s += format_double(F.values[i + t]);
    }
    s += '\n';
  }
  return s;
}

GridField read_grid_csv(const std::string& path) {
  const auto lines = read_lines(path);
  GridField F;
  std::size_t ln = 0;
  auto expect = [&](const std::string& key) {
    while (ln < lines.size() && trim(lines[ln]).empty()) ++ln;
    if (ln == lines.size()) throw ValidationError(path + ": missing '" + key + "' row");
    auto cells = split(trim(lines[ln]), ',');
    if (cells.empty() || cells[0] != key) {
      throw ValidationError(at(path, ln + 1) + ": expected '" + key + "' row");
    }
    cells.erase(cells.begin());
    ++ln;
    return cells;
  };
  for (const auto& c : expect("origin")) F.origin.push_back(parse_double(c, at(path, ln)));
  for (const auto& c : expect("spacing")) F.spacing.push_back(parse_double(c, at(path, ln)));
  for (const auto& c : expect("shape")) {
    const double v = parse_double(c, at(path, ln));
    if (v < 1 || v != std::floor(v)) throw ValidationError(at(path, ln) + ": bad shape entry");
    F.nodes.push_back(static_cast<std::size_t>(v));
  }
  for (const auto& c : expect("meta")) {
    const auto eq = c.find('=');
    if (eq == std::string::npos) throw ValidationError(at(path, ln) + ": bad meta entry '" + c + "'");
    const std::string key = c.substr(0, eq), val = c.substr(eq + 1);
    if (key == "kind") F.meta.kind = parse_field_kind(val);
    else if (key == "kernel") F.meta.family = parse_kernel_family(val);
    else if (key == "sigma") F.meta.sigma = parse_double(val, at(path, ln));
    else if (key == "eps") F.meta.eps = parse_double(val, at(path, ln));
    else if (key == "truncation") F.meta.truncation_radius = parse_double(val, at(path, ln));
    else if (key == "c_mu") F.meta.c_mu = parse_double(val, at(path, ln));
  }
  F.meta.truncation_disabled = std::isinf(F.meta.truncation_radius);
  expect("values");
  for (; ln < lines.size(); ++ln) {
    const std::string line = trim(lines[ln]);
    if (line.empty()) continue;
    for (const auto& c : split(line, ',')) F.values.push_back(parse_double(c, at(path, ln + 1)));
  }
  try {
    F.validate();
  } catch (const ValidationError& e) {
    throw ValidationError(path + ": " + e.what());
  }
  return F;
}

// Manifest --------------------------------------------------------------------

nlohmann::json RunManifest::to_json() const {
  nlohmann::json j;
  j["command"] = command;
  j["argv"] = argv;
  j["params"] = params;
  j["inputs"] = inputs;
  j["outputs"] = outputs;
  j["digests"] = digests;
  j["version"] = kVersion;
  j["wall_clock_seconds"] = wall_clock_seconds;
  return j;
}

RunManifest RunManifest::from_json(const nlohmann::json& j) {
  RunManifest m;
  try {
    m.command = j.at("command").get<std::string>();
    m.argv = j.at("argv").get<std::vector<std::string>>();
    if (j.contains("params")) m.params = j.at("params");
    if (j.contains("inputs")) m.inputs = j.at("inputs").get<std::vector<std::string>>();
    if (j.contains("outputs")) m.outputs = j.at("outputs").get<std::vector<std::string>>();
    if (j.contains("digests")) m.digests = j.at("digests").get<std::map<std::string, std::string>>();
    if (j.contains("wall_clock_seconds")) m.wall_clock_seconds = j.at("wall_clock_seconds").get<double>();
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError(std::string("malformed manifest: ") + e.what());
  }
  return m;
}

// Generators ------------------------------------------------------------------

Shape parse_shape(const std::string& name) {
  if (name == "circle_line") return Shape::circle_line;
  if (name == "circle") return Shape::circle;
  if (name == "segment") return Shape::segment;
  if (name == "uniform") return Shape::uniform;
  throw ValidationError("unknown shape '" + name + "' (circle_line, circle, segment, uniform)");
}

void GeneratorSpec::validate() const {
  if (n == 0) throw ValidationError("n must be positive");
  if (!(noise_sd >= 0.0) || !std::isfinite(noise_sd)) throw ValidationError("noise must be >= 0");
  if (!(background_frac >= 0.0 && background_frac < 1.0)) {
    throw ValidationError("background fraction must lie in [0,1)");
  }
}

PointCloud generate(const GeneratorSpec& params) {
  params.validate();
  std::mt19937_64 rng(params.seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::normal_distribution<double> noise(0.0, 1.0);
  constexpr double cx = 0.5, cy = 0.5, radius = 0.25;
  const double circle_len = 2.0 * std::numbers::pi * radius;
  const double segment_len = std::numbers::sqrt2;

  const std::size_t background =
      params.shape == Shape::uniform
          ? params.n
          : static_cast<std::size_t>(std::llround(params.background_frac * static_cast<double>(params.n)));
  const std::size_t structure = params.n - background;
  std::size_t on_circle = 0;
  switch (params.shape) {
    case Shape::circle_line:
      on_circle = static_cast<std::size_t>(std::llround(
          static_cast<double>(structure) * circle_len / (circle_len + segment_len)));
      break;
    case Shape::circle: on_circle = structure; break;
    default: on_circle = 0; break;
  }
  const std::size_t on_segment = structure - on_circle;

  std::vector<double> coords;
  coords.reserve(2 * params.n);
  auto emit = [&](double x, double y) {
    coords.push_back(x + params.noise_sd * noise(rng));
    coords.push_back(y + params.noise_sd * noise(rng));
  };
  for (std::size_t i = 0; i < on_circle; ++i) {
    const double t = 2.0 * std::numbers::pi * unit(rng);
    emit(cx + radius * std::cos(t), cy + radius * std::sin(t));
  }
  for (std::size_t i = 0; i < on_segment; ++i) {
    const double t = unit(rng);
    emit(t, t);
  }
  for (std::size_t i = 0; i < background; ++i) {
    const double x = unit(rng);
    coords.push_back(x);
    coords.push_back(unit(rng));
  }
  return PointCloud(2, std::move(coords));
}

GeneratorSpec preset_grid_experiment(std::uint64_t seed) {
  return GeneratorSpec{Shape::circle_line, 2000, 0.01, 1100.0 / 2000.0, seed};
}

GeneratorSpec preset_coreset_figure(std::uint64_t seed) {
  return GeneratorSpec{Shape::circle_line, 10000, 0.005, 0.25, seed};
}

}  // namespace kdtopo
