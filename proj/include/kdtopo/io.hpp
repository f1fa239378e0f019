#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include <json.hpp>

#include "kdtopo/filtration.hpp"
#include "kdtopo/grid_field.hpp"
#include "kdtopo/kernels.hpp"
#include "kdtopo/persistence.hpp"
#include "kdtopo/power_distance.hpp"

namespace kdtopo {

constexpr const char* kVersion = "0.1.0";

/// Shortest round-trip decimal form; "inf" / "-inf" for infinities.
std::string format_double(double v);
double parse_double(const std::string& s, const std::string& where);

struct ReadResult {
  PointCloud cloud;
  std::vector<std::string> warnings;
};

/// Header x1,...,xd[,w]. Weights are renormalized (with a warning) when
/// their sum is off by more than 1e-9.
ReadResult read_points_csv(const std::string& path);
std::string points_to_csv(const PointCloud& P, bool with_weights);
void write_points_csv(const std::string& path, const PointCloud& P, bool with_weights);

/// Header x1,...,xd,site_weight.
std::string sites_to_csv(const WeightedSiteSet& S);
WeightedSiteSet read_sites_csv(const std::string& path);

/// dim,birth,death with the literal inf; values printed with 8 significant digits.
std::string diagram_to_csv(const PersistenceDiagram& d);
PersistenceDiagram read_diagram_csv(const std::string& path);

/// dim,value,vertices with ';'-separated vertex indices.
std::string complex_to_csv(const FilteredComplex& c);
FilteredComplex read_complex_csv(const std::string& path);

std::string grid_to_csv(const GridField& F);
GridField read_grid_csv(const std::string& path);

/// Writes through a temporary file in the same directory, then renames.
void write_file_atomic(const std::string& path, const std::string& content);
std::string read_file(const std::string& path);
/// Hex digest of the file contents (std::hash; stable within one build).
std::string file_digest(const std::string& path);

struct RunManifest {
  std::string command;
  std::vector<std::string> argv;
  nlohmann::json params = nlohmann::json::object();
  std::vector<std::string> inputs;
  std::vector<std::string> outputs;
  /// output path -> content digest, for replay comparison
  std::map<std::string, std::string> digests;
  double wall_clock_seconds = 0.0;

  nlohmann::json to_json() const;
  static RunManifest from_json(const nlohmann::json& j);
};

enum class Shape { circle_line, circle, segment, uniform };
Shape parse_shape(const std::string& name);

struct GeneratorSpec {
  Shape shape = Shape::circle_line;
  std::size_t n = 2000;
  double noise_sd = 0.01;
  double background_frac = 0.55;
  std::uint64_t seed = 0;
  void validate() const;
};

/// Points in [0,1]^2: structure on the circle of radius 0.25 centered at
/// (0.5,0.5) and/or the segment (0,0)-(1,1), split in proportion to arc length,
/// with isotropic Gaussian noise; the rest uniform background.
PointCloud generate(const GeneratorSpec& params);

/// n=2000, 900 structure points, noise 0.01.
GeneratorSpec preset_grid_experiment(std::uint64_t seed);
/// n=10000, noise 0.005, 25% background.
GeneratorSpec preset_coreset_figure(std::uint64_t seed);

}  // namespace kdtopo
