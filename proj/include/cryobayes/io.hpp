#pragma once

#include <optional>
#include <string>
#include <vector>

// Single-header nlohmann/json from vendor/.
#include "json.hpp"

#include "cryobayes/mesh.hpp"
#include "cryobayes/mwg.hpp"
#include "cryobayes/transport.hpp"
#include "cryobayes/types.hpp"

namespace cryobayes {

/// Doubles are written with %.17g so values round-trip exactly.
std::string format_double(double v);

// --- polygons: one "s1,s2" line per vertex, implicitly closed ---
void write_polygon(const std::string& path, const Polygon& poly);
Polygon read_polygon(const std::string& path);

// --- meshes: vertices (index,s1,s2,boundary) + triangles (v1,v2,v3) ---
void write_mesh(const std::string& vertices_path, const std::string& triangles_path,
                const TriMesh& mesh);
TriMesh read_mesh(const std::string& vertices_path, const std::string& triangles_path,
                  const Polygon& domain_polygon = Polygon());

// --- gridded fields: header nx,ny,dx,ox,oy then ny rows of nx values ---
void write_grid_field(const std::string& path, const GridField& field);
GridField read_grid_field(const std::string& path);

// --- observations ---
struct ObsRecord {
  enum class Type { Point, Footprint };
  Type type = Type::Point;
  int epoch = 0;
  double value = 0.0;
  double noise_sd = 1.0;
  std::string instrument;  // footprint rows only
  double s1 = 0.0, s2 = 0.0;
  std::vector<double> covariates;
  std::string polygon_path;  // footprint rows: resolved relative to the file
  bool normalize = false;
};

void write_observations(const std::string& path, const std::vector<ObsRecord>& records);
std::vector<ObsRecord> read_observations(const std::string& path);

// --- sampler chains: one row per retained iteration ---
void write_chain(const std::string& path, const MwgResult& result);

/// Output directory with a partial-write marker and a content-hash manifest.
/// Construction creates the directory and drops `.incomplete`; writing the
/// manifest removes it. All writes to one directory go through one writer.
class OutputDir {
 public:
  explicit OutputDir(std::string path);

  const std::string& path() const { return path_; }
  std::string file(const std::string& relative) const;

  /// Record an emitted artifact (hashed when the manifest is written).
  void add_artifact(const std::string& relative);

  const std::vector<std::string>& artifacts() const { return artifacts_; }

  /// Writes manifest.json (config hash, seed, versions, wall time, artifact
  /// hashes) and removes the `.incomplete` marker.
  void write_manifest(const nlohmann::json& config_echo, std::uint64_t seed,
                      double wall_time_s, int threads);

 private:
  std::string path_;
  std::vector<std::string> artifacts_;
  bool finalized_ = false;
};

}  // namespace cryobayes
