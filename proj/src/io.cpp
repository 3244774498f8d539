#include "cryobayes/io.hpp"

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "cryobayes/hash.hpp"

namespace fs = std::filesystem;

namespace cryobayes {

namespace {

constexpr const char* kVersion = "0.1.0";

std::vector<std::string> split(const std::string& line, char delim) {
  std::vector<std::string> out;
  std::string field;
  std::istringstream iss(line);
  while (std::getline(iss, field, delim)) out.push_back(field);
  if (!line.empty() && line.back() == delim) out.emplace_back();
  return out;
}

double parse_double(const std::string& s, const std::string& context) {
  try {
    std::size_t pos = 0;
    const double v = std::stod(s, &pos);
    if (pos != s.size()) throw std::invalid_argument(s);
    return v;
  } catch (const std::exception&) {
    throw IoError(context + ": cannot parse number '" + s + "'");
  }
}

int parse_int(const std::string& s, const std::string& context) {
  try {
    std::size_t pos = 0;
    const int v = std::stoi(s, &pos);
    if (pos != s.size()) throw std::invalid_argument(s);
    return v;
  } catch (const std::exception&) {
    throw IoError(context + ": cannot parse integer '" + s + "'");
  }
}

std::ofstream open_out(const std::string& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot open '" + path + "' for writing");
  return out;
}

std::ifstream open_in(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open '" + path + "' for reading");
  return in;
}

}  // namespace

std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

void write_polygon(const std::string& path, const Polygon& poly) {
  auto out = open_out(path);
  out << "s1,s2\n";
  for (const auto& p : poly.vertices())
    out << format_double(p.x) << "," << format_double(p.y) << "\n";
}

Polygon read_polygon(const std::string& path) {
  auto in = open_in(path);
  std::vector<Point2> verts;
  std::string line;
  bool first = true;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    if (first && line.rfind("s1,", 0) == 0) {
      first = false;
      continue;
    }
    first = false;
    auto f = split(line, ',');
    if (f.size() != 2) throw IoError(path + ": polygon rows need two fields");
    verts.push_back({parse_double(f[0], path), parse_double(f[1], path)});
  }
  if (verts.size() < 3) throw IoError(path + ": polygon needs at least 3 vertices");
  return Polygon(std::move(verts));
}

void write_mesh(const std::string& vertices_path, const std::string& triangles_path,
                const TriMesh& mesh) {
  {
    auto out = open_out(vertices_path);
    out << "index,s1,s2,boundary\n";
    for (int i = 0; i < mesh.n_vertices(); ++i)
      out << i << "," << format_double(mesh.vertices[static_cast<std::size_t>(i)].x) << ","
          << format_double(mesh.vertices[static_cast<std::size_t>(i)].y) << ","
          << (mesh.boundary_flags[static_cast<std::size_t>(i)] ? 1 : 0) << "\n";
  }
  {
    auto out = open_out(triangles_path);
    out << "v1,v2,v3\n";
    for (const auto& t : mesh.triangles) out << t[0] << "," << t[1] << "," << t[2] << "\n";
  }
}

TriMesh read_mesh(const std::string& vertices_path, const std::string& triangles_path,
                  const Polygon& domain_polygon) {
  TriMesh mesh;
  mesh.domain_polygon = domain_polygon;
  {
    auto in = open_in(vertices_path);
    std::string line;
    while (std::getline(in, line)) {
      if (line.empty() || line[0] == '#' || line.rfind("index,", 0) == 0) continue;
      auto f = split(line, ',');
      if (f.size() != 4) throw IoError(vertices_path + ": vertex rows need four fields");
      const int idx = parse_int(f[0], vertices_path);
      if (idx != static_cast<int>(mesh.vertices.size()))
        throw IoError(vertices_path + ": vertex indices must be consecutive from 0");
      mesh.vertices.push_back({parse_double(f[1], vertices_path), parse_double(f[2], vertices_path)});
      mesh.boundary_flags.push_back(parse_int(f[3], vertices_path) != 0);
    }
  }
  {
    auto in = open_in(triangles_path);
    std::string line;
    while (std::getline(in, line)) {
      if (line.empty() || line[0] == '#' || line.rfind("v1,", 0) == 0) continue;
      auto f = split(line, ',');
      if (f.size() != 3) throw IoError(triangles_path + ": triangle rows need three fields");
      mesh.triangles.push_back({parse_int(f[0], triangles_path), parse_int(f[1], triangles_path),
                                parse_int(f[2], triangles_path)});
    }
  }
  mesh.validate();
  return mesh;
}

void write_grid_field(const std::string& path, const GridField& field) {
  auto out = open_out(path);
  out << field.grid.nx << "," << field.grid.ny << "," << format_double(field.grid.dx) << ","
      << format_double(field.grid.ox) << "," << format_double(field.grid.oy) << "\n";
  for (int j = 0; j < field.grid.ny; ++j) {
    for (int i = 0; i < field.grid.nx; ++i) {
      if (i) out << ",";
      out << format_double(field.at(i, j));
    }
    out << "\n";
  }
}

GridField read_grid_field(const std::string& path) {
  auto in = open_in(path);
  std::string line;
  if (!std::getline(in, line)) throw IoError(path + ": empty grid file");
  auto head = split(line, ',');
  if (head.size() != 5) throw IoError(path + ": grid header needs nx,ny,dx,ox,oy");
  GridField field;
  field.grid.nx = parse_int(head[0], path);
  field.grid.ny = parse_int(head[1], path);
  field.grid.dx = parse_double(head[2], path);
  field.grid.ox = parse_double(head[3], path);
  field.grid.oy = parse_double(head[4], path);
  if (field.grid.nx < 1 || field.grid.ny < 1) throw IoError(path + ": bad grid dimensions");
  field.values.resize(field.grid.cells());
  for (int j = 0; j < field.grid.ny; ++j) {
    if (!std::getline(in, line)) throw IoError(path + ": truncated grid file");
    auto f = split(line, ',');
    if (static_cast<int>(f.size()) != field.grid.nx)
      throw IoError(path + ": grid row " + std::to_string(j) + " has wrong width");
    for (int i = 0; i < field.grid.nx; ++i) field.at(i, j) = parse_double(f[static_cast<std::size_t>(i)], path);
  }
  return field;
}

void write_observations(const std::string& path, const std::vector<ObsRecord>& records) {
  auto out = open_out(path);
  out << "type,epoch,value,noise_sd,instrument,data\n";
  for (const auto& r : records) {
    if (r.type == ObsRecord::Type::Point) {
      out << "point," << r.epoch << "," << format_double(r.value) << ","
          << format_double(r.noise_sd) << ",," << format_double(r.s1) << ","
          << format_double(r.s2);
      for (double c : r.covariates) out << "," << format_double(c);
      out << "\n";
    } else {
      out << "footprint," << r.epoch << "," << format_double(r.value) << ","
          << format_double(r.noise_sd) << "," << r.instrument << "," << r.polygon_path << ","
          << (r.normalize ? 1 : 0) << "\n";
    }
  }
}

std::vector<ObsRecord> read_observations(const std::string& path) {
  auto in = open_in(path);
  const fs::path dir = fs::path(path).parent_path();
  std::vector<ObsRecord> records;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line[0] == '#' || line.rfind("type,", 0) == 0) continue;
    const std::string ctx = path + ":" + std::to_string(line_no);
    auto f = split(line, ',');
    if (f.size() < 6) throw IoError(ctx + ": observation rows need at least 6 fields");
    ObsRecord r;
    if (f[0] == "point")
      r.type = ObsRecord::Type::Point;
    else if (f[0] == "footprint")
      r.type = ObsRecord::Type::Footprint;
    else
      throw IoError(ctx + ": unknown observation type '" + f[0] + "'");
    r.epoch = parse_int(f[1], ctx);
    r.value = parse_double(f[2], ctx);
    r.noise_sd = parse_double(f[3], ctx);
    r.instrument = f[4];
    if (r.type == ObsRecord::Type::Point) {
      if (f.size() < 7) throw IoError(ctx + ": point rows need s1 and s2");
      r.s1 = parse_double(f[5], ctx);
      r.s2 = parse_double(f[6], ctx);
      for (std::size_t k = 7; k < f.size(); ++k)
        r.covariates.push_back(parse_double(f[k], ctx));
    } else {
      if (r.instrument.empty()) throw IoError(ctx + ": footprint rows need an instrument");
      r.polygon_path = (dir / f[5]).string();
      if (f.size() > 6 && !f[6].empty()) r.normalize = parse_int(f[6], ctx) != 0;
    }
    records.push_back(std::move(r));
  }
  return records;
}

void write_chain(const std::string& path, const MwgResult& result) {
  auto out = open_out(path);
  for (std::size_t i = 0; i < result.names.size(); ++i) out << result.names[i] << ",";
  out << "log_posterior\n";
  for (Eigen::Index r = 0; r < result.chain.rows(); ++r) {
    for (Eigen::Index c = 0; c < result.chain.cols(); ++c)
      out << format_double(result.chain(r, c)) << ",";
    out << format_double(result.chain_log_post[r]) << "\n";
  }
}

OutputDir::OutputDir(std::string path) : path_(std::move(path)) {
  std::error_code ec;
  fs::create_directories(path_, ec);
  if (ec) throw IoError("cannot create output directory '" + path_ + "': " + ec.message());
  auto marker = open_out(file(".incomplete"));
  marker << "run in progress\n";
}

std::string OutputDir::file(const std::string& relative) const {
  return (fs::path(path_) / relative).string();
}

void OutputDir::add_artifact(const std::string& relative) {
  if (finalized_) throw IoError("OutputDir: artifact added after manifest was written");
  artifacts_.push_back(relative);
}

void OutputDir::write_manifest(const nlohmann::json& config_echo, std::uint64_t seed,
                               double wall_time_s, int threads) {
  nlohmann::json manifest;
  manifest["version"] = kVersion;
  manifest["eigen_version"] = std::to_string(EIGEN_WORLD_VERSION) + "." +
                              std::to_string(EIGEN_MAJOR_VERSION) + "." +
                              std::to_string(EIGEN_MINOR_VERSION);
  manifest["seed"] = seed;
  manifest["threads"] = threads;
  manifest["wall_time_s"] = wall_time_s;
  manifest["config"] = config_echo;
  manifest["config_hash"] = sha256_hex(config_echo.dump());
  nlohmann::json arts = nlohmann::json::array();
  for (const auto& rel : artifacts_) {
    nlohmann::json a;
    a["path"] = rel;
    a["sha256"] = sha256_file(file(rel));
    arts.push_back(a);
  }
  manifest["artifacts"] = arts;
  {
    auto out = open_out(file("manifest.json"));
    out << manifest.dump(2) << "\n";
  }
  std::error_code ec;
  fs::remove(file(".incomplete"), ec);
  finalized_ = true;
}

}  // namespace cryobayes
