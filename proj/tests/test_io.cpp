#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <filesystem>
#include <fstream>

#include "cryobayes/hash.hpp"
#include "cryobayes/io.hpp"

using namespace cryobayes;
namespace fs = std::filesystem;

namespace {

struct TempDir {
  fs::path path;
  TempDir() {
    path = fs::temp_directory_path() / ("cryobayes_test_" + std::to_string(::getpid()) + "_" +
                                        std::to_string(counter()++));
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
  static int& counter() {
    static int c = 0;
    return c;
  }
  std::string file(const std::string& name) const { return (path / name).string(); }
};

}  // namespace

TEST_CASE("sha256 known vectors") {
  CHECK(sha256_hex("") == "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855");
  CHECK(sha256_hex("abc") == "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
  CHECK(sha256_hex(std::string(1000000, 'a')) ==
        "cdc76e5c9914fb9281a1c7e284d73e67f1809a48a497200e046d39ccc7112cd0");
}

TEST_CASE("polygon round trip") {
  TempDir tmp;
  const Polygon poly({{0.1, 0.2}, {0.9, 0.15}, {0.5, 0.88}});
  write_polygon(tmp.file("p.csv"), poly);
  const Polygon back = read_polygon(tmp.file("p.csv"));
  REQUIRE(back.size() == 3);
  for (std::size_t i = 0; i < 3; ++i) {
    CHECK(back.vertices()[i].x == poly.vertices()[i].x);
    CHECK(back.vertices()[i].y == poly.vertices()[i].y);
  }
}

TEST_CASE("mesh round trip preserves everything bit for bit") {
  TempDir tmp;
  const TriMesh mesh = build_mesh(Polygon::rectangle(0, 0, 1, 1), 0.23, 0.4);
  write_mesh(tmp.file("v.csv"), tmp.file("t.csv"), mesh);
  const TriMesh back = read_mesh(tmp.file("v.csv"), tmp.file("t.csv"), mesh.domain_polygon);
  REQUIRE(back.n_vertices() == mesh.n_vertices());
  REQUIRE(back.n_triangles() == mesh.n_triangles());
  for (int i = 0; i < mesh.n_vertices(); ++i) {
    CHECK(back.vertices[(std::size_t)i].x == mesh.vertices[(std::size_t)i].x);
    CHECK(back.vertices[(std::size_t)i].y == mesh.vertices[(std::size_t)i].y);
    CHECK(back.boundary_flags[(std::size_t)i] == mesh.boundary_flags[(std::size_t)i]);
  }
  for (int t = 0; t < mesh.n_triangles(); ++t)
    CHECK(back.triangles[(std::size_t)t] == mesh.triangles[(std::size_t)t]);
}

TEST_CASE("grid field round trip") {
  TempDir tmp;
  GridField f;
  f.grid = {3, 2, 0.5, -1.0, 2.0};
  f.values = Vec(6);
  f.values << 1.5, -2.25, 3.125, 0.1, 1e-17, -4.75;
  write_grid_field(tmp.file("g.csv"), f);
  const GridField back = read_grid_field(tmp.file("g.csv"));
  CHECK(back.grid.nx == 3);
  CHECK(back.grid.ny == 2);
  CHECK(back.grid.dx == 0.5);
  CHECK(back.grid.ox == -1.0);
  CHECK(back.grid.oy == 2.0);
  CHECK((back.values - f.values).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("observation file round trip with point and footprint rows") {
  TempDir tmp;
  write_polygon(tmp.file("fp.csv"), Polygon::rectangle(0, 0, 0.2, 0.2));
  std::vector<ObsRecord> recs(2);
  recs[0].type = ObsRecord::Type::Point;
  recs[0].epoch = 3;
  recs[0].value = 1.25;
  recs[0].noise_sd = 0.1;
  recs[0].s1 = 0.4;
  recs[0].s2 = 0.6;
  recs[0].covariates = {0.77};
  recs[1].type = ObsRecord::Type::Footprint;
  recs[1].epoch = 1;
  recs[1].value = -0.5;
  recs[1].noise_sd = 0.3;
  recs[1].instrument = "gravimetry";
  recs[1].polygon_path = "fp.csv";
  recs[1].normalize = true;
  write_observations(tmp.file("obs.csv"), recs);

  const auto back = read_observations(tmp.file("obs.csv"));
  REQUIRE(back.size() == 2);
  CHECK(back[0].type == ObsRecord::Type::Point);
  CHECK(back[0].epoch == 3);
  CHECK(back[0].value == 1.25);
  CHECK(back[0].covariates.size() == 1);
  CHECK(back[0].covariates[0] == 0.77);
  CHECK(back[1].type == ObsRecord::Type::Footprint);
  CHECK(back[1].instrument == "gravimetry");
  CHECK(back[1].normalize);
  // resolved relative to the observation file directory
  CHECK(read_polygon(back[1].polygon_path).area() == doctest::Approx(0.04));
}

TEST_CASE("malformed observation rows raise IoError with the line number") {
  TempDir tmp;
  {
    std::ofstream out(tmp.file("bad.csv"));
    out << "type,epoch,value,noise_sd,instrument,data\n";
    out << "point,notanumber,1.0,0.1,,0.5,0.5\n";
  }
  try {
    read_observations(tmp.file("bad.csv"));
    FAIL("expected IoError");
  } catch (const IoError& e) {
    CHECK(std::string(e.what()).find(":2") != std::string::npos);
  }
}

TEST_CASE("output dir: marker, manifest, artifact hashing, tamper detection") {
  TempDir tmp;
  const std::string out_path = tmp.file("run1");
  OutputDir out(out_path);
  CHECK(fs::exists(out.file(".incomplete")));

  {
    std::ofstream f(out.file("field.csv"));
    f << "1,2,3\n";
  }
  out.add_artifact("field.csv");
  nlohmann::json echo;
  echo["mode"] = "test";
  out.write_manifest(echo, 42, 0.5, 1);
  CHECK_FALSE(fs::exists(out.file(".incomplete")));

  std::ifstream mf(out.file("manifest.json"));
  nlohmann::json manifest = nlohmann::json::parse(mf);
  CHECK(manifest["seed"] == 42);
  REQUIRE(manifest["artifacts"].size() == 1);
  CHECK(manifest["artifacts"][0]["path"] == "field.csv");
  const std::string recorded = manifest["artifacts"][0]["sha256"];
  CHECK(recorded == sha256_file(out.file("field.csv")));

  // tamper with the artifact: hash no longer matches the manifest
  {
    std::ofstream f(out.file("field.csv"), std::ios::app);
    f << "4\n";
  }
  CHECK(recorded != sha256_file(out.file("field.csv")));
}
