#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <fstream>

#include "vemmg/mesh.hpp"

using namespace vemmg;

namespace {

double total_area(const PolygonalMesh& m) {
  double s = 0.0;
  for (double a : m.cell_area) s += a;
  return s;
}

std::string temp_path(const std::string& name) {
  return std::string("/tmp/vemmg_") + name;
}

} // namespace

TEST_CASE("generate: tiling and small counts") {
  PolygonalMesh m = generate_polygonal_mesh(4, 42, 200);
  CHECK(m.n_cells() == 4);
  CHECK(total_area(m) == doctest::Approx(1.0).epsilon(1e-10));
  CHECK(validate(m).ok());
}

TEST_CASE("generate: independent seeds give distinct vertex sets") {
  PolygonalMesh a = generate_polygonal_mesh(64, 1, 20);
  PolygonalMesh b = generate_polygonal_mesh(64, 2, 20);
  CHECK(a.n_cells() == 64);
  CHECK(b.n_cells() == 64);
  bool same = a.n_vertices() == b.n_vertices();
  if (same)
    for (int i = 0; i < a.n_vertices() && same; ++i) same = a.vertices[i] == b.vertices[i];
  CHECK_FALSE(same);
}

TEST_CASE("generate: determinism (bit-identical reruns)") {
  PolygonalMesh a = generate_polygonal_mesh(128, 9, 30);
  PolygonalMesh b = generate_polygonal_mesh(128, 9, 30);
  REQUIRE(a.n_vertices() == b.n_vertices());
  REQUIRE(a.cells == b.cells);
  for (int i = 0; i < a.n_vertices(); ++i) {
    CHECK(a.vertices[i].x() == b.vertices[i].x());
    CHECK(a.vertices[i].y() == b.vertices[i].y());
  }
}

TEST_CASE("generate: quasi-uniform mesh size band") {
  PolygonalMesh m = generate_polygonal_mesh(128, 3, 100);
  double expected = 1.0 / std::sqrt(128.0);
  CHECK(m.h >= 0.5 * expected);
  CHECK(m.h <= 4.0 * expected);
  CHECK(validate(m).ok());
}

TEST_CASE("generate: precondition") {
  CHECK_THROWS_AS(generate_polygonal_mesh(3, 1), std::invalid_argument);
}

TEST_CASE("hierarchy: counts with 1/4 ratio") {
  MeshHierarchy hier = build_hierarchy(512, 4, 5);
  REQUIRE(hier.n_levels() == 4);
  CHECK(hier.levels[0].n_cells() == 8);
  CHECK(hier.levels[1].n_cells() == 32);
  CHECK(hier.levels[2].n_cells() == 128);
  CHECK(hier.levels[3].n_cells() == 512);
  for (int j = 1; j < 4; ++j) {
    CHECK(hier.h[j] <= hier.h[j - 1]);
    CHECK(hier.h[j] >= 0.2 * hier.h[j - 1]);
  }
  CHECK(hier.quasi_uniformity_c >= 0.2);

  MeshHierarchy single = build_hierarchy(512, 1, 5);
  CHECK(single.n_levels() == 1);
  CHECK(single.levels[0].n_cells() == 512);

  CHECK_THROWS_AS(build_hierarchy(100, 3, 5), std::invalid_argument);
}

TEST_CASE("validate: constructed negatives") {
  PolygonalMesh m = generate_polygonal_mesh(16, 8, 50);
  REQUIRE(validate(m).ok());

  SUBCASE("reversed cell orientation flagged") {
    PolygonalMesh bad = m;
    std::reverse(bad.cells[3].begin(), bad.cells[3].end());
    auto rep = validate(bad);
    bool found = false;
    for (const auto& v : rep.violations)
      if (v.what.find("counterclockwise") != std::string::npos && v.cell == 3) found = true;
    CHECK(found);
  }

  SUBCASE("hanging node flagged as conformity violation") {
    PolygonalMesh bad = m;
    // split one edge of cell 0 by inserting a midpoint vertex only there
    auto& cell = bad.cells[0];
    int a = cell[0], b = cell[1];
    Vec2 mid = 0.5 * (bad.vertices[a] + bad.vertices[b]);
    int nv = bad.n_vertices();
    bad.vertices.push_back(mid);
    bad.boundary_vertex.push_back(0);
    cell.insert(cell.begin() + 1, nv);
    bad.finalize();
    auto rep = validate(bad);
    bool found = false;
    for (const auto& v : rep.violations)
      if (v.what.find("only one cell") != std::string::npos) found = true;
    CHECK(found);
  }
}

TEST_CASE("save/load: bit-exact round trip") {
  PolygonalMesh m = generate_polygonal_mesh(32, 77, 60);
  std::string path = temp_path("roundtrip.json");
  save_mesh(m, path);
  PolygonalMesh r = load_mesh(path);
  REQUIRE(r.n_vertices() == m.n_vertices());
  REQUIRE(r.cells == m.cells);
  for (int i = 0; i < m.n_vertices(); ++i) {
    CHECK(r.vertices[i].x() == m.vertices[i].x()); // bitwise
    CHECK(r.vertices[i].y() == m.vertices[i].y());
  }
  CHECK(r.boundary_vertex == m.boundary_vertex);
  std::remove(path.c_str());
}

TEST_CASE("load: missing vertex index rejected") {
  std::string path = temp_path("bad_index.json");
  {
    std::ofstream out(path);
    out << R"({"format_version":1,"vertices":[[0,0],[1,0],[1,1]],)"
           R"("cells":[[0,1,5]],"boundary_vertices":[0,1,2]})";
  }
  CHECK_THROWS_AS(load_mesh(path), IndexOutOfRange);
  std::remove(path.c_str());
}

TEST_CASE("load: format version and io failures") {
  std::string path = temp_path("bad_version.json");
  {
    std::ofstream out(path);
    out << R"({"format_version":99,"vertices":[],"cells":[],"boundary_vertices":[]})";
  }
  CHECK_THROWS_AS(load_mesh(path), FormatVersionMismatch);
  std::remove(path.c_str());
  CHECK_THROWS_AS(load_mesh("/nonexistent/mesh.json"), MeshIoError);
}

TEST_CASE("load: shipped 8-cell reference fixture") {
  PolygonalMesh m = load_mesh("tests/fixtures/mesh8.json");
  CHECK(m.n_cells() == 8);
  CHECK(total_area(m) == doctest::Approx(1.0).epsilon(1e-10));
  CHECK(validate(m).ok());
}

TEST_CASE("boundary vertices lie on the boundary") {
  PolygonalMesh m = generate_polygonal_mesh(64, 13, 40);
  int n_boundary = 0;
  for (int v = 0; v < m.n_vertices(); ++v) {
    if (!m.boundary_vertex[v]) continue;
    ++n_boundary;
    const Vec2& p = m.vertices[v];
    double dist = std::min({std::abs(p.x()), std::abs(p.x() - 1.0), std::abs(p.y()),
                            std::abs(p.y() - 1.0)});
    CHECK(dist <= 1e-12);
  }
  CHECK(n_boundary >= 4);
}
