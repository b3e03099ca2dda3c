#include <cmath>
#include <set>

#include "doctest.h"
#include "radiotwin/mesh.hpp"
#include "radiotwin/rng.hpp"

using namespace rtwin;

namespace {

double triangulation_area(const Triangulation2D& t) {
    double a = 0.0;
    for (const TriIndex& tri : t.triangles) {
        const Vec2& p = t.vertices[tri[0]];
        const Vec2& q = t.vertices[tri[1]];
        const Vec2& r = t.vertices[tri[2]];
        a += 0.5 * std::abs(cross(q - p, r - p));
    }
    return a;
}

std::size_t edge_count(const TriangleMesh& m) {
    std::set<std::pair<int, int>> edges;
    for (const TriIndex& t : m.triangles)
        for (int k = 0; k < 3; ++k)
            edges.insert({std::min(t[k], t[(k + 1) % 3]),
                          std::max(t[k], t[(k + 1) % 3])});
    return edges.size();
}

}  // namespace

TEST_CASE("unit square tessellates into two half-area triangles") {
    const std::vector<Vec2> square = {{0, 0}, {1, 0}, {1, 1}, {0, 1}};
    const Triangulation2D t = tessellate_footprint(square);
    REQUIRE(t.triangles.size() == 2);
    for (const TriIndex& tri : t.triangles) {
        const double a = 0.5 * std::abs(cross(t.vertices[tri[1]] - t.vertices[tri[0]],
                                              t.vertices[tri[2]] - t.vertices[tri[0]]));
        CHECK(a == doctest::Approx(0.5));
    }
}

TEST_CASE("convex pentagon gives three triangles matching the shoelace area") {
    std::vector<Vec2> pentagon;
    for (int k = 0; k < 5; ++k) {
        const double ang = 2.0 * 3.141592653589793 * k / 5.0;
        pentagon.push_back({std::cos(ang), std::sin(ang)});
    }
    const Triangulation2D t = tessellate_footprint(pentagon);
    CHECK(t.triangles.size() == 3);
    CHECK(triangulation_area(t) ==
          doctest::Approx(polygon_area(pentagon)).epsilon(1e-12));
}

TEST_CASE("concave L-shape: every triangle centroid lies inside the polygon") {
    const std::vector<Vec2> ell = {{0, 0}, {4, 0}, {4, 1}, {1, 1}, {1, 3}, {0, 3}};
    const Triangulation2D t = tessellate_footprint(ell);
    CHECK(triangulation_area(t) == doctest::Approx(polygon_area(ell)).epsilon(1e-9));
    for (const TriIndex& tri : t.triangles) {
        const Vec2 c = (t.vertices[tri[0]] + t.vertices[tri[1]] +
                        t.vertices[tri[2]]) * (1.0 / 3.0);
        CHECK(point_in_polygon(c, ell));
    }
}

TEST_CASE("area conservation within 1e-9 relative on random polygons") {
    Rng rng(17);
    for (int trial = 0; trial < 25; ++trial) {
        // Star-shaped polygon: random radii on sorted angles is always simple.
        const int n = 5 + static_cast<int>(rng.below(8));
        std::vector<double> angles;
        for (int k = 0; k < n; ++k)
            angles.push_back(2.0 * 3.141592653589793 * (k + rng.uniform() * 0.8) / n);
        std::vector<Vec2> poly;
        for (double ang : angles) {
            const double r = rng.uniform(5.0, 30.0);
            poly.push_back({r * std::cos(ang), r * std::sin(ang)});
        }
        if (!is_simple_polygon(poly))
            continue;
        const Triangulation2D t = tessellate_footprint(poly);
        const double rel =
            std::abs(triangulation_area(t) - polygon_area(poly)) / polygon_area(poly);
        CHECK(rel < 1e-9);
    }
}

TEST_CASE("degenerate and self-intersecting footprints are rejected") {
    CHECK_THROWS_AS((void)tessellate_footprint({{0, 0}, {1, 0}}),
                    std::invalid_argument);
    CHECK_THROWS_AS((void)tessellate_footprint({{0, 0}, {1, 1}, {1, 0}, {0, 1}}),
                    std::invalid_argument);
    CHECK_THROWS_AS((void)tessellate_footprint({{0, 0}, {1, 0}, {2, 0}}),
                    std::invalid_argument);
}

TEST_CASE("extruded unit square is a cube: 12 triangles, area 6, volume 1") {
    const Triangulation2D t =
        tessellate_footprint({{0, 0}, {1, 0}, {1, 1}, {0, 1}});
    const TriangleMesh m = extrude(t, 1.0);
    CHECK(m.triangles.size() == 12);
    CHECK(m.vertices.size() == 8);
    CHECK(mesh_surface_area(m) == doctest::Approx(6.0));
    CHECK(mesh_volume(m) == doctest::Approx(1.0));
    CHECK(is_watertight(m));

    // Euler characteristic of a closed genus-0 surface.
    const long V = static_cast<long>(m.vertices.size());
    const long E = static_cast<long>(edge_count(m));
    const long F = static_cast<long>(m.triangles.size());
    CHECK(V - E + F == 2);
}

TEST_CASE("triangle footprint extrudes to 8 triangles") {
    const Triangulation2D t = tessellate_footprint({{0, 0}, {2, 0}, {1, 2}});
    const TriangleMesh m = extrude(t, 2.0);
    CHECK(m.triangles.size() == 8);  // 2 caps + 6 wall triangles
    CHECK(is_watertight(m));
    CHECK(mesh_volume(m) == doctest::Approx(2.0 * 2.0));  // area 2 x height 2
}

TEST_CASE("extrusion rejects non-positive heights") {
    const Triangulation2D t =
        tessellate_footprint({{0, 0}, {1, 0}, {1, 1}, {0, 1}});
    CHECK_THROWS_AS((void)extrude(t, 0.0), std::invalid_argument);
    CHECK_THROWS_AS((void)extrude(t, -1.0), std::invalid_argument);
}

TEST_CASE("mesh volume equals footprint area times height on random prisms") {
    Rng rng(23);
    for (int trial = 0; trial < 20; ++trial) {
        const int n = 4 + static_cast<int>(rng.below(6));
        std::vector<Vec2> poly;
        for (int k = 0; k < n; ++k) {
            const double ang = 2.0 * 3.141592653589793 * k / n;
            const double r = rng.uniform(4.0, 25.0);
            poly.push_back({r * std::cos(ang), r * std::sin(ang)});
        }
        if (!is_simple_polygon(poly))
            continue;
        const double h = rng.uniform(3.0, 40.0);
        const TriangleMesh m = extrude(tessellate_footprint(poly), h);
        CHECK(is_watertight(m));
        const double expected = polygon_area(poly) * h;
        CHECK(std::abs(mesh_volume(m) - expected) / expected < 1e-6);
    }
}

TEST_CASE("PLY export of a cube has 8 vertices and 12 faces") {
    const TriangleMesh m =
        extrude(tessellate_footprint({{0, 0}, {1, 0}, {1, 1}, {0, 1}}), 1.0);
    const std::string ply = export_ply(m);
    CHECK(ply.find("element vertex 8") != std::string::npos);
    CHECK(ply.find("element face 12") != std::string::npos);
    CHECK(ply.find("comment material concrete") != std::string::npos);
}

TEST_CASE("PLY round trip reproduces the vertex set and material") {
    TriangleMesh m =
        extrude(tessellate_footprint({{0, 0}, {3, 0}, {2, 2}}), 5.0);
    m.material = Material::Glass;
    const TriangleMesh back = import_ply(export_ply(m));
    REQUIRE(back.vertices.size() == m.vertices.size());
    for (std::size_t i = 0; i < m.vertices.size(); ++i) {
        CHECK(back.vertices[i].x == doctest::Approx(m.vertices[i].x));
        CHECK(back.vertices[i].y == doctest::Approx(m.vertices[i].y));
        CHECK(back.vertices[i].z == doctest::Approx(m.vertices[i].z));
    }
    CHECK(back.triangles == m.triangles);
    CHECK(back.material == Material::Glass);
}

TEST_CASE("build_scene recentres on the antenna and emits walls per edge") {
    AntennaConfig ant;
    ant.latitude = 48.137;
    ant.longitude = 11.575;
    const GeoTransform frame(ant.latitude, ant.longitude, 1.0);

    Building b;
    for (const auto& [x, y] :
         std::vector<std::pair<double, double>>{{50, 50}, {70, 50}, {70, 70}, {50, 70}}) {
        const auto [lat, lon] = frame.enu_to_latlon(x, y);
        b.footprint.push_back({lon, lat});
    }
    b.height_m = 10.0;
    b.material = Material::Brick;
    SceneData scene;
    scene.buildings = {b};

    const SceneGeometry geom = build_scene(scene, ant);
    REQUIRE(geom.meshes.size() == 1);
    CHECK(geom.walls.size() == 4);
    CHECK(is_watertight(geom.meshes[0]));
    CHECK(geom.meshes[0].material == Material::Brick);
    // The footprint centre should land near ENU (60, 60).
    Vec2 centroid{0, 0};
    for (const Vec2& v : geom.footprints_enu[0])
        centroid = centroid + v * 0.25;
    CHECK(centroid.x == doctest::Approx(60.0).epsilon(1e-3));
    CHECK(centroid.y == doctest::Approx(60.0).epsilon(1e-3));

    CHECK(build_scene(SceneData{}, ant).meshes.empty());
}
