#pragma once

#include <array>
#include <string>
#include <vector>

#include "radiotwin/geo.hpp"
#include "radiotwin/geom2d.hpp"
#include "radiotwin/ingest.hpp"

namespace rtwin {

struct Vec3 {
    double x = 0.0, y = 0.0, z = 0.0;
};

using TriIndex = std::array<int, 3>;

struct TriangleMesh {
    std::vector<Vec3> vertices;   // meters, local ENU
    std::vector<TriIndex> triangles;  // outward-facing CCW winding
    Material material = Material::Concrete;
};

// 2D triangulation of a footprint: shared vertex list + index triples.
struct Triangulation2D {
    std::vector<Vec2> vertices;
    std::vector<TriIndex> triangles;
};

// Constrained Delaunay tessellation of a simple polygon: ear clipping
// followed by Delaunay edge flips that never cross the boundary. Triangles
// exactly tile the interior. Throws std::invalid_argument for degenerate or
// self-intersecting input.
Triangulation2D tessellate_footprint(const std::vector<Vec2>& polygon);

// Vertical prism: bottom cap at z = 0, top cap at z = height, quad walls
// split into triangles. Result is watertight with outward winding.
TriangleMesh extrude(const Triangulation2D& triangles2d, double height);

// Diagnostics used by tests and scene validation.
bool is_watertight(const TriangleMesh& mesh);
double mesh_volume(const TriangleMesh& mesh);       // signed tetrahedron sum
double mesh_surface_area(const TriangleMesh& mesh);

// ASCII PLY with a comment line carrying the material tag.
std::string export_ply(const TriangleMesh& mesh);
TriangleMesh import_ply(const std::string& ply_text);

// One plan-view wall per footprint edge; what the 2.5D solver reflects on.
struct WallSegment {
    Vec2 a, b;
    double height_m = 0.0;
    Material material = Material::Concrete;
    int building = -1;
};

struct SceneGeometry {
    std::vector<TriangleMesh> meshes;  // one extruded prism per building
    std::vector<WallSegment> walls;
    std::vector<std::vector<Vec2>> footprints_enu;
};

// All geometry re-centred on the antenna (ENU origin at the antenna base).
SceneGeometry build_scene(const SceneData& scene, const AntennaConfig& antenna);

}  // namespace rtwin
