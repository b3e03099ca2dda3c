#include "radiotwin/mesh.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <sstream>
#include <stdexcept>

namespace rtwin {

namespace {

double tri_area2(const Vec2& a, const Vec2& b, const Vec2& c) {
    return cross(b - a, c - a);  // twice the signed area
}

// Incircle test: positive when d lies inside the circumcircle of CCW (a,b,c).
double incircle(const Vec2& a, const Vec2& b, const Vec2& c, const Vec2& d) {
    const double ax = a.x - d.x, ay = a.y - d.y;
    const double bx = b.x - d.x, by = b.y - d.y;
    const double cx = c.x - d.x, cy = c.y - d.y;
    const double a2 = ax * ax + ay * ay;
    const double b2 = bx * bx + by * by;
    const double c2 = cx * cx + cy * cy;
    return ax * (by * c2 - b2 * cy) - ay * (bx * c2 - b2 * cx) +
           a2 * (bx * cy - by * cx);
}

bool point_in_triangle(const Vec2& p, const Vec2& a, const Vec2& b, const Vec2& c) {
    const double d1 = tri_area2(p, a, b);
    const double d2 = tri_area2(p, b, c);
    const double d3 = tri_area2(p, c, a);
    const bool has_neg = (d1 < 0) || (d2 < 0) || (d3 < 0);
    const bool has_pos = (d1 > 0) || (d2 > 0) || (d3 > 0);
    return !(has_neg && has_pos);
}

std::vector<TriIndex> ear_clip(const std::vector<Vec2>& poly) {
    const int n = static_cast<int>(poly.size());
    std::vector<int> idx(n);
    for (int i = 0; i < n; ++i)
        idx[i] = i;

    std::vector<TriIndex> tris;
    tris.reserve(n - 2);

    int remaining = n;
    int guard = 0;
    const int guard_max = n * n + 16;
    int i = 0;
    while (remaining > 3) {
        if (++guard > guard_max)
            throw std::invalid_argument("tessellate_footprint: ear clipping failed "
                                        "(degenerate polygon?)");
        const int i0 = idx[(i + remaining - 1) % remaining];
        const int i1 = idx[i % remaining];
        const int i2 = idx[(i + 1) % remaining];
        const Vec2& a = poly[i0];
        const Vec2& b = poly[i1];
        const Vec2& c = poly[i2];

        bool ear = tri_area2(a, b, c) > 0;
        if (ear) {
            for (int k = 0; k < remaining && ear; ++k) {
                const int vi = idx[k];
                if (vi == i0 || vi == i1 || vi == i2)
                    continue;
                if (point_in_triangle(poly[vi], a, b, c))
                    ear = false;
            }
        }
        if (ear) {
            tris.push_back({i0, i1, i2});
            idx.erase(idx.begin() + (i % remaining));
            --remaining;
            i = 0;
        } else {
            ++i;
        }
    }
    tris.push_back({idx[0], idx[1], idx[2]});
    return tris;
}

struct EdgeKey {
    int a, b;
    bool operator<(const EdgeKey& o) const {
        return a != o.a ? a < o.a : b < o.b;
    }
};

EdgeKey undirected(int a, int b) { return a < b ? EdgeKey{a, b} : EdgeKey{b, a}; }

// Flip non-boundary edges until locally Delaunay. Boundary (constraint)
// edges of the footprint are never flipped.
void delaunay_flip(const std::vector<Vec2>& verts, std::vector<TriIndex>& tris,
                   int n_boundary) {
    auto is_constraint = [n_boundary](int a, int b) {
        const int lo = std::min(a, b), hi = std::max(a, b);
        return (hi == lo + 1) || (lo == 0 && hi == n_boundary - 1);
    };

    bool flipped = true;
    int rounds = 0;
    while (flipped && rounds++ < 100) {
        flipped = false;
        // edge -> (triangle index, opposite vertex)
        std::map<EdgeKey, std::vector<std::pair<int, int>>> edges;
        for (int t = 0; t < static_cast<int>(tris.size()); ++t) {
            for (int e = 0; e < 3; ++e) {
                const int a = tris[t][e];
                const int b = tris[t][(e + 1) % 3];
                const int opp = tris[t][(e + 2) % 3];
                edges[undirected(a, b)].push_back({t, opp});
            }
        }
        for (const auto& [key, users] : edges) {
            if (users.size() != 2 || is_constraint(key.a, key.b))
                continue;
            const auto [t1, p] = users[0];
            const auto [t2, q] = users[1];
            // Quad p, a, q, b must be convex for a valid flip.
            if (tri_area2(verts[p], verts[key.a], verts[q]) <= 0 ||
                tri_area2(verts[q], verts[key.b], verts[p]) <= 0)
                continue;
            if (incircle(verts[p], verts[key.a], verts[q], verts[key.b]) <= 0)
                continue;
            tris[t1] = {p, key.a, q};
            tris[t2] = {q, key.b, p};
            flipped = true;
            break;  // edge map is stale after a flip
        }
    }
}

}  // namespace

Triangulation2D tessellate_footprint(const std::vector<Vec2>& polygon) {
    if (polygon.size() < 3)
        throw std::invalid_argument("tessellate_footprint: need >= 3 vertices");
    if (!is_simple_polygon(polygon))
        throw std::invalid_argument(
            "tessellate_footprint: polygon is degenerate or self-intersecting");

    Triangulation2D out;
    out.vertices = polygon;
    if (polygon_signed_area(out.vertices) < 0)
        std::reverse(out.vertices.begin(), out.vertices.end());

    out.triangles = ear_clip(out.vertices);
    delaunay_flip(out.vertices, out.triangles,
                  static_cast<int>(out.vertices.size()));
    return out;
}

TriangleMesh extrude(const Triangulation2D& tri2d, double height) {
    if (height <= 0.0)
        throw std::invalid_argument("extrude: height must be positive");

    const int nv = static_cast<int>(tri2d.vertices.size());
    TriangleMesh mesh;
    mesh.vertices.reserve(2 * nv);
    for (const auto& v : tri2d.vertices)
        mesh.vertices.push_back({v.x, v.y, 0.0});
    for (const auto& v : tri2d.vertices)
        mesh.vertices.push_back({v.x, v.y, height});

    // Bottom cap faces down (reversed winding), top cap faces up.
    for (const auto& t : tri2d.triangles) {
        mesh.triangles.push_back({t[0], t[2], t[1]});
        mesh.triangles.push_back({t[0] + nv, t[1] + nv, t[2] + nv});
    }

    // Wall quads on boundary edges. A directed edge used by exactly one cap
    // triangle is a boundary edge, traversed CCW, so the exterior lies to
    // its right.
    std::map<std::pair<int, int>, int> directed;
    for (const auto& t : tri2d.triangles) {
        for (int e = 0; e < 3; ++e)
            directed[{t[e], t[(e + 1) % 3]}]++;
    }
    for (const auto& [edge, count] : directed) {
        const auto [a, b] = edge;
        if (count != 1 || directed.count({b, a}))
            continue;
        mesh.triangles.push_back({a, b, b + nv});
        mesh.triangles.push_back({a, b + nv, a + nv});
    }
    return mesh;
}

bool is_watertight(const TriangleMesh& mesh) {
    std::map<std::pair<int, int>, int> directed;
    for (const auto& t : mesh.triangles) {
        if (t[0] == t[1] || t[1] == t[2] || t[0] == t[2])
            return false;
        for (int e = 0; e < 3; ++e)
            directed[{t[e], t[(e + 1) % 3]}]++;
    }
    // Closed, consistently oriented: each directed edge exactly once, with
    // its opposite present.
    for (const auto& [edge, count] : directed) {
        if (count != 1)
            return false;
        if (!directed.count({edge.second, edge.first}))
            return false;
    }
    return true;
}

double mesh_volume(const TriangleMesh& mesh) {
    double v6 = 0.0;
    for (const auto& t : mesh.triangles) {
        const Vec3& a = mesh.vertices[t[0]];
        const Vec3& b = mesh.vertices[t[1]];
        const Vec3& c = mesh.vertices[t[2]];
        v6 += a.x * (b.y * c.z - b.z * c.y) - a.y * (b.x * c.z - b.z * c.x) +
              a.z * (b.x * c.y - b.y * c.x);
    }
    return v6 / 6.0;
}

double mesh_surface_area(const TriangleMesh& mesh) {
    double area = 0.0;
    for (const auto& t : mesh.triangles) {
        const Vec3& a = mesh.vertices[t[0]];
        const Vec3& b = mesh.vertices[t[1]];
        const Vec3& c = mesh.vertices[t[2]];
        const double ux = b.x - a.x, uy = b.y - a.y, uz = b.z - a.z;
        const double vx = c.x - a.x, vy = c.y - a.y, vz = c.z - a.z;
        const double cx = uy * vz - uz * vy;
        const double cy = uz * vx - ux * vz;
        const double cz = ux * vy - uy * vx;
        area += 0.5 * std::sqrt(cx * cx + cy * cy + cz * cz);
    }
    return area;
}

std::string export_ply(const TriangleMesh& mesh) {
    std::ostringstream out;
    out.precision(12);
    out << "ply\nformat ascii 1.0\n";
    out << "comment material " << material_name(mesh.material) << '\n';
    out << "element vertex " << mesh.vertices.size() << '\n';
    out << "property float x\nproperty float y\nproperty float z\n";
    out << "element face " << mesh.triangles.size() << '\n';
    out << "property list uchar int vertex_indices\n";
    out << "end_header\n";
    for (const auto& v : mesh.vertices)
        out << v.x << ' ' << v.y << ' ' << v.z << '\n';
    for (const auto& t : mesh.triangles)
        out << "3 " << t[0] << ' ' << t[1] << ' ' << t[2] << '\n';
    return out.str();
}

TriangleMesh import_ply(const std::string& ply_text) {
    std::istringstream in(ply_text);
    std::string line;
    TriangleMesh mesh;
    std::size_t n_vertex = 0, n_face = 0;
    bool in_header = true;
    while (in_header && std::getline(in, line)) {
        std::istringstream ls(line);
        std::string tok;
        ls >> tok;
        if (tok == "element") {
            std::string what;
            std::size_t count;
            ls >> what >> count;
            if (what == "vertex")
                n_vertex = count;
            else if (what == "face")
                n_face = count;
        } else if (tok == "comment") {
            std::string key, value;
            ls >> key >> value;
            if (key == "material")
                mesh.material = material_from_name(value);
        } else if (tok == "end_header") {
            in_header = false;
        }
    }
    for (std::size_t i = 0; i < n_vertex; ++i) {
        Vec3 v;
        if (!(in >> v.x >> v.y >> v.z))
            throw std::runtime_error("import_ply: truncated vertex list");
        mesh.vertices.push_back(v);
    }
    for (std::size_t i = 0; i < n_face; ++i) {
        int n, a, b, c;
        if (!(in >> n >> a >> b >> c) || n != 3)
            throw std::runtime_error("import_ply: expected triangle faces");
        mesh.triangles.push_back({a, b, c});
    }
    return mesh;
}

SceneGeometry build_scene(const SceneData& scene, const AntennaConfig& antenna) {
    const GeoTransform ref(antenna.latitude, antenna.longitude, 1.0);
    SceneGeometry out;
    int building_idx = 0;
    for (const auto& b : scene.buildings) {
        std::vector<Vec2> footprint;
        footprint.reserve(b.footprint.size());
        for (const auto& p : b.footprint) {
            const EnuPoint e = ref.latlon_to_enu(p.lat, p.lon);
            footprint.push_back({e.x, e.y});
        }

        Triangulation2D tri = tessellate_footprint(footprint);
        TriangleMesh mesh = extrude(tri, b.height_m);
        mesh.material = b.material;
        out.meshes.push_back(std::move(mesh));

        const auto& ring = tri.vertices;  // CCW after tessellation
        for (std::size_t i = 0; i < ring.size(); ++i) {
            out.walls.push_back({ring[i], ring[(i + 1) % ring.size()], b.height_m,
                                 b.material, building_idx});
        }
        out.footprints_enu.push_back(ring);
        ++building_idx;
    }
    return out;
}

}  // namespace rtwin
