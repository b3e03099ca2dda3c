#include "radiotwin/solver.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <complex>
#include <numbers>
#include <stdexcept>
#include <thread>

#include "radiotwin/features.hpp"
#include "radiotwin/rng.hpp"
#include "json.hpp"

namespace rtwin {

namespace {
constexpr double kPi = std::numbers::pi;
constexpr double kEps0 = 8.8541878128e-12;
constexpr double kLn10 = 2.302585092994046;
}  // namespace

const char* mode_name(CalibrationMode m) {
    switch (m) {
    case CalibrationMode::A: return "A";
    case CalibrationMode::AM: return "AM";
    case CalibrationMode::AMv: return "AMv";
    }
    return "A";
}

CalibrationMode mode_from_name(const std::string& name) {
    if (name == "A")
        return CalibrationMode::A;
    if (name == "AM")
        return CalibrationMode::AM;
    if (name == "AMv")
        return CalibrationMode::AMv;
    throw std::invalid_argument("unknown calibration mode: " + name);
}

MaterialParams default_material(Material m) {
    switch (m) {
    case Material::Concrete: return {5.24, 0.08};
    case Material::Brick: return {3.91, 0.03};
    case Material::Glass: return {6.31, 0.006};
    }
    return {5.24, 0.08};
}

TrainableSceneParams TrainableSceneParams::defaults(CalibrationMode mode) {
    TrainableSceneParams p;
    p.mode = mode;
    p.antenna_z = {0.0, 0.0, 0.0, 0.0};  // midpoints of every bound
    for (int m = 0; m < kNumMaterials; ++m) {
        const MaterialParams d = default_material(static_cast<Material>(m));
        p.material_z[2 * m] = std::log(d.eps_r - 1.0);
        p.material_z[2 * m + 1] = std::log(d.sigma);
    }
    p.u_mat.fill(1.0);
    p.pattern.u_ant.fill(1.0);
    return p;
}

AntennaParams TrainableSceneParams::antenna_params() const {
    if (mode == CalibrationMode::AMv)
        return derive_antenna_params(pattern);
    AntennaParams out;
    out.theta0 = bounded_param(antenna_z[0], theta0_bounds());
    out.hpbw_v = bounded_param(antenna_z[1], hpbw_bounds());
    out.hpbw_h = bounded_param(antenna_z[2], hpbw_bounds());
    out.g_max = bounded_param(antenna_z[3], gmax_bounds());
    return out;
}

MaterialParams TrainableSceneParams::material_params(Material m) const {
    const int i = static_cast<int>(m);
    switch (mode) {
    case CalibrationMode::A:
        return default_material(m);
    case CalibrationMode::AM:
        return {std::exp(material_z[2 * i]) + 1.0, std::exp(material_z[2 * i + 1])};
    case CalibrationMode::AMv:
        return derive_material_params(materials[i], u_mat);
    }
    return default_material(m);
}

int TrainableSceneParams::n_free() const {
    switch (mode) {
    case CalibrationMode::A: return 4;
    case CalibrationMode::AM: return 4 + 2 * kNumMaterials;
    case CalibrationMode::AMv:
        // 4 antenna embeddings + u_ant + per-material (w_eps, w_sigma) + u_mat
        return (4 + 1) * kEmbeddingDim + kNumMaterials * 2 * kEmbeddingDim +
               kEmbeddingDim;
    }
    return 4;
}

std::vector<double> TrainableSceneParams::get_free() const {
    std::vector<double> v;
    v.reserve(n_free());
    auto push_emb = [&v](const Embedding& e) {
        v.insert(v.end(), e.begin(), e.end());
    };
    switch (mode) {
    case CalibrationMode::A:
        v.assign(antenna_z.begin(), antenna_z.end());
        break;
    case CalibrationMode::AM:
        v.assign(antenna_z.begin(), antenna_z.end());
        v.insert(v.end(), material_z.begin(), material_z.end());
        break;
    case CalibrationMode::AMv:
        push_emb(pattern.w_theta0);
        push_emb(pattern.w_hpbw_v);
        push_emb(pattern.w_hpbw_h);
        push_emb(pattern.w_gmax);
        push_emb(pattern.u_ant);
        for (const auto& m : materials) {
            push_emb(m.w_eps);
            push_emb(m.w_sigma);
        }
        push_emb(u_mat);
        break;
    }
    return v;
}

void TrainableSceneParams::set_free(const std::vector<double>& v) {
    if (static_cast<int>(v.size()) != n_free())
        throw std::invalid_argument("set_free: wrong parameter count");
    std::size_t pos = 0;
    auto pull_emb = [&v, &pos](Embedding& e) {
        for (auto& x : e)
            x = v[pos++];
    };
    switch (mode) {
    case CalibrationMode::A:
        std::copy_n(v.begin(), 4, antenna_z.begin());
        break;
    case CalibrationMode::AM:
        std::copy_n(v.begin(), 4, antenna_z.begin());
        std::copy_n(v.begin() + 4, 2 * kNumMaterials, material_z.begin());
        break;
    case CalibrationMode::AMv:
        pull_emb(pattern.w_theta0);
        pull_emb(pattern.w_hpbw_v);
        pull_emb(pattern.w_hpbw_h);
        pull_emb(pattern.w_gmax);
        pull_emb(pattern.u_ant);
        for (auto& m : materials) {
            pull_emb(m.w_eps);
            pull_emb(m.w_sigma);
        }
        pull_emb(u_mat);
        break;
    }
}

std::string TrainableSceneParams::to_json() const {
    nlohmann::json j;
    j["mode"] = mode_name(mode);
    j["antenna_z"] = antenna_z;
    j["material_z"] = material_z;
    j["u_mat"] = u_mat;
    j["pattern"] = nlohmann::json::parse(pattern_to_json(pattern));
    for (int m = 0; m < kNumMaterials; ++m) {
        const auto name = material_name(static_cast<Material>(m));
        j["materials"][name] = {{"w_eps", materials[m].w_eps},
                                {"w_sigma", materials[m].w_sigma}};
        const MaterialParams d = material_params(static_cast<Material>(m));
        j["derived_materials"][name] = {{"eps_r", d.eps_r}, {"sigma", d.sigma}};
    }
    return j.dump(2);
}

TrainableSceneParams TrainableSceneParams::from_json(const std::string& text) {
    const auto j = nlohmann::json::parse(text);
    TrainableSceneParams p;
    p.mode = mode_from_name(j.at("mode").get<std::string>());
    p.antenna_z = j.at("antenna_z").get<std::array<double, 4>>();
    p.material_z = j.at("material_z").get<std::array<double, 2 * kNumMaterials>>();
    p.u_mat = j.at("u_mat").get<Embedding>();
    p.pattern = pattern_from_json(j.at("pattern").dump());
    for (int m = 0; m < kNumMaterials; ++m) {
        const auto& jm = j.at("materials").at(material_name(static_cast<Material>(m)));
        p.materials[m].w_eps = jm.at("w_eps").get<Embedding>();
        p.materials[m].w_sigma = jm.at("w_sigma").get<Embedding>();
    }
    return p;
}

DerivedGrad& DerivedGrad::operator+=(const DerivedGrad& o) {
    d_theta0 += o.d_theta0;
    d_hpbw_v += o.d_hpbw_v;
    d_hpbw_h += o.d_hpbw_h;
    d_gmax += o.d_gmax;
    for (std::size_t i = 0; i < d_mat.size(); ++i)
        d_mat[i] += o.d_mat[i];
    return *this;
}

DerivedGrad& DerivedGrad::scale(double s) {
    d_theta0 *= s;
    d_hpbw_v *= s;
    d_hpbw_h *= s;
    d_gmax *= s;
    for (auto& x : d_mat)
        x *= s;
    return *this;
}

void accumulate_free_grad(const TrainableSceneParams& params, const DerivedGrad& g,
                          std::vector<double>& grad) {
    if (static_cast<int>(grad.size()) != params.n_free())
        grad.assign(params.n_free(), 0.0);

    const double dparam[4] = {g.d_theta0, g.d_hpbw_v, g.d_hpbw_h, g.d_gmax};
    const ParamBounds bounds[4] = {theta0_bounds(), hpbw_bounds(), hpbw_bounds(),
                                   gmax_bounds()};
    const double inv_sqrt_d = 1.0 / std::sqrt(static_cast<double>(kEmbeddingDim));

    switch (params.mode) {
    case CalibrationMode::A:
        for (int p = 0; p < 4; ++p)
            grad[p] += dparam[p] * bounded_param_grad(params.antenna_z[p], bounds[p]);
        break;
    case CalibrationMode::AM:
        for (int p = 0; p < 4; ++p)
            grad[p] += dparam[p] * bounded_param_grad(params.antenna_z[p], bounds[p]);
        for (int m = 0; m < kNumMaterials; ++m) {
            // eps = exp(z) + 1, sigma = exp(z)
            grad[4 + 2 * m] +=
                g.d_mat[2 * m] * std::exp(params.material_z[2 * m]);
            grad[4 + 2 * m + 1] +=
                g.d_mat[2 * m + 1] * std::exp(params.material_z[2 * m + 1]);
        }
        break;
    case CalibrationMode::AMv: {
        const Embedding* w_ant[4] = {&params.pattern.w_theta0,
                                     &params.pattern.w_hpbw_v,
                                     &params.pattern.w_hpbw_h,
                                     &params.pattern.w_gmax};
        for (int p = 0; p < 4; ++p) {
            const double r = readout(*w_ant[p], params.pattern.u_ant);
            const double chain = dparam[p] * bounded_param_grad(r, bounds[p]);
            for (int i = 0; i < kEmbeddingDim; ++i) {
                grad[p * kEmbeddingDim + i] +=
                    chain * params.pattern.u_ant[i] * inv_sqrt_d;
                grad[4 * kEmbeddingDim + i] +=
                    chain * (*w_ant[p])[i] * inv_sqrt_d;  // u_ant share
            }
        }
        const int mat_base = 5 * kEmbeddingDim;
        const int umat_base = mat_base + kNumMaterials * 2 * kEmbeddingDim;
        for (int m = 0; m < kNumMaterials; ++m) {
            const auto& me = params.materials[m];
            const double r_eps = readout(me.w_eps, params.u_mat);
            const double r_sig = readout(me.w_sigma, params.u_mat);
            const double chain_eps = g.d_mat[2 * m] * std::exp(r_eps);
            const double chain_sig = g.d_mat[2 * m + 1] * std::exp(r_sig);
            for (int i = 0; i < kEmbeddingDim; ++i) {
                grad[mat_base + (2 * m) * kEmbeddingDim + i] +=
                    chain_eps * params.u_mat[i] * inv_sqrt_d;
                grad[mat_base + (2 * m + 1) * kEmbeddingDim + i] +=
                    chain_sig * params.u_mat[i] * inv_sqrt_d;
                grad[umat_base + i] += (chain_eps * me.w_eps[i] +
                                        chain_sig * me.w_sigma[i]) * inv_sqrt_d;
            }
        }
        break;
    }
    }
}

ReflectionLossResult reflection_loss(const MaterialParams& m, double cos_incidence,
                                     double frequency_hz) {
    const double c = std::clamp(cos_incidence, 0.0, 1.0);
    const double s2 = 1.0 - c * c;
    const double omega = 2.0 * kPi * frequency_hz;
    const std::complex<double> eta(m.eps_r, -m.sigma / (omega * kEps0));

    const std::complex<double> u = std::sqrt(eta - s2);
    const std::complex<double> gamma = (c - u) / (c + u);
    const double mag = std::abs(gamma);

    ReflectionLossResult out;
    if (mag <= 0.0) {
        out.loss_db = kReflectionLossCapDb;
        return out;
    }
    const double loss = -20.0 * std::log10(mag);
    if (loss >= kReflectionLossCapDb) {
        out.loss_db = kReflectionLossCapDb;
        return out;  // clamped: zero gradient
    }
    out.loss_db = loss;

    // d gamma / d eta = -c / (u (c + u)^2); d loss/dx = -(20/ln10) Re(gamma'/gamma)
    const std::complex<double> dg_deta = -c / (u * (c + u) * (c + u));
    const std::complex<double> rel = dg_deta / gamma;
    const double factor = -20.0 / kLn10;
    out.d_eps = factor * rel.real();                         // d eta/d eps = 1
    out.d_sigma = factor * (rel * std::complex<double>(0.0, -1.0 / (omega * kEps0)))
                      .real();
    return out;
}

// ---------------------------------------------------------------------------
// Ray launching internals
// ---------------------------------------------------------------------------

namespace {

struct Fam {
    std::uint64_t sig = 0;
    double dbm = 0.0;
    std::uint32_t ray = 0;
    DerivedGrad grad;  // populated only in gradient mode at masked cells
};

struct Accum {
    Grid<std::uint8_t> los;
    Grid<std::vector<Fam>> fams;
};

// Merge op is commutative (max with deterministic tie-break), so the result
// is independent of chunk count and thread count.
void merge_fam(std::vector<Fam>& cell, const Fam& f) {
    for (auto& existing : cell) {
        if (existing.sig == f.sig) {
            if (f.dbm > existing.dbm ||
                (f.dbm == existing.dbm && f.ray < existing.ray))
                existing = f;
            return;
        }
    }
    cell.push_back(f);
}

struct RotationFrame {
    double ca, sa, ct, st;
    double dz;  // rx_height - z_tx
};

struct AngleResult {
    double phi;
    double theta_zenith;
    double r3d;
};

AngleResult boresight_angles(const RotationFrame& f, double vx, double vy,
                             double s2d) {
    const double r3d = std::sqrt(s2d * s2d + f.dz * f.dz);
    const double x1 = f.ca * vx + f.sa * vy;
    const double y1 = -f.sa * vx + f.ca * vy;
    const double x2 = f.ct * x1 - f.st * f.dz;
    const double z2 = f.st * x1 + f.ct * f.dz;
    return {std::atan2(y1, x2), kPi / 2.0 - std::asin(z2 / r3d), r3d};
}

// Amanatides-Woo traversal of the cell lattice between two ENU points.
template <typename Visit>
void walk_cells(const GeoTransform& t, Vec2 a, Vec2 b, Visit&& visit) {
    const double res = t.resolution();
    const int n = t.size();
    const int half = n / 2;
    // Continuous lattice coordinates: cell = floor(coord).
    double u0 = a.x / res + half + 0.5, v0 = half + 0.5 - a.y / res;
    double u1 = b.x / res + half + 0.5, v1 = half + 0.5 - b.y / res;

    int cu = static_cast<int>(std::floor(u0));
    int cv = static_cast<int>(std::floor(v0));
    const int eu = static_cast<int>(std::floor(u1));
    const int ev = static_cast<int>(std::floor(v1));

    const double du = u1 - u0, dv = v1 - v0;
    const int step_u = du > 0 ? 1 : -1;
    const int step_v = dv > 0 ? 1 : -1;
    const double inv_du = du != 0 ? 1.0 / du : 0.0;
    const double inv_dv = dv != 0 ? 1.0 / dv : 0.0;

    double t_next_u = du != 0
        ? ((du > 0 ? cu + 1 - u0 : cu - u0) * inv_du) : 2.0;
    double t_next_v = dv != 0
        ? ((dv > 0 ? cv + 1 - v0 : cv - v0) * inv_dv) : 2.0;
    const double t_delta_u = du != 0 ? std::abs(inv_du) : 2.0;
    const double t_delta_v = dv != 0 ? std::abs(inv_dv) : 2.0;

    const int max_steps = 4 * n;
    for (int i = 0; i < max_steps; ++i) {
        if (cv >= 0 && cv < n && cu >= 0 && cu < n)
            visit(cv, cu);
        if (cu == eu && cv == ev)
            break;
        if (t_next_u < t_next_v) {
            cu += step_u;
            t_next_u += t_delta_u;
        } else {
            cv += step_v;
            t_next_v += t_delta_v;
        }
    }
}

// First wall hit along a ray, excluding one wall index (the one just
// reflected from).
struct WallHit {
    int wall = -1;
    double t = 0.0;
};

WallHit nearest_wall(const std::vector<WallSegment>& walls, const Vec2& origin,
                     const Vec2& dir, int skip_wall) {
    WallHit best;
    best.t = std::numeric_limits<double>::infinity();
    for (int w = 0; w < static_cast<int>(walls.size()); ++w) {
        if (w == skip_wall)
            continue;
        const Vec2 e = walls[w].b - walls[w].a;
        const double denom = cross(dir, e);
        if (denom == 0.0)
            continue;
        const Vec2 ao = walls[w].a - origin;
        const double t_ray = cross(ao, e) / denom;
        const double t_seg = cross(ao, dir) / denom;
        if (t_ray > 1e-9 && t_seg >= 0.0 && t_seg <= 1.0 && t_ray < best.t) {
            best.wall = w;
            best.t = t_ray;
        }
    }
    return best;
}

// t at which the ray leaves the grid bounding box.
double grid_exit_t(const GeoTransform& tr, const Vec2& origin, const Vec2& dir) {
    const double half = (tr.size() / 2 + 0.5) * tr.resolution();
    double t_exit = std::numeric_limits<double>::infinity();
    if (dir.x != 0.0) {
        const double t1 = ((dir.x > 0 ? half : -half) - origin.x) / dir.x;
        t_exit = std::min(t_exit, t1);
    }
    if (dir.y != 0.0) {
        const double t1 = ((dir.y > 0 ? half : -half) - origin.y) / dir.y;
        t_exit = std::min(t_exit, t1);
    }
    return std::max(t_exit, 0.0);
}

struct TraceContext {
    const SceneGeometry* scene;
    const AntennaConfig* antenna;
    const TrainableSceneParams* params;
    const SolverConfig* config;
    const Grid<std::uint8_t>* mask;  // null = no gradient payloads
    GeoTransform transform;
    RotationFrame frame;
    AntennaParams ant;
    std::array<MaterialParams, kNumMaterials> mats;
    double power_base;  // P_Tx - L_H
};

void trace_chunk(const TraceContext& ctx, int ray_begin, int ray_end,
                 Accum& acc) {
    const auto& walls = ctx.scene->walls;
    const int n_rays = ctx.config->n_rays;
    const Rng base(ctx.config->seed);
    const bool want_grad = ctx.mask != nullptr;

    for (int k = ray_begin; k < ray_end; ++k) {
        Rng ray_rng = base.fork(static_cast<std::uint64_t>(k));
        const double angle =
            2.0 * kPi * (static_cast<double>(k) + ray_rng.uniform()) / n_rays;
        const Vec2 launch_dir{std::cos(angle), std::sin(angle)};

        Vec2 pos{0.0, 0.0};
        Vec2 dir = launch_dir;
        int last_wall = -1;
        std::uint64_t sig = 0;
        double path_len = 0.0;
        double bounce_loss = 0.0;
        std::array<double, 2 * kNumMaterials> d_loss{};  // d(total loss)/d mat

        for (int leg = 0; leg <= ctx.config->max_reflections; ++leg) {
            const WallHit hit = nearest_wall(walls, pos, dir, last_wall);
            const double t_exit = grid_exit_t(ctx.transform, pos, dir);
            const double t_end = std::min(hit.t, t_exit);
            if (t_end <= 0.0)
                break;
            const Vec2 seg_end{pos.x + dir.x * t_end, pos.y + dir.y * t_end};

            if (leg == 0) {
                // Direct leg: only visibility; the per-cell contribution is
                // ray-independent and evaluated once in the resolve pass.
                walk_cells(ctx.transform, pos, seg_end,
                           [&acc](int r, int c) { acc.los.at(r, c) = 1; });
            } else {
                walk_cells(ctx.transform, pos, seg_end, [&](int r, int c) {
                    if (want_grad && !ctx.mask->at(r, c))
                        return;
                    const EnuPoint centre = ctx.transform.cell_to_enu(r, c);
                    // 2D path distance to the closest approach to the centre.
                    double tc = dir.x * (centre.x - pos.x) + dir.y * (centre.y - pos.y);
                    tc = std::clamp(tc, 0.0, t_end);
                    const double s2d = path_len + tc;

                    const AngleResult ang =
                        boresight_angles(ctx.frame, launch_dir.x * s2d,
                                         launch_dir.y * s2d, s2d);
                    Fam f;
                    f.sig = sig;
                    f.ray = static_cast<std::uint32_t>(k);
                    if (want_grad) {
                        const PatternGainGrad g = pattern_gain_with_grad(
                            ctx.ant, ang.theta_zenith, ang.phi);
                        f.dbm = ctx.power_base + g.a_tot -
                                fspl_db(ang.r3d, ctx.antenna->frequency_hz) -
                                bounce_loss;
                        f.grad.d_theta0 = g.d_theta0;
                        f.grad.d_hpbw_v = g.d_hpbw_v;
                        f.grad.d_hpbw_h = g.d_hpbw_h;
                        f.grad.d_gmax = g.d_gmax;
                        for (std::size_t i = 0; i < d_loss.size(); ++i)
                            f.grad.d_mat[i] = -d_loss[i];
                    } else {
                        const double a_tot =
                            pattern_gain(ctx.ant, ang.theta_zenith, ang.phi);
                        f.dbm = ctx.power_base + a_tot -
                                fspl_db(ang.r3d, ctx.antenna->frequency_hz) -
                                bounce_loss;
                    }
                    merge_fam(acc.fams.at(r, c), f);
                });
            }

            if (hit.wall < 0 || hit.t >= t_exit)
                break;  // left the grid, nothing more to reflect on
            if (leg == ctx.config->max_reflections)
                break;

            // Specular reflection in plan view.
            const WallSegment& wall = walls[hit.wall];
            const Vec2 e = wall.b - wall.a;
            const double elen = norm(e);
            const Vec2 n_hat{e.y / elen, -e.x / elen};
            const double d_dot_n = dot(dir, n_hat);
            const double cos_inc = std::abs(d_dot_n);

            const int mat = static_cast<int>(wall.material);
            const ReflectionLossResult rl = reflection_loss(
                ctx.mats[mat], cos_inc, ctx.antenna->frequency_hz);
            bounce_loss += rl.loss_db;
            d_loss[2 * mat] += rl.d_eps;
            d_loss[2 * mat + 1] += rl.d_sigma;

            path_len += hit.t;
            pos = {pos.x + dir.x * hit.t, pos.y + dir.y * hit.t};
            dir = {dir.x - 2.0 * d_dot_n * n_hat.x, dir.y - 2.0 * d_dot_n * n_hat.y};
            last_wall = hit.wall;
            sig = sig * 0x100000001b3ULL + static_cast<std::uint64_t>(hit.wall + 1);
        }
    }
}

void merge_accum(Accum& into, Accum& from) {
    for (std::size_t i = 0; i < into.los.data().size(); ++i)
        into.los.data()[i] |= from.los.data()[i];
    const int n = into.fams.rows();
    for (int r = 0; r < n; ++r) {
        for (int c = 0; c < n; ++c) {
            for (const auto& f : from.fams.at(r, c))
                merge_fam(into.fams.at(r, c), f);
            from.fams.at(r, c).clear();
        }
    }
}

struct ResolveResult {
    RadioMap map;
    Grid<double> values64;  // same dBm values before the float raster cast
    std::vector<std::pair<int, DerivedGrad>> cells;
    explicit ResolveResult(RadioMap m)
        : map(std::move(m)), values64(map.values.rows(), map.values.cols()) {}
};

ResolveResult run_trace(const SceneGeometry& scene, const AntennaConfig& antenna,
                        const TrainableSceneParams& params,
                        const SolverConfig& config,
                        const Grid<std::uint8_t>* mask) {
    if (config.n_rays < 1)
        throw std::invalid_argument("trace: n_rays must be >= 1");
    if (config.max_reflections < 0)
        throw std::invalid_argument("trace: max_reflections must be >= 0");
    for (const auto& mesh : scene.meshes) {
        if (!is_watertight(mesh))
            throw std::invalid_argument("trace: scene contains a non-watertight mesh");
    }

    TraceContext ctx{.scene = &scene,
                     .antenna = &antenna,
                     .params = &params,
                     .config = &config,
                     .mask = mask,
                     .transform = transform_for(antenna, config.resolution_m),
                     .frame = {},
                     .ant = params.antenna_params(),
                     .mats = {},
                     .power_base =
                         antenna.tx_power_dbm - antenna.hardware_loss_db};
    ctx.frame = {std::cos(antenna.azimuth_rad), std::sin(antenna.azimuth_rad),
                 std::cos(antenna.tilt_rad), std::sin(antenna.tilt_rad),
                 config.rx_height_m - antenna.height_m};
    for (int m = 0; m < kNumMaterials; ++m)
        ctx.mats[m] = params.material_params(static_cast<Material>(m));

    // Fixed chunk grid; worker count does not change which rays share a
    // chunk, and the merge op is commutative, so results are thread-count
    // independent.
    const int n_chunks = 16;
    const int requested = config.threads > 0
                              ? config.threads
                              : static_cast<int>(std::thread::hardware_concurrency());
    const int n_workers = std::clamp(requested, 1, n_chunks);
    std::vector<Accum> accums(n_workers);
    std::atomic<int> next_chunk{0};

    auto worker = [&](int widx) {
        for (;;) {
            const int chunk = next_chunk.fetch_add(1);
            if (chunk >= n_chunks)
                return;
            const int begin = static_cast<int>(
                static_cast<std::int64_t>(chunk) * config.n_rays / n_chunks);
            const int end = static_cast<int>(
                static_cast<std::int64_t>(chunk + 1) * config.n_rays / n_chunks);
            trace_chunk(ctx, begin, end, accums[widx]);
        }
    };
    if (n_workers == 1) {
        worker(0);
    } else {
        std::vector<std::thread> threads;
        for (int w = 0; w < n_workers; ++w)
            threads.emplace_back(worker, w);
        for (auto& t : threads)
            t.join();
    }
    for (int w = 1; w < n_workers; ++w)
        merge_accum(accums[0], accums[w]);
    Accum& acc = accums[0];

    // Resolve pass: per-cell direct term (exact cell-centre geometry) plus
    // the non-coherent sum over reflected path families.
    ResolveResult out{RadioMap(ctx.transform)};
    const int n = ctx.transform.size();
    for (int r = 0; r < n; ++r) {
        for (int c = 0; c < n; ++c) {
            auto& fams = acc.fams.at(r, c);
            const bool los = acc.los.at(r, c) != 0;
            if (!los && fams.empty()) {
                out.map.values.at(r, c) =
                    static_cast<float>(config.no_coverage_fill_dbm);
                out.values64.at(r, c) = config.no_coverage_fill_dbm;
                out.map.valid.at(r, c) = 0;
                continue;
            }
            const bool cell_masked = mask != nullptr && mask->at(r, c);

            double lin_sum = 0.0;
            DerivedGrad dsum;  // sum of lin_i * d dbm_i / d p
            bool want = mask == nullptr || cell_masked;

            if (los && want) {
                const EnuPoint centre = ctx.transform.cell_to_enu(r, c);
                const double s2d = std::hypot(centre.x, centre.y);
                const AngleResult ang =
                    boresight_angles(ctx.frame, centre.x, centre.y, s2d);
                const PatternGainGrad g =
                    pattern_gain_with_grad(ctx.ant, ang.theta_zenith, ang.phi);
                const double dbm =
                    ctx.power_base + g.a_tot -
                    fspl_db(ang.r3d, antenna.frequency_hz);
                const double lin = std::pow(10.0, dbm / 10.0);
                lin_sum += lin;
                if (cell_masked) {
                    DerivedGrad dg;
                    dg.d_theta0 = g.d_theta0;
                    dg.d_hpbw_v = g.d_hpbw_v;
                    dg.d_hpbw_h = g.d_hpbw_h;
                    dg.d_gmax = g.d_gmax;
                    dg.scale(lin);
                    dsum += dg;
                }
            } else if (los) {
                // Unmasked gradient trace still needs a defined map value.
                const EnuPoint centre = ctx.transform.cell_to_enu(r, c);
                const double s2d = std::hypot(centre.x, centre.y);
                const AngleResult ang =
                    boresight_angles(ctx.frame, centre.x, centre.y, s2d);
                const double dbm = ctx.power_base +
                                   pattern_gain(ctx.ant, ang.theta_zenith, ang.phi) -
                                   fspl_db(ang.r3d, antenna.frequency_hz);
                lin_sum += std::pow(10.0, dbm / 10.0);
            }

            // Deterministic family order.
            std::sort(fams.begin(), fams.end(),
                      [](const Fam& a, const Fam& b) { return a.sig < b.sig; });
            for (const auto& f : fams) {
                const double lin = std::pow(10.0, f.dbm / 10.0);
                lin_sum += lin;
                if (cell_masked) {
                    DerivedGrad dg = f.grad;
                    dg.scale(lin);
                    dsum += dg;
                }
            }

            const double dbm_total =
                std::max(10.0 * std::log10(lin_sum), config.no_coverage_fill_dbm);
            out.map.values.at(r, c) = static_cast<float>(dbm_total);
            out.values64.at(r, c) = dbm_total;
            out.map.valid.at(r, c) = 1;

            if (cell_masked) {
                // d dBm_total / d p = (1/lin_sum) * sum lin_i d dbm_i/d p
                dsum.scale(1.0 / lin_sum);
                out.cells.push_back({r * n + c, dsum});
            }
        }
    }
    out.map.update_coverage();
    return out;
}

}  // namespace

RadioMap trace(const SceneGeometry& scene, const AntennaConfig& antenna,
               const TrainableSceneParams& params, const SolverConfig& config) {
    return run_trace(scene, antenna, params, config, nullptr).map;
}

Grid<double> trace_dbm64(const SceneGeometry& scene, const AntennaConfig& antenna,
                         const TrainableSceneParams& params,
                         const SolverConfig& config) {
    return std::move(run_trace(scene, antenna, params, config, nullptr).values64);
}

TraceJacobian trace_with_cell_jacobian(const SceneGeometry& scene,
                                       const AntennaConfig& antenna,
                                       const TrainableSceneParams& params,
                                       const SolverConfig& config,
                                       const Grid<std::uint8_t>& mask) {
    ResolveResult r = run_trace(scene, antenna, params, config, &mask);
    TraceJacobian out{std::move(r.map)};
    out.cells = std::move(r.cells);
    return out;
}

std::vector<double> trace_with_gradients(const SceneGeometry& scene,
                                         const AntennaConfig& antenna,
                                         const TrainableSceneParams& params,
                                         const SolverConfig& config,
                                         const Grid<float>& loss_adjoint) {
    Grid<std::uint8_t> mask;
    for (int r = 0; r < loss_adjoint.rows(); ++r)
        for (int c = 0; c < loss_adjoint.cols(); ++c)
            mask.at(r, c) = loss_adjoint.at(r, c) != 0.0f ? 1 : 0;

    const TraceJacobian jac =
        trace_with_cell_jacobian(scene, antenna, params, config, mask);

    DerivedGrad total;
    const int n = loss_adjoint.cols();
    for (const auto& [cell, dg] : jac.cells) {
        DerivedGrad g = dg;
        g.scale(loss_adjoint.at(cell / n, cell % n));
        total += g;
    }
    std::vector<double> grad(params.n_free(), 0.0);
    accumulate_free_grad(params, total, grad);
    return grad;
}

}  // namespace rtwin
