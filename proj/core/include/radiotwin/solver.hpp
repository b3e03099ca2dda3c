#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "radiotwin/antenna.hpp"
#include "radiotwin/mesh.hpp"
#include "radiotwin/radiomap.hpp"

namespace rtwin {

enum class CalibrationMode { A, AM, AMv };
const char* mode_name(CalibrationMode m);
CalibrationMode mode_from_name(const std::string& name);

struct SolverConfig {
    int n_rays = 65536;
    int max_reflections = 7;
    double no_coverage_fill_dbm = -140.0;
    double rx_height_m = 1.5;
    double resolution_m = 5.0;  // raster cell size of the output map
    std::uint64_t seed = 0;
    int threads = 1;  // 0 = all hardware threads; results are count-invariant
};

// Fixed per-material electromagnetic defaults, used untrained (mode A) and
// as initialization elsewhere.
MaterialParams default_material(Material m);

// Calibration state for all three parameter modes.
//   A   - four bounded antenna scalars (sigmoid-reparametrized), materials
//         fixed at defaults; 4 free parameters.
//   AM  - A plus log-parametrized permittivity/conductivity per material;
//         4 + 2M free parameters.
//   AMv - embedding vectors with shared read-outs for both families.
struct TrainableSceneParams {
    CalibrationMode mode = CalibrationMode::A;

    // AMv state.
    TrainablePattern pattern;
    std::array<MaterialEmbeddings, kNumMaterials> materials{};
    Embedding u_mat{};

    // A / AM state: presigmoid antenna scalars (theta0, hpbw_v, hpbw_h,
    // g_max) and log-domain material scalars (eps pairs with exp(z)+1,
    // sigma with exp(z)).
    std::array<double, 4> antenna_z{};
    std::array<double, 2 * kNumMaterials> material_z{};

    static TrainableSceneParams defaults(CalibrationMode mode);

    AntennaParams antenna_params() const;
    MaterialParams material_params(Material m) const;

    int n_free() const;
    std::vector<double> get_free() const;
    void set_free(const std::vector<double>& v);

    std::string to_json() const;
    static TrainableSceneParams from_json(const std::string& text);
};

// Loss partials w.r.t. the derived (physical) parameters; the bridge
// between per-path chain rule terms and each mode's free parameters.
struct DerivedGrad {
    double d_theta0 = 0.0;
    double d_hpbw_v = 0.0;
    double d_hpbw_h = 0.0;
    double d_gmax = 0.0;
    std::array<double, 2 * kNumMaterials> d_mat{};  // (d_eps, d_sigma) pairs

    DerivedGrad& operator+=(const DerivedGrad& o);
    DerivedGrad& scale(double s);
};

// Chain DerivedGrad into the mode's free-parameter vector (accumulating).
void accumulate_free_grad(const TrainableSceneParams& params,
                          const DerivedGrad& g, std::vector<double>& grad);

// Fresnel TE reflection magnitude loss with complex permittivity
// eps_r - j sigma/(omega eps0); clamped at 60 dB so gradients stay finite
// near the vacuum limit (clamped region has zero gradient).
inline constexpr double kReflectionLossCapDb = 60.0;
struct ReflectionLossResult {
    double loss_db = 0.0;
    double d_eps = 0.0;    // d loss / d eps_r
    double d_sigma = 0.0;  // d loss / d sigma
};
ReflectionLossResult reflection_loss(const MaterialParams& m,
                                     double cos_incidence, double frequency_hz);

// 2.5D ray launching: specular plan-view wall reflections, vertical
// dimension folded into path length and launch elevation. Per cell,
// non-coherent power sum over distinct specular path families; cells no
// path reaches carry no_coverage_fill with valid = 0.
RadioMap trace(const SceneGeometry& scene, const AntennaConfig& antenna,
               const TrainableSceneParams& params, const SolverConfig& config);

// Same trace with the per-cell dBm values before the float raster cast, for
// losses that need more precision than the raster format carries (e.g.
// finite-difference verification of calibration gradients). Invalid cells
// hold the no-coverage fill.
Grid<double> trace_dbm64(const SceneGeometry& scene, const AntennaConfig& antenna,
                         const TrainableSceneParams& params,
                         const SolverConfig& config);

// Gradient trace: for each cell with mask != 0, also the partials of the
// cell's dBm value w.r.t. the derived parameters. Path geometry is frozen;
// gradients flow through gains and reflection losses only.
struct TraceJacobian {
    RadioMap map;
    std::vector<std::pair<int, DerivedGrad>> cells;  // (row * 512 + col, d dBm)
    explicit TraceJacobian(RadioMap m) : map(std::move(m)) {}
};
TraceJacobian trace_with_cell_jacobian(const SceneGeometry& scene,
                                       const AntennaConfig& antenna,
                                       const TrainableSceneParams& params,
                                       const SolverConfig& config,
                                       const Grid<std::uint8_t>& mask);

// Contraction of the cell jacobian with a loss adjoint (d loss / d dBm per
// cell): gradients of the loss w.r.t. the free parameters of params.mode.
std::vector<double> trace_with_gradients(const SceneGeometry& scene,
                                         const AntennaConfig& antenna,
                                         const TrainableSceneParams& params,
                                         const SolverConfig& config,
                                         const Grid<float>& loss_adjoint);

}  // namespace rtwin
