#pragma once

#include <array>
#include <string>

namespace rtwin {

inline constexpr int kEmbeddingDim = 5;  // L_w = L_v = 5
using Embedding = std::array<double, kEmbeddingDim>;

// Fixed pattern constants, dB.
inline constexpr double kSlaV = 30.0;  // vertical side-lobe attenuation
inline constexpr double kAm = 30.0;    // front-to-back gain cap

// Parameter bounds. HPBW bounds are specified in degrees and converted to
// radians exactly once, at parameter derivation; everything downstream works
// in radians.
struct ParamBounds {
    double lo = 0.0;
    double hi = 1.0;
};
ParamBounds theta0_bounds();   // [-pi, pi] rad
ParamBounds hpbw_bounds();     // [10 deg, 120 deg] in rad
ParamBounds gmax_bounds();     // [0, 30] dBi

double sigmoid(double x);

// (u . w) / sqrt(d)
double readout(const Embedding& w, const Embedding& u);

// Derived sectorized-pattern parameters, angles in radians.
struct AntennaParams {
    double theta0 = 0.0;   // elevation steering offset
    double hpbw_v = 0.0;
    double hpbw_h = 0.0;
    double g_max = 0.0;    // dBi
};

struct MaterialParams {
    double eps_r = 1.0;  // relative permittivity, >= 1
    double sigma = 0.0;  // conductivity, S/m, > 0
};

// Antenna embedding state: four parameter embeddings plus the shared
// read-out vector.
struct TrainablePattern {
    Embedding w_theta0{};
    Embedding w_hpbw_v{};
    Embedding w_hpbw_h{};
    Embedding w_gmax{};
    Embedding u_ant{};
};

struct MaterialEmbeddings {
    Embedding w_eps{};
    Embedding w_sigma{};
};

// p = p_min + (p_max - p_min) * sigmoid(readout(w_p, u)); bounds keep every
// derived parameter strictly inside its range for finite embeddings.
AntennaParams derive_antenna_params(const TrainablePattern& pattern);
double bounded_param(double presigmoid, const ParamBounds& b);

// eps_r = exp(readout) + 1, sigma = exp(readout).
MaterialParams derive_material_params(const MaterialEmbeddings& m,
                                      const Embedding& u_mat);

// A_tot(theta, phi) in dB; theta is the zenith-style angle the pattern
// equations use (boresight at theta = pi/2 - theta0, phi = 0).
double pattern_gain(const AntennaParams& p, double theta, double phi);

// Partials w.r.t. the four derived parameters. min() kinks take the active
// branch's derivative (left branch on ties).
struct PatternGainGrad {
    double a_tot = 0.0;
    double d_theta0 = 0.0;
    double d_hpbw_v = 0.0;
    double d_hpbw_h = 0.0;
    double d_gmax = 0.0;
};
PatternGainGrad pattern_gain_with_grad(const AntennaParams& p, double theta,
                                       double phi);

// d(derived param)/d(presigmoid readout value).
double bounded_param_grad(double presigmoid, const ParamBounds& b);

std::string pattern_to_json(const TrainablePattern& p);
TrainablePattern pattern_from_json(const std::string& text);

}  // namespace rtwin
