#pragma once

#include <string>
#include <vector>

#include "radiotwin/geom2d.hpp"
#include "radiotwin/radiomap.hpp"

namespace rtwin {

// Monomial a * s^b tangent to log2(1 + s) in log-log coordinates.
struct CapacityPiece {
    double a = 1.0;
    double b = 1.0;
};

// Tangents to h(z) = log(log2(1 + e^z)) at tangent SINRs log-spaced over
// [s_lo, s_hi] (geometric mean when m = 1). Each piece satisfies
// a * s^b >= log2(1 + s) with equality at its tangent point.
std::vector<CapacityPiece> fit_capacity_pieces(int m, double s_lo = 1e-2,
                                               double s_hi = 1e3);

// SINR_ij = P_j g_ij / (sigma2 + sum_{k != j} P_k g_ik), linear.
double sinr(const std::vector<double>& powers,
            const std::vector<std::vector<double>>& gains, double sigma2_w,
            int user, int antenna);

// Linear channel gain per user from a radio map: g = 10^((RSRP - ref)/10).
// Users on invalid cells read the nearest valid cell. Positions are
// antenna-centred ENU metres. Throws when the map has no valid cell.
std::vector<double> gains_from_map(const RadioMap& map, double tx_power_ref_dbm,
                                   const std::vector<Vec2>& users_enu_m);

struct PowerInstance {
    std::vector<std::vector<double>> gains;  // n users x N antennas, linear
    std::vector<double> demands_bps;         // n
    std::vector<double> bandwidths_hz;       // N
    double noise_w = 1e-12;
    double power_cap_w = 10.0;
    std::vector<CapacityPiece> pieces;       // defaults to fit_capacity_pieces(6)

    int n_users() const { return static_cast<int>(gains.size()); }
    int n_antennas() const {
        return gains.empty() ? 0 : static_cast<int>(gains.front().size());
    }
    void validate() const;  // throws std::invalid_argument on bad data

    std::string to_json() const;
    static PowerInstance from_json(const std::string& text);
};

enum class PowerStatus { Optimal, Infeasible, MaxIterations };
const char* power_status_name(PowerStatus s);

struct PowerSolution {
    PowerStatus status = PowerStatus::Infeasible;
    std::vector<double> powers_w;            // N
    std::vector<std::vector<double>> x;      // n x N association fractions
    double total_power_w = 0.0;
    double kkt_residual = 0.0;
    int iterations = 0;

    std::string to_json() const;
};

struct PowerSolveOptions {
    double tolerance = 1e-8;     // barrier duality-gap target, relative to objective
    int max_outer = 60;          // barrier continuation steps
    int max_inner = 4000;        // gradient steps per centering problem
};

// Exp-form convex program: variables q_j = log P_j, u_ij = log x_ij;
// minimize sum_j e^{q_j} subject to, for every piece l, user i, antenna j,
//   log(sigma2 + sum_{k!=j} e^{q_k} g_ik) - q_j - log g_ij - u_ij / b_l
//     <= log(B_j a_l / t_i) / b_l,
// plus log sum_i e^{u_ij} <= 0 and q_j <= log(cap). Solved with a log-barrier
// interior point driven by Barzilai-Borwein gradient steps with backtracking;
// phase 1 minimizes a smoothed max-constraint and reports infeasibility when
// its minimum stays positive.
PowerSolution solve_power(const PowerInstance& instance,
                          const PowerSolveOptions& options = {});

}  // namespace rtwin
