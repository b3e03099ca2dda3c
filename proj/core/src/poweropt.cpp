#include "radiotwin/poweropt.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "json.hpp"

namespace rtwin {

namespace {

double capacity_h(double z) {
    // h(z) = log(log2(1 + e^z)), smooth concave reparametrization of the
    // Shannon rate with z = log SINR.
    const double s = std::exp(z);
    return std::log(std::log2(1.0 + s));
}

double capacity_h_prime(double z) {
    const double s = std::exp(z);
    return s / ((1.0 + s) * std::log(1.0 + s));
}

}  // namespace

std::vector<CapacityPiece> fit_capacity_pieces(int m, double s_lo, double s_hi) {
    if (m < 1)
        throw std::invalid_argument("fit_capacity_pieces: m must be >= 1");
    if (!(s_lo > 0.0) || !(s_lo < s_hi))
        throw std::invalid_argument("fit_capacity_pieces: need 0 < s_lo < s_hi");
    std::vector<CapacityPiece> pieces;
    pieces.reserve(static_cast<std::size_t>(m));
    const double z_lo = std::log(s_lo), z_hi = std::log(s_hi);
    for (int l = 0; l < m; ++l) {
        const double z = m == 1 ? 0.5 * (z_lo + z_hi)
                                : z_lo + (z_hi - z_lo) * l / (m - 1);
        const double b = capacity_h_prime(z);
        const double log_a = capacity_h(z) - b * z;
        pieces.push_back({std::exp(log_a), b});
    }
    return pieces;
}

double sinr(const std::vector<double>& powers,
            const std::vector<std::vector<double>>& gains, double sigma2_w,
            int user, int antenna) {
    double denom = sigma2_w;
    for (std::size_t k = 0; k < powers.size(); ++k)
        if (static_cast<int>(k) != antenna)
            denom += powers[k] * gains[user][k];
    return powers[antenna] * gains[user][antenna] / denom;
}

std::vector<double> gains_from_map(const RadioMap& map, double tx_power_ref_dbm,
                                   const std::vector<Vec2>& users_enu_m) {
    std::vector<CellIndex> valid_cells;
    for (int r = 0; r < map.valid.rows(); ++r)
        for (int c = 0; c < map.valid.cols(); ++c)
            if (map.valid.at(r, c))
                valid_cells.push_back({r, c});
    if (valid_cells.empty())
        throw std::invalid_argument("gains_from_map: map has no valid cell");

    std::vector<double> gains;
    gains.reserve(users_enu_m.size());
    for (const Vec2& p : users_enu_m) {
        std::optional<CellIndex> cell = map.transform.enu_to_cell(p.x, p.y);
        if (!cell || !map.valid.at(cell->row, cell->col)) {
            // Nearest valid cell by centre distance (measurement fallback).
            const double res = map.transform.resolution();
            double best = std::numeric_limits<double>::infinity();
            CellIndex best_cell = valid_cells.front();
            for (const CellIndex& v : valid_cells) {
                const EnuPoint c = map.transform.cell_to_enu(v.row, v.col);
                const double d2 = (c.x - p.x) * (c.x - p.x) + (c.y - p.y) * (c.y - p.y);
                if (d2 < best) {
                    best = d2;
                    best_cell = v;
                }
            }
            (void)res;
            cell = best_cell;
        }
        const double rsrp = map.values.at(cell->row, cell->col);
        gains.push_back(std::pow(10.0, (rsrp - tx_power_ref_dbm) / 10.0));
    }
    return gains;
}

void PowerInstance::validate() const {
    const int n = n_users(), N = n_antennas();
    if (n == 0 || N == 0)
        throw std::invalid_argument("power instance: empty gain matrix");
    for (const auto& row : gains) {
        if (static_cast<int>(row.size()) != N)
            throw std::invalid_argument("power instance: ragged gain matrix");
        for (double g : row)
            if (!(g > 0.0))
                throw std::invalid_argument("power instance: gains must be > 0");
    }
    if (static_cast<int>(demands_bps.size()) != n)
        throw std::invalid_argument("power instance: demand count != user count");
    for (double t : demands_bps)
        if (!(t > 0.0))
            throw std::invalid_argument("power instance: demands must be > 0");
    if (static_cast<int>(bandwidths_hz.size()) != N)
        throw std::invalid_argument("power instance: bandwidth count != antennas");
    for (double b : bandwidths_hz)
        if (!(b > 0.0))
            throw std::invalid_argument("power instance: bandwidths must be > 0");
    if (!(noise_w > 0.0) || !(power_cap_w > 0.0))
        throw std::invalid_argument("power instance: noise and cap must be > 0");
    if (pieces.empty())
        throw std::invalid_argument("power instance: no capacity pieces");
    for (const auto& p : pieces)
        if (!(p.a > 0.0) || !(p.b > 0.0) || p.b > 1.0)
            throw std::invalid_argument("power instance: pieces need a > 0, b in (0,1]");
}

const char* power_status_name(PowerStatus s) {
    switch (s) {
        case PowerStatus::Optimal: return "optimal";
        case PowerStatus::Infeasible: return "infeasible";
        case PowerStatus::MaxIterations: return "max-iterations";
    }
    return "unknown";
}

namespace {

// Variables v = (q_0..q_{N-1}, u_00, u_01, ..., u_{n-1,N-1}).
struct GpProblem {
    const PowerInstance* inst;
    int n, N, m;
    std::vector<double> log_cap_rhs;  // per (l,i,j): log(B_j a_l / t_i) / b_l
    std::vector<double> inv_b;        // per piece

    std::size_t dim() const { return static_cast<std::size_t>(N) + n * N; }
    std::size_t n_constraints() const {
        return static_cast<std::size_t>(N) * 2 + static_cast<std::size_t>(m) * n * N;
    }
    std::size_t u_index(int i, int j) const {
        return static_cast<std::size_t>(N) + static_cast<std::size_t>(i) * N + j;
    }

    explicit GpProblem(const PowerInstance& instance)
        : inst(&instance), n(instance.n_users()), N(instance.n_antennas()),
          m(static_cast<int>(instance.pieces.size())) {
        inv_b.resize(m);
        for (int l = 0; l < m; ++l)
            inv_b[l] = 1.0 / instance.pieces[l].b;
        log_cap_rhs.resize(static_cast<std::size_t>(m) * n * N);
        for (int l = 0; l < m; ++l)
            for (int i = 0; i < n; ++i)
                for (int j = 0; j < N; ++j)
                    log_cap_rhs[(static_cast<std::size_t>(l) * n + i) * N + j] =
                        std::log(instance.bandwidths_hz[j] * instance.pieces[l].a /
                                 instance.demands_bps[i]) *
                        inv_b[l];
    }

    // All constraint values f_c(v) <= 0; gradient of sum_c w_c f_c optional.
    void constraints(const std::vector<double>& v, std::vector<double>& f,
                     const std::vector<double>* weights,
                     std::vector<double>* grad) const {
        f.assign(n_constraints(), 0.0);
        if (grad)
            grad->assign(dim(), 0.0);
        const double log_cap = std::log(inst->power_cap_w);
        std::vector<double> p(N);
        for (int j = 0; j < N; ++j)
            p[j] = std::exp(v[j]);

        std::size_t c = 0;
        // q_j <= log cap
        for (int j = 0; j < N; ++j, ++c) {
            f[c] = v[j] - log_cap;
            if (grad)
                (*grad)[j] += (weights ? (*weights)[c] : 1.0);
        }
        // log sum_i x_ij <= 0
        for (int j = 0; j < N; ++j, ++c) {
            double sum = 0.0;
            for (int i = 0; i < n; ++i)
                sum += std::exp(v[u_index(i, j)]);
            f[c] = std::log(sum);
            if (grad) {
                const double w = (weights ? (*weights)[c] : 1.0) / sum;
                for (int i = 0; i < n; ++i)
                    (*grad)[u_index(i, j)] += w * std::exp(v[u_index(i, j)]);
            }
        }
        // Throughput pieces: -log SINR_ij - u_ij / b_l <= rhs
        for (int i = 0; i < n; ++i) {
            const auto& g = inst->gains[i];
            for (int j = 0; j < N; ++j) {
                double denom = inst->noise_w;
                for (int k = 0; k < N; ++k)
                    if (k != j)
                        denom += p[k] * g[k];
                const double neg_log_sinr =
                    std::log(denom) - v[j] - std::log(g[j]);
                for (int l = 0; l < m; ++l) {
                    const std::size_t cc =
                        static_cast<std::size_t>(N) * 2 +
                        (static_cast<std::size_t>(l) * n + i) * N + j;
                    f[cc] = neg_log_sinr - v[u_index(i, j)] * inv_b[l] -
                            log_cap_rhs[(static_cast<std::size_t>(l) * n + i) * N + j];
                    if (grad) {
                        const double w = weights ? (*weights)[cc] : 1.0;
                        for (int k = 0; k < N; ++k)
                            if (k != j)
                                (*grad)[k] += w * p[k] * g[k] / denom;
                        (*grad)[j] -= w;
                        (*grad)[u_index(i, j)] -= w * inv_b[l];
                    }
                }
            }
        }
    }
};

double inf_norm(const std::vector<double>& v) {
    double m = 0.0;
    for (double x : v)
        m = std::max(m, std::abs(x));
    return m;
}

// Smoothed max-constraint value tau * log sum exp(f_c / tau) and gradient.
double phase1_value(const GpProblem& gp, const std::vector<double>& v, double tau,
                    std::vector<double>* grad, double* max_f) {
    std::vector<double> f;
    gp.constraints(v, f, nullptr, nullptr);
    const double fmax = *std::max_element(f.begin(), f.end());
    if (max_f)
        *max_f = fmax;
    double sum = 0.0;
    std::vector<double> w(f.size());
    for (std::size_t c = 0; c < f.size(); ++c) {
        w[c] = std::exp((f[c] - fmax) / tau);
        sum += w[c];
    }
    if (grad) {
        for (double& x : w)
            x /= sum;
        std::vector<double> dummy;
        gp.constraints(v, dummy, &w, grad);
    }
    return fmax + tau * std::log(sum);
}

// Barrier objective sum e^{q_j} - (1/t_b) sum log(-f_c); +inf when
// infeasible. Scaled by 1/t_b (not the textbook t_b * f0 form) so the value
// stays at the magnitude of the true objective at every continuation step,
// which keeps backtracking comparisons and the gradient norm numerically
// meaningful at large t_b. The gradient is then exactly the KKT stationarity
// residual with multipliers lambda_c = 1 / (t_b * (-f_c)).
double barrier_value(const GpProblem& gp, const std::vector<double>& v, double tb,
                     std::vector<double>* grad) {
    std::vector<double> f;
    gp.constraints(v, f, nullptr, nullptr);
    double val = 0.0;
    std::vector<double> w(f.size());
    for (std::size_t c = 0; c < f.size(); ++c) {
        if (f[c] >= 0.0)
            return std::numeric_limits<double>::infinity();
        val -= std::log(-f[c]) / tb;
        w[c] = 1.0 / (tb * (-f[c]));
    }
    for (int j = 0; j < gp.N; ++j)
        val += std::exp(v[j]);
    if (grad) {
        std::vector<double> dummy;
        gp.constraints(v, dummy, &w, grad);
        for (int j = 0; j < gp.N; ++j)
            (*grad)[j] += std::exp(v[j]);
    }
    return val;
}

// Barzilai-Borwein gradient descent with a backtracking safeguard on any
// smooth objective; returns the number of iterations used.
template <typename ValueGrad>
int bb_descend(std::vector<double>& v, ValueGrad&& fg, int max_iter,
               double grad_tol) {
    std::vector<double> grad, prev_grad, prev_v;
    double val = fg(v, &grad);
    double step = 1e-3;
    int it = 0;
    for (; it < max_iter; ++it) {
        if (inf_norm(grad) <= grad_tol)
            break;
        // BB1 step length from the previous displacement pair.
        if (!prev_v.empty()) {
            double sy = 0.0, ss = 0.0;
            for (std::size_t k = 0; k < v.size(); ++k) {
                const double s = v[k] - prev_v[k];
                const double y = grad[k] - prev_grad[k];
                sy += s * y;
                ss += s * s;
            }
            if (sy > 1e-300 && ss > 0.0)
                step = ss / sy;
            step = std::clamp(step, 1e-12, 1e6);
        }
        prev_v = v;
        prev_grad = grad;
        // Backtrack until the value decreases and stays in-domain.
        std::vector<double> trial(v.size());
        double t = step;
        bool accepted = false;
        for (int bt = 0; bt < 60; ++bt) {
            for (std::size_t k = 0; k < v.size(); ++k)
                trial[k] = v[k] - t * grad[k];
            const double tv = fg(trial, nullptr);
            if (tv < val) {
                v = trial;
                val = fg(v, &grad);
                accepted = true;
                break;
            }
            t *= 0.5;
        }
        if (!accepted)
            break;
    }
    return it;
}

}  // namespace

PowerSolution solve_power(const PowerInstance& instance,
                          const PowerSolveOptions& options) {
    instance.validate();
    const GpProblem gp(instance);
    PowerSolution sol;
    sol.powers_w.assign(gp.N, 0.0);
    sol.x.assign(gp.n, std::vector<double>(gp.N, 0.0));

    // Start just inside the cap with an even sub-unit association split.
    std::vector<double> v(gp.dim());
    for (int j = 0; j < gp.N; ++j)
        v[j] = std::log(instance.power_cap_w) - 1.0;
    for (int i = 0; i < gp.n; ++i)
        for (int j = 0; j < gp.N; ++j)
            v[gp.u_index(i, j)] = std::log(0.5 / gp.n);

    // Phase 1: drive max_c f_c below zero via its smooth upper bound.
    double max_f = 0.0;
    int total_iters = 0;
    for (double tau : {1.0, 0.1, 0.01, 1e-3, 1e-4}) {
        auto fg = [&](const std::vector<double>& w, std::vector<double>* grad) {
            return phase1_value(gp, w, tau, grad, nullptr);
        };
        total_iters += bb_descend(v, fg, options.max_inner, 1e-10);
        phase1_value(gp, v, tau, nullptr, &max_f);
        if (max_f < -1e-7)
            break;
    }
    sol.iterations = total_iters;
    if (max_f >= 0.0) {
        sol.status = PowerStatus::Infeasible;
        return sol;
    }

    // Phase 2: log-barrier continuation. Stationarity residual of the true
    // KKT system equals the centering gradient divided by t_b, and the
    // complementarity residual equals n_constraints / t_b.
    const double mc = static_cast<double>(gp.n_constraints());
    double tb = 1.0;
    bool converged = false;
    int outer = 0;
    double center_grad_norm = 0.0;
    for (; outer < options.max_outer; ++outer) {
        auto fg = [&](const std::vector<double>& w, std::vector<double>* grad) {
            return barrier_value(gp, w, tb, grad);
        };
        total_iters += bb_descend(v, fg, options.max_inner, 1e-12);
        std::vector<double> grad;
        barrier_value(gp, v, tb, &grad);
        center_grad_norm = inf_norm(grad);
        // The barrier suboptimality gap is m_c / t_b in objective units;
        // terminate on the gap relative to the current objective so small
        // instances (milliwatt optima) reach the same relative accuracy.
        double obj = 0.0;
        for (int j = 0; j < gp.N; ++j)
            obj += std::exp(v[j]);
        if (mc / tb < options.tolerance * std::max(obj, 1e-30)) {
            converged = true;
            break;
        }
        tb *= 10.0;
    }
    sol.iterations = total_iters;
    sol.kkt_residual = std::max(center_grad_norm, mc / tb);
    sol.status = converged ? PowerStatus::Optimal : PowerStatus::MaxIterations;

    sol.total_power_w = 0.0;
    for (int j = 0; j < gp.N; ++j) {
        sol.powers_w[j] = std::exp(v[j]);
        sol.total_power_w += sol.powers_w[j];
    }
    for (int i = 0; i < gp.n; ++i)
        for (int j = 0; j < gp.N; ++j)
            sol.x[i][j] = std::exp(v[gp.u_index(i, j)]);
    return sol;
}

std::string PowerInstance::to_json() const {
    nlohmann::json j;
    j["gains"] = gains;
    j["demands_bps"] = demands_bps;
    j["bandwidths_hz"] = bandwidths_hz;
    j["noise_w"] = noise_w;
    j["power_cap_w"] = power_cap_w;
    nlohmann::json jp = nlohmann::json::array();
    for (const auto& p : pieces)
        jp.push_back({{"a", p.a}, {"b", p.b}});
    j["pieces"] = jp;
    return j.dump(2);
}

PowerInstance PowerInstance::from_json(const std::string& text) {
    const nlohmann::json j = nlohmann::json::parse(text);
    PowerInstance inst;
    inst.gains = j.at("gains").get<std::vector<std::vector<double>>>();
    inst.demands_bps = j.at("demands_bps").get<std::vector<double>>();
    inst.bandwidths_hz = j.at("bandwidths_hz").get<std::vector<double>>();
    inst.noise_w = j.at("noise_w").get<double>();
    inst.power_cap_w = j.at("power_cap_w").get<double>();
    if (j.contains("pieces")) {
        for (const auto& jp : j.at("pieces"))
            inst.pieces.push_back(
                {jp.at("a").get<double>(), jp.at("b").get<double>()});
    }
    if (inst.pieces.empty())
        inst.pieces = fit_capacity_pieces(6);
    return inst;
}

std::string PowerSolution::to_json() const {
    nlohmann::json j;
    j["status"] = power_status_name(status);
    j["powers_w"] = powers_w;
    j["x"] = x;
    j["total_power_w"] = total_power_w;
    j["kkt_residual"] = kkt_residual;
    j["iterations"] = iterations;
    return j.dump(2);
}

}  // namespace rtwin
