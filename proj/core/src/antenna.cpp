#include "radiotwin/antenna.hpp"

#include <cmath>
#include <numbers>

#include "json.hpp"

namespace rtwin {

namespace {
constexpr double kPi = std::numbers::pi;
constexpr double kDeg = kPi / 180.0;
const double kSqrtDim = std::sqrt(static_cast<double>(kEmbeddingDim));
}  // namespace

ParamBounds theta0_bounds() { return {-kPi, kPi}; }
ParamBounds hpbw_bounds() { return {10.0 * kDeg, 120.0 * kDeg}; }
ParamBounds gmax_bounds() { return {0.0, 30.0}; }

double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

double readout(const Embedding& w, const Embedding& u) {
    double acc = 0.0;
    for (int i = 0; i < kEmbeddingDim; ++i)
        acc += w[i] * u[i];
    return acc / kSqrtDim;
}

double bounded_param(double presigmoid, const ParamBounds& b) {
    return b.lo + (b.hi - b.lo) * sigmoid(presigmoid);
}

double bounded_param_grad(double presigmoid, const ParamBounds& b) {
    const double s = sigmoid(presigmoid);
    return (b.hi - b.lo) * s * (1.0 - s);
}

AntennaParams derive_antenna_params(const TrainablePattern& p) {
    AntennaParams out;
    out.theta0 = bounded_param(readout(p.w_theta0, p.u_ant), theta0_bounds());
    out.hpbw_v = bounded_param(readout(p.w_hpbw_v, p.u_ant), hpbw_bounds());
    out.hpbw_h = bounded_param(readout(p.w_hpbw_h, p.u_ant), hpbw_bounds());
    out.g_max = bounded_param(readout(p.w_gmax, p.u_ant), gmax_bounds());
    return out;
}

MaterialParams derive_material_params(const MaterialEmbeddings& m,
                                      const Embedding& u_mat) {
    return {std::exp(readout(m.w_eps, u_mat)) + 1.0,
            std::exp(readout(m.w_sigma, u_mat))};
}

double pattern_gain(const AntennaParams& p, double theta, double phi) {
    const double rv = (theta - (kPi / 2.0 - p.theta0)) / p.hpbw_v;
    const double a_v = -std::fmin(12.0 * rv * rv, kSlaV);
    const double rh = phi / p.hpbw_h;
    const double a_h = -std::fmin(12.0 * rh * rh, kAm);
    return -std::fmin(-(a_v + a_h), kAm) + p.g_max;
}

PatternGainGrad pattern_gain_with_grad(const AntennaParams& p, double theta,
                                       double phi) {
    PatternGainGrad g;

    const double rv = (theta - (kPi / 2.0 - p.theta0)) / p.hpbw_v;
    const double qv = 12.0 * rv * rv;
    const bool v_active = qv <= kSlaV;  // left branch on ties
    const double a_v = -(v_active ? qv : kSlaV);

    const double rh = phi / p.hpbw_h;
    const double qh = 12.0 * rh * rh;
    const bool h_active = qh <= kAm;
    const double a_h = -(h_active ? qh : kAm);

    const double s = -(a_v + a_h);
    const bool outer_active = s <= kAm;
    g.a_tot = -(outer_active ? s : kAm) + p.g_max;
    g.d_gmax = 1.0;

    if (outer_active) {
        if (v_active) {
            // d a_v / d theta0 = -24 rv / hpbw_v ; d a_v / d hpbw_v = 24 rv^2 / hpbw_v
            g.d_theta0 = -24.0 * rv / p.hpbw_v;
            g.d_hpbw_v = 24.0 * rv * rv / p.hpbw_v;
        }
        if (h_active) {
            g.d_hpbw_h = 24.0 * rh * rh / p.hpbw_h;
        }
    }
    return g;
}

std::string pattern_to_json(const TrainablePattern& p) {
    const AntennaParams d = derive_antenna_params(p);
    nlohmann::json j;
    j["w_theta0"] = p.w_theta0;
    j["w_hpbw_v"] = p.w_hpbw_v;
    j["w_hpbw_h"] = p.w_hpbw_h;
    j["w_gmax"] = p.w_gmax;
    j["u_ant"] = p.u_ant;
    j["derived"] = {{"theta0_rad", d.theta0},
                    {"hpbw_v_rad", d.hpbw_v},
                    {"hpbw_h_rad", d.hpbw_h},
                    {"g_max_dbi", d.g_max}};
    return j.dump(2);
}

TrainablePattern pattern_from_json(const std::string& text) {
    const auto j = nlohmann::json::parse(text);
    TrainablePattern p;
    p.w_theta0 = j.at("w_theta0").get<Embedding>();
    p.w_hpbw_v = j.at("w_hpbw_v").get<Embedding>();
    p.w_hpbw_h = j.at("w_hpbw_h").get<Embedding>();
    p.w_gmax = j.at("w_gmax").get<Embedding>();
    p.u_ant = j.at("u_ant").get<Embedding>();
    return p;
}

}  // namespace rtwin
