#include "radiotwin/handover.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>
#include <stdexcept>

#include "json.hpp"

namespace rtwin {

namespace {
constexpr double kDirectionSigma = std::numbers::pi / 4.0;
constexpr double kMinRateBps = 1.0;  // keeps log(c/y) finite on dead cells
}  // namespace

const std::array<MobilityProfile, 4>& mobility_profiles() {
    static const std::array<MobilityProfile, 4> profiles = {{
        {"static", 0.0, 0.2, 0.99},
        {"pedestrian", 0.8, 1.6, 0.8},
        {"cyclist", 4.0, 7.0, 0.88},
        {"vehicle", 10.0, 25.0, 0.96},
    }};
    return profiles;
}

const std::array<const char*, kNumDeviceTypes>& device_type_names() {
    static const std::array<const char*, kNumDeviceTypes> names = {
        "smartphone", "tablet", "wearable", "iot", "feature_phone"};
    return names;
}

const std::array<double, kNumDeviceTypes>& default_device_mix() {
    static const std::array<double, kNumDeviceTypes> mix = {0.935, 0.03, 0.011,
                                                            0.005, 0.019};
    return mix;
}

const std::array<double, kNumDeviceTypes>& default_switching_weights() {
    static const std::array<double, kNumDeviceTypes> w = {1.0, 1.2, 1.5, 2.0, 1.8};
    return w;
}

MobilityState gauss_markov_step(const MobilityState& state,
                                const MobilityProfile& profile,
                                double half_extent_m, Rng& rng) {
    const double a = profile.memory_a;
    const double noise = std::sqrt(std::max(0.0, 1.0 - a * a));
    const double w_speed = rng.gaussian();
    const double w_dir = rng.gaussian();

    MobilityState next = state;
    next.speed_mps = a * state.speed_mps + (1.0 - a) * profile.mean_speed() +
                     noise * profile.speed_sigma() * w_speed;
    // Reflect negative draws instead of clamping: |s| keeps the stationary
    // mean at the profile midpoint, a zero-floor would bias it upward.
    next.speed_mps = std::abs(next.speed_mps);
    next.direction_rad = a * state.direction_rad +
                         (1.0 - a) * state.mean_direction_rad +
                         noise * kDirectionSigma * w_dir;

    next.position_m.x += next.speed_mps * std::cos(next.direction_rad);
    next.position_m.y += next.speed_mps * std::sin(next.direction_rad);

    // Mirror at the grid boundary; the long-run heading flips with it.
    auto reflect = [](double& p, double half) {
        bool flipped = false;
        for (int guard = 0; guard < 8 && std::abs(p) > half; ++guard) {
            p = p > half ? 2.0 * half - p : -2.0 * half - p;
            flipped = !flipped;
        }
        return flipped;
    };
    if (reflect(next.position_m.x, half_extent_m)) {
        next.direction_rad = std::numbers::pi - next.direction_rad;
        next.mean_direction_rad = std::numbers::pi - next.mean_direction_rad;
    }
    if (reflect(next.position_m.y, half_extent_m)) {
        next.direction_rad = -next.direction_rad;
        next.mean_direction_rad = -next.mean_direction_rad;
    }
    return next;
}

void HandoverInstance::validate() const {
    if (bandwidths_hz.empty())
        throw std::invalid_argument("handover instance: no antennas");
    for (double b : bandwidths_hz)
        if (!(b > 0.0))
            throw std::invalid_argument("handover instance: bandwidths must be > 0");
    if (n_users < 1 || horizon_slots < 1)
        throw std::invalid_argument("handover instance: need users and slots");
    if (gamma < 0.0)
        throw std::invalid_argument("handover instance: gamma must be >= 0");
    auto check_mix = [](const auto& mix, const char* what) {
        double sum = 0.0;
        for (double p : mix) {
            if (p < 0.0)
                throw std::invalid_argument(std::string("handover instance: ") +
                                            what + " has negative entries");
            sum += p;
        }
        if (std::abs(sum - 1.0) > 1e-9)
            throw std::invalid_argument(std::string("handover instance: ") + what +
                                        " must sum to 1");
    };
    check_mix(profile_mix, "profile mix");
    check_mix(device_mix, "device mix");
    for (double w : switching_weights)
        if (w < 0.0)
            throw std::invalid_argument("handover instance: switching weights >= 0");
    if (expert_etas.empty())
        throw std::invalid_argument("handover instance: need at least one expert");
}

double slot_objective(const std::vector<int>& x, const std::vector<int>& x_prev,
                      const std::vector<std::vector<double>>& sinr,
                      const std::vector<double>& bandwidths_hz, double gamma,
                      const std::vector<double>& switch_weight) {
    const int n = static_cast<int>(x.size());
    const int n_ant = static_cast<int>(bandwidths_hz.size());
    std::vector<int> load(bandwidths_hz.size(), 0);
    for (int j : x) {
        if (j < 0 || j >= n_ant)
            throw std::invalid_argument("slot_objective: assignment out of range");
        ++load[j];
    }
    double obj = 0.0;
    for (int i = 0; i < n; ++i) {
        const int j = x[i];
        const double c = std::max(
            kMinRateBps, bandwidths_hz[j] * std::log2(1.0 + sinr[i][j]));
        obj += std::log(c / static_cast<double>(load[j]));
        if (i < static_cast<int>(x_prev.size()) && x[i] != x_prev[i])
            obj -= gamma * switch_weight[i];
    }
    return obj;
}

ExpertState ExpertState::init(int n_users, int n_antennas, double eta) {
    ExpertState s;
    s.eta = eta;
    s.probs.assign(n_users, std::vector<double>(
                                n_antennas, 1.0 / static_cast<double>(n_antennas)));
    s.decision.assign(n_users, 0);
    return s;
}

void ExpertState::step(const std::vector<std::vector<double>>& utilities) {
    for (std::size_t i = 0; i < probs.size(); ++i) {
        std::vector<double>& p = probs[i];
        double top = -1e300;
        for (std::size_t j = 0; j < p.size(); ++j)
            top = std::max(top, eta * utilities[i][j]);
        double sum = 0.0;
        for (std::size_t j = 0; j < p.size(); ++j) {
            p[j] *= std::exp(eta * utilities[i][j] - top);
            sum += p[j];
        }
        int best = 0;
        for (std::size_t j = 0; j < p.size(); ++j) {
            p[j] /= sum;
            if (p[j] > p[best])
                best = static_cast<int>(j);
        }
        decision[i] = best;
    }
}

namespace {

struct SimUser {
    MobilityState mobility;
    int profile = 0;
    int device = 0;
    double switch_weight = 1.0;
};

// RSRP with nearest-valid fallback, precomputed once per map with a
// multi-source breadth-first fill so per-slot lookups stay O(1).
Grid<float> filled_rsrp(const RadioMap& map) {
    Grid<float> out = map.values;
    const int n = map.values.rows();
    std::vector<std::pair<int, int>> frontier, next;
    Grid<std::uint8_t> done = map.valid;
    for (int r = 0; r < n; ++r)
        for (int c = 0; c < map.values.cols(); ++c)
            if (map.valid.at(r, c))
                frontier.emplace_back(r, c);
    if (frontier.empty())
        throw std::invalid_argument("handover simulation: map has no valid cell");
    const int dr[4] = {1, -1, 0, 0};
    const int dc[4] = {0, 0, 1, -1};
    while (!frontier.empty()) {
        next.clear();
        for (const auto& [r, c] : frontier) {
            for (int k = 0; k < 4; ++k) {
                const int rr = r + dr[k], cc = c + dc[k];
                if (out.in_bounds(rr, cc) && !done.at(rr, cc)) {
                    done.at(rr, cc) = 1;
                    out.at(rr, cc) = out.at(r, c);
                    next.emplace_back(rr, cc);
                }
            }
        }
        frontier.swap(next);
    }
    return out;
}

}  // namespace

std::string HandoverTrace::trace_csv() const {
    std::ostringstream out;
    out << "slot,total_throughput,handovers,chosen_expert\n";
    for (const SlotRecord& s : slots)
        out << s.slot << ',' << s.total_throughput_bps << ',' << s.handovers
            << ',' << s.chosen_expert << '\n';
    return out.str();
}

std::string HandoverSummary::to_json() const {
    nlohmann::json j;
    j["mean_throughput_last100"] = mean_throughput_last100;
    j["mean_handovers_last100"] = mean_handovers_last100;
    j["cumulative_objective"] = cumulative_objective;
    j["expert_cumulative_objective"] = expert_cumulative_objective;
    return j.dump(2);
}

HandoverTrace simulate_handover(const HandoverInstance& inst,
                                const std::vector<RadioMap>& maps) {
    inst.validate();
    if (maps.size() != inst.bandwidths_hz.size())
        throw std::invalid_argument("handover simulation: one map per antenna");

    const int n_ant = static_cast<int>(maps.size());
    const int n = inst.n_users;
    const auto& profiles = mobility_profiles();

    std::vector<Grid<float>> rsrp;
    rsrp.reserve(maps.size());
    for (const RadioMap& m : maps)
        rsrp.push_back(filled_rsrp(m));
    const GeoTransform& frame = maps.front().transform;
    const double half_extent =
        0.5 * frame.resolution() * static_cast<double>(frame.size() - 1);
    const double noise_mw = std::pow(10.0, inst.noise_dbm / 10.0);

    Rng rng(inst.seed);
    std::vector<SimUser> users(n);
    for (SimUser& u : users) {
        // Profile and device type by cumulative mix probability.
        double draw = rng.uniform();
        u.profile = 0;
        for (int k = 0; k < 3 && draw >= inst.profile_mix[k]; ++k) {
            draw -= inst.profile_mix[k];
            u.profile = k + 1;
        }
        draw = rng.uniform();
        u.device = 0;
        for (int k = 0; k < kNumDeviceTypes - 1 && draw >= inst.device_mix[k]; ++k) {
            draw -= inst.device_mix[k];
            u.device = k + 1;
        }
        u.switch_weight = inst.switching_weights[u.device];
        const MobilityProfile& p = profiles[u.profile];
        u.mobility.position_m = {rng.uniform(-half_extent, half_extent),
                                 rng.uniform(-half_extent, half_extent)};
        u.mobility.speed_mps = rng.uniform(p.speed_min_mps, p.speed_max_mps);
        u.mobility.direction_rad =
            rng.uniform(-std::numbers::pi, std::numbers::pi);
        u.mobility.mean_direction_rad = u.mobility.direction_rad;
    }
    std::vector<double> switch_weight(n);
    for (int i = 0; i < n; ++i)
        switch_weight[i] = users[i].switch_weight;

    const int n_experts = static_cast<int>(inst.expert_etas.size());
    std::vector<ExpertState> experts;
    experts.reserve(inst.expert_etas.size());
    for (double eta : inst.expert_etas)
        experts.push_back(ExpertState::init(n, n_ant, eta));
    std::vector<double> meta_weight(inst.expert_etas.size(),
                                    1.0 / static_cast<double>(n_experts));

    HandoverTrace trace;
    trace.summary.expert_cumulative_objective.assign(inst.expert_etas.size(), 0.0);
    std::vector<int> applied(n, 0), applied_prev;
    std::vector<std::vector<int>> expert_prev(inst.expert_etas.size());
    std::vector<std::vector<double>> sinr(n, std::vector<double>(n_ant));
    std::vector<std::vector<double>> utilities(n, std::vector<double>(n_ant));
    std::vector<int> load(n_ant, 0);
    std::vector<double> reward(inst.expert_etas.size());
    double range_sum = 0.0;

    for (int t = 0; t < inst.horizon_slots; ++t) {
        if (t > 0) {
            for (SimUser& u : users)
                u.mobility = gauss_markov_step(u.mobility, profiles[u.profile],
                                               half_extent, rng);
        }
        // Per-user SINR from the map stack at the user's cell.
        for (int i = 0; i < n; ++i) {
            const auto [lat, lon] = frame.enu_to_latlon(
                users[i].mobility.position_m.x, users[i].mobility.position_m.y);
            double total_mw = 0.0;
            std::vector<double>& row = sinr[i];
            for (int j = 0; j < n_ant; ++j) {
                auto cell = maps[j].transform.latlon_to_cell(lat, lon);
                if (!cell) {
                    // Off this map's grid: clamp to the nearest border cell.
                    const GeoTransform& tj = maps[j].transform;
                    const EnuPoint e = tj.latlon_to_enu(lat, lon);
                    const int centre = tj.size() / 2;
                    const int col = std::clamp(
                        centre + static_cast<int>(
                                     std::floor(e.x / tj.resolution() + 0.5)),
                        0, tj.size() - 1);
                    const int r = std::clamp(
                        centre - static_cast<int>(
                                     std::floor(e.y / tj.resolution() + 0.5)),
                        0, tj.size() - 1);
                    cell = CellIndex{r, col};
                }
                row[j] = std::pow(10.0, rsrp[j].at(cell->row, cell->col) / 10.0);
                total_mw += row[j];
            }
            for (int j = 0; j < n_ant; ++j)
                row[j] = row[j] / (noise_mw + (total_mw - row[j]));
        }

        // Per-user utility of each antenna: rate over last observed load,
        // minus the gamma-weighted handover cost relative to the applied
        // assignment the user currently holds.
        std::fill(load.begin(), load.end(), 0);
        if (t > 0)
            for (int j : applied)
                ++load[j];
        for (int i = 0; i < n; ++i) {
            for (int j = 0; j < n_ant; ++j) {
                const double c = std::max(
                    kMinRateBps,
                    inst.bandwidths_hz[j] * std::log2(1.0 + sinr[i][j]));
                const double y = std::max(1, load[j]);
                double u = std::log(c / y);
                if (t > 0 && j != applied[i])
                    u -= inst.gamma * switch_weight[i];
                utilities[i][j] = u;
            }
        }

        for (ExpertState& e : experts)
            e.step(utilities);

        // Hedge over experts with slot-normalized realized objectives. Each
        // expert is scored along its own standalone trajectory: scoring
        // against the meta's applied assignment would charge switching costs
        // to every expert that disagrees with the incumbent, locking the
        // meta onto whichever expert it followed first.
        applied_prev = applied;
        double r_min = 1e300, r_max = -1e300;
        for (std::size_t k = 0; k < experts.size(); ++k) {
            reward[k] = slot_objective(experts[k].decision, expert_prev[k],
                                       sinr, inst.bandwidths_hz, inst.gamma,
                                       switch_weight);
            r_min = std::min(r_min, reward[k]);
            r_max = std::max(r_max, reward[k]);
            trace.summary.expert_cumulative_objective[k] += reward[k];
            expert_prev[k] = experts[k].decision;
        }
        // Normalize by the running mean of the per-slot reward range rather
        // than per slot: a common scale keeps the weight ratios proportional
        // to the experts' cumulative raw objectives, so the meta converges
        // to the cumulatively best expert instead of over-weighting slots
        // where the field happened to be nearly tied.
        range_sum += r_max - r_min;
        const double reward_scale = range_sum / static_cast<double>(t + 1);
        double w_sum = 0.0;
        for (std::size_t k = 0; k < experts.size(); ++k) {
            const double r_norm =
                reward_scale > 0.0 ? (reward[k] - r_max) / reward_scale : 0.0;
            meta_weight[k] *= std::exp(inst.hedge_eps * r_norm);
            w_sum += meta_weight[k];
        }
        int chosen = 0;
        for (std::size_t k = 0; k < experts.size(); ++k) {
            meta_weight[k] /= w_sum;
            if (meta_weight[k] > meta_weight[chosen])
                chosen = static_cast<int>(k);
        }
        applied = experts[chosen].decision;

        SlotRecord rec;
        rec.slot = t;
        rec.chosen_expert = chosen;
        // The meta's realized objective is measured against the assignment
        // actually applied last slot, not the chosen expert's own history.
        rec.objective =
            slot_objective(applied, t > 0 ? applied_prev : std::vector<int>{},
                           sinr, inst.bandwidths_hz, inst.gamma, switch_weight);
        std::fill(load.begin(), load.end(), 0);
        for (int j : applied)
            ++load[j];
        for (int i = 0; i < n; ++i) {
            const int j = applied[i];
            const double c = std::max(
                kMinRateBps, inst.bandwidths_hz[j] * std::log2(1.0 + sinr[i][j]));
            rec.total_throughput_bps += c / static_cast<double>(load[j]);
            if (t > 0 && j != applied_prev[i])
                ++rec.handovers;
        }
        trace.summary.cumulative_objective += rec.objective;
        trace.slots.push_back(rec);
        if (inst.record_assignments)
            trace.assignments.push_back(applied);
    }

    const int tail = std::min<int>(100, static_cast<int>(trace.slots.size()));
    for (int t = inst.horizon_slots - tail; t < inst.horizon_slots; ++t) {
        trace.summary.mean_throughput_last100 +=
            trace.slots[t].total_throughput_bps;
        trace.summary.mean_handovers_last100 += trace.slots[t].handovers;
    }
    trace.summary.mean_throughput_last100 /= tail;
    trace.summary.mean_handovers_last100 /= tail;
    return trace;
}

}  // namespace rtwin
