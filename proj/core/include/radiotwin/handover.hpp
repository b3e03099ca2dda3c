#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "radiotwin/geom2d.hpp"
#include "radiotwin/radiomap.hpp"
#include "radiotwin/rng.hpp"

namespace rtwin {

struct MobilityProfile {
    std::string name;
    double speed_min_mps = 0.0;
    double speed_max_mps = 0.0;
    double memory_a = 0.0;  // Gauss-Markov memory in [0, 1]

    double mean_speed() const { return 0.5 * (speed_min_mps + speed_max_mps); }
    double speed_sigma() const { return 0.25 * (speed_max_mps - speed_min_mps); }
};

// static [0,0.2] a=0.99; pedestrian [0.8,1.6] a=0.8; cyclist [4,7] a=0.88;
// vehicle [10,25] a=0.96.
const std::array<MobilityProfile, 4>& mobility_profiles();

inline constexpr int kNumDeviceTypes = 5;
// smartphone, tablet, wearable, IoT, feature phone.
const std::array<const char*, kNumDeviceTypes>& device_type_names();
// Population shares 93.5 / 3 / 1.1 / 0.5 / 1.9 %.
const std::array<double, kNumDeviceTypes>& default_device_mix();
// Handover-delay weights per device type.
const std::array<double, kNumDeviceTypes>& default_switching_weights();

struct MobilityState {
    Vec2 position_m;            // antenna-centred ENU
    double speed_mps = 0.0;
    double direction_rad = 0.0;
    double mean_direction_rad = 0.0;  // long-run heading; mirrored on bounce
};

// One Gauss-Markov slot (1 s): s_t = a s + (1-a) s_bar + sqrt(1-a^2) sigma w,
// the same recursion for direction, position advanced along the new heading
// and reflected at the +-half_extent_m boundary. Negative speed draws are
// reflected to |s| so the stationary mean stays at s_bar.
MobilityState gauss_markov_step(const MobilityState& state,
                                const MobilityProfile& profile,
                                double half_extent_m, Rng& rng);

struct HandoverInstance {
    std::vector<double> bandwidths_hz;            // per antenna
    double noise_dbm = -104.0;
    int n_users = 100;
    int horizon_slots = 5000;
    double gamma = 1.0;                           // switching-penalty weight
    std::array<double, 4> profile_mix = {0.1, 0.1, 0.3, 0.5};
    std::array<double, kNumDeviceTypes> device_mix = default_device_mix();
    std::array<double, kNumDeviceTypes> switching_weights =
        default_switching_weights();
    std::vector<double> expert_etas = {0.01, 0.1, 1.0, 10.0};
    double hedge_eps = 0.1;
    std::uint64_t seed = 0;
    bool record_assignments = false;  // keep the applied per-slot assignments

    void validate() const;  // throws std::invalid_argument
};

// Problem objective for one slot under integral assignments x (antenna index
// per user): sum_i log(max(c_i, 1) / y) - gamma * sum_i A_i [x_i != prev_i],
// with c_ij = B_j log2(1 + SINR_ij) and y_j = number of users on antenna j.
// The A-weighted switching norm counts each handover once.
double slot_objective(const std::vector<int>& x, const std::vector<int>& x_prev,
                      const std::vector<std::vector<double>>& sinr,
                      const std::vector<double>& bandwidths_hz, double gamma,
                      const std::vector<double>& switch_weight);

// Exponentiated-gradient expert: one probability simplex over antennas per
// user, multiplicative update on the previous slot's utility vector.
struct ExpertState {
    double eta = 0.1;
    std::vector<std::vector<double>> probs;  // n x N, each row on the simplex
    std::vector<int> decision;               // argmax per user

    static ExpertState init(int n_users, int n_antennas, double eta);
    // utilities[i][j]: per-user gain of choosing antenna j this slot.
    void step(const std::vector<std::vector<double>>& utilities);
};

struct SlotRecord {
    int slot = 0;
    double total_throughput_bps = 0.0;
    int handovers = 0;
    int chosen_expert = 0;
    double objective = 0.0;
};

struct HandoverSummary {
    double mean_throughput_last100 = 0.0;
    double mean_handovers_last100 = 0.0;
    double cumulative_objective = 0.0;
    std::vector<double> expert_cumulative_objective;
    std::string to_json() const;
};

struct HandoverTrace {
    std::vector<SlotRecord> slots;
    HandoverSummary summary;
    // Applied antenna index per (slot, user); filled when the instance sets
    // record_assignments.
    std::vector<std::vector<int>> assignments;
    std::string trace_csv() const;
};

// Full online simulation: Gauss-Markov user motion, per-slot SINR read from
// the antenna radio maps (invalid cells fall back to the nearest valid
// cell), one exponentiated-gradient expert per learning rate, and a Hedge
// meta-learner that follows the highest-weight expert. Deterministic for a
// fixed seed.
HandoverTrace simulate_handover(const HandoverInstance& instance,
                                const std::vector<RadioMap>& maps);

}  // namespace rtwin
