#include <algorithm>
#include <cmath>
#include <numbers>

#include "doctest.h"
#include "radiotwin/handover.hpp"

using namespace rtwin;

namespace {

RadioMap uniform_map(float rsrp_dbm) {
    RadioMap m(GeoTransform(48.0, 11.0, 5.0));
    m.values = Grid<float>(kGridSize, kGridSize, rsrp_dbm);
    m.valid = Grid<std::uint8_t>(kGridSize, kGridSize, 1);
    return m;
}

// Antenna 0 strong on the west half, antenna 1 strong on the east half, so
// users crossing the midline have a reason to hand over.
std::vector<RadioMap> split_maps() {
    RadioMap west = uniform_map(-100.0f);
    RadioMap east = uniform_map(-100.0f);
    for (int r = 0; r < kGridSize; ++r) {
        for (int c = 0; c < kGridSize; ++c) {
            if (c < kGridSize / 2)
                west.values.at(r, c) = -60.0f;
            else
                east.values.at(r, c) = -60.0f;
        }
    }
    return {west, east};
}

HandoverInstance small_instance(int users, int slots) {
    HandoverInstance inst;
    inst.bandwidths_hz = {2e7, 2e7};
    inst.n_users = users;
    inst.horizon_slots = slots;
    inst.seed = 11;
    return inst;
}

}  // namespace

TEST_CASE("mobility profile presets") {
    const auto& p = mobility_profiles();
    REQUIRE(p.size() == 4);
    CHECK(p[0].name == "static");
    CHECK(p[0].memory_a == doctest::Approx(0.99));
    CHECK(p[1].name == "pedestrian");
    CHECK(p[1].mean_speed() == doctest::Approx(1.2));
    CHECK(p[1].speed_sigma() == doctest::Approx(0.2));
    CHECK(p[2].name == "cyclist");
    CHECK(p[2].speed_min_mps == doctest::Approx(4.0));
    CHECK(p[3].name == "vehicle");
    CHECK(p[3].speed_max_mps == doctest::Approx(25.0));

    double mix_sum = 0.0;
    for (double v : default_device_mix())
        mix_sum += v;
    CHECK(mix_sum == doctest::Approx(1.0));
    for (double w : default_switching_weights())
        CHECK(w >= 1.0);
}

TEST_CASE("Gauss-Markov mobility statistics") {
    Rng rng(3);
    SUBCASE("memory a = 1 keeps speed and heading frozen") {
        MobilityProfile frozen{"frozen", 2.0, 4.0, 1.0};
        MobilityState s;
        s.position_m = {0.0, 0.0};
        s.speed_mps = 3.0;
        s.direction_rad = 0.5;
        s.mean_direction_rad = 0.5;
        for (int t = 0; t < 50; ++t) {
            const MobilityState next = gauss_markov_step(s, frozen, 1e6, rng);
            CHECK(next.speed_mps == doctest::Approx(3.0));
            CHECK(next.direction_rad == doctest::Approx(0.5));
            s = next;
        }
        CHECK(s.position_m.x == doctest::Approx(50.0 * 3.0 * std::cos(0.5)));
    }
    SUBCASE("memory a = 0 gives uncorrelated speed increments") {
        MobilityProfile white{"white", 2.0, 10.0, 0.0};
        MobilityState s;
        s.speed_mps = 6.0;
        const int n = 10000;
        std::vector<double> speeds;
        speeds.reserve(n);
        for (int t = 0; t < n; ++t) {
            s = gauss_markov_step(s, white, 1e7, rng);
            speeds.push_back(s.speed_mps);
        }
        double mean = 0.0;
        for (double v : speeds)
            mean += v;
        mean /= n;
        double var = 0.0, cov = 0.0;
        for (int t = 0; t + 1 < n; ++t) {
            var += (speeds[t] - mean) * (speeds[t] - mean);
            cov += (speeds[t] - mean) * (speeds[t + 1] - mean);
        }
        CHECK(std::abs(cov / var) < 0.1);
    }
    SUBCASE("stationary speed mean matches the profile midpoint within 2%") {
        const MobilityProfile& ped = mobility_profiles()[1];
        MobilityState s;
        s.speed_mps = ped.mean_speed();
        double acc = 0.0;
        const int n = 100000;
        for (int t = 0; t < n; ++t) {
            s = gauss_markov_step(s, ped, 1e7, rng);
            acc += s.speed_mps;
        }
        CHECK(acc / n == doctest::Approx(ped.mean_speed()).epsilon(0.02));
    }
    SUBCASE("positions stay inside the reflecting boundary") {
        const MobilityProfile& veh = mobility_profiles()[3];
        MobilityState s;
        s.position_m = {95.0, -95.0};
        s.speed_mps = veh.mean_speed();
        for (int t = 0; t < 2000; ++t) {
            s = gauss_markov_step(s, veh, 100.0, rng);
            REQUIRE(std::abs(s.position_m.x) <= 100.0);
            REQUIRE(std::abs(s.position_m.y) <= 100.0);
        }
    }
}

TEST_CASE("slot objective hand cases") {
    const std::vector<double> bw = {1.0, 1.0};
    SUBCASE("single user, SINR 1, unit bandwidth, no switch: objective 0") {
        // c = log2(2) = 1 bit/s on one antenna with load 1.
        CHECK(slot_objective({0}, {0}, {{1.0, 1.0}}, bw, 1.0, {1.0}) ==
              doctest::Approx(0.0));
    }
    SUBCASE("switching cost is gamma times the device weight, once per user") {
        const double stay = slot_objective({0}, {0}, {{1.0, 1.0}}, bw, 2.0, {1.5});
        const double move = slot_objective({1}, {0}, {{1.0, 1.0}}, bw, 2.0, {1.5});
        CHECK(stay - move == doctest::Approx(2.0 * 1.5));
    }
    SUBCASE("splitting two users across antennas beats sharing one") {
        const std::vector<std::vector<double>> sinr = {{15.0, 15.0}, {15.0, 15.0}};
        const double shared =
            slot_objective({0, 0}, {0, 0}, sinr, bw, 1.0, {1.0, 1.0});
        const double split =
            slot_objective({0, 1}, {0, 1}, sinr, bw, 1.0, {1.0, 1.0});
        CHECK(split - shared == doctest::Approx(2.0 * std::log(2.0)));
    }
    SUBCASE("rates below 1 bit/s are floored at 1") {
        CHECK(slot_objective({0}, {0}, {{0.0, 0.0}}, bw, 1.0, {1.0}) ==
              doctest::Approx(0.0));
    }
    SUBCASE("assignments outside the antenna range are rejected") {
        CHECK_THROWS_AS(
            (void)slot_objective({2}, {0}, {{1.0, 1.0}}, bw, 1.0, {1.0}),
            std::invalid_argument);
    }
}

TEST_CASE("exponentiated-gradient expert") {
    SUBCASE("eta = 0 never moves off the uniform prior") {
        ExpertState e = ExpertState::init(3, 4, 0.0);
        const std::vector<std::vector<double>> util(3,
                                                    {5.0, -2.0, 9.0, 1.0});
        for (int t = 0; t < 10; ++t)
            e.step(util);
        for (const auto& row : e.probs)
            for (double p : row)
                CHECK(p == doctest::Approx(0.25));
        for (int d : e.decision)
            CHECK(d == 0);
    }
    SUBCASE("rows stay on the probability simplex") {
        ExpertState e = ExpertState::init(2, 3, 1.0);
        Rng rng(9);
        for (int t = 0; t < 200; ++t) {
            std::vector<std::vector<double>> util(2, std::vector<double>(3));
            for (auto& row : util)
                for (double& u : row)
                    u = rng.uniform(-50.0, 50.0);
            e.step(util);
            for (const auto& row : e.probs) {
                double sum = 0.0;
                for (double p : row) {
                    CHECK(p >= 0.0);
                    sum += p;
                }
                CHECK(sum == doctest::Approx(1.0));
            }
        }
    }
    SUBCASE("constant utilities concentrate on the unique best antenna") {
        ExpertState e = ExpertState::init(1, 3, 0.5);
        const std::vector<std::vector<double>> util = {{1.0, 4.0, 2.0}};
        for (int t = 0; t < 60; ++t)
            e.step(util);
        CHECK(e.decision[0] == 1);
        CHECK(e.probs[0][1] > 0.999);
    }
}

TEST_CASE("simulation with a single expert reduces to that expert") {
    HandoverInstance inst = small_instance(8, 60);
    inst.expert_etas = {0.5};
    const HandoverTrace trace = simulate_handover(inst, split_maps());
    for (const SlotRecord& s : trace.slots)
        CHECK(s.chosen_expert == 0);
    REQUIRE(trace.summary.expert_cumulative_objective.size() == 1);
    CHECK(trace.summary.expert_cumulative_objective[0] ==
          doctest::Approx(trace.summary.cumulative_objective));
}

TEST_CASE("single stationary user converges to the strongest antenna") {
    HandoverInstance inst = small_instance(1, 200);
    inst.gamma = 0.0;
    inst.profile_mix = {1.0, 0.0, 0.0, 0.0};  // static profile only
    const std::vector<RadioMap> maps = {uniform_map(-70.0f), uniform_map(-90.0f)};
    const HandoverTrace trace = simulate_handover(inst, maps);

    // Expected rate on the dominant antenna, interference from the other.
    const double noise_mw = std::pow(10.0, inst.noise_dbm / 10.0);
    const double p0 = std::pow(10.0, -7.0), p1 = std::pow(10.0, -9.0);
    const double best_rate = 2e7 * std::log2(1.0 + p0 / (noise_mw + p1));
    CHECK(trace.summary.mean_throughput_last100 ==
          doctest::Approx(best_rate).epsilon(1e-6));
    CHECK(trace.summary.mean_handovers_last100 == doctest::Approx(0.0));
}

TEST_CASE("static population stops handing over") {
    HandoverInstance inst = small_instance(30, 300);
    inst.profile_mix = {1.0, 0.0, 0.0, 0.0};
    const HandoverTrace trace = simulate_handover(inst, split_maps());
    CHECK(trace.summary.mean_handovers_last100 < 0.5);
}

TEST_CASE("raising the switching penalty never increases steady-state handovers") {
    // Total handovers over the horizon, averaged over seeds: individual
    // last-100 counts are tiny and noisy.
    const std::vector<RadioMap> maps = split_maps();
    std::vector<double> ladder;
    for (double gamma : {0.0, 0.1, 1.0, 10.0}) {
        double total = 0.0;
        for (std::uint64_t seed : {17u, 18u, 19u}) {
            HandoverInstance inst = small_instance(40, 400);
            inst.gamma = gamma;
            inst.seed = seed;
            const HandoverTrace trace = simulate_handover(inst, maps);
            for (const SlotRecord& s : trace.slots)
                total += s.handovers;
        }
        ladder.push_back(total / 3.0);
    }
    for (std::size_t k = 1; k < ladder.size(); ++k)
        CHECK(ladder[k] <= ladder[k - 1] * 1.05 + 3.0);
    CHECK(ladder.back() <= 0.5 * std::max(ladder.front(), 2.0));
}

TEST_CASE("simulation is deterministic for a fixed seed") {
    HandoverInstance inst = small_instance(25, 120);
    const HandoverTrace a = simulate_handover(inst, split_maps());
    const HandoverTrace b = simulate_handover(inst, split_maps());
    CHECK(a.trace_csv() == b.trace_csv());
    CHECK(a.summary.cumulative_objective == b.summary.cumulative_objective);
}

TEST_CASE("instance validation and shape errors") {
    HandoverInstance inst = small_instance(5, 10);
    SUBCASE("no antennas") {
        inst.bandwidths_hz.clear();
        CHECK_THROWS_AS(inst.validate(), std::invalid_argument);
    }
    SUBCASE("profile mix must sum to one") {
        inst.profile_mix = {0.5, 0.5, 0.5, 0.5};
        CHECK_THROWS_AS(inst.validate(), std::invalid_argument);
    }
    SUBCASE("negative gamma") {
        inst.gamma = -1.0;
        CHECK_THROWS_AS(inst.validate(), std::invalid_argument);
    }
    SUBCASE("one map per antenna is required") {
        CHECK_THROWS_AS((void)simulate_handover(inst, {uniform_map(-70.0f)}),
                        std::invalid_argument);
    }
    SUBCASE("a map with no valid cell is rejected") {
        RadioMap dead = uniform_map(-70.0f);
        dead.valid = Grid<std::uint8_t>(kGridSize, kGridSize, 0);
        CHECK_THROWS_AS(
            (void)simulate_handover(inst, {uniform_map(-70.0f), dead}),
            std::invalid_argument);
    }
}

TEST_CASE("trace CSV and summary JSON shapes") {
    HandoverInstance inst = small_instance(4, 20);
    const HandoverTrace trace = simulate_handover(inst, split_maps());
    const std::string csv = trace.trace_csv();
    CHECK(csv.rfind("slot,total_throughput,handovers,chosen_expert", 0) == 0);
    CHECK(std::count(csv.begin(), csv.end(), '\n') == 21);
    const std::string j = trace.summary.to_json();
    CHECK(j.find("\"mean_throughput_last100\"") != std::string::npos);
    CHECK(j.find("\"expert_cumulative_objective\"") != std::string::npos);
}
