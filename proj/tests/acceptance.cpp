// Acceptance suite: one pass/fail line per criterion. Usage:
//   tse_acceptance <path-to-tse-cli> <path-to-ci-config>
// Exit code is the number of failed criteria.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <string>
#include <vector>

#include "tse/config.hpp"
#include "tse/csv.hpp"
#include "tse/pipeline.hpp"

using namespace tse;

namespace {

int g_failures = 0;

void report(int criterion, bool pass, const std::string& detail) {
    std::printf("[%s] criterion %d: %s\n", pass ? "PASS" : "FAIL", criterion, detail.c_str());
    std::fflush(stdout);
    if (!pass) ++g_failures;
}

void report_info(int criterion, const std::string& detail) {
    std::printf("[INFO] criterion %d: %s\n", criterion, detail.c_str());
    std::fflush(stdout);
}

}  // namespace

// ---------------------------------------------------------------------------

static void criterion_3_grid_cardinality() {
    GridDims dims;
    auto grid = build_scenario_grid(GridSpec::full_defaults(), &dims);
    bool pass = grid.size() == 7350;
    std::vector<double> pbn, p, r;
    for (const auto& g : grid) {
        pbn.push_back(g.p_bn);
        p.push_back(g.p);
        r.push_back(g.r);
    }
    auto has = [](const std::vector<double>& v, double x) {
        for (double y : v)
            if (std::abs(y - x) < 1e-9) return true;
        return false;
    };
    pass = pass && has(pbn, 0.26) && has(pbn, 0.54) && has(p, 0.06) && has(p, 0.24) &&
           has(r, 0.90) && has(r, 0.99);
    report(3, pass,
           "grid cardinality " + std::to_string(grid.size()) + " (want 7350), endpoints present");
}

static void criterion_4_class2_normalization() {
    Rng rng(20250401);
    double worst = 0.0;
    for (int k = 0; k < 100; ++k) {
        double u_min = 0.5 + 18.5 * rng.u01();
        double u_max = 20.5 + 99.5 * rng.u01();
        double total = quadrature(PriorSpec::class2(u_min, u_max), [](double) { return 1.0; });
        worst = std::max(worst, std::abs(total - 1.0));
    }
    bool numeric = worst <= 1e-6;

    // closed-form branch-mass identity (exact)
    bool algebraic = true;
    for (int k = 0; k < 100; ++k) {
        double u_min = 0.5 + 18.5 * rng.u01();
        double u_max = 20.5 + 99.5 * rng.u01();
        double denom = u_max + 20.0 - 2.0 * u_min;
        double mass = (20.0 - u_min) * 2.0 / denom + (u_max - 20.0) / denom;
        algebraic = algebraic && std::abs(mass - 1.0) < 1e-12;
    }
    char buf[128];
    std::snprintf(buf, sizeof(buf), "class-2 normalization worst |err| %.3g (<= 1e-6), identity %s",
                  worst, algebraic ? "exact" : "violated");
    report(4, numeric && algebraic, buf);
}

static void criterion_5_class1_prior() {
    Rng rng(20250402);
    double worst = 0.0;
    bool argmax_ok = true;
    for (int k = 0; k < 100; ++k) {
        double u_min = 1.0 + 15.0 * rng.u01();
        double u_max = u_min + 5.0 + 90.0 * rng.u01();
        // within 3 sigma of the support; beyond that the documented uniform
        // fallback owns the density and the argmax property does not apply
        double v_tc = (u_min - 30.0) + (u_max - u_min + 60.0) * rng.u01();
        PriorSpec spec = PriorSpec::class1(v_tc, 10.0, u_min, u_max);
        double total = quadrature(spec, [](double) { return 1.0; });
        worst = std::max(worst, std::abs(total - 1.0));

        double expect = std::clamp(v_tc, u_min, u_max);
        double best_u = u_min, best_f = -1.0;
        for (int i = 0; i <= 4000; ++i) {
            double u = u_min + (u_max - u_min) * i / 4000.0;
            double f = prior_pdf(spec, u);
            if (f > best_f) {
                best_f = f;
                best_u = u;
            }
        }
        argmax_ok = argmax_ok && std::abs(best_u - expect) <= (u_max - u_min) / 2000.0;
    }
    char buf[128];
    std::snprintf(buf, sizeof(buf), "class-1 worst |integral-1| %.3g (<= 1e-6), argmax at clamp: %s",
                  worst, argmax_ok ? "yes" : "no");
    report(5, worst <= 1e-6 && argmax_ok, buf);
}

static void criterion_6_kernel_peaks() {
    double k20 = gaussian_kernel(0.0, 20.0);
    double k10 = gaussian_kernel(0.0, 10.0);
    bool pass = std::abs(k20 - 0.0199471) <= 1e-7 && std::abs(k10 - 0.0398942) <= 1e-7;
    char buf[128];
    std::snprintf(buf, sizeof(buf), "kernel peaks %.9f / %.9f (want 0.0199471 / 0.0398942)", k20,
                  k10);
    report(6, pass, buf);
}

static void criterion_7_weight_arithmetic() {
    bool exact = joint_logweight(-10.0) == 0.01;

    Rng rng(20250403);
    bool norm_ok = true;
    for (int k = 0; k < 50; ++k) {
        std::vector<double> w(200);
        for (auto& x : w) x = rng.u01() * 1e-3 + 1e-9;
        normalize_weights(w);
        double sum = 0.0;
        for (double x : w) sum += x;
        norm_ok = norm_ok && std::abs(sum - 1.0) <= 1e-9;
    }

    GridDims dims{4, 5, 5, 2};  // 200 scenarios
    ParticleEnsemble ens = ParticleEnsemble::uniform(200, 5);
    bool conserve = true;
    for (int it = 0; it < 1000; ++it) {
        std::vector<double> w(200);
        for (auto& x : w) x = rng.u01() + 1e-9;
        normalize_weights(w);
        Rng r2(static_cast<std::uint64_t>(it) * 13 + 1);
        resample(ens, w, r2, dims, 0.1);
        conserve = conserve && ens.total() == 1000;
    }
    report(7, exact && norm_ok && conserve,
           std::string("l=-10 -> w=0.01 ") + (exact ? "exact" : "off") +
               ", normalization 1 +/- 1e-9, N conserved over 1000 resamples");
}

static void criterion_8_simulator_invariants() {
    Rng meta(20250404);
    long long steps = 0;
    bool ok = true;
    std::string what = "ok";
    while (steps < 100000 && ok) {
        RoadConfig road;
        road.length_cells = 150 + static_cast<int>(meta.below(3)) * 50;
        road.lanes = 1 + static_cast<int>(meta.below(3));
        road.speed_limit_cells.clear();
        for (int l = 0; l < road.lanes; ++l)
            road.speed_limit_cells.push_back(4 + static_cast<int>(meta.below(3)));
        road.bottleneck_begin = static_cast<int>(meta.below(road.length_cells / 2));
        road.bottleneck_end =
            road.bottleneck_begin + static_cast<int>(meta.below(road.length_cells / 2));
        ModelParams params{0.2 + 0.6 * meta.u01(), 0.3 * meta.u01(), 0.3 * meta.u01(),
                           0.9 + 0.09 * meta.u01()};
        InflowSchedule inflow;
        inflow.minutes.assign(12, {static_cast<int>(meta.below(25)), 40.0 + 60.0 * meta.u01()});

        SimState state(road, meta.below(1u << 30));
        for (int m = 0; m < 12 && ok; ++m) {
            inject_vehicles(state, inflow.at(m));
            for (int k = 0; k < kStepsPerMinute && ok; ++k) {
                advance_step(state, road, params);
                ++steps;
                for (int l = 0; l < road.lanes && ok; ++l) {
                    const auto& lane = state.lanes[l];
                    for (size_t i = 0; i < lane.size(); ++i) {
                        if (i > 0 && lane[i - 1].cell >= lane[i].cell) {
                            ok = false;
                            what = "collision";
                        }
                        if (lane[i].velocity < 0 ||
                            lane[i].velocity > road.speed_limit_cells[l]) {
                            ok = false;
                            what = "velocity bound";
                        }
                    }
                }
                if (state.vehicles_present() + state.exit_log.size() != state.injected) {
                    ok = false;
                    what = "conservation";
                }
            }
        }
    }
    report(8, ok,
           "simulator invariants over " + std::to_string(steps) + " randomized steps (" + what +
               ")");
}

static void criterion_9_lane_change_rate() {
    RoadConfig road;
    road.length_cells = 1000;
    road.lanes = 2;
    road.speed_limit_cells = {5, 6};
    ModelParams params{0.0, 0.0, 0.0, 0.0};
    SimState state(road, 20250405);
    int changed = 0;
    const int vehicle_minutes = 10000;
    for (int k = 0; k < vehicle_minutes; ++k) {
        state.lanes[0].clear();
        state.lanes[1].clear();
        state.lanes[0].push_back({10, 3, 10, 0});
        state.lanes[0].push_back({11, 0, 11, 1});
        for (int s = 0; s < kStepsPerMinute; ++s) {
            plan_lane_changes(state, road, params);
            if (!state.lanes[1].empty()) {
                ++changed;
                break;
            }
        }
    }
    double freq = static_cast<double>(changed) / vehicle_minutes;
    char buf[128];
    std::snprintf(buf, sizeof(buf),
                  "per-minute lane-change frequency %.4f (want 0.969 +/- 0.01)", freq);
    report(9, std::abs(freq - 0.969) <= 0.01, buf);
}

// Criteria 2 and 10 exercise the synthetic twin and the CLI; implemented in
// acceptance_twin.inc to keep this file readable.
#include "acceptance_twin.inc"

int main(int argc, char** argv) {
    std::string cli_path = argc > 1 ? argv[1] : "";
    std::string config_path = argc > 2 ? argv[2] : "";

    report_info(1, "field-study MAEs (8.58/8.34, 8.43/6.94 km/h) depend on proprietary "
                   "expressway recordings and are not reproducible here; the synthetic-twin "
                   "study of criterion 2 substitutes");
    criterion_2_twin_recovery(config_path);
    criterion_3_grid_cardinality();
    criterion_4_class2_normalization();
    criterion_5_class1_prior();
    criterion_6_kernel_peaks();
    criterion_7_weight_arithmetic();
    criterion_8_simulator_invariants();
    criterion_9_lane_change_rate();
    criterion_10_determinism(cli_path, config_path);

    std::printf("%s: %d criterion failure(s)\n", g_failures == 0 ? "ACCEPTANCE PASS" : "ACCEPTANCE FAIL",
                g_failures);
    return g_failures;
}
