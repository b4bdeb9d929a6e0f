// Traffic-state-estimation CLI: simulate scenarios, generate synthetic twin
// data, impute missing mean velocities by ensemble data assimilation, and
// score imputations against a reference.
//
// Exit codes: 0 success, 1 usage error, 2 data/validation error, 3 internal.

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "tse/config.hpp"
#include "tse/counters.hpp"
#include "tse/csv.hpp"
#include "tse/errors.hpp"
#include "tse/pgm.hpp"
#include "tse/pipeline.hpp"

namespace fs = std::filesystem;
using namespace tse;

namespace {

struct CommonOpts {
    std::string config;
    std::string out;
    std::optional<std::uint64_t> seed;
    std::string grid_preset = "full";
    bool strict_grid = false;
};

RunConfig load_config(const CommonOpts& opts) {
    RunConfig cfg = load_run_config(opts.config);
    if (opts.seed.has_value()) cfg.pipeline.seed = *opts.seed;
    return cfg;
}

fs::path ensure_out_dir(const std::string& out) {
    fs::path dir(out);
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec || !fs::is_directory(dir))
        throw ValidationError("cannot create output directory " + out);
    return dir;
}

std::vector<ModelParams> scenario_grid(const RunConfig& cfg, const std::string& preset,
                                       GridDims& dims) {
    GridSpec spec = preset == "ci" ? ci_preset(cfg.grid) : cfg.grid;
    return build_scenario_grid(spec, &dims);
}

ModelParams parse_theta(const std::string& text) {
    std::vector<double> v;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) v.push_back(std::stod(item));
    if (v.size() != 4)
        throw ValidationError("--theta needs four comma-separated values: p_bn,p,q,r");
    ModelParams theta{v[0], v[1], v[2], v[3]};
    theta.validate();
    return theta;
}

void print_grid_summary(const PatchGrid& grid, const char* name) {
    std::printf("%s: %d segments x %d minutes, %d missing patch(es)\n", name, grid.segments,
                grid.minutes, grid.missing_count());
}

int cmd_simulate(const CommonOpts& opts, const std::string& theta_text, int minutes) {
    RunConfig cfg = load_config(opts);
    ModelParams theta = theta_text.empty() ? cfg.twin.theta : parse_theta(theta_text);
    if (opts.strict_grid) {
        GridSpec spec = opts.grid_preset == "ci" ? ci_preset(cfg.grid) : cfg.grid;
        if (!on_lattice(spec, theta))
            throw ValidationError("--strict-grid: theta is not on the configured lattice");
    }
    if (minutes <= 0) minutes = cfg.twin.minutes;
    InflowSchedule demand = demand_schedule(cfg.twin);
    demand.minutes.resize(minutes, demand.minutes.empty() ? InflowRecord{0, 0.0}
                                                          : demand.minutes.back());

    fs::path dir = ensure_out_dir(opts.out);
    SampleLog log = run_scenario(cfg.road, theta, demand, minutes, cfg.pipeline.seed);
    PatchGrid grid = aggregate(log, cfg.road, minutes);
    csv::write_patches((dir / "patches.csv").string(), grid);
    write_pgm((dir / "patches.pgm").string(), grid, mean_limit_kmh(cfg.road));
    write_mask_pgm((dir / "patches_mask.pgm").string(), grid);

    std::printf("simulated theta=(%.3g, %.3g, %.3g, %.3g) for %d minutes, %zu samples\n",
                theta.p_bn, theta.p, theta.q, theta.r, minutes, log.samples.size());
    print_grid_summary(grid, "patches");
    std::printf("wrote %s\n", (dir / "patches.csv").string().c_str());
    return 0;
}

int cmd_twin(const CommonOpts& opts) {
    RunConfig cfg = load_config(opts);
    InflowSchedule demand = demand_schedule(cfg.twin);
    TwinData twin =
        synth_twin(cfg.road, cfg.twin.theta, demand, cfg.twin.mask, cfg.pipeline.seed);

    fs::path dir = ensure_out_dir(opts.out);
    csv::write_patches((dir / "truth.csv").string(), twin.truth);
    csv::write_patches((dir / "obs.csv").string(), twin.observed);
    csv::write_counters((dir / "counters.csv").string(), twin.counters);
    double vmax = mean_limit_kmh(cfg.road);
    write_pgm((dir / "truth.pgm").string(), twin.truth, vmax);
    write_pgm((dir / "obs.pgm").string(), twin.observed, vmax);
    write_mask_pgm((dir / "obs_mask.pgm").string(), twin.observed);

    print_grid_summary(twin.truth, "truth");
    print_grid_summary(twin.observed, "obs");
    if (twin.saturation_events > 0)
        std::printf("saturation warning: inflow queue exceeded 10x the per-minute count in %llu "
                    "minute(s)\n",
                    static_cast<unsigned long long>(twin.saturation_events));
    std::printf("wrote truth/obs/counters under %s\n", dir.string().c_str());
    return 0;
}

int cmd_impute(const CommonOpts& opts, const std::string& obs_path,
               const std::string& counters_path, const std::vector<double>& holdout_km) {
    RunConfig cfg = load_config(opts);
    PatchGrid obs = csv::read_patches(obs_path);
    CounterTable counters = csv::read_counters(counters_path);
    for (double km : holdout_km) {
        int c = counters.counter_at(km);
        if (c < 0) throw ValidationError("--holdout-km: no counter at that position");
        if (counters.counter_at(0.0) == c)
            throw ValidationError("--holdout-km: the 0 km counter drives the inflow");
        counters.positions_km.erase(counters.positions_km.begin() + c);
        counters.readings.erase(counters.readings.begin() + c);
    }

    GridDims dims;
    std::vector<ModelParams> grid = scenario_grid(cfg, opts.grid_preset, dims);
    PipelineResult res = run_pipeline(obs, counters, cfg.road, grid, dims, cfg.pipeline);

    fs::path dir = ensure_out_dir(opts.out);
    csv::write_patches((dir / "imputed.csv").string(), res.imputed);
    csv::write_posterior((dir / "posterior.csv").string(), res.posterior_rows);
    double vmax = mean_limit_kmh(cfg.road);
    write_pgm((dir / "imputed.pgm").string(), res.imputed, vmax);
    write_mask_pgm((dir / "imputed_mask.pgm").string(), obs);  // original missing set

    std::printf("scenarios: %zu (%s grid), particles: %zu\n", grid.size(),
                opts.grid_preset.c_str(), grid.size());
    print_grid_summary(obs, "obs");
    const MapTraceEntry& last = res.map_trace.back();
    std::printf("final MAP (minute %d): p_bn=%.6g p=%.6g q=%.6g r=%.6g\n", last.window_end_minute,
                last.params.p_bn, last.params.p, last.params.q, last.params.r);
    if (res.saturation_events > 0)
        std::printf("saturation warning: %llu scenario-minute(s) with overflowing inflow queue\n",
                    static_cast<unsigned long long>(res.saturation_events));
    if (res.degraded_class1 > 0)
        std::printf("class-1 patches degraded to class 2 (missing counter reading): %d\n",
                    res.degraded_class1);
    if (res.prior_uniform_fallbacks > 0)
        std::printf("class-1 priors fell back to uniform (counter far outside bounds): %d\n",
                    res.prior_uniform_fallbacks);
    std::printf("wrote imputed/posterior under %s\n", dir.string().c_str());
    return 0;
}

int cmd_eval(const std::string& imputed_path, const std::string& obs_path,
             const std::string& reference_path, std::optional<double> counter_km,
             const std::string& out) {
    PatchGrid imputed = csv::read_patches(imputed_path);
    PatchGrid obs = csv::read_patches(obs_path);

    EvalReport rep;
    if (counter_km.has_value()) {
        CounterTable counters = csv::read_counters(reference_path);
        rep = evaluate_mae_counter(imputed, obs, counters, *counter_km);
    } else {
        PatchGrid reference = csv::read_patches(reference_path);
        rep = evaluate_mae(imputed, obs, reference);
    }

    fs::path dir = ensure_out_dir(out);
    csv::write_eval((dir / "eval.csv").string(), rep);

    std::printf("%-52s %8s %8s\n", "", "MAE", "patches");
    std::printf("%-52s %7.2f km/h %6lld\n", "imputed mean velocities (missing value segments)",
                rep.mae_missing, static_cast<long long>(rep.n_missing));
    std::printf("%-52s %7.2f km/h %6lld\n", "observed mean velocities (non-missing segments)",
                rep.mae_observed, static_cast<long long>(rep.n_observed));
    if (rep.skipped > 0)
        std::printf("(%lld patch(es) skipped: no reference coverage)\n",
                    static_cast<long long>(rep.skipped));
    std::printf("wrote %s\n", (dir / "eval.csv").string().c_str());
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"traffic state estimation: missing-velocity imputation by data assimilation"};
    app.require_subcommand(1);

    CommonOpts opts;
    std::string theta_text, obs_path, counters_path, imputed_path, reference_path;
    std::vector<double> holdout_km;
    std::optional<double> counter_km;
    int minutes = 0;

    auto add_common = [&](CLI::App* cmd, bool needs_config = true) {
        if (needs_config)
            cmd->add_option("--config", opts.config, "run configuration (INI)")
                ->required()
                ->check(CLI::ExistingFile);
        cmd->add_option("--out", opts.out, "output directory")->required();
        cmd->add_option("--seed", opts.seed, "override the config seed");
    };

    CLI::App* simulate = app.add_subcommand("simulate", "run one scenario and export its field");
    add_common(simulate);
    simulate->add_option("--theta", theta_text, "p_bn,p,q,r (defaults to [twin] theta)");
    simulate->add_option("--minutes", minutes, "simulated minutes (defaults to [twin] minutes)");
    simulate->add_option("--grid", opts.grid_preset, "lattice preset for --strict-grid")
        ->check(CLI::IsMember({"full", "ci"}));
    simulate->add_flag("--strict-grid", opts.strict_grid,
                       "require theta to sit on the configured lattice");

    CLI::App* twin = app.add_subcommand("twin", "generate synthetic truth/obs/counters");
    add_common(twin);

    CLI::App* impute = app.add_subcommand("impute", "assimilate observations and fill gaps");
    add_common(impute);
    impute->add_option("--obs", obs_path, "observed patches CSV")
        ->required()
        ->check(CLI::ExistingFile);
    impute->add_option("--counters", counters_path, "counters CSV")
        ->required()
        ->check(CLI::ExistingFile);
    impute->add_option("--grid", opts.grid_preset, "scenario lattice preset")
        ->check(CLI::IsMember({"full", "ci"}));
    impute->add_option("--holdout-km", holdout_km,
                       "exclude counters at these positions from classification");

    CLI::App* eval = app.add_subcommand("eval", "score an imputation against a reference");
    eval->add_option("--imputed", imputed_path, "imputed patches CSV")
        ->required()
        ->check(CLI::ExistingFile);
    eval->add_option("--obs", obs_path, "original observed patches CSV")
        ->required()
        ->check(CLI::ExistingFile);
    eval->add_option("--reference", reference_path,
                     "truth patches CSV, or counters CSV with --counter-km")
        ->required()
        ->check(CLI::ExistingFile);
    eval->add_option("--counter-km", counter_km, "evaluate against the counter at this position");
    eval->add_option("--out", opts.out, "output directory")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 1;
    }

    try {
        if (simulate->parsed()) return cmd_simulate(opts, theta_text, minutes);
        if (twin->parsed()) return cmd_twin(opts);
        if (impute->parsed()) return cmd_impute(opts, obs_path, counters_path, holdout_km);
        if (eval->parsed())
            return cmd_eval(imputed_path, obs_path, reference_path, counter_km, opts.out);
        return 1;
    } catch (const ValidationError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "internal error: " << e.what() << "\n";
        return 3;
    }
}
