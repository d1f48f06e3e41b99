#include <CLI11.hpp>

#include <cstdio>
#include <exception>

#include "ks1d/io.hpp"
#include "ks1d/kernels.hpp"
#include "ks1d/state.hpp"

// Exit codes: 0 success, 1 configuration error, 2 numerical failure.

namespace {

void add_integrator_flags(CLI::App* cmd, ks::IntegratorConfig& cfg) {
    cmd->add_option("--dt-init", cfg.dt_init, "initial step");
    cmd->add_option("--safety", cfg.safety, "gap-cap safety factor in (0,1)");
    cmd->add_option("--gap-stop", cfg.gap_stop,
                    "absolute stopping gap (<=0: 1e-6 x initial min gap)");
    cmd->add_option("--t-max", cfg.t_max, "time horizon");
    cmd->add_option("--tol", cfg.tol, "local error tolerance");
    cmd->add_option("--stride", cfg.monitor_stride, "accepted steps between frames");
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"deterministic particle system for one-dimensional chemotactic "
                 "aggregation: simulation, blow-up analysis, self-similar rescaling"};
    app.require_subcommand(1);

    ks::io::RunConfig sim;
    std::string initial_text = "symmetric";
    bool no_simd = false;

    auto* simulate = app.add_subcommand("simulate", "integrate the gradient flow");
    simulate->add_option("--n", sim.n, "particle count")->required();
    simulate->add_option("--chi", sim.chi, "sensitivity parameter")->required();
    simulate->add_option("--initial", initial_text,
                         "symmetric | explicit:x1,x2,... | clustered:k=..,eps=..[,margin=..] "
                         "| random:seed=..,spread=..");
    simulate->add_option("--out", sim.out_dir, "output directory");
    simulate->add_option("--membership-eps", sim.membership_eps,
                         "eps for the diagnostics membership column");
    simulate->add_flag("--no-trajectory", "skip trajectory.csv");
    simulate->add_flag("--no-diagnostics", "skip diagnostics.csv");
    simulate->add_flag("--rescaled", sim.out_rescaled, "also write rescaled.csv");
    add_integrator_flags(simulate, sim.integrator);

    auto* rescale = app.add_subcommand("rescale",
                                       "simulate and emit the self-similar frame outputs");
    ks::io::RunConfig res;
    std::string res_initial_text = "symmetric";
    rescale->add_option("--n", res.n, "particle count")->required();
    rescale->add_option("--chi", res.chi, "sensitivity parameter")->required();
    rescale->add_option("--initial", res_initial_text, "initial data spec");
    rescale->add_option("--out", res.out_dir, "output directory");
    add_integrator_flags(rescale, res.integrator);

    ks::io::ThreebodyConfig tb;
    auto* threebody = app.add_subcommand("threebody", "three-particle analysis");
    threebody->add_option("--chi", tb.chi, "sensitivity parameter")->required();
    threebody->add_option("--mode", tb.mode, "portrait | fixed-points | liouville | pair")
        ->required();
    threebody->add_option("--out", tb.out_dir, "output directory");

    ks::io::SweepConfig sw;
    auto* sweep = app.add_subcommand("sweep", "quantization rates over a chi grid");
    sweep->add_option("--n", sw.n, "particle count")->required();
    sweep->add_option("--chi-min", sw.chi_min, "grid lower edge")->required();
    sweep->add_option("--chi-max", sw.chi_max, "grid upper edge")->required();
    sweep->add_option("--cells", sw.cells, "number of grid cells");
    sweep->add_option("--seeds", sw.seeds, "seeds per cell");
    sweep->add_option("--spread", sw.spread, "initial data spread");
    sweep->add_option("--master-seed", sw.master_seed, "master seed");
    sweep->add_option("--workers", sw.workers, "concurrent runs");
    sweep->add_option("--out", sw.out_dir, "output directory");
    add_integrator_flags(sweep, sw.integrator);

    bool quick = false;
    auto* check = app.add_subcommand("check", "run the invariant battery");
    check->add_flag("--quick", quick, "smaller sample sizes");

    app.add_flag("--no-simd", no_simd, "force the scalar kernel set");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 1;
    }

    if (no_simd) ks::kern::set_force_scalar(true);

    try {
        if (simulate->parsed()) {
            sim.initial = ks::io::parse_initial_spec(initial_text);
            if (simulate->count("--no-trajectory")) sim.out_trajectory = false;
            if (simulate->count("--no-diagnostics")) sim.out_diagnostics = false;
            return ks::io::run_simulate(sim);
        }
        if (rescale->parsed()) {
            res.initial = ks::io::parse_initial_spec(res_initial_text);
            return ks::io::run_rescale(res);
        }
        if (threebody->parsed()) return ks::io::run_threebody(tb);
        if (sweep->parsed()) return ks::io::run_sweep(sw);
        if (check->parsed()) return ks::io::run_check(quick) == 0 ? 0 : 2;
    } catch (const ks::ConfigError& e) {
        std::fprintf(stderr, "config error: %s\n", e.what());
        return 1;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "numerical failure: %s\n", e.what());
        return 2;
    }
    return 0;
}
