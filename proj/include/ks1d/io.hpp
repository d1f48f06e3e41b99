#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "ks1d/blowup.hpp"
#include "ks1d/integrate.hpp"
#include "ks1d/state.hpp"

// Run orchestration and serialization. CSV numbers are written as shortest
// round-trip decimals; identical configs and seeds give bit-identical files
// on the same build.

namespace ks::io {

std::string format_double(double v);
double parse_double(const std::string& s);

void write_csv(const std::string& path, const std::vector<std::string>& header,
               const std::vector<std::vector<double>>& rows);
std::vector<std::vector<double>> read_csv(const std::string& path,
                                          std::vector<std::string>* header = nullptr);

struct InitialSpec {
    enum class Kind { explicit_list, clustered, symmetric, random };
    Kind kind = Kind::symmetric;
    std::vector<double> positions;  // explicit_list
    int k = 0;                      // clustered
    double eps = 1e-3;
    double margin = 4.0;
    std::uint64_t seed = 1;  // random
    double spread = 1.0;
};

InitialSpec parse_initial_spec(const std::string& text);

struct RunConfig {
    int n = 3;
    double chi = 1.5;
    InitialSpec initial;
    IntegratorConfig integrator;
    DetectionConfig detection;
    bool out_trajectory = true;
    bool out_diagnostics = true;
    bool out_rescaled = false;
    bool out_report = true;
    std::string out_dir = ".";
    double membership_eps = 1e-3;  // eps for the diagnostics membership flag
};

ParticleState build_initial(const RunConfig& cfg);

// out_dir after the KS1D_OUT_DIR override
std::string effective_out_dir(const std::string& configured);

int run_simulate(const RunConfig& cfg);
int run_rescale(RunConfig cfg);  // simulate with the rescaled outputs forced on

struct ThreebodyConfig {
    double chi = 1.5;
    std::string mode = "fixed-points";  // portrait | fixed-points | liouville | pair
    std::string out_dir = ".";
};
int run_threebody(const ThreebodyConfig& cfg);

struct SweepConfig {
    int n = 3;
    double chi_min = 1.4;
    double chi_max = 1.9;
    int cells = 5;
    int seeds = 10;
    double spread = 1.0;
    std::uint64_t master_seed = 1;
    int workers = 1;
    std::string out_dir = ".";
    IntegratorConfig integrator;
};
int run_sweep(const SweepConfig& cfg);

// Quick invariant battery; prints one PASS/FAIL line per check and returns
// the number of failures.
int run_check(bool quick);

}  // namespace ks::io
