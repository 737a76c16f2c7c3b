#pragma once

#include <filesystem>
#include <string>

#include <nlohmann/json.hpp>

#include "chaoslab/experiments.hpp"

namespace chaoslab {

using json = nlohmann::json;

// Load and parse a JSON config file. Missing file is an IoError, malformed
// JSON a ConfigError carrying the parser position.
json load_json_file(const std::filesystem::path& path);

// Typed sections. Each parse_* validates and fills documented defaults; each
// *_to_json emits the normalized echo, so parse(emit(cfg)) == cfg.
KernelSpec parse_kernel_base(const json& j, const std::string& path);
double parse_kernel_eps(const json& j, const std::string& path);
InitialDensity parse_rho0(const json& j, const std::string& path);
Grid1D parse_grid(const json& j, const std::string& path);

json kernel_to_json(const KernelSpec& spec, double eps);
json rho0_to_json(const InitialDensity& rho0);
json grid_to_json(const Grid1D& grid);

struct PdeRunConfig {
    KernelSpec kernel;
    double eps = 0.05;
    InitialDensity rho0;
    Grid1D grid{-8.0, 8.0, 512};
    double sigma = 0.5;
    double t_end = 1.0;
    double dt = 1e-3;
    int save_every = 1;
    std::uint64_t master_seed = 0;
};
PdeRunConfig parse_pde_config(const json& j);
json to_json(const PdeRunConfig& cfg);

struct SimulateConfig {
    int n_particles = 64;
    KernelSpec kernel;
    double eps = 0.05;
    InitialDensity rho0;
    double sigma = 0.5;
    double t_end = 1.0;
    double dt = 1e-3;
    int save_every = 1;
    bool unregularized = false;  // diagnostic mode: raw discontinuous kernel
    std::uint64_t master_seed = 0;
};
SimulateConfig parse_simulate_config(const json& j);
json to_json(const SimulateConfig& cfg);

struct CoupleConfig {
    CoupledParams params;
    KernelSpec kernel;
    InitialDensity rho0;
    Grid1D grid{-8.0, 8.0, 512};
    int reps = 1;
    std::uint64_t master_seed = 0;
    int threads = 1;
};
CoupleConfig parse_couple_config(const json& j);
json to_json(const CoupleConfig& cfg);

struct LlnConfig {
    KernelSpec h;  // bounded test function, reusing the kernel families
    InitialDensity rho0;
    double alpha = 0.25;
    double delta = 0.1;
    std::vector<int> n_list = {64, 128, 256, 512, 1024, 2048, 4096};
    int reps = 2000;
    std::uint64_t master_seed = 0;
    int threads = 1;
};
LlnConfig parse_lln_config(const json& j);
json to_json(const LlnConfig& cfg);

SweepConfig parse_sweep_config(const json& j);
json to_json(const SweepConfig& cfg);

struct VerifyKernelConfig {
    KernelSpec kernel;
    std::vector<double> eps_list = {0.1, 0.05};
    long long samples = 100000;
    std::uint64_t master_seed = 0;
};
VerifyKernelConfig parse_verify_config(const json& j);
json to_json(const VerifyKernelConfig& cfg);

}  // namespace chaoslab
