#include "chaoslab/config.hpp"

#include <fstream>

namespace chaoslab {

json load_json_file(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open config file: " + path.string());
    try {
        return json::parse(in);
    } catch (const json::parse_error& e) {
        throw ConfigError("config " + path.string() + ": " + e.what());
    }
}

namespace {

const json& require(const json& j, const std::string& key, const std::string& path) {
    if (!j.contains(key)) throw ConfigError(path + "." + key + ": required key missing");
    return j.at(key);
}

double get_num(const json& j, const std::string& key, const std::string& path) {
    const json& v = require(j, key, path);
    if (!v.is_number()) throw ConfigError(path + "." + key + ": expected a number");
    return v.get<double>();
}

double get_num_or(const json& j, const std::string& key, const std::string& path, double dflt) {
    if (!j.contains(key)) return dflt;
    return get_num(j, key, path);
}

std::int64_t get_int_or(const json& j, const std::string& key, const std::string& path,
                        std::int64_t dflt) {
    if (!j.contains(key)) return dflt;
    const json& v = j.at(key);
    if (!v.is_number_integer()) throw ConfigError(path + "." + key + ": expected an integer");
    return v.get<std::int64_t>();
}

void check_alpha_beta(double alpha, double beta, const std::string& path) {
    if (!(alpha > 0.0 && alpha < 0.5))
        throw ConfigError(path + ".alpha: alpha must lie in (0, 1/2)");
    if (!(beta > 0.0 && beta <= alpha))
        throw ConfigError(path + ".beta: beta must satisfy 0 < beta <= alpha");
}

}  // namespace

KernelSpec parse_kernel_base(const json& j, const std::string& path) {
    const json& kindj = require(j, "kind", path);
    if (!kindj.is_string()) throw ConfigError(path + ".kind: expected \"bcm\" or \"uniform\"");
    const std::string kind = kindj.get<std::string>();
    const double radius = get_num(j, "R", path);
    if (!(radius > 0.0)) throw ConfigError(path + ".R: radius must be positive");
    if (kind == "uniform") return KernelSpec::uniform(radius);
    if (kind != "bcm") throw ConfigError(path + ".kind: expected \"bcm\" or \"uniform\"");

    PolyProfile profile = PolyProfile::one();
    if (j.contains("h")) {
        const json& hj = j.at("h");
        if (hj.is_string()) {
            const std::string name = hj.get<std::string>();
            if (name == "one")
                profile = PolyProfile::one();
            else if (name == "linear")
                profile = PolyProfile::linear();
            else if (name == "zero")
                profile = PolyProfile::zero();
            else
                throw ConfigError(path + ".h: expected \"one\", \"linear\", \"zero\" or an "
                                  "array of polynomial coefficients");
        } else if (hj.is_array()) {
            profile.coeffs.clear();
            for (const auto& c : hj) {
                if (!c.is_number())
                    throw ConfigError(path + ".h: polynomial coefficients must be numbers");
                profile.coeffs.push_back(c.get<double>());
            }
        } else {
            throw ConfigError(path + ".h: expected a string or an array");
        }
    }
    return KernelSpec::bcm(radius, std::move(profile));
}

double parse_kernel_eps(const json& j, const std::string& path) {
    const double eps = get_num(j, "eps", path);
    if (!(eps > 0.0)) throw ConfigError(path + ".eps: must be positive");
    return eps;
}

json kernel_to_json(const KernelSpec& spec, double eps) {
    json j;
    j["kind"] = spec.kind == KernelKind::Uniform ? "uniform" : "bcm";
    j["R"] = spec.radius;
    if (spec.kind == KernelKind::Bcm) j["h"] = spec.h.coeffs;
    if (eps > 0.0) j["eps"] = eps;
    return j;
}

InitialDensity parse_rho0(const json& j, const std::string& path) {
    const json& kindj = require(j, "kind", path);
    const std::string kind = kindj.is_string() ? kindj.get<std::string>() : "";
    if (kind == "gaussian") {
        const double mean = get_num_or(j, "mean", path, 0.0);
        const double sd = get_num(j, "sd", path);
        if (!(sd > 0.0)) throw ConfigError(path + ".sd: must be positive");
        return InitialDensity::gaussian(mean, sd);
    }
    if (kind == "uniform_box") {
        const double a = get_num(j, "a", path);
        const double b = get_num(j, "b", path);
        if (!(b > a)) throw ConfigError(path + ": uniform_box needs b > a");
        return InitialDensity::uniform_box(a, b);
    }
    if (kind == "mixture") {
        const json& comps = require(j, "components", path);
        if (!comps.is_array() || comps.empty())
            throw ConfigError(path + ".components: expected a non-empty array");
        std::vector<InitialDensity::Component> parts;
        int idx = 0;
        for (const auto& cj : comps) {
            const std::string cpath = path + ".components[" + std::to_string(idx++) + "]";
            const double w = get_num(cj, "weight", cpath);
            const std::string ckind = require(cj, "kind", cpath).get<std::string>();
            if (ckind == "gaussian") {
                parts.push_back({InitialDensity::Component::Kind::Gaussian, w,
                                 get_num_or(cj, "mean", cpath, 0.0), get_num(cj, "sd", cpath)});
            } else if (ckind == "uniform_box") {
                parts.push_back({InitialDensity::Component::Kind::UniformBox, w,
                                 get_num(cj, "a", cpath), get_num(cj, "b", cpath)});
            } else {
                throw ConfigError(cpath + ".kind: expected \"gaussian\" or \"uniform_box\"");
            }
        }
        return InitialDensity::mixture(std::move(parts));
    }
    throw ConfigError(path + ".kind: expected \"gaussian\", \"uniform_box\" or \"mixture\"");
}

json rho0_to_json(const InitialDensity& rho0) {
    const auto& comps = rho0.components();
    auto comp_json = [](const InitialDensity::Component& c) {
        json cj;
        if (c.kind == InitialDensity::Component::Kind::Gaussian) {
            cj["kind"] = "gaussian";
            cj["mean"] = c.a;
            cj["sd"] = c.b;
        } else {
            cj["kind"] = "uniform_box";
            cj["a"] = c.a;
            cj["b"] = c.b;
        }
        return cj;
    };
    if (comps.size() == 1) {
        json j = comp_json(comps[0]);
        return j;
    }
    json j;
    j["kind"] = "mixture";
    j["components"] = json::array();
    for (const auto& c : comps) {
        json cj = comp_json(c);
        cj["weight"] = c.weight;
        j["components"].push_back(cj);
    }
    return j;
}

Grid1D parse_grid(const json& j, const std::string& path) {
    const double half_width = get_num_or(j, "L", path, 8.0);
    if (!(half_width > 0.0)) throw ConfigError(path + ".L: must be positive");
    const auto m = get_int_or(j, "M", path, 512);
    if (m < 16) throw ConfigError(path + ".M: need at least 16 cells");
    return Grid1D(-half_width, half_width, static_cast<int>(m));
}

json grid_to_json(const Grid1D& grid) {
    json j;
    j["L"] = grid.x_max;
    j["M"] = grid.m;
    return j;
}

PdeRunConfig parse_pde_config(const json& j) {
    PdeRunConfig cfg;
    cfg.kernel = parse_kernel_base(require(j, "kernel", "config"), "config.kernel");
    cfg.eps = parse_kernel_eps(j.at("kernel"), "config.kernel");
    cfg.rho0 = parse_rho0(require(j, "rho0", "config"), "config.rho0");
    cfg.grid = j.contains("grid") ? parse_grid(j.at("grid"), "config.grid") : Grid1D();
    cfg.sigma = get_num_or(j, "sigma", "config", 0.5);
    if (!(cfg.sigma > 0.0)) throw ConfigError("config.sigma: must be positive");
    cfg.t_end = get_num_or(j, "T", "config", 1.0);
    if (cfg.t_end < 0.0) throw ConfigError("config.T: must be nonnegative");
    cfg.dt = get_num_or(j, "dt", "config", 1e-3);
    if (!(cfg.dt > 0.0)) throw ConfigError("config.dt: must be positive");
    cfg.save_every = static_cast<int>(get_int_or(j, "save_every", "config", 1));
    if (cfg.save_every < 1) throw ConfigError("config.save_every: must be >= 1");
    cfg.master_seed = static_cast<std::uint64_t>(get_int_or(j, "seed", "config", 0));
    return cfg;
}

json to_json(const PdeRunConfig& cfg) {
    json j;
    j["kernel"] = kernel_to_json(cfg.kernel, cfg.eps);
    j["rho0"] = rho0_to_json(cfg.rho0);
    j["grid"] = grid_to_json(cfg.grid);
    j["sigma"] = cfg.sigma;
    j["T"] = cfg.t_end;
    j["dt"] = cfg.dt;
    j["save_every"] = cfg.save_every;
    j["seed"] = cfg.master_seed;
    return j;
}

SimulateConfig parse_simulate_config(const json& j) {
    SimulateConfig cfg;
    const auto n = get_int_or(j, "N", "config", 64);
    if (n < 1) throw ConfigError("config.N: must be >= 1");
    cfg.n_particles = static_cast<int>(n);
    cfg.kernel = parse_kernel_base(require(j, "kernel", "config"), "config.kernel");
    cfg.eps = parse_kernel_eps(j.at("kernel"), "config.kernel");
    cfg.rho0 = parse_rho0(require(j, "rho0", "config"), "config.rho0");
    cfg.sigma = get_num_or(j, "sigma", "config", 0.5);
    if (!(cfg.sigma > 0.0)) throw ConfigError("config.sigma: must be positive");
    cfg.t_end = get_num_or(j, "T", "config", 1.0);
    cfg.dt = get_num_or(j, "dt", "config", 1e-3);
    if (!(cfg.dt > 0.0)) throw ConfigError("config.dt: must be positive");
    cfg.save_every = static_cast<int>(get_int_or(j, "save_every", "config", 1));
    if (cfg.save_every < 1) throw ConfigError("config.save_every: must be >= 1");
    cfg.unregularized = j.value("unregularized", false);
    cfg.master_seed = static_cast<std::uint64_t>(get_int_or(j, "seed", "config", 0));
    return cfg;
}

json to_json(const SimulateConfig& cfg) {
    json j;
    j["N"] = cfg.n_particles;
    j["kernel"] = kernel_to_json(cfg.kernel, cfg.eps);
    j["rho0"] = rho0_to_json(cfg.rho0);
    j["sigma"] = cfg.sigma;
    j["T"] = cfg.t_end;
    j["dt"] = cfg.dt;
    j["save_every"] = cfg.save_every;
    j["unregularized"] = cfg.unregularized;
    j["seed"] = cfg.master_seed;
    return j;
}

CoupleConfig parse_couple_config(const json& j) {
    CoupleConfig cfg;
    const auto n = get_int_or(j, "N", "config", 64);
    if (n < 1) throw ConfigError("config.N: must be >= 1");
    cfg.params.n_particles = static_cast<int>(n);
    cfg.params.alpha = get_num_or(j, "alpha", "config", 0.25);
    cfg.params.beta = get_num_or(j, "beta", "config", 0.25);
    check_alpha_beta(cfg.params.alpha, cfg.params.beta, "config");
    cfg.params.eps_scale = get_num_or(j, "eps_scale", "config", 1.0);
    if (!(cfg.params.eps_scale > 0.0)) throw ConfigError("config.eps_scale: must be positive");
    cfg.params.sigma = get_num_or(j, "sigma", "config", 0.5);
    if (!(cfg.params.sigma > 0.0)) throw ConfigError("config.sigma: must be positive");
    cfg.params.t_end = get_num_or(j, "T", "config", 1.0);
    cfg.params.dt = get_num_or(j, "dt", "config", 1e-3);
    if (!(cfg.params.dt > 0.0)) throw ConfigError("config.dt: must be positive");
    cfg.params.save_every = static_cast<int>(get_int_or(j, "save_every", "config", 1));
    if (cfg.params.save_every < 1) throw ConfigError("config.save_every: must be >= 1");
    if (j.contains("lambda") && !j.at("lambda").is_null())
        cfg.params.lambda = get_num(j, "lambda", "config");
    cfg.kernel = parse_kernel_base(require(j, "kernel", "config"), "config.kernel");
    cfg.rho0 = parse_rho0(require(j, "rho0", "config"), "config.rho0");
    cfg.grid = j.contains("grid") ? parse_grid(j.at("grid"), "config.grid") : Grid1D();
    cfg.reps = static_cast<int>(get_int_or(j, "reps", "config", 1));
    if (cfg.reps < 1) throw ConfigError("config.reps: must be >= 1");
    cfg.master_seed = static_cast<std::uint64_t>(get_int_or(j, "seed", "config", 0));
    cfg.threads = static_cast<int>(get_int_or(j, "threads", "config", 1));
    return cfg;
}

json to_json(const CoupleConfig& cfg) {
    json j;
    j["N"] = cfg.params.n_particles;
    j["alpha"] = cfg.params.alpha;
    j["beta"] = cfg.params.beta;
    j["eps_scale"] = cfg.params.eps_scale;
    j["sigma"] = cfg.params.sigma;
    j["T"] = cfg.params.t_end;
    j["dt"] = cfg.params.dt;
    j["save_every"] = cfg.params.save_every;
    if (std::isfinite(cfg.params.lambda))
        j["lambda"] = cfg.params.lambda;
    else
        j["lambda"] = nullptr;
    j["kernel"] = kernel_to_json(cfg.kernel, 0.0);
    j["rho0"] = rho0_to_json(cfg.rho0);
    j["grid"] = grid_to_json(cfg.grid);
    j["reps"] = cfg.reps;
    j["seed"] = cfg.master_seed;
    return j;
}

LlnConfig parse_lln_config(const json& j) {
    LlnConfig cfg;
    cfg.h = parse_kernel_base(require(j, "h", "config"), "config.h");
    cfg.rho0 = parse_rho0(require(j, "rho0", "config"), "config.rho0");
    cfg.alpha = get_num_or(j, "alpha", "config", 0.25);
    cfg.delta = get_num_or(j, "delta", "config", 0.1);
    if (!(cfg.alpha > 0.0 && cfg.delta > 0.0 && cfg.alpha + cfg.delta < 0.5))
        throw ConfigError("config: alpha and delta must be positive with alpha + delta < 1/2");
    if (j.contains("N_list")) {
        cfg.n_list.clear();
        for (const auto& v : j.at("N_list")) cfg.n_list.push_back(v.get<int>());
    }
    if (cfg.n_list.empty()) throw ConfigError("config.N_list: must not be empty");
    for (std::size_t i = 1; i < cfg.n_list.size(); ++i)
        if (cfg.n_list[i] <= cfg.n_list[i - 1])
            throw ConfigError("config.N_list: must be strictly increasing");
    cfg.reps = static_cast<int>(get_int_or(j, "reps", "config", 2000));
    if (cfg.reps < 1) throw ConfigError("config.reps: must be >= 1");
    cfg.master_seed = static_cast<std::uint64_t>(get_int_or(j, "seed", "config", 0));
    cfg.threads = static_cast<int>(get_int_or(j, "threads", "config", 1));
    return cfg;
}

json to_json(const LlnConfig& cfg) {
    json j;
    j["h"] = kernel_to_json(cfg.h, 0.0);
    j["rho0"] = rho0_to_json(cfg.rho0);
    j["alpha"] = cfg.alpha;
    j["delta"] = cfg.delta;
    j["N_list"] = cfg.n_list;
    j["reps"] = cfg.reps;
    j["seed"] = cfg.master_seed;
    return j;
}

SweepConfig parse_sweep_config(const json& j) {
    SweepConfig cfg;
    if (j.contains("N_list")) {
        cfg.n_list.clear();
        for (const auto& v : j.at("N_list")) cfg.n_list.push_back(v.get<int>());
    }
    cfg.alpha = get_num_or(j, "alpha", "config", 0.25);
    cfg.beta = get_num_or(j, "beta", "config", 0.25);
    check_alpha_beta(cfg.alpha, cfg.beta, "config");
    cfg.eps_scale = get_num_or(j, "eps_scale", "config", 1.0);
    if (!(cfg.eps_scale > 0.0)) throw ConfigError("config.eps_scale: must be positive");
    cfg.sigma = get_num_or(j, "sigma", "config", 0.5);
    if (!(cfg.sigma > 0.0)) throw ConfigError("config.sigma: must be positive");
    cfg.t_end = get_num_or(j, "T", "config", 1.0);
    cfg.dt = get_num_or(j, "dt", "config", 1e-3);
    if (!(cfg.dt > 0.0)) throw ConfigError("config.dt: must be positive");
    cfg.reps = static_cast<int>(get_int_or(j, "reps", "config", 200));
    cfg.kernel = parse_kernel_base(require(j, "kernel", "config"), "config.kernel");
    cfg.rho0 = parse_rho0(require(j, "rho0", "config"), "config.rho0");
    cfg.grid = j.contains("grid") ? parse_grid(j.at("grid"), "config.grid") : Grid1D();
    cfg.master_seed = static_cast<std::uint64_t>(get_int_or(j, "seed", "config", 0));
    if (j.contains("lambda") && !j.at("lambda").is_null())
        cfg.lambda = get_num(j, "lambda", "config");
    cfg.threads = static_cast<int>(get_int_or(j, "threads", "config", 1));
    validate(cfg);
    return cfg;
}

json to_json(const SweepConfig& cfg) {
    json j;
    j["N_list"] = cfg.n_list;
    j["alpha"] = cfg.alpha;
    j["beta"] = cfg.beta;
    j["eps_scale"] = cfg.eps_scale;
    j["sigma"] = cfg.sigma;
    j["T"] = cfg.t_end;
    j["dt"] = cfg.dt;
    j["reps"] = cfg.reps;
    j["kernel"] = kernel_to_json(cfg.kernel, 0.0);
    j["rho0"] = rho0_to_json(cfg.rho0);
    j["grid"] = grid_to_json(cfg.grid);
    j["seed"] = cfg.master_seed;
    if (std::isfinite(cfg.lambda))
        j["lambda"] = cfg.lambda;
    else
        j["lambda"] = nullptr;
    return j;
}

VerifyKernelConfig parse_verify_config(const json& j) {
    VerifyKernelConfig cfg;
    cfg.kernel = parse_kernel_base(require(j, "kernel", "config"), "config.kernel");
    if (j.at("kernel").contains("eps")) {
        cfg.eps_list = {parse_kernel_eps(j.at("kernel"), "config.kernel")};
    }
    if (j.contains("eps_list")) {
        cfg.eps_list.clear();
        for (const auto& v : j.at("eps_list")) {
            const double e = v.get<double>();
            if (!(e > 0.0)) throw ConfigError("config.eps_list: entries must be positive");
            cfg.eps_list.push_back(e);
        }
        if (cfg.eps_list.empty()) throw ConfigError("config.eps_list: must not be empty");
    }
    cfg.samples = get_int_or(j, "samples", "config", 100000);
    if (cfg.samples < 1) throw ConfigError("config.samples: must be >= 1");
    cfg.master_seed = static_cast<std::uint64_t>(get_int_or(j, "seed", "config", 0));
    return cfg;
}

json to_json(const VerifyKernelConfig& cfg) {
    json j;
    j["kernel"] = kernel_to_json(cfg.kernel, 0.0);
    j["eps_list"] = cfg.eps_list;
    j["samples"] = cfg.samples;
    j["seed"] = cfg.master_seed;
    return j;
}

}  // namespace chaoslab
