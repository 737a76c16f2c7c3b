#include <CLI11.hpp>

#include <cstdlib>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <thread>

#include "chaoslab/analysis.hpp"
#include "chaoslab/config.hpp"
#include "chaoslab/coupling.hpp"
#include "chaoslab/experiments.hpp"
#include "chaoslab/io.hpp"
#include "chaoslab/version.hpp"

namespace cl = chaoslab;
using cl::json;

namespace {

struct GlobalOpts {
    std::string config_path;
    std::string out_dir = "out";
    bool force = false;
    int threads = 0;  // 0 = resolve from env / hardware
    std::optional<std::uint64_t> seed;
};

int resolve_threads(int requested) {
    if (requested > 0) return requested;
    if (const char* env = std::getenv("CHAOSLAB_THREADS")) {
        const int t = std::atoi(env);
        if (t > 0) return t;
    }
    const unsigned hw = std::thread::hardware_concurrency();
    return hw > 0 ? static_cast<int>(hw) : 1;
}

json load_config(const GlobalOpts& g) {
    if (g.config_path.empty()) throw cl::ConfigError("missing --config FILE");
    return cl::load_json_file(g.config_path);
}

void check_outputs_writable(const std::filesystem::path& dir,
                            const std::vector<std::string>& files, bool force) {
    cl::ensure_output_dir(dir);
    if (force) return;
    for (const auto& f : files)
        if (std::filesystem::exists(dir / f))
            throw cl::IoError("refusing to overwrite " + (dir / f).string() + " (pass --force)");
}

json rate_fit_json(const std::optional<cl::RateFit>& fit, int censored) {
    if (!fit) {
        json j;
        j["censored_points"] = censored;
        j["fitted"] = false;
        return j;
    }
    json j;
    j["fitted"] = true;
    j["slope"] = fit->slope;
    j["intercept"] = fit->intercept;
    j["r_squared"] = fit->r_squared;
    j["used_points"] = fit->used_points;
    j["censored_points"] = fit->censored_points;
    return j;
}

int cmd_verify_kernel(const GlobalOpts& g) {
    json cfg_json = load_config(g);
    cl::VerifyKernelConfig cfg = cl::parse_verify_config(cfg_json);
    if (g.seed) cfg.master_seed = *g.seed;

    json reports = json::array();
    bool clean = true;
    for (double eps : cfg.eps_list) {
        const cl::RegularizedKernel rk(cfg.kernel, eps);
        const cl::LipschitzEnvelope env =
            cl::calibrate_envelope(rk, cfg.samples, cfg.master_seed);
        const cl::ViolationReport rep =
            cl::verify_local_lipschitz(rk, env, cfg.samples, cfg.master_seed + 1);
        clean = clean && rep.violations == 0;
        json r;
        r["eps"] = eps;
        r["samples"] = rep.samples;
        r["violations"] = rep.violations;
        r["worst_ratio"] = rep.worst_ratio;
        r["calibrated_c"] = env.lip_const;
        r["window"] = {rep.window_lo, rep.window_hi};
        reports.push_back(r);
    }
    json out;
    out["kernel"] = cl::kernel_to_json(cfg.kernel, 0.0);
    out["reports"] = reports;
    std::cout << out.dump(2) << "\n";
    if (!g.out_dir.empty() && g.out_dir != "-") {
        check_outputs_writable(g.out_dir, {"kernel_report.json"}, g.force);
        cl::write_text_file(std::filesystem::path(g.out_dir) / "kernel_report.json",
                            out.dump(2) + "\n", true);
    }
    return clean ? 0 : 3;
}

int cmd_solve_pde(const GlobalOpts& g) {
    json cfg_json = load_config(g);
    cl::PdeRunConfig cfg = cl::parse_pde_config(cfg_json);
    if (g.seed) cfg.master_seed = *g.seed;
    const std::filesystem::path dir(g.out_dir);
    check_outputs_writable(dir, {"snapshots.csv", "diagnostics.json", "manifest.json"}, g.force);

    json manifest = cl::make_manifest(cl::to_json(cfg), cfg.master_seed, 1);

    const cl::RegularizedKernel rk(cfg.kernel, cfg.eps);
    cl::PdeParams pp;
    pp.grid = cfg.grid;
    pp.sigma = cfg.sigma;
    pp.dt = cfg.dt;
    pp.t_end = cfg.t_end;
    pp.save_every = cfg.save_every;
    const cl::PdeSolution sol = cl::solve_pde(cfg.rho0, rk, pp);

    cl::CsvWriter csv({"t", "x", "rho"});
    for (const auto& snap : sol.snapshots())
        for (int j = 0; j < cfg.grid.m; ++j)
            csv.add_row({cl::csv_cell(snap.t), cl::csv_cell(cfg.grid.center(j)),
                         cl::csv_cell(snap.rho[j])});

    json diags = json::array();
    for (const auto& snap : sol.snapshots()) {
        json d;
        d["t"] = snap.t;
        d["mass"] = snap.diag.mass;
        d["abs_moment"] = snap.diag.abs_moment;
        d["l2"] = snap.diag.l2;
        d["l4"] = snap.diag.l4;
        d["l8"] = snap.diag.l8;
        d["linf"] = snap.diag.linf;
        diags.push_back(d);
    }

    cl::write_text_file(dir / "snapshots.csv", csv.content(), true);
    cl::write_text_file(dir / "diagnostics.json", diags.dump(2) + "\n", true);
    cl::stamp_finished(manifest);
    cl::write_text_file(dir / "manifest.json", manifest.dump(2) + "\n", true);
    std::cout << "solve-pde: " << sol.snapshots().size() << " snapshots -> " << dir.string()
              << "\n";
    return 0;
}

int cmd_simulate(const GlobalOpts& g) {
    json cfg_json = load_config(g);
    cl::SimulateConfig cfg = cl::parse_simulate_config(cfg_json);
    if (g.seed) cfg.master_seed = *g.seed;
    const std::filesystem::path dir(g.out_dir);
    check_outputs_writable(dir, {"positions.csv", "manifest.json"}, g.force);

    json manifest = cl::make_manifest(cl::to_json(cfg), cfg.master_seed, 1);

    const int n = cfg.n_particles;
    const double steps_real = cfg.t_end / cfg.dt;
    const long long nsteps = std::llround(steps_real);
    if (std::abs(steps_real - static_cast<double>(nsteps)) > 1e-9 * std::max(1.0, steps_real))
        throw cl::ConfigError("simulate: T must be an integer multiple of dt");

    std::vector<cl::RngStream> streams;
    std::vector<double> x(n);
    for (int i = 0; i < n; ++i) {
        streams.emplace_back(cl::SeedSpec{cfg.master_seed, 0, static_cast<std::uint64_t>(i)});
        x[i] = cfg.rho0.quantile(streams.back().uniform01());
    }

    std::optional<cl::RegularizedKernel> rk;
    if (!cfg.unregularized) rk.emplace(cfg.kernel, cfg.eps);

    cl::CsvWriter csv({"t", "particle_id", "x"});
    auto dump_state = [&](double t) {
        for (int i = 0; i < n; ++i)
            csv.add_row({cl::csv_cell(t), cl::csv_cell(static_cast<long long>(i)),
                         cl::csv_cell(x[i])});
    };
    dump_state(0.0);

    const double sd = std::sqrt(cfg.dt);
    std::vector<double> force(n), db(n);
    for (long long step = 0; step < nsteps; ++step) {
        for (int i = 0; i < n; ++i) db[i] = sd * streams[i].normal();
        for (int i = 0; i < n; ++i)
            force[i] = rk ? cl::interaction_force(*rk, x, i)
                          : cl::mean_pair_force(cfg.kernel, x, i);
        for (int i = 0; i < n; ++i) x[i] = x[i] + force[i] * cfg.dt + cfg.sigma * db[i];
        if ((step + 1) % cfg.save_every == 0 || step + 1 == nsteps)
            dump_state(static_cast<double>(step + 1) * cfg.dt);
    }

    cl::write_text_file(dir / "positions.csv", csv.content(), true);
    cl::stamp_finished(manifest);
    cl::write_text_file(dir / "manifest.json", manifest.dump(2) + "\n", true);
    std::cout << "simulate: " << n << " particles, " << nsteps << " steps -> " << dir.string()
              << "\n";
    return 0;
}

int cmd_couple(const GlobalOpts& g) {
    json cfg_json = load_config(g);
    cl::CoupleConfig cfg = cl::parse_couple_config(cfg_json);
    if (g.seed) cfg.master_seed = *g.seed;
    cfg.threads = resolve_threads(g.threads > 0 ? g.threads : cfg.threads);
    const std::filesystem::path dir(g.out_dir);
    check_outputs_writable(dir, {"trajectories.csv", "couple_summary.json", "manifest.json"},
                           g.force);

    json manifest = cl::make_manifest(cl::to_json(cfg), cfg.master_seed, cfg.threads);

    const double eps = cfg.params.eps_scale *
                       std::pow(static_cast<double>(cfg.params.n_particles), -cfg.params.beta);
    const cl::RegularizedKernel rk(cfg.kernel, eps);
    cl::PdeParams pp;
    pp.grid = cfg.grid;
    pp.sigma = cfg.params.sigma;
    pp.dt = cfg.params.dt;
    pp.t_end = cfg.params.t_end;
    pp.save_every = 1;
    const cl::PdeSolution sol = cl::solve_pde(cfg.rho0, rk, pp);
    cl::CoupledParams params = cfg.params;
    params.lambda = cl::resolve_lambda(params, rk, sol);

    std::vector<cl::TrajectoryRecord> records(cfg.reps);
    for (int rep = 0; rep < cfg.reps; ++rep)
        records[rep] = cl::run_coupled(params, rk, sol, cfg.rho0,
                                       cl::SeedSpec{cfg.master_seed,
                                                    static_cast<std::uint64_t>(rep), 0});

    cl::CsvWriter csv({"replicate_id", "t", "sup_dev", "j", "exceeded"});
    int n_exceeded = 0;
    for (int rep = 0; rep < cfg.reps; ++rep) {
        const auto& rec = records[rep];
        n_exceeded += rec.exceeded ? 1 : 0;
        for (std::size_t s = 0; s < rec.times.size(); ++s)
            csv.add_row({cl::csv_cell(static_cast<long long>(rep)), cl::csv_cell(rec.times[s]),
                         cl::csv_cell(rec.sup_dev[s]), cl::csv_cell(rec.j_process[s]),
                         rec.exceeded ? "1" : "0"});
    }

    json summary;
    summary["reps"] = cfg.reps;
    summary["eps"] = eps;
    summary["threshold"] = records.front().threshold;
    summary["lambda"] = params.lambda;
    summary["delta"] = records.front().delta;
    summary["n_exceeded"] = n_exceeded;
    summary["clamp_warnings"] = [&] {
        long total = 0;
        for (const auto& r : records) total += r.clamp_warnings;
        return total;
    }();

    cl::write_text_file(dir / "trajectories.csv", csv.content(), true);
    cl::write_text_file(dir / "couple_summary.json", summary.dump(2) + "\n", true);
    cl::stamp_finished(manifest);
    cl::write_text_file(dir / "manifest.json", manifest.dump(2) + "\n", true);
    std::cout << "couple: " << cfg.reps << " replicates, exceeded " << n_exceeded << "/"
              << cfg.reps << " -> " << dir.string() << "\n";
    return 0;
}

int cmd_lln(const GlobalOpts& g) {
    json cfg_json = load_config(g);
    cl::LlnConfig cfg = cl::parse_lln_config(cfg_json);
    if (g.seed) cfg.master_seed = *g.seed;
    cfg.threads = resolve_threads(g.threads > 0 ? g.threads : cfg.threads);
    const std::filesystem::path dir(g.out_dir);
    check_outputs_writable(dir, {"lln_result.csv", "rates.json", "manifest.json"}, g.force);

    json manifest = cl::make_manifest(cl::to_json(cfg), cfg.master_seed, cfg.threads);

    cl::LlnOptions opts;
    opts.threads = cfg.threads;
    cl::CsvWriter csv({"N", "reps", "exceedance_fraction", "median_dev"});
    std::vector<std::pair<double, double>> exc_pts, med_pts;
    for (int n : cfg.n_list) {
        const cl::LlnResult res =
            cl::lln_exceedance(cfg.h, cfg.rho0, n, cfg.alpha, cfg.delta, cfg.reps,
                               cl::SeedSpec{cfg.master_seed, 0, 0}, opts);
        csv.add_row({cl::csv_cell(static_cast<long long>(n)),
                     cl::csv_cell(static_cast<long long>(cfg.reps)),
                     cl::csv_cell(res.exceedance_fraction), cl::csv_cell(res.median_sup_dev)});
        exc_pts.emplace_back(n, res.exceedance_fraction);
        med_pts.emplace_back(n, res.median_sup_dev);
        std::cout << "lln: N=" << n << " exceedance=" << res.exceedance_fraction
                  << " median_dev=" << res.median_sup_dev << "\n";
    }

    json rates;
    std::optional<cl::RateFit> exc_fit, med_fit;
    int exc_censored = 0;
    try {
        exc_fit = cl::fit_rate(exc_pts);
        exc_censored = exc_fit->censored_points;
    } catch (const cl::DegenerateFit&) {
        for (const auto& [n, s] : exc_pts) exc_censored += s <= 0.0 ? 1 : 0;
    }
    try {
        med_fit = cl::fit_rate(med_pts);
    } catch (const cl::DegenerateFit&) {
    }
    rates["exceedance"] = rate_fit_json(exc_fit, exc_censored);
    rates["median_dev"] = rate_fit_json(med_fit, 0);

    cl::write_text_file(dir / "lln_result.csv", csv.content(), true);
    cl::write_text_file(dir / "rates.json", rates.dump(2) + "\n", true);
    cl::stamp_finished(manifest);
    cl::write_text_file(dir / "manifest.json", manifest.dump(2) + "\n", true);
    return 0;
}

std::vector<cl::SweepRow> read_resume_rows(const std::filesystem::path& csv_path) {
    std::vector<cl::SweepRow> rows;
    std::ifstream in(csv_path);
    if (!in) return rows;
    std::string line;
    std::getline(in, line);  // header
    while (std::getline(in, line)) {
        std::stringstream ss(line);
        std::string cell;
        std::vector<std::string> cells;
        while (std::getline(ss, cell, ',')) cells.push_back(cell);
        if (cells.size() != 8) continue;
        try {
            cl::SweepRow r;
            r.n = std::stoi(cells[0]);
            r.eps = std::stod(cells[1]);
            r.reps = std::stoi(cells[2]);
            r.exceedance_fraction = std::stod(cells[3]);
            r.median_sup_dev = std::stod(cells[4]);
            r.mean_j_t = std::stod(cells[5]);
            r.w1_final = std::stod(cells[6]);
            r.lambda_used = std::stod(cells[7]);
            rows.push_back(r);
        } catch (const std::exception&) {
            break;  // interrupted mid-row
        }
    }
    return rows;
}

int cmd_sweep(const GlobalOpts& g) {
    json cfg_json = load_config(g);
    cl::SweepConfig cfg = cl::parse_sweep_config(cfg_json);
    if (g.seed) cfg.master_seed = *g.seed;
    cfg.threads = resolve_threads(g.threads > 0 ? g.threads : cfg.threads);
    const std::filesystem::path dir(g.out_dir);
    const json echo = cl::to_json(cfg);

    // A matching manifest from an interrupted run lets completed stages be
    // reused; anything else in the way needs --force.
    std::vector<cl::SweepRow> resume_rows;
    const auto manifest_path = dir / "manifest.json";
    cl::ensure_output_dir(dir);
    if (std::filesystem::exists(manifest_path)) {
        try {
            const json old = cl::load_json_file(manifest_path);
            if (old.contains("config") && old.at("config") == echo)
                resume_rows = read_resume_rows(dir / "sweep_result.csv");
        } catch (const cl::Error&) {
        }
    }
    if (resume_rows.empty())
        check_outputs_writable(dir, {"sweep_result.csv", "rates.json", "manifest.json"}, g.force);

    json manifest = cl::make_manifest(echo, cfg.master_seed, cfg.threads);
    cl::write_text_file(manifest_path, manifest.dump(2) + "\n", true);

    const auto csv_path = dir / "sweep_result.csv";
    std::ofstream csv(csv_path, std::ios::binary | std::ios::trunc);
    if (!csv) throw cl::IoError("cannot write " + csv_path.string());
    csv << "N,eps,reps,exceedance_fraction,median_sup_dev,mean_j_t,w1_final,lambda_used\n";
    csv.flush();

    json stage_times = json::array();
    auto on_row = [&](const cl::SweepRow& r) {
        csv << r.n << ',' << cl::csv_cell(r.eps) << ',' << r.reps << ','
            << cl::csv_cell(r.exceedance_fraction) << ',' << cl::csv_cell(r.median_sup_dev)
            << ',' << cl::csv_cell(r.mean_j_t) << ',' << cl::csv_cell(r.w1_final) << ','
            << cl::csv_cell(r.lambda_used) << '\n';
        csv.flush();
        json st;
        st["N"] = r.n;
        st["wall_time_s"] = r.wall_time_s;
        stage_times.push_back(st);
        std::cout << "sweep: N=" << r.n << " exceedance=" << r.exceedance_fraction
                  << " median_sup_dev=" << r.median_sup_dev << " mean_J_T=" << r.mean_j_t
                  << " W1=" << r.w1_final << " (" << r.wall_time_s << " s)\n";
    };

    const cl::SweepResult result = cl::run_sweep(cfg, on_row, resume_rows);
    csv.close();

    json rates;
    rates["exceedance"] = rate_fit_json(result.exceedance_fit, result.exceedance_censored);
    rates["median_sup_dev"] = rate_fit_json(result.median_dev_fit, result.median_censored);
    cl::write_text_file(dir / "rates.json", rates.dump(2) + "\n", true);

    manifest["stage_wall_times"] = stage_times;
    cl::stamp_finished(manifest);
    cl::write_text_file(manifest_path, manifest.dump(2) + "\n", true);
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"chaoslab: interacting-particle systems, their mean-field limits, and the "
                 "coupling between them"};
    app.set_version_flag("--version", cl::kVersion);
    app.require_subcommand(1);
    app.fallthrough(true);  // global options may follow the subcommand name

    GlobalOpts g;
    app.add_option("--config", g.config_path, "JSON config file")->envname("CHAOSLAB_CONFIG");
    app.add_option("--out", g.out_dir, "output directory (default: out)");
    app.add_flag("--force", g.force, "overwrite existing outputs");
    app.add_option("--threads", g.threads, "worker threads (env CHAOSLAB_THREADS, else all cores)");
    std::uint64_t seed_val = 0;
    auto* seed_opt = app.add_option("--seed", seed_val, "master seed override");

    auto* sc_pde = app.add_subcommand("solve-pde", "solve the diffusion-aggregation PDE");
    auto* sc_sim = app.add_subcommand("simulate", "run the particle system alone");
    auto* sc_couple = app.add_subcommand("couple", "coupled particle / mean-field replicates");
    auto* sc_lln = app.add_subcommand("lln", "law-of-large-numbers exceedance experiment");
    auto* sc_sweep = app.add_subcommand("sweep", "convergence sweep over particle counts");
    auto* sc_verify = app.add_subcommand("verify-kernel", "verify the local Lipschitz envelope");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForVersion& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 2;
    }
    if (seed_opt->count() > 0) g.seed = seed_val;

    try {
        if (sc_pde->parsed()) return cmd_solve_pde(g);
        if (sc_sim->parsed()) return cmd_simulate(g);
        if (sc_couple->parsed()) return cmd_couple(g);
        if (sc_lln->parsed()) return cmd_lln(g);
        if (sc_sweep->parsed()) return cmd_sweep(g);
        if (sc_verify->parsed()) return cmd_verify_kernel(g);
        std::cerr << "no subcommand\n";
        return 2;
    } catch (const cl::ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    } catch (const cl::IoError& e) {
        std::cerr << "io error: " << e.what() << "\n";
        return 4;
    } catch (const cl::Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 3;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 3;
    }
}
