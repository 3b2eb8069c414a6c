#include <chrono>
#include <cstdint>
#include <cstdio>
#include <exception>
#include <string>

#include "CLI11.hpp"
#include "reachkit/errors.hpp"
#include "reachkit/scenario_io.hpp"

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
    return std::chrono::duration<double>(Clock::now() - t0).count();
}

int run_target_reach_cmd(const std::string& config_path, const std::string& out_dir) {
    const reachkit::RunConfig cfg = reachkit::load_config(config_path);
    const auto t0 = Clock::now();
    const reachkit::TargetReachResult result = reachkit::run_target_reach(cfg);
    const double elapsed = seconds_since(t0);
    reachkit::write_target_artifacts(cfg, result, out_dir);
    std::printf("target-reach: %d snapshots in %.3f s\n",
                static_cast<int>(result.megb.size()), elapsed);
    std::printf("target-reach: final ball radius %.6f rad, cover fineness %.6f rad\n",
                result.megb.back().radius, result.cover_delta);
    std::printf("target-reach: polytope %zu vertices, %zu planes -> %s\n",
                result.polytope.vertices.size(), result.polytope.halfspaces.size(),
                out_dir.c_str());
    return 0;
}

int run_solve_cmd(const std::string& config_path, const std::string& out_dir, int trials_override,
                  bool have_trials, std::uint64_t seed_override, bool have_seed) {
    reachkit::RunConfig cfg = reachkit::load_config(config_path);
    if (have_trials) cfg.options.audit_trials = trials_override;
    if (have_seed) cfg.options.audit_seed = seed_override;

    std::string stage = "target-reach";
    try {
        auto t0 = Clock::now();
        const reachkit::TargetReachResult target = reachkit::run_target_reach(cfg);
        std::printf("solve: target reachability in %.3f s (final radius %.6f rad)\n",
                    seconds_since(t0), target.megb.back().radius);
        cfg.scenario.target_polytope = target.polytope;
        cfg.scenario.target_vertices = static_cast<int>(target.polytope.vertices.size());

        stage = "solve";
        t0 = Clock::now();
        const reachkit::Solution solution = reachkit::solve_rgocp(cfg.scenario, cfg.options);
        std::printf("solve: converged in %.3f s, %d inner iterations, objective %.6f\n",
                    seconds_since(t0), solution.solver.iterations, solution.objective);
        std::printf("solve: tube radius %.6f N, worst violation %.3e\n",
                    solution.decision.r_delta, solution.solver.max_violation);

        stage = "audit";
        const double touch = reachkit::boundary_touch_distance(solution, cfg.scenario);
        std::printf("audit: boundary touch distance %.3e m\n", touch);
        if (solution.theorem1.violations != 0) {
            std::fprintf(stderr, "solve failed at stage audit: %d tube-containment violations\n",
                         solution.theorem1.violations);
            return 1;
        }
        std::printf("audit: tube containment clean over %lld points\n",
                    solution.theorem1.points_checked);
        const reachkit::ValidationReport vr = reachkit::validate_solution(
            solution, cfg.scenario, cfg.options.audit_trials, cfg.options.audit_seed);
        if (vr.grasp_outside != 0 || vr.endpoint_outside != 0) {
            std::fprintf(stderr,
                         "solve failed at stage audit: %d grasp / %d endpoint escapes\n",
                         vr.grasp_outside, vr.endpoint_outside);
            return 1;
        }
        std::printf("audit: %d validation trials clean, worst miss %.3e m\n", vr.trials,
                    vr.worst_miss);

        stage = "write";
        reachkit::write_solution_artifacts(cfg, target, solution, out_dir);
        std::printf("solve: artifacts written to %s\n", out_dir.c_str());
        return 0;
    } catch (const reachkit::ConfigError&) {
        throw;  // config problems keep their dedicated exit code
    } catch (const std::exception& e) {
        std::fprintf(stderr, "solve failed at stage %s: %s\n", stage.c_str(), e.what());
        return 1;
    }
}

int run_verify_cmd(const std::string& out_dir, int trials_override, bool have_trials,
                   std::uint64_t seed_override, bool have_seed) {
    const reachkit::StoredRun run = reachkit::read_run(out_dir);
    const int trials = have_trials ? trials_override : run.config.options.audit_trials;
    const std::uint64_t seed = have_seed ? seed_override : run.config.options.audit_seed;

    if (trials <= 0) std::printf("verify: no trials requested; sampled audits skipped\n");
    const auto checks = reachkit::verify_run(run, trials, seed);
    bool all_ok = true;
    for (const reachkit::CheckResult& c : checks) {
        std::printf("verify: %s %s (%s)\n", c.passed ? "PASS" : "FAIL", c.name.c_str(),
                    c.detail.c_str());
        all_ok = all_ok && c.passed;
    }
    if (!all_ok) {
        for (const reachkit::CheckResult& c : checks)
            if (!c.passed) {
                std::fprintf(stderr, "verify failed: %s\n", c.name.c_str());
                return 1;
            }
    }
    std::printf("verify: all %zu checks passed\n", checks.size());
    return 0;
}

int run_export_cmd(const std::string& out_dir) {
    const reachkit::StoredRun run = reachkit::read_run(out_dir);
    const std::filesystem::path plots = std::filesystem::path(out_dir) / "plots";
    reachkit::write_plot_exports(run, plots);
    std::printf("export: plot files written to %s\n", plots.string().c_str());
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"tumbling-target reachability and guaranteed-approach planning"};
    app.require_subcommand(1);

    std::string config_path;
    std::string out_dir = "run";
    int trials = 0;
    std::uint64_t seed = 0;

    CLI::App* tr = app.add_subcommand(
        "target-reach", "propagate the attitude cover and lift the grasp polytope");
    tr->add_option("--config", config_path, "scenario file (JSON)")->required();
    tr->add_option("--out", out_dir, "artifact directory");

    CLI::App* sol =
        app.add_subcommand("solve", "full pipeline: target reachability, solve, audits");
    sol->add_option("--config", config_path, "scenario file (JSON)")->required();
    sol->add_option("--out", out_dir, "artifact directory");
    CLI::Option* sol_trials = sol->add_option("--trials", trials, "audit trial count override");
    CLI::Option* sol_seed = sol->add_option("--seed", seed, "audit seed override");

    CLI::App* ver = app.add_subcommand("verify", "re-audit stored artifacts");
    ver->add_option("--out", out_dir, "artifact directory");
    CLI::Option* ver_trials = ver->add_option("--trials", trials, "audit trial count");
    CLI::Option* ver_seed = ver->add_option("--seed", seed, "audit seed");

    CLI::App* exp = app.add_subcommand("export", "plot-ready columnar extracts");
    exp->add_option("--out", out_dir, "artifact directory");

    CLI11_PARSE(app, argc, argv);

    try {
        if (tr->parsed()) return run_target_reach_cmd(config_path, out_dir);
        if (sol->parsed())
            return run_solve_cmd(config_path, out_dir, trials, sol_trials->count() > 0, seed,
                                 sol_seed->count() > 0);
        if (ver->parsed())
            return run_verify_cmd(out_dir, trials, ver_trials->count() > 0, seed,
                                  ver_seed->count() > 0);
        if (exp->parsed()) return run_export_cmd(out_dir);
    } catch (const reachkit::ConfigError& e) {
        std::fprintf(stderr, "config error: %s\n", e.what());
        return 2;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    }
    return 0;
}
