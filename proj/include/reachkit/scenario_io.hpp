#ifndef REACHKIT_SCENARIO_IO_HPP
#define REACHKIT_SCENARIO_IO_HPP

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "reachkit/rgocp.hpp"
#include "reachkit/target_reach.hpp"

namespace reachkit {

// Everything one run needs, parsed from a single JSON document. The grasp
// polytope inside `scenario` stays empty until the target-reachability stage
// fills it.
struct RunConfig {
    Scenario scenario;
    int attitude_cover = 30;  // orientation cover samples
    int polytope_facets = 8;  // facets (= vertices) of the lifted polytope
    RgocpOptions options;     // solver and audit settings
};

// Strict parse: unknown keys and missing keys without a documented default
// are rejected with a ConfigError naming the dotted key path.
RunConfig parse_config(const std::string& json_text);
RunConfig load_config(const std::filesystem::path& file);

// Canonical re-serialization of a parsed config (stable key order, defaults
// made explicit); embedded in the run summary so artifacts carry their own
// provenance.
std::string config_to_json(const RunConfig& cfg);

// Target-side pipeline output: per-snapshot minimal enclosing balls of the
// propagated orientation cover, the ball covering the exact final
// orientation set, and the lifted grasp polytope.
struct TargetReachResult {
    std::vector<double> times;       // s, chaser grid
    std::vector<GeodesicBall> megb;  // one per grid time
    double cover_delta = 0.0;        // rad, cover fineness
    GeodesicBall final_cover;
    GraspPolytope polytope;
};

// NotStronglyConvex from a snapshot mean is rethrown with the offending
// time attached.
TargetReachResult run_target_reach(const RunConfig& cfg);

// Artifact writers. Directories are created on demand; every file is
// written to a temporary and renamed into place.
void write_target_artifacts(const RunConfig& cfg, const TargetReachResult& result,
                            const std::filesystem::path& dir);
void write_solution_artifacts(const RunConfig& cfg, const TargetReachResult& target,
                              const Solution& solution, const std::filesystem::path& dir);

// A full run reconstructed from disk; `config.scenario` carries the stored
// polytope.
struct StoredRun {
    RunConfig config;
    TargetReachResult target;
    Solution solution;
};

TargetReachResult read_target_artifacts(const std::filesystem::path& dir);
StoredRun read_run(const std::filesystem::path& dir);

// One named verification; `detail` carries the measured margin or count.
struct CheckResult {
    std::string name;
    bool passed = true;
    std::string detail;
};

// Re-audits a stored run from the artifacts alone: constraint families are
// re-evaluated at the stored decision, snapshots and transfer tubes are
// cross-checked against the stored controls, and the sampled audits are
// re-run with the given budget. trials = 0 skips the sampled audits.
std::vector<CheckResult> verify_run(const StoredRun& run, int trials, std::uint64_t seed);

// Plot-ready columnar extracts (ball-radius series, per-axis controls,
// reach extents, polytope vertices) derived from a stored run.
void write_plot_exports(const StoredRun& run, const std::filesystem::path& dir);

}  // namespace reachkit

#endif  // REACHKIT_SCENARIO_IO_HPP
