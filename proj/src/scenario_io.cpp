#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <limits>
#include <set>
#include <sstream>
#include <string>
#include <utility>

#include "json.hpp"
#include "reachkit/errors.hpp"
#include "reachkit/kernels.hpp"
#include "reachkit/scenario_io.hpp"

namespace reachkit {

namespace {

namespace fs = std::filesystem;
using Json = nlohmann::ordered_json;

constexpr const char* kSchemaTag = "reachkit-run/1";

std::string fmt(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

// human-readable margins for check details; artifacts keep full precision
std::string fmt_short(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.3e", v);
    return buf;
}

// Non-finite values survive the JSON round trip as tagged strings; plain
// doubles stay numbers.
Json to_jnum(double v) {
    if (std::isfinite(v)) return v;
    if (std::isnan(v)) return "nan";
    return v > 0 ? "inf" : "-inf";
}

double from_jnum(const Json& j, const std::string& path) {
    if (j.is_number()) return j.get<double>();
    if (j.is_string()) {
        const std::string s = j.get<std::string>();
        if (s == "inf") return std::numeric_limits<double>::infinity();
        if (s == "-inf") return -std::numeric_limits<double>::infinity();
        if (s == "nan") return std::numeric_limits<double>::quiet_NaN();
    }
    throw ConfigError("artifact: " + path + " is not a number");
}

// ---------------------------------------------------------------------------
// strict config reader

// Wraps one JSON object; remembers which keys were consumed so finish() can
// name any stragglers. A null node stands for an absent optional section:
// every *_or getter falls back, required getters cannot be reached there.
class Node {
  public:
    Node(const Json* j, std::string path) : j_(j), path_(std::move(path)) {}

    Node section(const char* key, bool required) {
        const Json* child = nullptr;
        if (j_ != nullptr && j_->contains(key)) {
            used_.insert(key);
            child = &(*j_)[key];
            if (!child->is_object()) throw ConfigError("config: " + join(key) + " must be an object");
        } else if (required) {
            throw ConfigError("config: missing section " + join(key));
        }
        return Node(child, join(key));
    }

    double number(const char* key) { return as_number(fetch(key), join(key)); }
    double number_or(const char* key, double fallback) {
        const Json* v = try_fetch(key);
        return v ? as_number(*v, join(key)) : fallback;
    }

    int integer(const char* key) { return as_integer(fetch(key), join(key)); }
    int integer_or(const char* key, int fallback) {
        const Json* v = try_fetch(key);
        return v ? as_integer(*v, join(key)) : fallback;
    }

    std::uint64_t u64_or(const char* key, std::uint64_t fallback) {
        const Json* v = try_fetch(key);
        if (!v) return fallback;
        if (!v->is_number_integer() && !v->is_number_unsigned())
            throw ConfigError("config: " + join(key) + " must be an integer");
        return v->get<std::uint64_t>();
    }

    Eigen::Vector3d vec3(const char* key) { return as_vec3(fetch(key), join(key)); }
    Eigen::Vector3d vec3_or(const char* key, const Eigen::Vector3d& fallback) {
        const Json* v = try_fetch(key);
        return v ? as_vec3(*v, join(key)) : fallback;
    }

    const Json* array_or_null(const char* key) {
        const Json* v = try_fetch(key);
        if (v && !v->is_array()) throw ConfigError("config: " + join(key) + " must be an array");
        return v;
    }

    // unknown-key sweep; call after every expected key was consumed
    void finish() {
        if (j_ == nullptr) return;
        for (const auto& item : j_->items())
            if (used_.find(item.key()) == used_.end())
                throw ConfigError("config: unknown key " + join(item.key().c_str()));
    }

    std::string join(const char* key) const {
        return path_.empty() ? std::string(key) : path_ + "." + key;
    }

  private:
    const Json& fetch(const char* key) {
        if (j_ == nullptr || !j_->contains(key))
            throw ConfigError("config: missing key " + join(key));
        used_.insert(key);
        return (*j_)[key];
    }
    const Json* try_fetch(const char* key) {
        if (j_ == nullptr || !j_->contains(key)) return nullptr;
        used_.insert(key);
        return &(*j_)[key];
    }

    static double as_number(const Json& v, const std::string& path) {
        if (!v.is_number()) throw ConfigError("config: " + path + " must be a number");
        return v.get<double>();
    }
    static int as_integer(const Json& v, const std::string& path) {
        if (!v.is_number_integer()) throw ConfigError("config: " + path + " must be an integer");
        return v.get<int>();
    }
    static Eigen::Vector3d as_vec3(const Json& v, const std::string& path) {
        if (!v.is_array() || v.size() != 3)
            throw ConfigError("config: " + path + " must be an array of 3 numbers");
        Eigen::Vector3d out;
        for (int i = 0; i < 3; ++i) {
            if (!v[i].is_number())
                throw ConfigError("config: " + path + " must be an array of 3 numbers");
            out[i] = v[i].get<double>();
        }
        return out;
    }

    const Json* j_;
    std::string path_;
    std::set<std::string> used_;
};

Json vec3_json(const Eigen::Vector3d& v) { return Json::array({v.x(), v.y(), v.z()}); }

Json rotation_json(const Rotation& r) {
    Json out = Json::array();
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j) out.push_back(r.matrix()(i, j));
    return out;
}

Rotation rotation_from_json(const Json& j, const std::string& path) {
    if (!j.is_array() || j.size() != 9)
        throw ConfigError("artifact: " + path + " must be an array of 9 numbers");
    Eigen::Matrix3d m;
    for (int i = 0; i < 9; ++i) m(i / 3, i % 3) = from_jnum(j[i], path);
    return Rotation::from_matrix(m);
}

// ---------------------------------------------------------------------------
// atomic files and CSV tables

void write_atomic(const fs::path& path, const std::string& content) {
    fs::create_directories(path.parent_path());
    fs::path tmp = path;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        out << content;
        if (!out) throw ConfigError("artifact: cannot write " + tmp.string());
    }
    fs::rename(tmp, path);
}

std::string read_file(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ConfigError("artifact: cannot read " + path.string());
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

struct CsvTable {
    std::vector<std::vector<double>> rows;
};

std::string csv_header(const std::vector<const char*>& cols) {
    std::string line;
    for (std::size_t i = 0; i < cols.size(); ++i) {
        if (i) line += ',';
        line += cols[i];
    }
    line += '\n';
    return line;
}

void csv_row(std::string& out, const std::vector<double>& vals) {
    for (std::size_t i = 0; i < vals.size(); ++i) {
        if (i) out += ',';
        out += fmt(vals[i]);
    }
    out += '\n';
}

CsvTable read_csv(const fs::path& path, const std::vector<const char*>& cols) {
    std::istringstream in(read_file(path));
    std::string line;
    if (!std::getline(in, line)) throw ConfigError("artifact: " + path.string() + " is empty");
    if (!line.empty() && line.back() == '\r') line.pop_back();
    std::string expect = csv_header(cols);
    expect.pop_back();
    if (line != expect)
        throw ConfigError("artifact: " + path.string() + " has an unexpected header");

    CsvTable table;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        std::vector<double> row;
        const char* p = line.c_str();
        char* end = nullptr;
        for (;;) {
            row.push_back(std::strtod(p, &end));
            if (end == p)
                throw ConfigError("artifact: " + path.string() + " has a malformed row");
            p = end;
            if (*p == ',') {
                ++p;
            } else if (*p == '\0') {
                break;
            } else {
                throw ConfigError("artifact: " + path.string() + " has a malformed row");
            }
        }
        if (row.size() != cols.size())
            throw ConfigError("artifact: " + path.string() + " has a short row");
        table.rows.push_back(std::move(row));
    }
    return table;
}

// fixed artifact names
const std::vector<const char*> kMegbCols = {"time_s",  "r00", "r01", "r02", "r10", "r11",
                                            "r12",     "r20", "r21", "r22", "radius_rad"};
const std::vector<const char*> kVertexCols = {"vx_m", "vy_m", "vz_m"};
const std::vector<const char*> kPlaneCols = {"px", "py", "pz", "offset_m"};
const std::vector<const char*> kSnapshotCols = {"time_s", "sample", "px_m",   "py_m",
                                                "pz_m",   "vx_mps", "vy_mps", "vz_mps"};
const std::vector<const char*> kTubeCols = {
    "interval", "t0_s",  "t1_s",  "tube",  "cx_m",         "cy_m",         "cz_m",
    "ax",       "ay",    "az",    "semi_major_m", "semi_minor_m", "f0x_m", "f0y_m",
    "f0z_m",    "f1x_m", "f1y_m", "f1z_m"};
const std::vector<const char*> kHullCols = {"interval", "px", "py", "pz", "offset_m"};
const std::vector<const char*> kControlCols = {"segment", "ux_n", "uy_n", "uz_n"};
const std::vector<const char*> kWeightCols = {"vertex", "sample", "weight"};

}  // namespace

// ---------------------------------------------------------------------------
// config

RunConfig parse_config(const std::string& json_text) {
    Json doc;
    try {
        doc = Json::parse(json_text);
    } catch (const Json::parse_error& e) {
        throw ConfigError(std::string("config: invalid JSON: ") + e.what());
    }
    if (!doc.is_object()) throw ConfigError("config: top level must be an object");

    RunConfig cfg;
    Node root(&doc, "");

    Node chaser = root.section("chaser", true);
    cfg.scenario.chaser.mass = chaser.number("mass_kg");
    cfg.scenario.chaser.x0 = chaser.vec3_or("x0_m", Eigen::Vector3d::Zero());
    cfg.scenario.chaser.v0 = chaser.vec3_or("v0_mps", Eigen::Vector3d::Zero());
    cfg.scenario.chaser.u_lim = chaser.number("u_lim_n");
    cfg.scenario.chaser.v_lim = chaser.number("v_lim_mps");
    cfg.scenario.chaser.dt = chaser.number("dt_s");
    cfg.scenario.chaser.horizon = chaser.number("horizon_s");
    chaser.finish();
    if (!(cfg.scenario.chaser.dt > 0.0))
        throw ConfigError("config: chaser.dt_s must be positive");
    const double ratio = cfg.scenario.chaser.horizon / cfg.scenario.chaser.dt;
    cfg.scenario.chaser.segments = static_cast<int>(std::lround(ratio));
    if (cfg.scenario.chaser.segments < 1 ||
        std::abs(ratio - cfg.scenario.chaser.segments) > 1e-9)
        throw ConfigError("config: chaser.horizon_s must be a whole number of dt_s segments");

    Node target = root.section("target", true);
    cfg.scenario.target.inertia = target.vec3("inertia_kgm2");
    cfg.scenario.target.omega0 = target.vec3("omega0_radps");
    cfg.scenario.target.r_center = target.vec3("r_center_m");
    cfg.scenario.target.p_grasp = target.vec3("p_grasp_m");
    target.finish();

    Node attitude = root.section("attitude", true);
    cfg.scenario.attitude0 = so3::exp(attitude.vec3_or("center_w_rad", Eigen::Vector3d::Zero()));
    cfg.scenario.attitude_radius = attitude.number("radius_rad");
    cfg.attitude_cover = attitude.integer_or("cover_count", 30);
    cfg.polytope_facets = attitude.integer_or("polytope_facets", 8);
    attitude.finish();

    Node scen = root.section("scenario", true);
    cfg.scenario.x_min = scen.vec3("x_min_m");
    cfg.scenario.x_max = scen.vec3("x_max_m");
    cfg.scenario.nominal_tol = scen.number_or("nominal_tol_m", 0.05);
    cfg.scenario.eps = scen.number("eps_m");
    cfg.scenario.cover_size = scen.integer_or("cover_size", 32);
    cfg.scenario.w_rdelta = scen.number_or("w_rdelta", 0.12);
    if (const Json* obs = scen.array_or_null("obstacles")) {
        for (std::size_t i = 0; i < obs->size(); ++i) {
            const std::string path = scen.join("obstacles") + "[" + std::to_string(i) + "]";
            const Json& item = (*obs)[i];
            if (!item.is_object()) throw ConfigError("config: " + path + " must be an object");
            Node onode(&item, path);
            Halfspace hs;
            hs.p = onode.vec3("normal");
            hs.h = onode.number("offset_m");
            onode.finish();
            cfg.scenario.obstacles.push_back(hs);
        }
    }
    scen.finish();

    Node solver = root.section("solver", false);
    SolveOptions& so = cfg.options.solver;
    so.feasibility_tol = solver.number_or("feasibility_tol", so.feasibility_tol);
    so.stationarity_tol = solver.number_or("stationarity_tol", so.stationarity_tol);
    so.max_outer = solver.integer_or("max_outer", so.max_outer);
    so.max_inner = solver.integer_or("max_inner", so.max_inner);
    so.memory = solver.integer_or("memory", so.memory);
    so.mu_init = solver.number_or("mu_init", so.mu_init);
    so.mu_growth = solver.number_or("mu_growth", so.mu_growth);
    so.mu_cap = solver.number_or("mu_cap", so.mu_cap);
    so.multiplier_limit = solver.number_or("multiplier_limit", so.multiplier_limit);
    solver.finish();

    Node audit = root.section("audit", false);
    cfg.options.audit_trials = audit.integer_or("trials", cfg.options.audit_trials);
    cfg.options.audit_seed = audit.u64_or("seed", cfg.options.audit_seed);
    cfg.options.hull_directions = audit.integer_or("hull_directions", cfg.options.hull_directions);
    audit.finish();

    root.finish();

    if (cfg.attitude_cover < 4) throw ConfigError("config: attitude.cover_count must be >= 4");
    if (cfg.polytope_facets < 4)
        throw ConfigError("config: attitude.polytope_facets must be >= 4");
    if (cfg.options.audit_trials < 0) throw ConfigError("config: audit.trials must be >= 0");
    cfg.scenario.chaser.validate();
    cfg.scenario.target.validate();
    return cfg;
}

RunConfig load_config(const std::filesystem::path& file) {
    return parse_config(read_file(file));
}

std::string config_to_json(const RunConfig& cfg) {
    const Scenario& sc = cfg.scenario;
    Json doc;
    doc["chaser"] = {{"mass_kg", sc.chaser.mass},
                     {"x0_m", vec3_json(sc.chaser.x0)},
                     {"v0_mps", vec3_json(sc.chaser.v0)},
                     {"u_lim_n", sc.chaser.u_lim},
                     {"v_lim_mps", sc.chaser.v_lim},
                     {"dt_s", sc.chaser.dt},
                     {"horizon_s", sc.chaser.horizon}};
    doc["target"] = {{"inertia_kgm2", vec3_json(sc.target.inertia)},
                     {"omega0_radps", vec3_json(sc.target.omega0)},
                     {"r_center_m", vec3_json(sc.target.r_center)},
                     {"p_grasp_m", vec3_json(sc.target.p_grasp)}};
    // the ball center is stored as its rotation log; the identity-centered
    // common case round-trips exactly
    Eigen::Vector3d center_w = Eigen::Vector3d::Zero();
    if (so3::angle(sc.attitude0) > 0.0) center_w = so3::log(sc.attitude0);
    doc["attitude"] = {{"center_w_rad", vec3_json(center_w)},
                       {"radius_rad", sc.attitude_radius},
                       {"cover_count", cfg.attitude_cover},
                       {"polytope_facets", cfg.polytope_facets}};
    Json obstacles = Json::array();
    for (const Halfspace& hs : sc.obstacles)
        obstacles.push_back({{"normal", vec3_json(hs.p)}, {"offset_m", hs.h}});
    doc["scenario"] = {{"x_min_m", vec3_json(sc.x_min)},
                       {"x_max_m", vec3_json(sc.x_max)},
                       {"nominal_tol_m", sc.nominal_tol},
                       {"eps_m", sc.eps},
                       {"cover_size", sc.cover_size},
                       {"w_rdelta", sc.w_rdelta},
                       {"obstacles", obstacles}};
    const SolveOptions& so = cfg.options.solver;
    doc["solver"] = {{"feasibility_tol", so.feasibility_tol},
                     {"stationarity_tol", so.stationarity_tol},
                     {"max_outer", so.max_outer},
                     {"max_inner", so.max_inner},
                     {"memory", so.memory},
                     {"mu_init", so.mu_init},
                     {"mu_growth", so.mu_growth},
                     {"mu_cap", so.mu_cap},
                     {"multiplier_limit", so.multiplier_limit}};
    doc["audit"] = {{"trials", cfg.options.audit_trials},
                    {"seed", cfg.options.audit_seed},
                    {"hull_directions", cfg.options.hull_directions}};
    return doc.dump(2) + "\n";
}

// ---------------------------------------------------------------------------
// target pipeline

TargetReachResult run_target_reach(const RunConfig& cfg) {
    const Scenario& sc = cfg.scenario;
    const GeodesicBall ball(sc.attitude0, sc.attitude_radius);
    const OrientationCover cover = build_cover(ball, cfg.attitude_cover);

    std::vector<double> grid(sc.chaser.segments + 1);
    for (int j = 0; j < sc.chaser.segments; ++j) grid[j] = j * sc.chaser.dt;
    grid[sc.chaser.segments] = sc.chaser.horizon;

    const auto path = propagate_cover(cover, sc.target, grid);

    TargetReachResult out;
    out.cover_delta = cover.delta;
    for (const auto& [t, samples] : path) {
        try {
            out.megb.push_back(megb(samples));
        } catch (const NotStronglyConvex& e) {
            throw NotStronglyConvex("target-reach at t=" + fmt(t) + " s: " + e.what());
        }
        out.times.push_back(t);
    }
    // samples[0] tracks the ball center, so its endpoint is the nominal
    // final orientation
    out.final_cover = cover_final_set(ball, path.back().second.front(), out.megb.back());
    out.polytope = lift_to_polytope(out.final_cover, sc.target, cfg.polytope_facets);
    return out;
}

// ---------------------------------------------------------------------------
// writers

void write_target_artifacts(const RunConfig& cfg, const TargetReachResult& result,
                            const std::filesystem::path& dir) {
    std::string megb_csv = csv_header(kMegbCols);
    for (std::size_t i = 0; i < result.megb.size(); ++i) {
        std::vector<double> row = {result.times[i]};
        const Eigen::Matrix3d& m = result.megb[i].center.matrix();
        for (int r = 0; r < 3; ++r)
            for (int c = 0; c < 3; ++c) row.push_back(m(r, c));
        row.push_back(result.megb[i].radius);
        csv_row(megb_csv, row);
    }
    write_atomic(dir / "target_megb.csv", megb_csv);

    std::string vert_csv = csv_header(kVertexCols);
    for (const Eigen::Vector3d& v : result.polytope.vertices)
        csv_row(vert_csv, {v.x(), v.y(), v.z()});
    write_atomic(dir / "polytope_vertices.csv", vert_csv);

    std::string plane_csv = csv_header(kPlaneCols);
    for (const geom::Plane& pl : result.polytope.halfspaces)
        csv_row(plane_csv, {pl.p.x(), pl.p.y(), pl.p.z(), pl.h});
    write_atomic(dir / "polytope_planes.csv", plane_csv);

    Json summary;
    summary["schema"] = kSchemaTag;
    summary["config"] = Json::parse(config_to_json(cfg));
    summary["cover_delta_rad"] = to_jnum(result.cover_delta);
    summary["final_cover"] = {{"rotation", rotation_json(result.final_cover.center)},
                              {"radius_rad", to_jnum(result.final_cover.radius)}};
    write_atomic(dir / "target_summary.json", summary.dump(2) + "\n");
}

void write_solution_artifacts(const RunConfig& cfg, const TargetReachResult& target,
                              const Solution& solution, const std::filesystem::path& dir) {
    write_target_artifacts(cfg, target, dir);

    std::string ctrl_csv = csv_header(kControlCols);
    for (int j = 0; j < solution.decision.u.rows(); ++j)
        csv_row(ctrl_csv, {double(j), solution.decision.u(j, 0), solution.decision.u(j, 1),
                           solution.decision.u(j, 2)});
    write_atomic(dir / "controls.csv", ctrl_csv);

    std::string weight_csv = csv_header(kWeightCols);
    for (int i = 0; i < solution.decision.lambda.rows(); ++i)
        for (int k = 0; k < solution.decision.lambda.cols(); ++k)
            csv_row(weight_csv, {double(i), double(k), solution.decision.lambda(i, k)});
    write_atomic(dir / "weights.csv", weight_csv);

    std::string snap_csv = csv_header(kSnapshotCols);
    for (const ReachSnapshot& snap : solution.snapshots)
        for (int k = 0; k < snap.points.rows(); ++k)
            csv_row(snap_csv,
                    {snap.time, double(k), snap.points(k, 0), snap.points(k, 1),
                     snap.points(k, 2), snap.points(k, 3), snap.points(k, 4), snap.points(k, 5)});
    write_atomic(dir / "snapshots.csv", snap_csv);

    std::string tube_csv = csv_header(kTubeCols);
    std::string hull_csv = csv_header(kHullCols);
    for (std::size_t i = 0; i < solution.rtc.intervals.size(); ++i) {
        const RtcInterval& iv = solution.rtc.intervals[i];
        for (std::size_t k = 0; k < iv.tubes.size(); ++k) {
            const Ellipsoid& e = iv.tubes[k];
            const auto [f0, f1] = e.foci();
            csv_row(tube_csv, {double(i),       iv.t0,           iv.t1,
                               double(k),       e.center().x(),  e.center().y(),
                               e.center().z(),  e.axis().x(),    e.axis().y(),
                               e.axis().z(),    e.semi_major(),  e.semi_minor(),
                               f0.x(),          f0.y(),          f0.z(),
                               f1.x(),          f1.y(),          f1.z()});
        }
        for (const geom::Plane& pl : iv.hull)
            csv_row(hull_csv, {double(i), pl.p.x(), pl.p.y(), pl.p.z(), pl.h});
    }
    write_atomic(dir / "rtc_tubes.csv", tube_csv);
    write_atomic(dir / "rtc_hull.csv", hull_csv);

    Json summary;
    summary["schema"] = kSchemaTag;
    summary["config"] = Json::parse(config_to_json(cfg));
    summary["kernels_backend"] = kernels::backend_name(kernels::active_backend());
    summary["target"] = {{"cover_delta_rad", to_jnum(target.cover_delta)},
                         {"final_cover", {{"rotation", rotation_json(target.final_cover.center)},
                                          {"radius_rad", to_jnum(target.final_cover.radius)}}}};
    const ResidualReport& rr = solution.residuals;
    const ActiveSet& as = solution.active;
    const Theorem1Report& t1 = solution.theorem1;
    summary["solution"] = {
        {"status", to_string(solution.solver.status)},
        {"objective", to_jnum(solution.objective)},
        {"r_delta_n", to_jnum(solution.decision.r_delta)},
        {"inner_iterations", solution.solver.iterations},
        {"outer_passes", static_cast<int>(solution.solver.trace.size())},
        {"max_violation", to_jnum(solution.solver.max_violation)},
        {"stationarity", to_jnum(solution.solver.stationarity)},
        {"residuals",
         {{"control", to_jnum(rr.control)},
          {"state_box", to_jnum(rr.state_box)},
          {"velocity", to_jnum(rr.velocity)},
          {"obstacles", to_jnum(rr.obstacles)},
          {"endpoint", to_jnum(rr.endpoint)},
          {"containment", to_jnum(rr.containment)},
          {"row_sum", to_jnum(rr.row_sum)}}},
        {"active",
         {{"control", as.control},
          {"state_box", as.state_box},
          {"velocity", as.velocity},
          {"obstacles", as.obstacles},
          {"endpoint", as.endpoint},
          {"lambda_at_zero", as.lambda_at_zero}}},
        {"y_nom_m", vec3_json(solution.y_nom)},
        {"nominal_endpoint_m", vec3_json(solution.nominal_endpoint)},
        {"theorem1",
         {{"trials", t1.trials},
          {"points_checked", t1.points_checked},
          {"violations", t1.violations},
          {"worst_margin", to_jnum(t1.worst_margin)}}}};
    write_atomic(dir / "summary.json", summary.dump(2) + "\n");
}

// ---------------------------------------------------------------------------
// readers

namespace {

GraspPolytope read_polytope(const fs::path& dir) {
    GraspPolytope poly;
    for (const auto& row : read_csv(dir / "polytope_vertices.csv", kVertexCols).rows)
        poly.vertices.push_back({row[0], row[1], row[2]});
    for (const auto& row : read_csv(dir / "polytope_planes.csv", kPlaneCols).rows)
        poly.halfspaces.push_back({{row[0], row[1], row[2]}, row[3]});
    return poly;
}

TargetReachResult read_target_common(const fs::path& dir, const Json& block,
                                     const std::string& path) {
    TargetReachResult out;
    out.cover_delta = from_jnum(block.at("cover_delta_rad"), path + ".cover_delta_rad");
    const Json& fc = block.at("final_cover");
    out.final_cover =
        GeodesicBall(rotation_from_json(fc.at("rotation"), path + ".final_cover.rotation"),
                     from_jnum(fc.at("radius_rad"), path + ".final_cover.radius_rad"));
    for (const auto& row : read_csv(dir / "target_megb.csv", kMegbCols).rows) {
        out.times.push_back(row[0]);
        Eigen::Matrix3d m;
        for (int i = 0; i < 9; ++i) m(i / 3, i % 3) = row[1 + i];
        out.megb.emplace_back(Rotation::from_matrix(m), row[10]);
    }
    out.polytope = read_polytope(dir);
    return out;
}

Json parse_summary(const fs::path& file) {
    Json doc;
    try {
        doc = Json::parse(read_file(file));
    } catch (const Json::parse_error& e) {
        throw ConfigError("artifact: " + file.string() + ": " + e.what());
    }
    if (!doc.is_object() || doc.value("schema", std::string()) != kSchemaTag)
        throw ConfigError("artifact: " + file.string() + " has an unknown schema");
    return doc;
}

}  // namespace

TargetReachResult read_target_artifacts(const std::filesystem::path& dir) {
    const Json doc = parse_summary(dir / "target_summary.json");
    return read_target_common(dir, doc, "target_summary");
}

StoredRun read_run(const std::filesystem::path& dir) {
    const Json doc = parse_summary(dir / "summary.json");

    StoredRun run;
    run.config = parse_config(doc.at("config").dump());
    run.target = read_target_common(dir, doc.at("target"), "summary.target");
    run.config.scenario.target_polytope = run.target.polytope;
    run.config.scenario.target_vertices = static_cast<int>(run.target.polytope.vertices.size());

    const Scenario& sc = run.config.scenario;
    Solution& sol = run.solution;

    const CsvTable ctrl = read_csv(dir / "controls.csv", kControlCols);
    if (static_cast<int>(ctrl.rows.size()) != sc.chaser.segments)
        throw ConfigError("artifact: controls.csv row count does not match the config grid");
    sol.decision.u.resize(sc.chaser.segments, 3);
    for (const auto& row : ctrl.rows) {
        const int j = static_cast<int>(row[0]);
        if (j < 0 || j >= sc.chaser.segments)
            throw ConfigError("artifact: controls.csv has an out-of-range segment");
        sol.decision.u.row(j) = Eigen::RowVector3d(row[1], row[2], row[3]);
    }

    sol.decision.lambda =
        Eigen::MatrixXd::Zero(run.config.scenario.target_vertices, sc.cover_size);
    for (const auto& row : read_csv(dir / "weights.csv", kWeightCols).rows) {
        const int i = static_cast<int>(row[0]);
        const int k = static_cast<int>(row[1]);
        if (i < 0 || i >= sol.decision.lambda.rows() || k < 0 || k >= sc.cover_size)
            throw ConfigError("artifact: weights.csv has an out-of-range index");
        sol.decision.lambda(i, k) = row[2];
    }

    for (const auto& row : read_csv(dir / "snapshots.csv", kSnapshotCols).rows) {
        const int k = static_cast<int>(row[1]);
        if (sol.snapshots.empty() || sol.snapshots.back().time != row[0]) {
            if (k != 0) throw ConfigError("artifact: snapshots.csv sample order is broken");
            ReachSnapshot snap;
            snap.time = row[0];
            snap.epsilon = sc.eps;
            snap.points.resize(0, 6);
            sol.snapshots.push_back(snap);
        }
        ReachSnapshot& snap = sol.snapshots.back();
        if (k != snap.points.rows())
            throw ConfigError("artifact: snapshots.csv sample order is broken");
        snap.points.conservativeResize(k + 1, 6);
        for (int c = 0; c < 6; ++c) snap.points(k, c) = row[2 + c];
    }

    const CsvTable tubes = read_csv(dir / "rtc_tubes.csv", kTubeCols);
    const CsvTable hull = read_csv(dir / "rtc_hull.csv", kHullCols);
    for (const auto& row : tubes.rows) {
        const int i = static_cast<int>(row[0]);
        if (i < 0) throw ConfigError("artifact: rtc_tubes.csv has a negative interval");
        if (i >= static_cast<int>(sol.rtc.intervals.size()))
            sol.rtc.intervals.resize(i + 1);
        RtcInterval& iv = sol.rtc.intervals[i];
        iv.t0 = row[1];
        iv.t1 = row[2];
        iv.tubes.emplace_back(Eigen::Vector3d(row[4], row[5], row[6]),
                              Eigen::Vector3d(row[7], row[8], row[9]), row[10], row[11],
                              Eigen::Vector3d(row[12], row[13], row[14]),
                              Eigen::Vector3d(row[15], row[16], row[17]));
    }
    for (const auto& row : hull.rows) {
        const int i = static_cast<int>(row[0]);
        if (i < 0 || i >= static_cast<int>(sol.rtc.intervals.size()))
            throw ConfigError("artifact: rtc_hull.csv interval is out of range");
        sol.rtc.intervals[i].hull.push_back({{row[1], row[2], row[3]}, row[4]});
    }

    const Json& sj = doc.at("solution");
    const std::string status = sj.at("status").get<std::string>();
    if (status == "converged") {
        sol.solver.status = SolveStatus::Converged;
    } else if (status == "infeasible") {
        sol.solver.status = SolveStatus::Infeasible;
    } else if (status == "iteration_cap") {
        sol.solver.status = SolveStatus::IterationCap;
    } else {
        throw ConfigError("artifact: summary.solution.status is unknown");
    }
    sol.objective = from_jnum(sj.at("objective"), "summary.solution.objective");
    sol.decision.r_delta = from_jnum(sj.at("r_delta_n"), "summary.solution.r_delta_n");
    sol.solver.iterations = sj.at("inner_iterations").get<int>();
    sol.solver.max_violation = from_jnum(sj.at("max_violation"), "summary.solution.max_violation");
    sol.solver.stationarity = from_jnum(sj.at("stationarity"), "summary.solution.stationarity");
    const Json& rj = sj.at("residuals");
    sol.residuals.control = from_jnum(rj.at("control"), "summary.residuals.control");
    sol.residuals.state_box = from_jnum(rj.at("state_box"), "summary.residuals.state_box");
    sol.residuals.velocity = from_jnum(rj.at("velocity"), "summary.residuals.velocity");
    sol.residuals.obstacles = from_jnum(rj.at("obstacles"), "summary.residuals.obstacles");
    sol.residuals.endpoint = from_jnum(rj.at("endpoint"), "summary.residuals.endpoint");
    sol.residuals.containment = from_jnum(rj.at("containment"), "summary.residuals.containment");
    sol.residuals.row_sum = from_jnum(rj.at("row_sum"), "summary.residuals.row_sum");
    const Json& aj = sj.at("active");
    sol.active.control = aj.at("control").get<int>();
    sol.active.state_box = aj.at("state_box").get<int>();
    sol.active.velocity = aj.at("velocity").get<int>();
    sol.active.obstacles = aj.at("obstacles").get<int>();
    sol.active.endpoint = aj.at("endpoint").get<bool>();
    sol.active.lambda_at_zero = aj.at("lambda_at_zero").get<int>();
    const Json& yj = sj.at("y_nom_m");
    const Json& ej = sj.at("nominal_endpoint_m");
    for (int i = 0; i < 3; ++i) {
        sol.y_nom[i] = from_jnum(yj.at(i), "summary.solution.y_nom_m");
        sol.nominal_endpoint[i] = from_jnum(ej.at(i), "summary.solution.nominal_endpoint_m");
    }
    const Json& tj = sj.at("theorem1");
    sol.theorem1.trials = tj.at("trials").get<int>();
    sol.theorem1.points_checked = tj.at("points_checked").get<long long>();
    sol.theorem1.violations = tj.at("violations").get<int>();
    sol.theorem1.worst_margin = from_jnum(tj.at("worst_margin"), "summary.theorem1.worst_margin");
    return run;
}

// ---------------------------------------------------------------------------
// verification

std::vector<CheckResult> verify_run(const StoredRun& run, int trials, std::uint64_t seed) {
    std::vector<CheckResult> out;
    const auto push = [&out](const std::string& name, bool ok, const std::string& detail) {
        out.push_back({name, ok, detail});
    };

    const Scenario& sc = run.config.scenario;
    const Solution& sol = run.solution;
    const double tol = run.config.options.solver.feasibility_tol;

    sc.validate();
    const AssembledNlp nlp = assemble_nlp(sc);
    const Eigen::VectorXd z = pack_decision(sol.decision, nlp.layout);

    const bool in_box = (z.array() >= nlp.problem.lower.array() - 1e-9).all() &&
                        (z.array() <= nlp.problem.upper.array() + 1e-9).all();
    push("decision-bounds", in_box, in_box ? "all variables inside their boxes" : "box violated");

    const Eigen::VectorXd gin = nlp.problem.ineq(z);
    const NlpLayout& lay = nlp.layout;
    const auto family = [&](const char* name, int offset, int rows) {
        const double worst =
            rows > 0 ? gin.segment(offset, rows).maxCoeff()
                     : -std::numeric_limits<double>::infinity();
        push(name, worst <= tol, "worst margin " + fmt_short(worst) + " (tol " + fmt_short(tol) + ")");
    };
    family("control-bounds", lay.control_offset(), lay.control_rows);
    family("state-box", lay.state_offset(), lay.state_rows);
    family("velocity-box", lay.velocity_offset(), lay.velocity_rows);
    family("obstacle-clearance", lay.obstacle_offset(), lay.obstacle_rows);
    family("endpoint-tolerance", lay.endpoint_offset(), lay.endpoint_rows);

    const Eigen::VectorXd ceq = nlp.problem.eq(z);
    const double worst_cont = ceq.head(lay.containment_rows).cwiseAbs().maxCoeff();
    push("vertex-containment", worst_cont <= tol,
         "worst residual " + fmt_short(worst_cont) + " (tol " + fmt_short(tol) + ")");
    const double worst_rows = ceq.tail(lay.rowsum_rows).cwiseAbs().maxCoeff();
    push("weight-row-sums", worst_rows <= tol,
         "worst residual " + fmt_short(worst_rows) + " (tol " + fmt_short(tol) + ")");

    // stored snapshots must be reproducible from the stored decision
    const ControlTube tube =
        ControlTube::make(sol.decision.u, sol.decision.r_delta, sc.cover_size);
    const std::vector<ReachSnapshot> rebuilt = reach_snapshots(sc.chaser, tube, sc.eps);
    double snap_diff = 0.0;
    bool snap_shape = rebuilt.size() == sol.snapshots.size();
    for (std::size_t i = 0; snap_shape && i < rebuilt.size(); ++i) {
        snap_shape = rebuilt[i].points.rows() == sol.snapshots[i].points.rows();
        if (!snap_shape) break;
        snap_diff = std::max(snap_diff, std::abs(rebuilt[i].time - sol.snapshots[i].time));
        snap_diff = std::max(
            snap_diff, (rebuilt[i].points - sol.snapshots[i].points).cwiseAbs().maxCoeff());
    }
    push("snapshot-consistency", snap_shape && snap_diff <= 1e-9,
         snap_shape ? "max deviation " + fmt_short(snap_diff) : "snapshot shape mismatch");

    // every stored hull plane must contain every stored tube of its interval
    double hull_worst = -std::numeric_limits<double>::infinity();
    for (const RtcInterval& iv : sol.rtc.intervals)
        for (const geom::Plane& pl : iv.hull)
            for (const Ellipsoid& e : iv.tubes)
                hull_worst = std::max(hull_worst, ellipsoid_halfspace_margin(e, pl));
    push("tube-hull-support", hull_worst <= 1e-9,
         "worst support margin " + fmt_short(hull_worst));

    const double nominal_miss = (sol.nominal_endpoint - sol.y_nom).norm();
    push("nominal-endpoint", nominal_miss <= sc.nominal_tol,
         "miss " + fmt_short(nominal_miss) + " (tol " + fmt_short(sc.nominal_tol) + ")");

    if (trials <= 0) {
        push("tube-containment", true, "skipped (no trials)");
        push("grasp-validation", true, "skipped (no trials)");
        return out;
    }

    const Theorem1Report t1 = audit_theorem1(sc.chaser, tube, sol.rtc, trials, seed);
    push("tube-containment", t1.violations == 0,
         std::to_string(t1.violations) + " violations over " +
             std::to_string(t1.points_checked) + " points, worst margin " +
             fmt_short(t1.worst_margin));

    const ValidationReport vr = validate_solution(sol, sc, trials, seed);
    push("grasp-validation", vr.grasp_outside == 0 && vr.endpoint_outside == 0,
         std::to_string(vr.grasp_outside) + " grasp / " + std::to_string(vr.endpoint_outside) +
             " endpoint escapes over " + std::to_string(vr.trials) + " trials, worst miss " +
             fmt_short(vr.worst_miss));
    return out;
}

// ---------------------------------------------------------------------------
// plot exports

void write_plot_exports(const StoredRun& run, const std::filesystem::path& dir) {
    std::string radius_csv = csv_header({"time_s", "radius_rad"});
    for (std::size_t i = 0; i < run.target.megb.size(); ++i)
        csv_row(radius_csv, {run.target.times[i], run.target.megb[i].radius});
    write_atomic(dir / "megb_radius.csv", radius_csv);

    const double dt = run.config.scenario.chaser.dt;
    std::string ctrl_csv = csv_header({"time_s", "ux_n", "uy_n", "uz_n", "magnitude_n"});
    for (int j = 0; j < run.solution.decision.u.rows(); ++j) {
        const Eigen::RowVector3d u = run.solution.decision.u.row(j);
        csv_row(ctrl_csv, {j * dt, u.x(), u.y(), u.z(), u.norm()});
    }
    write_atomic(dir / "controls_per_axis.csv", ctrl_csv);

    std::string extent_csv = csv_header(
        {"time_s", "min_x_m", "max_x_m", "min_y_m", "max_y_m", "min_z_m", "max_z_m"});
    for (const ReachSnapshot& snap : run.solution.snapshots) {
        std::vector<double> row = {snap.time};
        for (int axis = 0; axis < 3; ++axis) {
            row.push_back(snap.points.col(axis).minCoeff());
            row.push_back(snap.points.col(axis).maxCoeff());
        }
        csv_row(extent_csv, row);
    }
    write_atomic(dir / "reach_extent.csv", extent_csv);

    std::string vert_csv = csv_header(kVertexCols);
    for (const Eigen::Vector3d& v : run.target.polytope.vertices)
        csv_row(vert_csv, {v.x(), v.y(), v.z()});
    write_atomic(dir / "polytope_vertices.csv", vert_csv);
}

}  // namespace reachkit
