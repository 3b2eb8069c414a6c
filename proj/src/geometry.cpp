#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <memory>
#include <numeric>
#include <stdexcept>
#include <unordered_map>
#include <vector>

#include "reachkit/geometry.hpp"
#include "reachkit/rng.hpp"

namespace reachkit::geom {

namespace {

struct BuildFail : std::exception {
    const char* what() const noexcept override { return "quickhull build failure"; }
};

struct Face {
    int a, b, c;
    Eigen::Vector3d n;   // unit outward normal of the working triangle
    double d;            // n . vertex_a
    std::vector<int> conflicts;
    bool alive = true;

    double margin(const Eigen::Vector3d& x) const { return n.dot(x) - d; }
};

uint64_t edge_key(int u, int v) {
    return (static_cast<uint64_t>(static_cast<uint32_t>(u)) << 32) | static_cast<uint32_t>(v);
}

// Quickhull over a fixed point set. Throws BuildFail on numerical
// inconsistency (degenerate new faces, broken horizon loops); the caller
// retries with a joggled copy of the input.
class Builder {
  public:
    Builder(const std::vector<Eigen::Vector3d>& pts, double scale)
        : pts_(pts), eps_(1e-10 * scale) {}

    void run() {
        init_simplex();
        std::vector<int> queue = {0, 1, 2, 3};
        std::size_t cursor = 0;
        const std::size_t cap = 6 * pts_.size() + 1000;
        std::size_t rounds = 0;
        while (cursor < queue.size()) {
            const int fid = queue[cursor++];
            if (!faces_[fid].alive || faces_[fid].conflicts.empty()) continue;
            if (++rounds > cap) throw BuildFail{};
            for (const int nf : insert_apex(fid)) queue.push_back(nf);
        }
    }

    const std::vector<Face>& faces() const { return faces_; }

  private:
    void init_simplex() {
        const int n = static_cast<int>(pts_.size());
        auto lex_less = [&](int i, int j) {
            const auto &a = pts_[i], &b = pts_[j];
            if (a.x() != b.x()) return a.x() < b.x();
            if (a.y() != b.y()) return a.y() < b.y();
            return a.z() < b.z();
        };
        int p0 = 0;
        for (int i = 1; i < n; ++i)
            if (lex_less(i, p0)) p0 = i;

        int p1 = -1;
        double best = eps_;
        for (int i = 0; i < n; ++i) {
            const double d = (pts_[i] - pts_[p0]).norm();
            if (d > best) best = d, p1 = i;
        }
        if (p1 < 0) throw std::invalid_argument("convex_hull: degenerate input (single point)");

        const Eigen::Vector3d axis = (pts_[p1] - pts_[p0]).normalized();
        int p2 = -1;
        best = eps_;
        for (int i = 0; i < n; ++i) {
            const Eigen::Vector3d r = pts_[i] - pts_[p0];
            const double d = (r - axis.dot(r) * axis).norm();
            if (d > best) best = d, p2 = i;
        }
        if (p2 < 0) throw std::invalid_argument("convex_hull: degenerate input (collinear)");

        Eigen::Vector3d nrm = (pts_[p1] - pts_[p0]).cross(pts_[p2] - pts_[p0]).normalized();
        int p3 = -1;
        best = eps_;
        for (int i = 0; i < n; ++i) {
            const double d = std::abs(nrm.dot(pts_[i] - pts_[p0]));
            if (d > best) best = d, p3 = i;
        }
        if (p3 < 0) throw std::invalid_argument("convex_hull: degenerate input (coplanar)");
        if (nrm.dot(pts_[p3] - pts_[p0]) > 0.0) std::swap(p1, p2);

        interior_ = 0.25 * (pts_[p0] + pts_[p1] + pts_[p2] + pts_[p3]);
        add_face(p0, p1, p2);
        add_face(p0, p2, p3);
        add_face(p0, p3, p1);
        add_face(p1, p3, p2);

        for (int i = 0; i < n; ++i) {
            if (i == p0 || i == p1 || i == p2 || i == p3) continue;
            for (Face& f : faces_) {
                if (f.margin(pts_[i]) > eps_) {
                    f.conflicts.push_back(i);
                    break;
                }
            }
        }
    }

    int add_face(int a, int b, int c) {
        Face f;
        f.a = a, f.b = b, f.c = c;
        const Eigen::Vector3d nr = (pts_[b] - pts_[a]).cross(pts_[c] - pts_[a]);
        const double len = nr.norm();
        if (!(len > 1e-30)) throw BuildFail{};
        f.n = nr / len;
        f.d = f.n.dot(pts_[a]);
        if (f.margin(interior_) > 0.0) throw BuildFail{};
        const int id = static_cast<int>(faces_.size());
        faces_.push_back(std::move(f));
        for (const auto [u, v] : {std::pair{a, b}, {b, c}, {c, a}}) {
            if (!edges_.emplace(edge_key(u, v), id).second) throw BuildFail{};
        }
        return id;
    }

    void drop_face(int fid) {
        Face& f = faces_[fid];
        f.alive = false;
        for (const auto [u, v] : {std::pair{f.a, f.b}, {f.b, f.c}, {f.c, f.a}}) {
            edges_.erase(edge_key(u, v));
        }
    }

    // Replaces all faces visible from the farthest conflict point of `seed`
    // with a cone of new faces over the horizon loop; returns new face ids.
    std::vector<int> insert_apex(int seed) {
        const Face& sf = faces_[seed];
        int apex = sf.conflicts[0];
        double far = sf.margin(pts_[apex]);
        for (const int pid : sf.conflicts) {
            const double m = sf.margin(pts_[pid]);
            if (m > far) far = m, apex = pid;
        }
        const Eigen::Vector3d& ap = pts_[apex];

        std::vector<int> visible = {seed};
        std::vector<char> seen(faces_.size(), 0);
        seen[seed] = 1;
        std::vector<std::pair<int, int>> horizon;
        for (std::size_t k = 0; k < visible.size(); ++k) {
            const Face f = faces_[visible[k]];
            for (const auto [u, v] : {std::pair{f.a, f.b}, {f.b, f.c}, {f.c, f.a}}) {
                const auto it = edges_.find(edge_key(v, u));
                if (it == edges_.end()) throw BuildFail{};
                const int tid = it->second;
                if (seen[tid]) continue;
                if (faces_[tid].margin(ap) > eps_) {
                    seen[tid] = 1;
                    visible.push_back(tid);
                } else {
                    horizon.emplace_back(u, v);
                }
            }
        }

        std::vector<int> orphans;
        for (const int fid : visible) {
            orphans.insert(orphans.end(), faces_[fid].conflicts.begin(),
                           faces_[fid].conflicts.end());
            drop_face(fid);
        }

        std::vector<int> fresh;
        fresh.reserve(horizon.size());
        for (const auto& [u, v] : horizon) fresh.push_back(add_face(u, v, apex));

        for (const int pid : orphans) {
            if (pid == apex) continue;
            for (const int fid : fresh) {
                if (faces_[fid].margin(pts_[pid]) > eps_) {
                    faces_[fid].conflicts.push_back(pid);
                    break;
                }
            }
        }
        return fresh;
    }

    const std::vector<Eigen::Vector3d>& pts_;
    double eps_;
    Eigen::Vector3d interior_;
    std::vector<Face> faces_;
    std::unordered_map<uint64_t, int> edges_;
};

double cloud_scale(const std::vector<Eigen::Vector3d>& pts) {
    double s = 0.0;
    for (const auto& p : pts) s = std::max(s, p.cwiseAbs().maxCoeff());
    return std::max(s, 1.0);
}

}  // namespace

Hull convex_hull(const std::vector<Eigen::Vector3d>& points) {
    if (points.size() < 4) throw std::invalid_argument("convex_hull: need at least 4 points");
    const double scale = cloud_scale(points);

    // Collapse duplicates so the simplex search and edge map stay sane.
    std::vector<int> order(points.size());
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](int i, int j) {
        const auto &a = points[i], &b = points[j];
        if (a.x() != b.x()) return a.x() < b.x();
        if (a.y() != b.y()) return a.y() < b.y();
        return a.z() < b.z();
    });
    std::vector<int> keep;
    const double dup_tol = 1e-12 * scale;
    for (const int id : order) {
        if (!keep.empty() && (points[id] - points[keep.back()]).norm() <= dup_tol) continue;
        keep.push_back(id);
    }
    if (keep.size() < 4) throw std::invalid_argument("convex_hull: degenerate input (duplicates)");

    std::vector<Eigen::Vector3d> work(keep.size());
    for (std::size_t i = 0; i < keep.size(); ++i) work[i] = points[keep[i]];

    // Near-coplanar clouds can defeat plain quickhull; retry with a tiny
    // deterministic joggle. Plane offsets are recomputed against the original
    // points afterwards, so the joggle never breaks outer containment.
    const Builder* done = nullptr;
    std::vector<Eigen::Vector3d> joggled;
    std::unique_ptr<Builder> built;
    double amp = 1e-9 * scale;
    for (int attempt = 0; attempt < 4; ++attempt) {
        try {
            if (attempt == 0) {
                built = std::make_unique<Builder>(work, scale);
            } else {
                joggled = work;
                Rng jig = Rng::for_trial(0x9e3779b97f4a7c15ULL, static_cast<uint64_t>(attempt));
                for (auto& p : joggled)
                    p += Eigen::Vector3d(jig.uniform(-amp, amp), jig.uniform(-amp, amp),
                                         jig.uniform(-amp, amp));
                amp *= 10.0;
                built = std::make_unique<Builder>(joggled, scale);
            }
            built->run();
            done = built.get();
            break;
        } catch (const BuildFail&) {
            continue;
        }
    }
    if (!done) throw std::runtime_error("convex_hull: construction failed after joggle retries");

    std::vector<int> remap(work.size(), -1);
    Hull hull;
    for (const Face& f : done->faces()) {
        if (!f.alive) continue;
        std::array<int, 3> tri{};
        int slot = 0;
        for (const int vid : {f.a, f.b, f.c}) {
            if (remap[vid] < 0) {
                remap[vid] = static_cast<int>(hull.vertices.size());
                hull.vertices.push_back(work[vid]);  // original, un-joggled coordinates
            }
            tri[slot++] = remap[vid];
        }
        hull.faces.push_back(tri);
        double support = -std::numeric_limits<double>::infinity();
        for (const auto& q : points) support = std::max(support, f.n.dot(q));
        hull.planes.push_back(Plane{f.n, -support});
    }
    return hull;
}

double hull_volume(const Hull& hull) {
    Eigen::Vector3d centroid = Eigen::Vector3d::Zero();
    for (const auto& v : hull.vertices) centroid += v;
    centroid /= static_cast<double>(hull.vertices.size());
    double vol = 0.0;
    for (const auto& [a, b, c] : hull.faces) {
        vol += (hull.vertices[a] - centroid)
                   .cross(hull.vertices[b] - centroid)
                   .dot(hull.vertices[c] - centroid);
    }
    return std::abs(vol) / 6.0;
}

kernels::PlaneSoA to_soa(const std::vector<Plane>& planes) {
    kernels::PlaneSoA soa;
    for (const auto& pl : planes) soa.add(pl.p.x(), pl.p.y(), pl.p.z(), pl.h);
    return soa;
}

double max_margin(const std::vector<Plane>& planes, const Eigen::Vector3d& x) {
    return kernels::max_plane_margin(to_soa(planes), x.x(), x.y(), x.z());
}

TetFan::TetFan(const Hull& hull) : hull_(hull) {
    apex_ = Eigen::Vector3d::Zero();
    for (const auto& v : hull_.vertices) apex_ += v;
    apex_ /= static_cast<double>(hull_.vertices.size());
    for (const auto& face : hull_.faces) {
        Eigen::Matrix3d m;
        m.col(0) = hull_.vertices[face[0]] - apex_;
        m.col(1) = hull_.vertices[face[1]] - apex_;
        m.col(2) = hull_.vertices[face[2]] - apex_;
        if (std::abs(m.determinant()) < 1e-300) continue;  // sliver, another tet covers it
        tets_.push_back(Tet{face, m.inverse()});
    }
    if (tets_.empty()) throw std::invalid_argument("TetFan: polytope has no usable tetrahedra");
}

std::vector<double> TetFan::decompose(const Eigen::Vector3d& x, double tol) const {
    const Tet* best = nullptr;
    Eigen::Vector3d best_t;
    double best_score = -std::numeric_limits<double>::infinity();
    for (const Tet& tet : tets_) {
        const Eigen::Vector3d t = tet.inv * (x - apex_);
        const double score = std::min(std::min(t.minCoeff(), 1.0 - t.sum()), 0.0);
        if (score > best_score) {
            best_score = score;
            best = &tet;
            best_t = t;
        }
        if (score == 0.0) break;
    }
    if (!best || best_score < -tol)
        throw std::domain_error("TetFan::decompose: point outside polytope");

    Eigen::Vector3d t = best_t.cwiseMax(0.0);
    double apex_w = std::max(1.0 - t.sum(), 0.0);
    const double total = t.sum() + apex_w;
    t /= total;
    apex_w /= total;

    const double per_vertex = apex_w / static_cast<double>(hull_.vertices.size());
    std::vector<double> w(hull_.vertices.size(), per_vertex);
    for (int k = 0; k < 3; ++k) w[best->face[k]] += t[k];
    return w;
}

}  // namespace reachkit::geom
