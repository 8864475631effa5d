#pragma once

// Delaunay refinement (Ruppert style, conforming) of a region bounded by
// curved segments. Segments carry their exact curve so that splits land on
// the true boundary; lengths and sizes are measured in the hyperbolic metric.

#include "scherk/detail/delaunay.hpp"
#include "scherk/hyperbolic.hpp"

#include <algorithm>
#include <cstdint>
#include <functional>
#include <unordered_set>
#include <vector>

namespace scherk::detail {

struct Curve {
    std::function<Complex(double)> at;  // parameter is hyperbolic arclength
    int key = 0;                        // caller-defined boundary identity
};

struct Seg {
    int a = 0, b = 0;  // vertex ids in the triangulation
    int curve = 0;
    double ta = 0.0, tb = 0.0;
};

struct CoreMesh {
    std::vector<Complex> vertices;
    std::vector<std::array<int, 3>> triangles;  // CCW
    struct Edge {
        int a, b, key;
    };
    std::vector<Edge> segments;
};

class CoreMesher {
public:
    CoreMesher() = default;

    int add_curve(std::function<Complex(double)> at, int key) {
        curves_.push_back({std::move(at), key});
        return static_cast<int>(curves_.size()) - 1;
    }

    int add_point(Complex p) { return dt_.insert(p); }

    void add_hole(Complex seed) { holes_.push_back(seed); }

    /// Samples curve c on [t0, t1] with pieces of hyperbolic length <= h.
    /// Endpoint vertices may be supplied to share corners between curves.
    std::vector<int> add_chain(int c, double t0, double t1, double h, int first = -1, int last = -1) {
        int pieces = std::max(1, static_cast<int>(std::ceil(std::fabs(t1 - t0) / h - 1e-9)));
        std::vector<int> ids;
        ids.push_back(first >= 0 ? first : add_point(curves_[static_cast<std::size_t>(c)].at(t0)));
        for (int i = 1; i < pieces; ++i) {
            ids.push_back(add_point(curves_[static_cast<std::size_t>(c)].at(t0 + (t1 - t0) * i / pieces)));
        }
        ids.push_back(last >= 0 ? last : add_point(curves_[static_cast<std::size_t>(c)].at(t1)));
        for (int i = 0; i < pieces; ++i) {
            segs_.push_back({ids[static_cast<std::size_t>(i)], ids[static_cast<std::size_t>(i) + 1], c,
                             t0 + (t1 - t0) * i / pieces, t0 + (t1 - t0) * (i + 1) / pieces});
        }
        return ids;
    }

    [[nodiscard]] Complex point(int v) const { return dt_.point(v); }

    void refine(double h, double floor, double grading = 1.0) {
        h_ = h;
        floor_ = floor;
        grading_ = grading;
        for (int round = 0;; ++round) {
            if (round > 200000) throw Error(ErrorCode::MeshFailure, "refinement did not terminate");
            split_encroached();
            classify();
            bool progress = false;
            bool resplit = false;
            const int count = static_cast<int>(dt_.triangles().size());
            for (int t = 0; t < count && !resplit; ++t) {
                if (!dt_.tri(t).alive || !inside_[static_cast<std::size_t>(t)] || skip_[static_cast<std::size_t>(t)])
                    continue;
                if (!is_bad(t)) continue;
                const auto& tr = dt_.tri(t);
                Complex c = circumcenter(dt_.point(tr.v[0]), dt_.point(tr.v[1]), dt_.point(tr.v[2]));
                std::vector<std::size_t> enc;
                bool short_enc = false;
                for (std::size_t s = 0; s < segs_.size(); ++s) {
                    if (!encroaches(segs_[s], c)) continue;
                    if (seg_length(segs_[s]) > floor_) {
                        enc.push_back(s);
                    } else {
                        short_enc = true;
                    }
                }
                if (!enc.empty()) {
                    for (auto it = enc.rbegin(); it != enc.rend(); ++it) split(*it);
                    resplit = true;
                    progress = true;
                    break;
                }
                int loc = std::abs(c) < 1.0 ? dt_.locate(c) : -1;
                if (short_enc || loc < 0 || !inside_[static_cast<std::size_t>(loc)]) {
                    skip_[static_cast<std::size_t>(t)] = 1;
                    continue;
                }
                dt_.insert(c);
                grow_flags(1);
                progress = true;
            }
            if (!progress) break;
        }
        split_encroached();
        classify();
    }

    [[nodiscard]] CoreMesh result() const {
        CoreMesh out;
        std::vector<int> map(dt_.points().size(), -1);
        for (int v = Delaunay::kSuperVertices; v < static_cast<int>(dt_.points().size()); ++v) {
            map[static_cast<std::size_t>(v)] = static_cast<int>(out.vertices.size());
            out.vertices.push_back(dt_.point(v));
        }
        for (int t = 0; t < static_cast<int>(dt_.triangles().size()); ++t) {
            const auto& tr = dt_.tri(t);
            if (!tr.alive || !inside_[static_cast<std::size_t>(t)]) continue;
            out.triangles.push_back({map[static_cast<std::size_t>(tr.v[0])], map[static_cast<std::size_t>(tr.v[1])],
                                     map[static_cast<std::size_t>(tr.v[2])]});
        }
        for (const auto& s : segs_) {
            out.segments.push_back({map[static_cast<std::size_t>(s.a)], map[static_cast<std::size_t>(s.b)],
                                    curves_[static_cast<std::size_t>(s.curve)].key});
        }
        return out;
    }

private:
    static std::uint64_t edge_key(int a, int b) {
        if (a > b) std::swap(a, b);
        return (static_cast<std::uint64_t>(static_cast<std::uint32_t>(a)) << 32) | static_cast<std::uint32_t>(b);
    }

    [[nodiscard]] double seg_length(const Seg& s) const { return std::fabs(s.tb - s.ta); }

    [[nodiscard]] bool encroaches(const Seg& s, Complex p) const {
        Complex a = dt_.point(s.a), b = dt_.point(s.b);
        double dot = ((a - p) * std::conj(b - p)).real();
        return dot < -1e-12 * std::abs(a - p) * std::abs(b - p);
    }

    [[nodiscard]] bool is_encroached(const Seg& s) const {
        int t1 = dt_.find_edge(s.a, s.b), t2 = dt_.find_edge(s.b, s.a);
        if (t1 < 0 && t2 < 0) return true;
        for (int t : {t1, t2}) {
            if (t < 0) continue;
            for (int v : dt_.tri(t).v) {
                if (v != s.a && v != s.b && !dt_.is_super(v) && encroaches(s, dt_.point(v))) return true;
            }
        }
        return false;
    }

    void split(std::size_t i) {
        Seg s = segs_[i];
        double tm = 0.5 * (s.ta + s.tb);
        int m = dt_.insert(curves_[static_cast<std::size_t>(s.curve)].at(tm));
        grow_flags(1);
        segs_[i] = {s.a, m, s.curve, s.ta, tm};
        segs_.push_back({m, s.b, s.curve, tm, s.tb});
    }

    void split_encroached() {
        for (bool again = true; again;) {
            again = false;
            for (std::size_t i = 0; i < segs_.size(); ++i) {
                const Seg& s = segs_[i];
                if (!is_encroached(s)) continue;
                bool missing = !dt_.has_edge(s.a, s.b);
                if (!missing && seg_length(s) <= floor_) continue;
                if (seg_length(s) < 1e-9) throw Error(ErrorCode::MeshFailure, "boundary recovery failed");
                split(i);
                again = true;
            }
        }
    }

    void grow_flags(int) {
        std::size_t n = dt_.triangles().size();
        // New triangles come from cavities of inside points.
        inside_.resize(n, 1);
        skip_.resize(n, 0);
    }

    void classify() {
        const auto& tris = dt_.triangles();
        std::unordered_set<std::uint64_t> walls;
        for (const auto& s : segs_) walls.insert(edge_key(s.a, s.b));
        inside_.assign(tris.size(), 1);
        skip_.resize(tris.size(), 0);
        std::vector<int> stack;
        for (int t = 0; t < static_cast<int>(tris.size()); ++t) {
            if (!tris[static_cast<std::size_t>(t)].alive) {
                inside_[static_cast<std::size_t>(t)] = 0;
                continue;
            }
            for (int v : tris[static_cast<std::size_t>(t)].v) {
                if (dt_.is_super(v)) {
                    stack.push_back(t);
                    break;
                }
            }
        }
        for (Complex h : holes_) stack.push_back(dt_.locate(h));
        for (int t : stack) inside_[static_cast<std::size_t>(t)] = 0;
        while (!stack.empty()) {
            int t = stack.back();
            stack.pop_back();
            const auto& tr = tris[static_cast<std::size_t>(t)];
            for (int i = 0; i < 3; ++i) {
                int n = tr.nb[i];
                if (n < 0 || !inside_[static_cast<std::size_t>(n)]) continue;
                if (walls.count(edge_key(tr.v[(i + 1) % 3], tr.v[(i + 2) % 3]))) continue;
                inside_[static_cast<std::size_t>(n)] = 0;
                stack.push_back(n);
            }
        }
    }

    [[nodiscard]] bool is_bad(int t) const {
        const auto& tr = dt_.tri(t);
        Complex p[3] = {dt_.point(tr.v[0]), dt_.point(tr.v[1]), dt_.point(tr.v[2])};
        double hyp_max = 0.0, hyp_min = 1e300, e_min = 1e300;
        for (int i = 0; i < 3; ++i) {
            Complex a = p[i], b = p[(i + 1) % 3];
            double d = hyp_distance(a, b);
            hyp_max = std::max(hyp_max, d);
            hyp_min = std::min(hyp_min, d);
            e_min = std::min(e_min, std::abs(a - b));
        }
        Complex centroid = (p[0] + p[1] + p[2]) / 3.0;
        if (hyp_max > h_ / (1.0 + (grading_ - 1.0) * std::norm(centroid))) return true;
        if (hyp_min < floor_) return false;
        double r = std::abs(circumcenter(p[0], p[1], p[2]) - p[0]);
        return r / e_min > std::numbers::sqrt2;
    }

    Delaunay dt_;
    std::vector<Curve> curves_;
    std::vector<Seg> segs_;
    std::vector<Complex> holes_;
    std::vector<char> inside_;
    std::vector<char> skip_;
    double h_ = 1.0;
    double floor_ = 0.1;
    double grading_ = 1.0;
};

}  // namespace scherk::detail
