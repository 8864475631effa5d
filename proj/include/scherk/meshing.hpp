#pragma once

// Mesh generation for the truncated ideal polygon and for the annuli
// A_n = D_n \ D_1.
//
// Each domain is split into a compact core and thin ends near the ideal
// vertices. The core is meshed by Delaunay refinement against the exact
// boundary curves. The ends (cusps of the truncated polygon, corner spikes
// of D_n) are meshed as structured ladders in the upper half-plane frame
// that sends the ideal vertex to infinity: there horocycles are horizontal
// lines and the two sides are vertical lines or circular arcs, so rows of
// constant height and columns at fixed fractions of the width give
// elements of uniform hyperbolic length along the end, however thin it is.
//
// For regular polygons with symmetric data the core is meshed on one
// fundamental sector of the dihedral symmetry and replicated, so the mesh is
// exactly invariant under the symmetry group.

#include "scherk/detail/refine.hpp"
#include "scherk/domain.hpp"
#include "scherk/mesh.hpp"

#include <algorithm>
#include <map>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

namespace scherk {

namespace detail {

enum class CurveKind : int { edge = 1, horocycle = 2, cut = 3, inner = 4, outer = 5, mirror = 6 };

constexpr int kKeyStride = 100000;
inline int curve_key(CurveKind kind, std::size_t i) { return static_cast<int>(kind) * kKeyStride + static_cast<int>(i); }
inline CurveKind key_kind(int key) { return static_cast<CurveKind>(key / kKeyStride); }
inline std::size_t key_index(int key) { return static_cast<std::size_t>(key % kKeyStride); }

inline std::string boundary_tag(const IdealPolygon& poly, int key) {
    std::size_t i = key_index(key);
    switch (key_kind(key)) {
        case CurveKind::edge: return std::string(to_string(poly.label(i))) + "_" + std::to_string(i);
        case CurveKind::horocycle: return "c_" + std::to_string(i);
        case CurveKind::inner: return "gamma1";
        case CurveKind::outer: return "gamman";
        default: return {};
    }
}

struct Piece {
    std::function<Complex(double)> at;
    int key = 0;
    double t0 = 0.0, t1 = 0.0;
    std::optional<Complex> start;  // exact start point when known
};

/// Adds a closed loop; each piece ends where the next one starts.
inline void add_loop(CoreMesher& m, const std::vector<Piece>& pieces, double h) {
    std::vector<int> starts;
    for (const auto& p : pieces) starts.push_back(m.add_point(p.start ? *p.start : p.at(p.t0)));
    for (std::size_t i = 0; i < pieces.size(); ++i) {
        const auto& p = pieces[i];
        int c = m.add_curve(p.at, p.key);
        m.add_chain(c, p.t0, p.t1, h, starts[i], starts[(i + 1) % pieces.size()]);
    }
}

/// Upper half-plane frame in which the ideal point v sits at infinity and
/// the Busemann level B_v = s is the line Im w = e^{-s}.
struct CuspFrame {
    Complex v;

    [[nodiscard]] Complex to_uhp(Complex z) const {
        Complex zr = z * std::conj(v);
        return Complex(0.0, 1.0) * (1.0 + zr) / (1.0 - zr);
    }
    [[nodiscard]] Complex to_disk(Complex w) const {
        return (w - Complex(0.0, 1.0)) / (w + Complex(0.0, 1.0)) * v;
    }
};

/// Geodesic through two points of the upper half-plane, as x(y) on the
/// branch containing the first point. Uses the stable quadratic root so
/// that huge circles (corners deep in a cusp) keep full precision.
class UhpGeodesic {
public:
    UhpGeodesic(Complex a, Complex b) {
        if (std::fabs(a.real() - b.real()) <= 1e-15 * (1.0 + std::abs(a) + std::abs(b))) {
            vertical_ = true;
            x0_ = a.real();
            return;
        }
        c_ = (std::norm(a) - std::norm(b)) / (2.0 * (a.real() - b.real()));
        k_ = std::norm(a) - 2.0 * a.real() * c_;
        branch_ = a.real() >= c_ ? 1.0 : -1.0;
    }

    [[nodiscard]] double x_at(double y) const {
        if (vertical_) return x0_;
        double q = k_ - y * y;
        double s = std::sqrt(std::max(0.0, c_ * c_ + q));
        if (c_ == 0.0 || (c_ > 0.0) == (branch_ > 0.0)) return c_ + branch_ * s;
        return -q / (c_ - branch_ * s);
    }

private:
    bool vertical_ = false;
    double x0_ = 0.0, c_ = 0.0, k_ = 0.0, branch_ = 1.0;
};

struct Assembly {
    std::vector<Complex> pts;
    std::vector<std::array<int, 3>> tris;
    std::unordered_map<std::uint64_t, std::string> tags;

    int add(Complex p) {
        pts.push_back(p);
        return static_cast<int>(pts.size()) - 1;
    }
    void tag(int a, int b, const std::string& t) { tags[undirected_key(a, b)] = t; }

    [[nodiscard]] TriangulatedDomain finish() const {
        TriangulatedDomain d;
        for (Complex p : pts) d.vertices.emplace_back(p);
        d.triangles = tris;
        std::unordered_map<std::uint64_t, int> count;
        for (const auto& t : tris)
            for (int i = 0; i < 3; ++i) ++count[undirected_key(t[i], t[(i + 1) % 3])];
        for (const auto& t : tris) {
            for (int i = 0; i < 3; ++i) {
                int a = t[i], b = t[(i + 1) % 3];
                if (count.at(undirected_key(a, b)) != 1) continue;
                auto it = tags.find(undirected_key(a, b));
                if (it == tags.end()) throw Error(ErrorCode::MeshFailure, "boundary edge without a tag");
                d.boundary.push_back({a, b, it->second});
            }
        }
        return d;
    }
};

struct LadderSpec {
    CuspFrame frame;
    std::vector<int> base;  // interface vertices, increasing x in the frame
    std::vector<double> ys;  // row heights; ys[0] is the interface row
    std::function<double(double)> x_left, x_right;
    double x_mirror = 0.0;  // diagonals are mirrored across this line
    std::optional<Complex> apex;  // the last row collapses to this point
    std::string left_tag, right_tag, top_tag;
};

inline void build_ladder(Assembly& as, const LadderSpec& spec) {
    const std::size_t n = spec.base.size() - 1;
    if (n < 1 || spec.ys.size() < 2) throw Error(ErrorCode::MeshFailure, "degenerate cusp ladder");
    double xl0 = spec.x_left(spec.ys[0]), xr0 = spec.x_right(spec.ys[0]);
    std::vector<double> frac(n + 1);
    for (std::size_t k = 0; k <= n; ++k) {
        double x = spec.frame.to_uhp(as.pts[static_cast<std::size_t>(spec.base[k])]).real();
        frac[k] = k == 0 ? 0.0 : k == n ? 1.0 : (x - xl0) / (xr0 - xl0);
    }
    std::vector<int> row = spec.base;
    const std::size_t rows = spec.ys.size() - 1;
    for (std::size_t j = 1; j <= rows; ++j) {
        double y = spec.ys[j];
        if (spec.apex && j == rows) {
            int a = as.add(*spec.apex);
            for (std::size_t k = 0; k < n; ++k) as.tris.push_back({row[k], row[k + 1], a});
            as.tag(row[0], a, spec.left_tag);
            as.tag(row[n], a, spec.right_tag);
            return;
        }
        double xl = spec.x_left(y), xr = spec.x_right(y);
        std::vector<int> next(n + 1);
        for (std::size_t k = 0; k <= n; ++k) {
            double x = k == 0 ? xl : k == n ? xr : xl + frac[k] * (xr - xl);
            next[k] = as.add(spec.frame.to_disk(Complex(x, y)));
        }
        for (std::size_t k = 0; k < n; ++k) {
            int a = row[k], b = row[k + 1], c = next[k + 1], d = next[k];
            double xc = xl0 + 0.5 * (frac[k] + frac[k + 1]) * (xr0 - xl0);
            if (xc < spec.x_mirror) {
                as.tris.push_back({a, b, c});
                as.tris.push_back({a, c, d});
            } else {
                as.tris.push_back({a, b, d});
                as.tris.push_back({b, c, d});
            }
        }
        as.tag(row[0], next[0], spec.left_tag);
        as.tag(row[n], next[n], spec.right_tag);
        row = std::move(next);
    }
    for (std::size_t k = 0; k < n; ++k) as.tag(row[k], row[k + 1], spec.top_tag);
}

inline std::vector<double> geometric_rows(double y0, double y1, double h) {
    int rows = std::max(1, static_cast<int>(std::ceil(std::log(y1 / y0) / h - 1e-9)));
    std::vector<double> ys;
    for (int j = 0; j <= rows; ++j) ys.push_back(j == rows ? y1 : y0 * std::pow(y1 / y0, static_cast<double>(j) / rows));
    return ys;
}

/// Level of the auxiliary horocycles separating the core from the ends:
/// horoballs at this level are pairwise at distance >= 1.
inline double base_cut_level(const IdealPolygon& poly) {
    double s = -1.0;
    for (std::size_t i = 0; i < poly.size(); ++i)
        for (std::size_t j = i + 1; j < poly.size(); ++j)
            s = std::min(s, std::log(0.5 * std::abs(poly.vertex(i).z() - poly.vertex(j).z())) - 0.5);
    return s;
}

struct Symmetry {
    std::size_t k = 0;  // polygon has 2k vertices
    double theta_v = 0.0;
};

inline std::optional<Symmetry> regular_symmetry(const IdealPolygon& poly) {
    const std::size_t n = poly.size();
    double step = kTwoPi / static_cast<double>(n);
    for (std::size_t i = 0; i < n; ++i) {
        double gap = std::remainder(poly.vertex(i + 1).theta() - poly.vertex(i).theta(), kTwoPi);
        if (gap < 0.0) gap += kTwoPi;
        if (std::fabs(gap - step) > 1e-12) return std::nullopt;
    }
    return Symmetry{poly.k(), poly.vertex(0).theta()};
}

/// Replicates a sector mesh by the dihedral group, merging vertices on the
/// mirror lines and dropping mirror segments.
inline CoreMesh replicate_sector(const CoreMesh& sector, const Symmetry& sym) {
    const std::size_t n = 2 * sym.k;
    CoreMesh out;
    std::map<std::pair<long long, long long>, std::vector<int>> grid;
    const double cell = 1e-9;
    auto find_or_add = [&](Complex p) {
        long long gx = static_cast<long long>(std::floor(p.real() / cell));
        long long gy = static_cast<long long>(std::floor(p.imag() / cell));
        for (long long dx = -1; dx <= 1; ++dx)
            for (long long dy = -1; dy <= 1; ++dy) {
                auto it = grid.find({gx + dx, gy + dy});
                if (it == grid.end()) continue;
                for (int id : it->second)
                    if (std::abs(out.vertices[static_cast<std::size_t>(id)] - p) < 1e-11) return id;
            }
        int id = static_cast<int>(out.vertices.size());
        out.vertices.push_back(p);
        grid[{gx, gy}].push_back(id);
        return id;
    };
    Complex mirror = std::polar(1.0, 2.0 * sym.theta_v);
    for (std::size_t j = 0; j < n; ++j) {
        Complex rot = std::polar(1.0, static_cast<double>(j) * std::numbers::pi / static_cast<double>(sym.k));
        for (int r = 0; r < 2; ++r) {
            std::vector<int> map;
            for (Complex p : sector.vertices) map.push_back(find_or_add((r ? mirror * std::conj(p) : p) * rot));
            for (const auto& t : sector.triangles) {
                std::array<int, 3> m{map[static_cast<std::size_t>(t[0])], map[static_cast<std::size_t>(t[1])],
                                     map[static_cast<std::size_t>(t[2])]};
                if (r) std::swap(m[1], m[2]);
                out.triangles.push_back(m);
            }
            for (const auto& s : sector.segments) {
                CurveKind kind = key_kind(s.key);
                if (kind == CurveKind::mirror) continue;
                std::size_t i = key_index(s.key);
                bool by_vertex = kind == CurveKind::horocycle || kind == CurveKind::cut;
                std::size_t img = r ? (by_vertex ? (n - i) % n : (2 * n - i - 1) % n) : i;
                img = (img + j) % n;
                out.segments.push_back({map[static_cast<std::size_t>(s.a)], map[static_cast<std::size_t>(s.b)],
                                        curve_key(kind, img)});
            }
        }
    }
    return out;
}

/// Loads a core mesh into an assembly: tags from segments, and interface
/// vertices (cut segments) grouped per ideal vertex.
inline std::map<std::size_t, std::vector<int>> load_core(Assembly& as, const CoreMesh& core, const IdealPolygon& poly) {
    for (Complex p : core.vertices) as.add(p);
    as.tris = core.triangles;
    std::map<std::size_t, std::vector<int>> cut;
    for (const auto& s : core.segments) {
        if (key_kind(s.key) == CurveKind::cut) {
            auto& v = cut[key_index(s.key)];
            for (int id : {s.a, s.b})
                if (std::find(v.begin(), v.end(), id) == v.end()) v.push_back(id);
        } else if (key_kind(s.key) != CurveKind::mirror) {
            as.tag(s.a, s.b, boundary_tag(poly, s.key));
        }
    }
    return cut;
}

inline std::vector<int> sorted_by_frame_x(const Assembly& as, std::vector<int> ids, const CuspFrame& f) {
    std::sort(ids.begin(), ids.end(), [&](int a, int b) {
        return f.to_uhp(as.pts[static_cast<std::size_t>(a)]).real() < f.to_uhp(as.pts[static_cast<std::size_t>(b)]).real();
    });
    return ids;
}

inline double floor_length(double h) { return h / 6.0; }

}  // namespace detail

/// Mesh of the ideal polygon minus the open horoballs of `trunc`.
inline TriangulatedDomain build_truncated_polygon(const IdealPolygon& poly, const TruncationScheme& trunc,
                                                  const MeshParams& params) {
    using namespace detail;
    params.validate();
    validate(poly, trunc);
    const double h = params.target_edge_length;
    const std::size_t n = poly.size();
    const double s_cut = base_cut_level(poly);
    std::vector<char> cusp(n);
    std::vector<double> level(n);
    for (std::size_t i = 0; i < n; ++i) {
        cusp[i] = trunc.levels[i] < s_cut - 0.5 * h;
        level[i] = cusp[i] ? s_cut : trunc.levels[i];
    }
    auto horo_key = [&](std::size_t i) { return curve_key(cusp[i] ? CurveKind::cut : CurveKind::horocycle, i); };

    CoreMesh core;
    auto sym = regular_symmetry(poly);
    bool uniform = std::all_of(trunc.levels.begin(), trunc.levels.end(),
                               [&](double l) { return l == trunc.levels[0]; });
    if (sym && uniform && level[0] < 0.0) {
        const double tv = sym->theta_v;
        const double tm = tv + std::numbers::pi / (2.0 * static_cast<double>(sym->k));
        Geodesic g = poly.edge(0);
        Horocycle h0{poly.vertex(0), level[0]};
        double t_foot = g.foot_parameter(h0);
        double d_mid = 2.0 * std::atanh(std::abs(g.base_point()));
        CoreMesher m;
        add_loop(m,
                 {{[=](double d) { return std::polar(std::tanh(0.5 * d), tv); }, curve_key(CurveKind::mirror, 0), 0.0,
                   -level[0], Complex(0.0, 0.0)},
                  {[=](double s) { return h0.point_at(s); }, horo_key(0), 0.0,
                   h0.arclength_coordinate(g.point_at(t_foot)), h0.point_at(0.0)},
                  {[=](double t) { return g.point_at(t); }, curve_key(CurveKind::edge, 0), t_foot, 0.0,
                   g.point_at(t_foot)},
                  {[=](double d) { return std::polar(std::tanh(0.5 * d), tm); }, curve_key(CurveKind::mirror, 1),
                   d_mid, 0.0, std::nullopt}},
                 h);
        m.refine(h, floor_length(h), params.grading);
        core = replicate_sector(m.result(), *sym);
    } else {
        CoreMesher m;
        std::vector<Piece> pieces;
        for (std::size_t i = 0; i < n; ++i) {
            Horocycle hi{poly.vertex(i), level[i]};
            Horocycle hn{poly.vertex(i + 1), level[(i + 1) % n]};
            Geodesic prev = poly.edge(i + n - 1), g = poly.edge(i);
            Complex a = prev.point_at(prev.foot_parameter(hi));
            Complex b = g.point_at(g.foot_parameter(hi));
            pieces.push_back({[=](double s) { return hi.point_at(s); }, horo_key(i), hi.arclength_coordinate(a),
                              hi.arclength_coordinate(b), a});
            pieces.push_back({[=](double t) { return g.point_at(t); }, curve_key(CurveKind::edge, i),
                              g.foot_parameter(hi), g.foot_parameter(hn), b});
        }
        add_loop(m, pieces, h);
        m.refine(h, floor_length(h), params.grading);
        core = m.result();
    }

    Assembly as;
    auto cut = load_core(as, core, poly);
    for (std::size_t i = 0; i < n; ++i) {
        if (!cusp[i]) continue;
        CuspFrame f{poly.vertex(i).z()};
        double x_next = f.to_uhp(poly.vertex(i + 1).z()).real();
        double x_prev = f.to_uhp(poly.vertex(i + n - 1).z()).real();
        LadderSpec spec;
        spec.frame = f;
        spec.base = sorted_by_frame_x(as, cut.at(i), f);
        spec.ys = geometric_rows(std::exp(-s_cut), std::exp(-trunc.levels[i]), h);
        spec.x_left = [=](double) { return x_next; };
        spec.x_right = [=](double) { return x_prev; };
        spec.x_mirror = f.to_uhp(0.0).real();
        spec.left_tag = boundary_tag(poly, curve_key(CurveKind::edge, i));
        spec.right_tag = boundary_tag(poly, curve_key(CurveKind::edge, (i + n - 1) % n));
        spec.top_tag = boundary_tag(poly, curve_key(CurveKind::horocycle, i));
        build_ladder(as, spec);
    }
    return as.finish();
}

/// Mesh of the closed annulus between Gamma_1 = boundary of `inner` and
/// Gamma_n = boundary of `outer`.
inline TriangulatedDomain build_annulus(const ExhaustionDomain& outer, const ExhaustionDomain& inner,
                                        const MeshParams& params) {
    using namespace detail;
    params.validate();
    const IdealPolygon& poly = outer.polygon();
    if (inner.basepoint().z() != outer.basepoint().z() || inner.size() != outer.size()) {
        throw Error(ErrorCode::NotNested, "annulus domains must share polygon and basepoint");
    }
    if (!(inner.radius() < outer.radius())) throw Error(ErrorCode::NotNested, "inner radius must be smaller");
    for (const auto& c : inner.corners()) {
        if (!outer.contains(c.z(), -1e-12)) throw Error(ErrorCode::NotNested, "inner domain is not inside outer");
    }
    const double h = params.target_edge_length;
    const std::size_t n = poly.size();
    const Complex p = outer.basepoint().z();

    // Ends: corners of D_n deep enough in a cusp get a structured spike
    // beyond the horocycle at level cut[i].
    std::vector<double> cut(n);
    std::vector<char> spike(n);
    std::vector<CuspFrame> frame(n);
    std::vector<UhpGeodesic> left, right;  // sides i and i - 1 near corner i
    std::vector<Complex> cross_left(n), cross_right(n);
    for (std::size_t i = 0; i < n; ++i) {
        Complex v = poly.vertex(i).z();
        frame[i] = CuspFrame{v};
        cut[i] = std::min(base_cut_level(poly), busemann(v, p) - inner.radius() - 0.5);
        spike[i] = busemann(v, outer.corner(i)) < cut[i] - 0.5 * h;
        Complex a = frame[i].to_uhp(outer.corner(i));
        left.emplace_back(a, frame[i].to_uhp(outer.corner(i + 1)));
        right.emplace_back(a, frame[i].to_uhp(outer.corner(i + n - 1)));
        double y0 = std::exp(-cut[i]);
        cross_left[i] = frame[i].to_disk(Complex(left.back().x_at(y0), y0));
        cross_right[i] = frame[i].to_disk(Complex(right.back().x_at(y0), y0));
    }
    auto outer_side = [&outer](std::size_t i) { return [&outer, i](double s) { return outer.side_point(i, s); }; };
    auto inner_side = [&inner](std::size_t i) { return [&inner, i](double s) { return inner.side_point(i, s); }; };
    // Side i of D_n runs between these parameters inside the core.
    auto side_begin = [&](std::size_t i) { return spike[i] ? hyp_distance(outer.corner(i), cross_left[i]) : 0.0; };
    auto side_end = [&](std::size_t i) {
        std::size_t j = (i + 1) % n;
        double len = outer.side_length(i);
        return spike[j] ? len - hyp_distance(outer.corner(j), cross_right[j]) : len;
    };

    CoreMesh core;
    auto sym = regular_symmetry(poly);
    if (sym && std::norm(p) == 0.0) {
        const double tv = sym->theta_v;
        const double tm = tv + std::numbers::pi / (2.0 * static_cast<double>(sym->k));
        auto ray = [](double theta) { return [=](double d) { return std::polar(std::tanh(0.5 * d), theta); }; };
        double l_out = outer.side_length(0), l_in = inner.side_length(0);
        Complex out_mid = outer.side_point(0, 0.5 * l_out), in_mid = inner.side_point(0, 0.5 * l_in);
        std::vector<Piece> pieces;
        pieces.push_back({ray(tv), curve_key(CurveKind::mirror, 0), inner.radius(),
                          spike[0] ? -cut[0] : outer.radius(), inner.corner(0)});
        if (spike[0]) {
            Horocycle hc{poly.vertex(0), cut[0]};
            pieces.push_back({[=](double s) { return hc.point_at(s); }, curve_key(CurveKind::cut, 0), 0.0,
                              hc.arclength_coordinate(cross_left[0]), hc.point_at(0.0)});
        }
        pieces.push_back({outer_side(0), curve_key(CurveKind::outer, 0), side_begin(0), 0.5 * l_out,
                          spike[0] ? cross_left[0] : outer.corner(0)});
        pieces.push_back({ray(tm), curve_key(CurveKind::mirror, 1), 2.0 * std::atanh(std::abs(out_mid)),
                          2.0 * std::atanh(std::abs(in_mid)), out_mid});
        pieces.push_back({inner_side(0), curve_key(CurveKind::inner, 0), 0.5 * l_in, 0.0, in_mid});
        CoreMesher m;
        add_loop(m, pieces, h);
        m.refine(h, floor_length(h), params.grading);
        core = replicate_sector(m.result(), *sym);
    } else {
        CoreMesher m;
        std::vector<Piece> outer_loop, inner_loop;
        for (std::size_t i = 0; i < n; ++i) {
            if (spike[i]) {
                Horocycle hc{poly.vertex(i), cut[i]};
                outer_loop.push_back({[=](double s) { return hc.point_at(s); }, curve_key(CurveKind::cut, i),
                                      hc.arclength_coordinate(cross_right[i]), hc.arclength_coordinate(cross_left[i]),
                                      cross_right[i]});
            }
            outer_loop.push_back({outer_side(i), curve_key(CurveKind::outer, i), side_begin(i), side_end(i),
                                  spike[i] ? cross_left[i] : outer.corner(i)});
            inner_loop.push_back({inner_side(i), curve_key(CurveKind::inner, i), 0.0, inner.side_length(i),
                                  inner.corner(i)});
        }
        add_loop(m, outer_loop, h);
        add_loop(m, inner_loop, h);
        m.add_hole(p);
        m.refine(h, floor_length(h), params.grading);
        core = m.result();
    }

    Assembly as;
    auto cuts = load_core(as, core, poly);
    const std::string tag = boundary_tag(poly, curve_key(CurveKind::outer, 0));
    for (std::size_t i = 0; i < n; ++i) {
        if (!spike[i]) continue;
        LadderSpec spec;
        spec.frame = frame[i];
        spec.base = sorted_by_frame_x(as, cuts.at(i), frame[i]);
        Complex apex_w = frame[i].to_uhp(outer.corner(i));
        spec.ys = geometric_rows(std::exp(-cut[i]), apex_w.imag(), h);
        UhpGeodesic l = left[i], r = right[i];
        spec.x_left = [l](double y) { return l.x_at(y); };
        spec.x_right = [r](double y) { return r.x_at(y); };
        spec.x_mirror = frame[i].to_uhp(p).real();
        spec.apex = outer.corner(i);
        spec.left_tag = spec.right_tag = spec.top_tag = tag;
        build_ladder(as, spec);
    }
    return as.finish();
}

}  // namespace scherk
