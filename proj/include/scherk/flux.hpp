#pragma once

// Flux of X = grad u / W across chains of mesh edges.
//
// In model coordinates the hyperbolic factors cancel:
//   <X, nu>_H ds_H = (d_nu u) / W ds_E,  W = sqrt(1 + |grad_E u|^2 / lambda^2),
// and the weak form of div X = 0 tested against phi_i is exactly dE/du_i.
// The discrete flux across a chain C bounding a region R is therefore
//   F(C) = sum_{i in C} w_i sum_{T in R, T contains i} dE_T/du_i,
// with w_i = 1/2 at the ends of an open chain and 1 otherwise. For a closed
// chain the sum telescopes to minus the interior residuals of R.

#include "scherk/error.hpp"
#include "scherk/ideal_polygon.hpp"
#include "scherk/mesh.hpp"
#include "scherk/solver.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <map>
#include <ostream>
#include <sstream>
#include <string>
#include <unordered_map>
#include <vector>

namespace scherk {

namespace detail {

/// Triangle incidence of a mesh: the triangle to the left of each directed
/// edge and the triangles around each vertex.
class Incidence {
public:
    explicit Incidence(const TriangulatedDomain& m) : fan_(m.vertex_count()) {
        for (std::size_t t = 0; t < m.triangles.size(); ++t) {
            const auto& tr = m.triangles[t];
            for (int i = 0; i < 3; ++i) {
                left_[key(tr[i], tr[(i + 1) % 3])] = static_cast<int>(t);
                fan_[static_cast<std::size_t>(tr[i])].push_back(static_cast<int>(t));
            }
        }
    }

    /// Triangle having a -> b as a counterclockwise edge, or -1.
    [[nodiscard]] int left_of(int a, int b) const {
        auto it = left_.find(key(a, b));
        return it == left_.end() ? -1 : it->second;
    }
    [[nodiscard]] bool has_edge(int a, int b) const { return left_of(a, b) >= 0 || left_of(b, a) >= 0; }
    [[nodiscard]] const std::vector<int>& fan(int v) const { return fan_[static_cast<std::size_t>(v)]; }

private:
    static std::uint64_t key(int a, int b) {
        return (static_cast<std::uint64_t>(static_cast<std::uint32_t>(a)) << 32) | static_cast<std::uint32_t>(b);
    }
    std::unordered_map<std::uint64_t, int> left_;
    std::vector<std::vector<int>> fan_;
};

inline int third_vertex(const std::array<int, 3>& t, int a, int b) {
    for (int v : t)
        if (v != a && v != b) return v;
    return -1;
}

}  // namespace detail

/// Flux across a chain with nu pointing to the right of the chain's
/// direction, i.e. the outer conormal of the region on its left. For a mesh
/// boundary chain traversed with the domain on the left this is the outer
/// conormal of the domain; reversing the chain negates the flux.
///
/// Open chains must consist of boundary edges. Closed chains may cross the
/// interior; the region is the sector of triangles on their left at each
/// vertex.
inline double flux_on_chain(const ScalarField& field, const Chain& chain) {
    const auto& m = field.mesh();
    const auto& cv = chain.vertices;
    if (cv.size() < 2) throw Error(ErrorCode::DisconnectedChain, "chain needs at least one edge");
    const bool closed = cv.front() == cv.back() && cv.size() > 2;
    if (chain.closed && !closed) throw Error(ErrorCode::NotClosed, "chain marked closed does not return to its start");
    detail::Incidence inc(m);
    bool on_boundary = true;
    for (std::size_t k = 0; k + 1 < cv.size(); ++k) {
        if (!inc.has_edge(cv[k], cv[k + 1])) {
            throw Error(ErrorCode::DisconnectedChain, "vertices " + std::to_string(cv[k]) + " and " +
                                                          std::to_string(cv[k + 1]) + " are not joined by an edge");
        }
        on_boundary = on_boundary && (inc.left_of(cv[k], cv[k + 1]) < 0 || inc.left_of(cv[k + 1], cv[k]) < 0);
    }
    // A chain whose left side is empty is the reverse of a boundary chain.
    if (inc.left_of(cv[0], cv[1]) < 0) {
        Chain rev{{cv.rbegin(), cv.rend()}, chain.closed};
        return -flux_on_chain(field, rev);
    }
    if (!closed && !on_boundary) {
        throw Error(ErrorCode::InvalidArgument, "open chains must run along the mesh boundary");
    }

    AreaFunctional f(m);
    const auto& u = field.values();
    const std::size_t n = closed ? cv.size() - 1 : cv.size();
    double total = 0.0;
    for (std::size_t k = 0; k < n; ++k) {
        int i = cv[k];
        double w = (!closed && (k == 0 || k == n - 1)) ? 0.5 : 1.0;
        std::vector<int> tris;
        if (!closed) {
            tris = inc.fan(i);  // boundary vertex: its whole fan lies on the domain side
        } else {
            int next = cv[k + 1];
            int prev = cv[k == 0 ? n - 1 : k - 1];
            // Walk counterclockwise around i from edge i -> next to edge i -> prev.
            int from = next;
            for (std::size_t guard = 0; guard <= inc.fan(i).size(); ++guard) {
                int t = inc.left_of(i, from);
                if (t < 0) break;
                tris.push_back(t);
                from = detail::third_vertex(m.triangles[static_cast<std::size_t>(t)], i, from);
                if (from == prev) break;
            }
        }
        double s = 0.0;
        for (int t : tris) {
            auto r = f.local_gradient(static_cast<std::size_t>(t), u);
            const auto& tr = m.triangles[static_cast<std::size_t>(t)];
            for (int j = 0; j < 3; ++j)
                if (tr[j] == i) s += r[j];
        }
        total += w * s;
    }
    return total;
}

inline double flux_on_tag(const ScalarField& field, const std::string& tag) {
    return flux_on_chain(field, field.mesh().chain(tag));
}

/// Flux across a closed chain (clause 1 of the flux theorem predicts 0 for
/// a solution on the enclosed region).
inline double flux_cycle_check(const ScalarField& field, const Chain& cycle) {
    const auto& v = cycle.vertices;
    if (v.size() < 4 || v.front() != v.back()) throw Error(ErrorCode::NotClosed, "cycle does not return to its start");
    return flux_on_chain(field, cycle);
}

/// Boundary loops of the union of the flagged triangles, oriented with the
/// region on their left.
inline std::vector<Chain> region_cycles(const TriangulatedDomain& m, const std::vector<char>& in_region) {
    std::unordered_map<std::uint64_t, int> directed;
    auto key = [](int a, int b) {
        return (static_cast<std::uint64_t>(static_cast<std::uint32_t>(a)) << 32) | static_cast<std::uint32_t>(b);
    };
    for (std::size_t t = 0; t < m.triangles.size(); ++t) {
        if (!in_region[t]) continue;
        const auto& tr = m.triangles[t];
        for (int i = 0; i < 3; ++i) directed[key(tr[i], tr[(i + 1) % 3])] = 1;
    }
    std::map<int, std::vector<int>> next;
    for (std::size_t t = 0; t < m.triangles.size(); ++t) {
        if (!in_region[t]) continue;
        const auto& tr = m.triangles[t];
        for (int i = 0; i < 3; ++i) {
            int a = tr[i], b = tr[(i + 1) % 3];
            if (!directed.count(key(b, a))) next[a].push_back(b);
        }
    }
    std::vector<Chain> loops;
    while (!next.empty()) {
        auto it = next.begin();
        Chain c;
        c.closed = true;
        int start = it->first, v = start;
        c.vertices.push_back(v);
        do {
            auto& out = next.at(v);
            int w = out.back();  // pinch vertices are resolved arbitrarily
            out.pop_back();
            if (out.empty()) next.erase(v);
            v = w;
            c.vertices.push_back(v);
        } while (v != start && next.count(v));
        if (v != start) throw Error(ErrorCode::NotClosed, "region boundary is not a union of loops");
        loops.push_back(std::move(c));
    }
    return loops;
}

// ---------------------------------------------------------------------------
// Audit
// ---------------------------------------------------------------------------

struct ArcFlux {
    std::string tag;
    double flux = 0.0;
    double length = 0.0;
    [[nodiscard]] double ratio() const { return flux / length; }
};

struct CycleFlux {
    std::string tag;
    double total = 0.0;
};

struct FluxReport {
    std::vector<ArcFlux> arcs;
    std::vector<CycleFlux> cycles;
    double slack = 0.0;  // per unit length: 3 h^2

    [[nodiscard]] const ArcFlux& arc(const std::string& tag) const {
        for (const auto& a : arcs)
            if (a.tag == tag) return a;
        throw Error(ErrorCode::InvalidArgument, "no arc '" + tag + "' in report");
    }
    /// Clause 2: |flux| <= length + slack * length on every arc.
    [[nodiscard]] bool bounded() const {
        for (const auto& a : arcs)
            if (!(std::fabs(a.flux) <= a.length * (1.0 + slack))) return false;
        return true;
    }
    [[nodiscard]] double min_ratio(char kind) const {
        double r = 1e300;
        for (const auto& a : arcs)
            if (a.tag[0] == kind) r = std::min(r, a.ratio());
        return r;
    }
    [[nodiscard]] double max_ratio(char kind) const {
        double r = -1e300;
        for (const auto& a : arcs)
            if (a.tag[0] == kind) r = std::max(r, a.ratio());
        return r;
    }
    /// sum(|alpha|) - sum(|beta|) + sum(|c|): the bound on the boundary flux.
    [[nodiscard]] double total_bound() const {
        double b = 0.0;
        for (const auto& a : arcs) b += a.tag[0] == 'a' ? a.length : a.tag[0] == 'b' ? -a.length : a.length;
        return b;
    }
    [[nodiscard]] double horocyclic_length() const {
        double b = 0.0;
        for (const auto& a : arcs)
            if (a.tag[0] == 'c') b += a.length;
        return b;
    }

    void write(std::ostream& os) const {
        os << std::setprecision(17);
        for (const auto& a : arcs)
            os << "arc " << a.tag << " flux=" << a.flux << " length=" << a.length << " ratio=" << a.ratio() << '\n';
        for (const auto& c : cycles) os << "cycle " << c.tag << " total=" << c.total << '\n';
        os << "slack=" << slack << '\n';
    }
    [[nodiscard]] std::string to_text() const {
        std::ostringstream os;
        write(os);
        return os.str();
    }
};

/// Per-arc fluxes of a field on a truncated-polygon mesh (tags alpha_i,
/// beta_i, c_i), the total over the whole boundary cycle, and the slack
/// model 3 h^2 per unit length.
inline FluxReport flux_theorem_audit(const ScalarField& field, const IdealPolygon& poly, double h) {
    const auto& m = field.mesh();
    FluxReport rep;
    rep.slack = 3.0 * h * h;
    double total = 0.0;
    for (std::size_t i = 0; i < poly.size(); ++i) {
        for (std::string tag : {std::string(to_string(poly.label(i))) + "_" + std::to_string(i), "c_" + std::to_string(i)}) {
            Chain c = m.chain(tag);
            ArcFlux a{tag, flux_on_chain(field, c), m.chain_length(c)};
            total += a.flux;
            rep.arcs.push_back(a);
        }
    }
    auto loops = m.boundary_loops();
    if (loops.size() != 1) throw Error(ErrorCode::NotClosed, "truncated polygon boundary must be a single loop");
    rep.cycles.push_back({"boundary", flux_cycle_check(field, loops.front())});
    rep.cycles.push_back({"arcs", total});
    return rep;
}

// ---------------------------------------------------------------------------
// Comparison
// ---------------------------------------------------------------------------

struct FluxComparison {
    double flux_low = 0.0;
    double flux_high = 0.0;
    double slack = 0.0;
    double sup_diff = 0.0;  // sup |u_high - u_low|
    [[nodiscard]] bool ordered() const { return flux_low <= flux_high + slack; }
    [[nodiscard]] bool candidate_identical() const { return std::fabs(flux_high - flux_low) <= slack; }
};

/// Compares the fluxes of two solutions across a chain on which they agree.
/// Both fields must live on the same mesh, satisfy the discrete equation to
/// `residual_tol`, agree on the chain, and be ordered pointwise.
inline FluxComparison flux_compare(const ScalarField& u_low, const ScalarField& u_high, const Chain& chain, double h,
                                   double residual_tol) {
    if (u_low.mesh_ptr() != u_high.mesh_ptr() && u_low.size() != u_high.size()) {
        throw Error(ErrorCode::BoundaryMismatch, "fields live on different meshes");
    }
    const auto& m = u_low.mesh();
    auto fixed = m.boundary_mask();
    AreaFunctional f(m);
    for (const ScalarField* u : {&u_low, &u_high}) {
        double r = interior_residual(f, u->values(), fixed);
        if (!(r < residual_tol)) {
            std::ostringstream os;
            os << "field is not a discrete solution (residual " << r << ")";
            throw Error(ErrorCode::InvalidArgument, os.str());
        }
    }
    for (int v : chain.vertices) {
        if (u_low[static_cast<std::size_t>(v)] != u_high[static_cast<std::size_t>(v)]) {
            throw Error(ErrorCode::BoundaryMismatch, "fields differ at chain vertex " + std::to_string(v));
        }
    }
    FluxComparison c;
    for (std::size_t v = 0; v < u_low.size(); ++v) {
        double d = u_high[v] - u_low[v];
        if (d < -1e-12 * (1.0 + std::fabs(u_low[v]))) {
            std::ostringstream os;
            os << "u_low exceeds u_high by " << -d << " at vertex " << v;
            throw Error(ErrorCode::NotOrdered, os.str());
        }
        c.sup_diff = std::max(c.sup_diff, std::fabs(d));
    }
    c.flux_low = flux_on_chain(u_low, chain);
    c.flux_high = flux_on_chain(u_high, chain);
    c.slack = 3.0 * h * h * m.chain_length(chain);
    return c;
}

}  // namespace scherk
