#pragma once

// Scherk graphs by continuation in the cutoff L, and the barrier family
// u_{n,t} on the annuli A_n = D_n minus the closure of D_1.

#include "scherk/domain.hpp"
#include "scherk/error.hpp"
#include "scherk/ideal_polygon.hpp"
#include "scherk/meshing.hpp"
#include "scherk/solver.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <iomanip>
#include <limits>
#include <map>
#include <memory>
#include <ostream>
#include <sstream>
#include <string>
#include <thread>
#include <utility>
#include <vector>

namespace scherk {

// ---------------------------------------------------------------------------
// Point location
// ---------------------------------------------------------------------------

/// Evaluates the piecewise linear interpolant of a field at arbitrary
/// points, using a uniform bucket grid over triangle bounding boxes.
class FieldSampler {
public:
    explicit FieldSampler(const ScalarField& f, int cells = 0) : field_(f) {
        const auto& m = f.mesh();
        lo_ = Complex(1.0, 1.0);
        Complex hi(-1.0, -1.0);
        for (const auto& p : m.vertices) {
            lo_ = Complex(std::min(lo_.real(), p.x), std::min(lo_.imag(), p.y));
            hi = Complex(std::max(hi.real(), p.x), std::max(hi.imag(), p.y));
        }
        n_ = cells > 0 ? cells : std::max(1, static_cast<int>(std::sqrt(static_cast<double>(m.triangles.size()) / 2.0)));
        size_ = std::max(hi.real() - lo_.real(), hi.imag() - lo_.imag()) / n_ * (1.0 + 1e-9) + 1e-300;
        buckets_.resize(static_cast<std::size_t>(n_) * static_cast<std::size_t>(n_));
        for (std::size_t t = 0; t < m.triangles.size(); ++t) {
            const auto& tr = m.triangles[t];
            double x0 = 1e300, x1 = -1e300, y0 = 1e300, y1 = -1e300;
            for (int v : tr) {
                Complex p = m.z(v);
                x0 = std::min(x0, p.real());
                x1 = std::max(x1, p.real());
                y0 = std::min(y0, p.imag());
                y1 = std::max(y1, p.imag());
            }
            for (int i = cell(x0, lo_.real()); i <= cell(x1, lo_.real()); ++i)
                for (int j = cell(y0, lo_.imag()); j <= cell(y1, lo_.imag()); ++j)
                    buckets_[static_cast<std::size_t>(i * n_ + j)].push_back(static_cast<int>(t));
        }
    }

    /// Interpolated value at p. Points up to `slack` (in barycentric units)
    /// outside the mesh are projected onto the nearest triangle; farther
    /// points throw BoundaryMismatch.
    [[nodiscard]] double operator()(Complex p, double slack = 1e-6) const {
        double best = -std::numeric_limits<double>::infinity();
        double value = 0.0;
        auto visit = [&](int t) {
            double l[3];
            double mn = barycentric(t, p, l);
            if (mn > best) {
                best = mn;
                value = blend(t, l);
            }
        };
        int i = cell(p.real(), lo_.real()), j = cell(p.imag(), lo_.imag());
        for (int t : buckets_[static_cast<std::size_t>(i * n_ + j)]) visit(t);
        if (best < -slack) {
            for (std::size_t t = 0; t < field_.mesh().triangles.size(); ++t) visit(static_cast<int>(t));
        }
        if (best < -slack) {
            std::ostringstream os;
            os << "point (" << p.real() << ", " << p.imag() << ") lies outside the field's mesh";
            throw Error(ErrorCode::BoundaryMismatch, os.str());
        }
        return value;
    }

private:
    [[nodiscard]] int cell(double x, double lo) const {
        return std::clamp(static_cast<int>(std::floor((x - lo) / size_)), 0, n_ - 1);
    }

    double barycentric(int t, Complex p, double* l) const {
        const auto& m = field_.mesh();
        const auto& tr = m.triangles[static_cast<std::size_t>(t)];
        Complex a = m.z(tr[0]), b = m.z(tr[1]), c = m.z(tr[2]);
        auto cross = [](Complex o, Complex q, Complex r) {
            return (q - o).real() * (r - o).imag() - (q - o).imag() * (r - o).real();
        };
        double area = cross(a, b, c);
        l[0] = cross(p, b, c) / area;
        l[1] = cross(a, p, c) / area;
        l[2] = cross(a, b, p) / area;
        return std::min({l[0], l[1], l[2]});
    }

    double blend(int t, double* l) const {
        const auto& tr = field_.mesh().triangles[static_cast<std::size_t>(t)];
        double c[3], s = 0.0;
        for (int k = 0; k < 3; ++k) s += c[k] = std::max(l[k], 0.0);
        double v = 0.0;
        for (int k = 0; k < 3; ++k) v += c[k] / s * field_[static_cast<std::size_t>(tr[k])];
        return v;
    }

    const ScalarField& field_;
    Complex lo_;
    double size_ = 1.0;
    int n_ = 1;
    std::vector<std::vector<int>> buckets_;
};

// ---------------------------------------------------------------------------
// Scherk graphs
// ---------------------------------------------------------------------------

/// Boundary data for cutoff L on a truncated-polygon mesh: +L on alpha
/// edges, -L on beta edges, and on each horocyclic arc c_i the linear
/// interpolation in horocyclic arclength between its two end values.
inline std::vector<double> scherk_boundary_data(const TriangulatedDomain& mesh, const IdealPolygon& poly,
                                                const TruncationScheme& trunc, double L) {
    std::vector<double> d(mesh.vertex_count(), std::numeric_limits<double>::quiet_NaN());
    for (std::size_t i = 0; i < poly.size(); ++i) {
        double v = poly.label(i) == EdgeLabel::alpha ? L : -L;
        for (int k : mesh.chain(std::string(to_string(poly.label(i))) + "_" + std::to_string(i)).vertices) {
            d[static_cast<std::size_t>(k)] = v;
        }
    }
    for (std::size_t i = 0; i < poly.size(); ++i) {
        Chain c = mesh.chain("c_" + std::to_string(i));
        Horocycle h = trunc.horocycle(poly, i);
        int a = c.vertices.front(), b = c.vertices.back();
        double sa = h.arclength_coordinate(mesh.z(a)), sb = h.arclength_coordinate(mesh.z(b));
        double da = d[static_cast<std::size_t>(a)], db = d[static_cast<std::size_t>(b)];
        for (int v : c.vertices) {
            double s = h.arclength_coordinate(mesh.z(v));
            d[static_cast<std::size_t>(v)] = da + (s - sa) / (sb - sa) * (db - da);
        }
    }
    return d;
}

struct StabilizationRule {
    double distance = 1.0;  // sub-mesh: hyperbolic distance >= this from every horocyclic arc
    double tolerance = std::numeric_limits<double>::quiet_NaN();  // NaN: the last L increment
};

struct ContinuationStep {
    double L = 0.0;
    int newton_iters = 0;
    int gradient_steps = 0;
    double residual = 0.0;
    double drift = std::numeric_limits<double>::quiet_NaN();  // sup |u_L - u_prev| on the sub-mesh
};

struct ScherkResult {
    ScalarField field;
    std::vector<ContinuationStep> steps;
    std::vector<int> probe;  // vertices of the stabilization sub-mesh
};

/// Interior vertices at hyperbolic distance >= d from every horocyclic
/// boundary arc.
inline std::vector<int> far_from_horocycles(const TriangulatedDomain& mesh, double d) {
    auto fixed = mesh.boundary_mask();
    std::vector<Complex> arc;
    for (const auto& e : mesh.boundary)
        if (e.tag.rfind("c_", 0) == 0) arc.push_back(mesh.z(e.a));
    std::vector<int> out;
    for (std::size_t v = 0; v < mesh.vertex_count(); ++v) {
        bool far = !fixed[v];
        for (Complex q : arc) {
            if (!far) break;
            if (hyp_distance(mesh.z(static_cast<int>(v)), q) < d) {
                far = false;
                break;
            }
        }
        if (far) out.push_back(static_cast<int>(v));
    }
    return out;
}

inline std::vector<double> default_admissibility_grid(const TruncationScheme& trunc) {
    double deepest = *std::min_element(trunc.levels.begin(), trunc.levels.end());
    std::vector<double> grid;
    for (int k = 0; k <= 20; ++k) grid.push_back(deepest - k);
    return grid;
}

/// Continuation in the cutoff L: each increment of the sequence is taken in
/// opts.continuation_steps equal sub-steps, each warm-started from the last.
/// The drift of the interior between consecutive entries of L_sequence must
/// decrease and end below the rule's tolerance.
inline ScherkResult scherk_solve(const IdealPolygon& poly, const TruncationScheme& trunc,
                                 const std::vector<double>& L_sequence, const MeshParams& params,
                                 const SolverOptions& opts, const StabilizationRule& rule = {}) {
    opts.validate();
    validate(poly, trunc);
    if (L_sequence.empty()) throw Error(ErrorCode::InvalidArgument, "L_sequence is empty");
    for (std::size_t i = 0; i < L_sequence.size(); ++i) {
        if (!(L_sequence[i] > (i ? L_sequence[i - 1] : 0.0))) {
            throw Error(ErrorCode::InvalidArgument, "L_sequence must be positive and increasing");
        }
    }
    auto report = check_admissible(poly, default_admissibility_grid(trunc));
    if (report.verdict != Verdict::admissible) {
        throw Error(ErrorCode::NotAdmissible,
                    "polygon is not certified admissible (verdict " + std::string(to_string(report.verdict)) + ")");
    }

    auto mesh = std::make_shared<const TriangulatedDomain>(build_truncated_polygon(poly, trunc, params));
    ScherkResult out;
    out.probe = far_from_horocycles(*mesh, rule.distance);
    const auto unit = scherk_boundary_data(*mesh, poly, trunc, 1.0);

    std::vector<double> u;
    double prev_L = 0.0;
    for (double L : L_sequence) {
        ContinuationStep step;
        step.L = L;
        std::vector<double> before = u;
        for (int s = 1; s <= opts.continuation_steps; ++s) {
            double l = prev_L + (L - prev_L) * s / opts.continuation_steps;
            std::vector<double> data(unit.size());
            for (std::size_t i = 0; i < unit.size(); ++i) data[i] = l * unit[i];
            SolveStats st;
            auto f = solve_dirichlet(mesh, data, opts, u.empty() ? nullptr : &u, &st);
            u = f.values();
            step.newton_iters += st.newton_iters;
            step.gradient_steps += st.gradient_steps;
            step.residual = st.residual;
        }
        if (!before.empty()) {
            step.drift = 0.0;
            for (int v : out.probe)
                step.drift = std::max(step.drift, std::fabs(u[static_cast<std::size_t>(v)] - before[static_cast<std::size_t>(v)]));
        }
        out.steps.push_back(step);
        prev_L = L;
    }
    out.field = ScalarField(mesh, std::move(u));

    if (out.steps.size() >= 2) {
        const auto& last = out.steps.back();
        double tol = std::isnan(rule.tolerance) ? last.L - out.steps[out.steps.size() - 2].L : rule.tolerance;
        std::ostringstream os;
        os << "interior drift at L=" << last.L << " is " << last.drift;
        if (out.steps.size() >= 3 && !(last.drift < out.steps[out.steps.size() - 2].drift)) {
            os << ", not below the previous drift " << out.steps[out.steps.size() - 2].drift;
            throw Error(ErrorCode::NotStabilized, os.str());
        }
        if (!(last.drift < tol)) {
            os << ", not below the tolerance " << tol;
            throw Error(ErrorCode::NotStabilized, os.str());
        }
    }
    return out;
}

// ---------------------------------------------------------------------------
// Barrier family
// ---------------------------------------------------------------------------

struct BarrierOptions {
    MeshParams mesh;
    SolverOptions solver{200, 1e-13, 0.5, 4};
    double inner_radius = 1.0;         // Gamma_1 = boundary of D_{inner_radius}
    DiskPoint basepoint{0.0, 0.0};
    double sandwich_tol = 1e-9;        // absolute slack of the pointwise sandwich check
    double t_max = 0.25;               // surrogate for the uniform barrier interval
    int threads = 1;                   // 0: hardware concurrency

    void validate() const {
        mesh.validate();
        solver.validate();
        if (!(inner_radius > 0.0)) throw Error(ErrorCode::InvalidArgument, "inner_radius must be > 0");
        if (!(sandwich_tol >= 0.0)) throw Error(ErrorCode::InvalidArgument, "sandwich_tol must be >= 0");
        if (!(t_max > 0.0)) throw Error(ErrorCode::InvalidArgument, "t_max must be > 0");
        if (threads < 0) throw Error(ErrorCode::InvalidArgument, "threads must be >= 0");
    }
};

/// One member u_{n,t} together with its reference u_{n,0}: the solution on
/// the same annulus mesh with the reference graph's values on both boundary
/// curves. The sandwich is checked vertexwise against the reference.
struct BarrierMember {
    double n = 0.0;
    double t = 0.0;
    ScalarField reference;
    ScalarField field;
    double lowest = 0.0;    // min over vertices of field - reference
    double highest = 0.0;   // max over vertices of field - reference
    int lowest_vertex = -1;
    int highest_vertex = -1;

    [[nodiscard]] double violation() const { return std::max({0.0, -lowest, highest - t}); }
};

struct AnnulusReference {
    ScalarField field;  // u_{n,0}
    std::vector<char> outer;  // vertices on Gamma_n
};

inline AnnulusReference annulus_reference(const IdealPolygon& poly, const ScalarField& u_ref, double n,
                                          const BarrierOptions& opts) {
    opts.validate();
    if (!(n > opts.inner_radius)) throw Error(ErrorCode::NotNested, "n must exceed the inner radius");
    auto outer = build_exhaustion(poly, opts.basepoint, n);
    auto inner = build_exhaustion(poly, opts.basepoint, opts.inner_radius);
    auto mesh = std::make_shared<const TriangulatedDomain>(build_annulus(outer, inner, opts.mesh));
    FieldSampler sample(u_ref);
    auto fixed = mesh->boundary_mask();
    std::vector<double> data(mesh->vertex_count(), std::numeric_limits<double>::quiet_NaN());
    for (std::size_t v = 0; v < data.size(); ++v)
        if (fixed[v]) data[v] = sample(mesh->z(static_cast<int>(v)));
    AnnulusReference r;
    r.outer.assign(mesh->vertex_count(), 0);
    for (const auto& e : mesh->boundary) {
        if (e.tag == "gamman") r.outer[static_cast<std::size_t>(e.a)] = r.outer[static_cast<std::size_t>(e.b)] = 1;
    }
    r.field = solve_dirichlet(mesh, data, opts.solver);
    return r;
}

/// Solves for u_{n,t} without checking the sandwich.
inline BarrierMember barrier_member(const AnnulusReference& ref, double n, double t, const BarrierOptions& opts) {
    if (!(t >= 0.0)) throw Error(ErrorCode::InvalidArgument, "t must be >= 0");
    const auto& u0 = ref.field.values();
    std::vector<double> data = u0;
    for (std::size_t v = 0; v < data.size(); ++v)
        if (ref.outer[v]) data[v] += t;
    BarrierMember m;
    m.n = n;
    m.t = t;
    m.reference = ref.field;
    m.field = solve_dirichlet(ref.field.mesh_ptr(), data, opts.solver, &u0);
    m.lowest = std::numeric_limits<double>::infinity();
    m.highest = -std::numeric_limits<double>::infinity();
    for (std::size_t v = 0; v < u0.size(); ++v) {
        double d = m.field[v] - u0[v];
        if (d < m.lowest) {
            m.lowest = d;
            m.lowest_vertex = static_cast<int>(v);
        }
        if (d > m.highest) {
            m.highest = d;
            m.highest_vertex = static_cast<int>(v);
        }
    }
    return m;
}

inline void check_sandwich(const BarrierMember& m, double tol) {
    if (m.violation() <= tol) return;
    bool below = -m.lowest >= m.highest - m.t;
    int v = below ? m.lowest_vertex : m.highest_vertex;
    Complex z = m.field.mesh().z(v);
    std::ostringstream os;
    os.precision(10);
    os << "sandwich violated for n=" << m.n << " t=" << m.t << ": u_{n,t} - u = "
       << (below ? m.lowest : m.highest) << " at vertex " << v << " (" << z.real() << ", " << z.imag()
       << "), outside [0, " << m.t << "] by " << m.violation();
    throw Error(ErrorCode::SandwichViolated, os.str());
}

/// u_{n,t} on A_n with boundary values u_ref on Gamma_1 and u_ref + t on
/// Gamma_n, checked against the sandwich.
inline BarrierMember barrier_step(const IdealPolygon& poly, const ScalarField& u_ref, double n, double t,
                                  const BarrierOptions& opts) {
    auto m = barrier_member(annulus_reference(poly, u_ref, n, opts), n, t, opts);
    check_sandwich(m, opts.sandwich_tol);
    return m;
}

/// sup of u_{n,t} - u over the given points, interpolating the member's
/// difference field. Points on a curved boundary may fall just outside the
/// chords of another mesh and are projected onto it.
inline double sup_gap_at(const BarrierMember& m, const std::vector<Complex>& points) {
    std::vector<double> w(m.field.size());
    for (std::size_t v = 0; v < w.size(); ++v) w[v] = m.field[v] - m.reference[v];
    ScalarField wf(m.field.mesh_ptr(), std::move(w));
    FieldSampler sample(wf);
    double s = -std::numeric_limits<double>::infinity();
    for (Complex p : points) s = std::max(s, sample(p, 0.25));
    return s;
}

struct ConvergenceRow {
    double n = 0.0;
    double sup_diff = 0.0;
};

struct BarrierFamily {
    double t_max = 0.25;
    std::map<std::pair<double, double>, BarrierMember> members;  // keyed by (n, t)
    std::vector<ConvergenceRow> table;

    [[nodiscard]] bool table_non_increasing() const {
        for (std::size_t i = 1; i < table.size(); ++i)
            if (table[i].sup_diff > table[i - 1].sup_diff) return false;
        return true;
    }
};

inline void write_convergence_table(std::ostream& os, const std::vector<ConvergenceRow>& rows) {
    os << "n sup_diff\n" << std::setprecision(17);
    for (const auto& r : rows) os << r.n << ' ' << r.sup_diff << '\n';
}

namespace detail {

template <class F>
void parallel_for(std::size_t count, int threads, F&& body) {
    std::size_t workers = threads == 0 ? std::max(1u, std::thread::hardware_concurrency()) : static_cast<std::size_t>(threads);
    workers = std::min(workers, count);
    if (workers <= 1) {
        for (std::size_t i = 0; i < count; ++i) body(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::vector<std::exception_ptr> errors(count);
    std::vector<std::thread> pool;
    for (std::size_t w = 0; w < workers; ++w) {
        pool.emplace_back([&] {
            for (std::size_t i; (i = next++) < count;) {
                try {
                    body(i);
                } catch (...) {
                    errors[i] = std::current_exception();
                }
            }
        });
    }
    for (auto& th : pool) th.join();
    for (auto& e : errors)
        if (e) std::rethrow_exception(e);  // the first failure in index order
}

}  // namespace detail

/// Members u_{n,t} for every n in n_list and every t in ts, plus the
/// convergence table sup_{A_{n0}} (u_{n,t} - u) for t = ts.front(), where
/// n0 = n_list.front(). The sup is taken over the vertices of the A_{n0}
/// mesh for every n, so that all rows sample the same point set. With
/// `check` the sandwich is enforced.
inline BarrierFamily barrier_family(const IdealPolygon& poly, const ScalarField& u_ref, const std::vector<double>& ts,
                                    const std::vector<double>& n_list, const BarrierOptions& opts, bool check = true) {
    opts.validate();
    if (ts.empty() || n_list.empty()) throw Error(ErrorCode::InvalidArgument, "barrier family needs t and n values");
    for (double t : ts) {
        if (!(t >= 0.0 && t <= opts.t_max)) throw Error(ErrorCode::InvalidArgument, "t must lie in [0, t_max]");
    }
    for (std::size_t i = 1; i < n_list.size(); ++i) {
        if (!(n_list[i] > n_list[i - 1])) throw Error(ErrorCode::InvalidArgument, "n_list must be increasing");
    }
    std::vector<std::vector<BarrierMember>> rows(n_list.size());
    detail::parallel_for(n_list.size(), opts.threads, [&](std::size_t i) {
        auto ref = annulus_reference(poly, u_ref, n_list[i], opts);
        for (double t : ts) rows[i].push_back(barrier_member(ref, n_list[i], t, opts));
    });
    BarrierFamily fam;
    fam.t_max = opts.t_max;
    std::vector<Complex> a0;
    for (const auto& p : rows.front().front().field.mesh().vertices) a0.push_back(p.z());
    for (std::size_t i = 0; i < n_list.size(); ++i) {
        for (auto& m : rows[i]) {
            if (check) check_sandwich(m, opts.sandwich_tol);
            if (m.t == ts.front()) fam.table.push_back({m.n, sup_gap_at(m, a0)});
            fam.members.emplace(std::make_pair(m.n, m.t), std::move(m));
        }
    }
    return fam;
}

}  // namespace scherk
