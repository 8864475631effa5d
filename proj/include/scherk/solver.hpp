#pragma once

// Minimal graphs over hyperbolic domains: P1 finite elements minimizing the
// graph area in H^2 x R.
//
// With the conformal factor lambda = 2 / (1 - |z|^2) and Euclidean gradient
// g of u, the area element of (x, y) -> (x, y, u) in the product metric is
//   sqrt(det [[l^2 + ux^2, ux uy], [ux uy, l^2 + uy^2]]) = l sqrt(l^2 + |g|^2),
// so the discrete functional is the sum over triangles of
//   |T| sum_q w_q l_q sqrt(l_q^2 + |g_T|^2)
// with a 3-point rule. Its gradient in the nodal values is the weak form of
// div(grad u / W) = 0, W^2 = 1 + |g|^2 / l^2.

#include "scherk/error.hpp"
#include "scherk/mesh.hpp"

#include <Eigen/Sparse>
#include <Eigen/SparseCholesky>

#include <cmath>
#include <iomanip>
#include <istream>
#include <limits>
#include <memory>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

namespace scherk {

class ScalarField {
public:
    ScalarField() = default;
    ScalarField(std::shared_ptr<const TriangulatedDomain> mesh, std::vector<double> values)
        : mesh_(std::move(mesh)), values_(std::move(values)) {
        if (!mesh_) throw Error(ErrorCode::InvalidArgument, "field needs a mesh");
        if (values_.size() != mesh_->vertex_count()) {
            throw Error(ErrorCode::InvalidArgument, "field has " + std::to_string(values_.size()) +
                                                        " values for " + std::to_string(mesh_->vertex_count()) +
                                                        " vertices");
        }
        for (double v : values_) {
            if (!std::isfinite(v)) throw Error(ErrorCode::InvalidArgument, "field values must be finite");
        }
    }

    [[nodiscard]] const TriangulatedDomain& mesh() const { return *mesh_; }
    [[nodiscard]] const std::shared_ptr<const TriangulatedDomain>& mesh_ptr() const noexcept { return mesh_; }
    [[nodiscard]] const std::vector<double>& values() const noexcept { return values_; }
    [[nodiscard]] double operator[](std::size_t i) const { return values_[i]; }
    [[nodiscard]] std::size_t size() const noexcept { return values_.size(); }

private:
    std::shared_ptr<const TriangulatedDomain> mesh_;
    std::vector<double> values_;
};

struct SolverOptions {
    int max_newton_iters = 50;
    double residual_tol = 1e-10;
    double line_search_shrink = 0.5;
    int continuation_steps = 4;

    void validate() const {
        if (!(residual_tol > 0.0)) throw Error(ErrorCode::InvalidArgument, "residual_tol must be > 0");
        if (!(line_search_shrink > 0.0 && line_search_shrink < 1.0)) {
            throw Error(ErrorCode::InvalidArgument, "line_search_shrink must lie in (0, 1)");
        }
        if (max_newton_iters < 0) throw Error(ErrorCode::InvalidArgument, "max_newton_iters must be >= 0");
        if (continuation_steps < 1) throw Error(ErrorCode::InvalidArgument, "continuation_steps must be >= 1");
    }
};

struct GraphArea {
    double value = 0.0;
};

/// The discrete area functional of one mesh, with per-triangle geometry
/// cached.
class AreaFunctional {
public:
    explicit AreaFunctional(const TriangulatedDomain& mesh) : mesh_(mesh) {
        // Degree-2 rule: points at barycentric (2/3, 1/6, 1/6) and permutations.
        geo_.reserve(mesh.triangles.size());
        for (std::size_t t = 0; t < mesh.triangles.size(); ++t) {
            const auto& tr = mesh.triangles[t];
            Complex p[3] = {mesh.z(tr[0]), mesh.z(tr[1]), mesh.z(tr[2])};
            Geo g;
            g.area = mesh.euclidean_area(t);
            if (!(g.area > 0.0)) throw Error(ErrorCode::MeshFailure, "degenerate triangle " + std::to_string(t));
            for (int i = 0; i < 3; ++i) {
                Complex e = p[(i + 2) % 3] - p[(i + 1) % 3];
                // grad phi_i is the inward normal of the opposite edge over 2|T|.
                g.grad[i] = Complex(-e.imag(), e.real()) / (2.0 * g.area);
                Complex q = (4.0 * p[i] + p[(i + 1) % 3] + p[(i + 2) % 3]) / 6.0;
                g.lambda[i] = 2.0 / one_minus_norm2(q);
            }
            geo_.push_back(g);
        }
    }

    [[nodiscard]] const TriangulatedDomain& mesh() const noexcept { return mesh_; }

    [[nodiscard]] Complex gradient_in(std::size_t t, const std::vector<double>& u) const {
        const auto& tr = mesh_.triangles[t];
        const auto& g = geo_[t];
        return g.grad[0] * u[tr[0]] + g.grad[1] * u[tr[1]] + g.grad[2] * u[tr[2]];
    }

    [[nodiscard]] double energy(const std::vector<double>& u) const {
        double e = 0.0;
        for (std::size_t t = 0; t < geo_.size(); ++t) {
            double g2 = std::norm(gradient_in(t, u));
            double s = 0.0;
            for (double l : geo_[t].lambda) s += l * std::sqrt(l * l + g2);
            e += geo_[t].area * s / 3.0;
        }
        return e;
    }

    /// Contribution of triangle t to dE/du at its three vertices.
    [[nodiscard]] std::array<double, 3> local_gradient(std::size_t t, const std::vector<double>& u) const {
        Complex g = gradient_in(t, u);
        double a = coefficient(t, std::norm(g));
        const auto& G = geo_[t];
        std::array<double, 3> r{};
        for (int i = 0; i < 3; ++i) r[i] = a * (g * std::conj(G.grad[i])).real();
        return r;
    }

    [[nodiscard]] std::vector<double> gradient(const std::vector<double>& u) const {
        std::vector<double> r(u.size(), 0.0);
        for (std::size_t t = 0; t < geo_.size(); ++t) {
            auto lr = local_gradient(t, u);
            const auto& tr = mesh_.triangles[t];
            for (int i = 0; i < 3; ++i) r[static_cast<std::size_t>(tr[i])] += lr[i];
        }
        return r;
    }

    /// Hessian restricted to the unknowns; `index` maps vertices to unknown
    /// numbers (-1 for fixed vertices).
    [[nodiscard]] Eigen::SparseMatrix<double> hessian(const std::vector<double>& u, const std::vector<int>& index,
                                                      int unknowns) const {
        std::vector<Eigen::Triplet<double>> trip;
        trip.reserve(geo_.size() * 9);
        for (std::size_t t = 0; t < geo_.size(); ++t) {
            Complex g = gradient_in(t, u);
            double g2 = std::norm(g);
            double a = 0.0, b = 0.0;
            for (double l : geo_[t].lambda) {
                double s = std::sqrt(l * l + g2);
                a += l / s;
                b += l / (s * s * s);
            }
            a *= geo_[t].area / 3.0;
            b *= geo_[t].area / 3.0;
            const auto& tr = mesh_.triangles[t];
            const auto& G = geo_[t];
            for (int i = 0; i < 3; ++i) {
                int ri = index[static_cast<std::size_t>(tr[i])];
                if (ri < 0) continue;
                for (int j = 0; j < 3; ++j) {
                    int cj = index[static_cast<std::size_t>(tr[j])];
                    if (cj < 0) continue;
                    double gi = (g * std::conj(G.grad[i])).real(), gj = (g * std::conj(G.grad[j])).real();
                    double v = a * (G.grad[i] * std::conj(G.grad[j])).real() - b * gi * gj;
                    trip.emplace_back(ri, cj, v);
                }
            }
        }
        Eigen::SparseMatrix<double> h(unknowns, unknowns);
        h.setFromTriplets(trip.begin(), trip.end());
        return h;
    }

private:
    struct Geo {
        double area = 0.0;
        std::array<Complex, 3> grad{};
        std::array<double, 3> lambda{};
    };

    [[nodiscard]] double coefficient(std::size_t t, double g2) const {
        double a = 0.0;
        for (double l : geo_[t].lambda) a += l / std::sqrt(l * l + g2);
        return a * geo_[t].area / 3.0;
    }

    const TriangulatedDomain& mesh_;
    std::vector<Geo> geo_;
};

inline GraphArea graph_area(const ScalarField& f) { return {AreaFunctional(f.mesh()).energy(f.values())}; }

/// Hyperbolic area of the mesh under the same quadrature (graph area of a
/// constant).
inline double domain_area(const TriangulatedDomain& mesh) {
    return AreaFunctional(mesh).energy(std::vector<double>(mesh.vertex_count(), 0.0));
}

struct SolveStats {
    int newton_iters = 0;
    int gradient_steps = 0;
    double residual = 0.0;
    std::vector<double> energies;  // after each accepted step, starting with the initial guess
};

/// Max-norm of dE/du over interior vertices.
inline double interior_residual(const AreaFunctional& f, const std::vector<double>& u, const std::vector<char>& fixed) {
    auto r = f.gradient(u);
    double m = 0.0;
    for (std::size_t i = 0; i < r.size(); ++i)
        if (!fixed[i]) m = std::max(m, std::fabs(r[i]));
    return m;
}

/// Minimizes the graph area with the boundary vertices fixed to the values
/// in `data` (entries at interior vertices are ignored). `initial`, when
/// given, seeds the interior; otherwise the interior starts at the mean of
/// the boundary data.
inline ScalarField solve_dirichlet(const std::shared_ptr<const TriangulatedDomain>& mesh,
                                   const std::vector<double>& data, const SolverOptions& opts,
                                   const std::vector<double>* initial = nullptr, SolveStats* stats = nullptr) {
    opts.validate();
    if (data.size() != mesh->vertex_count()) throw Error(ErrorCode::InvalidArgument, "boundary data size mismatch");
    auto fixed = mesh->boundary_mask();
    std::vector<int> index(fixed.size(), -1);
    int unknowns = 0;
    double mean = 0.0;
    std::size_t nb = 0;
    for (std::size_t i = 0; i < fixed.size(); ++i) {
        if (fixed[i]) {
            if (!std::isfinite(data[i])) {
                throw Error(ErrorCode::InvalidArgument, "boundary vertex " + std::to_string(i) + " has no finite value");
            }
            mean += data[i];
            ++nb;
        } else {
            index[i] = unknowns++;
        }
    }
    if (nb == 0) throw Error(ErrorCode::InvalidArgument, "mesh has no boundary");
    mean /= static_cast<double>(nb);

    std::vector<double> u(fixed.size());
    for (std::size_t i = 0; i < u.size(); ++i) u[i] = fixed[i] ? data[i] : initial ? (*initial)[i] : mean;

    AreaFunctional f(*mesh);
    SolveStats st;
    double energy = f.energy(u);
    st.energies.push_back(energy);
    auto residual_of = [&](const std::vector<double>& r) {
        double m = 0.0;
        for (std::size_t i = 0; i < r.size(); ++i)
            if (!fixed[i]) m = std::max(m, std::fabs(r[i]));
        return m;
    };
    std::vector<double> r = f.gradient(u);
    double res = residual_of(r);

    Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>> ldlt;
    bool analyzed = false;
    int iter = 0;
    while (res >= opts.residual_tol) {
        if (iter >= opts.max_newton_iters) {
            if (stats) *stats = st;
            std::ostringstream os;
            os << "no convergence after " << iter << " Newton iterations (residual " << res << ")";
            throw Error(ErrorCode::NonConvergence, os.str());
        }
        ++iter;
        Eigen::VectorXd rhs(unknowns);
        for (std::size_t i = 0; i < u.size(); ++i)
            if (index[i] >= 0) rhs[index[i]] = -r[i];
        auto h = f.hessian(u, index, unknowns);
        if (!analyzed) {
            ldlt.analyzePattern(h);
            analyzed = true;
        }
        ldlt.factorize(h);
        Eigen::VectorXd step;
        bool newton = ldlt.info() == Eigen::Success;
        if (newton) {
            step = ldlt.solve(rhs);
            newton = ldlt.info() == Eigen::Success && step.allFinite() && step.dot(rhs) > 0.0;
        }
        if (!newton) step = rhs;

        // Backtracking on the energy; near the minimizer energy differences
        // drop below roundoff, so a step that reduces the residual without
        // raising the energy beyond roundoff is also accepted.
        double slope = -step.dot(rhs);
        double noise = 64.0 * std::numeric_limits<double>::epsilon() * std::fabs(energy);
        bool accepted = false;
        for (int attempt = 0; attempt < 2 && !accepted; ++attempt) {
            if (attempt == 1) {
                step = rhs;  // gradient fallback
                slope = -step.dot(rhs);
                newton = false;
            }
            double s = 1.0;
            for (int k = 0; k < 60; ++k, s *= opts.line_search_shrink) {
                std::vector<double> trial = u;
                for (std::size_t i = 0; i < u.size(); ++i)
                    if (index[i] >= 0) trial[i] += s * step[index[i]];
                double e = f.energy(trial);
                if (!std::isfinite(e)) continue;
                bool armijo = e <= energy + 1e-4 * s * slope;
                std::vector<double> rt;
                bool flat = false;
                if (!armijo && e <= energy + noise) {
                    rt = f.gradient(trial);
                    flat = residual_of(rt) < res;
                }
                if (armijo || flat) {
                    u = std::move(trial);
                    energy = std::min(e, energy);
                    r = rt.empty() ? f.gradient(u) : std::move(rt);
                    res = residual_of(r);
                    accepted = true;
                    break;
                }
            }
        }
        if (!accepted) {
            if (stats) *stats = st;
            std::ostringstream os;
            os << "line search failed (residual " << res << ")";
            throw Error(ErrorCode::NonConvergence, os.str());
        }
        if (newton) {
            ++st.newton_iters;
        } else {
            ++st.gradient_steps;
        }
        st.energies.push_back(energy);
    }
    st.residual = res;
    if (stats) *stats = st;
    return ScalarField(mesh, std::move(u));
}

inline void write_field(std::ostream& os, const ScalarField& f) {
    os << "field " << f.size() << '\n' << std::setprecision(17);
    for (double v : f.values()) os << v << '\n';
}

inline ScalarField read_field(std::istream& is, std::shared_ptr<const TriangulatedDomain> mesh) {
    std::string line;
    std::size_t line_no = 0;
    auto fail = [&](const std::string& what) {
        throw Error(ErrorCode::Parse, "field line " + std::to_string(line_no) + ": " + what);
    };
    std::size_t n = 0;
    while (std::getline(is, line)) {
        ++line_no;
        std::istringstream ls(line);
        std::string kind;
        if (!(ls >> kind)) continue;
        if (kind != "field" || !(ls >> n)) fail("expected 'field <n_vertices>'");
        break;
    }
    if (line_no == 0) throw Error(ErrorCode::Parse, "field: empty input");
    std::vector<double> v;
    while (std::getline(is, line)) {
        ++line_no;
        std::istringstream ls(line);
        double x;
        if (!(ls >> x)) {
            if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
            fail("bad value");
        }
        v.push_back(x);
    }
    if (v.size() != n) throw Error(ErrorCode::Parse, "field: value count does not match the header");
    if (v.size() != mesh->vertex_count()) {
        throw Error(ErrorCode::BoundaryMismatch, "field has " + std::to_string(v.size()) + " values but the mesh has " +
                                                     std::to_string(mesh->vertex_count()) + " vertices");
    }
    return ScalarField(std::move(mesh), std::move(v));
}

}  // namespace scherk
