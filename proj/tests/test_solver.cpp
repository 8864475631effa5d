#include "scherk/detail/delaunay.hpp"
#include "scherk/scherk.hpp"

#include "oracles.hpp"

#include <gtest/gtest.h>

#include <map>
#include <numbers>
#include <random>
#include <sstream>

using namespace scherk;

namespace {

using MeshPtr = std::shared_ptr<const TriangulatedDomain>;

// Delaunay triangulation of n random points in the disk of radius r; the
// convex hull is the boundary.
MeshPtr random_mesh(unsigned seed, int n, double r = 0.8) {
    std::mt19937 rng(seed);
    std::uniform_real_distribution<double> U(-1.0, 1.0);
    detail::Delaunay dt;
    for (int k = 0; k < n;) {
        Complex p(r * U(rng), r * U(rng));
        if (std::abs(p) >= r) continue;
        dt.insert(p);
        ++k;
    }
    TriangulatedDomain m;
    const int s = detail::Delaunay::kSuperVertices;
    for (std::size_t v = static_cast<std::size_t>(s); v < dt.points().size(); ++v) m.vertices.emplace_back(dt.points()[v]);
    std::map<std::pair<int, int>, int> directed;
    for (const auto& t : dt.triangles()) {
        if (!t.alive || dt.is_super(t.v[0]) || dt.is_super(t.v[1]) || dt.is_super(t.v[2])) continue;
        m.triangles.push_back({t.v[0] - s, t.v[1] - s, t.v[2] - s});
        for (int i = 0; i < 3; ++i) directed[{t.v[i] - s, t.v[(i + 1) % 3] - s}] = 1;
    }
    for (const auto& [e, c] : directed)
        if (!directed.count({e.second, e.first})) m.boundary.push_back({e.first, e.second, "hull"});
    validate_mesh(m);
    return std::make_shared<const TriangulatedDomain>(std::move(m));
}

// Equilateral lattice patch (all angles 60 degrees) of the given ring count
// and Euclidean spacing, centered at c.
MeshPtr lattice_mesh(int rings, double spacing, Complex c = {}) {
    TriangulatedDomain m;
    std::map<std::pair<int, int>, int> id;
    const Complex w = std::polar(1.0, std::numbers::pi / 3.0);
    for (int i = -rings; i <= rings; ++i) {
        for (int j = -rings; j <= rings; ++j) {
            if (std::abs(i + j) > rings) continue;
            id[{i, j}] = static_cast<int>(m.vertices.size());
            m.vertices.emplace_back(c + spacing * (static_cast<double>(i) + static_cast<double>(j) * w));
        }
    }
    std::map<std::pair<int, int>, int> directed;
    auto add = [&](int a, int b, int d) {
        m.triangles.push_back({a, b, d});
        directed[{a, b}] = directed[{b, d}] = directed[{d, a}] = 1;
    };
    for (const auto& [ij, a] : id) {
        auto [i, j] = ij;
        if (id.count({i + 1, j}) && id.count({i, j + 1})) add(a, id[{i + 1, j}], id[{i, j + 1}]);
        if (id.count({i + 1, j}) && id.count({i + 1, j - 1})) add(a, id[{i + 1, j - 1}], id[{i + 1, j}]);
    }
    for (const auto& [e, c2] : directed)
        if (!directed.count({e.second, e.first})) m.boundary.push_back({e.first, e.second, "rim"});
    validate_mesh(m);
    return std::make_shared<const TriangulatedDomain>(std::move(m));
}

std::vector<double> random_values(std::size_t n, unsigned seed, double scale = 1.0) {
    std::mt19937 rng(seed);
    std::uniform_real_distribution<double> U(-scale, scale);
    std::vector<double> v(n);
    for (auto& x : v) x = U(rng);
    return v;
}

SolverOptions tight() {
    SolverOptions o;
    o.residual_tol = 1e-12;
    o.max_newton_iters = 100;
    return o;
}

void expect_max_principle(const ScalarField& u, const std::vector<double>& data) {
    auto fixed = u.mesh().boundary_mask();
    double lo = 1e300, hi = -1e300;
    for (std::size_t v = 0; v < data.size(); ++v) {
        if (!fixed[v]) continue;
        lo = std::min(lo, data[v]);
        hi = std::max(hi, data[v]);
    }
    for (std::size_t v = 0; v < data.size(); ++v) {
        EXPECT_GE(u[v], lo - 1e-12);
        EXPECT_LE(u[v], hi + 1e-12);
    }
}

IdealPolygon symmetric_quad() { return IdealPolygon::from_degrees({0, 90, 180, 270}); }

MeshParams params(double h) {
    MeshParams p;
    p.target_edge_length = h;
    return p;
}

// Vertex index of the mesh vertex at z, or -1.
int find_vertex(const TriangulatedDomain& m, Complex z, double tol = 1e-9) {
    for (std::size_t v = 0; v < m.vertex_count(); ++v)
        if (std::abs(m.z(static_cast<int>(v)) - z) < tol) return static_cast<int>(v);
    return -1;
}

}  // namespace

// ---------------------------------------------------------------------------
// Area functional
// ---------------------------------------------------------------------------

TEST(GraphArea, IntegrandMatchesProductMetricOnSmallTriangles) {
    std::mt19937 rng(7);
    std::uniform_real_distribution<double> U(-1.0, 1.0);
    for (int k = 0; k < 50; ++k) {
        Complex a(0.7 * U(rng), 0.7 * U(rng));
        if (std::abs(a) > 0.7) continue;
        double s = 1e-3;
        Complex b = a + Complex(s, 0.0), c = a + Complex(0.3 * s, s);
        TriangulatedDomain m;
        m.vertices = {DiskPoint(a), DiskPoint(b), DiskPoint(c)};
        m.triangles = {{0, 1, 2}};
        std::vector<double> u = {U(rng) * s * 5, U(rng) * s * 5, U(rng) * s * 5};
        double e = AreaFunctional(m).energy(u);
        double ref = oracle::graph_area(a, b, c, u[0], u[1], u[2]);
        EXPECT_NEAR(e / ref, 1.0, 1e-6);
    }
}

TEST(GraphArea, ConvergesToProductMetricAreaUnderRefinement) {
    // Affine u over one triangle; subdividing it leaves u exact, so the
    // discrete functional must approach the oracle area at second order.
    Complex a(-0.5, -0.4), b(0.6, -0.3), c(0.1, 0.7);
    double ua = 0.3, ub = -1.2, uc = 2.0;
    double ref = oracle::graph_area(a, b, c, ua, ub, uc);
    double prev_err = 0.0;
    for (int level : {8, 16, 32}) {
        TriangulatedDomain m;
        std::vector<double> u;
        auto id = [&](int i, int j) { return i * (level + 1) - i * (i - 1) / 2 + j; };
        for (int i = 0; i <= level; ++i) {
            for (int j = 0; j <= level - i; ++j) {
                double s = static_cast<double>(i) / level, r = static_cast<double>(j) / level;
                m.vertices.emplace_back(a + s * (b - a) + r * (c - a));
                u.push_back(ua + s * (ub - ua) + r * (uc - ua));
            }
        }
        for (int i = 0; i < level; ++i) {
            for (int j = 0; j < level - i; ++j) {
                m.triangles.push_back({id(i, j), id(i + 1, j), id(i, j + 1)});
                if (j + 1 < level - i) m.triangles.push_back({id(i + 1, j), id(i + 1, j + 1), id(i, j + 1)});
            }
        }
        double err = std::fabs(AreaFunctional(m).energy(u) - ref) / ref;
        EXPECT_LT(err, 1e-3);
        if (prev_err > 0.0) {
            EXPECT_LT(err, prev_err / 3.0);
        }
        prev_err = err;
    }
}

TEST(GraphArea, ConstantFieldGivesDomainArea) {
    auto m = random_mesh(3, 30);
    ScalarField f(m, std::vector<double>(m->vertex_count(), 4.5));
    EXPECT_NEAR(graph_area(f).value, domain_area(*m), 1e-12 * domain_area(*m));
    // Sum of hyperbolic areas with the same rule, built independently.
    double sum = 0.0;
    for (const auto& t : m->triangles) {
        Complex p[3] = {m->z(t[0]), m->z(t[1]), m->z(t[2])};
        double area = 0.5 * std::fabs((p[1] - p[0]).real() * (p[2] - p[0]).imag() -
                                      (p[1] - p[0]).imag() * (p[2] - p[0]).real());
        for (int i = 0; i < 3; ++i) {
            Complex q = (4.0 * p[i] + p[(i + 1) % 3] + p[(i + 2) % 3]) / 6.0;
            sum += area / 3.0 * std::pow(oracle::lambda(q), 2);
        }
    }
    EXPECT_NEAR(graph_area(f).value, sum, 1e-12 * sum);
}

TEST(GraphArea, LinearPerturbationIsQuadratic) {
    auto m = random_mesh(11, 30);
    double a0 = domain_area(*m);
    auto excess = [&](double eps) {
        std::vector<double> u(m->vertex_count());
        for (std::size_t v = 0; v < u.size(); ++v) u[v] = eps * (m->vertices[v].x + 2.0 * m->vertices[v].y);
        return graph_area(ScalarField(m, u)).value - a0;
    };
    double ratio = excess(1e-3) / excess(1e-4);
    EXPECT_NEAR(ratio, 100.0, 0.5);
    EXPECT_GT(excess(1e-3), 0.0);
}

TEST(GraphArea, AtLeastDomainArea) {
    for (unsigned seed = 0; seed < 10; ++seed) {
        auto m = random_mesh(seed, 30);
        ScalarField f(m, random_values(m->vertex_count(), seed + 100, 3.0));
        EXPECT_GE(graph_area(f).value, domain_area(*m));
    }
}

TEST(GraphArea, GradientMatchesCentralDifferences) {
    for (unsigned seed = 0; seed < 20; ++seed) {
        auto m = random_mesh(seed, 30);
        AreaFunctional f(*m);
        auto u = random_values(m->vertex_count(), seed + 1000, 2.0);
        auto g = f.gradient(u);
        double worst = 0.0, scale = 0.0;
        for (std::size_t i = 0; i < u.size(); ++i) scale = std::max(scale, std::fabs(g[i]));
        for (std::size_t i = 0; i < u.size(); ++i) {
            double h = 1e-5;
            auto up = u, dn = u;
            up[i] += h;
            dn[i] -= h;
            double fd = (f.energy(up) - f.energy(dn)) / (2.0 * h);
            worst = std::max(worst, std::fabs(fd - g[i]) / std::max(std::fabs(g[i]), 1e-2 * scale));
        }
        EXPECT_LT(worst, 1e-6) << "seed " << seed;
    }
}

TEST(GraphArea, HessianMatchesGradientDifferences) {
    auto m = random_mesh(5, 30);
    AreaFunctional f(*m);
    auto u = random_values(m->vertex_count(), 17, 2.0);
    std::vector<int> index(u.size());
    for (std::size_t i = 0; i < u.size(); ++i) index[i] = static_cast<int>(i);
    Eigen::MatrixXd h(f.hessian(u, index, static_cast<int>(u.size())));
    for (std::size_t j = 0; j < u.size(); ++j) {
        auto up = u, dn = u;
        up[j] += 1e-6;
        dn[j] -= 1e-6;
        auto gp = f.gradient(up), gm = f.gradient(dn);
        for (std::size_t i = 0; i < u.size(); ++i) {
            EXPECT_NEAR(h(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)), (gp[i] - gm[i]) / 2e-6,
                        1e-6 * (1.0 + std::fabs(h(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)))));
        }
    }
}

// ---------------------------------------------------------------------------
// Dirichlet solver
// ---------------------------------------------------------------------------

TEST(SolveDirichlet, ConstantDataNeedsNoIterations) {
    auto m = random_mesh(2, 30);
    SolveStats st;
    auto u = solve_dirichlet(m, std::vector<double>(m->vertex_count(), -2.5), SolverOptions{}, nullptr, &st);
    EXPECT_EQ(st.newton_iters, 0);
    EXPECT_EQ(st.gradient_steps, 0);
    for (double v : u.values()) EXPECT_EQ(v, -2.5);
}

TEST(SolveDirichlet, ResidualBelowToleranceAndEnergyDecreases) {
    auto m = random_mesh(4, 30);
    auto data = random_values(m->vertex_count(), 40, 5.0);
    SolverOptions o;
    SolveStats st;
    auto u = solve_dirichlet(m, data, o, nullptr, &st);
    AreaFunctional f(*m);
    EXPECT_LT(interior_residual(f, u.values(), m->boundary_mask()), o.residual_tol);
    EXPECT_LT(st.residual, o.residual_tol);
    for (std::size_t k = 1; k < st.energies.size(); ++k) EXPECT_LE(st.energies[k], st.energies[k - 1]);
    auto fixed = m->boundary_mask();
    for (std::size_t v = 0; v < data.size(); ++v)
        if (fixed[v]) {
            EXPECT_EQ(u[v], data[v]);
        }
}

TEST(SolveDirichlet, MaximumPrinciple) {
    for (unsigned seed = 0; seed < 20; ++seed) {
        auto m = random_mesh(seed, 30);
        auto data = random_values(m->vertex_count(), seed + 500, 1.0 + seed);
        expect_max_principle(solve_dirichlet(m, data, tight()), data);
    }
}

TEST(SolveDirichlet, TranslationEquivariance) {
    auto m = random_mesh(8, 30);
    auto data = random_values(m->vertex_count(), 9, 3.0);
    auto o = tight();
    auto u = solve_dirichlet(m, data, o);
    for (double c : {-7.0, 0.25, 40.0}) {
        auto shifted = data;
        for (auto& d : shifted) d += c;
        auto v = solve_dirichlet(m, shifted, o);
        for (std::size_t i = 0; i < data.size(); ++i) EXPECT_NEAR(v[i], u[i] + c, 1e-9);
    }
}

TEST(SolveDirichlet, IndependentOfInitialization) {
    for (unsigned seed = 0; seed < 5; ++seed) {
        auto m = random_mesh(seed + 30, 30);
        auto data = random_values(m->vertex_count(), seed, 2.0);
        auto o = tight();
        std::vector<double> zero(data.size(), 0.0);
        auto noise = random_values(data.size(), seed + 77, 1.0);
        auto a = solve_dirichlet(m, data, o, &zero);
        auto b = solve_dirichlet(m, data, o, &noise);
        for (std::size_t i = 0; i < data.size(); ++i) EXPECT_NEAR(a[i], b[i], 10 * o.residual_tol);
    }
}

TEST(SolveDirichlet, ComparisonPrinciple) {
    // Raising the data at any single boundary vertex raises the solution
    // everywhere, on acute lattice patches at several positions in the disk
    // with moderate random data; every boundary vertex is tried.
    for (unsigned seed = 0; seed < 12; ++seed) {
        auto m = lattice_mesh(3, 0.05, std::polar(0.15 * (seed % 4), 1.3 * seed));
        auto g1 = random_values(m->vertex_count(), seed, 0.02);
        auto bump = random_values(m->vertex_count(), seed + 1, 1.0);
        auto fixed = m->boundary_mask();
        auto u1 = solve_dirichlet(m, g1, tight());
        for (std::size_t v = 0; v < g1.size(); ++v) {
            if (!fixed[v]) continue;
            auto g2 = g1;
            g2[v] += std::fabs(bump[v]) + 0.01;
            auto u2 = solve_dirichlet(m, g2, tight());
            for (std::size_t i = 0; i < g1.size(); ++i) EXPECT_LE(u1[i], u2[i] + 1e-11);
        }
    }
}

TEST(SolveDirichlet, ReportsNonConvergence) {
    auto m = random_mesh(1, 30);
    auto data = random_values(m->vertex_count(), 2, 5.0);
    SolverOptions o;
    o.max_newton_iters = 1;
    try {
        solve_dirichlet(m, data, o);
        FAIL() << "expected NonConvergence";
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), ErrorCode::NonConvergence);
        EXPECT_NE(std::string(e.what()).find("residual"), std::string::npos);
    }
}

TEST(SolveDirichlet, RejectsBadInput) {
    auto m = random_mesh(1, 30);
    std::vector<double> data(m->vertex_count(), std::nan(""));
    EXPECT_THROW(solve_dirichlet(m, data, SolverOptions{}), Error);
    EXPECT_THROW(solve_dirichlet(m, std::vector<double>(3, 0.0), SolverOptions{}), Error);
    SolverOptions bad;
    bad.residual_tol = 0.0;
    EXPECT_THROW(bad.validate(), Error);
    bad = {};
    bad.line_search_shrink = 1.0;
    EXPECT_THROW(bad.validate(), Error);
}

// ---------------------------------------------------------------------------
// Field files and sampling
// ---------------------------------------------------------------------------

TEST(FieldIo, RoundTripIsExact) {
    auto m = random_mesh(6, 30);
    ScalarField f(m, random_values(m->vertex_count(), 3, 1e3));
    std::stringstream ss;
    write_field(ss, f);
    auto g = read_field(ss, m);
    EXPECT_EQ(f.values(), g.values());
}

TEST(FieldIo, Errors) {
    auto m = random_mesh(6, 30);
    std::istringstream wrong_count("field 3\n1\n2\n3\n");
    try {
        read_field(wrong_count, m);
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), ErrorCode::BoundaryMismatch);
    }
    std::istringstream junk("field 2\n1\nx\n");
    EXPECT_THROW(read_field(junk, m), Error);
    EXPECT_THROW(ScalarField(m, std::vector<double>(2, 0.0)), Error);
}

TEST(FieldSampler, ReproducesAffineFunctions) {
    auto m = random_mesh(12, 60);
    std::vector<double> u(m->vertex_count());
    for (std::size_t v = 0; v < u.size(); ++v) u[v] = 1.0 + 2.0 * m->vertices[v].x - 3.0 * m->vertices[v].y;
    ScalarField f(m, u);
    FieldSampler s(f);
    std::mt19937 rng(1);
    std::uniform_real_distribution<double> U(-0.3, 0.3);
    for (int k = 0; k < 200; ++k) {
        Complex p(U(rng), U(rng));
        EXPECT_NEAR(s(p), 1.0 + 2.0 * p.real() - 3.0 * p.imag(), 1e-12);
    }
    for (std::size_t v = 0; v < u.size(); ++v) EXPECT_NEAR(s(m->z(static_cast<int>(v))), u[v], 1e-12);
    EXPECT_THROW((void)s(Complex(0.95, 0.0)), Error);
}

// ---------------------------------------------------------------------------
// Scherk graphs
// ---------------------------------------------------------------------------

class ScherkQuad : public ::testing::Test {
protected:
    static void SetUpTestSuite() {
        auto poly = symmetric_quad();
        result_ = new ScherkResult(
            scherk_solve(poly, TruncationScheme::uniform(poly, -6.0), {4, 8, 12, 16}, params(0.15), SolverOptions{}));
    }
    static void TearDownTestSuite() {
        delete result_;
        result_ = nullptr;
    }
    static ScherkResult* result_;
};
ScherkResult* ScherkQuad::result_ = nullptr;

TEST_F(ScherkQuad, BoundaryData) {
    const auto& u = result_->field;
    const auto& m = u.mesh();
    for (const auto& e : m.boundary) {
        if (e.tag.rfind("alpha", 0) == 0) {
            EXPECT_EQ(u[static_cast<std::size_t>(e.a)], 16.0);
        }
        if (e.tag.rfind("beta", 0) == 0) {
            EXPECT_EQ(u[static_cast<std::size_t>(e.a)], -16.0);
        }
    }
    // Horocyclic arcs run monotonically from one edge value to the other.
    for (int i = 0; i < 4; ++i) {
        auto c = m.chain("c_" + std::to_string(i));
        double first = u[static_cast<std::size_t>(c.vertices.front())];
        double last = u[static_cast<std::size_t>(c.vertices.back())];
        EXPECT_EQ(std::fabs(first), 16.0);
        EXPECT_EQ(first, -last);
        for (std::size_t k = 1; k < c.vertices.size(); ++k) {
            double d = u[static_cast<std::size_t>(c.vertices[k])] - u[static_cast<std::size_t>(c.vertices[k - 1])];
            EXPECT_GT(d * (last - first), 0.0);
        }
    }
}

TEST_F(ScherkQuad, OddUnderQuarterTurn) {
    const auto& u = result_->field;
    const auto& m = u.mesh();
    int paired = 0;
    for (std::size_t v = 0; v < m.vertex_count(); ++v) {
        int w = find_vertex(m, m.z(static_cast<int>(v)) * Complex(0.0, 1.0));
        ASSERT_GE(w, 0);
        EXPECT_NEAR(u[static_cast<std::size_t>(w)], -u[v], 1e-6);
        ++paired;
    }
    EXPECT_EQ(paired, static_cast<int>(m.vertex_count()));
}

TEST_F(ScherkQuad, VanishesOnDiagonals) {
    // The quadrilateral's vertices lie on the axes, which are its diagonals.
    const auto& u = result_->field;
    const auto& m = u.mesh();
    int on = 0;
    for (std::size_t v = 0; v < m.vertex_count(); ++v) {
        Complex z = m.z(static_cast<int>(v));
        if (std::fabs(z.real()) < 1e-12 || std::fabs(z.imag()) < 1e-12) {
            EXPECT_NEAR(u[v], 0.0, 1e-5);
            ++on;
        }
    }
    EXPECT_GT(on, 20);
}

TEST_F(ScherkQuad, SignStructure) {
    // Edge 0 (alpha) spans the first quadrant; beta edges are adjacent.
    const auto& u = result_->field;
    const auto& m = u.mesh();
    for (std::size_t v = 0; v < m.vertex_count(); ++v) {
        Complex z = m.z(static_cast<int>(v));
        if (std::fabs(z.real()) < 1e-9 || std::fabs(z.imag()) < 1e-9) continue;
        bool alpha_side = z.real() * z.imag() > 0.0;
        if (alpha_side) {
            EXPECT_GT(u[v], 0.0);
        } else {
            EXPECT_LT(u[v], 0.0);
        }
    }
}

TEST_F(ScherkQuad, ContinuationStabilizesMonotonically) {
    const auto& s = result_->steps;
    ASSERT_EQ(s.size(), 4u);
    EXPECT_TRUE(std::isnan(s[0].drift));
    EXPECT_LT(s[3].drift, s[2].drift);
    EXPECT_LT(s[2].drift, s[1].drift);
    EXPECT_LT(s[3].drift, 4.0);
    for (const auto& st : s) EXPECT_LT(st.residual, 1e-10);
    EXPECT_GT(result_->probe.size(), 100u);
}

TEST_F(ScherkQuad, ProbeIsFarFromHorocyclicArcs) {
    const auto& m = result_->field.mesh();
    auto fixed = m.boundary_mask();
    for (int v : result_->probe) {
        EXPECT_FALSE(fixed[static_cast<std::size_t>(v)]);
        for (const auto& e : m.boundary) {
            if (e.tag.rfind("c_", 0) == 0) {
                EXPECT_GE(oracle::metric_distance(m.z(v), m.z(e.a)), 1.0 - 1e-9);
            }
        }
    }
}

TEST(Scherk, RejectsUnbalancedPolygon) {
    auto poly = IdealPolygon::from_degrees({0, 60, 180, 270});
    try {
        scherk_solve(poly, TruncationScheme::uniform(poly, -6.0), {4, 8}, params(0.3), SolverOptions{});
        FAIL() << "expected NotAdmissible";
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), ErrorCode::NotAdmissible);
    }
}

TEST(Scherk, ReportsUnstabilizedContinuation) {
    auto poly = symmetric_quad();
    StabilizationRule rule;
    rule.tolerance = 1e-9;
    try {
        scherk_solve(poly, TruncationScheme::uniform(poly, -3.0), {2, 4}, params(0.3), SolverOptions{}, rule);
        FAIL() << "expected NotStabilized";
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), ErrorCode::NotStabilized);
        EXPECT_NE(std::string(e.what()).find("drift"), std::string::npos);
    }
    EXPECT_THROW(scherk_solve(poly, TruncationScheme::uniform(poly, -3.0), {4, 2}, params(0.3), SolverOptions{}),
                 Error);
}

// ---------------------------------------------------------------------------
// Barrier family
// ---------------------------------------------------------------------------

namespace {

// A mild reference graph: one continuation step with small cutoff keeps
// gradients moderate.
const ScherkResult& mild_reference() {
    static const ScherkResult r = [] {
        auto poly = symmetric_quad();
        return scherk_solve(poly, TruncationScheme::uniform(poly, -6.0), {1.0}, params(0.2), SolverOptions{});
    }();
    return r;
}

BarrierOptions barrier_options() {
    BarrierOptions o;
    o.mesh = params(0.2);
    return o;
}

}  // namespace

TEST(Barrier, ZeroHeightReproducesReference) {
    auto poly = symmetric_quad();
    auto opts = barrier_options();
    auto ref = annulus_reference(poly, mild_reference().field, 3.0, opts);
    auto m = barrier_member(ref, 3.0, 0.0, opts);
    for (std::size_t v = 0; v < m.field.size(); ++v) EXPECT_NEAR(m.field[v], m.reference[v], 1e-10);
}

TEST(Barrier, ReferenceFollowsTheGraphOnBothCurves) {
    auto poly = symmetric_quad();
    auto opts = barrier_options();
    const auto& u = mild_reference().field;
    auto ref = annulus_reference(poly, u, 3.0, opts);
    FieldSampler s(u);
    const auto& m = ref.field.mesh();
    for (const auto& e : m.boundary) EXPECT_NEAR(ref.field[static_cast<std::size_t>(e.a)], s(m.z(e.a)), 1e-14);
    // The graph solves the same equation, so the two agree up to
    // discretization error inside the annulus.
    for (std::size_t v = 0; v < m.vertex_count(); ++v) EXPECT_NEAR(ref.field[v], s(m.z(static_cast<int>(v))), 5e-2);
}

TEST(Barrier, MembersAgreeWithReferenceOnInnerCurve) {
    auto poly = symmetric_quad();
    auto m = barrier_step(poly, mild_reference().field, 3.0, 0.1, barrier_options());
    const auto& mesh = m.field.mesh();
    for (const auto& e : mesh.boundary) {
        double d = m.field[static_cast<std::size_t>(e.a)] - m.reference[static_cast<std::size_t>(e.a)];
        if (e.tag == "gamma1") {
            EXPECT_EQ(d, 0.0);
        }
        if (e.tag == "gamman") {
            EXPECT_NEAR(d, 0.1, 1e-15);
        }
    }
}

TEST(Barrier, SandwichAndMonotonicityInT) {
    auto poly = symmetric_quad();
    auto opts = barrier_options();
    for (double n : {2.0, 4.0}) {
        auto ref = annulus_reference(poly, mild_reference().field, n, opts);
        std::vector<BarrierMember> ms;
        for (double t : {0.05, 0.1, 0.2}) {
            ms.push_back(barrier_member(ref, n, t, opts));
            EXPECT_NO_THROW(check_sandwich(ms.back(), opts.sandwich_tol)) << "n=" << n << " t=" << t;
        }
        for (std::size_t k = 1; k < ms.size(); ++k)
            for (std::size_t v = 0; v < ms[k].field.size(); ++v) EXPECT_LE(ms[k - 1].field[v], ms[k].field[v] + 1e-9);
    }
}

TEST(Barrier, SandwichCheckReportsViolations) {
    auto poly = symmetric_quad();
    auto opts = barrier_options();
    auto ref = annulus_reference(poly, mild_reference().field, 2.0, opts);
    auto m = barrier_member(ref, 2.0, 0.1, opts);
    m.t = 0.05;  // pretend the member was meant to stay below u + 0.05
    try {
        check_sandwich(m, opts.sandwich_tol);
        FAIL() << "expected SandwichViolated";
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), ErrorCode::SandwichViolated);
    }
}

TEST(Barrier, FamilyTableStartsAtT) {
    auto poly = symmetric_quad();
    auto opts = barrier_options();
    auto fam = barrier_family(poly, mild_reference().field, {0.1}, {2.0, 3.0, 4.0}, opts);
    ASSERT_EQ(fam.table.size(), 3u);
    EXPECT_NEAR(fam.table[0].sup_diff, 0.1, 1e-12);  // Gamma_2 itself lies in D_2
    EXPECT_EQ(fam.members.size(), 3u);
    EXPECT_TRUE(fam.table_non_increasing());
    EXPECT_LT(fam.table.back().sup_diff, fam.table.front().sup_diff);
    std::ostringstream os;
    write_convergence_table(os, fam.table);
    EXPECT_EQ(os.str().substr(0, 11), "n sup_diff\n");
}

TEST(Barrier, ZeroHeightFamilyIsTheReference) {
    auto poly = symmetric_quad();
    auto fam = barrier_family(poly, mild_reference().field, {0.0}, {2.0, 3.0}, barrier_options());
    for (const auto& [key, m] : fam.members) EXPECT_EQ(m.field.values(), m.reference.values());
    for (const auto& row : fam.table) EXPECT_LT(row.sup_diff, 1e-12);
}

TEST(Barrier, RejectsBadParameters) {
    auto poly = symmetric_quad();
    auto opts = barrier_options();
    const auto& u = mild_reference().field;
    EXPECT_THROW(barrier_family(poly, u, {0.3}, {2.0}, opts), Error);   // beyond t_max
    EXPECT_THROW(barrier_family(poly, u, {-0.1}, {2.0}, opts), Error);
    EXPECT_THROW(barrier_family(poly, u, {0.1}, {4.0, 2.0}, opts), Error);
    EXPECT_THROW(annulus_reference(poly, u, 0.5, opts), Error);
}

TEST(Barrier, ParallelFamilyMatchesSequential) {
    auto poly = symmetric_quad();
    auto opts = barrier_options();
    const auto& u = mild_reference().field;
    auto a = barrier_family(poly, u, {0.1}, {2.0, 3.0}, opts);
    opts.threads = 2;
    auto b = barrier_family(poly, u, {0.1}, {2.0, 3.0}, opts);
    for (const auto& [k, m] : a.members) EXPECT_EQ(m.field.values(), b.members.at(k).field.values());
}
