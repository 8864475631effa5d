#include "oracles.hpp"
#include "scherk/hyperbolic.hpp"

#include <gtest/gtest.h>

#include <random>

using namespace scherk;

namespace {

constexpr double kPi = std::numbers::pi;
const double kLog3 = std::log(3.0);

DiskPoint random_point(std::mt19937_64& rng, double rmax = 0.95) {
    std::uniform_real_distribution<double> r(0.0, 1.0), a(0.0, kTwoPi);
    return DiskPoint(std::polar(rmax * std::sqrt(r(rng)), a(rng)));
}

}  // namespace

TEST(HypDistance, IdentityAndDiameter) {
    EXPECT_EQ(hyp_distance(DiskPoint{0, 0}, DiskPoint{0, 0}), 0.0);
    // Oracle: metric integration along the diameter.
    double oracle = oracle::metric_distance({0, 0}, {0.5, 0});
    EXPECT_NEAR(oracle, kLog3, 1e-12);
    EXPECT_NEAR(hyp_distance(DiskPoint{0, 0}, DiskPoint{0.5, 0}), kLog3, 1e-14);
}

TEST(HypDistance, TwoIndependentRoutesAgree) {
    DiskPoint p{0.3, 0.1}, q{-0.2, 0.4};
    double arccosh_form =
        std::acosh(1.0 + 2.0 * std::norm(p.z() - q.z()) / ((1.0 - p.norm2()) * (1.0 - q.norm2())));
    double integrated = oracle::metric_distance(p.z(), q.z());
    EXPECT_NEAR(arccosh_form, integrated, 1e-9);
    EXPECT_NEAR(hyp_distance(p, q), arccosh_form, 1e-12);
}

TEST(HypDistance, MetricPropertiesOnRandomPairs) {
    std::mt19937_64 rng(7);
    for (int i = 0; i < 1000; ++i) {
        DiskPoint p = random_point(rng), q = random_point(rng), r = random_point(rng);
        double d = hyp_distance(p, q);
        EXPECT_NEAR(d, oracle::metric_distance(p.z(), q.z()), 1e-9 * std::max(1.0, d));
        EXPECT_EQ(d, hyp_distance(q, p));
        EXPECT_GE(d, 0.0);
        EXPECT_LE(d, hyp_distance(p, r) + hyp_distance(r, q) + 1e-12);
    }
}

TEST(Busemann, NormalizationAndLimitOracle) {
    IdealPoint xi(0.0);
    EXPECT_EQ(busemann(xi, DiskPoint{0, 0}), 0.0);
    EXPECT_NEAR(oracle::busemann_limit(xi.z(), {0.5, 0}), -kLog3, 1e-12);
    EXPECT_NEAR(oracle::busemann_limit(xi.z(), {-0.5, 0}), kLog3, 1e-12);
    EXPECT_NEAR(busemann(xi, DiskPoint{0.5, 0}), -kLog3, 1e-14);
    EXPECT_NEAR(busemann(xi, DiskPoint{-0.5, 0}), kLog3, 1e-14);
}

TEST(Busemann, UnitSlopeAlongRandomRays) {
    std::mt19937_64 rng(11);
    std::uniform_real_distribution<double> ang(0.0, kTwoPi), dist(0.0, 4.0);
    for (int i = 0; i < 100; ++i) {
        DiskPoint p = random_point(rng, 0.8);
        IdealPoint xi(ang(rng));
        double s = dist(rng);
        const double h = 1e-4;
        auto b_at = [&](double d) { return busemann(xi, point_on_ray(p, xi, d)); };
        double slope = (b_at(s + h) - b_at(s - h < 0 ? 0 : s - h)) / (s - h < 0 ? s + h : 2 * h);
        EXPECT_NEAR(slope, -1.0, 1e-7);
        // Affine: value at distance s equals value at p minus s.
        EXPECT_NEAR(b_at(s), busemann(xi, p) - s, 1e-9);
    }
}

TEST(HorocycleFoot, DiameterCases) {
    Geodesic g(IdealPoint(0.0), IdealPoint(kPi));
    DiskPoint f0 = geodesic_foot_on_horocycle(g, Horocycle{IdealPoint(0.0), 0.0});
    EXPECT_NEAR(f0.x, 0.0, 1e-15);
    EXPECT_NEAR(f0.y, 0.0, 1e-15);

    DiskPoint f1 = geodesic_foot_on_horocycle(g, Horocycle{IdealPoint(0.0), -1.0});
    Complex root = oracle::foot_by_root(g.from().z(), g.to().z(), Complex(1, 0), -1.0);
    EXPECT_NEAR(root.real(), std::tanh(0.5), 1e-10);
    EXPECT_NEAR(f1.x, std::tanh(0.5), 1e-14);
    EXPECT_NEAR(f1.y, 0.0, 1e-14);
}

TEST(HorocycleFoot, NonDiameterMatchesRootFinding) {
    Geodesic g(IdealPoint(0.0), IdealPoint(kPi / 2));
    Horocycle h{IdealPoint(0.0), 0.0};
    DiskPoint f = geodesic_foot_on_horocycle(g, h);
    EXPECT_NEAR(busemann(h.center, f), 0.0, 1e-10);
    Complex root = oracle::foot_by_root(g.from().z(), g.to().z(), h.center.z(), 0.0);
    EXPECT_NEAR(std::abs(root - f.z()), 0.0, 1e-10);
    // On the geodesic: the Euclidean circle through both ideal endpoints.
    Complex c(1.0, 1.0);
    EXPECT_NEAR(std::abs(f.z() - c), 1.0, 1e-12);
}

TEST(HorocycleFoot, RejectsForeignCenter) {
    Geodesic g(IdealPoint(0.0), IdealPoint(kPi / 2));
    EXPECT_THROW((void)geodesic_foot_on_horocycle(g, Horocycle{IdealPoint(kPi), 0.0}), Error);
    try {
        (void)truncated_length(g, Horocycle{IdealPoint(kPi), 0.0}, Horocycle{IdealPoint(0.0), 0.0});
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), ErrorCode::CenterNotEndpoint);
    }
}

TEST(TruncatedLength, WorkedExamples) {
    Geodesic diam(IdealPoint(0.0), IdealPoint(kPi));
    auto h = [](double th, double s) { return Horocycle{IdealPoint(th), s}; };
    EXPECT_NEAR(truncated_length(diam, h(0, 0), h(kPi, 0)), 0.0, 1e-14);
    EXPECT_NEAR(truncated_length(diam, h(0, -1), h(kPi, -1)), 2.0, 1e-14);
    // Feet + distance oracle for the diameter case.
    EXPECT_NEAR(hyp_distance(Complex(std::tanh(0.5), 0), Complex(-std::tanh(0.5), 0)), 2.0, 1e-14);

    Geodesic g(IdealPoint(0.0), IdealPoint(kPi / 2));
    double len = truncated_length(g, h(0, 0), h(kPi / 2, 0));
    EXPECT_NEAR(len, -std::log(2.0), 1e-14);
    Complex f1 = oracle::foot_by_root(1.0, Complex(0, 1), 1.0, 0.0);
    Complex f2 = oracle::foot_by_root(1.0, Complex(0, 1), Complex(0, 1), 0.0);
    // Feet appear in reversed order (overlapping horoballs), so the sign is negative.
    EXPECT_NEAR(-oracle::metric_distance(f1, f2), len, 1e-9);
}

TEST(TruncatedLength, AdditivityUnderShrinking) {
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> ang(0.0, kTwoPi), lev(-3.0, 1.0), del(0.0, 3.0);
    for (int i = 0; i < 200; ++i) {
        IdealPoint a(ang(rng)), b(ang(rng));
        if (a == b) continue;
        Geodesic g(a, b);
        Horocycle h1{a, lev(rng)}, h2{b, lev(rng)};
        double d1 = del(rng), d2 = del(rng);
        EXPECT_NEAR(truncated_length(g, h1, h2) + d1 + d2,
                    truncated_length(g, h1.shrunk(d1), h2.shrunk(d2)), 1e-10);
    }
}

TEST(PointOnRay, Examples) {
    DiskPoint o{0, 0};
    DiskPoint p0 = point_on_ray(o, IdealPoint(0.0), 0.0);
    EXPECT_EQ(p0.x, 0.0);
    EXPECT_EQ(p0.y, 0.0);
    DiskPoint p1 = point_on_ray(o, IdealPoint(0.0), 1.0);
    EXPECT_NEAR(p1.x, std::tanh(0.5), 1e-15);
    EXPECT_NEAR(oracle::metric_distance(o.z(), p1.z()), 1.0, 1e-10);

    DiskPoint p{0.3, 0.0};
    IdealPoint xi(kPi / 2);
    DiskPoint q = point_on_ray(p, xi, 2.0);
    EXPECT_NEAR(hyp_distance(p, q), 2.0, 1e-12);
    // Collinear with the ray: q lies on the geodesic from p to xi, so the
    // Busemann function at xi dropped by exactly 2.
    EXPECT_NEAR(busemann(xi, q), busemann(xi, p) - 2.0, 1e-12);
    EXPECT_THROW((void)point_on_ray(p, xi, -1.0), Error);
}

TEST(Geodesic, ParameterizationIsUnitSpeedTowardTarget) {
    Geodesic g(IdealPoint(0.4), IdealPoint(2.9));
    for (double t : {-3.0, -0.5, 0.0, 1.0, 4.0}) {
        EXPECT_NEAR(hyp_distance(g.point_at(t), g.point_at(t + 0.7)), 0.7, 1e-10);
        EXPECT_NEAR(busemann(g.to().z(), g.point_at(t + 1.0)), busemann(g.to().z(), g.point_at(t)) - 1.0,
                    1e-10);
        EXPECT_NEAR(g.parameter_of(g.point_at(t)), t, 1e-9);
    }
}

TEST(Horocycle, ArclengthCoordinateMatchesMetric) {
    Horocycle h{IdealPoint(1.1), -1.5};
    for (double s : {-2.0, 0.0, 0.5, 3.0}) {
        Complex p = h.point_at(s);
        EXPECT_NEAR(busemann(h.center.z(), p), h.level, 1e-11);
        EXPECT_NEAR(std::abs(p - h.euclidean_center()), h.euclidean_radius(), 1e-13);
        EXPECT_NEAR(h.arclength_coordinate(p), s, 1e-11);
    }
    // Length of an arc by integrating the metric along the Euclidean circle.
    Complex a = h.point_at(-1.0), b = h.point_at(2.0);
    double a0 = std::arg(a - h.euclidean_center()), a1 = std::arg(b - h.euclidean_center());
    double da = std::remainder(a1 - a0, kTwoPi);
    // Take the arc that avoids the tangency point at the center.
    double ac = std::remainder(std::arg(h.center.z() - h.euclidean_center()) - a0, kTwoPi);
    if ((ac > 0 && ac < da) || (ac < 0 && ac > da)) da = da > 0 ? da - kTwoPi : da + kTwoPi;
    double len = oracle::integrate(
        [&](double u) {
            Complex z = h.euclidean_center() + std::polar(h.euclidean_radius(), a0 + u * da);
            return oracle::lambda(z) * h.euclidean_radius() * std::fabs(da);
        },
        0.0, 1.0, 200);
    EXPECT_NEAR(len, 3.0, 1e-9);
}

TEST(Kernel, PureFunctionsAreBitIdentical) {
    DiskPoint p{0.31, -0.22}, q{-0.5, 0.6};
    EXPECT_EQ(hyp_distance(p, q), hyp_distance(p, q));
    Geodesic g(IdealPoint(0.2), IdealPoint(4.0));
    Horocycle h{IdealPoint(0.2), -0.7};
    EXPECT_EQ(geodesic_foot_on_horocycle(g, h), geodesic_foot_on_horocycle(g, h));
}
