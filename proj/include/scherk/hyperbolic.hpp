#pragma once

// Closed-form geometry of the curvature -1 Poincare disk.
//
// Conventions used throughout the library:
//   * Busemann functions are normalized to vanish at the disk origin, so
//     B_xi(p) = log(|xi - p|^2 / (1 - |p|^2)).
//   * A horocycle is the level set {B_center = level}; the horoball is the
//     sublevel set, which shrinks toward the center as the level decreases.
//   * A geodesic between ideal points is oriented from `from` to `to`; its
//     arclength parameter is zero at the point closest to the origin.

#include "scherk/error.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <numbers>
#include <string>

namespace scherk {

using Complex = std::complex<double>;

inline constexpr double kTwoPi = 2.0 * std::numbers::pi;
inline constexpr double kAngleTolerance = 1e-12;

// ---------------------------------------------------------------------------
// Points
// ---------------------------------------------------------------------------

struct DiskPoint {
    double x = 0.0;
    double y = 0.0;

    constexpr DiskPoint() = default;
    constexpr DiskPoint(double x_, double y_) : x(x_), y(y_) {}
    explicit DiskPoint(Complex z) : x(z.real()), y(z.imag()) {}

    [[nodiscard]] Complex z() const noexcept { return {x, y}; }
    [[nodiscard]] double norm2() const noexcept { return x * x + y * y; }
    [[nodiscard]] bool interior() const noexcept { return norm2() < 1.0; }

    friend constexpr bool operator==(const DiskPoint&, const DiskPoint&) = default;
};

/// Throws unless the point lies in the open unit disk.
inline DiskPoint checked_disk_point(double x, double y) {
    DiskPoint p{x, y};
    if (!(p.norm2() < 1.0)) {
        throw Error(ErrorCode::InvalidArgument,
                    "point (" + std::to_string(x) + ", " + std::to_string(y) +
                        ") is not inside the unit disk");
    }
    return p;
}

inline double normalize_angle(double theta) noexcept {
    double t = std::fmod(theta, kTwoPi);
    if (t < 0.0) t += kTwoPi;
    if (t >= kTwoPi) t = 0.0;
    return t;
}

/// Circular distance between two angles, in [0, pi].
inline double angular_gap(double a, double b) noexcept {
    double d = std::fabs(normalize_angle(a) - normalize_angle(b));
    return d > std::numbers::pi ? kTwoPi - d : d;
}

class IdealPoint {
public:
    IdealPoint() = default;
    explicit IdealPoint(double theta) : theta_(normalize_angle(theta)) {}

    static IdealPoint from_degrees(double degrees) {
        return IdealPoint(degrees * std::numbers::pi / 180.0);
    }

    [[nodiscard]] double theta() const noexcept { return theta_; }
    [[nodiscard]] Complex z() const noexcept { return std::polar(1.0, theta_); }

    friend bool operator==(const IdealPoint& a, const IdealPoint& b) noexcept {
        return angular_gap(a.theta_, b.theta_) <= kAngleTolerance;
    }

private:
    double theta_ = 0.0;
};

// ---------------------------------------------------------------------------
// Disk automorphisms
// ---------------------------------------------------------------------------

/// z -> (z - a) / (1 - conj(a) z); sends a to the origin.
inline Complex mobius_to_origin(Complex a, Complex z) noexcept {
    return (z - a) / (1.0 - std::conj(a) * z);
}

/// Inverse of mobius_to_origin: sends the origin back to a.
inline Complex mobius_from_origin(Complex a, Complex w) noexcept {
    return (w + a) / (1.0 + std::conj(a) * w);
}

/// 1 - |z|^2, evaluated to keep relative accuracy close to the boundary.
inline double one_minus_norm2(Complex z) noexcept {
    double r = std::abs(z);
    return (1.0 - r) * (1.0 + r);
}

/// Conformal factor of the metric 4|dz|^2 / (1 - |z|^2)^2.
inline double conformal_factor(Complex z) noexcept { return 2.0 / one_minus_norm2(z); }

// ---------------------------------------------------------------------------
// Distances and Busemann functions
// ---------------------------------------------------------------------------

inline double hyp_distance(Complex p, Complex q) noexcept {
    double num = std::abs(p - q);
    if (num == 0.0) return 0.0;
    return 2.0 * std::asinh(num / std::sqrt(one_minus_norm2(p) * one_minus_norm2(q)));
}

inline double hyp_distance(const DiskPoint& p, const DiskPoint& q) noexcept {
    return hyp_distance(p.z(), q.z());
}

inline double busemann(Complex xi, Complex p) noexcept {
    return std::log(std::norm(xi - p) / one_minus_norm2(p));
}

inline double busemann(const IdealPoint& xi, const DiskPoint& p) noexcept {
    return busemann(xi.z(), p.z());
}

// ---------------------------------------------------------------------------
// Horocycles
// ---------------------------------------------------------------------------

struct Horocycle {
    IdealPoint center;
    double level = 0.0;

    /// Euclidean radius of the circle tangent to the unit circle at `center`.
    [[nodiscard]] double euclidean_radius() const noexcept {
        double k = std::exp(level);
        return k / (1.0 + k);
    }
    [[nodiscard]] Complex euclidean_center() const noexcept {
        return center.z() * (1.0 - euclidean_radius());
    }
    /// Same center, level lowered by delta (horoball shrinks).
    [[nodiscard]] Horocycle shrunk(double delta) const noexcept { return {center, level - delta}; }

    /// Signed horocyclic arclength coordinate of a point on the horocycle.
    /// Under the Cayley map sending the center to infinity the horocycle
    /// becomes the line Im w = e^{-level}, on which arclength is Re w / Im w.
    [[nodiscard]] double arclength_coordinate(Complex p) const noexcept {
        Complex zr = p * std::conj(center.z());
        Complex w = Complex(0.0, 1.0) * (1.0 + zr) / (1.0 - zr);
        return w.real() * std::exp(level);
    }
    /// Inverse of arclength_coordinate.
    [[nodiscard]] Complex point_at(double sigma) const noexcept {
        double y0 = std::exp(-level);
        Complex w(y0 * sigma, y0);
        Complex zr = (w - Complex(0.0, 1.0)) / (w + Complex(0.0, 1.0));
        return zr * center.z();
    }
};

// ---------------------------------------------------------------------------
// Geodesics between ideal points
// ---------------------------------------------------------------------------

class Geodesic {
public:
    Geodesic(IdealPoint from, IdealPoint to) : from_(from), to_(to) {
        if (from_ == to_) {
            throw Error(ErrorCode::InvalidArgument, "geodesic endpoints must be distinct");
        }
        Complex a = from_.z();
        Complex b = to_.z();
        Complex mid = a + b;
        double half_sep = 0.5 * angular_gap(from_.theta(), to_.theta());
        if (std::abs(mid) < 1e-15) {
            base_ = 0.0;
        } else {
            double r0 = (1.0 - std::sin(half_sep)) / std::cos(half_sep);
            base_ = r0 * mid / std::abs(mid);
        }
        rotation_ = (b - base_) / (1.0 - std::conj(base_) * b);
        rotation_ /= std::abs(rotation_);
    }

    [[nodiscard]] const IdealPoint& from() const noexcept { return from_; }
    [[nodiscard]] const IdealPoint& to() const noexcept { return to_; }
    [[nodiscard]] Geodesic reversed() const { return {to_, from_}; }

    /// Point closest to the origin; arclength parameter zero.
    [[nodiscard]] Complex base_point() const noexcept { return base_; }

    /// Unit-speed parameterization, tending to `to` as t -> +infinity.
    [[nodiscard]] Complex point_at(double t) const noexcept {
        Complex w = rotation_ * std::tanh(0.5 * t);
        return (w + base_) / (1.0 + std::conj(base_) * w);
    }

    /// Arclength parameter of a point assumed to lie on the geodesic.
    [[nodiscard]] double parameter_of(Complex p) const noexcept {
        Complex w = mobius_to_origin(base_, p) / rotation_;
        double s = std::clamp(w.real(), -1.0 + 1e-300, 1.0 - 1e-16);
        return 2.0 * std::atanh(s);
    }

    [[nodiscard]] bool has_endpoint(const IdealPoint& xi) const noexcept {
        return xi == from_ || xi == to_;
    }

    /// Parameter where the geodesic crosses the horocycle (which must be
    /// centered at one of the endpoints).
    [[nodiscard]] double foot_parameter(const Horocycle& h) const {
        if (h.center == to_) {
            return busemann(to_.z(), base_) - h.level;
        }
        if (h.center == from_) {
            return h.level - busemann(from_.z(), base_);
        }
        throw Error(ErrorCode::CenterNotEndpoint, "horocycle center is not an endpoint of the geodesic");
    }

private:
    IdealPoint from_;
    IdealPoint to_;
    Complex base_;
    Complex rotation_;
};

inline DiskPoint geodesic_foot_on_horocycle(const Geodesic& g, const Horocycle& h) {
    return DiskPoint(g.point_at(g.foot_parameter(h)));
}

/// Signed distance between the horoballs bounded by h1 and h2 measured along
/// g: positive when they are disjoint, negative when they overlap.
inline double truncated_length(const Geodesic& g, const Horocycle& h1, const Horocycle& h2) {
    if (!g.has_endpoint(h1.center) || !g.has_endpoint(h2.center)) {
        throw Error(ErrorCode::CenterNotEndpoint, "horocycle center is not an endpoint of the geodesic");
    }
    if (h1.center == h2.center) {
        throw Error(ErrorCode::CenterNotEndpoint, "horocycles must sit at the two distinct endpoints");
    }
    double chord = std::abs(h1.center.z() - h2.center.z());
    return 2.0 * std::log(0.5 * chord) - h1.level - h2.level;
}

/// Truncated length between two ideal points for given horocycle levels.
inline double truncated_length(const IdealPoint& a, double level_a, const IdealPoint& b, double level_b) {
    return truncated_length(Geodesic(a, b), Horocycle{a, level_a}, Horocycle{b, level_b});
}

// ---------------------------------------------------------------------------
// Rays and segments between interior points
// ---------------------------------------------------------------------------

/// Point at hyperbolic distance d from p on the ray from p toward xi.
inline DiskPoint point_on_ray(const DiskPoint& p, const IdealPoint& xi, double d) {
    if (d < 0.0) throw Error(ErrorCode::InvalidArgument, "ray distance must be nonnegative");
    Complex a = p.z();
    Complex dir = mobius_to_origin(a, xi.z());
    dir /= std::abs(dir);
    return DiskPoint(mobius_from_origin(a, std::tanh(0.5 * d) * dir));
}

/// Point on the geodesic segment [p, q] at hyperbolic distance s from p.
inline Complex point_on_segment(Complex p, Complex q, double s) noexcept {
    Complex w = mobius_to_origin(p, q);
    double aw = std::abs(w);
    if (aw == 0.0) return p;
    return mobius_from_origin(p, std::tanh(0.5 * s) * (w / aw));
}

}  // namespace scherk
