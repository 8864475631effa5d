#pragma once

// Compact domains of the exhaustion: geodesic polygons D_n whose corners sit
// at distance n from a basepoint along the rays to the ideal vertices, and
// nested horocycle truncations of the ideal polygon.

#include "scherk/error.hpp"
#include "scherk/hyperbolic.hpp"
#include "scherk/ideal_polygon.hpp"

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

namespace scherk {

class ExhaustionDomain {
public:
    ExhaustionDomain(IdealPolygon polygon, DiskPoint basepoint, double radius, std::vector<DiskPoint> corners)
        : polygon_(std::move(polygon)), basepoint_(basepoint), radius_(radius), corners_(std::move(corners)) {}

    [[nodiscard]] const IdealPolygon& polygon() const noexcept { return polygon_; }
    [[nodiscard]] DiskPoint basepoint() const noexcept { return basepoint_; }
    [[nodiscard]] double radius() const noexcept { return radius_; }
    [[nodiscard]] const std::vector<DiskPoint>& corners() const noexcept { return corners_; }
    [[nodiscard]] std::size_t size() const noexcept { return corners_.size(); }
    [[nodiscard]] Complex corner(std::size_t i) const { return corners_[i % size()].z(); }

    /// Length of side i, the geodesic segment from corner i to corner i + 1.
    [[nodiscard]] double side_length(std::size_t i) const { return hyp_distance(corner(i), corner(i + 1)); }

    /// Point of side i at distance s from corner i. Evaluated from the
    /// nearer corner so that points deep in a cusp keep full precision.
    [[nodiscard]] Complex side_point(std::size_t i, double s) const {
        double len = side_length(i);
        if (s <= 0.5 * len) return point_on_segment(corner(i), corner(i + 1), s);
        return point_on_segment(corner(i + 1), corner(i), len - s);
    }

    /// True when p lies on the closed interior side of every side geodesic.
    [[nodiscard]] bool contains(Complex p, double slack = 0.0) const {
        for (std::size_t i = 0; i < size(); ++i) {
            Complex a = corner(i);
            Complex d = mobius_to_origin(a, corner(i + 1));
            Complex w = mobius_to_origin(a, p);
            if ((w * std::conj(d / std::abs(d))).imag() < -slack) return false;
        }
        return true;
    }

    /// Interior angle at corner i, in (0, 2 pi).
    [[nodiscard]] double interior_angle(std::size_t i) const {
        Complex c = corner(i);
        Complex next = mobius_to_origin(c, corner(i + 1));
        Complex prev = mobius_to_origin(c, corner(i + size() - 1));
        double a = std::arg(prev / next);
        return a < 0.0 ? a + kTwoPi : a;
    }

private:
    IdealPolygon polygon_;
    DiskPoint basepoint_;
    double radius_;
    std::vector<DiskPoint> corners_;
};

/// True when p lies inside the ideal polygon (every vertex gap seen from p
/// is below pi).
inline bool sees_polygon_around(const IdealPolygon& poly, const DiskPoint& p) {
    std::vector<double> angles;
    for (const auto& v : poly.vertices()) angles.push_back(normalize_angle(std::arg(mobius_to_origin(p.z(), v.z()))));
    std::sort(angles.begin(), angles.end());
    for (std::size_t i = 0; i < angles.size(); ++i) {
        double next = i + 1 < angles.size() ? angles[i + 1] : angles[0] + kTwoPi;
        if (next - angles[i] >= std::numbers::pi) return false;
    }
    return true;
}

inline ExhaustionDomain build_exhaustion(const IdealPolygon& poly, const DiskPoint& basepoint, double n) {
    if (!(n > 0.0)) throw Error(ErrorCode::InvalidArgument, "exhaustion radius must be positive");
    if (!basepoint.interior() || !sees_polygon_around(poly, basepoint)) {
        throw Error(ErrorCode::InvalidArgument, "basepoint must lie inside the ideal polygon");
    }
    std::vector<DiskPoint> corners;
    for (const auto& v : poly.vertices()) corners.push_back(point_on_ray(basepoint, v, n));
    ExhaustionDomain d(poly, basepoint, n, std::move(corners));
    for (std::size_t i = 0; i < d.size(); ++i) {
        if (!(d.interior_angle(i) < std::numbers::pi)) {
            throw Error(ErrorCode::NonConvex, "corner " + std::to_string(i) + " of D_n is not convex");
        }
    }
    return d;
}

/// Uniform truncations at strictly decreasing levels; each horoball contains
/// the next one since horoballs are sublevel sets.
inline std::vector<TruncationScheme> nested_truncations(const IdealPolygon& poly, const std::vector<double>& levels) {
    if (levels.empty()) throw Error(ErrorCode::EmptyGrid, "no truncation levels given");
    for (std::size_t i = 1; i < levels.size(); ++i) {
        if (!(levels[i] < levels[i - 1])) {
            throw Error(ErrorCode::NotDecreasing, "truncation levels must be strictly decreasing");
        }
    }
    std::vector<TruncationScheme> out;
    for (double l : levels) out.push_back(TruncationScheme::uniform(poly, l));
    return out;
}

}  // namespace scherk
