#pragma once

// Incremental Bowyer-Watson Delaunay triangulation in Euclidean model
// coordinates. Used only by the mesher; not part of the public surface.

#include "scherk/error.hpp"

#include <array>
#include <complex>
#include <cstddef>
#include <unordered_map>
#include <vector>

namespace scherk::detail {

using Complex = std::complex<double>;

inline double orient(Complex a, Complex b, Complex c) noexcept {
    return (b.real() - a.real()) * (c.imag() - a.imag()) - (b.imag() - a.imag()) * (c.real() - a.real());
}

/// > 0 when d lies strictly inside the circumcircle of the CCW triangle abc.
inline double incircle(Complex a, Complex b, Complex c, Complex d) noexcept {
    double adx = a.real() - d.real(), ady = a.imag() - d.imag();
    double bdx = b.real() - d.real(), bdy = b.imag() - d.imag();
    double cdx = c.real() - d.real(), cdy = c.imag() - d.imag();
    double ad = adx * adx + ady * ady, bd = bdx * bdx + bdy * bdy, cd = cdx * cdx + cdy * cdy;
    return adx * (bdy * cd - bd * cdy) - ady * (bdx * cd - bd * cdx) + ad * (bdx * cdy - bdy * cdx);
}

inline Complex circumcenter(Complex a, Complex b, Complex c) noexcept {
    Complex ba = b - a, ca = c - a;
    double d = 2.0 * (ba.real() * ca.imag() - ba.imag() * ca.real());
    double nb = std::norm(ba), nc = std::norm(ca);
    return a + Complex((ca.imag() * nb - ba.imag() * nc) / d, (ba.real() * nc - ca.real() * nb) / d);
}

struct DtTriangle {
    std::array<int, 3> v{};
    std::array<int, 3> nb{-1, -1, -1};  // nb[i] is across the edge opposite v[i]
    bool alive = true;
};

class Delaunay {
public:
    /// Triangulation of a super-triangle enclosing the box [-extent, extent]^2.
    explicit Delaunay(double extent = 4.0) {
        double e = 20.0 * extent;
        pts_ = {Complex(-e, -e), Complex(e, -e), Complex(0.0, e)};
        tris_.push_back({{0, 1, 2}, {-1, -1, -1}, true});
        vtri_ = {0, 0, 0};
    }

    static constexpr int kSuperVertices = 3;

    [[nodiscard]] const std::vector<Complex>& points() const noexcept { return pts_; }
    [[nodiscard]] const std::vector<DtTriangle>& triangles() const noexcept { return tris_; }
    [[nodiscard]] Complex point(int i) const { return pts_[static_cast<std::size_t>(i)]; }
    [[nodiscard]] const DtTriangle& tri(int t) const { return tris_[static_cast<std::size_t>(t)]; }
    [[nodiscard]] bool is_super(int v) const noexcept { return v < kSuperVertices; }

    /// Index of the first triangle created by the most recent insertion.
    [[nodiscard]] int last_batch_begin() const noexcept { return last_batch_; }

    int insert(Complex p) {
        int t0 = locate(p);
        std::vector<int> cavity{t0};
        std::vector<char> in(tris_.size(), 0);
        in[static_cast<std::size_t>(t0)] = 1;
        // A point on an edge of t0 must also take the neighbour.
        for (int i = 0; i < 3; ++i) {
            const auto& t = tri(t0);
            Complex a = point(t.v[(i + 1) % 3]), b = point(t.v[(i + 2) % 3]);
            if (orient(a, b, p) <= 0.0 && t.nb[i] >= 0 && !in[static_cast<std::size_t>(t.nb[i])]) {
                in[static_cast<std::size_t>(t.nb[i])] = 1;
                cavity.push_back(t.nb[i]);
            }
        }
        for (std::size_t k = 0; k < cavity.size(); ++k) {
            const auto& t = tri(cavity[k]);
            for (int i = 0; i < 3; ++i) {
                int n = t.nb[i];
                if (n < 0 || in[static_cast<std::size_t>(n)]) continue;
                const auto& u = tri(n);
                if (incircle(point(u.v[0]), point(u.v[1]), point(u.v[2]), p) > 0.0) {
                    in[static_cast<std::size_t>(n)] = 1;
                    cavity.push_back(n);
                }
            }
        }
        // Roundoff can make the cavity fail to be star-shaped from p; peel
        // off offending triangles until every boundary edge sees p on its left.
        struct Edge {
            int a, b, outside, owner;
        };
        std::vector<Edge> boundary;
        for (bool changed = true; changed;) {
            changed = false;
            boundary.clear();
            for (int c : cavity) {
                if (!in[static_cast<std::size_t>(c)]) continue;
                const auto& t = tri(c);
                for (int i = 0; i < 3; ++i) {
                    int n = t.nb[i];
                    if (n >= 0 && in[static_cast<std::size_t>(n)]) continue;
                    int a = t.v[(i + 1) % 3], b = t.v[(i + 2) % 3];
                    if (orient(point(a), point(b), p) <= 0.0 && c != t0) {
                        in[static_cast<std::size_t>(c)] = 0;
                        changed = true;
                        break;
                    }
                    boundary.push_back({a, b, n, c});
                }
                if (changed) break;
            }
        }
        for (const auto& e : boundary) {
            if (orient(point(e.a), point(e.b), p) <= 0.0) {
                throw Error(ErrorCode::MeshFailure, "degenerate point insertion");
            }
        }

        int pv = static_cast<int>(pts_.size());
        pts_.push_back(p);
        vtri_.push_back(-1);
        for (int c : cavity) {
            if (in[static_cast<std::size_t>(c)]) tris_[static_cast<std::size_t>(c)].alive = false;
        }
        last_batch_ = static_cast<int>(tris_.size());
        std::unordered_map<int, int> by_start;  // new triangle keyed by its edge start vertex a
        for (const auto& e : boundary) {
            int id = static_cast<int>(tris_.size());
            // v = (a, b, p), so the edge (a, b) is opposite slot 2.
            tris_.push_back({{e.a, e.b, pv}, {-1, -1, e.outside}, true});
            if (e.outside >= 0) {
                auto& o = tris_[static_cast<std::size_t>(e.outside)];
                for (int i = 0; i < 3; ++i) {
                    int x = o.v[(i + 1) % 3], y = o.v[(i + 2) % 3];
                    if (x == e.b && y == e.a) o.nb[i] = id;
                }
            }
            by_start[e.a] = id;
            vtri_[static_cast<std::size_t>(e.a)] = id;
            vtri_[static_cast<std::size_t>(e.b)] = id;
        }
        vtri_[static_cast<std::size_t>(pv)] = last_batch_;
        for (int id = last_batch_; id < static_cast<int>(tris_.size()); ++id) {
            // Edge (b, p) is shared with the new triangle starting at b,
            // where it sits opposite that triangle's slot 1.
            auto& t = tris_[static_cast<std::size_t>(id)];
            t.nb[0] = by_start.at(t.v[1]);
        }
        for (int id = last_batch_; id < static_cast<int>(tris_.size()); ++id) {
            int next = tris_[static_cast<std::size_t>(id)].nb[0];
            tris_[static_cast<std::size_t>(next)].nb[1] = id;
        }
        hint_ = last_batch_;
        return pv;
    }

    /// Triangle containing p (walking search from the last insertion).
    [[nodiscard]] int locate(Complex p) const {
        int t = hint_;
        if (t < 0 || !tri(t).alive) t = any_alive();
        for (std::size_t steps = 0; steps < 4 * tris_.size() + 16; ++steps) {
            const auto& tr = tri(t);
            int next = -1;
            for (int i = 0; i < 3; ++i) {
                Complex a = point(tr.v[(i + 1) % 3]), b = point(tr.v[(i + 2) % 3]);
                if (orient(a, b, p) < 0.0) {
                    next = tr.nb[i];
                    break;
                }
            }
            if (next < 0) return t;
            t = next;
        }
        for (int k = 0; k < static_cast<int>(tris_.size()); ++k) {
            const auto& tr = tri(k);
            if (!tr.alive) continue;
            bool inside = true;
            for (int i = 0; i < 3; ++i) {
                if (orient(point(tr.v[(i + 1) % 3]), point(tr.v[(i + 2) % 3]), p) < 0.0) inside = false;
            }
            if (inside) return k;
        }
        throw Error(ErrorCode::MeshFailure, "point outside triangulation");
    }

    /// Alive triangle having the directed edge a -> b, or -1.
    [[nodiscard]] int find_edge(int a, int b) const {
        int start = vtri_[static_cast<std::size_t>(a)];
        if (start < 0) return -1;
        // Rotate around a through neighbours.
        int t = start;
        for (std::size_t guard = 0; guard < tris_.size(); ++guard) {
            const auto& tr = tri(t);
            int i = index_of(tr, a);
            if (tr.v[(i + 1) % 3] == b) return t;
            // Move clockwise around a: across the edge (a, v[i+1]), opposite v[i+2].
            int n = tr.nb[(i + 2) % 3];
            if (n < 0 || n == start) break;
            t = n;
        }
        return -1;
    }

    [[nodiscard]] bool has_edge(int a, int b) const { return find_edge(a, b) >= 0 || find_edge(b, a) >= 0; }

private:
    static int index_of(const DtTriangle& t, int v) {
        for (int i = 0; i < 3; ++i)
            if (t.v[i] == v) return i;
        return -1;
    }

    [[nodiscard]] int any_alive() const {
        for (int k = static_cast<int>(tris_.size()) - 1; k >= 0; --k)
            if (tri(k).alive) return k;
        return -1;
    }

    std::vector<Complex> pts_;
    std::vector<DtTriangle> tris_;
    std::vector<int> vtri_;
    int hint_ = 0;
    int last_batch_ = 0;
};

}  // namespace scherk::detail
