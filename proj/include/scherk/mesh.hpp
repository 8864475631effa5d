#pragma once

// Triangulated domains with tagged boundary edges, plus the plain-text mesh
// format:
//
//   mesh <n_vertices> <n_triangles> <n_boundary_edges>
//   v x y
//   t i j k
//   b i j <tag>

#include "scherk/error.hpp"
#include "scherk/hyperbolic.hpp"

#include <array>
#include <cstdint>
#include <iomanip>
#include <istream>
#include <map>
#include <ostream>
#include <set>
#include <sstream>
#include <string>
#include <unordered_map>
#include <vector>

namespace scherk {

struct MeshParams {
    double target_edge_length = 0.1;  // hyperbolic units
    double grading = 1.0;             // > 1 refines toward the ideal boundary

    void validate() const {
        if (!(target_edge_length > 0.0)) throw Error(ErrorCode::InvalidArgument, "target_edge_length must be > 0");
        if (!(grading >= 1.0)) throw Error(ErrorCode::InvalidArgument, "grading must be >= 1");
    }
};

struct BoundaryEdge {
    int a = 0;
    int b = 0;  // the domain lies to the left of a -> b
    std::string tag;
};

struct Chain {
    std::vector<int> vertices;
    bool closed = false;
};

inline std::uint64_t undirected_key(int a, int b) {
    if (a > b) std::swap(a, b);
    return (static_cast<std::uint64_t>(static_cast<std::uint32_t>(a)) << 32) | static_cast<std::uint32_t>(b);
}

struct TriangulatedDomain {
    std::vector<DiskPoint> vertices;
    std::vector<std::array<int, 3>> triangles;  // counterclockwise
    std::vector<BoundaryEdge> boundary;

    [[nodiscard]] std::size_t vertex_count() const noexcept { return vertices.size(); }
    [[nodiscard]] Complex z(int v) const { return vertices[static_cast<std::size_t>(v)].z(); }

    [[nodiscard]] std::vector<char> boundary_mask() const {
        std::vector<char> mask(vertices.size(), 0);
        for (const auto& e : boundary) {
            mask[static_cast<std::size_t>(e.a)] = 1;
            mask[static_cast<std::size_t>(e.b)] = 1;
        }
        return mask;
    }

    [[nodiscard]] std::vector<std::string> tags() const {
        std::set<std::string> s;
        for (const auto& e : boundary) s.insert(e.tag);
        return {s.begin(), s.end()};
    }

    [[nodiscard]] std::size_t edge_count() const {
        std::set<std::uint64_t> edges;
        for (const auto& t : triangles)
            for (int i = 0; i < 3; ++i) edges.insert(undirected_key(t[i], t[(i + 1) % 3]));
        return edges.size();
    }

    [[nodiscard]] long euler_characteristic() const {
        return static_cast<long>(vertices.size()) - static_cast<long>(edge_count()) +
               static_cast<long>(triangles.size());
    }

    [[nodiscard]] double euclidean_area(std::size_t t) const {
        const auto& tr = triangles[t];
        Complex a = z(tr[0]), b = z(tr[1]), c = z(tr[2]);
        return 0.5 * ((b - a).real() * (c - a).imag() - (b - a).imag() * (c - a).real());
    }

    /// Ordered vertex path of the boundary edges carrying `tag`.
    [[nodiscard]] Chain chain(const std::string& tag) const {
        std::unordered_map<int, int> next, prev;
        for (const auto& e : boundary) {
            if (e.tag != tag) continue;
            if (next.count(e.a) || prev.count(e.b)) {
                throw Error(ErrorCode::DisconnectedChain, "boundary tag '" + tag + "' branches");
            }
            next[e.a] = e.b;
            prev[e.b] = e.a;
        }
        if (next.empty()) throw Error(ErrorCode::DisconnectedChain, "no boundary edges tagged '" + tag + "'");
        int start = -1;
        for (const auto& [a, b] : next) {
            if (!prev.count(a) && (start < 0 || a < start)) start = a;
        }
        Chain c;
        c.closed = start < 0;
        if (c.closed) {
            for (const auto& [a, b] : next) start = start < 0 ? a : std::min(start, a);
        }
        c.vertices.push_back(start);
        for (int v = start; next.count(v);) {
            v = next.at(v);
            c.vertices.push_back(v);
            if (v == start) break;
            if (c.vertices.size() > next.size() + 1) break;
        }
        if (c.vertices.size() != next.size() + 1) {
            throw Error(ErrorCode::DisconnectedChain, "boundary tag '" + tag + "' is not a single path");
        }
        return c;
    }

    /// Hyperbolic length of the polyline through the chain's vertices.
    [[nodiscard]] double chain_length(const Chain& c) const {
        double len = 0.0;
        for (std::size_t i = 0; i + 1 < c.vertices.size(); ++i) len += hyp_distance(z(c.vertices[i]), z(c.vertices[i + 1]));
        return len;
    }
    [[nodiscard]] double chain_length(const std::string& tag) const { return chain_length(chain(tag)); }

    /// Closed loops of the whole boundary, ignoring tags.
    [[nodiscard]] std::vector<Chain> boundary_loops() const {
        std::map<int, int> next;
        for (const auto& e : boundary) next[e.a] = e.b;
        std::vector<Chain> loops;
        std::set<int> seen;
        for (const auto& [a, b] : next) {
            if (seen.count(a)) continue;
            Chain c;
            c.closed = true;
            int v = a;
            do {
                c.vertices.push_back(v);
                seen.insert(v);
                auto it = next.find(v);
                if (it == next.end()) throw Error(ErrorCode::NotClosed, "boundary is not a union of loops");
                v = it->second;
            } while (v != a && c.vertices.size() <= next.size());
            c.vertices.push_back(a);
            loops.push_back(std::move(c));
        }
        return loops;
    }
};

/// Throws MeshFailure describing the first violated invariant.
inline void validate_mesh(const TriangulatedDomain& m, double disk_margin = 0.0) {
    auto fail = [](const std::string& what) { throw Error(ErrorCode::MeshFailure, what); };
    for (const auto& p : m.vertices) {
        if (!(p.norm2() < 1.0 - disk_margin)) fail("vertex outside the disk");
    }
    std::map<std::pair<int, int>, int> directed;
    for (std::size_t t = 0; t < m.triangles.size(); ++t) {
        const auto& tr = m.triangles[t];
        for (int v : tr) {
            if (v < 0 || v >= static_cast<int>(m.vertices.size())) fail("triangle index out of range");
        }
        if (!(m.euclidean_area(t) > 0.0)) fail("triangle " + std::to_string(t) + " is not positively oriented");
        for (int i = 0; i < 3; ++i) {
            if (++directed[{tr[i], tr[(i + 1) % 3]}] > 1) fail("edge used twice with the same orientation");
        }
    }
    std::map<std::pair<int, int>, std::string> tagged;
    for (const auto& e : m.boundary) {
        if (e.tag.empty()) fail("untagged boundary edge");
        if (!tagged.emplace(std::make_pair(e.a, e.b), e.tag).second) fail("duplicate boundary edge");
    }
    std::size_t boundary = 0;
    for (const auto& [edge, count] : directed) {
        if (directed.count({edge.second, edge.first})) continue;
        ++boundary;
        if (!tagged.count(edge)) fail("boundary edge without a tag");
    }
    if (boundary != m.boundary.size()) fail("tagged edges do not match the mesh boundary");
}

inline void write_mesh(std::ostream& os, const TriangulatedDomain& m) {
    os << "mesh " << m.vertices.size() << ' ' << m.triangles.size() << ' ' << m.boundary.size() << '\n';
    os << std::setprecision(17);
    for (const auto& p : m.vertices) os << "v " << p.x << ' ' << p.y << '\n';
    for (const auto& t : m.triangles) os << "t " << t[0] << ' ' << t[1] << ' ' << t[2] << '\n';
    for (const auto& e : m.boundary) os << "b " << e.a << ' ' << e.b << ' ' << e.tag << '\n';
}

inline TriangulatedDomain read_mesh(std::istream& is) {
    auto fail = [](std::size_t line, const std::string& what) {
        throw Error(ErrorCode::Parse, "mesh line " + std::to_string(line) + ": " + what);
    };
    std::string text;
    std::size_t line_no = 0;
    TriangulatedDomain m;
    std::size_t nv = 0, nt = 0, nb = 0;
    bool header = false;
    while (std::getline(is, text)) {
        ++line_no;
        std::istringstream ls(text);
        std::string kind;
        if (!(ls >> kind)) continue;
        if (kind == "mesh") {
            if (!(ls >> nv >> nt >> nb)) fail(line_no, "bad header");
            header = true;
        } else if (!header) {
            fail(line_no, "missing header");
        } else if (kind == "v") {
            double x, y;
            if (!(ls >> x >> y)) fail(line_no, "bad vertex");
            m.vertices.emplace_back(x, y);
        } else if (kind == "t") {
            std::array<int, 3> t{};
            if (!(ls >> t[0] >> t[1] >> t[2])) fail(line_no, "bad triangle");
            m.triangles.push_back(t);
        } else if (kind == "b") {
            BoundaryEdge e;
            if (!(ls >> e.a >> e.b >> e.tag)) fail(line_no, "bad boundary edge");
            m.boundary.push_back(e);
        } else {
            fail(line_no, "unknown record '" + kind + "'");
        }
    }
    if (!header) throw Error(ErrorCode::Parse, "mesh: empty input");
    if (m.vertices.size() != nv || m.triangles.size() != nt || m.boundary.size() != nb) {
        throw Error(ErrorCode::Parse, "mesh: record counts do not match the header");
    }
    return m;
}

}  // namespace scherk
