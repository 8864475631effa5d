#pragma once

// Ideal polygons with alternating alpha/beta sides, their horocycle
// truncations, and the admissibility certificate.

#include "scherk/error.hpp"
#include "scherk/hyperbolic.hpp"

#include <algorithm>
#include <cstdint>
#include <fstream>
#include <istream>
#include <limits>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

namespace scherk {

enum class EdgeLabel : std::uint8_t { alpha, beta };

constexpr EdgeLabel opposite(EdgeLabel l) noexcept {
    return l == EdgeLabel::alpha ? EdgeLabel::beta : EdgeLabel::alpha;
}

constexpr std::string_view to_string(EdgeLabel l) noexcept {
    return l == EdgeLabel::alpha ? "alpha" : "beta";
}

// ---------------------------------------------------------------------------
// IdealPolygon
// ---------------------------------------------------------------------------

class IdealPolygon {
public:
    IdealPolygon(std::vector<IdealPoint> vertices, EdgeLabel first_edge)
        : vertices_(std::move(vertices)), first_edge_(first_edge) {
        const auto n = vertices_.size();
        if (n < 4 || n % 2 != 0) {
            throw Error(ErrorCode::InvalidArgument,
                        "vertex count must be even and at least 4 (got " + std::to_string(n) + ")");
        }
        for (std::size_t i = 0; i + 1 < n; ++i) {
            if (!(vertices_[i].theta() < vertices_[i + 1].theta()) || vertices_[i] == vertices_[i + 1]) {
                throw Error(ErrorCode::InvalidArgument,
                            "vertices must be strictly increasing in angle and pairwise distinct");
            }
        }
        if (vertices_.front() == vertices_.back()) {
            throw Error(ErrorCode::InvalidArgument, "first and last vertex coincide");
        }
    }

    /// Polygon with vertices at the given angles in degrees.
    static IdealPolygon from_degrees(const std::vector<double>& degrees, EdgeLabel first_edge = EdgeLabel::alpha) {
        std::vector<IdealPoint> v;
        v.reserve(degrees.size());
        for (double d : degrees) v.push_back(IdealPoint::from_degrees(d));
        return {std::move(v), first_edge};
    }

    [[nodiscard]] std::size_t size() const noexcept { return vertices_.size(); }
    [[nodiscard]] std::size_t k() const noexcept { return vertices_.size() / 2; }
    [[nodiscard]] const std::vector<IdealPoint>& vertices() const noexcept { return vertices_; }
    [[nodiscard]] const IdealPoint& vertex(std::size_t i) const { return vertices_[i % size()]; }
    [[nodiscard]] EdgeLabel first_edge() const noexcept { return first_edge_; }

    /// Label of the edge joining vertex i to vertex i+1 (cyclically).
    [[nodiscard]] EdgeLabel label(std::size_t edge) const noexcept {
        return edge % 2 == 0 ? first_edge_ : opposite(first_edge_);
    }

    /// Geodesic carrying edge i, oriented from vertex i to vertex i+1.
    [[nodiscard]] Geodesic edge(std::size_t i) const { return {vertex(i), vertex(i + 1)}; }

    /// Mirror image traversed in the opposite sense. The first edge keeps its
    /// label, so every geometric side changes label and a, b swap roles.
    [[nodiscard]] IdealPolygon reversed() const {
        const std::size_t n = size();
        std::vector<std::size_t> order(n);  // new index -> original index
        for (std::size_t i = 0; i < n; ++i) order[i] = i;
        auto mirrored = [&](std::size_t i) { return normalize_angle(-vertices_[i].theta()); };
        std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return mirrored(a) < mirrored(b); });
        std::vector<IdealPoint> v;
        v.reserve(n);
        for (std::size_t i : order) v.emplace_back(mirrored(i));
        // New edge 0 joins originals order[0] and order[1] = order[0] - 1,
        // i.e. the original edge with index order[1].
        return {std::move(v), opposite(label(order[1]))};
    }

private:
    std::vector<IdealPoint> vertices_;
    EdgeLabel first_edge_;
};

// ---------------------------------------------------------------------------
// Truncations
// ---------------------------------------------------------------------------

struct TruncationScheme {
    std::vector<double> levels;  // one Busemann level per polygon vertex

    static TruncationScheme uniform(const IdealPolygon& poly, double level) {
        return {std::vector<double>(poly.size(), level)};
    }

    [[nodiscard]] Horocycle horocycle(const IdealPolygon& poly, std::size_t i) const {
        return {poly.vertex(i), levels[i % levels.size()]};
    }
};

/// Signed truncated length between vertices i and j of the polygon.
inline double pair_length(const IdealPolygon& poly, const TruncationScheme& trunc, std::size_t i, std::size_t j) {
    const std::size_t n = trunc.levels.size();
    return truncated_length(poly.vertex(i), trunc.levels[i % n], poly.vertex(j), trunc.levels[j % n]);
}

/// Throws DisjointnessViolated unless every pair of horoballs is disjoint.
inline void validate(const IdealPolygon& poly, const TruncationScheme& trunc) {
    if (trunc.levels.size() != poly.size()) {
        throw Error(ErrorCode::InvalidArgument, "truncation scheme needs one level per vertex");
    }
    for (std::size_t i = 0; i < poly.size(); ++i) {
        for (std::size_t j = i + 1; j < poly.size(); ++j) {
            double len = pair_length(poly, trunc, i, j);
            if (!(len > 0.0)) {
                throw Error(ErrorCode::DisjointnessViolated,
                            "horoballs at vertices " + std::to_string(i) + " and " + std::to_string(j) +
                                " overlap (truncated length " + std::to_string(len) + ")");
            }
        }
    }
}

[[nodiscard]] inline bool is_valid(const IdealPolygon& poly, const TruncationScheme& trunc) {
    try {
        validate(poly, trunc);
        return true;
    } catch (const Error&) {
        return false;
    }
}

struct EdgeLength {
    EdgeLabel label;
    std::size_t index;  // edge index in the polygon (edge i joins vertex i and i+1)
    double length;
};

inline std::vector<EdgeLength> edge_lengths(const IdealPolygon& poly, const TruncationScheme& trunc) {
    validate(poly, trunc);
    std::vector<EdgeLength> out;
    out.reserve(poly.size());
    for (std::size_t i = 0; i < poly.size(); ++i) {
        out.push_back({poly.label(i), i, pair_length(poly, trunc, i, (i + 1) % poly.size())});
    }
    return out;
}

struct LabelSums {
    double a = 0.0;
    double b = 0.0;
};

inline LabelSums label_sums(const IdealPolygon& poly, const TruncationScheme& trunc) {
    LabelSums s;
    for (const auto& e : edge_lengths(poly, trunc)) (e.label == EdgeLabel::alpha ? s.a : s.b) += e.length;
    return s;
}

/// a(Gamma) - b(Gamma). Independent of the truncation: every vertex touches
/// exactly one alpha and one beta side, so level shifts cancel.
inline double balance(const IdealPolygon& poly, const TruncationScheme& trunc) {
    auto s = label_sums(poly, trunc);
    return s.a - s.b;
}

// ---------------------------------------------------------------------------
// Inscribed polygons
// ---------------------------------------------------------------------------

enum class InscribedEdgeKind : std::uint8_t { boundary_alpha, boundary_beta, interior };

struct InscribedPolygon {
    std::vector<std::size_t> vertex_indices;  // strictly increasing

    [[nodiscard]] std::size_t size() const noexcept { return vertex_indices.size(); }

    [[nodiscard]] bool is_whole(const IdealPolygon& poly) const noexcept { return size() == poly.size(); }

    /// Kind of the edge from vertex_indices[e] to vertex_indices[e+1].
    [[nodiscard]] InscribedEdgeKind edge_kind(const IdealPolygon& poly, std::size_t e) const {
        std::size_t i = vertex_indices[e];
        std::size_t j = vertex_indices[(e + 1) % size()];
        if ((i + 1) % poly.size() == j) {
            return poly.label(i) == EdgeLabel::alpha ? InscribedEdgeKind::boundary_alpha
                                                     : InscribedEdgeKind::boundary_beta;
        }
        return InscribedEdgeKind::interior;
    }

    [[nodiscard]] std::string to_string() const {
        std::string s = "{";
        for (std::size_t i = 0; i < size(); ++i) s += (i ? "," : "") + std::to_string(vertex_indices[i]);
        return s + "}";
    }
};

/// All vertex subsets of size >= 3, Gamma itself included. Ordered by
/// subset size, then lexicographically.
inline std::vector<InscribedPolygon> enumerate_inscribed(const IdealPolygon& poly) {
    const std::size_t n = poly.size();
    if (n > 30) throw Error(ErrorCode::InvalidArgument, "too many vertices to enumerate inscribed polygons");
    std::vector<InscribedPolygon> out;
    for (std::size_t m = 3; m <= n; ++m) {
        // Lexicographic m-combinations of {0..n-1}.
        std::vector<std::size_t> idx(m);
        for (std::size_t i = 0; i < m; ++i) idx[i] = i;
        while (true) {
            out.push_back({idx});
            std::size_t pos = m;
            while (pos > 0 && idx[pos - 1] == n - m + pos - 1) --pos;
            if (pos == 0) break;
            ++idx[pos - 1];
            for (std::size_t i = pos; i < m; ++i) idx[i] = idx[i - 1] + 1;
        }
    }
    return out;
}

struct InscribedSums {
    double a = 0.0;      // boundary alpha edges
    double b = 0.0;      // boundary beta edges
    double perimeter = 0.0;  // all edges, diagonals included
    int alpha_edges = 0;
    int beta_edges = 0;
    int edges = 0;
};

inline InscribedSums inscribed_sums(const IdealPolygon& poly, const InscribedPolygon& sub,
                                    const TruncationScheme& trunc) {
    InscribedSums s;
    for (std::size_t e = 0; e < sub.size(); ++e) {
        std::size_t i = sub.vertex_indices[e];
        std::size_t j = sub.vertex_indices[(e + 1) % sub.size()];
        double len = pair_length(poly, trunc, i, j);
        s.perimeter += len;
        ++s.edges;
        switch (sub.edge_kind(poly, e)) {
            case InscribedEdgeKind::boundary_alpha: s.a += len; ++s.alpha_edges; break;
            case InscribedEdgeKind::boundary_beta: s.b += len; ++s.beta_edges; break;
            case InscribedEdgeKind::interior: break;
        }
    }
    return s;
}

struct Margins {
    double alpha = 0.0;  // 2a(P) - |P|
    double beta = 0.0;   // 2b(P) - |P|
};

inline Margins inscribed_margins(const IdealPolygon& poly, const InscribedPolygon& sub, const TruncationScheme& trunc) {
    validate(poly, trunc);
    auto s = inscribed_sums(poly, sub, trunc);
    return {2.0 * s.a - s.perimeter, 2.0 * s.b - s.perimeter};
}

/// Rate of change of the margins when every level is lowered by delta:
/// each edge grows by 2 delta, so d(2a - |P|)/d delta = 2 (2 #alpha - #edges).
inline Margins margin_slopes(const IdealPolygon& poly, const InscribedPolygon& sub) {
    int na = 0, nb = 0;
    for (std::size_t e = 0; e < sub.size(); ++e) {
        auto kind = sub.edge_kind(poly, e);
        na += kind == InscribedEdgeKind::boundary_alpha;
        nb += kind == InscribedEdgeKind::boundary_beta;
    }
    const double n = static_cast<double>(sub.size());
    return {2.0 * (2.0 * na - n), 2.0 * (2.0 * nb - n)};
}

// ---------------------------------------------------------------------------
// Admissibility
// ---------------------------------------------------------------------------

enum class Verdict : std::uint8_t { admissible, not_admissible, inconclusive };

constexpr std::string_view to_string(Verdict v) noexcept {
    switch (v) {
        case Verdict::admissible: return "admissible";
        case Verdict::not_admissible: return "not-admissible";
        case Verdict::inconclusive: return "inconclusive";
    }
    return "?";
}

inline constexpr double kBalanceTolerance = 1e-8;
inline constexpr double kMarginTolerance = 1e-8;

enum class InscribedStatus : std::uint8_t { passes, fails_at_every_level, cannot_pass };

struct InscribedResult {
    InscribedPolygon polygon;
    Margins worst;                        // maxima over the grid
    Margins deepest;                      // margins at the deepest grid level
    Margins slopes;                       // per unit lowering of all levels
    std::optional<double> passing_level;  // first grid level where both margins < -tol
    InscribedStatus status = InscribedStatus::passes;
};

struct AdmissibilityReport {
    double balance = 0.0;
    bool balanced = false;
    std::vector<double> grid;
    std::vector<InscribedResult> inscribed;  // every P != Gamma
    Verdict verdict = Verdict::inconclusive;

    [[nodiscard]] std::string to_text() const {
        std::ostringstream os;
        os.precision(17);
        os << "balance " << balance << "\n";
        os << "balanced " << (balanced ? "yes" : "no") << "\n";
        os << "grid";
        for (double g : grid) os << ' ' << g;
        os << "\n";
        for (const auto& r : inscribed) {
            os << "inscribed " << r.polygon.to_string() << " worst_alpha=" << r.worst.alpha
               << " worst_beta=" << r.worst.beta << " slope_alpha=" << r.slopes.alpha
               << " slope_beta=" << r.slopes.beta << " status="
               << (r.status == InscribedStatus::passes
                       ? "passes"
                       : r.status == InscribedStatus::cannot_pass ? "cannot-pass" : "fails-on-grid");
            if (r.passing_level) os << " passing_level=" << *r.passing_level;
            os << "\n";
        }
        os << "verdict " << to_string(verdict) << "\n";
        return os.str();
    }
};

/// Certifies admissibility by searching a grid of uniform truncation levels.
///
/// Both margins are affine in the levels and never increase when any level
/// is lowered, so a margin with zero uniform slope is truncation independent:
/// if it is not negative the polygon is not admissible. A margin with
/// negative slope eventually becomes negative; if the grid never reached
/// that depth the verdict is inconclusive rather than a false negative.
inline AdmissibilityReport check_admissible(const IdealPolygon& poly, const std::vector<double>& level_grid) {
    if (level_grid.empty()) throw Error(ErrorCode::EmptyGrid, "admissibility needs at least one truncation level");
    AdmissibilityReport rep;
    rep.grid = level_grid;
    std::vector<TruncationScheme> schemes;
    for (double l : level_grid) {
        auto s = TruncationScheme::uniform(poly, l);
        validate(poly, s);
        schemes.push_back(std::move(s));
    }
    std::size_t deepest = static_cast<std::size_t>(
        std::min_element(level_grid.begin(), level_grid.end()) - level_grid.begin());

    rep.balance = balance(poly, schemes.front());
    rep.balanced = std::fabs(rep.balance) <= kBalanceTolerance;

    bool all_pass = true;
    bool some_cannot = false;
    for (auto& sub : enumerate_inscribed(poly)) {
        if (sub.is_whole(poly)) continue;
        InscribedResult r;
        r.polygon = sub;
        r.slopes = margin_slopes(poly, sub);
        r.worst = {-std::numeric_limits<double>::infinity(), -std::numeric_limits<double>::infinity()};
        for (std::size_t g = 0; g < schemes.size(); ++g) {
            Margins m = inscribed_margins(poly, sub, schemes[g]);
            r.worst.alpha = std::max(r.worst.alpha, m.alpha);
            r.worst.beta = std::max(r.worst.beta, m.beta);
            if (g == deepest) r.deepest = m;
            if (!r.passing_level && m.alpha < -kMarginTolerance && m.beta < -kMarginTolerance) {
                r.passing_level = level_grid[g];
            }
        }
        if (r.passing_level) {
            r.status = InscribedStatus::passes;
        } else {
            bool alpha_stuck = r.deepest.alpha >= -kMarginTolerance && r.slopes.alpha >= 0.0;
            bool beta_stuck = r.deepest.beta >= -kMarginTolerance && r.slopes.beta >= 0.0;
            r.status = (alpha_stuck || beta_stuck) ? InscribedStatus::cannot_pass
                                                   : InscribedStatus::fails_at_every_level;
            all_pass = false;
            some_cannot = some_cannot || r.status == InscribedStatus::cannot_pass;
        }
        rep.inscribed.push_back(std::move(r));
    }

    if (!rep.balanced || some_cannot) {
        rep.verdict = Verdict::not_admissible;
    } else if (all_pass) {
        rep.verdict = Verdict::admissible;
    } else {
        rep.verdict = Verdict::inconclusive;
    }
    return rep;
}

// ---------------------------------------------------------------------------
// Polygon spec files
// ---------------------------------------------------------------------------

struct PolygonSpec {
    IdealPolygon polygon;
    double curvature = 1.0;  // a, with curvature -a^2; lengths scale by 1/a
};

/// Parses `curvature <a>`, `vertex <degrees>` (repeated, increasing) and
/// `first_edge alpha|beta` directives. `#` starts a comment.
inline PolygonSpec parse_polygon_spec(std::istream& in) {
    std::vector<double> degrees;
    std::optional<EdgeLabel> first;
    double curvature = 1.0;
    std::string line;
    int lineno = 0;
    auto fail = [&](const std::string& msg) {
        throw Error(ErrorCode::Parse, "line " + std::to_string(lineno) + ": " + msg);
    };
    while (std::getline(in, line)) {
        ++lineno;
        if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
        std::istringstream ls(line);
        std::string key;
        if (!(ls >> key)) continue;
        std::string extra;
        if (key == "vertex") {
            double d;
            if (!(ls >> d)) fail("expected an angle in degrees after 'vertex'");
            if (!degrees.empty() && !(d > degrees.back())) fail("vertex angles must be strictly increasing");
            if (d < 0.0 || d >= 360.0) fail("vertex angle must lie in [0, 360)");
            degrees.push_back(d);
        } else if (key == "first_edge") {
            std::string v;
            if (!(ls >> v)) fail("expected alpha or beta after 'first_edge'");
            if (v == "alpha") first = EdgeLabel::alpha;
            else if (v == "beta") first = EdgeLabel::beta;
            else fail("first_edge must be alpha or beta, got '" + v + "'");
        } else if (key == "curvature") {
            if (!(ls >> curvature) || !(curvature > 0.0)) fail("curvature must be a positive number");
        } else {
            fail("unknown directive '" + key + "'");
        }
        if (ls >> extra) fail("unexpected trailing token '" + extra + "'");
    }
    ++lineno;
    if (degrees.size() < 4 || degrees.size() % 2 != 0) {
        fail("vertex count must be even and at least 4 (got " + std::to_string(degrees.size()) + ")");
    }
    if (!first) fail("missing 'first_edge alpha|beta' directive");
    try {
        return {IdealPolygon::from_degrees(degrees, *first), curvature};
    } catch (const Error& e) {
        fail(e.what());
    }
    throw Error(ErrorCode::Parse, "unreachable");
}

inline PolygonSpec parse_polygon_spec_string(const std::string& text) {
    std::istringstream in(text);
    return parse_polygon_spec(in);
}

inline PolygonSpec load_polygon_spec(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw Error(ErrorCode::Parse, "cannot open polygon spec '" + path + "'");
    return parse_polygon_spec(in);
}

}  // namespace scherk
