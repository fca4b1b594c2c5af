#pragma once

#include "poly.hpp"

#include <array>
#include <cctype>
#include <map>
#include <numeric>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <unordered_map>
#include <vector>

namespace gz4 {

using Exp3 = std::array<long, 3>;

/// Sparse Laurent polynomial in x, y, z with integer coefficients.
struct LaurentPolynomial3 {
    std::map<Exp3, Int> terms;

    LaurentPolynomial3() = default;
    static LaurentPolynomial3 constant(const Int& c) {
        LaurentPolynomial3 p;
        if (c != 0) p.terms[{0, 0, 0}] = c;
        return p;
    }
    static LaurentPolynomial3 monomial(const Exp3& e, const Int& c = 1) {
        LaurentPolynomial3 p;
        if (c != 0) p.terms[e] = c;
        return p;
    }

    bool is_zero() const { return terms.empty(); }
    std::size_t size() const { return terms.size(); }

    LaurentPolynomial3 operator+(const LaurentPolynomial3& o) const {
        LaurentPolynomial3 r = *this;
        for (const auto& [e, c] : o.terms) r.add(e, c);
        return r;
    }
    LaurentPolynomial3 operator-() const {
        LaurentPolynomial3 r = *this;
        for (auto& [e, c] : r.terms) c = -c;
        return r;
    }
    LaurentPolynomial3 operator-(const LaurentPolynomial3& o) const { return *this + (-o); }
    LaurentPolynomial3 operator*(const LaurentPolynomial3& o) const {
        LaurentPolynomial3 r;
        for (const auto& [e1, c1] : terms)
            for (const auto& [e2, c2] : o.terms) r.add({e1[0] + e2[0], e1[1] + e2[1], e1[2] + e2[2]}, c1 * c2);
        return r;
    }
    bool operator==(const LaurentPolynomial3& o) const { return terms == o.terms; }

    LaurentPolynomial3 pow(unsigned n) const {
        LaurentPolynomial3 r = constant(1), b = *this;
        while (n) {
            if (n & 1) r = r * b;
            n >>= 1;
            if (n) b = b * b;
        }
        return r;
    }

    Int constant_term() const {
        auto it = terms.find({0, 0, 0});
        return it == terms.end() ? Int(0) : it->second;
    }

    std::string str() const {
        std::ostringstream os;
        bool first = true;
        for (const auto& [e, c] : terms) {
            Int a = mp::abs(c);
            os << (c < 0 ? (first ? "-" : " - ") : (first ? "" : " + "));
            bool mono = e[0] || e[1] || e[2];
            if (a != 1 || !mono) os << a;
            const char* v = "xyz";
            bool need_star = a != 1;
            for (int i = 0; i < 3; ++i) {
                if (!e[i]) continue;
                if (need_star) os << "*";
                os << v[i];
                if (e[i] != 1) os << "^" << e[i];
                need_star = true;
            }
            first = false;
        }
        if (first) os << "0";
        return os.str();
    }

private:
    void add(const Exp3& e, const Int& c) {
        auto [it, ins] = terms.emplace(e, c);
        if (!ins) {
            it->second += c;
            if (it->second == 0) terms.erase(it);
        } else if (c == 0) {
            terms.erase(it);
        }
    }
};

namespace detail {

/// Recursive-descent parser for integer Laurent expressions in x, y, z.
class LaurentParser {
public:
    explicit LaurentParser(std::string s) : s_(std::move(s)) {}

    LaurentPolynomial3 parse() {
        auto p = expr();
        skip();
        if (i_ != s_.size()) fail("unexpected character");
        return p;
    }

private:
    std::string s_;
    std::size_t i_ = 0;

    [[noreturn]] void fail(const std::string& what) const {
        throw ParseError(what + " at position " + std::to_string(i_) + " in '" + s_ + "'");
    }
    void skip() {
        while (i_ < s_.size() && std::isspace(static_cast<unsigned char>(s_[i_]))) ++i_;
    }
    char peek() {
        skip();
        return i_ < s_.size() ? s_[i_] : '\0';
    }
    bool starts_factor(char c) const {
        return std::isdigit(static_cast<unsigned char>(c)) || c == 'x' || c == 'y' || c == 'z' || c == '(';
    }

    LaurentPolynomial3 expr() {
        LaurentPolynomial3 r;
        char c = peek();
        bool neg = false;
        if (c == '+' || c == '-') {
            neg = c == '-';
            ++i_;
        }
        r = term();
        if (neg) r = -r;
        for (;;) {
            c = peek();
            if (c != '+' && c != '-') break;
            ++i_;
            auto t = term();
            r = c == '+' ? r + t : r - t;
        }
        return r;
    }

    LaurentPolynomial3 term() {
        LaurentPolynomial3 r = power();
        for (;;) {
            char c = peek();
            if (c == '*') {
                ++i_;
                r = r * power();
            } else if (c == '/') {
                ++i_;
                r = divide(r, power());
            } else if (starts_factor(c)) {
                r = r * power();
            } else {
                break;
            }
        }
        return r;
    }

    LaurentPolynomial3 power() {
        LaurentPolynomial3 b = primary();
        if (peek() == '^') {
            ++i_;
            skip();
            std::size_t st = i_;
            while (i_ < s_.size() && std::isdigit(static_cast<unsigned char>(s_[i_]))) ++i_;
            if (st == i_) fail("expected a nonnegative integer exponent");
            unsigned long e = std::stoul(s_.substr(st, i_ - st));
            if (e > 1000) fail("exponent too large");
            b = b.pow(static_cast<unsigned>(e));
        }
        return b;
    }

    LaurentPolynomial3 primary() {
        char c = peek();
        if (c == '(') {
            ++i_;
            auto r = expr();
            if (peek() != ')') fail("expected ')'");
            ++i_;
            return r;
        }
        if (c == 'x' || c == 'y' || c == 'z') {
            ++i_;
            Exp3 e{0, 0, 0};
            e[static_cast<std::size_t>(c - 'x')] = 1;
            return LaurentPolynomial3::monomial(e);
        }
        if (std::isdigit(static_cast<unsigned char>(c))) {
            std::size_t st = i_;
            while (i_ < s_.size() && std::isdigit(static_cast<unsigned char>(s_[i_]))) ++i_;
            return LaurentPolynomial3::constant(Int(s_.substr(st, i_ - st)));
        }
        fail(c ? "unexpected character" : "unexpected end of input");
    }

    LaurentPolynomial3 divide(const LaurentPolynomial3& a, const LaurentPolynomial3& d) {
        if (d.size() != 1) fail("division only by monomials");
        const auto& [e, c] = *d.terms.begin();
        LaurentPolynomial3 r;
        for (const auto& [ea, ca] : a.terms) {
            if (ca % c != 0) fail("inexact division by the monomial coefficient");
            r = r + LaurentPolynomial3::monomial({ea[0] - e[0], ea[1] - e[1], ea[2] - e[2]}, ca / c);
        }
        return r;
    }
};

}  // namespace detail

inline LaurentPolynomial3 parse_laurent(const std::string& s) { return detail::LaurentParser(s).parse(); }

// ---------------------------------------------------------------- polytopes

using Vec3 = std::array<long, 3>;

struct Facet {
    Vec3 normal;  // primitive inner normal a
    long offset;  // <a, x> >= offset on the polytope
};

struct LatticePolytope3 {
    std::vector<Vec3> vertices;
    std::vector<Facet> facets;  // filled for full-dimensional polytopes
    int dimension = 0;
};

namespace detail {

inline Vec3 sub3(const Vec3& a, const Vec3& b) { return {a[0] - b[0], a[1] - b[1], a[2] - b[2]}; }
inline Vec3 cross3(const Vec3& a, const Vec3& b) {
    return {a[1] * b[2] - a[2] * b[1], a[2] * b[0] - a[0] * b[2], a[0] * b[1] - a[1] * b[0]};
}
inline long dot3(const Vec3& a, const Vec3& b) { return a[0] * b[0] + a[1] * b[1] + a[2] * b[2]; }
inline bool is_zero3(const Vec3& a) { return a[0] == 0 && a[1] == 0 && a[2] == 0; }
inline Vec3 primitive3(Vec3 a) {
    long g = std::gcd(std::gcd(std::labs(a[0]), std::labs(a[1])), std::labs(a[2]));
    if (g > 1)
        for (auto& v : a) v /= g;
    return a;
}

inline int rank3(const std::vector<Vec3>& vs) {
    std::vector<Vec3> basis;
    for (const auto& v : vs) {
        if (is_zero3(v)) continue;
        if (basis.empty()) {
            basis.push_back(v);
        } else if (basis.size() == 1) {
            if (!is_zero3(cross3(basis[0], v))) basis.push_back(v);
        } else if (dot3(cross3(basis[0], basis[1]), v) != 0) {
            return 3;
        }
    }
    return static_cast<int>(basis.size());
}

}  // namespace detail

/// Convex hull of the support; facets enumerated from triples of support points.
inline LatticePolytope3 convex_hull(std::vector<Vec3> pts) {
    std::sort(pts.begin(), pts.end());
    pts.erase(std::unique(pts.begin(), pts.end()), pts.end());
    LatticePolytope3 P;
    if (pts.empty()) return P;
    std::vector<Vec3> diffs;
    for (const auto& p : pts) diffs.push_back(detail::sub3(p, pts[0]));
    P.dimension = detail::rank3(diffs);
    if (P.dimension == 0) {
        P.vertices = {pts[0]};
        return P;
    }
    if (P.dimension == 1) {
        Vec3 dir{0, 0, 0};
        for (const auto& d : diffs)
            if (!detail::is_zero3(d)) dir = d;
        auto lo = pts[0], hi = pts[0];
        for (const auto& p : pts) {
            if (detail::dot3(p, dir) < detail::dot3(lo, dir)) lo = p;
            if (detail::dot3(p, dir) > detail::dot3(hi, dir)) hi = p;
        }
        P.vertices = {lo, hi};
        std::sort(P.vertices.begin(), P.vertices.end());
        return P;
    }
    const std::size_t n = pts.size();
    if (P.dimension == 2) {
        // plane normal, then edges as in-plane facets
        Vec3 nrm{0, 0, 0};
        for (std::size_t i = 1; i < n && detail::is_zero3(nrm); ++i)
            for (std::size_t j = i + 1; j < n && detail::is_zero3(nrm); ++j)
                nrm = detail::cross3(diffs[i], diffs[j]);
        std::set<Vec3> verts;
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = i + 1; j < n; ++j) {
                Vec3 e = detail::sub3(pts[j], pts[i]);
                Vec3 out = detail::cross3(e, nrm);
                long lo = 0, hi = 0;
                bool first = true;
                for (const auto& p : pts) {
                    long v = detail::dot3(out, detail::sub3(p, pts[i]));
                    if (first || v < lo) lo = v;
                    if (first || v > hi) hi = v;
                    first = false;
                }
                if (lo < 0 && hi > 0) continue;
                // supporting line: keep its extreme points along e
                long emin = 0, emax = 0;
                Vec3 pmin = pts[i], pmax = pts[i];
                first = true;
                for (const auto& p : pts) {
                    if (detail::dot3(out, detail::sub3(p, pts[i])) != 0) continue;
                    long t = detail::dot3(e, p);
                    if (first || t < emin) { emin = t; pmin = p; }
                    if (first || t > emax) { emax = t; pmax = p; }
                    first = false;
                }
                verts.insert(pmin);
                verts.insert(pmax);
            }
        P.vertices.assign(verts.begin(), verts.end());
        return P;
    }
    std::set<std::pair<Vec3, long>> seen;
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = i + 1; j < n; ++j)
            for (std::size_t k = j + 1; k < n; ++k) {
                Vec3 nm = detail::cross3(detail::sub3(pts[j], pts[i]), detail::sub3(pts[k], pts[i]));
                if (detail::is_zero3(nm)) continue;
                nm = detail::primitive3(nm);
                long c = detail::dot3(nm, pts[i]);
                bool pos = false, neg = false;
                for (const auto& p : pts) {
                    long v = detail::dot3(nm, p) - c;
                    if (v > 0) pos = true;
                    if (v < 0) neg = true;
                    if (pos && neg) break;
                }
                if (pos && neg) continue;
                if (neg) {
                    for (auto& v : nm) v = -v;
                    c = -c;
                }
                if (seen.insert({nm, c}).second) P.facets.push_back({nm, c});
            }
    for (const auto& p : pts) {
        std::vector<Vec3> normals;
        for (const auto& f : P.facets)
            if (detail::dot3(f.normal, p) == f.offset) normals.push_back(f.normal);
        if (detail::rank3(normals) == 3) P.vertices.push_back(p);
    }
    std::sort(P.facets.begin(), P.facets.end(), [](const Facet& a, const Facet& b) {
        return std::tie(a.normal, a.offset) < std::tie(b.normal, b.offset);
    });
    return P;
}

inline LatticePolytope3 newton_polytope(const LaurentPolynomial3& phi) {
    if (phi.is_zero()) throw DomainError("Newton polytope of the zero polynomial");
    std::vector<Vec3> pts;
    for (const auto& [e, c] : phi.terms) pts.push_back(e);
    return convex_hull(pts);
}

struct RationalPoint3 {
    std::array<Rat, 3> c;
    bool operator<(const RationalPoint3& o) const { return c < o.c; }
    bool operator==(const RationalPoint3& o) const { return c == o.c; }
};

struct PolarDual {
    std::vector<RationalPoint3> vertices;
    bool reflexive = false;
};

/// Polar polytope {y : <x, y> >= -1 on P}; its vertices are a/h for facets <a, x> >= -h.
inline PolarDual polar_dual(const LatticePolytope3& P) {
    if (P.dimension != 3) throw OriginNotInterior("polytope is not full-dimensional");
    PolarDual D;
    D.reflexive = true;
    for (const auto& f : P.facets) {
        if (f.offset >= 0) throw OriginNotInterior("origin is not an interior point");
        long h = -f.offset;
        if (h != 1) D.reflexive = false;
        D.vertices.push_back({{Rat(f.normal[0], h), Rat(f.normal[1], h), Rat(f.normal[2], h)}});
    }
    std::sort(D.vertices.begin(), D.vertices.end());
    return D;
}

inline bool is_reflexive(const LatticePolytope3& P) { return polar_dual(P).reflexive; }

// ---------------------------------------------------------------- period sequences

struct PeriodSequence {
    std::vector<Int> terms;
};

namespace detail {

/// Packs exponents into one key; all exponents must lie in (-2^20, 2^20).
inline std::uint64_t pack3(long a, long b, long c) {
    const long off = 1L << 20;
    return (static_cast<std::uint64_t>(a + off) << 42) | (static_cast<std::uint64_t>(b + off) << 21) |
           static_cast<std::uint64_t>(c + off);
}

using SparsePower = std::unordered_map<std::uint64_t, Int>;

}  // namespace detail

/// a_n = constant term of phi^n for n = 0..n_max, from the half powers phi^ceil(n/2), phi^floor(n/2).
inline PeriodSequence period_sequence(const LaurentPolynomial3& phi, unsigned n_max) {
    PeriodSequence out;
    out.terms.push_back(Int(1));
    if (n_max == 0) return out;
    long span = 1;
    for (const auto& [e, c] : phi.terms)
        for (long v : e) span = std::max(span, std::labs(v));
    if (span * static_cast<long>(n_max / 2 + 2) >= (1L << 19)) throw DomainError("exponents too large");
    // packed keys add like vectors: key(e1 + e2) = key(e1) + key(e2) - key(0)
    const std::uint64_t K0 = detail::pack3(0, 0, 0);
    std::vector<std::pair<std::uint64_t, Int>> ph;
    for (const auto& [e, c] : phi.terms) ph.emplace_back(detail::pack3(e[0], e[1], e[2]), c);

    const unsigned K = (n_max + 1) / 2;
    std::vector<detail::SparsePower> pw(K + 1);
    pw[0][K0] = 1;
    for (unsigned k = 1; k <= K; ++k) {
        detail::SparsePower& acc = pw[k];
        acc.reserve(pw[k - 1].size() * 2 + 16);
        for (const auto& [k1, c1] : pw[k - 1])
            for (const auto& [k2, c2] : ph) {
                Int& slot = acc[k1 + k2 - K0];
                mpz_addmul(slot.backend().data(), c1.backend().data(), c2.backend().data());
            }
        for (auto it = acc.begin(); it != acc.end();) it = it->second == 0 ? acc.erase(it) : std::next(it);
    }
    for (unsigned n = 1; n <= n_max; ++n) {
        const auto& A = pw[(n + 1) / 2];
        const auto& B = pw[n / 2];
        const auto& small = A.size() < B.size() ? A : B;
        const auto& other = A.size() < B.size() ? B : A;
        Int s = 0;
        for (const auto& [key, c] : small) {
            auto it = other.find(2 * K0 - key);
            if (it != other.end()) mpz_addmul(s.backend().data(), c.backend().data(), it->second.backend().data());
        }
        out.terms.push_back(s);
    }
    return out;
}

// ---------------------------------------------------------------- holonomic operators

/// Recurrence sum_j p_j(n) a_{n+j} = 0 and/or differential operator sum_i t^i P_i(theta).
struct HolonomicOperator {
    std::vector<ZPoly> rec;    // p_0..p_r in n
    std::vector<ZPoly> theta;  // P_0..P_D in theta
    bool has_rec = false;
    bool has_ode = false;

    int rec_order() const { return static_cast<int>(rec.size()) - 1; }
    int rec_degree() const {
        int d = -1;
        for (const auto& p : rec) d = std::max(d, degree(p));
        return d;
    }
    int ode_order() const {
        int s = -1;
        for (const auto& p : theta) s = std::max(s, degree(p));
        return s;
    }
    /// q_j(t) with L = sum_j q_j(t) theta^j.
    std::vector<ZPoly> ode_coefficients() const {
        int s = ode_order();
        std::vector<ZPoly> q(static_cast<std::size_t>(std::max(s + 1, 0)));
        for (int j = 0; j <= s; ++j) {
            ZPoly qj(theta.size(), Int(0));
            for (std::size_t i = 0; i < theta.size(); ++i)
                if (static_cast<int>(theta[i].size()) > j) qj[i] = theta[i][j];
            q[j] = trimmed(qj);
        }
        return q;
    }

    std::string rec_str() const {
        std::ostringstream os;
        for (std::size_t j = 0; j < rec.size(); ++j) {
            if (j) os << " + ";
            os << "(" << poly_to_string(rec[j], "n") << ")*a(n+" << j << ")";
        }
        os << " = 0";
        return os.str();
    }
    std::string ode_str() const {
        std::ostringstream os;
        for (std::size_t i = 0; i < theta.size(); ++i) {
            if (theta[i].empty()) continue;
            if (os.tellp() > 0) os << " + ";
            if (i) os << "t" << (i > 1 ? "^" + std::to_string(i) : "") << "*";
            os << "(" << poly_to_string(theta[i], "D") << ")";
        }
        os << "   [D = t d/dt]";
        return os.str();
    }
};

namespace detail {

/// Normalizes a family of polynomials jointly: common content removed, sign fixed by `lead`.
inline void normalize_family(std::vector<ZPoly>& ps, std::size_t lead) {
    Int g = 0;
    for (const auto& p : ps) g = mp::gcd(g, content(p));
    if (g == 0) return;
    const ZPoly& L = ps[lead];
    if (!L.empty() && trimmed(L).back() < 0) g = -g;
    for (auto& p : ps) {
        for (auto& c : p) c /= g;
        p = trimmed(p);
    }
}

/// One nullspace vector of an integer matrix (fraction-free elimination), or empty.
inline std::vector<Int> nullspace_vector(std::vector<std::vector<Int>> M, std::size_t cols) {
    const std::size_t rows = M.size();
    std::vector<std::size_t> pivots;
    std::size_t r = 0;
    Int prev = 1;
    for (std::size_t c = 0; c < cols && r < rows; ++c) {
        std::size_t p = r;
        while (p < rows && M[p][c] == 0) ++p;
        if (p == rows) continue;
        std::swap(M[p], M[r]);
        for (std::size_t i = r + 1; i < rows; ++i) {
            for (std::size_t j = c + 1; j < cols; ++j) M[i][j] = (M[r][c] * M[i][j] - M[i][c] * M[r][j]) / prev;
            M[i][c] = 0;
        }
        prev = M[r][c];
        pivots.push_back(c);
        ++r;
    }
    if (pivots.size() == cols) return {};
    std::vector<bool> is_pivot(cols, false);
    for (auto c : pivots) is_pivot[c] = true;
    std::size_t free_col = 0;
    while (is_pivot[free_col]) ++free_col;
    std::vector<Rat> x(cols, Rat(0));
    x[free_col] = 1;
    for (std::size_t k = pivots.size(); k-- > 0;) {
        std::size_t c = pivots[k];
        Rat s = 0;
        for (std::size_t j = c + 1; j < cols; ++j)
            if (x[j] != 0) s += Rat(M[k][j]) * x[j];
        x[c] = -s / Rat(M[k][c]);
    }
    return to_z(x);
}

}  // namespace detail

/// Minimal (order, then degree) recurrence with exact solve and >= 10 surplus equations.
inline std::optional<HolonomicOperator> find_recurrence(const PeriodSequence& seq, int max_order, int max_degree,
                                                        int min_order = 1) {
    const auto& a = seq.terms;
    for (int r = std::max(1, min_order); r <= max_order; ++r)
        for (int d = 0; d <= max_degree; ++d) {
            const std::size_t unknowns = static_cast<std::size_t>((r + 1) * (d + 1));
            if (a.size() < unknowns + 10 + static_cast<std::size_t>(r)) continue;
            const std::size_t neq = a.size() - static_cast<std::size_t>(r);
            if (neq < unknowns - 1 + 10) continue;
            std::vector<std::vector<Int>> M(neq, std::vector<Int>(unknowns, Int(0)));
            for (std::size_t n = 0; n < neq; ++n) {
                for (int j = 0; j <= r; ++j) {
                    Int np = 1;
                    for (int k = 0; k <= d; ++k) {
                        M[n][static_cast<std::size_t>(j * (d + 1) + k)] = np * a[n + static_cast<std::size_t>(j)];
                        np *= static_cast<long>(n);
                    }
                }
            }
            auto v = detail::nullspace_vector(M, unknowns);
            if (v.empty()) continue;
            HolonomicOperator op;
            op.has_rec = true;
            for (int j = 0; j <= r; ++j)
                op.rec.push_back(trimmed(ZPoly(v.begin() + j * (d + 1), v.begin() + (j + 1) * (d + 1))));
            if (op.rec.back().empty() || op.rec.front().empty()) continue;
            detail::normalize_family(op.rec, op.rec.size() - 1);
            return op;
        }
    return std::nullopt;
}

/// Residuals of the recurrence on the sequence (all zero when it holds).
inline std::vector<Int> recurrence_residuals(const HolonomicOperator& op, const std::vector<Int>& a) {
    std::vector<Int> res;
    const int r = op.rec_order();
    for (std::size_t n = 0; n + static_cast<std::size_t>(r) < a.size(); ++n) {
        Int s = 0;
        for (int j = 0; j <= r; ++j) s += poly_value(op.rec[j], Int(static_cast<long>(n))) * a[n + j];
        res.push_back(s);
    }
    return res;
}

/// Extends a sequence with the recurrence (requires p_r(n) != 0).
inline std::vector<Int> extend_with_recurrence(const HolonomicOperator& op, std::vector<Int> a, std::size_t total) {
    const int r = op.rec_order();
    while (a.size() < total) {
        std::size_t n = a.size() - static_cast<std::size_t>(r);
        Int s = 0;
        for (int j = 0; j < r; ++j) s += poly_value(op.rec[j], Int(static_cast<long>(n))) * a[n + j];
        Int lead = poly_value(op.rec[r], Int(static_cast<long>(n)));
        if (lead == 0) throw DomainError("leading recurrence coefficient vanishes at n = " + std::to_string(n));
        if (s % lead != 0) throw DomainError("recurrence produces a non-integer term");
        a.push_back(-s / lead);
    }
    return a;
}

/// Differential form from the recurrence; boundary terms below the order are cleared by theta - N factors.
inline HolonomicOperator rec_to_ode(HolonomicOperator op, const std::vector<Int>& a) {
    if (!op.has_rec) throw DomainError("recurrence form missing");
    const int r = op.rec_order();
    std::vector<ZPoly> P(static_cast<std::size_t>(r + 1));
    for (int i = 0; i <= r; ++i) P[i] = poly_shift(op.rec[r - i], Int(i - r));
    // [t^N] L f = sum_{i <= N} P_i(N - i) a_{N-i} for N < r
    for (int N = 0; N < r; ++N) {
        Int s = 0;
        for (int i = 0; i <= N; ++i)
            if (static_cast<std::size_t>(N - i) < a.size()) s += poly_value(P[i], Int(N - i)) * a[N - i];
        if (s == 0) continue;
        for (int i = 0; i <= r; ++i) P[i] = poly_mul(P[i], ZPoly{Int(i - N), Int(1)});
    }
    op.theta = P;
    op.has_ode = true;
    detail::normalize_family(op.theta, 0);
    return op;
}

inline HolonomicOperator ode_to_rec(HolonomicOperator op) {
    if (!op.has_ode) throw DomainError("differential form missing");
    const int r = static_cast<int>(op.theta.size()) - 1;
    op.rec.assign(static_cast<std::size_t>(r + 1), ZPoly{});
    for (int j = 0; j <= r; ++j) op.rec[j] = poly_shift(op.theta[r - j], Int(j));
    while (op.rec.size() > 1 && op.rec.back().empty()) op.rec.pop_back();
    op.has_rec = true;
    detail::normalize_family(op.rec, op.rec.size() - 1);
    return op;
}

/// L applied to a truncated series; coefficients beyond the truncation are dropped.
inline Series apply_ode(const HolonomicOperator& op, const Series& f) {
    Series out(f.size(), Rat(0));
    for (std::size_t i = 0; i < op.theta.size(); ++i)
        for (std::size_t n = 0; n + i < f.size(); ++n)
            out[n + i] += Rat(poly_value(op.theta[i], Int(static_cast<long>(n)))) * f[n];
    return out;
}

// ---------------------------------------------------------------- singular points

struct SingularPoint {
    ZPoly factor;        // irreducible-or-squarefree factor whose root this is
    int multiplicity = 1;
    std::string exact;   // exact description
    Real re = 0, im = 0;
};

struct SingularLocus {
    int zero_multiplicity = 0;  // power of t dividing the leading coefficient
    bool infinity = true;
    std::vector<SingularPoint> finite;  // nonzero finite roots
    std::size_t finite_count() const { return finite.size(); }
};

namespace detail {

struct CReal {
    Real re, im;
};
inline CReal cmul(const CReal& a, const CReal& b) { return {a.re * b.re - a.im * b.im, a.re * b.im + a.im * b.re}; }
inline CReal csub(const CReal& a, const CReal& b) { return {a.re - b.re, a.im - b.im}; }
inline CReal cdiv(const CReal& a, const CReal& b) {
    Real d = b.re * b.re + b.im * b.im;
    return {(a.re * b.re + a.im * b.im) / d, (a.im * b.re - a.re * b.im) / d};
}

/// All complex roots of a squarefree integer polynomial (Aberth iteration).
inline std::vector<CReal> complex_roots(const ZPoly& p) {
    const int n = degree(p);
    std::vector<CReal> z(static_cast<std::size_t>(n));
    if (n <= 0) return z;
    std::vector<Real> c(p.size());
    for (std::size_t i = 0; i < p.size(); ++i) c[i] = Real(p[i]) / Real(p[n]);
    Real R = 0;
    for (int i = 0; i < n; ++i) R = std::max(R, Real(abs(c[i])));
    R = 1 + R;
    const Real pi = real_pi();
    for (int k = 0; k < n; ++k) {
        Real ang = 2 * pi * (Real(k) + Real("0.25")) / n;
        z[k] = {R * Real("0.5") * cos(ang), R * Real("0.5") * sin(ang)};
    }
    Real eps = pow(Real(10), -Real(working_digits() - 3));
    for (int it = 0; it < 2000; ++it) {
        Real move = 0;
        for (int k = 0; k < n; ++k) {
            CReal f{c[n], 0}, fp{0, 0};
            for (int i = n - 1; i >= 0; --i) {
                fp = {fp.re * z[k].re - fp.im * z[k].im + f.re, fp.re * z[k].im + fp.im * z[k].re + f.im};
                f = {f.re * z[k].re - f.im * z[k].im + c[i], f.re * z[k].im + f.im * z[k].re};
            }
            if (f.re == 0 && f.im == 0) continue;
            CReal ratio = cdiv(f, fp);
            CReal s{0, 0};
            for (int j = 0; j < n; ++j) {
                if (j == k) continue;
                CReal d = csub(z[k], z[j]);
                CReal inv = cdiv({Real(1), Real(0)}, d);
                s = {s.re + inv.re, s.im + inv.im};
            }
            CReal den = csub({Real(1), Real(0)}, cmul(ratio, s));
            CReal w = cdiv(ratio, den);
            z[k] = csub(z[k], w);
            move = std::max(move, Real(sqrt(w.re * w.re + w.im * w.im)));
        }
        if (move < eps) break;
    }
    return z;
}

/// Squarefree decomposition over Q: pairs (factor, multiplicity).
inline std::vector<std::pair<ZPoly, int>> squarefree_decomposition(const ZPoly& f) {
    std::vector<std::pair<ZPoly, int>> out;
    QPoly a = to_q(f);
    QPoly b = poly_derivative(a);
    QPoly c = poly_gcd(a, b);
    QPoly w, rem;
    poly_divmod(a, c, w, rem);
    int i = 1;
    while (degree(w) > 0) {
        QPoly y = poly_gcd(w, c);
        QPoly z;
        poly_divmod(w, y, z, rem);
        if (degree(z) > 0) out.push_back({to_z(z), i});
        w = y;
        QPoly nc;
        poly_divmod(c, y, nc, rem);
        c = nc;
        ++i;
    }
    return out;
}

inline std::vector<Int> divisors(Int n) {
    n = mp::abs(n);
    std::vector<Int> d;
    for (Int k = 1; k * k <= n; ++k)
        if (n % k == 0) {
            d.push_back(k);
            if (k * k != n) d.push_back(n / k);
        }
    return d;
}

}  // namespace detail

/// Roots of the leading theta-coefficient q_s(t); t = 0 and infinity are reported separately.
inline SingularLocus singular_points(const HolonomicOperator& op) {
    if (!op.has_ode) throw DomainError("differential form missing");
    auto q = op.ode_coefficients();
    ZPoly lead = primitive(q.back());
    SingularLocus L;
    while (!lead.empty() && lead[0] == 0) {
        lead.erase(lead.begin());
        ++L.zero_multiplicity;
    }
    for (auto [f, mult] : detail::squarefree_decomposition(lead)) {
        // rational roots first
        for (bool again = true; again && degree(f) >= 1;) {
            again = false;
            for (const auto& pn : detail::divisors(f[0])) {
                for (const auto& qd : detail::divisors(f.back())) {
                    for (int sg : {1, -1}) {
                        Rat root(Int(sg) * pn, qd);
                        if (poly_value(to_q(f), root) != 0) continue;
                        SingularPoint sp;
                        sp.factor = primitive(ZPoly{-mp::numerator(root), mp::denominator(root)});
                        sp.multiplicity = mult;
                        sp.exact = root.str();
                        sp.re = to_real(root);
                        L.finite.push_back(sp);
                        QPoly qq, rr;
                        poly_divmod(to_q(f), to_q(sp.factor), qq, rr);
                        f = to_z(qq);
                        again = true;
                        break;
                    }
                    if (again) break;
                }
                if (again) break;
            }
        }
        if (degree(f) < 1) continue;
        for (const auto& z : detail::complex_roots(f)) {
            SingularPoint sp;
            sp.factor = f;
            sp.multiplicity = mult;
            sp.exact = "root of " + poly_to_string(f, "t");
            sp.re = z.re;
            sp.im = z.im;
            // real roots come back with a residual imaginary part at working precision
            if (abs(sp.im) < pow(Real(10), -Real(working_digits()) * 3 / 4) * (1 + abs(sp.re))) sp.im = 0;
            L.finite.push_back(sp);
        }
    }
    return L;
}

// ---------------------------------------------------------------- Frobenius and mirror map

struct FrobeniusPair {
    Series f;
    std::optional<Series> h;  // g = f log t + h; present when the indicial order is >= 2
};

inline FrobeniusPair frobenius_solutions(const HolonomicOperator& op, std::size_t n_terms) {
    if (!op.has_ode) throw DomainError("differential form missing");
    const ZPoly& P0 = op.theta[0];
    const int s = degree(P0);
    for (int i = 0; i < s; ++i)
        if (P0[i] != 0) throw NotMUM("indicial polynomial has a nonzero root");
    if (s < 1) throw NotMUM("t = 0 is not a singular point");
    FrobeniusPair out;
    out.f.assign(n_terms, Rat(0));
    out.f[0] = 1;
    const std::size_t D = op.theta.size() - 1;
    for (std::size_t N = 1; N < n_terms; ++N) {
        Rat acc = 0;
        for (std::size_t i = 1; i <= std::min(D, N); ++i)
            acc += Rat(poly_value(op.theta[i], Int(static_cast<long>(N - i)))) * out.f[N - i];
        out.f[N] = -acc / Rat(poly_value(P0, Int(static_cast<long>(N))));
    }
    if (s >= 2) {
        std::vector<ZPoly> dP;
        for (const auto& p : op.theta) dP.push_back(poly_derivative(p));
        Series h(n_terms, Rat(0));
        for (std::size_t N = 1; N < n_terms; ++N) {
            Rat acc = 0;
            for (std::size_t i = 1; i <= std::min(D, N); ++i)
                acc += Rat(poly_value(op.theta[i], Int(static_cast<long>(N - i)))) * h[N - i];
            for (std::size_t i = 0; i <= std::min(D, N); ++i)
                acc += Rat(poly_value(dP[i], Int(static_cast<long>(N - i)))) * out.f[N - i];
            h[N] = -acc / Rat(poly_value(P0, Int(static_cast<long>(N))));
        }
        out.h = h;
    }
    return out;
}

struct MirrorMap {
    Series q_of_t;  // q = t exp(h/f)
    Series t_of_q;
    bool integral = false;
};

inline MirrorMap mirror_map(const Series& f, const Series& h, std::size_t n_terms) {
    MirrorMap m;
    Series u = series_div(series_trunc(h, n_terms), series_trunc(f, n_terms), n_terms);
    Series e = series_exp(u, n_terms);
    m.q_of_t.assign(n_terms, Rat(0));
    for (std::size_t i = 0; i + 1 < n_terms; ++i) m.q_of_t[i + 1] = e[i];
    m.t_of_q = series_reversion(m.q_of_t, n_terms);
    m.integral = std::all_of(m.t_of_q.begin(), m.t_of_q.end(), [](const Rat& c) { return mp::denominator(c) == 1; });
    return m;
}

// ---------------------------------------------------------------- basechange

/// Rational map t -> num(t)/den(t) with m(0) = 0.
struct BasechangeMap {
    QPoly num, den;

    BasechangeMap() : num{Rat(0), Rat(1)}, den{Rat(1)} {}
    BasechangeMap(QPoly n, QPoly d) : num(trimmed(n)), den(trimmed(d)) {
        if (den.empty()) throw DomainError("zero denominator");
        if (!num.empty() && num[0] != 0) throw DomainError("basechange map must fix t = 0");
        if (den[0] == 0) throw DomainError("basechange map has a pole at t = 0");
    }

    Series series(std::size_t n) const { return series_div(num, den, n); }

    /// (this o other)(t) = this(other(t)).
    BasechangeMap compose(const BasechangeMap& o) const {
        // this = N(u)/D(u), u = a/b: N(a/b) b^k / (D(a/b) b^k)
        std::size_t k = std::max(num.size(), den.size());
        auto homog = [&](const QPoly& p) {
            QPoly r;
            for (std::size_t i = 0; i < p.size(); ++i) {
                QPoly term{p[i]};
                for (std::size_t j = 0; j < i; ++j) term = poly_mul(term, o.num);
                for (std::size_t j = i; j + 1 < k; ++j) term = poly_mul(term, o.den);
                r = poly_add(r, term);
            }
            return r;
        };
        QPoly n = homog(num), d = homog(den);
        QPoly g = poly_gcd(n, d);
        QPoly q1, q2, r;
        poly_divmod(n, g, q1, r);
        poly_divmod(d, g, q2, r);
        Rat c = q2[0];
        return BasechangeMap(poly_scale(q1, 1 / c), poly_scale(q2, 1 / c));
    }

    std::string str() const {
        return "(" + poly_to_string(num, "t") + ")/(" + poly_to_string(den, "t") + ")";
    }
};

struct PullbackReport {
    bool pass = false;
    int exponent = 1;          // prefactor p satisfies p^exponent = P/Q
    QPoly prefactor_num, prefactor_den;
    std::vector<Rat> remainder;  // coefficients of the pulled-back operator applied to p*B
    std::size_t order = 0;
    std::string message;

    std::string prefactor_str() const {
        std::string s = "(" + poly_to_string(prefactor_num, "t") + ")";
        if (degree(prefactor_den) > 0) s += "/(" + poly_to_string(prefactor_den, "t") + ")";
        if (exponent != 1) s = "(" + s + ")^(1/" + std::to_string(exponent) + ")";
        return s;
    }
};

namespace detail {

/// Pade [a/b] of a series with Q(0) = 1, if the linear system is solvable.
inline std::optional<std::pair<QPoly, QPoly>> pade(const Series& s, int a, int b) {
    // unknowns q_1..q_b; equations for coefficients a+1..a+b of Q*S
    const int n = b;
    std::vector<std::vector<Rat>> M(static_cast<std::size_t>(n), std::vector<Rat>(static_cast<std::size_t>(n + 1)));
    auto S = [&](int i) { return i >= 0 && static_cast<std::size_t>(i) < s.size() ? s[i] : Rat(0); };
    for (int r = 0; r < n; ++r) {
        int k = a + 1 + r;
        for (int j = 1; j <= b; ++j) M[r][j - 1] = S(k - j);
        M[r][n] = -S(k);
    }
    for (int c = 0, row = 0; c < n; ++c) {
        int p = row;
        while (p < n && M[p][c] == 0) ++p;
        if (p == n) return std::nullopt;
        std::swap(M[p], M[row]);
        for (int i = 0; i < n; ++i) {
            if (i == row || M[i][c] == 0) continue;
            Rat f = M[i][c] / M[row][c];
            for (int j = c; j <= n; ++j) M[i][j] -= f * M[row][j];
        }
        ++row;
    }
    QPoly Q{Rat(1)};
    for (int j = 0; j < n; ++j) Q.push_back(M[j][n] / M[j][j]);
    QPoly P;
    for (int k = 0; k <= a; ++k) {
        Rat c = 0;
        for (int j = 0; j <= b && j <= k; ++j) c += Q[j] * S(k - j);
        P.push_back(c);
    }
    return std::make_pair(trimmed(P), trimmed(Q));
}

}  // namespace detail

/// Checks that p(t) B(t) is annihilated by the pullback of opA along m, with p^e a Pade
/// approximant of degree <= (2,2) of (F_A(m(t)) / B(t))^e for e in {1, 2}.
inline PullbackReport pullback_check(const HolonomicOperator& opA, const BasechangeMap& m,
                                     const PeriodSequence& seqB, std::size_t order) {
    PullbackReport rep;
    rep.order = order;
    if (!opA.has_ode) throw DomainError("differential form missing");
    if (seqB.terms.size() < order) {
        rep.message = "sequence shorter than the requested order";
        return rep;
    }
    const std::size_t n = order;
    Series ms = m.series(n);
    Series B(n);
    for (std::size_t i = 0; i < n; ++i) B[i] = Rat(seqB.terms[i]);
    FrobeniusPair fp = frobenius_solutions(opA, n);
    Series FA = series_compose(fp.f, ms, n);
    Series ratio = series_div(FA, B, n);

    std::optional<Series> p_series;
    for (int e : {1, 2}) {
        Series re = ratio;
        for (int k = 1; k < e; ++k) re = series_mul(re, ratio, n);
        for (int tot = 0; tot <= 4 && !p_series; ++tot)
            for (int da = std::min(tot, 2); da >= 0 && !p_series; --da) {
                int db = tot - da;
                if (db > 2) continue;
                auto pq = detail::pade(re, da, db);
                if (!pq) continue;
                Series lhs = series_mul(pq->second, re, n);
                bool ok = true;
                for (std::size_t i = 0; i < n && ok; ++i)
                    ok = lhs[i] == (i < pq->first.size() ? pq->first[i] : Rat(0));
                if (!ok) continue;
                rep.exponent = e;
                rep.prefactor_num = pq->first;
                rep.prefactor_den = pq->second;
                Series ps = series_div(pq->first, pq->second, n);
                p_series = e == 1 ? ps : series_sqrt(ps, n);
            }
        if (p_series) break;
    }
    if (!p_series) {
        rep.message = "no prefactor of degree <= (2,2) found";
        return rep;
    }
    // pulled-back operator sum_j q_j(m(t)) (D theta_t)^j, D = m / (t m')
    // D = m / (t m'), after removing the common power of t
    std::size_t v = 1;
    Series ms1 = m.series(n + 8);
    while (v < ms1.size() && ms1[v] == 0) ++v;
    Series numd = poly_derivative(m.num), dend = poly_derivative(m.den);
    Series tmder = series_div(poly_mul(QPoly{Rat(0), Rat(1)}, poly_sub(poly_mul(numd, m.den), poly_mul(m.num, dend))),
                              poly_mul(m.den, m.den), n + v);
    Series mu(ms1.begin() + static_cast<long>(v), ms1.begin() + static_cast<long>(v + n));
    Series tu(tmder.begin() + static_cast<long>(v), tmder.begin() + static_cast<long>(v + n));
    Series Dfac = series_div(mu, tu, n);
    Series G = series_mul(*p_series, B, n);
    auto q = opA.ode_coefficients();
    Series total(n, Rat(0));
    Series cur = G;
    for (std::size_t j = 0; j < q.size(); ++j) {
        Series qj = series_compose(to_q(q[j]), ms, n);
        Series term = series_mul(qj, cur, n);
        for (std::size_t i = 0; i < n; ++i) total[i] += term[i];
        cur = series_mul(Dfac, series_theta(cur), n);
    }
    rep.remainder = total;
    rep.pass = std::all_of(total.begin(), total.end(), [](const Rat& c) { return c == 0; });
    rep.message = rep.pass ? "pulled-back operator annihilates p*B through the order" : "nonzero remainder";
    return rep;
}

}  // namespace gz4
