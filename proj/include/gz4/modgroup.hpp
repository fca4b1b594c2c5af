#pragma once

#include "core.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <map>
#include <numeric>
#include <optional>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <tuple>
#include <vector>

namespace gz4 {

using i64 = std::int64_t;
using i128 = __int128;

struct PointH {
    Real x;
    Real y;
    unsigned digits = 0;

    PointH() : x(0), y(1), digits(working_digits()) {}
    PointH(const Real& x_, const Real& y_) : x(x_), y(y_), digits(working_digits()) {
        if (!(y > 0)) throw DomainError("point not in the upper half-plane");
    }
    PointH(const char* xs, const char* ys) : PointH(Real(xs), Real(ys)) {}
    PointH(double xs, double ys) : PointH(Real(xs), Real(ys)) {}
};

/// Integer 2x2 matrix of positive determinant, stored primitively up to sign.
struct ProjectiveMatrix {
    i64 a = 1, b = 0, c = 0, d = 1;

    ProjectiveMatrix() = default;
    ProjectiveMatrix(i64 a_, i64 b_, i64 c_, i64 d_) { assign(a_, b_, c_, d_); }

    static ProjectiveMatrix identity() { return {}; }

    i64 det() const { return a * d - b * c; }
    i64 trace() const { return a + d; }

    bool operator==(const ProjectiveMatrix& o) const {
        return a == o.a && b == o.b && c == o.c && d == o.d;
    }
    bool operator!=(const ProjectiveMatrix& o) const { return !(*this == o); }
    bool operator<(const ProjectiveMatrix& o) const {
        return std::tie(a, b, c, d) < std::tie(o.a, o.b, o.c, o.d);
    }

    ProjectiveMatrix operator*(const ProjectiveMatrix& o) const {
        ProjectiveMatrix r;
        r.assign128(i128(a) * o.a + i128(b) * o.c, i128(a) * o.b + i128(b) * o.d,
                    i128(c) * o.a + i128(d) * o.c, i128(c) * o.b + i128(d) * o.d);
        return r;
    }

    /// Projective inverse (the adjugate).
    ProjectiveMatrix inverse() const { return ProjectiveMatrix(d, -b, -c, a); }

    bool is_identity() const { return a == 1 && b == 0 && c == 0 && d == 1; }

    std::string str() const {
        std::ostringstream os;
        os << "(" << a << " " << b << "; " << c << " " << d << ")";
        return os.str();
    }

private:
    static i128 gcd128(i128 x, i128 y) {
        if (x < 0) x = -x;
        if (y < 0) y = -y;
        while (y != 0) {
            i128 t = x % y;
            x = y;
            y = t;
        }
        return x;
    }

    void assign128(i128 A, i128 B, i128 C, i128 D) {
        i128 g = gcd128(gcd128(A, B), gcd128(C, D));
        if (g == 0) throw DomainError("zero matrix");
        A /= g;
        B /= g;
        C /= g;
        D /= g;
        i128 first = A != 0 ? A : (B != 0 ? B : (C != 0 ? C : D));
        if (first < 0) {
            A = -A;
            B = -B;
            C = -C;
            D = -D;
        }
        const i128 lim = i128(1) << 62;
        for (i128 v : {A, B, C, D})
            if (v > lim || v < -lim) throw NotProjectivelyIntegral("matrix entries overflow");
        a = i64(A);
        b = i64(B);
        c = i64(C);
        d = i64(D);
        if (A * D - B * C <= 0) throw DomainError("determinant must be positive");
    }

    void assign(i64 A, i64 B, i64 C, i64 D) { assign128(A, B, C, D); }
};

/// Exact rational 2x2 matrix, used for conjugators.
struct RatMatrix {
    Rat a{1}, b{0}, c{0}, d{1};

    RatMatrix() = default;
    RatMatrix(Rat a_, Rat b_, Rat c_, Rat d_) : a(a_), b(b_), c(c_), d(d_) {}
    explicit RatMatrix(const ProjectiveMatrix& g) : a(g.a), b(g.b), c(g.c), d(g.d) {}

    Rat det() const { return a * d - b * c; }
    bool is_identity() const { return a == 1 && b == 0 && c == 0 && d == 1; }

    RatMatrix operator*(const RatMatrix& o) const {
        return {a * o.a + b * o.c, a * o.b + b * o.d, c * o.a + d * o.c, c * o.b + d * o.d};
    }
    RatMatrix inverse() const {
        Rat D = det();
        if (D == 0) throw DomainError("singular conjugator");
        return {d / D, -b / D, -c / D, a / D};
    }
    bool operator==(const RatMatrix& o) const {
        return a == o.a && b == o.b && c == o.c && d == o.d;
    }
};

/// Clears denominators and content; throws if the result is not a positive-determinant matrix.
inline ProjectiveMatrix to_projective(const RatMatrix& m) {
    Int l = 1;
    for (const Rat* q : {&m.a, &m.b, &m.c, &m.d}) l = mp::lcm(l, Int(mp::denominator(*q)));
    std::array<Int, 4> e;
    const Rat* qs[4] = {&m.a, &m.b, &m.c, &m.d};
    Int g = 0;
    for (int i = 0; i < 4; ++i) {
        e[i] = mp::numerator(*qs[i]) * (l / mp::denominator(*qs[i]));
        g = mp::gcd(g, e[i]);
    }
    if (g == 0) throw NotProjectivelyIntegral("zero matrix");
    std::array<i64, 4> v;
    for (int i = 0; i < 4; ++i) {
        Int t = e[i] / g;
        if (mp::abs(t) > Int(i64(1) << 62)) throw NotProjectivelyIntegral("entries too large");
        v[i] = t.convert_to<i64>();
    }
    if (v[0] * v[3] - v[1] * v[2] < 0) throw NotProjectivelyIntegral("negative determinant");
    return ProjectiveMatrix(v[0], v[1], v[2], v[3]);
}

struct CMPoint {
    i64 A = 1, B = 0, C = 1;

    CMPoint() = default;
    CMPoint(i64 A_, i64 B_, i64 C_) : A(A_), B(B_), C(C_) {
        if (A <= 0) throw DomainError("CM form needs A > 0");
        if (disc() >= 0) throw DomainError("CM form needs negative discriminant");
        if (std::gcd(std::gcd(A, B), C) != 1) throw DomainError("CM form must be primitive");
    }

    i64 disc() const { return B * B - 4 * A * C; }
    PointH tau() const {
        Real D = Real(-disc());
        return PointH(Real(-B) / (2 * A), sqrt(D) / (2 * A));
    }
    bool operator==(const CMPoint& o) const { return A == o.A && B == o.B && C == o.C; }
    bool operator<(const CMPoint& o) const {
        return std::tie(A, B, C) < std::tie(o.A, o.B, o.C);
    }
    std::string str() const {
        std::ostringstream os;
        os << "(" << A << "," << B << "," << C << ")";
        return os.str();
    }
};

/// Content-reduces (A,B,C) and makes A positive.
inline CMPoint make_form(i64 A, i64 B, i64 C) {
    i64 g = std::gcd(std::gcd(A, B), C);
    if (g == 0) throw DomainError("zero form");
    A /= g;
    B /= g;
    C /= g;
    if (A < 0) {
        A = -A;
        B = -B;
        C = -C;
    }
    return CMPoint(A, B, C);
}

/// Form whose upper half-plane root is g applied to the root of f.
inline CMPoint transform_form(const ProjectiveMatrix& g, const CMPoint& f) {
    i128 a = g.a, b = g.b, c = g.c, d = g.d;
    i128 A = f.A, B = f.B, C = f.C;
    i128 nA = A * d * d - B * d * c + C * c * c;
    i128 nB = -2 * A * b * d + B * (a * d + b * c) - 2 * C * a * c;
    i128 nC = A * b * b - B * a * b + C * a * a;
    i128 g0 = nA, g1 = nB, g2 = nC;
    auto ag = [](i128 x, i128 y) {
        if (x < 0) x = -x;
        if (y < 0) y = -y;
        while (y) {
            i128 t = x % y;
            x = y;
            y = t;
        }
        return x;
    };
    i128 gg = ag(ag(g0, g1), g2);
    nA /= gg;
    nB /= gg;
    nC /= gg;
    return make_form(i64(nA), i64(nB), i64(nC));
}

struct GroupSpec {
    i64 level = 1;
    RatMatrix conjugator;
    std::vector<ProjectiveMatrix> atkin_lehner;
    std::string label;
    bool has_presentation = true;

    static GroupSpec gamma0(i64 N) {
        GroupSpec g;
        g.level = N;
        g.label = "G0(" + std::to_string(N) + ")";
        return g;
    }
    bool conjugated() const { return !conjugator.is_identity(); }
    std::size_t ell() const { return atkin_lehner.size(); }
};

inline PointH moebius_apply(const ProjectiveMatrix& g, const PointH& t) {
    Real cx = g.c * t.x + g.d;
    Real cy = g.c * t.y;
    Real den = cx * cx + cy * cy;
    Real ax = g.a * t.x + g.b;
    Real ay = g.a * t.y;
    PointH r;
    r.x = (ax * cx + ay * cy) / den;
    r.y = Real(g.det()) * t.y / den;
    r.digits = t.digits;
    return r;
}

inline PointH moebius_apply(const RatMatrix& m, const PointH& t) {
    Real a = to_real(m.a), b = to_real(m.b), c = to_real(m.c), d = to_real(m.d);
    Real cx = c * t.x + d, cy = c * t.y;
    Real den = cx * cx + cy * cy;
    Real ax = a * t.x + b, ay = a * t.y;
    PointH r;
    r.x = (ax * cx + ay * cy) / den;
    r.y = to_real(m.det()) * t.y / den;
    r.digits = t.digits;
    if (!(r.y > 0)) throw DomainError("conjugator must have positive determinant");
    return r;
}

inline bool in_gamma0_standard(const ProjectiveMatrix& g, i64 N) {
    return g.det() == 1 && g.c % N == 0;
}

inline bool is_member(const ProjectiveMatrix& g, const GroupSpec& G) {
    if (g.det() != 1) throw NonUnitDeterminant("is_member needs determinant 1");
    if (!G.conjugated()) return g.c % G.level == 0;
    RatMatrix h = G.conjugator.inverse() * RatMatrix(g) * G.conjugator;
    for (const Rat* q : {&h.a, &h.b, &h.c, &h.d})
        if (mp::denominator(*q) != 1) return false;
    return mp::numerator(h.c) % G.level == 0;
}

inline ProjectiveMatrix fricke(i64 N) {
    if (N < 1) throw DomainError("fricke needs N >= 1");
    return ProjectiveMatrix(0, 1, -N, 0);
}

/// C^-1 g C in primitive integral form.
inline ProjectiveMatrix conjugate(const ProjectiveMatrix& g, const RatMatrix& C) {
    if (C.det() == 0) throw DomainError("singular conjugator");
    return to_projective(C.inverse() * RatMatrix(g) * C);
}

inline CMPoint fixed_point(const ProjectiveMatrix& g) {
    i64 t = g.trace();
    if (i128(t) * t >= i128(4) * g.det()) throw NotElliptic("matrix is not elliptic");
    return make_form(g.c, g.d - g.a, -g.b);
}

/// Atkin-Lehner matrix W_Q of level N in the standard frame (Q an exact divisor of N).
inline ProjectiveMatrix atkin_lehner_standard(i64 Q, i64 N) {
    if (Q <= 0 || N % Q != 0 || std::gcd(Q, N / Q) != 1)
        throw ParseError("Atkin-Lehner index " + std::to_string(Q) + " is not an exact divisor of " +
                         std::to_string(N));
    if (Q == N) return fricke(N);
    i64 x, y;
    ext_gcd(Q, N / Q, x, y);  // Q x + (N/Q) y = 1
    return ProjectiveMatrix(Q * x, -y, N, Q);
}

namespace detail {

inline Rat parse_rational(const std::string& s) {
    auto slash = s.find('/');
    try {
        if (slash == std::string::npos) return Rat(Int(s));
        return Rat(Int(s.substr(0, slash)), Int(s.substr(slash + 1)));
    } catch (const std::exception&) {
        throw ParseError("bad rational '" + s + "'");
    }
}

inline std::vector<std::string> split(const std::string& s, char sep) {
    std::vector<std::string> out;
    std::string cur;
    for (char ch : s) {
        if (ch == sep) {
            out.push_back(cur);
            cur.clear();
        } else if (ch != ' ') {
            cur += ch;
        }
    }
    out.push_back(cur);
    return out;
}

}  // namespace detail

/// Parses group labels: "G0(N)", "G0(N)+a+b", "conj[p,q,r,s]:G0(N)+...", "G0t(8)+4",
/// explicit generators "+[a,b,c,d]". Anything else is kept as a label without presentation.
inline GroupSpec parse_group(const std::string& label) {
    GroupSpec G;
    G.label = label;
    std::string s = label;
    if (s.rfind("G0t(8)", 0) == 0) s = "conj[1,-1,2,-1]:G0(8)" + s.substr(6);
    if (s.rfind("conj[", 0) == 0) {
        auto close = s.find("]:");
        if (close == std::string::npos) throw ParseError("bad conjugator in '" + label + "'");
        auto parts = detail::split(s.substr(5, close - 5), ',');
        if (parts.size() != 4) throw ParseError("conjugator needs 4 entries in '" + label + "'");
        G.conjugator = RatMatrix(detail::parse_rational(parts[0]), detail::parse_rational(parts[1]),
                                 detail::parse_rational(parts[2]), detail::parse_rational(parts[3]));
        if (G.conjugator.det() == 0) throw ParseError("singular conjugator in '" + label + "'");
        s = s.substr(close + 2);
    }
    if (s.rfind("G0(", 0) != 0) {
        G.has_presentation = false;
        std::size_t i = 0;
        while (i < label.size() && std::isdigit(static_cast<unsigned char>(label[i]))) ++i;
        G.level = i > 0 ? std::stoll(label.substr(0, i)) : 0;
        return G;
    }
    auto rp = s.find(')');
    if (rp == std::string::npos) throw ParseError("missing ')' in '" + label + "'");
    try {
        G.level = std::stoll(s.substr(3, rp - 3));
    } catch (const std::exception&) {
        throw ParseError("bad level in '" + label + "'");
    }
    if (G.level < 1) throw ParseError("level must be positive in '" + label + "'");
    std::string rest = s.substr(rp + 1);
    std::size_t i = 0;
    while (i < rest.size()) {
        if (rest[i] != '+') throw ParseError("expected '+' in '" + label + "'");
        ++i;
        if (i < rest.size() && rest[i] == '[') {
            auto e = rest.find(']', i);
            if (e == std::string::npos) throw ParseError("unterminated matrix in '" + label + "'");
            auto parts = detail::split(rest.substr(i + 1, e - i - 1), ',');
            if (parts.size() != 4) throw ParseError("matrix needs 4 entries in '" + label + "'");
            G.atkin_lehner.push_back(ProjectiveMatrix(std::stoll(parts[0]), std::stoll(parts[1]),
                                                      std::stoll(parts[2]), std::stoll(parts[3])));
            i = e + 1;
        } else {
            std::size_t j = i;
            while (j < rest.size() && std::isdigit(static_cast<unsigned char>(rest[j]))) ++j;
            if (j == i) throw ParseError("expected index after '+' in '" + label + "'");
            i64 Q = std::stoll(rest.substr(i, j - i));
            if (G.conjugated()) {
                // Indices after a conjugator name Fricke matrices in the outer frame.
                G.atkin_lehner.push_back(fricke(Q));
            } else {
                G.atkin_lehner.push_back(atkin_lehner_standard(Q, G.level));
            }
            i = j;
        }
    }
    return G;
}

/// Random element of Gamma_0 as a word in T and (1 0; N 1), carried to the outer frame.
template <class Rng>
ProjectiveMatrix random_gamma0_element(const GroupSpec& G, Rng& rng, int length = 8) {
    std::uniform_int_distribution<int> pick(0, 3);
    ProjectiveMatrix g;
    const ProjectiveMatrix gens[4] = {{1, 1, 0, 1}, {1, -1, 0, 1}, {1, 0, G.level, 1}, {1, 0, -G.level, 1}};
    for (int i = 0; i < length; ++i) g = g * gens[pick(rng)];
    if (!G.conjugated()) return g;
    return to_projective(G.conjugator * RatMatrix(g) * G.conjugator.inverse());
}

struct GroupCheck {
    bool involutions_ok = true;
    bool normalizes_ok = true;
    bool ell_ok = true;
    std::string detail;
    bool ok() const { return involutions_ok && normalizes_ok && ell_ok; }
};

/// Probabilistic check of the GroupSpec invariants.
inline GroupCheck check_group(const GroupSpec& G, int samples = 100, unsigned seed = 1) {
    GroupCheck r;
    if (!G.has_presentation) {
        r.detail = "label only";
        return r;
    }
    r.ell_ok = G.ell() <= 2;
    std::mt19937_64 rng(seed);
    for (const auto& w : G.atkin_lehner) {
        if (!(w * w).is_identity()) {
            r.involutions_ok = false;
            r.detail += "w^2 != 1 for " + w.str() + "; ";
        }
        for (int i = 0; i < samples; ++i) {
            ProjectiveMatrix g = random_gamma0_element(G, rng);
            ProjectiveMatrix h = w * g * w.inverse();
            if (h.det() != 1 || !is_member(h, G)) {
                r.normalizes_ok = false;
                r.detail += w.str() + " does not normalize on " + g.str() + "; ";
                break;
            }
        }
    }
    return r;
}

inline Real point_pair_invariant(const PointH& t, const PointH& s) {
    Real dx = t.x - s.x, dy = t.y - s.y;
    return 1 + (dx * dx + dy * dy) / (2 * t.y * s.y);
}

namespace detail {

inline bool enum_less(const ProjectiveMatrix& p, const ProjectiveMatrix& q) {
    auto key = [](const ProjectiveMatrix& m) {
        return std::make_tuple(m.c < 0 ? -m.c : m.c, m.c, m.d < 0 ? -m.d : m.d, m.d, m.a, m.b);
    };
    return key(p) < key(q);
}

inline i64 to_i64_floor(const Real& v) { return static_cast<i64>(floor(v).convert_to<long double>()); }
inline i64 to_i64_ceil(const Real& v) { return static_cast<i64>(ceil(v).convert_to<long double>()); }

}  // namespace detail

/// All gamma in Gamma_0 (standard frame, level N) with u(tau, gamma sigma) <= U.
inline std::vector<ProjectiveMatrix> enumerate_near_standard(i64 N, const PointH& tau, const PointH& sigma,
                                                             const Real& U) {
    std::vector<ProjectiveMatrix> out;
    Real R = U + sqrt(U * U - 1);
    Real cmax2 = R / (tau.y * sigma.y);
    i64 cmax = detail::to_i64_floor(sqrt(cmax2)) + 1;
    for (i64 c = 0; c <= cmax; c += N) {
        std::vector<i64> ds;
        if (c == 0) {
            ds.push_back(1);
        } else {
            Real w2 = sigma.y * R / tau.y - Real(c) * c * sigma.y * sigma.y;
            if (w2 < 0) continue;
            Real w = sqrt(w2);
            Real center = -Real(c) * sigma.x;
            i64 lo = detail::to_i64_floor(center - w) - 1, hi = detail::to_i64_ceil(center + w) + 1;
            for (i64 d = lo; d <= hi; ++d)
                if (std::gcd(c, d) == 1) ds.push_back(d);
        }
        for (i64 d : ds) {
            i64 a, b;
            if (c == 0) {
                a = 1;
                b = 0;
            } else {
                i64 p, q;
                ext_gcd(c, d, p, q);  // p c + q d = 1
                a = q;
                b = -p;
            }
            ProjectiveMatrix g0(a, b, c, d);
            PointH s0 = moebius_apply(g0, sigma);
            Real h2 = 2 * tau.y * s0.y * (U - 1) - (tau.y - s0.y) * (tau.y - s0.y);
            if (h2 < 0) continue;
            Real h = sqrt(h2);
            Real base = tau.x - s0.x;
            i64 lo = detail::to_i64_floor(base - h) - 1, hi = detail::to_i64_ceil(base + h) + 1;
            for (i64 n = lo; n <= hi; ++n) {
                PointH sn = s0;
                sn.x += n;
                if (point_pair_invariant(tau, sn) <= U) out.push_back(ProjectiveMatrix(1, n, 0, 1) * g0);
            }
        }
    }
    return out;
}

inline std::vector<ProjectiveMatrix> enumerate_near(const GroupSpec& G, const PointH& tau, const PointH& sigma,
                                                    const Real& U) {
    if (!G.has_presentation) throw PresentationUnavailable("group presentation unavailable: " + G.label);
    std::vector<ProjectiveMatrix> out;
    if (!G.conjugated()) {
        out = enumerate_near_standard(G.level, tau, sigma, U);
    } else {
        RatMatrix Ci = G.conjugator.inverse();
        auto inner = enumerate_near_standard(G.level, moebius_apply(Ci, tau), moebius_apply(Ci, sigma), U);
        out.reserve(inner.size());
        for (const auto& g : inner) out.push_back(to_projective(G.conjugator * RatMatrix(g) * Ci));
    }
    std::sort(out.begin(), out.end(), detail::enum_less);
    out.erase(std::unique(out.begin(), out.end()), out.end());
    return out;
}

inline std::vector<ProjectiveMatrix> hecke_cosets(i64 m, i64 N) {
    if (m < 1 || N < 1) throw DomainError("hecke_cosets needs positive m and N");
    if (std::gcd(m, N) != 1) throw NotCoprime("gcd(m, N) != 1");
    std::vector<ProjectiveMatrix> reps;
    for (i64 a = 1; a <= m; ++a) {
        if (m % a) continue;
        i64 d = m / a;
        for (i64 b = 0; b < d; ++b)
            if (std::gcd(std::gcd(a, b), d) == 1) reps.push_back(ProjectiveMatrix(a, b, 0, d));
    }
    return reps;
}

/// Lifts the root of f to maximal height under Gamma_0(N) using exact form arithmetic.
/// Returns gamma with gamma(tau_f) at maximal height.
inline ProjectiveMatrix maximize_height_form(const CMPoint& f0, i64 N, CMPoint* out = nullptr) {
    CMPoint f = f0;
    ProjectiveMatrix acc;
    for (int iter = 0; iter < 10000; ++iter) {
        // |c tau + d|^2 = (A d^2 - B c d + C c^2) / A
        i64 bestv = f.A, bc = 0, bd = 1;
        i64 D = -f.disc();
        i64 cm = static_cast<i64>(std::floor(2.0L * f.A / std::sqrt(static_cast<long double>(D)))) + 1;
        for (i64 c = N; c <= cm; c += N) {
            // A d^2 - B c d + C c^2 < A  => d near B c / (2A)
            long double cen = static_cast<long double>(f.B) * c / (2.0L * f.A);
            long double rad2 = (static_cast<long double>(f.A) - (static_cast<long double>(D) * c * c) / (4.0L * f.A)) / f.A;
            if (rad2 < 0) continue;
            long double rad = std::sqrt(rad2);
            for (i64 d = static_cast<i64>(std::floor(cen - rad)) - 1; d <= static_cast<i64>(std::ceil(cen + rad)) + 1; ++d) {
                if (std::gcd(c, d) != 1) continue;
                i128 v = i128(f.A) * d * d - i128(f.B) * c * d + i128(f.C) * c * c;
                if (v < bestv) {
                    bestv = i64(v);
                    bc = c;
                    bd = d;
                }
            }
        }
        if (bc == 0) break;
        i64 p, q;
        ext_gcd(bc, bd, p, q);
        ProjectiveMatrix g(q, -p, bc, bd);
        f = transform_form(g, f);
        acc = g * acc;
    }
    // tau -> tau + n sends B to B - 2 A n; bring B into (-A, A]
    i64 n = -floor_div(f.A - f.B, 2 * f.A);
    ProjectiveMatrix T(1, n, 0, 1);
    f = transform_form(T, f);
    acc = T * acc;
    if (out) *out = f;
    return acc;
}

/// Canonical representative of the Gamma_0(N)-class of a Heegner form.
inline CMPoint canonical_form(const CMPoint& f0, i64 N) {
    CMPoint f;
    maximize_height_form(f0, N, &f);
    CMPoint best = f;
    i64 D = -f.disc();
    i64 cm = static_cast<i64>(std::floor(2.0L * f.A / std::sqrt(static_cast<long double>(D)))) + 1;
    for (i64 c = N; c <= cm; c += N) {
        long double cen = static_cast<long double>(f.B) * c / (2.0L * f.A);
        long double rad2 = (static_cast<long double>(f.A) - (static_cast<long double>(D) * c * c) / (4.0L * f.A)) / f.A;
        if (rad2 < -1e-9L) continue;
        long double rad = std::sqrt(std::max(rad2, 0.0L));
        for (i64 d = static_cast<i64>(std::floor(cen - rad)) - 1; d <= static_cast<i64>(std::ceil(cen + rad)) + 1; ++d) {
            if (std::gcd(c, d) != 1) continue;
            i128 v = i128(f.A) * d * d - i128(f.B) * c * d + i128(f.C) * c * c;
            if (v != f.A) continue;
            i64 p, q;
            ext_gcd(c, d, p, q);
            CMPoint h = transform_form(ProjectiveMatrix(q, -p, c, d), f);
            i64 n = -floor_div(h.A - h.B, 2 * h.A);
            h = transform_form(ProjectiveMatrix(1, n, 0, 1), h);
            if (h < best) best = h;
        }
    }
    return best;
}

inline std::vector<CMPoint> cm_points(const GroupSpec& G, i64 Dmax) {
    if (!G.has_presentation) throw PresentationUnavailable("group presentation unavailable: " + G.label);
    const i64 N = G.level;
    std::set<CMPoint> found;
    for (i64 D = -3; D >= -Dmax; --D) {
        if (mod_pos(D, 4) > 1) continue;
        i64 Amax = N * (-D);
        for (i64 A = N; A <= Amax; A += N) {
            for (i64 B = -A + 1; B <= A; ++B) {
                i64 num = B * B - D;
                if (num % (4 * A)) continue;
                i64 C = num / (4 * A);
                if (std::gcd(std::gcd(A, B), C) != 1) continue;
                found.insert(canonical_form(CMPoint(A, B, C), N));
            }
        }
    }
    std::vector<CMPoint> out(found.begin(), found.end());
    if (G.conjugated()) {
        ProjectiveMatrix C = to_projective(G.conjugator);
        for (auto& f : out) f = transform_form(C, f);
    }
    std::sort(out.begin(), out.end(), [](const CMPoint& p, const CMPoint& q) {
        return std::make_tuple(-p.disc(), p.A, p.B, p.C) < std::make_tuple(-q.disc(), q.A, q.B, q.C);
    });
    return out;
}

/// Reduces tau into |x| <= 1/2 (x in [-1/2, 1/2)), |tau| >= 1. Returns (tau_out, g) with g tau = tau_out.
inline std::pair<PointH, ProjectiveMatrix> reduce_sl2(const PointH& tau) {
    PointH t = tau;
    ProjectiveMatrix g;
    const Real half = Real(1) / 2;
    for (int iter = 0; iter < 100000; ++iter) {
        Real n = floor(t.x + half);
        if (n != 0) {
            i64 k = n.convert_to<i64>();
            t.x -= n;
            g = ProjectiveMatrix(1, -k, 0, 1) * g;
        }
        Real r2 = t.x * t.x + t.y * t.y;
        if (r2 >= 1) break;
        t.x = -t.x / r2;
        t.y = t.y / r2;
        g = ProjectiveMatrix(0, -1, 1, 0) * g;
    }
    return {t, g};
}

/// Maximizes the height of tau under Gamma_0(N) in the standard frame; returns (tau', gamma) with gamma tau = tau'.
inline std::pair<PointH, ProjectiveMatrix> maximize_height(const PointH& tau, i64 N) {
    PointH t = tau;
    ProjectiveMatrix acc;
    const Real half = Real(1) / 2;
    for (int iter = 0; iter < 100000; ++iter) {
        Real n = floor(t.x + half);
        if (n != 0) {
            t.x -= n;
            acc = ProjectiveMatrix(1, -n.convert_to<i64>(), 0, 1) * acc;
        }
        Real best = 1;
        i64 bc = 0, bd = 1;
        Real ymax = 1 / t.y;
        i64 cm = detail::to_i64_floor(ymax) + 1;
        for (i64 c = N; c <= cm; c += N) {
            Real cy2 = Real(c) * c * t.y * t.y;
            if (cy2 >= 1) break;
            Real w = sqrt(1 - cy2);
            Real cen = -Real(c) * t.x;
            for (i64 d = detail::to_i64_floor(cen - w) - 1; d <= detail::to_i64_ceil(cen + w) + 1; ++d) {
                if (std::gcd(c, d) != 1) continue;
                Real v = (c * t.x + d) * (c * t.x + d) + cy2;
                if (v < best) {
                    best = v;
                    bc = c;
                    bd = d;
                }
            }
        }
        // stop unless the height grows by a visible amount
        if (bc == 0 || best > 1 - pow(Real(10), -Real(t.digits) / 2)) break;
        i64 p, q;
        ext_gcd(bc, bd, p, q);
        ProjectiveMatrix g(q, -p, bc, bd);
        t = moebius_apply(g, t);
        acc = g * acc;
    }
    return {t, acc};
}

inline i64 gamma0_index(i64 N) {
    i64 r = N, n = N;
    for (i64 p = 2; p * p <= n; ++p) {
        if (n % p) continue;
        r = r / p * (p + 1);
        while (n % p == 0) n /= p;
    }
    if (n > 1) r = r / n * (n + 1);
    return r;
}

}  // namespace gz4
