#pragma once

#include "core.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

namespace gz4 {

using IntVec = std::vector<Int>;

struct IntegerLattice {
    std::vector<IntVec> basis;  // rows
};

namespace detail {

inline Int dot(const IntVec& a, const IntVec& b) {
    Int s = 0;
    for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
    return s;
}

/// Nearest integer to a/b for b > 0.
inline Int round_div(const Int& a, const Int& b) {
    Int n = 2 * a + b, d = 2 * b;
    Int q = n / d;
    if (n % d != 0 && n < 0) --q;
    return q;
}

}  // namespace detail

/// Integral LLL with delta = 99/100 (all Gram-Schmidt data kept as exact integers).
inline IntegerLattice lll_reduce(IntegerLattice L) {
    auto& b = L.basis;
    const std::size_t n = b.size();
    if (n <= 1) return L;
    for (const auto& r : b)
        if (r.size() != b[0].size()) throw DomainError("lattice rows differ in dimension");
    // 1-based indices for d and lambda as in the textbook integral version
    std::vector<Int> d(n + 1, Int(0));
    std::vector<std::vector<Int>> lam(n + 1, std::vector<Int>(n + 1, Int(0)));
    auto B = [&](std::size_t i) -> IntVec& { return b[i - 1]; };
    d[0] = 1;
    d[1] = detail::dot(B(1), B(1));
    if (d[1] == 0) throw DomainError("lattice rows are dependent");

    auto redi = [&](std::size_t k, std::size_t l) {
        if (mp::abs(2 * lam[k][l]) <= d[l]) return;
        Int q = detail::round_div(lam[k][l], d[l]);
        for (std::size_t c = 0; c < B(k).size(); ++c) B(k)[c] -= q * B(l)[c];
        lam[k][l] -= q * d[l];
        for (std::size_t i = 1; i < l; ++i) lam[k][i] -= q * lam[l][i];
    };
    std::size_t kmax = 1;
    auto swapi = [&](std::size_t k) {
        std::swap(B(k), B(k - 1));
        for (std::size_t j = 1; j + 1 < k; ++j) std::swap(lam[k][j], lam[k - 1][j]);
        Int l = lam[k][k - 1];
        Int Bn = (d[k - 2] * d[k] + l * l) / d[k - 1];
        for (std::size_t i = k + 1; i <= kmax; ++i) {
            Int t = lam[i][k];
            lam[i][k] = (d[k] * lam[i][k - 1] - l * t) / d[k - 1];
            lam[i][k - 1] = (Bn * t + l * lam[i][k]) / d[k];
        }
        d[k - 1] = Bn;
    };

    std::size_t k = 2;
    while (k <= n) {
        if (k > kmax) {
            kmax = k;
            for (std::size_t j = 1; j <= k; ++j) {
                Int u = detail::dot(B(k), B(j));
                for (std::size_t i = 1; i < j; ++i) u = (d[i] * u - lam[k][i] * lam[j][i]) / d[i - 1];
                if (j < k)
                    lam[k][j] = u;
                else
                    d[k] = u;
            }
            if (d[k] == 0) throw DomainError("lattice rows are dependent");
        }
        redi(k, k - 1);
        if (100 * d[k] * d[k - 2] < 99 * d[k - 1] * d[k - 1] - 100 * lam[k][k - 1] * lam[k][k - 1]) {
            swapi(k);
            if (k > 2) --k;
        } else {
            for (std::size_t l = k - 1; l-- > 1;) redi(k, l);
            ++k;
        }
    }
    return L;
}

namespace detail {

inline unsigned precision_of(const std::vector<Real>& xs) {
    unsigned p = working_digits();
    for (const auto& x : xs) p = std::min(p, x.precision());
    return p;
}

inline Int max_abs(const IntVec& v) {
    Int h = 0;
    for (const auto& x : v) h = std::max(h, Int(mp::abs(x)));
    return h;
}

inline Real pow10(long e) { return pow(Real(10), Real(e)); }

}  // namespace detail

using RealsAt = std::function<std::vector<Real>(unsigned digits)>;

/// Smallest-height v with |v|_inf <= max_height and |sum v_i x_i| below the noise floor.
/// The generator is called at the search precision and again at 1.5x to re-verify.
inline std::optional<IntVec> integer_relation(const RealsAt& gen, unsigned P, const Int& max_height) {
    if (P < 20) throw PrecisionTooLow("integer relation search needs at least 20 digits, got " + std::to_string(P));
    std::vector<Real> xs;
    {
        PrecisionGuard g(P);
        xs = gen(P);
    }
    const std::size_t n = xs.size();
    if (n < 2) return std::nullopt;
    const unsigned guard = 5;
    IntegerLattice L;
    {
        PrecisionGuard g(P + 10);
        Real S = detail::pow10(static_cast<long>(P - guard));
        Real xmax = 1;
        for (const auto& x : xs) xmax = std::max(xmax, Real(abs(x)));
        S /= xmax;
        for (std::size_t i = 0; i < n; ++i) {
            IntVec row(n + 1, Int(0));
            row[i] = 1;
            row[n] = round_to_int(S * xs[i]);
            L.basis.push_back(std::move(row));
        }
    }
    L = lll_reduce(std::move(L));

    auto residual_ok = [&](const IntVec& v, const std::vector<Real>& x, unsigned prec) {
        PrecisionGuard g(prec + 10);
        Real s = 0, scale = 0;
        for (std::size_t i = 0; i < n; ++i) {
            s += Real(v[i]) * x[i];
            scale += abs(Real(v[i]) * x[i]);
        }
        return abs(s) < detail::pow10(-static_cast<long>(P) + 10) * std::max(scale, Real(1));
    };

    std::optional<IntVec> best;
    for (const auto& row : L.basis) {
        IntVec v(row.begin(), row.begin() + static_cast<long>(n));
        Int h = detail::max_abs(v);
        if (h == 0 || h > max_height) continue;
        if (!residual_ok(v, xs, P)) continue;
        if (!best || h < detail::max_abs(*best)) best = v;
    }
    if (!best) return std::nullopt;
    // first nonzero entry positive
    for (const auto& x : *best) {
        if (x == 0) continue;
        if (x < 0)
            for (auto& y : *best) y = -y;
        break;
    }
    unsigned P2 = P + P / 2;
    std::vector<Real> xs2;
    {
        PrecisionGuard g(P2);
        xs2 = gen(P2);
    }
    if (!residual_ok(*best, xs2, P2)) return std::nullopt;
    return best;
}

inline std::optional<IntVec> integer_relation(const std::vector<Real>& xs, const Int& max_height) {
    unsigned P = detail::precision_of(xs);
    return integer_relation([&](unsigned) { return xs; }, P, max_height);
}

/// Integer polynomial, coefficients in increasing degree.
using IntPoly = std::vector<Int>;

inline std::string poly_str(const IntPoly& p, const std::string& var = "t") {
    std::ostringstream os;
    bool first = true;
    for (std::size_t i = p.size(); i-- > 0;) {
        if (p[i] == 0) continue;
        Int c = p[i];
        if (!first) os << (c < 0 ? " - " : " + ");
        else if (c < 0) os << "-";
        Int a = mp::abs(c);
        if (a != 1 || i == 0) os << a;
        if (i > 0) os << var;
        if (i > 1) os << "^" << i;
        first = false;
    }
    if (first) os << "0";
    return os.str();
}

template <class T>
T poly_eval(const IntPoly& p, const T& x) {
    T s = 0;
    for (std::size_t i = p.size(); i-- > 0;) s = s * x + T(p[i]);
    return s;
}

namespace detail {

inline IntPoly normalize_poly(IntPoly p) {
    while (!p.empty() && p.back() == 0) p.pop_back();
    Int g = 0;
    for (const auto& c : p) g = mp::gcd(g, c);
    if (g != 0)
        for (auto& c : p) c /= g;
    if (!p.empty() && p.back() < 0)
        for (auto& c : p) c = -c;
    return p;
}

}  // namespace detail

inline std::optional<IntPoly> algdep(const RealsAt& x_at, unsigned P, int max_degree, const Int& max_height) {
    if (P < 20) throw PrecisionTooLow("algdep needs at least 20 digits, got " + std::to_string(P));
    for (int d = 1; d <= max_degree; ++d) {
        auto powers = [&](unsigned digits) {
            Real x = x_at(digits)[0];
            std::vector<Real> v{Real(1)};
            for (int i = 1; i <= d; ++i) v.push_back(v.back() * x);
            return v;
        };
        auto rel = integer_relation(powers, P, max_height);
        if (!rel || (*rel)[d] == 0) continue;
        return detail::normalize_poly(*rel);
    }
    return std::nullopt;
}

inline std::optional<IntPoly> algdep(const Real& x, int max_degree, const Int& max_height) {
    return algdep([&](unsigned) { return std::vector<Real>{x}; }, x.precision(), max_degree, max_height);
}

struct LogRepresentation {
    Rat scale;
    IntPoly alpha_minpoly;
    Real alpha_approx;
    Real residual;  // |w - scale ln(alpha)| at the verification precision
};

enum class RecognitionStatus { recognized, inconclusive };

struct RecognitionParams {
    std::vector<Rat> scales;
    int max_degree = 4;
    Int max_height = 10000;
    unsigned precision = 0;
};

struct RecognitionReport {
    RecognitionStatus status = RecognitionStatus::inconclusive;
    std::optional<LogRepresentation> candidate;
    RecognitionParams search_parameters;
    Real confidence = 1;
    std::string reason;
};

inline std::vector<Rat> default_scales() {
    std::vector<Rat> s{Rat(1)};
    for (Rat q : {Rat(1, 2), Rat(2), Rat(1, 3), Rat(3), Rat(1, 4), Rat(1, 6), Rat(12), Rat(24)}) {
        s.push_back(q);
        s.push_back(-q);
    }
    return s;
}

namespace detail {

/// Newton refinement of a simple real root of p at the current precision.
inline Real polish_root(const IntPoly& p, Real x) {
    IntPoly dp;
    for (std::size_t i = 1; i < p.size(); ++i) dp.push_back(p[i] * static_cast<long>(i));
    Real eps = pow10(-static_cast<long>(working_digits()) + 2);
    for (int it = 0; it < 200; ++it) {
        Real f = poly_eval(p, x), fp = poly_eval(dp, x);
        if (fp == 0) break;
        Real step = f / fp;
        x -= step;
        if (abs(step) <= eps * std::max(Real(1), Real(abs(x)))) break;
    }
    return x;
}

/// Exact k-th root of a positive integer, if any.
inline std::optional<Int> exact_root(const Int& n, unsigned long k) {
    Int r;
    if (mpz_root(r.backend().data(), n.backend().data(), k) == 0) return std::nullopt;
    return r;
}

/// Rewrites a rational alpha = beta^k (k maximal) as scale k r and alpha beta.
inline void reduce_rational_power(LogRepresentation& lr) {
    if (lr.alpha_minpoly.size() != 2) return;
    Int num = -lr.alpha_minpoly[0], den = lr.alpha_minpoly[1];
    if (num <= 0 || den <= 0) return;
    unsigned long bits = static_cast<unsigned long>(mp::msb(std::max(num, den))) + 1;
    for (unsigned long k = bits; k >= 2; --k) {
        auto a = exact_root(num, k), b = exact_root(den, k);
        if (!a || !b) continue;
        lr.scale *= Rat(static_cast<long>(k));
        lr.alpha_minpoly = {-*a, *b};
        lr.alpha_approx = to_real(Rat(*a, *b));
        return;
    }
}

}  // namespace detail

/// Searches w = r ln(alpha) over the scale list; w is given by a generator so the
/// candidate can be checked at 1.5x the search precision.
inline RecognitionReport recognize_log_value(const RealsAt& w_at, unsigned P, const Real& error,
                                             RecognitionParams params) {
    if (params.scales.empty()) params.scales = default_scales();
    params.precision = P;
    RecognitionReport rep;
    rep.search_parameters = params;
    if (P < 25) throw PrecisionTooLow("recognition needs at least 25 digits, got " + std::to_string(P));
    Real w;
    {
        PrecisionGuard g(P);
        w = w_at(P)[0];
    }
    if (!(abs(w) > 10 * error)) {
        rep.reason = "value is not separated from zero by its error bound";
        return rep;
    }
    for (const Rat& r : params.scales) {
        if (r == 0) continue;
        auto alpha_at = [&](unsigned digits) {
            PrecisionGuard g(digits);
            Real v = w_at(digits)[0];
            return std::vector<Real>{Real(exp(v / to_real(r)))};
        };
        auto p = algdep(alpha_at, P, params.max_degree, params.max_height);
        if (!p) continue;
        Real alpha0 = alpha_at(P)[0];
        int deg = static_cast<int>(p->size()) - 1;
        Real rel_res, scale;
        {
            PrecisionGuard g(P + 10);
            Real s = 0;
            scale = 0;
            Real xp = 1;
            for (const auto& c : *p) {
                s += Real(c) * xp;
                scale += abs(Real(c) * xp);
                xp *= alpha0;
            }
            rel_res = abs(s) / scale;
        }
        // verification at 1.5x precision against the exactly represented root
        unsigned P2 = P + P / 2;
        LogRepresentation lr;
        lr.scale = r;
        lr.alpha_minpoly = *p;
        {
            PrecisionGuard g(P2);
            Real a = detail::polish_root(*p, Real(alpha_at(P2)[0]));
            if (!(a > 0)) continue;
            Real w2 = w_at(P2)[0];
            lr.alpha_approx = a;
            lr.residual = abs(w2 - to_real(r) * log(a));
            if (lr.residual > detail::pow10(-static_cast<long>(P) + 10) * std::max(Real(1), Real(abs(w2)))) continue;
        }
        Real floor_ = pow(Real(params.max_height), -Real(deg + 1));
        Real conf = rel_res / floor_;
        if (!(conf < Real("1e-5"))) continue;
        rep.status = RecognitionStatus::recognized;
        detail::reduce_rational_power(lr);
        rep.candidate = lr;
        rep.confidence = conf;
        rep.reason = "relation verified at " + std::to_string(P2) + " digits";
        return rep;
    }
    rep.reason = "no candidate in the search box";
    return rep;
}

inline RecognitionReport recognize_log_value(const Real& w, const Real& error, RecognitionParams params = {}) {
    unsigned P = w.precision();
    if (error > 0) {
        PrecisionGuard g(P);
        Real rel = error / std::max(Real(abs(w)), Real("1e-300"));
        long eff = static_cast<long>(floor(-log10(rel)).convert_to<double>());
        if (eff < static_cast<long>(P)) P = static_cast<unsigned>(std::max(0L, eff));
    }
    if (P < 25) {
        throw PrecisionTooLow("recognition needs at least 25 significant digits, value carries " +
                              std::to_string(P));
    }
    return recognize_log_value([&](unsigned) { return std::vector<Real>{w}; }, P, error, params);
}

inline std::string status_str(RecognitionStatus s) {
    return s == RecognitionStatus::recognized ? "recognized" : "inconclusive";
}

}  // namespace gz4
