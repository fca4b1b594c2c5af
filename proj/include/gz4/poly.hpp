#pragma once

#include "core.hpp"

#include <algorithm>
#include <sstream>
#include <string>
#include <vector>

namespace gz4 {

/// Dense univariate polynomials and truncated power series, coefficients in increasing degree.
using ZPoly = std::vector<Int>;
using QPoly = std::vector<Rat>;
using Series = std::vector<Rat>;

template <class P>
P trimmed(P p) {
    while (!p.empty() && p.back() == 0) p.pop_back();
    return p;
}

template <class P>
int degree(const P& p) {
    for (std::size_t i = p.size(); i-- > 0;)
        if (p[i] != 0) return static_cast<int>(i);
    return -1;
}

template <class P>
P poly_add(const P& a, const P& b) {
    P r(std::max(a.size(), b.size()));
    for (std::size_t i = 0; i < a.size(); ++i) r[i] += a[i];
    for (std::size_t i = 0; i < b.size(); ++i) r[i] += b[i];
    return trimmed(r);
}

template <class P, class S>
P poly_scale(const P& a, const S& s) {
    P r(a.size());
    for (std::size_t i = 0; i < a.size(); ++i) r[i] = a[i] * s;
    return trimmed(r);
}

template <class P>
P poly_sub(const P& a, const P& b) {
    P nb = b;
    for (auto& c : nb) c = -c;
    return poly_add(a, nb);
}

template <class P>
P poly_mul(const P& a, const P& b) {
    if (a.empty() || b.empty()) return {};
    P r(a.size() + b.size() - 1);
    for (std::size_t i = 0; i < a.size(); ++i) {
        if (a[i] == 0) continue;
        for (std::size_t j = 0; j < b.size(); ++j) r[i + j] += a[i] * b[j];
    }
    return trimmed(r);
}

template <class P>
P poly_derivative(const P& a) {
    P r;
    for (std::size_t i = 1; i < a.size(); ++i) r.push_back(a[i] * static_cast<long>(i));
    return trimmed(r);
}

/// p(x + c).
template <class P, class S>
P poly_shift(const P& p, const S& c) {
    P r;
    for (std::size_t k = p.size(); k-- > 0;) {
        // r = r * (x + c) + p_k
        P nr(r.size() + 1);
        for (std::size_t i = 0; i < r.size(); ++i) {
            nr[i + 1] += r[i];
            nr[i] += r[i] * c;
        }
        nr[0] += p[k];
        r = trimmed(nr);
    }
    return r;
}

template <class P, class T>
T poly_value(const P& p, const T& x) {
    T s = 0;
    for (std::size_t i = p.size(); i-- > 0;) s = s * x + T(p[i]);
    return s;
}

inline Int content(const ZPoly& p) {
    Int g = 0;
    for (const auto& c : p) g = mp::gcd(g, c);
    return g;
}

/// Divides out the content and makes the leading coefficient positive.
inline ZPoly primitive(ZPoly p) {
    p = trimmed(p);
    Int g = content(p);
    if (g == 0) return p;
    if (p.back() < 0) g = -g;
    for (auto& c : p) c /= g;
    return p;
}

inline QPoly to_q(const ZPoly& p) {
    QPoly r;
    for (const auto& c : p) r.push_back(Rat(c));
    return r;
}

/// Integer multiple of p with coprime coefficients and positive leading term.
inline ZPoly to_z(const QPoly& p) {
    Int l = 1;
    for (const auto& c : p) l = mp::lcm(l, Int(mp::denominator(c)));
    ZPoly r;
    for (const auto& c : p) r.push_back(mp::numerator(c) * (l / mp::denominator(c)));
    return primitive(r);
}

inline void poly_divmod(const QPoly& a, const QPoly& b, QPoly& q, QPoly& r) {
    QPoly bb = trimmed(b);
    if (bb.empty()) throw DomainError("polynomial division by zero");
    r = trimmed(a);
    int db = degree(bb);
    q.assign(r.size() > bb.size() ? r.size() - bb.size() + 1 : 1, Rat(0));
    while (degree(r) >= db) {
        int dr = degree(r);
        Rat f = r[dr] / bb[db];
        q[dr - db] += f;
        for (int i = 0; i <= db; ++i) r[dr - db + i] -= f * bb[i];
        r = trimmed(r);
    }
    q = trimmed(q);
}

inline QPoly poly_monic(QPoly p) {
    p = trimmed(p);
    if (p.empty()) return p;
    Rat l = p.back();
    for (auto& c : p) c /= l;
    return p;
}

inline QPoly poly_gcd(QPoly a, QPoly b) {
    a = trimmed(a);
    b = trimmed(b);
    while (!b.empty()) {
        QPoly q, r;
        poly_divmod(a, b, q, r);
        a = b;
        b = r;
    }
    return poly_monic(a);
}

template <class P>
std::string poly_to_string(const P& p, const std::string& var) {
    std::ostringstream os;
    bool first = true;
    for (std::size_t i = p.size(); i-- > 0;) {
        if (p[i] == 0) continue;
        auto c = p[i];
        bool neg = c < 0;
        if (neg) c = -c;
        if (!first) os << (neg ? " - " : " + ");
        else if (neg) os << "-";
        if (c != 1 || i == 0) {
            os << c;
            if (i > 0) os << "*";
        }
        if (i > 0) os << var;
        if (i > 1) os << "^" << i;
        first = false;
    }
    if (first) os << "0";
    return os.str();
}

// ---- truncated power series (length = number of coefficients kept) ----

inline Series series_trunc(Series s, std::size_t n) {
    s.resize(n, Rat(0));
    return s;
}

inline Series series_mul(const Series& a, const Series& b, std::size_t n) {
    Series r(n, Rat(0));
    for (std::size_t i = 0; i < std::min(n, a.size()); ++i) {
        if (a[i] == 0) continue;
        for (std::size_t j = 0; j < b.size() && i + j < n; ++j) r[i + j] += a[i] * b[j];
    }
    return r;
}

inline Series series_inv(const Series& a, std::size_t n) {
    if (a.empty() || a[0] == 0) throw DomainError("series not invertible");
    Series r(n, Rat(0));
    r[0] = 1 / a[0];
    for (std::size_t k = 1; k < n; ++k) {
        Rat s = 0;
        for (std::size_t j = 1; j <= k && j < a.size(); ++j) s += a[j] * r[k - j];
        r[k] = -s / a[0];
    }
    return r;
}

inline Series series_div(const Series& a, const Series& b, std::size_t n) {
    return series_mul(a, series_inv(b, n), n);
}

/// exp of a series with zero constant term.
inline Series series_exp(const Series& a, std::size_t n) {
    if (!a.empty() && a[0] != 0) throw DomainError("series_exp needs zero constant term");
    Series r(n, Rat(0));
    r[0] = 1;
    // r' = a' r
    for (std::size_t k = 1; k < n; ++k) {
        Rat s = 0;
        for (std::size_t j = 1; j <= k && j < a.size(); ++j) s += Rat(static_cast<long>(j)) * a[j] * r[k - j];
        r[k] = s / Rat(static_cast<long>(k));
    }
    return r;
}

/// Square root of a series with constant term 1.
inline Series series_sqrt(const Series& a, std::size_t n) {
    if (a.empty() || a[0] != 1) throw DomainError("series_sqrt needs constant term 1");
    Series r(n, Rat(0));
    r[0] = 1;
    for (std::size_t k = 1; k < n; ++k) {
        Rat s = k < a.size() ? a[k] : Rat(0);
        for (std::size_t j = 1; j < k; ++j) s -= r[j] * r[k - j];
        r[k] = s / 2;
    }
    return r;
}

/// Compositional inverse of q(t) = t + O(t^2), by Lagrange inversion.
inline Series series_reversion(const Series& q, std::size_t n) {
    if (q.size() < 2 || q[0] != 0 || q[1] != 1) throw DomainError("reversion needs q = t + O(t^2)");
    // w = t / q(t)
    Series qt(q.begin() + 1, q.end());
    Series w = series_inv(series_trunc(qt, n), n);
    Series r(n, Rat(0));
    Series wp(n, Rat(0));
    wp[0] = 1;
    for (std::size_t k = 1; k < n; ++k) {
        wp = series_mul(wp, w, n);
        r[k] = wp[k - 1] / Rat(static_cast<long>(k));
    }
    return r;
}

/// a(b(t)) with b(0) = 0.
inline Series series_compose(const Series& a, const Series& b, std::size_t n) {
    if (!b.empty() && b[0] != 0) throw DomainError("composition needs b(0) = 0");
    Series r(n, Rat(0));
    for (std::size_t k = a.size(); k-- > 0;) {
        r = series_mul(r, b, n);
        r[0] += a[k];
    }
    return r;
}

inline Series series_theta(const Series& a) {
    Series r(a.size());
    for (std::size_t i = 0; i < a.size(); ++i) r[i] = a[i] * Rat(static_cast<long>(i));
    return r;
}

}  // namespace gz4
