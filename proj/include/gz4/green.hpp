#pragma once

#include "modgroup.hpp"

#include <boost/math/special_functions/bernoulli.hpp>
#include <boost/math/special_functions/zeta.hpp>

#include <cmath>
#include <functional>
#include <limits>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace gz4 {

struct EvalResult {
    Real value = 0;
    Real error_bound = 0;
    Real cutoff = 0;
    long long term_count = 0;
    std::string method;
};

inline EvalResult operator+(const EvalResult& a, const EvalResult& b) {
    EvalResult r;
    r.value = a.value + b.value;
    r.error_bound = a.error_bound + b.error_bound;
    r.cutoff = a.cutoff > b.cutoff ? a.cutoff : b.cutoff;
    r.term_count = a.term_count + b.term_count;
    r.method = a.method.empty() ? b.method : a.method;
    return r;
}

inline EvalResult scaled(const EvalResult& a, const Real& s) {
    EvalResult r = a;
    r.value = a.value * s;
    r.error_bound = a.error_bound * abs(s);
    return r;
}

/// Q_1 as a function of w = t - 1 > 0; accurate near w = 0.
inline Real legendre_q1_shifted(const Real& w) {
    if (!(w > 0)) throw DomainError("Q1 needs t > 1");
    Real t = 1 + w;
    if (t > 2) {
        // t atanh(1/t) - 1 = sum_{j>=1} t^{-2j}/(2j+1)
        Real x = 1 / (t * t), p = x, s = 0;
        Real eps = pow(Real(10), -Real(working_digits() + 5));
        for (int j = 1; j < 100000; ++j) {
            Real term = p / (2 * j + 1);
            s += term;
            if (term < eps * s) break;
            p *= x;
        }
        return s;
    }
    return t / 2 * log((2 + w) / w) - 1;
}

inline Real legendre_q1(const Real& t) {
    if (!(t > 1)) throw DomainError("Q1 needs t > 1");
    return legendre_q1_shifted(t - 1);
}

namespace detail {

/// Hurwitz zeta for integer s >= 2 and q > 0 by Euler-Maclaurin.
inline Real hurwitz_zeta(int s, const Real& q) {
    const int digits = static_cast<int>(working_digits());
    const int K = 8 + digits / 2;
    Real sum = 0;
    for (int k = 0; k < K; ++k) sum += pow(q + k, -s);
    Real Q = q + K;
    sum += pow(Q, 1 - s) / (s - 1) + pow(Q, -s) / 2;
    Real eps = pow(Real(10), -Real(digits + 5)) * abs(sum);
    Real rising = s;  // (s)_{2i-1}
    Real fact = 2;    // (2i)!
    Real qp = pow(Q, -s - 1);
    Real Q2 = Q * Q;
    Real prev = std::numeric_limits<double>::infinity();
    for (int i = 1; i < 400; ++i) {
        Real term = boost::math::bernoulli_b2n<Real>(i) / fact * rising * qp;
        if (abs(term) > prev) break;  // asymptotic series started diverging
        sum += term;
        prev = abs(term);
        if (abs(term) < eps) break;
        rising *= Real(s + 2 * i - 1) * (s + 2 * i);
        fact *= Real(2 * i + 1) * (2 * i + 2);
        qp /= Q2;
    }
    return sum;
}

inline Real reduce_unit(const Real& x) {
    return x - floor(x + Real(1) / 2);
}

/// Exact factor sum_{N|c} c_c(m)/c^4 * zeta(4) as a rational (m >= 1).
inline Rat ramanujan_factor(i64 N, i64 m) {
    std::vector<i64> primes;
    i64 t = N * m;
    for (i64 p = 2; p * p <= t; ++p) {
        if (t % p) continue;
        primes.push_back(p);
        while (t % p == 0) t /= p;
    }
    if (t > 1) primes.push_back(t);
    Rat prod = 1;
    for (i64 p : primes) {
        int e = 0;
        for (i64 n = N; n % p == 0; n /= p) ++e;
        int v = 0;
        for (i64 n = m; n % p == 0; n /= p) ++v;
        Rat L = 0;
        Int pj = 1;
        for (int j = 0; j < e; ++j) pj *= p;
        for (int j = e; j <= v + 1; ++j) {
            Int ram;  // c_{p^j}(m)
            if (j == 0) {
                ram = 1;
            } else if (j <= v) {
                ram = pj - pj / p;
            } else {
                ram = -(pj / p);
            }
            L += Rat(ram) / Rat(pj * pj * pj * pj);
            pj *= p;
        }
        Int p4 = Int(p) * p * p * p;
        prod *= L / (Rat(p4 - 1) / Rat(p4));
    }
    return prod;
}

/// sum_{N|c} phi(c)/c^4 divided by zeta(3)/zeta(4), as a rational.
inline Rat totient_factor(i64 N) {
    Rat prod = 1;
    i64 t = N;
    for (i64 p = 2; p <= t; ++p) {
        if (t % p) continue;
        int e = 0;
        while (t % p == 0) {
            t /= p;
            ++e;
        }
        Int pe3 = 1;
        for (int j = 0; j < e; ++j) pe3 *= Int(p) * p * p;
        Int p4 = Int(p) * p * p * p;
        prod *= Rat(p - 1, p) / Rat(pe3) / (Rat(p4 - 1) / Rat(p4));
    }
    return prod;
}

inline std::vector<ProjectiveMatrix> standard_normalizers(i64 N) {
    std::vector<ProjectiveMatrix> out{ProjectiveMatrix()};
    for (i64 Q = 2; Q <= N; ++Q)
        if (N % Q == 0 && std::gcd(Q, N / Q) == 1) out.push_back(atkin_lehner_standard(Q, N));
    return out;
}

inline i64 gcd3(i64 a, i64 b, i64 c) { return std::gcd(std::gcd(a, b), c); }

/// sum over j > C/N of (N j)^{-p}
inline long double power_tail(long double C, i64 N, long double p) {
    long double j0 = std::floor(C / N) + 1;
    return std::pow(static_cast<long double>(N), -p) * (std::pow(j0, -p) + std::pow(j0, 1 - p) / (p - 1));
}

}  // namespace detail

/// Literal lattice sum -2 sum Q1(u(tau, gamma sigma)) over u <= U with the mean-density tail correction.
inline EvalResult green_pair_direct(const GroupSpec& G, const PointH& tau, const PointH& sigma, const Real& U) {
    if (!G.has_presentation) throw PresentationUnavailable("group presentation unavailable: " + G.label);
    if (!(U > 1)) throw DomainError("cutoff U must exceed 1");
    PointH t = tau, s = sigma;
    if (G.conjugated()) {
        RatMatrix Ci = G.conjugator.inverse();
        t = moebius_apply(Ci, tau);
        s = moebius_apply(Ci, sigma);
    }
    auto gammas = enumerate_near_standard(G.level, t, s, U);
    std::sort(gammas.begin(), gammas.end(), detail::enum_less);
    Real pole_eps = pow(Real(10), -Real(working_digits()) / 2);
    Real sum = 0;
    for (const auto& g : gammas) {
        PointH gs = moebius_apply(g, s);
        Real dx = t.x - gs.x, dy = t.y - gs.y;
        Real w = (dx * dx + dy * dy) / (2 * t.y * gs.y);
        if (w < pole_eps) throw PoleHit("evaluation point lies on the pole orbit");
        sum += legendre_q1_shifted(w);
    }
    // sum_{u > U} Q1 ~ (6/index) int_U^inf du/(3u^2)
    Real idx = Real(gamma0_index(G.level));
    Real tail = 2 / (idx * U);
    EvalResult r;
    r.value = -2 * (sum + tail);
    r.error_bound = 2 * tail;
    r.cutoff = U;
    r.term_count = static_cast<long long>(gammas.size());
    r.method = "direct";
    return r;
}

struct FastOptions {
    std::optional<long long> cutoff;  // explicit Kloosterman modulus cutoff C
    long long max_cutoff = 40000;
    double min_gap = 0.02;  // required sqrt(y1 y2) - 1/N
};

namespace detail {

struct FastFrame {
    PointH t, s;
    Real gap;
};

inline FastFrame best_frame(i64 N, const PointH& t0, const PointH& s0) {
    FastFrame best{t0, s0, Real(-1)};
    Real score = -1;
    for (const auto& w : standard_normalizers(N)) {
        PointH a = maximize_height(moebius_apply(w, t0), N).first;
        PointH b = maximize_height(moebius_apply(w, s0), N).first;
        Real sc = a.y * b.y;
        if (sc > score) {
            score = sc;
            best = {a, b, sqrt(sc) - Real(1) / N};
        }
    }
    return best;
}

/// Identity coset sum_n Q1(u(tau, sigma + n)).
inline std::pair<Real, Real> identity_coset(const PointH& t, const PointH& s, long long& count) {
    Real delta = reduce_unit(t.x - s.x);
    Real a2 = t.y * t.y + s.y * s.y;
    Real b = 2 * t.y * s.y;
    Real dy2 = (t.y - s.y) * (t.y - s.y);
    Real pole_eps = pow(Real(10), -Real(working_digits()) / 2);
    i64 M = static_cast<i64>(ceil(2 * sqrt(a2) + 2).convert_to<long double>());
    Real sum = 0;
    for (i64 n = -M; n <= M; ++n) {
        Real x = n + delta;
        Real w = (x * x + dy2) / b;
        if (w < pole_eps) throw PoleHit("evaluation point lies on the pole orbit");
        sum += legendre_q1_shifted(w);
        ++count;
    }
    // tail: Q1 = sum_j e_j (n+delta)^{-2j}
    Real qp = Real(M + 1) + delta, qm = Real(M + 1) - delta;
    Real eps = pow(Real(10), -Real(working_digits() + 3));
    Real tail = 0, last = 0;
    const int jmax = 4 * static_cast<int>(working_digits()) + 40;
    std::vector<Real> bp(jmax / 2 + 2);
    bp[0] = 1;
    for (std::size_t p = 1; p < bp.size(); ++p) bp[p] = bp[p - 1] * b * b;
    for (int j = 2; j <= jmax; ++j) {
        Real ej = 0;
        for (int p = 1; 2 * p <= j; ++p) {
            int i = j - 2 * p;
            // binom(-2p, i) = (-1)^i binom(2p+i-1, i)
            Real bin = 1;
            for (int r = 1; r <= i; ++r) bin = bin * (2 * p + i - r) / r;
            if (i % 2) bin = -bin;
            ej += bp[p] / (2 * p + 1) * bin * pow(a2, i);
        }
        if (ej == 0) continue;
        Real term = ej * (detail::hurwitz_zeta(2 * j, qp) + detail::hurwitz_zeta(2 * j, qm));
        tail += term;
        last = abs(term);
        if (last < eps * abs(sum)) break;
    }
    return {sum + tail, 4 * last + eps * abs(sum)};
}

}  // namespace detail

/// Kloosterman-Bessel double Fourier evaluation of the Gamma_0(N) kernel sum (standard frame).
inline EvalResult green_pair_fast_standard(i64 N, const PointH& tau, const PointH& sigma, const Real& target,
                                           const FastOptions& opt = {}) {
    using ld = long double;
    const ld PI = 3.141592653589793238462643383279502884L;
    // pole check on the full orbit
    {
        auto near = enumerate_near_standard(N, tau, sigma, Real(1) + pow(Real(10), -Real(working_digits()) / 2));
        if (!near.empty()) throw PoleHit("evaluation point lies on the pole orbit");
    }
    detail::FastFrame fr = detail::best_frame(N, tau, sigma);
    if (fr.gap < opt.min_gap)
        throw DomainError("points too low for the Fourier expansion (sqrt(y1 y2) - 1/N = " +
                          fr.gap.str(6) + ")");
    const PointH& t = fr.t;
    const PointH& s = fr.s;
    const Real pi = real_pi();
    long long count = 0;

    auto [sid, sid_err] = detail::identity_coset(t, s, count);

    // Eisenstein and Ramanujan parts
    Real inv_zeta4 = 90 / pow(pi, 4);
    Real zeta3 = boost::math::zeta(Real(3));
    Real T = pi * pi / 3 / (t.y * s.y) * zeta3 * inv_zeta4 * to_real(detail::totient_factor(N));
    Real eps_e = target * Real("1e-4");
    Real eis_err = 0;
    for (i64 m = 1;; ++m) {
        Real R = to_real(detail::ramanujan_factor(N, m)) * inv_zeta4;
        Real a = pi * pi / 3 * (1 + 2 * pi * m * s.y) * exp(-2 * pi * m * s.y) / (t.y * s.y) * R * 2 *
                 cos(2 * pi * m * s.x);
        Real b = 2 * pow(pi, 3) / 3 * m * exp(-2 * pi * m * t.y) * (1 + 1 / (2 * pi * m * t.y)) * R / s.y * 2 *
                 cos(2 * pi * m * t.x);
        T += a + b;
        count += 2;
        // |R(m)| <= m zeta(4)/N^4 / zeta(4); bound next terms geometrically
        Real ymin = t.y < s.y ? t.y : s.y;
        Real nxt = 8 * pow(pi, 3) * (m + 1) * (m + 1) * (1 + 2 * pi * (m + 1) * ymin) / (ymin * ymin) *
                   exp(-2 * pi * (m + 1) * ymin);
        Real ratio = exp(-2 * pi * ymin);
        Real bound = nxt / (1 - ratio) * (m + 2) * (m + 2) / ((m + 1) * (m + 1));
        if (bound < eps_e || m > 100000) {
            eis_err = bound;
            break;
        }
    }

    // Kloosterman part in long double
    const ld y1 = t.y.convert_to<ld>(), y2 = s.y.convert_to<ld>();
    const ld x1 = t.x.convert_to<ld>(), x2 = s.x.convert_to<ld>();
    const ld tgt = std::max<ld>(target.convert_to<ld>(), 1e-30L);
    auto Pk = [&](ld k) { return PI * std::exp(-2 * PI * k * y1) * (1 + 1 / (2 * PI * k * y1)) / std::sqrt(k); };
    auto Qm = [&](ld m) { return std::exp(-2 * PI * m * y2) * (1 + 1 / (2 * PI * m * y2)) / (2 * std::sqrt(m)); };
    // trivial bound on sum_c (2/c)|B(x_c)| |S| over all c
    auto full_weight = [&](ld km, bool ibessel) {
        ld a = 4 * PI * std::sqrt(km);
        ld xN = a / N;
        if (!ibessel) {
            // |J_3(x)| <= (x/2)^3/6, |S| <= c: sum_c 2 (x_c/2)^3/6
            return 2.0L / 6.0L * std::pow(a / 2, 3) * detail::power_tail(N - 1, N, 3);
        }
        ld f = 2.0L / 6.0L * std::pow(xN / 2, 3) * std::exp(xN);
        ld integral = std::pow(a / 2, 3) * 2.0L / 6.0L / (a * a) * ((xN - 1) * std::exp(xN) + 1) / N;
        return f + integral;
    };
    struct Pair {
        int k, m;
        ld pre;
    };
    std::vector<Pair> pairs;
    ld out_err = 0;
    const ld cut = tgt * 1e-3L;
    for (int k = 1;; ++k) {
        ld rowmax = 0;
        for (int sgn : {1, -1}) {
            int dead = 0;
            for (int am = 1; am < 1000000; ++am) {
                ld pre = Pk(k) * Qm(am);
                ld w = pre * full_weight(static_cast<ld>(k) * am, sgn < 0) * 2;
                rowmax = std::max(rowmax, w);
                if (w > cut) {
                    pairs.push_back({k, sgn * am, pre});
                    dead = 0;
                } else {
                    out_err += w;
                    if (++dead > 3 && am > 2) {
                        // remaining terms decay geometrically once past the peak
                        out_err += w * 4;
                        break;
                    }
                }
            }
        }
        if (rowmax < cut * 1e-3L && k > 2) {
            out_err += rowmax * 8;
            break;
        }
        if (k > 100000) break;
    }

    // c-tail bound for in-box pairs as a function of C (Weil bound, tau(c) <= 4 c^{1/3})
    auto tail_bound = [&](ld C) {
        ld tot = 0;
        for (const auto& p : pairs) {
            ld km = std::abs(static_cast<ld>(p.k) * p.m);
            ld xC = 4 * PI * std::sqrt(km) / C;
            ld g = static_cast<ld>(std::gcd(p.k, std::abs(p.m)));
            ld growth = p.m < 0 ? std::exp(xC * xC / 16) : 1;
            tot += p.pre * 2 * 2 * std::pow(2 * PI * std::sqrt(km), 3) / 6 * growth * 4 * std::sqrt(g) *
                   detail::power_tail(C, N, 19.0L / 6.0L);
        }
        return tot;
    };
    long long C;
    if (opt.cutoff) {
        C = std::max<long long>(*opt.cutoff, N);
    } else {
        C = 4 * N;
        while (tail_bound(static_cast<ld>(C)) > tgt / 4 && C < opt.max_cutoff) C *= 2;
        long long lo = C / 2, hi = C;
        while (hi - lo > std::max<long long>(N, hi / 64)) {
            long long mid = (lo + hi) / 2;
            if (tail_bound(static_cast<ld>(mid)) > tgt / 4) lo = mid; else hi = mid;
        }
        C = hi;
    }
    C = (C / N) * N;
    if (C < N) C = N;
    ld c_err = tail_bound(static_cast<ld>(C));

    const std::size_t P = pairs.size();
    std::vector<ld> acc(P, 0.0L), absacc(P, 0.0L);
    std::vector<ld> costab;
    std::vector<i64> ds, dinv;
    for (i64 c = N; c <= C; c += N) {
        costab.resize(c);
        for (i64 r = 0; r < c; ++r) costab[r] = std::cos(2 * PI * static_cast<ld>(r) / c);
        ds.clear();
        dinv.clear();
        for (i64 d = 1; d <= c; ++d) {
            if (std::gcd(c, d) != 1) continue;
            i64 x, y;
            ext_gcd(d, c, x, y);
            ds.push_back(d % c);
            dinv.push_back(mod_pos(x, c));
        }
        for (std::size_t q = 0; q < P; ++q) {
            const i64 k = pairs[q].k, m = pairs[q].m;
            ld S = 0;
            for (std::size_t i = 0; i < ds.size(); ++i) {
                i64 r = (k * dinv[i] + mod_pos(m, c) * ds[i]) % c;
                S += costab[r];
            }
            ld x = 4 * PI * std::sqrt(std::abs(static_cast<ld>(k) * m)) / c;
            ld B = m > 0 ? std::cyl_bessel_j(3.0L, x) : std::cyl_bessel_i(3.0L, x);
            ld term = 2.0L / c * B * S;
            acc[q] += term;
            absacc[q] += std::abs(term);
        }
        count += static_cast<long long>(ds.size() * P);
    }
    ld kl = 0, kl_abs = 0;
    for (std::size_t q = 0; q < P; ++q) {
        const ld phase = 2 * std::cos(2 * PI * (pairs[q].m * x2 - pairs[q].k * x1));
        kl += pairs[q].pre * acc[q] * phase;
        kl_abs += pairs[q].pre * absacc[q] * 2;
    }
    ld round_err = kl_abs * 64 * std::numeric_limits<ld>::epsilon();

    Real total = sid + T + Real(kl);
    Real err = sid_err + eis_err + Real(out_err + c_err + round_err) +
               pow(Real(10), -Real(working_digits()) + 3) * (abs(sid) + abs(T) + 1);
    EvalResult r;
    r.value = -2 * total;
    r.error_bound = 2 * err;
    r.cutoff = Real(C);
    r.term_count = count;
    r.method = "fourier";
    return r;
}

enum class GreenMethod { automatic, fourier, direct };

struct GreenOptions {
    GreenMethod method = GreenMethod::automatic;
    std::optional<long long> cutoff;  // C for the Fourier method
    std::optional<Real> direct_cutoff;  // U for the direct method
    double min_gap = 0.02;
    long long max_cutoff = 40000;
};

inline Real direct_cutoff_for(i64 N, const Real& target) {
    Real U = 4 / (Real(gamma0_index(N)) * target);
    if (U > Real(1e6)) U = Real(1e6);
    if (U < 2) U = 2;
    return U;
}

/// G(tau, sigma) = -2 sum_{gamma in Gamma_0} Q1(u(tau, gamma sigma)).
inline EvalResult green_pair(const GroupSpec& G, const PointH& tau, const PointH& sigma, const Real& target,
                             const GreenOptions& opt = {}) {
    if (!G.has_presentation) throw PresentationUnavailable("group presentation unavailable: " + G.label);
    if (opt.method == GreenMethod::direct) {
        Real U = opt.direct_cutoff ? *opt.direct_cutoff : direct_cutoff_for(G.level, target);
        return green_pair_direct(G, tau, sigma, U);
    }
    PointH t = tau, s = sigma;
    if (G.conjugated()) {
        RatMatrix Ci = G.conjugator.inverse();
        t = moebius_apply(Ci, tau);
        s = moebius_apply(Ci, sigma);
    }
    FastOptions fo;
    fo.cutoff = opt.cutoff;
    fo.min_gap = opt.min_gap;
    fo.max_cutoff = opt.max_cutoff;
    try {
        return green_pair_fast_standard(G.level, t, s, target, fo);
    } catch (const DomainError&) {
        if (opt.method == GreenMethod::fourier) throw;
        Real U = opt.direct_cutoff ? *opt.direct_cutoff : direct_cutoff_for(G.level, target);
        return green_pair_direct(G, tau, sigma, U);
    }
}

struct GreenSpec {
    GroupSpec group;
    CMPoint pole;
    int k = 2;
};

inline EvalResult green_basic(const GreenSpec& spec, const PointH& tau, const Real& target,
                              const GreenOptions& opt = {}) {
    if (spec.k != 2) throw DomainError("only weight 4 (k = 2) is implemented");
    return green_pair(spec.group, tau, spec.pole.tau(), target, opt);
}

/// Hecke representatives carried to the group's frame.
inline std::vector<ProjectiveMatrix> hecke_reps_for(const GroupSpec& G, i64 m) {
    auto reps = hecke_cosets(m, G.level);
    if (G.conjugated())
        for (auto& r : reps) r = to_projective(G.conjugator * RatMatrix(r) * G.conjugator.inverse());
    return reps;
}

inline EvalResult hecke_translate(const GroupSpec& G, i64 m, const GreenSpec& spec, const PointH& tau,
                                  const Real& target, const GreenOptions& opt = {}) {
    auto reps = hecke_reps_for(G, m);
    EvalResult r;
    r.method = "hecke";
    Real each = target / Real(reps.size());
    PointH pole = spec.pole.tau();
    for (const auto& g : reps) r = r + green_pair(G, moebius_apply(g, tau), pole, each, opt);
    return r;
}

struct HeckeRelation {
    std::vector<std::pair<i64, Rat>> terms;
    bool verified = false;  // annihilation of cusp forms is not checked here
};

inline EvalResult green_relation(const GroupSpec& G, const HeckeRelation& rel, const CMPoint& pole,
                                 const PointH& tau, const Real& target, const GreenOptions& opt = {}) {
    EvalResult r;
    r.method = "relation";
    if (rel.terms.empty()) return r;
    std::set<i64> seen;
    for (const auto& [m, am] : rel.terms) {
        if (!seen.insert(m).second) throw DomainError("relation repeats m = " + std::to_string(m));
        if (std::gcd(m, G.level) != 1) throw NotCoprime("relation term with gcd(m, N) != 1");
    }
    GreenSpec spec{G, pole, 2};
    for (const auto& [m, am] : rel.terms) {
        Real w = Real(m) * to_real(am);
        Real tgt = target / (Real(rel.terms.size()) * (abs(w) + 1));
        r = r + scaled(hecke_translate(G, m, spec, tau, tgt, opt), w);
    }
    return r;
}

/// Gamma_0-orbit key of a CM form in the group's frame.
inline CMPoint orbit_key(const GroupSpec& G, const CMPoint& f) {
    CMPoint g = f;
    if (G.conjugated()) g = transform_form(to_projective(G.conjugator.inverse()), f);
    return canonical_form(g, G.level);
}

struct GroupElement {
    ProjectiveMatrix g;
    int chi;
};

/// Elements of the quotient generated by the Fricke-type involutions, with the character.
inline std::vector<GroupElement> fricke_quotient(const GroupSpec& G) {
    std::vector<GroupElement> els{{ProjectiveMatrix(), 1}};
    for (const auto& w : G.atkin_lehner) {
        std::size_t n = els.size();
        for (std::size_t i = 0; i < n; ++i) els.push_back({w * els[i].g, -els[i].chi});
    }
    return els;
}

inline EvalResult green_hat(const GroupSpec& G, const CMPoint& pole, const PointH& tau, const Real& target,
                            const GreenOptions& opt = {}) {
    if (!G.has_presentation) throw PresentationUnavailable("group presentation unavailable: " + G.label);
    auto els = fricke_quotient(G);
    CMPoint key = orbit_key(G, pole);
    for (const auto& e : els) {
        if (e.chi < 0 && orbit_key(G, transform_form(e.g, pole)) == key)
            throw DegeneratePole("pole " + pole.str() + " is mapped into its own orbit by " + e.g.str() +
                                 "; the antisymmetrized function vanishes identically");
    }
    EvalResult r;
    r.method = "hat";
    Real each = target / Real(els.size());
    for (const auto& e : els) {
        EvalResult v = green_pair(G, tau, transform_form(e.g, pole).tau(), each, opt);
        r = r + scaled(v, Real(e.chi));
    }
    return r;
}

using Evaluator = std::function<EvalResult(const PointH&)>;

/// |Delta_hyp f + 2 f| / |f| from a 5-point stencil.
inline Real laplacian_residual(const Evaluator& f, const PointH& tau, const Real& h,
                               const Real& tolerance = Real("1e-3")) {
    EvalResult c = f(tau);
    PointH px = tau, mx = tau, py = tau, my = tau;
    px.x += h;
    mx.x -= h;
    py.y += h;
    my.y -= h;
    if (!(my.y > 0)) throw DomainError("stencil leaves the upper half-plane");
    EvalResult a = f(px), b = f(mx), d = f(py), e = f(my);
    Real noise = (a.error_bound + b.error_bound + d.error_bound + e.error_bound + 4 * c.error_bound) *
                 tau.y * tau.y / (h * h);
    if (c.value == 0) throw DomainError("function vanishes at the stencil centre");
    if (noise > tolerance * abs(c.value)) throw StepTooSmall("stencil noise exceeds tolerance");
    Real lap = (a.value + b.value + d.value + e.value - 4 * c.value) / (h * h);
    return abs(-tau.y * tau.y * lap + 2 * c.value) / abs(c.value);
}

struct PoleFit {
    Real c;
    Real constant;
    Real residual;
};

/// Least-squares fit f ~ c ln|tau - pole| + const on rings of radii [1e-3, 1e-2] * y.
inline PoleFit pole_coefficient(const Evaluator& f, const PointH& pole, int radii = 5, int angles = 8) {
    const Real pi = real_pi();
    std::vector<Real> L, V;
    for (int i = 0; i < radii; ++i) {
        Real r = pole.y * pow(Real(10), Real(-3) + Real(i) / Real(radii - 1));
        for (int j = 0; j < angles; ++j) {
            Real th = 2 * pi * (Real(j) + Real(1) / 3) / angles;
            PointH p(pole.x + r * cos(th), pole.y + r * sin(th));
            L.push_back(log(r));
            V.push_back(f(p).value);
        }
    }
    const std::size_t n = L.size();
    Real sl = 0, sv = 0, sll = 0, slv = 0;
    for (std::size_t i = 0; i < n; ++i) {
        sl += L[i];
        sv += V[i];
        sll += L[i] * L[i];
        slv += L[i] * V[i];
    }
    Real den = Real(n) * sll - sl * sl;
    PoleFit fit;
    fit.c = (Real(n) * slv - sl * sv) / den;
    fit.constant = (sv - fit.c * sl) / Real(n);
    Real ss = 0;
    for (std::size_t i = 0; i < n; ++i) {
        Real e = V[i] - fit.c * L[i] - fit.constant;
        ss += e * e;
    }
    fit.residual = sqrt(ss / Real(n));
    if (fit.residual > abs(fit.c) / 20) throw BadFit("pole fit residual exceeds 5% of the coefficient");
    return fit;
}

}  // namespace gz4
