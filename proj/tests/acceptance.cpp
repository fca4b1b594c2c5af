// Acceptance run: one PASS/FAIL line per criterion, nonzero exit if any fails.
#include "gz4/cli.hpp"
#include "gz4/green.hpp"
#include "gz4/periods.hpp"
#include "gz4/recognize.hpp"
#include "gz4/registry.hpp"
#include "oracles.hpp"

#include <chrono>
#include <functional>
#include <iostream>
#include <random>
#include <sstream>

using namespace gz4;

namespace {

struct Verdict {
    bool pass = true;
    std::string detail;
    void fail(const std::string& why) {
        pass = false;
        if (!detail.empty()) detail += "; ";
        detail += why;
    }
};

using Clock = std::chrono::steady_clock;

double since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

std::vector<FamilyRecord> explicit_families() {
    std::vector<FamilyRecord> out;
    for (const auto& r : load_registry(GZ4_DEFAULT_REGISTRY))
        if (!r.external()) out.push_back(r);
    return out;
}

LaurentPolynomial3 phi_of(const std::string& id) {
    for (const auto& r : explicit_families())
        if (r.id == id) return r.polynomial();
    throw std::runtime_error("no family " + id);
}

HolonomicOperator ode_of(const PeriodSequence& seq) {
    auto op = find_recurrence(seq, 4, 4);
    if (!op) throw std::runtime_error("no recurrence");
    return rec_to_ode(*op, seq.terms);
}

std::string fmt(double x, int prec = 3) {
    std::ostringstream s;
    s.precision(prec);
    s << x;
    return s.str();
}

Verdict c1_periods() {
    Verdict v;
    auto t0 = Clock::now();
    auto fams = explicit_families();
    if (fams.size() != 20) v.fail(std::to_string(fams.size()) + " explicit families");
    for (const auto& r : fams) {
        auto phi = r.polynomial();
        if (period_sequence(phi, 8).terms != oracle::dense_periods(phi, 8)) v.fail(r.id + " differs from dense expansion");
    }
    auto a = period_sequence(phi_of("2,1"), 2).terms;
    if (a[1] != 24 || a[2] != 2520) v.fail("(2,1) goldens");
    if (period_sequence(phi_of("3-27"), 2).terms[2] != 6) v.fail("3-27 golden");
    double s = since(t0);
    if (s >= 60) v.fail("runtime " + fmt(s) + " s");
    if (v.pass) v.detail = "20 families match the dense oracle; a1=24, a2=2520, a2(3-27)=6; " + fmt(s) + " s";
    return v;
}

Verdict c2_picard_fuchs() {
    Verdict v;
    auto t0 = Clock::now();
    auto seq = period_sequence(phi_of("2,1"), 40);
    int order = ode_of(seq).ode_order();
    if (order != 3) v.fail("(2,1) ODE order " + std::to_string(order));
    int ok = 0;
    for (const auto& r : explicit_families()) {
        auto full = period_sequence(r.polynomial(), 43).terms;
        PeriodSequence head{std::vector<Int>(full.begin(), full.begin() + 34)};
        auto op = find_recurrence(head, 4, 3);
        if (op && extend_with_recurrence(*op, head.terms, full.size()) == full) ++ok;
        else v.fail(r.id + " does not predict terms 34..43");
    }
    double s = since(t0);
    if (s >= 600) v.fail("runtime " + fmt(s) + " s");
    if (v.pass)
        v.detail = "(2,1) order 3; " + std::to_string(ok) + "/20 operators predict 10 further terms from 34; " +
                   fmt(s) + " s";
    return v;
}

Verdict c3_discriminants() {
    Verdict v;
    PrecisionGuard pg(40);
    const std::vector<std::pair<std::string, std::size_t>> want{{"2,1", 1}, {"3,1", 1}, {"4,1", 1},
                                                                {"5,1", 2}, {"6,1", 2}, {"7,1", 2},
                                                                {"8,1", 2}, {"9,1", 2}, {"11,1", 4}};
    std::string counts;
    for (const auto& [id, n] : want) {
        auto L = singular_points(ode_of(period_sequence(phi_of(id), 43)));
        counts += (counts.empty() ? "" : " ") + id + ":" + std::to_string(L.finite_count());
        if (L.finite_count() != n)
            v.fail(id + " has " + std::to_string(L.finite_count()) + " finite points, expected " + std::to_string(n));
    }
    auto L6 = singular_points(ode_of(period_sequence(phi_of("6,1"), 43)));
    const Real s2 = 12 * sqrt(Real(2));
    for (const Real& root : {17 - s2, 17 + s2}) {
        bool hit = false;
        for (const auto& p : L6.finite) hit = hit || (abs(p.re - root) < Real("1e-20") && abs(p.im) < Real("1e-20"));
        if (!hit) v.fail("(6,1) misses root " + root.str(12));
    }
    auto LF = singular_points(ode_of(period_sequence(phi_of("3-27"), 43)));
    for (const char* s : {"1/6", "-1/6", "1/2", "-1/2"}) {
        bool hit = false;
        for (const auto& p : LF.finite) hit = hit || p.exact == s;
        if (!hit) v.fail(std::string("3-27 misses ") + s);
    }
    v.detail = (v.pass ? "" : v.detail + "; ") + "counts " + counts;
    return v;
}

Verdict c4_basechange() {
    Verdict v;
    auto fermi = period_sequence(phi_of("3-27"), 80);
    PeriodSequence even;
    for (std::size_t i = 0; i < fermi.terms.size(); i += 2) even.terms.push_back(fermi.terms[i]);
    auto opF = find_recurrence(even, 4, 3);
    if (!opF) {
        v.fail("no operator for the even part of 3-27");
        return v;
    }
    auto F = rec_to_ode(*opF, even.terms);
    auto zero = [](const PullbackReport& r) {
        for (const auto& c : r.remainder)
            if (c != 0) return false;
        return true;
    };
    auto sq = pullback_check(F, BasechangeMap(QPoly{0, 0, 1}, QPoly{1}), fermi, 26);
    if (!sq.pass || !zero(sq)) v.fail("t^2 pullback: " + sq.message);
    auto domb = period_sequence(phi_of("4-1"), 30);
    BasechangeMap stated(QPoly{0, 36}, QPoly{1, 16, 64});
    BasechangeMap coord(QPoly{0, 1}, QPoly{-36, 36});
    auto dm = pullback_check(F, coord.compose(stated), domb, 26);
    if (!dm.pass || !zero(dm)) v.fail("4-1 pullback: " + dm.message);
    if (degree(dm.prefactor_num) > 2) v.fail("4-1 prefactor degree " + std::to_string(degree(dm.prefactor_num)));
    if (v.pass)
        v.detail = "3-27 via t^2 and 4-1 via 36t/(8t+1)^2 (prefactor degree " +
                   std::to_string(degree(dm.prefactor_num)) + "), remainder zero through order 25";
    return v;
}

Verdict c5_reflexivity() {
    Verdict v;
    int n = 0;
    for (const auto& r : explicit_families()) {
        if (is_reflexive(newton_polytope(r.polynomial()))) ++n;
        else v.fail(r.id + " not reflexive");
    }
    for (const char* s : {"(1+x+y+z)^6/(x*y*z)", "(1+x+y)^6/(x*y^2*z)+z"})
        if (is_reflexive(newton_polytope(parse_laurent(s)))) v.fail(std::string(s) + " reported reflexive");
    if (v.pass) v.detail = std::to_string(n) + "/20 reflexive; both counterexamples non-reflexive";
    return v;
}

Verdict c6_mirror() {
    Verdict v;
    for (const char* id : {"2,1", "3,1", "4,1", "3-27", "4-1"}) {
        auto seq = period_sequence(phi_of(id), 44);
        auto fr = frobenius_solutions(ode_of(seq), 21);
        if (!fr.h) {
            v.fail(std::string(id) + " has no log solution");
            continue;
        }
        if (!mirror_map(fr.f, *fr.h, 21).integral) v.fail(std::string(id) + " t(q) not integral");
    }
    if (v.pass) v.detail = "t(q) integral through q^20 for 2,1 3,1 4,1 3-27 4-1";
    return v;
}

struct AxiomGroup {
    std::string name;
    GroupSpec G;
    long hecke_m;
};

CMPoint highest_pole(const GroupSpec& G) {
    auto pts = cm_points(G, std::max<i64>(40, 4 * G.level * G.level));
    std::stable_sort(pts.begin(), pts.end(),
                     [](const CMPoint& a, const CMPoint& b) { return a.tau().y > b.tau().y; });
    return pts.front();
}

Verdict c7_green_axioms() {
    Verdict v;
    auto t0 = Clock::now();
    PrecisionGuard pg(30);
    const Real target("1e-8");
    GroupSpec g6 = parse_group("G0(6)+3");
    g6.atkin_lehner.assign(1, ProjectiveMatrix(3, -1, 12, -3));
    std::vector<AxiomGroup> groups{{"G0(2)+2", parse_group("G0(2)+2"), 3},
                                   {"G0(3)+3", parse_group("G0(3)+3"), 2},
                                   {"G0(6)+3", g6, 5}};
    std::mt19937_64 rng(20261019);
    int cutoff_ok = 0, anti_ok = 0, lap_ok = 0, cusp_ok = 0, hecke_ok = 0;
    double worst_lap = 0, worst_cusp = 0, worst_ratio = 0;
    for (auto& ag : groups) {
        const GroupSpec& G = ag.G;
        CMPoint b = highest_pole(G);
        GreenSpec spec{G, b, 2};
        std::vector<PointH> orbit;
        double y_top = 0;
        for (const auto& e : fricke_quotient(G)) {
            orbit.push_back(maximize_height(transform_form(e.g, b).tau(), G.level).first);
            y_top = std::max(y_top, orbit.back().y.convert_to<double>());
        }
        auto far_from_poles = [&](const PointH& q) {
            for (const auto& o : orbit)
                for (int k = -1; k <= 1; ++k) {
                    Real dx = q.x - o.x - k, dy = q.y - o.y;
                    if (sqrt(dx * dx + dy * dy) < Real("0.35") * q.y) return false;
                }
            return true;
        };
        auto sample = [&](double lo, double hi) {
            std::uniform_real_distribution<double> ux(-0.5, 0.5), uy(y_top + lo, y_top + hi);
            for (;;) {
                PointH q{Real(ux(rng)), Real(uy(rng))};
                if (far_from_poles(q)) return q;
            }
        };

        for (int i = 0; i < 10; ++i) {
            PointH q = sample(0.5, 1.5);
            EvalResult a = green_hat(G, b, q, target);
            GreenOptions o;
            if (a.cutoff > 0) o.cutoff = 2 * a.cutoff.convert_to<long long>();
            EvalResult c = green_hat(G, b, q, target, o);
            if (abs(a.value - c.value) <= a.error_bound + c.error_bound && a.error_bound <= target) ++cutoff_ok;
            else v.fail(ag.name + " cutoff disagreement at " + q.x.str(4) + "+" + q.y.str(4) + "i");
            EvalResult w = green_hat(G, b, moebius_apply(G.atkin_lehner.front(), q), target);
            if (abs(a.value + w.value) <= a.error_bound + w.error_bound) ++anti_ok;
            else v.fail(ag.name + " not anti-invariant at " + q.x.str(4) + "+" + q.y.str(4) + "i");
        }

        Evaluator hat = [&](const PointH& p) { return green_hat(G, b, p, target); };
        for (int i = 0; i < 5; ++i) {
            PointH q = sample(1.0, 1.5);
            double r = laplacian_residual(hat, q, Real("0.015")).convert_to<double>();
            worst_lap = std::max(worst_lap, r);
            if (r < 1e-3) ++lap_ok;
            else v.fail(ag.name + " Laplace residual " + fmt(r));
        }

        std::uniform_real_distribution<double> ux(-0.5, 0.5);
        int here = 0;
        double worst_here = 0;
        for (int i = 0; i < 5; ++i) {
            EvalResult e = green_basic(spec, PointH{Real(ux(rng)), Real(50)}, target);
            double ratio = (abs(e.value) / e.error_bound).convert_to<double>();
            worst_here = std::max(worst_here, ratio);
            if (abs(e.value) < 10 * e.error_bound) ++here;
        }
        cusp_ok += here;
        worst_cusp = std::max(worst_cusp, worst_here);
        if (here != 5) v.fail(ag.name + " cusp decay at y=50: |G|/error up to " + fmt(worst_here));

        auto reps = hecke_reps_for(G, ag.hecke_m);
        CMPoint t0f = transform_form(reps[0].inverse(), b);
        CMPoint key = orbit_key(G, b);
        int mult = 0;
        for (const auto& g : reps)
            if (orbit_key(G, transform_form(g, t0f)) == key) ++mult;
        auto base = pole_coefficient([&](const PointH& p) { return green_basic(spec, p, target); }, b.tau());
        auto hk = pole_coefficient([&](const PointH& p) { return hecke_translate(G, ag.hecke_m, spec, p, target); },
                                   t0f.tau());
        double ratio = (hk.c / base.c).convert_to<double>();
        double rel = std::abs(ratio - mult) / mult;
        worst_ratio = std::max(worst_ratio, rel);
        if (mult > 0 && rel < 0.01) ++hecke_ok;
        else v.fail(ag.name + " T" + std::to_string(ag.hecke_m) + " pole ratio " + fmt(ratio, 6) + " vs " +
                    std::to_string(mult));
    }
    double s = since(t0);
    if (s >= 1200) v.fail("runtime " + fmt(s) + " s");
    std::string summary = "cutoffs " + std::to_string(cutoff_ok) + "/30, anti-invariance " + std::to_string(anti_ok) +
                          "/30, Laplace " + std::to_string(lap_ok) + "/15 (worst " + fmt(worst_lap) + "), cusp " +
                          std::to_string(cusp_ok) + "/15, Hecke " + std::to_string(hecke_ok) + "/3 (worst rel " +
                          fmt(worst_ratio) + "); " + fmt(s) + " s";
    v.detail = v.pass ? summary : v.detail + "; " + summary;
    return v;
}

std::string random_real_in_range(std::mt19937_64& rng) {
    // uniform in [0.1, 10), same number at every precision
    std::uniform_int_distribution<int> dig(0, 9);
    for (;;) {
        std::string s = std::to_string(dig(rng)) + ".";
        for (int i = 0; i < 120; ++i) s += static_cast<char>('0' + dig(rng));
        if (s[0] == '0' && s[2] == '0') continue;
        return s;
    }
}

Verdict c8_recognition() {
    Verdict v;
    PrecisionGuard pg(50);
    std::mt19937_64 rng(8);
    int found = 0;
    for (int i = 0; i < 100; ++i) {
        oracle::SyntheticLog s = oracle::synthetic_log(rng);
        auto rep = recognize_log_value([&](unsigned d) { return std::vector<Real>{s.at(d)}; }, 50, Real(0),
                                       RecognitionParams{});
        if (rep.status != RecognitionStatus::recognized) continue;
        Real back = to_real(rep.candidate->scale) * log(rep.candidate->alpha_approx);
        if (abs(back - s.at(50)) < Real("1e-40")) ++found;
    }
    if (found != 100) v.fail("round trip " + std::to_string(found) + "/100");
    int false_pos = 0;
    for (int i = 0; i < 100; ++i) {
        std::string digits = random_real_in_range(rng);
        auto rep = recognize_log_value([&](unsigned d) {
            PrecisionGuard g(d);
            return std::vector<Real>{Real(digits)};
        }, 40, Real(0), RecognitionParams{});
        if (rep.status == RecognitionStatus::recognized) ++false_pos;
    }
    if (false_pos) v.fail(std::to_string(false_pos) + " false positives");
    auto rel = integer_relation({log(Real(6)), log(Real(2)), log(Real(3))}, Int(1000));
    if (!rel || !(*rel == IntVec{1, -1, -1} || *rel == IntVec{-1, 1, 1})) v.fail("ln6 relation");
    auto p = algdep(Real(cbrt(Real(2))), 3, Int(1000));
    if (!p || poly_str(*p) != "t^3 - 2") v.fail("algdep(2^(1/3))");
    if (v.pass) v.detail = "100/100 round trips, 0/100 false positives, ln6 = ln2 + ln3, algdep(2^(1/3)) = t^3 - 2";
    return v;
}

Verdict c9_gz_end_to_end() {
    Verdict v;
    std::string summary;
    for (const char* at : {"2,2,1", "2,0,1"}) {
        std::vector<const char*> argv{"gz4",        "--json",      "gzverify", "--group", "G0(2)+2",
                                      "--pole-form", "2,2,3",       "--at-form", at};
        std::ostringstream out, err;
        auto t0 = Clock::now();
        int code = cli::run(static_cast<int>(argv.size()), argv.data(), out, err);
        double s = since(t0);
        if (code != 0) {
            v.fail(std::string(at) + " exit " + std::to_string(code) + ": " + err.str());
            continue;
        }
        ojson res = ojson::parse(out.str())["results"];
        double digits = res["agreement_digits"].get<double>();
        if (!res["stable"].get<bool>() || digits < 12) v.fail(std::string(at) + " unstable (" + fmt(digits) + " digits)");
        const ojson& rec = res["recognition"];
        bool complete = rec.contains("status") && rec.contains("search_parameters") && rec.contains("confidence");
        if (!complete) v.fail(std::string(at) + " incomplete recognition report");
        summary += std::string(summary.empty() ? "" : ", ") + "disc " + std::to_string(res["at_disc"].get<long>()) +
                   ": " + fmt(digits) + " digits, " + rec.value("status", "?") + " (" + fmt(s) + " s)";
    }
    v.detail = v.pass ? summary : v.detail + "; " + summary;
    return v;
}

}  // namespace

int main() {
    const std::vector<std::pair<std::string, std::function<Verdict()>>> criteria{
        {"1 period sequences", c1_periods},
        {"2 Picard-Fuchs recovery", c2_picard_fuchs},
        {"3 discriminant data", c3_discriminants},
        {"4 basechange", c4_basechange},
        {"5 reflexivity", c5_reflexivity},
        {"6 mirror-map integrality", c6_mirror},
        {"7 Green axiom suite", c7_green_axioms},
        {"8 recognition suite", c8_recognition},
        {"9 GZ end-to-end", c9_gz_end_to_end},
    };
    int failed = 0;
    for (const auto& [name, run] : criteria) {
        Verdict v;
        try {
            v = run();
        } catch (const std::exception& e) {
            v.fail(std::string("exception: ") + e.what());
        }
        if (!v.pass) ++failed;
        std::cout << (v.pass ? "PASS" : "FAIL") << "  criterion " << name << ": " << v.detail << std::endl;
    }
    std::cout << (9 - failed) << "/9 criteria pass" << std::endl;
    return failed ? 1 : 0;
}
