#pragma once

#include "green.hpp"
#include "modgroup.hpp"
#include "periods.hpp"

#include "json.hpp"

#include <array>
#include <chrono>
#include <fstream>
#include <functional>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

namespace gz4 {

using ojson = nlohmann::ordered_json;

inline constexpr int kRegistrySchemaVersion = 1;

/// (N,d) for the Fano threefolds of Picard rank one, Mori-Mukai (rho, n) otherwise.
struct FanoLabel {
    bool mori_mukai = false;
    int first = 0;
    int second = 0;

    std::string str() const {
        return mori_mukai ? std::to_string(first) + "-" + std::to_string(second)
                          : "(" + std::to_string(first) + "," + std::to_string(second) + ")";
    }
    bool operator==(const FanoLabel&) const = default;
};

struct FamilyRecord {
    std::string id;
    FanoLabel fano;
    std::string phi;    // Laurent polynomial text, or "external:#ref"
    std::string group;  // modgroup label grammar, stored verbatim
    std::vector<std::array<i64, 4>> generators;  // explicit Atkin-Lehner-type matrices, if given
    bool presentation = true;
    std::string status;  // proved | conjectural
    std::string notes;

    bool operator==(const FamilyRecord&) const = default;

    bool external() const { return phi.rfind("external:", 0) == 0; }
    std::string external_ref() const { return external() ? phi.substr(9) : std::string(); }
    bool conjectural() const { return status == "conjectural"; }

    LaurentPolynomial3 polynomial() const {
        if (external()) throw DomainError("polynomial unavailable (" + phi + ")");
        return parse_laurent(phi);
    }

    GroupSpec group_spec() const {
        GroupSpec G = parse_group(group);
        if (!presentation) {
            G.has_presentation = false;
            G.atkin_lehner.clear();
            return G;
        }
        if (!generators.empty()) {
            if (!G.has_presentation) throw ParseError("generators given for label-only group " + group);
            G.atkin_lehner.clear();
            for (const auto& g : generators) G.atkin_lehner.push_back(ProjectiveMatrix(g[0], g[1], g[2], g[3]));
        }
        return G;
    }
};

namespace detail {

inline FanoLabel fano_from_json(const ojson& j) {
    FanoLabel f;
    if (!j.is_object()) throw ParseError("fano must be an object");
    if (j.contains("N") && j.contains("d")) {
        f.first = j.at("N").get<int>();
        f.second = j.at("d").get<int>();
    } else if (j.contains("rho") && j.contains("n")) {
        f.mori_mukai = true;
        f.first = j.at("rho").get<int>();
        f.second = j.at("n").get<int>();
    } else {
        throw ParseError("fano needs {N,d} or {rho,n}");
    }
    return f;
}

inline ojson fano_to_json(const FanoLabel& f) {
    ojson j;
    if (f.mori_mukai) {
        j["rho"] = f.first;
        j["n"] = f.second;
    } else {
        j["N"] = f.first;
        j["d"] = f.second;
    }
    return j;
}

inline FamilyRecord record_from_json(const ojson& j, std::size_t row) {
    std::string id = j.contains("id") && j["id"].is_string() ? j["id"].get<std::string>()
                                                            : "#" + std::to_string(row + 1);
    try {
        FamilyRecord r;
        r.id = j.at("id").get<std::string>();
        r.fano = fano_from_json(j.at("fano"));
        r.phi = j.at("phi").get<std::string>();
        r.group = j.at("group").get<std::string>();
        r.status = j.at("status").get<std::string>();
        r.notes = j.value("notes", std::string());
        if (j.contains("generators"))
            for (const auto& g : j.at("generators")) {
                if (g.size() != 4) throw ParseError("generator needs 4 entries");
                r.generators.push_back({g[0].get<i64>(), g[1].get<i64>(), g[2].get<i64>(), g[3].get<i64>()});
            }
        r.presentation = j.value("presentation", true);
        if (r.status != "proved" && r.status != "conjectural") throw ParseError("status must be proved or conjectural");
        if (!r.external()) r.polynomial();
        r.group_spec();
        return r;
    } catch (const nlohmann::json::exception& e) {
        throw ParseError("row " + id + ": " + e.what());
    } catch (const ParseError& e) {
        throw ParseError("row " + id + ": " + e.what());
    } catch (const Error& e) {
        throw ParseError("row " + id + ": " + e.what());
    }
}

inline ojson record_to_json(const FamilyRecord& r) {
    ojson j;
    j["id"] = r.id;
    j["fano"] = fano_to_json(r.fano);
    j["phi"] = r.phi;
    j["group"] = r.group;
    j["status"] = r.status;
    j["notes"] = r.notes;
    if (!r.generators.empty()) {
        ojson g = ojson::array();
        for (const auto& m : r.generators) g.push_back({m[0], m[1], m[2], m[3]});
        j["generators"] = g;
    }
    if (!r.presentation) j["presentation"] = false;
    return j;
}

}  // namespace detail

/// Checks the Table 1 structure: row count, conjectural rows, external markers, (N,1) groups.
inline void check_registry_invariants(const std::vector<FamilyRecord>& recs) {
    auto fail = [](const std::string& m) { throw InvariantViolation("registry: " + m); };
    if (recs.size() != 23) fail("expected 23 records, found " + std::to_string(recs.size()));
    std::set<std::string> ids;
    for (const auto& r : recs)
        if (!ids.insert(r.id).second) fail("duplicate id " + r.id);

    const std::set<std::string> conj{"2-6", "2-12", "2-21", "2-32", "3-13"};
    std::set<std::string> got;
    for (const auto& r : recs)
        if (r.conjectural()) got.insert(r.id);
    if (got != conj) fail("conjectural rows must be exactly 2-6, 2-12, 2-21, 2-32, 3-13");

    const std::map<std::string, std::string> ext{{"2-6", "#3873.2"}, {"2-12", "#1193"}, {"3-1", "#3873.4"}};
    std::map<std::string, std::string> got_ext;
    for (const auto& r : recs)
        if (r.external()) got_ext[r.id] = r.external_ref();
    if (got_ext != ext) fail("external markers must be 2-6 #3873.2, 2-12 #1193, 3-1 #3873.4");

    for (int N : {2, 3, 4, 5, 6, 7, 8, 9, 11}) {
        std::string id = std::to_string(N) + ",1";
        auto it = std::find_if(recs.begin(), recs.end(), [&](const FamilyRecord& r) { return r.id == id; });
        if (it == recs.end()) fail("missing row " + id);
        std::string want = "G0(" + std::to_string(N) + ")+" + std::to_string(N);
        if (it->group != want) fail("row " + id + " must carry group " + want);
    }
}

inline std::vector<FamilyRecord> parse_registry(const std::string& text) {
    ojson j;
    try {
        j = ojson::parse(text);
    } catch (const nlohmann::json::exception& e) {
        throw ParseError(std::string("registry is not valid JSON: ") + e.what());
    }
    if (!j.is_object() || !j.contains("families") || !j["families"].is_array())
        throw ParseError("registry needs a \"families\" array");
    if (j.value("schema_version", 0) != kRegistrySchemaVersion)
        throw ParseError("unsupported registry schema_version");
    std::vector<FamilyRecord> recs;
    for (std::size_t i = 0; i < j["families"].size(); ++i)
        recs.push_back(detail::record_from_json(j["families"][i], i));
    check_registry_invariants(recs);
    return recs;
}

inline std::vector<FamilyRecord> load_registry(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ParseError("cannot open registry file " + path);
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_registry(ss.str());
}

inline std::string serialize_registry(const std::vector<FamilyRecord>& recs) {
    ojson j;
    j["schema_version"] = kRegistrySchemaVersion;
    j["families"] = ojson::array();
    for (const auto& r : recs) j["families"].push_back(detail::record_to_json(r));
    return j.dump(2) + "\n";
}

// ---------------------------------------------------------------- verification

enum class Depth { quick, full };

inline std::string depth_str(Depth d) { return d == Depth::quick ? "quick" : "full"; }

struct CheckResult {
    std::string name;
    std::string outcome;  // pass | fail | skipped
    std::string detail;
    ojson params = ojson::object();
    double seconds = 0;
};

struct FamilyReport {
    std::string id;
    std::string fano;
    std::string status;
    std::string group;
    std::vector<CheckResult> checks;

    bool hard_failure() const {
        return std::any_of(checks.begin(), checks.end(), [](const CheckResult& c) { return c.outcome == "fail"; });
    }
    bool fully_checked() const {
        return std::none_of(checks.begin(), checks.end(), [](const CheckResult& c) { return c.outcome == "skipped"; });
    }
};

struct RegistryReport {
    Depth depth = Depth::quick;
    std::vector<FamilyReport> families;

    bool ok() const {
        return std::none_of(families.begin(), families.end(), [](const FamilyReport& f) { return f.hard_failure(); });
    }
    std::size_t fully_checked() const {
        return static_cast<std::size_t>(std::count_if(families.begin(), families.end(),
                                                      [](const FamilyReport& f) { return f.fully_checked(); }));
    }
};

struct VerifyOptions {
    unsigned precision = 40;
    unsigned seed = 1;
    std::size_t period_terms = 12;  // printed in the report
    std::size_t fit_terms = 34;     // used to guess the recurrence; 10 more are predicted
    int max_order = 4;
    int max_degree = 3;
    std::size_t mirror_order = 20;
    double green_target = 1e-6;
};

namespace detail {

/// Finite singular counts stated for the (N,1) families.
inline std::optional<std::size_t> expected_singular_count(const std::string& id) {
    static const std::map<std::string, std::size_t> m{{"2,1", 1}, {"3,1", 1}, {"4,1", 1}, {"5,1", 2}, {"6,1", 2},
                                                      {"7,1", 2}, {"8,1", 2}, {"9,1", 2}, {"11,1", 4}};
    auto it = m.find(id);
    if (it == m.end()) return std::nullopt;
    return it->second;
}

/// Polynomials whose roots must appear among the singular points.
inline std::vector<ZPoly> expected_singular_factors(const std::string& id) {
    if (id == "6,1") return {{Int(1), Int(-34), Int(1)}};
    if (id == "3-27") return {{Int(-1), Int(6)}, {Int(1), Int(6)}, {Int(-1), Int(2)}, {Int(1), Int(2)}};
    return {};
}

/// Real roots of a polynomial of degree 1 or 2.
inline std::vector<Real> small_real_roots(const ZPoly& p) {
    if (degree(p) == 1) return {Real(-p[0]) / Real(p[1])};
    if (degree(p) != 2) throw DomainError("only degrees 1 and 2 are supported");
    Real a = Real(p[2]), b = Real(p[1]), c = Real(p[0]);
    Real D = b * b - 4 * a * c;
    if (D < 0) return {};
    return {(-b - sqrt(D)) / (2 * a), (-b + sqrt(D)) / (2 * a)};
}

template <class F>
CheckResult timed(const std::string& name, F&& body) {
    CheckResult c;
    c.name = name;
    auto t0 = std::chrono::steady_clock::now();
    try {
        body(c);
    } catch (const std::exception& e) {
        c.outcome = "fail";
        c.detail = e.what();
    }
    c.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return c;
}

inline std::string terms_str(const std::vector<Int>& a, std::size_t n) {
    std::ostringstream os;
    for (std::size_t i = 0; i < std::min(n, a.size()); ++i) os << (i ? ", " : "") << a[i];
    return os.str();
}

/// A generic point of the upper half-plane, away from CM points of small discriminant.
inline PointH smoke_point(const GroupSpec& G) {
    Real y = Real("0.9") / sqrt(Real(G.level));
    return PointH(Real("0.0731"), y);
}

}  // namespace detail

inline FamilyReport verify_family(const FamilyRecord& rec, Depth depth, const VerifyOptions& opt = {}) {
    PrecisionGuard pg(opt.precision);
    FamilyReport rep;
    rep.id = rec.id;
    rep.fano = rec.fano.str();
    rep.status = rec.status;
    rep.group = rec.group;

    auto skipped = [&](const std::string& name, const std::string& why) {
        CheckResult c;
        c.name = name;
        c.outcome = "skipped";
        c.detail = why;
        rep.checks.push_back(c);
    };

    std::vector<std::string> period_checks{"polytope", "periods", "recurrence"};
    if (depth == Depth::full) {
        period_checks.push_back("singularities");
        period_checks.push_back("mirror_map");
    }

    if (rec.external()) {
        for (const auto& n : period_checks) skipped(n, "polynomial unavailable (" + rec.phi + ")");
    } else {
        LaurentPolynomial3 phi = rec.polynomial();
        rep.checks.push_back(detail::timed("polytope", [&](CheckResult& c) {
            auto P = newton_polytope(phi);
            c.params["vertices"] = P.vertices.size();
            c.params["facets"] = P.facets.size();
            bool refl = P.dimension == 3 && is_reflexive(P);
            c.outcome = refl ? "pass" : "fail";
            c.detail = refl ? "reflexive" : "not reflexive";
        }));

        const std::size_t total = opt.fit_terms + 10;
        PeriodSequence seq;
        rep.checks.push_back(detail::timed("periods", [&](CheckResult& c) {
            c.params["terms"] = opt.period_terms;
            seq = period_sequence(phi, static_cast<unsigned>(total - 1));
            // independent path: constant terms of repeated products
            LaurentPolynomial3 pw = LaurentPolynomial3::constant(1);
            std::size_t check = std::min<std::size_t>(opt.period_terms, 8);
            bool same = true;
            for (std::size_t n = 0; n <= check; ++n) {
                if (pw.constant_term() != seq.terms[n]) same = false;
                pw = pw * phi;
            }
            c.outcome = same && seq.terms[0] == 1 ? "pass" : "fail";
            c.detail = "a_0..a_" + std::to_string(opt.period_terms) + " = " +
                       detail::terms_str(seq.terms, opt.period_terms + 1);
            c.params["cross_checked_through"] = check;
        }));

        std::optional<HolonomicOperator> op;
        rep.checks.push_back(detail::timed("recurrence", [&](CheckResult& c) {
            c.params["fit_terms"] = opt.fit_terms;
            c.params["predicted_terms"] = 10;
            c.params["recurrence_max_order"] = opt.max_order;
            c.params["recurrence_max_degree"] = opt.max_degree;
            if (seq.terms.size() < total) throw DomainError("period sequence unavailable");
            PeriodSequence head{std::vector<Int>(seq.terms.begin(), seq.terms.begin() + opt.fit_terms)};
            op = find_recurrence(head, opt.max_order, opt.max_degree);
            if (!op) {
                c.outcome = "fail";
                c.detail = "no recurrence in the search box";
                return;
            }
            auto ext = extend_with_recurrence(*op, head.terms, total);
            bool ok = ext == seq.terms;
            c.outcome = ok ? "pass" : "fail";
            c.detail = "order " + std::to_string(op->rec_order()) + ", degree " + std::to_string(op->rec_degree()) +
                       (ok ? "; predicts 10 further terms" : "; prediction mismatch");
        }));

        if (depth == Depth::full) {
            std::optional<HolonomicOperator> ode;
            if (op) ode = rec_to_ode(*op, seq.terms);
            rep.checks.push_back(detail::timed("singularities", [&](CheckResult& c) {
                if (!ode) throw DomainError("no operator");
                auto L = singular_points(*ode);
                c.params["finite_count"] = L.finite_count();
                std::ostringstream os;
                os << L.finite_count() << " finite nonzero points:";
                for (const auto& p : L.finite) os << " [" << p.exact << "]";
                c.detail = os.str();
                auto want = detail::expected_singular_count(rec.id);
                auto factors = detail::expected_singular_factors(rec.id);
                if (!want && factors.empty()) {
                    c.outcome = "skipped";
                    c.detail += " (no stated expectation)";
                    return;
                }
                bool ok = true;
                if (want) {
                    c.params["expected_count"] = *want;
                    if (L.finite_count() != *want) ok = false;
                }
                Real tol = Real("1e-20");
                for (const auto& f : factors)
                    for (const auto& z : detail::small_real_roots(f)) {
                        bool hit = std::any_of(L.finite.begin(), L.finite.end(), [&](const SingularPoint& p) {
                            return abs(p.re - z) < tol && abs(p.im) < tol;
                        });
                        if (!hit) {
                            ok = false;
                            c.detail += "; missing root of " + poly_to_string(f, "t");
                        }
                    }
                c.outcome = ok ? "pass" : "fail";
            }));
            rep.checks.push_back(detail::timed("mirror_map", [&](CheckResult& c) {
                if (!ode) throw DomainError("no operator");
                c.params["order"] = opt.mirror_order;
                auto fr = frobenius_solutions(*ode, opt.mirror_order + 1);
                if (!fr.h) throw NotMUM("no logarithmic solution");
                auto mm = mirror_map(fr.f, *fr.h, opt.mirror_order + 1);
                c.outcome = mm.integral ? "pass" : "fail";
                c.detail = mm.integral ? "t(q) integral" : "t(q) has non-integral coefficients";
            }));
        }
    }

    if (depth == Depth::full) {
        GroupSpec G = rec.group_spec();
        if (!G.has_presentation) {
            skipped("group", "group presentation unavailable: " + rec.group);
            skipped("green_smoke", "group presentation unavailable: " + rec.group);
        } else {
            rep.checks.push_back(detail::timed("group", [&](CheckResult& c) {
                c.params["samples"] = 100;
                c.params["seed"] = opt.seed;
                auto gc = check_group(G, 100, opt.seed);
                c.outcome = gc.ok() ? "pass" : "fail";
                c.detail = gc.ok() ? "involutions normalize Gamma_0" : gc.detail;
            }));
            rep.checks.push_back(detail::timed("green_smoke", [&](CheckResult& c) {
                Real target(opt.green_target);
                // the highest pole keeps the lattice sums short
                std::optional<CMPoint> pole;
                auto poles = cm_points(G, std::max<i64>(40, 4 * G.level * G.level));
                std::stable_sort(poles.begin(), poles.end(),
                                 [](const CMPoint& p, const CMPoint& q) { return p.tau().y > q.tau().y; });
                for (const auto& f : poles) {
                    try {
                        green_hat(G, f, detail::smoke_point(G), Real(1), {});
                        pole = f;
                        break;
                    } catch (const DegeneratePole&) {
                    }
                }
                if (!pole) throw DomainError("no non-degenerate CM pole found");
                PointH tau = detail::smoke_point(G);
                c.params["pole"] = pole->str();
                c.params["target_error"] = opt.green_target;
                EvalResult a = green_hat(G, *pole, tau, target);
                GreenOptions wide;
                wide.cutoff = static_cast<long long>(a.cutoff.convert_to<double>()) * 2;
                EvalResult b = green_hat(G, *pole, tau, target, wide);
                bool stable = abs(a.value - b.value) <= a.error_bound + b.error_bound;
                bool anti = true;
                for (const auto& w : G.atkin_lehner) {
                    EvalResult v = green_hat(G, *pole, moebius_apply(w, tau), target);
                    if (abs(v.value + a.value) > v.error_bound + a.error_bound) anti = false;
                }
                c.outcome = stable && anti ? "pass" : "fail";
                c.detail = "G_hat = " + to_string(a.value, 12) + " +- " + to_string(a.error_bound, 2) +
                           (stable ? "; cutoffs agree" : "; cutoffs disagree") +
                           (anti ? "; anti-invariant" : "; anti-invariance violated");
            }));
        }
    }
    return rep;
}

inline RegistryReport verify_all(const std::vector<FamilyRecord>& recs, Depth depth, const VerifyOptions& opt = {},
                                 const std::function<void(const FamilyReport&)>& progress = {}) {
    RegistryReport r;
    r.depth = depth;
    for (const auto& rec : recs) {
        r.families.push_back(verify_family(rec, depth, opt));
        if (progress) progress(r.families.back());
    }
    return r;
}

inline ojson report_to_json(const FamilyReport& f, bool deterministic) {
    ojson j;
    j["id"] = f.id;
    j["fano"] = f.fano;
    j["status"] = f.status;
    j["group"] = f.group;
    j["checks"] = ojson::array();
    for (const auto& c : f.checks) {
        ojson cj;
        cj["name"] = c.name;
        cj["outcome"] = c.outcome;
        cj["detail"] = c.detail;
        cj["params"] = c.params;
        if (!deterministic) cj["seconds"] = c.seconds;
        j["checks"].push_back(cj);
    }
    return j;
}

inline FamilyReport family_report_from_json(const ojson& j) {
    FamilyReport f;
    f.id = j.at("id").get<std::string>();
    f.fano = j.at("fano").get<std::string>();
    f.status = j.at("status").get<std::string>();
    f.group = j.at("group").get<std::string>();
    for (const auto& cj : j.at("checks")) {
        CheckResult c;
        c.name = cj.at("name").get<std::string>();
        c.outcome = cj.at("outcome").get<std::string>();
        c.detail = cj.at("detail").get<std::string>();
        c.params = cj.at("params");
        c.seconds = cj.value("seconds", 0.0);
        f.checks.push_back(c);
    }
    return f;
}

inline ojson report_to_json(const RegistryReport& r, bool deterministic) {
    ojson j;
    j["depth"] = depth_str(r.depth);
    j["families"] = ojson::array();
    std::size_t pass = 0, fail = 0, skip = 0;
    for (const auto& f : r.families) {
        j["families"].push_back(report_to_json(f, deterministic));
        for (const auto& c : f.checks) (c.outcome == "pass" ? pass : c.outcome == "fail" ? fail : skip)++;
    }
    ojson s;
    s["records"] = r.families.size();
    s["fully_checked"] = r.fully_checked();
    s["partially_checked"] = r.families.size() - r.fully_checked();
    s["checks_passed"] = pass;
    s["checks_failed"] = fail;
    s["checks_skipped"] = skip;
    s["ok"] = r.ok();
    j["summary"] = s;
    return j;
}

}  // namespace gz4
