#pragma once

#include "green.hpp"
#include "modgroup.hpp"
#include "periods.hpp"
#include "recognize.hpp"
#include "registry.hpp"

#include "CLI11.hpp"
#include "json.hpp"

#include <sys/wait.h>
#include <unistd.h>

#include <cstdlib>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#ifndef GZ4_DEFAULT_REGISTRY
#define GZ4_DEFAULT_REGISTRY "data/families.json"
#endif

namespace gz4::cli {

enum ExitCode { kSuccess = 0, kFailure = 1, kUsage = 2, kPrecision = 3 };

struct UsageError : Error {
    using Error::Error;
};

struct CommandFailed : Error {
    using Error::Error;
};

struct RunConfig {
    unsigned precision = 40;
    std::optional<double> target_error;
    std::optional<long long> cutoff;
    bool json = false;
    bool deterministic = false;
    unsigned seed = 1;
    std::string registry;

    ojson to_json() const {
        ojson j;
        j["precision"] = precision;
        j["target_error"] = target_error ? ojson(*target_error) : ojson(nullptr);
        j["cutoff"] = cutoff ? ojson(*cutoff) : ojson(nullptr);
        j["seed"] = seed;
        j["deterministic"] = deterministic;
        return j;
    }
};

inline std::string registry_path(const RunConfig& cfg) {
    if (!cfg.registry.empty()) return cfg.registry;
    if (const char* env = std::getenv("GZ4_REGISTRY"); env && *env) return env;
    return GZ4_DEFAULT_REGISTRY;
}

inline FamilyRecord find_family(const RunConfig& cfg, const std::string& id) {
    for (const auto& r : load_registry(registry_path(cfg)))
        if (r.id == id) return r;
    throw UsageError("unknown family id '" + id + "'");
}

inline std::string real_str(const Real& x, unsigned digits) { return to_string(x, static_cast<int>(digits)); }

inline std::vector<i64> parse_ints(const std::string& s, std::size_t n, const std::string& what) {
    std::vector<i64> v;
    std::stringstream ss(s);
    std::string tok;
    try {
        while (std::getline(ss, tok, ',')) v.push_back(std::stoll(tok));
    } catch (const std::exception&) {
        throw UsageError(what + " must be " + std::to_string(n) + " comma-separated integers");
    }
    if (v.size() != n) throw UsageError(what + " must be " + std::to_string(n) + " comma-separated integers");
    return v;
}

inline CMPoint parse_form(const std::string& s, const std::string& what) {
    auto v = parse_ints(s, 3, what);
    try {
        return CMPoint(v[0], v[1], v[2]);
    } catch (const DomainError& e) {
        throw UsageError(what + ": " + e.what());
    }
}

inline PointH parse_point(const std::string& s) {
    auto c = s.find(',');
    if (c == std::string::npos) throw UsageError("--point must be x,y");
    try {
        PointH p(Real(s.substr(0, c)), Real(s.substr(c + 1)));
        if (!(p.y > 0)) throw UsageError("--point needs y > 0");
        return p;
    } catch (const std::runtime_error&) {
        throw UsageError("--point must be x,y");
    }
}

inline std::vector<Rat> parse_scales(const std::string& s) {
    std::vector<Rat> out;
    std::stringstream ss(s);
    std::string tok;
    while (std::getline(ss, tok, ',')) {
        try {
            out.push_back(gz4::detail::parse_rational(tok));
        } catch (const std::exception&) {
            throw UsageError("bad scale '" + tok + "'");
        }
    }
    return out;
}

/// "[r][*]ln a" with rationals r and a > 0.
inline std::pair<Rat, Rat> parse_inject(const std::string& s) {
    auto p = s.find("ln");
    if (p == std::string::npos) throw UsageError("--inject expects r*ln(a)");
    std::string r = s.substr(0, p), a = s.substr(p + 2);
    if (!r.empty() && r.back() == '*') r.pop_back();
    if (a.size() >= 2 && a.front() == '(' && a.back() == ')') a = a.substr(1, a.size() - 2);
    try {
        Rat rr = r.empty() ? Rat(1) : r == "-" ? Rat(-1) : gz4::detail::parse_rational(r);
        Rat aa = gz4::detail::parse_rational(a);
        if (aa <= 0) throw UsageError("--inject needs a > 0");
        return {rr, aa};
    } catch (const UsageError&) {
        throw;
    } catch (const std::exception&) {
        throw UsageError("--inject expects r*ln(a) with rationals r, a");
    }
}

inline ojson terms_json(const std::vector<Int>& a) {
    ojson t = ojson::array();
    for (const auto& v : a) t.push_back(v.str());
    return t;
}

// ---------------------------------------------------------------- commands

struct SourceArgs {
    std::string family;
    std::string phi;
};

inline std::pair<std::string, LaurentPolynomial3> resolve_phi(const RunConfig& cfg, const SourceArgs& a) {
    if (a.family.empty() == a.phi.empty()) throw UsageError("give exactly one of --family, --phi");
    std::string text = a.phi;
    if (!a.family.empty()) {
        FamilyRecord r = find_family(cfg, a.family);
        if (r.external()) throw CommandFailed("polynomial unavailable (" + r.phi + ")");
        text = r.phi;
    }
    try {
        return {text, parse_laurent(text)};
    } catch (const ParseError& e) {
        throw UsageError(e.what());
    }
}

inline ojson cmd_periods(const RunConfig& cfg, const SourceArgs& src, unsigned terms) {
    auto [text, phi] = resolve_phi(cfg, src);
    ojson r;
    r["family"] = src.family.empty() ? ojson(nullptr) : ojson(src.family);
    r["phi"] = text;
    r["terms"] = terms_json(period_sequence(phi, terms).terms);
    return r;
}

struct PfArgs {
    SourceArgs src;
    int max_order = 4;   // order in theta
    int max_degree = 4;  // degree in t
    unsigned terms = 44;
};

inline ojson cmd_pf(const RunConfig& cfg, const PfArgs& a) {
    auto [text, phi] = resolve_phi(cfg, a.src);
    PrecisionGuard pg(cfg.precision);
    PeriodSequence seq = period_sequence(phi, a.terms - 1);
    // a recurrence of order r and degree d in n is an operator of degree r in t and order d in theta
    auto op = find_recurrence(seq, a.max_degree, a.max_order);
    if (!op) throw CommandFailed("no operator with order <= " + std::to_string(a.max_order) + " and degree <= " +
                                 std::to_string(a.max_degree) + " fits " + std::to_string(a.terms) + " terms");
    HolonomicOperator ode = rec_to_ode(*op, seq.terms);
    SingularLocus L = singular_points(ode);
    ojson r;
    r["family"] = a.src.family.empty() ? ojson(nullptr) : ojson(a.src.family);
    r["phi"] = text;
    r["terms_used"] = a.terms;
    r["recurrence"] = op->rec_str();
    r["operator"] = ode.ode_str();
    r["order"] = ode.ode_order();
    r["degree"] = static_cast<int>(ode.theta.size()) - 1;
    r["zero_multiplicity"] = L.zero_multiplicity;
    ojson pts = ojson::array();
    unsigned digits = std::min(cfg.precision, 30u);
    for (const auto& p : L.finite) {
        ojson pj;
        pj["exact"] = p.exact;
        pj["re"] = real_str(p.re, digits);
        pj["im"] = real_str(p.im, digits);
        pj["multiplicity"] = p.multiplicity;
        pts.push_back(pj);
    }
    r["finite_singular_points"] = pts;
    r["finite_count"] = L.finite_count();
    return r;
}

struct GreenArgs {
    std::string group;
    std::string pole_form;
    std::string point;
    bool hat = false;
    std::string method = "auto";
};

inline GroupSpec resolve_group(const std::string& label) {
    try {
        return parse_group(label);
    } catch (const ParseError& e) {
        throw UsageError(e.what());
    }
}

inline GreenOptions green_options(const RunConfig& cfg, const std::string& method) {
    GreenOptions o;
    if (method == "fourier") o.method = GreenMethod::fourier;
    else if (method == "direct") o.method = GreenMethod::direct;
    else if (method != "auto") throw UsageError("--method must be auto, fourier or direct");
    if (cfg.cutoff) {
        if (o.method == GreenMethod::direct) o.direct_cutoff = Real(*cfg.cutoff);
        else o.cutoff = *cfg.cutoff;
    }
    return o;
}

inline ojson eval_json(const EvalResult& v, unsigned digits) {
    ojson j;
    j["value"] = real_str(v.value, digits);
    j["error_bound"] = real_str(v.error_bound, 6);
    j["cutoff"] = real_str(v.cutoff, 12);
    j["term_count"] = v.term_count;
    j["method"] = v.method;
    return j;
}

inline ojson cmd_green(const RunConfig& cfg, const GreenArgs& a) {
    GroupSpec G = resolve_group(a.group);
    CMPoint pole = parse_form(a.pole_form, "--pole-form");
    PrecisionGuard pg(cfg.precision);
    PointH tau = parse_point(a.point);
    Real target(cfg.target_error.value_or(1e-8));
    GreenOptions o = green_options(cfg, a.method);
    EvalResult v = a.hat ? green_hat(G, pole, tau, target, o) : green_basic(GreenSpec{G, pole, 2}, tau, target, o);
    ojson r;
    r["group"] = a.group;
    r["pole_form"] = pole.str();
    r["point"] = {real_str(tau.x, cfg.precision), real_str(tau.y, cfg.precision)};
    r["hat"] = a.hat;
    r.update(eval_json(v, cfg.precision));
    return r;
}

struct GzArgs {
    std::string group;
    std::string pole_form;
    std::string at_form;
    std::string scales;
    int max_degree = 4;
    long long max_height = 10000;
    std::string inject;
    std::string method = "auto";
};

inline ojson recognition_json(const RecognitionReport& rep, unsigned digits) {
    ojson j;
    j["status"] = status_str(rep.status);
    if (rep.candidate) {
        ojson c;
        c["scale"] = rep.candidate->scale.str();
        c["alpha_minpoly"] = poly_str(rep.candidate->alpha_minpoly);
        c["alpha_approx"] = real_str(rep.candidate->alpha_approx, digits);
        c["residual"] = real_str(rep.candidate->residual, 6);
        j["candidate"] = c;
    } else {
        j["candidate"] = nullptr;
    }
    ojson sp;
    sp["scales"] = ojson::array();
    for (const auto& s : rep.search_parameters.scales) sp["scales"].push_back(s.str());
    sp["max_degree"] = rep.search_parameters.max_degree;
    sp["max_height"] = rep.search_parameters.max_height.str();
    sp["precision"] = rep.search_parameters.precision;
    j["search_parameters"] = sp;
    j["confidence"] = real_str(rep.confidence, 6);
    j["reason"] = rep.reason;
    return j;
}

/// Digits of agreement between two evaluations, relative to max(|v|, 1).
inline double agreement_digits(const Real& a, const Real& b) {
    Real d = abs(a - b);
    Real s = std::max(Real(abs(a)), Real(1));
    if (d == 0) return static_cast<double>(working_digits());
    return std::min(static_cast<double>(working_digits()), (-log10(d / s)).convert_to<double>());
}

inline ojson cmd_gzverify(const RunConfig& cfg, const GzArgs& a) {
    RecognitionParams params;
    params.scales = a.scales.empty() ? default_scales() : parse_scales(a.scales);
    params.max_degree = a.max_degree;
    params.max_height = Int(a.max_height);
    if (params.max_degree < 1) throw UsageError("--max-degree must be >= 1");
    if (a.max_height < 2) throw UsageError("--max-height must be >= 2");

    ojson r;
    if (!a.inject.empty()) {
        auto [rr, aa] = parse_inject(a.inject);
        auto w_at = [rr = rr, aa = aa](unsigned digits) {
            PrecisionGuard g(digits);
            return std::vector<Real>{Real(to_real(rr) * log(to_real(aa)))};
        };
        PrecisionGuard pg(cfg.precision);
        Real w = w_at(cfg.precision)[0];
        Real err = gz4::detail::pow10(-static_cast<long>(cfg.precision));
        RecognitionReport rep = recognize_log_value(w_at, cfg.precision, err, params);
        r["mode"] = "inject";
        r["inject"] = a.inject;
        r["value"] = real_str(w, cfg.precision);
        r["stable"] = true;
        r["recognition"] = recognition_json(rep, cfg.precision);
        return r;
    }

    GroupSpec G = resolve_group(a.group);
    CMPoint pole = parse_form(a.pole_form, "--pole-form");
    CMPoint at = parse_form(a.at_form, "--at-form");
    if (!G.has_presentation) throw PresentationUnavailable("group presentation unavailable: " + G.label);
    CMPoint key = orbit_key(G, pole);
    for (const auto& e : fricke_quotient(G))
        if (orbit_key(G, transform_form(e.g, at)) == key)
            throw PoleHit("evaluation point " + at.str() + " lies on the singular set of pole " + pole.str());

    PrecisionGuard pg(cfg.precision);
    Real target(cfg.target_error.value_or(1e-9));
    PointH tau = at.tau();
    GreenOptions o = green_options(cfg, a.method);
    EvalResult v1 = green_hat(G, pole, tau, target, o);
    GreenOptions o2 = o;
    if (v1.method == "hat" && v1.cutoff > 0) {
        if (o.method == GreenMethod::direct) o2.direct_cutoff = v1.cutoff * 2;
        else o2.cutoff = static_cast<long long>(v1.cutoff.convert_to<double>()) * 2;
    }
    EvalResult v2 = green_hat(G, pole, tau, target, o2);
    double digits = agreement_digits(v1.value, v2.value);
    bool stable = digits >= 12;

    Real err = std::max(v1.error_bound, Real(abs(v1.value - v2.value)));
    RecognitionReport rep;
    rep.search_parameters = params;
    rep.search_parameters.precision = cfg.precision;
    if (!(abs(v1.value) > 10 * err)) {
        rep.reason = "value vanishes within its error bound";
    } else {
        try {
            rep = recognize_log_value(v1.value, err, params);
        } catch (const PrecisionTooLow& e) {
            rep.reason = std::string("precision too low: ") + e.what();
        }
    }

    r["mode"] = "evaluate";
    r["group"] = a.group;
    r["pole_form"] = pole.str();
    r["pole_disc"] = pole.disc();
    r["at_form"] = at.str();
    r["at_disc"] = at.disc();
    r["tau"] = {real_str(tau.x, cfg.precision), real_str(tau.y, cfg.precision)};
    r["value"] = real_str(v1.value, cfg.precision);
    r["error_bound"] = real_str(v1.error_bound, 6);
    r["cutoff"] = real_str(v1.cutoff, 12);
    r["value_doubled_cutoff"] = real_str(v2.value, cfg.precision);
    r["cutoff_doubled"] = real_str(v2.cutoff, 12);
    r["agreement_digits"] = std::floor(digits * 100) / 100;
    r["stable"] = stable;
    r["recognition"] = recognition_json(rep, cfg.precision);
    return r;
}

struct RegistryArgs {
    bool all = false;
    std::string family;
    std::string depth = "quick";
    std::string report;
    unsigned jobs = 1;
};

namespace detail {

inline FamilyReport worker_crashed(const FamilyRecord& rec, const std::string& why) {
    FamilyReport f;
    f.id = rec.id;
    f.fano = rec.fano.str();
    f.status = rec.status;
    f.group = rec.group;
    f.checks.push_back({"worker", "fail", why, ojson::object(), 0});
    return f;
}

/// One child process per family, at most `jobs` alive. Processes rather than threads:
/// the MPFR default precision is a process-wide global.
inline RegistryReport verify_forked(const std::vector<FamilyRecord>& recs, Depth depth, const VerifyOptions& vo,
                                    unsigned jobs) {
    RegistryReport rep;
    rep.depth = depth;
    for (std::size_t start = 0; start < recs.size(); start += jobs) {
        std::size_t stop = std::min(recs.size(), start + jobs);
        std::vector<std::pair<pid_t, int>> kids;
        for (std::size_t i = start; i < stop; ++i) {
            int fd[2];
            if (pipe(fd) != 0) throw Error("pipe failed");
            std::cout.flush();
            pid_t pid = fork();
            if (pid < 0) throw Error("fork failed");
            if (pid == 0) {
                close(fd[0]);
                std::string out;
                try {
                    out = report_to_json(verify_family(recs[i], depth, vo), false).dump();
                } catch (...) {
                    _exit(3);
                }
                std::size_t off = 0;
                while (off < out.size()) {
                    ssize_t w = write(fd[1], out.data() + off, out.size() - off);
                    if (w <= 0) _exit(2);
                    off += static_cast<std::size_t>(w);
                }
                close(fd[1]);
                _exit(0);
            }
            close(fd[1]);
            kids.emplace_back(pid, fd[0]);
        }
        for (std::size_t k = 0; k < kids.size(); ++k) {
            auto [pid, rfd] = kids[k];
            std::string buf;
            char chunk[4096];
            ssize_t n;
            while ((n = read(rfd, chunk, sizeof chunk)) > 0) buf.append(chunk, static_cast<std::size_t>(n));
            close(rfd);
            int status = 0;
            waitpid(pid, &status, 0);
            const FamilyRecord& rec = recs[start + k];
            if (!WIFEXITED(status) || WEXITSTATUS(status) != 0) {
                rep.families.push_back(worker_crashed(rec, "worker exited abnormally"));
                continue;
            }
            try {
                rep.families.push_back(family_report_from_json(ojson::parse(buf)));
            } catch (const std::exception& e) {
                rep.families.push_back(worker_crashed(rec, std::string("unreadable worker report: ") + e.what()));
            }
        }
    }
    return rep;
}

}  // namespace detail

inline ojson cmd_registry_verify(const RunConfig& cfg, const RegistryArgs& a, bool& hard_failure) {
    if (a.all == !a.family.empty()) throw UsageError("give exactly one of --all, --family");
    Depth d;
    if (a.depth == "quick") d = Depth::quick;
    else if (a.depth == "full") d = Depth::full;
    else throw UsageError("--depth must be quick or full");
    auto recs = load_registry(registry_path(cfg));
    if (!a.all) {
        auto it = std::find_if(recs.begin(), recs.end(), [&](const FamilyRecord& r) { return r.id == a.family; });
        if (it == recs.end()) throw UsageError("unknown family id '" + a.family + "'");
        recs = {*it};
    }
    VerifyOptions vo;
    vo.precision = cfg.precision;
    vo.seed = cfg.seed;
    if (a.jobs < 1) throw UsageError("--jobs must be at least 1");
    RegistryReport rep = a.jobs == 1 ? verify_all(recs, d, vo) : detail::verify_forked(recs, d, vo, a.jobs);
    hard_failure = !rep.ok();
    return report_to_json(rep, cfg.deterministic);
}

// ---------------------------------------------------------------- text rendering

namespace detail {

inline std::string scalar_text(const ojson& v) {
    if (v.is_string()) return v.get<std::string>();
    if (v.is_null()) return "none";
    return v.dump();
}

inline void render(const ojson& j, const std::string& prefix, std::ostream& os) {
    if (j.is_object()) {
        for (auto it = j.begin(); it != j.end(); ++it)
            render(it.value(), prefix.empty() ? it.key() : prefix + "." + it.key(), os);
    } else if (j.is_array() && std::all_of(j.begin(), j.end(), [](const ojson& v) { return v.is_primitive(); })) {
        os << prefix << ":";
        for (std::size_t i = 0; i < j.size(); ++i) os << (i ? ", " : " ") << scalar_text(j[i]);
        os << "\n";
    } else if (j.is_array()) {
        for (std::size_t i = 0; i < j.size(); ++i) render(j[i], prefix + "[" + std::to_string(i) + "]", os);
    } else {
        os << prefix << ": " << scalar_text(j) << "\n";
    }
}

inline void render_registry(const ojson& r, std::ostream& os) {
    for (const auto& f : r["families"]) {
        os << f["id"].get<std::string>() << "  [" << f["status"].get<std::string>() << "]  group "
           << f["group"].get<std::string>() << "\n";
        for (const auto& c : f["checks"]) {
            os << "  " << c["name"].get<std::string>() << ": " << c["outcome"].get<std::string>();
            if (!c["detail"].get<std::string>().empty()) os << " (" << c["detail"].get<std::string>() << ")";
            if (c.contains("seconds")) os << " " << c["seconds"].dump() << "s";
            os << "\n";
        }
    }
    os << "summary:\n";
    render(r["summary"], "  ", os);
}

}  // namespace detail

inline void emit(const RunConfig& cfg, const std::string& command, const ojson& extra_config, const ojson& results,
                 std::ostream& out) {
    ojson env;
    env["schema_version"] = 1;
    env["command"] = command;
    ojson c = cfg.to_json();
    for (auto it = extra_config.begin(); it != extra_config.end(); ++it) c[it.key()] = it.value();
    env["config"] = c;
    env["results"] = results;
    if (cfg.json) {
        out << env.dump(2) << "\n";
        return;
    }
    if (command == "registry verify") {
        detail::render_registry(results, out);
        return;
    }
    detail::render(results, "", out);
}

inline int run(int argc, const char* const* argv, std::ostream& out = std::cout, std::ostream& err = std::cerr) {
    CLI::App app{"Higher Green's functions on Fricke-extended groups and mirror K3 family checks", "gz4"};
    app.require_subcommand(1);
    app.fallthrough();
    RunConfig cfg;
    app.add_option("--prec", cfg.precision, "working precision in decimal digits")->check(CLI::Range(20u, 100000u));
    app.add_option("--target-error", cfg.target_error, "target absolute error for lattice sums")
        ->check(CLI::PositiveNumber);
    app.add_option("--cutoff", cfg.cutoff, "explicit cutoff (Fourier C, or U for --method direct)")
        ->check(CLI::PositiveNumber);
    app.add_flag("--json", cfg.json, "machine-readable output");
    app.add_flag("--deterministic", cfg.deterministic, "omit timing fields");
    app.add_option("--seed", cfg.seed, "seed for randomized checks");
    app.add_option("--registry", cfg.registry, "registry file (overrides GZ4_REGISTRY)");

    SourceArgs per;
    unsigned terms = 10;
    auto* periods = app.add_subcommand("periods", "period sequence a_0..a_n");
    periods->add_option("--family", per.family, "registry id");
    periods->add_option("--phi", per.phi, "inline Laurent polynomial");
    periods->add_option("--terms", terms, "largest index n")->check(CLI::Range(0u, 5000u));

    PfArgs pf;
    auto* pfc = app.add_subcommand("pf", "Picard-Fuchs operator and singular points");
    pfc->add_option("--family", pf.src.family, "registry id");
    pfc->add_option("--phi", pf.src.phi, "inline Laurent polynomial");
    pfc->add_option("--max-order", pf.max_order, "largest order in theta")->check(CLI::Range(1, 12));
    pfc->add_option("--max-degree", pf.max_degree, "largest degree in t")->check(CLI::Range(1, 12));
    pfc->add_option("--terms", pf.terms, "terms used for the fit")->check(CLI::Range(12u, 400u));

    GreenArgs ga;
    auto* green = app.add_subcommand("green", "evaluate G or G_hat");
    green->add_option("--group", ga.group, "group label")->required();
    green->add_option("--pole-form", ga.pole_form, "pole as a form A,B,C")->required();
    green->add_option("--point", ga.point, "evaluation point x,y")->required();
    green->add_flag("--hat", ga.hat, "antisymmetrize over the Fricke-type involutions");
    green->add_option("--method", ga.method, "auto | fourier | direct");

    GzArgs gz;
    auto* gzv = app.add_subcommand("gzverify", "evaluate G_hat at a CM point and search for r*ln(alpha)");
    gzv->add_option("--group", gz.group, "group label");
    gzv->add_option("--pole-form", gz.pole_form, "pole as a form A,B,C");
    gzv->add_option("--at-form", gz.at_form, "evaluation CM point as a form A,B,C");
    gzv->add_option("--scales", gz.scales, "comma-separated rational scales");
    gzv->add_option("--max-degree", gz.max_degree, "largest degree of alpha");
    gzv->add_option("--max-height", gz.max_height, "largest coefficient of the minimal polynomial");
    gzv->add_option("--inject", gz.inject, "test hook: recognize r*ln(a) instead of evaluating");
    gzv->add_option("--method", gz.method, "auto | fourier | direct");

    RegistryArgs ra;
    auto* reg = app.add_subcommand("registry", "registry operations");
    reg->require_subcommand(1);
    auto* ver = reg->add_subcommand("verify", "verify registry families");
    ver->add_flag("--all", ra.all, "all families in table order");
    ver->add_option("--family", ra.family, "one registry id");
    ver->add_option("--depth", ra.depth, "quick | full");
    ver->add_option("--report", ra.report, "write the json report to this path");
    ver->add_option("--jobs", ra.jobs, "worker processes for the fan-out over families");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e, out, err);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e, out, err);
    } catch (const CLI::ParseError& e) {
        app.exit(e, out, err);
        return kUsage;
    }

    try {
        if (*periods) {
            ojson extra;
            extra["terms"] = terms;
            emit(cfg, "periods", extra, cmd_periods(cfg, per, terms), out);
        } else if (*pfc) {
            ojson extra;
            extra["max_order"] = pf.max_order;
            extra["max_degree"] = pf.max_degree;
            extra["terms"] = pf.terms;
            emit(cfg, "pf", extra, cmd_pf(cfg, pf), out);
        } else if (*green) {
            ojson extra;
            extra["method"] = ga.method;
            extra["target_error"] = cfg.target_error.value_or(1e-8);
            emit(cfg, "green", extra, cmd_green(cfg, ga), out);
        } else if (*gzv) {
            if (gz.inject.empty() && (gz.group.empty() || gz.pole_form.empty() || gz.at_form.empty()))
                throw UsageError("gzverify needs --group, --pole-form and --at-form (or --inject)");
            ojson extra;
            extra["method"] = gz.method;
            extra["target_error"] = cfg.target_error.value_or(1e-9);
            emit(cfg, "gzverify", extra, cmd_gzverify(cfg, gz), out);
        } else if (*ver) {
            bool hard = false;
            ojson res = cmd_registry_verify(cfg, ra, hard);
            ojson extra;
            extra["depth"] = ra.depth;
            extra["registry"] = registry_path(cfg);
            if (!ra.report.empty()) {
                RunConfig jc = cfg;
                jc.json = true;
                std::ofstream f(ra.report);
                if (!f) throw UsageError("cannot write report to " + ra.report);
                emit(jc, "registry verify", extra, res, f);
            }
            emit(cfg, "registry verify", extra, res, out);
            return hard ? kFailure : kSuccess;
        }
    } catch (const UsageError& e) {
        err << "error: " << e.what() << "\n";
        return kUsage;
    } catch (const ParseError& e) {
        err << "error: " << e.what() << "\n";
        return kUsage;
    } catch (const PrecisionTooLow& e) {
        err << "error: " << e.what() << "\n";
        return kPrecision;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << "\n";
        return kFailure;
    }
    return kSuccess;
}

}  // namespace gz4::cli
