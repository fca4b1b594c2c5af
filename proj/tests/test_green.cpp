#include "gz4/green.hpp"

#include <gtest/gtest.h>

#include <algorithm>

using namespace gz4;

namespace {

struct Prec30 : ::testing::Test {
    PrecisionGuard guard{30};
};

GroupSpec level6_conjugated() {
    GroupSpec G = parse_group("G0(6)+3");
    G.atkin_lehner.clear();
    G.atkin_lehner.push_back(ProjectiveMatrix(3, -1, 12, -3));
    return G;
}

CMPoint highest_pole(const GroupSpec& G) {
    auto pts = cm_points(G, std::max<i64>(40, 4 * G.level * G.level));
    std::stable_sort(pts.begin(), pts.end(),
                     [](const CMPoint& a, const CMPoint& b) { return a.tau().y > b.tau().y; });
    return pts.front();
}

Real q1_closed(const Real& t) { return t / 2 * log((t + 1) / (t - 1)) - 1; }

}  // namespace

using Legendre = Prec30;
using Green = Prec30;

TEST_F(Legendre, MatchesClosedForm) {
    for (const char* s : {"1.0001", "1.3", "3", "17.5", "1000"}) {
        Real t(s);
        EXPECT_LT(abs(legendre_q1(t) - q1_closed(t)), Real("1e-25") * (1 + q1_closed(t))) << s;
    }
    EXPECT_LT(abs(legendre_q1(Real(3)) - (Real(3) / 2 * log(Real(2)) - 1)), Real("1e-28"));
}

TEST_F(Legendre, ShiftedFormNearOne) {
    Real w("1e-12");
    EXPECT_LT(abs(legendre_q1_shifted(w) - q1_closed(1 + w)) / q1_closed(1 + w), Real("1e-12"));
    EXPECT_THROW(legendre_q1_shifted(Real(0)), DomainError);
}

TEST_F(Legendre, LargeArgumentSeries) {
    Real t(1000);
    Real series = 1 / (3 * t * t) + 1 / (5 * pow(t, 4)) + 1 / (7 * pow(t, 6));
    EXPECT_LT(abs(legendre_q1(t) - series) / series, Real("1e-12"));
}

TEST_F(Green, FourierAgreesWithDirectSum) {
    GroupSpec G = GroupSpec::gamma0(2);
    PointH tau("0.11", "1.3"), sigma = CMPoint(2, 0, 5).tau();
    GreenOptions fo;
    fo.method = GreenMethod::fourier;
    EvalResult fast = green_pair(G, tau, sigma, Real("1e-10"), fo);
    EXPECT_EQ(fast.method, "fourier");
    EvalResult direct = green_pair_direct(G, tau, sigma, Real(3000));
    EXPECT_LT(abs(fast.value - direct.value), direct.error_bound + fast.error_bound);
    EXPECT_LT(direct.error_bound, Real("1e-2"));
}

TEST_F(Green, TwoCutoffsAgreeWithinBounds) {
    GroupSpec G = parse_group("G0(3)+3");
    PointH tau("-0.23", "1.21"), sigma = CMPoint(3, 3, 4).tau();
    EvalResult a = green_pair(G, tau, sigma, Real("1e-8"));
    GreenOptions o;
    o.cutoff = 2 * a.cutoff.convert_to<long long>();
    EvalResult b = green_pair(G, tau, sigma, Real("1e-8"), o);
    EXPECT_LT(abs(a.value - b.value), a.error_bound + b.error_bound);
    EXPECT_LE(a.error_bound, Real("1e-8"));
}

TEST_F(Green, SymmetricInItsArguments) {
    GroupSpec G = GroupSpec::gamma0(2);
    PointH p("0.07", "1.12"), q("-0.31", "1.45");
    EvalResult a = green_pair(G, p, q, Real("1e-9")), b = green_pair(G, q, p, Real("1e-9"));
    EXPECT_LT(abs(a.value - b.value), a.error_bound + b.error_bound);
}

TEST_F(Green, InvariantUnderTheGroup) {
    GroupSpec G = GroupSpec::gamma0(3);
    PointH tau("0.21", "1.05"), sigma = CMPoint(3, 3, 4).tau();
    ProjectiveMatrix g(1, 1, 3, 4);
    PointH gt = moebius_apply(g, tau);
    EvalResult a = green_pair(G, tau, sigma, Real("1e-8")), b = green_pair(G, gt, sigma, Real("1e-8"));
    EXPECT_LT(abs(a.value - b.value), a.error_bound + b.error_bound);
}

TEST_F(Green, HatIsAntiInvariantUnderFricke) {
    GroupSpec G = parse_group("G0(2)+2");
    CMPoint pole(2, 0, 5);
    PointH tau("0.173", "0.84");
    PointH wt = moebius_apply(G.atkin_lehner.front(), tau);
    EvalResult a = green_hat(G, pole, tau, Real("1e-8")), b = green_hat(G, pole, wt, Real("1e-8"));
    EXPECT_LT(abs(a.value + b.value), a.error_bound + b.error_bound);
    EXPECT_GT(abs(a.value), Real("1e-2"));
}

TEST_F(Green, AntiInvariantOnConjugatedPresentation) {
    GroupSpec G = level6_conjugated();
    CMPoint pole = highest_pole(G);
    PointH tau("0.19", "1.4");
    PointH wt = moebius_apply(G.atkin_lehner.front(), tau);
    EvalResult a = green_hat(G, pole, tau, Real("1e-8")), b = green_hat(G, pole, wt, Real("1e-8"));
    EXPECT_LT(abs(a.value + b.value), a.error_bound + b.error_bound);
}

TEST_F(Green, HatVanishesAtFrickeFixedPoint) {
    GroupSpec G = parse_group("G0(2)+2");
    EvalResult v = green_hat(G, CMPoint(2, 2, 3), CMPoint(2, 0, 1).tau(), Real("1e-8"));
    EXPECT_LE(abs(v.value), v.error_bound);
}

TEST_F(Green, DegeneratePoleRejected) {
    GroupSpec G = parse_group("G0(2)+2");
    EXPECT_THROW(green_hat(G, CMPoint(2, 0, 1), PointH("0.1", "1.2"), Real("1e-6")), DegeneratePole);
}

TEST_F(Green, LabelOnlyGroupHasNoPresentation) {
    GroupSpec G = parse_group("8A1+2");
    EXPECT_FALSE(G.has_presentation);
    EXPECT_THROW(green_hat(G, CMPoint(8, 4, 1), PointH("0.1", "1.2"), Real("1e-6")), PresentationUnavailable);
}

TEST_F(Green, EvaluationOnThePoleOrbit) {
    GroupSpec G = GroupSpec::gamma0(2);
    PointH s = CMPoint(2, 0, 5).tau();
    PointH t(s.x + 1, s.y);
    EXPECT_THROW(green_pair(G, t, s, Real("1e-8")), PoleHit);
}

TEST_F(Green, LogarithmicPoleCoefficient) {
    GroupSpec G = parse_group("G0(2)+2");
    GreenSpec spec{G, CMPoint(2, 0, 5), 2};
    PoleFit fit = pole_coefficient([&](const PointH& p) { return green_basic(spec, p, Real("1e-8")); },
                                   spec.pole.tau());
    EXPECT_NEAR(fit.c.convert_to<double>(), 2.0, 0.02);
}

TEST_F(Green, HeckePoleMultiplicity) {
    GroupSpec G = parse_group("G0(3)+3");
    CMPoint b(3, 3, 4);
    GreenSpec spec{G, b, 2};
    Real tgt("1e-8");
    auto reps = hecke_reps_for(G, 2);
    ASSERT_EQ(reps.size(), 3u);
    CMPoint t0 = transform_form(reps[0].inverse(), b);
    CMPoint key = orbit_key(G, b);
    int mult = 0;
    for (const auto& g : reps)
        if (orbit_key(G, transform_form(g, t0)) == key) ++mult;
    auto base = pole_coefficient([&](const PointH& p) { return green_basic(spec, p, tgt); }, b.tau());
    auto hecke = pole_coefficient([&](const PointH& p) { return hecke_translate(G, 2, spec, p, tgt); }, t0.tau());
    EXPECT_NEAR((hecke.c / base.c).convert_to<double>(), double(mult), 0.01 * mult);
}

TEST_F(Green, HeckeNeedsCoprimeIndex) {
    GroupSpec G = parse_group("G0(2)+2");
    GreenSpec spec{G, CMPoint(2, 0, 5), 2};
    EXPECT_THROW(hecke_translate(G, 2, spec, PointH("0.1", "1.2"), Real("1e-6")), NotCoprime);
    HeckeRelation rel;
    rel.terms = {{4, Rat(1)}};
    EXPECT_THROW(green_relation(G, rel, spec.pole, PointH("0.1", "1.2"), Real("1e-6")), NotCoprime);
}

TEST_F(Green, EmptyRelationIsZero) {
    GroupSpec G = parse_group("G0(3)+3");
    EvalResult r = green_relation(G, HeckeRelation{}, CMPoint(3, 3, 4), PointH("0.1", "1.2"), Real("1e-6"));
    EXPECT_EQ(r.value, 0);
}

TEST_F(Green, LaplaceEigenvalue) {
    GroupSpec G = parse_group("G0(3)+3");
    CMPoint b(3, 3, 4);
    Evaluator hat = [&](const PointH& p) { return green_hat(G, b, p, Real("1e-8")); };
    EXPECT_LT(laplacian_residual(hat, PointH("0.2838", "2.503"), Real("0.015")), Real("1e-3"));
    EXPECT_THROW(laplacian_residual(hat, PointH("0.2838", "2.503"), Real("1e-5")), StepTooSmall);
}

TEST_F(Green, ConstantTermDecaysLikeInverseHeight) {
    GroupSpec G = parse_group("G0(2)+2");
    CMPoint b(2, 0, 5);
    EvalResult a = green_hat(G, b, PointH("0.21", "25"), Real("1e-10"));
    EvalResult c = green_hat(G, b, PointH("0.21", "50"), Real("1e-10"));
    EXPECT_LT(abs(25 * a.value - 50 * c.value), Real("1e-6"));
    EXPECT_NEAR((50 * c.value).convert_to<double>(), -9.7003251, 1e-6);
}
