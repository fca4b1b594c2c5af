#include "gz4/registry.hpp"

#include <gtest/gtest.h>

#include <fstream>
#include <sstream>

using namespace gz4;

namespace {

std::string registry_text() {
    std::ifstream f(GZ4_DEFAULT_REGISTRY);
    std::stringstream ss;
    ss << f.rdbuf();
    return ss.str();
}

const FamilyRecord& by_id(const std::vector<FamilyRecord>& recs, const std::string& id) {
    for (const auto& r : recs)
        if (r.id == id) return r;
    throw std::runtime_error("missing " + id);
}

const CheckResult& check(const FamilyReport& f, const std::string& name) {
    for (const auto& c : f.checks)
        if (c.name == name) return c;
    throw std::runtime_error("no check " + name);
}

}  // namespace

TEST(Registry, TwentyThreeRecordsInTableOrder) {
    auto recs = load_registry(GZ4_DEFAULT_REGISTRY);
    ASSERT_EQ(recs.size(), 23u);
    const char* order[] = {"2,1", "3,1", "4,1", "5,1", "6,1", "7,1", "8,1", "9,1", "11,1", "2,2", "3,2", "4,2",
                           "5,2", "3,3", "2,4", "2-6", "2-12", "2-21", "2-32", "3-1", "3-13", "3-27", "4-1"};
    for (std::size_t i = 0; i < recs.size(); ++i) EXPECT_EQ(recs[i].id, order[i]);
}

TEST(Registry, TetrahedralRow) {
    auto recs = load_registry(GZ4_DEFAULT_REGISTRY);
    const auto& r = by_id(recs, "2,4");
    EXPECT_EQ(r.phi, "x+y+z+1/(x*y*z)");
    EXPECT_EQ(r.group, "8A1+2");
    EXPECT_FALSE(r.fano.mori_mukai);
    EXPECT_EQ(r.status, "proved");
    EXPECT_EQ(r.polynomial().size(), 4u);
}

TEST(Registry, MarkersAndStatus) {
    auto recs = load_registry(GZ4_DEFAULT_REGISTRY);
    std::vector<std::string> ext, conj;
    for (const auto& r : recs) {
        if (r.external()) ext.push_back(r.id);
        if (r.conjectural()) conj.push_back(r.id);
    }
    EXPECT_EQ(ext, (std::vector<std::string>{"2-6", "2-12", "3-1"}));
    EXPECT_EQ(conj, (std::vector<std::string>{"2-6", "2-12", "2-21", "2-32", "3-13"}));
    EXPECT_EQ(by_id(recs, "2-12").external_ref(), "#1193");
    EXPECT_THROW(by_id(recs, "2-12").polynomial(), DomainError);
}

TEST(Registry, ExplicitGeneratorsOverrideTheLabel) {
    auto recs = load_registry(GZ4_DEFAULT_REGISTRY);
    GroupSpec G = by_id(recs, "4-1").group_spec();
    ASSERT_EQ(G.atkin_lehner.size(), 1u);
    EXPECT_EQ(G.atkin_lehner[0], ProjectiveMatrix(3, -1, 12, -3));
    EXPECT_EQ(by_id(recs, "3-1").group_spec().atkin_lehner.size(), 2u);
    EXPECT_FALSE(by_id(recs, "2-21").group_spec().has_presentation);
}

TEST(Registry, RoundTrip) {
    auto recs = load_registry(GZ4_DEFAULT_REGISTRY);
    std::string text = serialize_registry(recs);
    EXPECT_EQ(parse_registry(text), recs);
    EXPECT_EQ(serialize_registry(parse_registry(text)), text);
}

TEST(Registry, MissingRowViolatesInvariants) {
    auto j = ojson::parse(registry_text());
    j["families"].erase(4);
    EXPECT_THROW(parse_registry(j.dump()), InvariantViolation);
}

TEST(Registry, DuplicateRowViolatesInvariants) {
    auto j = ojson::parse(registry_text());
    j["families"][1] = j["families"][0];
    EXPECT_THROW(parse_registry(j.dump()), InvariantViolation);
}

TEST(Registry, WrongLevelGroupViolatesInvariants) {
    auto j = ojson::parse(registry_text());
    j["families"][0]["group"] = "G0(3)+3";
    EXPECT_THROW(parse_registry(j.dump()), InvariantViolation);
}

TEST(Registry, ConjecturalSetIsFixed) {
    auto j = ojson::parse(registry_text());
    j["families"][0]["status"] = "conjectural";
    EXPECT_THROW(parse_registry(j.dump()), InvariantViolation);
}

TEST(Registry, MalformedInput) {
    EXPECT_THROW(parse_registry("{"), ParseError);
    EXPECT_THROW(parse_registry("{\"schema_version\": 1}"), ParseError);
    EXPECT_THROW(parse_registry("{\"schema_version\": 2, \"families\": []}"), ParseError);
    auto j = ojson::parse(registry_text());
    j["families"][3]["phi"] = "(1+x";
    try {
        parse_registry(j.dump());
        FAIL() << "bad polynomial accepted";
    } catch (const ParseError& e) {
        EXPECT_NE(std::string(e.what()).find("row 5,1"), std::string::npos) << e.what();
    }
    EXPECT_THROW(load_registry("/nonexistent/families.json"), ParseError);
}

TEST(Registry, QuickVerifyOfFirstFamily) {
    auto recs = load_registry(GZ4_DEFAULT_REGISTRY);
    FamilyReport f = verify_family(recs[0], Depth::quick);
    EXPECT_FALSE(f.hard_failure());
    EXPECT_TRUE(f.fully_checked());
    EXPECT_EQ(check(f, "polytope").outcome, "pass");
    EXPECT_EQ(check(f, "periods").outcome, "pass");
    EXPECT_EQ(check(f, "recurrence").outcome, "pass");
}

TEST(Registry, ExternalRowsAreSkipped) {
    auto recs = load_registry(GZ4_DEFAULT_REGISTRY);
    FamilyReport f = verify_family(by_id(recs, "2-6"), Depth::quick);
    EXPECT_FALSE(f.hard_failure());
    EXPECT_FALSE(f.fully_checked());
    for (const auto& c : f.checks) {
        EXPECT_EQ(c.outcome, "skipped");
        EXPECT_NE(c.detail.find("external:#3873.2"), std::string::npos);
    }
}

TEST(Registry, FullVerifyOfLevelTwo) {
    auto recs = load_registry(GZ4_DEFAULT_REGISTRY);
    FamilyReport f = verify_family(recs[0], Depth::full);
    EXPECT_FALSE(f.hard_failure());
    for (const char* name : {"singularities", "mirror_map", "group", "green_smoke"})
        EXPECT_EQ(check(f, name).outcome, "pass") << name << ": " << check(f, name).detail;
}

TEST(Registry, LabelOnlyGroupSkipsGreenChecks) {
    auto recs = load_registry(GZ4_DEFAULT_REGISTRY);
    FamilyReport f = verify_family(by_id(recs, "2,4"), Depth::full);
    EXPECT_EQ(check(f, "group").outcome, "skipped");
    EXPECT_EQ(check(f, "green_smoke").outcome, "skipped");
    EXPECT_EQ(check(f, "mirror_map").outcome, "pass");
}

TEST(Registry, EmptyVerificationIsOk) {
    RegistryReport r = verify_all({}, Depth::quick);
    EXPECT_TRUE(r.ok());
    ojson j = report_to_json(r, true);
    EXPECT_EQ(j["summary"]["records"], 0);
    EXPECT_EQ(j["families"].size(), 0u);
}

TEST(Registry, DeterministicReportHasNoTimings) {
    auto recs = load_registry(GZ4_DEFAULT_REGISTRY);
    RegistryReport r = verify_all({recs[1]}, Depth::quick);
    EXPECT_EQ(report_to_json(r, true).dump().find("seconds"), std::string::npos);
    EXPECT_NE(report_to_json(r, false).dump().find("seconds"), std::string::npos);
    FamilyReport back = family_report_from_json(report_to_json(r.families[0], false));
    EXPECT_EQ(report_to_json(back, true), report_to_json(r.families[0], true));
}
