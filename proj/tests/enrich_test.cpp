#include <gtest/gtest.h>

#include <random>

#include "bpmnsec/bpmn/parser.hpp"
#include "bpmnsec/enrich/catalog.hpp"
#include "bpmnsec/enrich/enrich.hpp"
#include "bpmnsec/enrich/nvd.hpp"
#include "bpmnsec/enrich/ttc.hpp"
#include "bpmnsec/enrich/version.hpp"
#include "bpmnsec/mal/corelang.hpp"
#include "bpmnsec/mapping/mapper.hpp"
#include "oracles.hpp"

namespace {

using namespace bpmnsec;
using namespace bpmnsec::enrich;
using testing_support::fixture;

// Reference values computed independently (Python, double precision) for
// the intermediate parameters t1=1, t2=5.8, t3=32.42, k=5, u=0.4.
constexpr double kTtcVm1 = 13.647752673548665;  // V*m = 1
constexpr double kTtcNoExploit = 16.448;        // m = 0

Version v(const char* s) { return *parse_version(s); }

TEST(Version, ParsesAndOrders) {
  EXPECT_EQ(v("4.17.20").parts, (std::vector<unsigned long long>{4, 17, 20}));
  EXPECT_LT(v("4.17.20"), v("4.17.21"));
  EXPECT_LT(v("9.0.9"), v("9.0.30"));
  EXPECT_EQ(v("1.2"), v("1.2.0"));
  EXPECT_LT(v("9.0.0-rc1"), v("9.0.0"));
  EXPECT_LT(v("9.0.0-M1"), v("9.0.0-M2"));
  EXPECT_FALSE(parse_version(""));
  EXPECT_FALSE(parse_version("abc"));
  EXPECT_FALSE(parse_version("1.2-"));
  EXPECT_FALSE(parse_version("1.2 beta"));
}

TEST(Version, Ranges) {
  VersionRange r;
  r.startIncluding = "13.0";
  r.endExcluding = "13.3";
  EXPECT_TRUE(r.contains(v("13.0")));
  EXPECT_TRUE(r.contains(v("13.2")));
  EXPECT_FALSE(r.contains(v("13.3")));
  EXPECT_FALSE(r.contains(v("12.9")));
  VersionRange exact;
  exact.exact = "1.0.0";
  EXPECT_TRUE(exact.contains(v("1.0")));
  EXPECT_FALSE(exact.contains(v("1.0.1")));
  VersionRange bad;
  bad.endIncluding = "not-a-version";
  EXPECT_FALSE(bad.contains(v("1.0")));
}

TEST(Nvd, LoadsBothFeedGenerations) {
  const auto db = load_nvd_dir(fixture("nvd"));
  std::set<std::string> ids;
  for (const auto& r : db.records) ids.insert(r.cveId);
  EXPECT_EQ(ids, (std::set<std::string>{"CVE-2020-1938", "CVE-2021-23337", "CVE-2021-32027", "CVE-2021-23017", "CVE-2021-25329"}));
  EXPECT_EQ(db.warnings.size(), 2u);
  EXPECT_DOUBLE_EQ(db.find("CVE-2020-1938")->cvssBase, 9.8);
  EXPECT_TRUE(db.find("CVE-2020-1938")->exploitAvailable);
  EXPECT_FALSE(db.find("CVE-2021-32027")->exploitAvailable);
  EXPECT_DOUBLE_EQ(db.find("CVE-2021-23017")->cvssBase, 7.7);
}

TEST(Nvd, MatchesByProductAndVersion) {
  const auto db = load_nvd_dir(fixture("nvd"));
  auto ids = [&](const char* product, const char* version) {
    std::set<std::string> out;
    for (const auto& r : match_vulns({product, version, 1.0}, db)) out.insert(r.cveId);
    return out;
  };
  EXPECT_EQ(ids("cpe:2.3:a:apache:tomcat", "9.0.30"), (std::set<std::string>{"CVE-2020-1938", "CVE-2021-25329"}));
  EXPECT_EQ(ids("cpe:2.3:a:apache:tomcat", "9.0.31"), (std::set<std::string>{"CVE-2021-25329"}));
  EXPECT_EQ(ids("cpe:2.3:a:lodash:lodash", "4.17.20"), (std::set<std::string>{"CVE-2021-23337"}));
  EXPECT_TRUE(ids("cpe:2.3:a:lodash:lodash", "4.17.21").empty());
  EXPECT_TRUE(ids("cpe:2.3:a:f5:nginx", "1.20.1").empty());
  EXPECT_EQ(ids("cpe:2.3:a:f5:nginx", "1.20.0"), (std::set<std::string>{"CVE-2021-23017"}));
  EXPECT_THROW(match_vulns({"cpe:2.3:a:f5:nginx", "latest", 1.0}, db), EnrichError);
}

TEST(Nvd, RejectsMalformedDocuments) {
  VulnDb db;
  EXPECT_THROW(load_nvd_document(db, "{", "x"), EnrichError);
  EXPECT_THROW(load_nvd_document(db, "{\"foo\": 1}", "x"), EnrichError);
  EXPECT_THROW(load_nvd_dir("/nonexistent/nvd"), EnrichError);
}

TEST(Ttc, MatchesReferenceValues) {
  const TtcParams p;  // intermediate defaults
  EXPECT_NEAR(expected_ttc_days(3, 1.0 / 3.0, p), kTtcVm1, 1e-12);
  EXPECT_NEAR(expected_ttc_days(1, 1.0, p), kTtcVm1, 1e-12);
  EXPECT_NEAR(expected_ttc_days(2, 0.0, p), kTtcNoExploit, 1e-12);
  EXPECT_TRUE(std::isinf(expected_ttc_days(0, 0.5, p)));
  EXPECT_TRUE(ttc_mcqueen({}, AttackerSkill::Intermediate, {}).is_unreachable());
  VulnRecord r{"CVE-X", {}, 5.0, true};
  const auto d = ttc_mcqueen({r}, AttackerSkill::Intermediate, {});
  ASSERT_TRUE(d.is_exponential());
  EXPECT_NEAR(d.mean(), kTtcVm1, 1e-9);
}

TEST(Ttc, SkillsOrderExpectedTime) {
  const TtcParamSet s;
  for (double vm : {0.0, 0.5, 1.0, 4.0}) {
    const double novice = expected_ttc_days(1, vm, s.novice);
    const double inter = expected_ttc_days(1, vm, s.intermediate);
    const double expert = expected_ttc_days(1, vm, s.expert);
    EXPECT_GE(novice, inter);
    EXPECT_GE(inter, expert);
  }
}

TEST(Ttc, ParameterValidation) {
  TtcParams p;
  p.t2 = 0.5;  // below t1
  EXPECT_THROW(validate_ttc_params(p), EnrichError);
  p = {};
  p.u = 1.5;
  EXPECT_THROW(validate_ttc_params(p), EnrichError);
  p = {};
  p.k = 0.0;
  EXPECT_THROW(validate_ttc_params(p), EnrichError);
  EXPECT_NO_THROW(validate_ttc_params(TtcParams{}));
  EXPECT_EQ(skill_from_name("expert"), AttackerSkill::Expert);
  EXPECT_THROW(skill_from_name("wizard"), ConfigError);
}

TEST(Ttc, JsonRoundTrip) {
  TtcParamSet s;
  s.expert.t3 = 20.0;
  nlohmann::json j = s;
  EXPECT_EQ(j.get<TtcParamSet>(), s);
}

class CatalogTest : public ::testing::Test {
 protected:
  void SetUp() override {
    pm = bpmn::parse_bpmn_file(fixture("italy-invoicing.bpmn"));
    mapped = mapping::map_process(pm, mal::corelang_subset());
    catalog = load_catalog(fixture("catalog.json"));
  }
  bpmn::ProcessModel pm;
  mapping::MappingResult mapped;
  ComponentCatalog catalog;
};

TEST_F(CatalogTest, GlobAndLookup) {
  EXPECT_TRUE(glob_match("ServiceTask_Send*/app", "ServiceTask_SendProd/app"));
  EXPECT_FALSE(glob_match("ServiceTask_Send*/app", "ServiceTask_SendProd/conn"));
  EXPECT_TRUE(glob_match("a?c", "abc"));
  EXPECT_TRUE(glob_match("*", ""));
  EXPECT_EQ(catalog_lookup(catalog, "Participant_Integration/app")->role, "process-engine");
  EXPECT_EQ(catalog_lookup(catalog, "Participant_ERP/app"), nullptr);
}

TEST_F(CatalogTest, SlotsCarryParticipant) {
  const auto slots = resolve_catalog(catalog, mapped.model, pm);
  ASSERT_EQ(slots.size(), 5u);
  for (const auto& s : slots) EXPECT_EQ(s.participant, "Participant_Integration") << s.assetId;
}

TEST_F(CatalogTest, VariantCounts) {
  const auto slots = resolve_catalog(catalog, mapped.model, pm);
  const auto one = generate_variants(slots, OnePerParticipant{});
  const auto all = generate_variants(slots, Exhaustive{});
  const auto floor0 = generate_variants(slots, UsageShareFloor{0.0});
  const auto floorHalf = generate_variants(slots, UsageShareFloor{0.5});
  EXPECT_EQ(one.size(), 4u);
  EXPECT_EQ(all.size(), 8u);
  EXPECT_EQ(floor0, all);
  EXPECT_EQ(floorHalf.size(), 1u);
  for (const auto* vs : {&one, &all}) {
    double sum = 0.0;
    for (const auto& x : *vs) sum += x.weight;
    EXPECT_NEAR(sum, 1.0, 1e-12);
  }
  // Both send services always share a product under one-per-participant.
  for (const auto& x : one)
    EXPECT_EQ(x.assignment.at("ServiceTask_SendProd/app").product, x.assignment.at("ServiceTask_SendTest/app").product);
  EXPECT_EQ(one[0].assignment.at("Participant_Integration/app").version, "4.17.20");
  EXPECT_EQ(one[0].assignment.at("ServiceTask_SendProd/app").product, "cpe:2.3:a:apache:tomcat");
  EXPECT_NEAR(one[0].weight, 0.42, 1e-12);
}

TEST_F(CatalogTest, PruningNames) {
  EXPECT_EQ(pruning_name(parse_pruning("exhaustive")), "exhaustive");
  EXPECT_EQ(pruning_name(parse_pruning("one-per-participant")), "one-per-participant");
  EXPECT_NEAR(std::get<UsageShareFloor>(parse_pruning("share-floor:0.25")).floor, 0.25, 1e-15);
  EXPECT_THROW(parse_pruning("share-floor:x"), ConfigError);
  EXPECT_THROW(parse_pruning("random"), ConfigError);
}

TEST_F(CatalogTest, InvalidCatalogs) {
  EXPECT_THROW(parse_catalog("{\"catalog\": 2, \"entries\": []}"), EnrichError);
  EXPECT_THROW(parse_catalog("{\"catalog\": 1, \"entries\": []}"), EnrichError);
  EXPECT_THROW(parse_catalog(R"({"catalog":1,"entries":[{"match":"a","candidates":[{"product":"p","version":"1","share":0.8},{"product":"q","version":"1","share":0.8}]}]})"),
               EnrichError);
  EXPECT_THROW(parse_catalog(R"({"catalog":1,"entries":[{"match":"a","candidates":[{"product":"p","version":"x"}]}]})"), EnrichError);
  EXPECT_THROW(load_catalog("/nonexistent.json"), EnrichError);
}

TEST_F(CatalogTest, EnrichAddsVulnerabilitiesAndExploits) {
  const auto slots = resolve_catalog(catalog, mapped.model, pm);
  const auto variants = generate_variants(slots, OnePerParticipant{});
  const auto db = load_nvd_dir(fixture("nvd"));
  const auto e = enrich::enrich(mapped.model, variants[0], db, AttackerSkill::Intermediate, {});
  const auto m = e.combined();
  EXPECT_NE(m.find("Participant_Integration/app/vuln/CVE-2021-23337"), nullptr);
  EXPECT_NE(m.find("Participant_Integration/app/exploit/CVE-2021-23337"), nullptr);
  EXPECT_NE(m.find("ServiceTask_SendProd/app/vuln/CVE-2021-25329"), nullptr);
  EXPECT_EQ(m.find("ServiceTask_SendProd/app/exploit/CVE-2021-25329"), nullptr);
  EXPECT_EQ(m.find("ServiceTask_StoreRequest/app/exploit/CVE-2021-32027"), nullptr);
  EXPECT_NO_THROW(mapping::validate_instance(m, mal::corelang_subset()));

  const auto overrides = e.ttc_overrides();
  EXPECT_NEAR(overrides.at({"Participant_Integration/app", "exploit"}).mean(), kTtcVm1, 1e-9);
  EXPECT_NEAR(overrides.at({"ServiceTask_SendProd/app", "exploit"}).mean(), kTtcVm1, 1e-9);
  EXPECT_NEAR(overrides.at({"ServiceTask_StoreRequest/app", "exploit"}).mean(), kTtcNoExploit, 1e-9);
  for (const auto& a : e.addedAssets) EXPECT_TRUE(mapping::is_synthetic(a.provenance.at(0)));
  // The base model is left as mapped.
  EXPECT_EQ(e.base, mapped.model);
}

TEST_F(CatalogTest, EnrichRejectsNonApplications) {
  ConfigVariant bad{"vx", {{"MessageFlow_Request/conn", {"cpe:2.3:a:x:y", "1.0", 1.0}}}, 1.0};
  EXPECT_THROW(enrich::enrich(mapped.model, bad, {}, AttackerSkill::Intermediate, {}), EnrichError);
  ConfigVariant missing{"vy", {{"nope/app", {"cpe:2.3:a:x:y", "1.0", 1.0}}}, 1.0};
  EXPECT_THROW(enrich::enrich(mapped.model, missing, {}, AttackerSkill::Intermediate, {}), EnrichError);
}

}  // namespace
