#include <catch_amalgamated.hpp>

#include <sstream>

#include "etaqfi/verify.hpp"

using namespace etaqfi;
using Catch::Matchers::ContainsSubstring;
using Catch::Matchers::StartsWith;

namespace {

std::vector<std::string> failures(const VerifyReport& rep) {
    std::vector<std::string> out;
    for (const auto& c : rep.checks)
        if (!c.passed) out.push_back(c.name);
    return out;
}

} // namespace

TEST_CASE("pristine fast suite passes for several seeds", "[verify]") {
    for (std::uint64_t seed : {1u, 2u, 17u}) {
        VerifyOptions opt;
        opt.seed = seed;
        const auto rep = run_verify(opt);
        INFO("seed " << seed);
        CHECK(failures(rep).empty());
        CHECK(rep.passed());
        CHECK(rep.checks.size() == 25);
        CHECK(rep.find("figure1 divergence") == nullptr);
    }
}

TEST_CASE("full level adds the figure sweeps", "[verify]") {
    VerifyOptions opt;
    opt.level = VerifyLevel::full;
    opt.workers = 2;
    const auto rep = run_verify(opt);
    CHECK(failures(rep).empty());
    REQUIRE(rep.find("figure1 divergence") != nullptr);
    CHECK(rep.find("figure1 divergence")->passed);
}

TEST_CASE("an injected sign error in Γ is caught by the compatibility check", "[verify][mutation]") {
    VerifyOptions opt;
    opt.faults.flip_connection_sign = true;
    const auto rep = run_verify(opt);
    CHECK_FALSE(rep.passed());
    REQUIRE(rep.find("metric compatibility") != nullptr);
    CHECK_FALSE(rep.find("metric compatibility")->passed);
    CHECK_FALSE(rep.find("norm invariance")->passed);
    CHECK(rep.find("eig_general reconstruction")->passed);
}

TEST_CASE("a missing SQFI renormalization is caught by phase invariance", "[verify][mutation]") {
    VerifyOptions opt;
    opt.faults.skip_sqfi_renormalization = true;
    const auto rep = run_verify(opt);
    CHECK(failures(rep) == std::vector<std::string>{"phase invariance"});
}

TEST_CASE("report printing", "[verify]") {
    VerifyReport rep;
    rep.seed = 7;
    rep.checks.push_back({"alpha", true, 1e-12, 1e-9, "3 cases", 0.0});
    rep.checks.push_back({"beta", false, 0.5, 1e-6, "2 cases", 0.0});
    std::ostringstream os;
    print_report(os, rep);
    const std::string s = os.str();
    CHECK_THAT(s, StartsWith("PASS alpha: 1e-12 (tol 1e-09), 3 cases\nFAIL beta:"));
    CHECK_THAT(s, ContainsSubstring("verify: 1/2 checks passed (fast, seed 7)"));
    CHECK_FALSE(rep.passed());
    CHECK_FALSE(VerifyReport{}.passed());
}
