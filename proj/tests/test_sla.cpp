#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <fstream>
#include <sstream>

#include "chronowatt/sla.hpp"

using namespace chronowatt;

namespace {

// Published matrix, rows top to bottom, columns MC BFD Video Voice.
const char* const kPublished[6][4] = {
    {"yes", "yes", "yes", "yes"}, {"yes", "yes", "yes", "yes"}, {"?", "yes", "yes", "yes"},
    {"no", "?", "?", "no"},       {"no", "no", "no", "no"},     {"no", "no", "no", "no"},
};

Verdict cell(const char* s)
{
    if (std::string(s) == "yes")
        return Verdict::Yes;
    if (std::string(s) == "no")
        return Verdict::No;
    return Verdict::Marginal;
}

} // namespace

TEST_CASE("default budgets")
{
    const auto t = default_sla_table();
    CHECK(t.budget(AppClass::Video) == 10 * kNanosPerMilli);
    CHECK(t.budget(AppClass::Voice) == 30 * kNanosPerMilli);
    CHECK(t.budget(AppClass::BFD) == 50 * kNanosPerMilli);
    CHECK(t.budget(AppClass::MC).has_value());
    CHECK_FALSE(t.budget(AppClass::BestEffort).has_value());
}

TEST_CASE("shipped matrix equals the published table")
{
    const auto t = default_sla_table();
    const auto comps = shipped_components(t);
    REQUIRE(comps.size() == 6);
    const Nanos wakes[6] = {10 * kNanosPerMicro, 100 * kNanosPerMicro, 90,
                            30 * kNanosPerMilli, 2 * kNanosPerSecond,  100 * kNanosPerSecond};
    for (std::size_t r = 0; r < 6; ++r)
        CHECK(comps[r].wake_time == wakes[r]);
    const std::vector<AppClass> classes(kMatrixClasses.begin(), kMatrixClasses.end());
    const auto m = tolerance_matrix(t, comps, classes);
    for (std::size_t r = 0; r < 6; ++r)
        for (std::size_t c = 0; c < 4; ++c)
            CHECK(m[r][c] == cell(kPublished[r][c]));
}

TEST_CASE("listed rows")
{
    const auto t = default_sla_table();
    const ComponentWake link{ComponentKind::PHY_Link, 10 * kNanosPerMicro, ""};
    const ComponentWake sram{ComponentKind::SRAM_Bank, 30 * kNanosPerMilli, ""};
    const ComponentWake cpu{ComponentKind::EmbeddedCPU, 2 * kNanosPerSecond, ""};
    CHECK(may_sleep(t, link, link.wake_time, AppClass::Voice));
    CHECK_FALSE(may_sleep(t, sram, sram.wake_time, AppClass::Voice));
    for (AppClass c : kMatrixClasses)
        CHECK_FALSE(may_sleep(t, cpu, cpu.wake_time, c));
    // A marginal listed cell resolves per policy.
    CHECK_FALSE(may_sleep(t, sram, sram.wake_time, AppClass::BFD, MarginalPolicy::TreatAsNo));
    CHECK(may_sleep(t, sram, sram.wake_time, AppClass::BFD, MarginalPolicy::TreatAsYes));
    // BestEffort carries no budget.
    CHECK(may_sleep(t, cpu, cpu.wake_time, AppClass::BestEffort));
}

TEST_CASE("threshold verdicts")
{
    const AppClassSpec voice{AppClass::Voice, 30 * kNanosPerMilli};
    CHECK(threshold_verdict(9'999'999, voice) == Verdict::Yes);
    CHECK(threshold_verdict(10 * kNanosPerMilli, voice) == Verdict::Marginal);
    CHECK(threshold_verdict(90 * kNanosPerMilli, voice) == Verdict::Marginal);
    CHECK(threshold_verdict(90 * kNanosPerMilli + 1, voice) == Verdict::No);
    CHECK(threshold_verdict(kNanosPerSecond, AppClassSpec{AppClass::BestEffort, std::nullopt}) == Verdict::Yes);

    const auto t = default_sla_table();
    // Unlisted: marginal delays pass only under TreatAsYes and strictly below budget.
    CHECK_FALSE(may_sleep(t, std::nullopt, 20 * kNanosPerMilli, AppClass::Voice));
    CHECK(may_sleep(t, std::nullopt, 20 * kNanosPerMilli, AppClass::Voice, MarginalPolicy::TreatAsYes));
    CHECK_FALSE(may_sleep(t, std::nullopt, 30 * kNanosPerMilli, AppClass::Voice, MarginalPolicy::TreatAsYes));
    // A listed kind with a different wake time falls back to the threshold.
    const ComponentWake slow_link{ComponentKind::PHY_Link, 50 * kNanosPerMilli, ""};
    CHECK_FALSE(may_sleep(t, slow_link, slow_link.wake_time, AppClass::Video));
}

TEST_CASE("user components")
{
    const auto t = default_sla_table();
    const std::vector<AppClass> classes(kMatrixClasses.begin(), kMatrixClasses.end());
    const std::vector<ComponentWake> instant{{ComponentKind::LookupEngine, 0, "instant"}};
    const auto fast = tolerance_matrix(t, instant, classes);
    for (auto v : fast[0])
        CHECK(v == Verdict::Yes);
    const std::vector<ComponentWake> glacial{{ComponentKind::LookupEngine, 100 * kNanosPerSecond, "glacial"}};
    const auto slow = tolerance_matrix(t, glacial, classes);
    for (auto v : slow[0])
        CHECK(v == Verdict::No);
    CHECK_THROWS_AS(tolerance_matrix(t, {}, classes), InputError);
}

TEST_CASE("policy file round trip")
{
    const auto t = default_sla_table();
    const auto again = load_sla_table(t.to_json());
    CHECK(again.to_json() == t.to_json());
    CHECK_THROWS_AS(SlaTable({{AppClass::Voice, 0}}, {}), ParameterError);
    auto doc = t.to_json();
    doc["format_version"] = 2;
    CHECK_THROWS_AS(load_sla_table(doc), ParameterError);
    CHECK_THROWS_AS(load_sla_table_file("/nonexistent/sla.json"), InputError);
    const auto shipped = load_sla_table_file(CHRONOWATT_CONFIG_DIR "/sla_policy.json");
    CHECK(shipped.to_json() == t.to_json());
}

TEST_CASE("matrix printing")
{
    const auto t = default_sla_table();
    const auto comps = shipped_components(t);
    const std::vector<AppClass> classes(kMatrixClasses.begin(), kMatrixClasses.end());
    const auto m = tolerance_matrix(t, comps, classes);
    std::ostringstream csv;
    print_matrix_csv(csv, comps, classes, m);
    std::istringstream lines(csv.str());
    std::string line;
    std::getline(lines, line);
    CHECK(line == "component,kind,wake_ns,MC,BFD,Video,Voice");
    for (std::size_t r = 0; r < 6; ++r) {
        REQUIRE(std::getline(lines, line));
        std::string expect;
        for (std::size_t c = 0; c < 4; ++c)
            expect += std::string(",") + (std::string(kPublished[r][c]) == "?" ? "marginal" : kPublished[r][c]);
        CHECK(line.ends_with(expect));
    }
    std::ostringstream text;
    print_matrix_text(text, comps, classes, m);
    CHECK(text.str().find("marginal") != std::string::npos);
}
