#include <doctest.h>

#include "medaudit/error.hpp"
#include "medaudit/hmda.hpp"
#include "medaudit/rng.hpp"

#include <algorithm>
#include <map>
#include <numeric>
#include <sstream>

using namespace medaudit;

namespace {

LarRecord eligible(bool black, bool denied, double rate = 6.5) {
    LarRecord r;
    r.activity_year = "2022";
    r.state_code = "NY";
    r.county_code = "36061";
    r.census_tract = "36061000100";
    r.action_taken = denied ? "3" : "1";
    r.loan_type = "1";
    r.loan_purpose = "1";
    r.lien_status = "1";
    r.derived_race = black ? "Black or African American" : "White";
    r.derived_ethnicity = "Not Hispanic or Latino";
    r.loan_amount = "300000";
    r.property_value = "400000";
    r.income = "150";
    r.debt_to_income_ratio = "40";
    r.interest_rate = denied ? "NA" : std::to_string(rate);
    r.denial_reasons = {denied ? "1" : "10", "", "", ""};
    r.tract_minority_population_percent = "30.5";
    r.tract_to_msa_income_percentage = "110";
    return r;
}

std::vector<LarRecord> small_cohort(std::size_t n, std::uint64_t seed) {
    Rng rng(seed);
    std::vector<LarRecord> out;
    for (std::size_t i = 0; i < n; ++i) {
        const bool black = i % 5 == 0;
        const bool denied = i % 3 == 0;
        auto r = eligible(black, denied, 5.0 + rng.uniform() * 3);
        r.income = std::to_string(50 + static_cast<int>(rng.uniform() * 300));
        r.census_tract = "3606100010" + std::to_string(i % 3);
        out.push_back(r);
    }
    return out;
}

std::string header_line() {
    std::ostringstream s;
    write_lar(s, {});
    return s.str();
}

}  // namespace

TEST_CASE("parse_lar: header only, round trip, schema") {
    std::istringstream empty(header_line());
    const auto none = parse_lar(empty);
    CHECK(none.records.empty());
    CHECK(none.skipped == 0);

    std::vector<LarRecord> three = {eligible(false, false), eligible(true, true), eligible(false, true)};
    three[1].loan_amount = "Exempt";
    three[2].derived_race = "Joint, \"quoted\"";
    std::ostringstream out;
    write_lar(out, three);
    std::istringstream in(out.str());
    const auto back = parse_lar(in);
    REQUIRE(back.records.size() == 3);
    CHECK(back.records[1].loan_amount == "Exempt");
    CHECK(back.records[2].derived_race == "Joint, \"quoted\"");
    for (std::size_t i = 0; i < 3; ++i) {
        CHECK(back.records[i].interest_rate == three[i].interest_rate);
        CHECK(back.records[i].denial_reasons == three[i].denial_reasons);
        CHECK(back.records[i].census_tract == three[i].census_tract);
    }

    std::istringstream bad("state_code,action_taken\nNY,1\n");
    CHECK_THROWS_AS(parse_lar(bad), Error);
    try {
        std::istringstream again("state_code,action_taken\nNY,1\n");
        parse_lar(again);
    } catch (const Error& e) {
        CHECK(e.kind() == ErrorKind::SchemaMismatch);
    }

    std::istringstream ragged(out.str() + "NY,1\n");
    CHECK(parse_lar(ragged).skipped == 1);
}

TEST_CASE("build_cohort filters and attrition") {
    auto records = small_cohort(60, 1);
    auto withdrawn = eligible(false, false);
    withdrawn.action_taken = "4";
    auto no_value = eligible(true, false);
    no_value.property_value = "NA";
    auto exempt_amount = eligible(false, false);
    exempt_amount.loan_amount = "Exempt";
    auto exempt_dti = eligible(false, false);
    exempt_dti.debt_to_income_ratio = "Exempt";
    auto hispanic_white = eligible(false, false);
    hispanic_white.derived_ethnicity = "Hispanic or Latino";
    auto fha = eligible(false, false);
    fha.loan_type = "2";
    auto nj = eligible(true, true);
    nj.state_code = "NJ";
    records.insert(records.end(), {withdrawn, no_value, exempt_amount, exempt_dti, hispanic_white, fha, nj});

    const auto cohort = build_cohort(records);
    const auto& r = cohort.report;
    CHECK(cohort.dataset.n() == 60);
    CHECK(r.n_input == records.size());
    CHECK(r.n_input == cohort.dataset.n() + r.excluded());
    std::map<std::string, std::size_t> by_reason(r.attrition.begin(), r.attrition.end());
    CHECK(by_reason["action taken"] == 1);
    CHECK(by_reason["cannot derive LTV"] == 2);
    CHECK(by_reason["DTI missing or exempt"] == 1);
    CHECK(by_reason["race/ethnicity"] == 1);
    CHECK(by_reason["loan type"] == 1);
    CHECK(by_reason["state"] == 1);
    CHECK(r.n_comparison == 12);
    CHECK(r.n_reference == 48);
    CHECK(cohort.dataset.m_names() ==
          std::vector<std::string>{"dti", "ltv", "income_quintile", "credit_score_quintile"});
    CHECK(cohort.dataset.m()(0, 1) == doctest::Approx(75.0));
    CHECK(r.descriptives.size() == 6);
    CHECK(r.groups[1].denial_rate == doctest::Approx(4.0 / 12.0));
    CHECK(r.rate_imputed == 0);

    const Json j = to_json(r);
    CHECK(j["n_cohort"] == 60);
    CHECK(j["config"]["state"] == "NY");

    CHECK_THROWS_AS(build_cohort({withdrawn, nj}), Error);
    try {
        build_cohort({withdrawn});
    } catch (const Error& e) {
        CHECK(e.kind() == ErrorKind::EmptyCohort);
    }
}

TEST_CASE("attrition accounting holds on random record mixes") {
    Rng rng(9);
    for (int rep = 0; rep < 20; ++rep) {
        std::vector<LarRecord> records;
        for (int i = 0; i < 200; ++i) {
            auto r = eligible(rng.bernoulli(0.3), rng.bernoulli(0.3), 4 + rng.uniform() * 4);
            const double u = rng.uniform();
            if (u < 0.05) r.action_taken = "4";
            else if (u < 0.1) r.property_value = "";
            else if (u < 0.15) r.debt_to_income_ratio = ">60%";
            else if (u < 0.2) r.income = "NA";
            else if (u < 0.25) r.lien_status = "2";
            else if (u < 0.3) r.derived_race = "Asian";
            else if (u < 0.35) r.tract_minority_population_percent = "";
            records.push_back(r);
        }
        const auto cohort = build_cohort(records);
        CHECK(cohort.report.n_input == cohort.dataset.n() + cohort.report.excluded());
    }
}

TEST_CASE("derive_quintiles") {
    std::vector<double> ten = {7, 3, 9, 1, 10, 4, 2, 8, 6, 5};
    const std::vector<std::string> one(10, "c");
    const auto q = derive_quintiles(ten, one);
    for (int k = 1; k <= 5; ++k) CHECK(std::count(q.begin(), q.end(), k) == 2);
    for (std::size_t i = 0; i < 10; ++i) CHECK(q[i] == (static_cast<int>(ten[i]) + 1) / 2);

    const auto same = derive_quintiles(std::vector<double>(7, 2.5), std::vector<std::string>(7, "x"));
    CHECK(std::all_of(same.begin(), same.end(), [](int v) { return v == 3; }));

    Rng rng(3);
    std::vector<double> values;
    std::vector<std::string> keys;
    for (int i = 0; i < 300; ++i) {
        values.push_back(std::floor(rng.uniform() * 1000) + i * 1e-6);
        keys.push_back(i % 4 == 0 ? "a" : i % 4 == 1 ? "b" : i % 4 == 2 ? "c" : "tiny" + std::to_string(i));
    }
    const auto base = derive_quintiles(values, keys);
    CHECK(base == derive_quintiles(values, keys));
    std::vector<std::size_t> order(values.size());
    std::iota(order.begin(), order.end(), 0);
    for (std::size_t i = order.size() - 1; i > 0; --i) std::swap(order[i], order[rng.index(i + 1)]);
    std::vector<double> v2;
    std::vector<std::string> k2;
    for (auto i : order) {
        v2.push_back(values[i]);
        k2.push_back(keys[i]);
    }
    const auto shuffled = derive_quintiles(v2, k2);
    for (std::size_t t = 0; t < order.size(); ++t) CHECK(shuffled[t] == base[order[t]]);

    // Singleton cells are pooled: 75 tiny cells form one ranking.
    std::vector<int> pooled;
    for (std::size_t i = 0; i < keys.size(); ++i)
        if (keys[i].rfind("tiny", 0) == 0) pooled.push_back(base[i]);
    for (int k = 1; k <= 5; ++k) CHECK(std::count(pooled.begin(), pooled.end(), k) == 15);
    CHECK_THROWS_AS(derive_quintiles({1.0}, {}), Error);
}

TEST_CASE("DTI coding") {
    CHECK(dti_value("<20%") == 10.0);
    CHECK(dti_value("20%-<30%") == 25.0);
    CHECK(dti_value("30%-<36%") == 33.0);
    CHECK(dti_value("41") == 41.0);
    CHECK(dti_value("50%-60%") == 55.0);
    CHECK(dti_value(">60%") == 65.0);
    CHECK_FALSE(dti_value("Exempt"));
    CHECK_FALSE(dti_value("NA"));
    CHECK_FALSE(dti_value(""));
}

TEST_CASE("credit score imputation") {
    std::vector<double> rates;
    for (int i = 0; i < 100; ++i) rates.push_back(3.0 + 0.05 * i);
    const auto cuts = rate_quintiles(rates);
    CHECK(cuts.median_quintile == 3);
    const CreditScoreMapping mapping;
    CHECK(impute_credit_score_quintile(eligible(false, false, 3.1), false, cuts, mapping) == 5);
    CHECK(impute_credit_score_quintile(eligible(false, false, 7.9), false, cuts, mapping) == 1);
    auto history = eligible(true, true);
    history.denial_reasons = {"1", "3", "", ""};
    CHECK(impute_credit_score_quintile(history, true, cuts, mapping) == 1);
    CHECK(impute_credit_score_quintile(eligible(true, true), true, cuts, mapping) == 2);
    auto no_rate = eligible(false, false);
    no_rate.interest_rate = "NA";
    bool missing = false;
    CHECK(impute_credit_score_quintile(no_rate, false, cuts, mapping, &missing) == 3);
    CHECK(missing);

    auto records = small_cohort(40, 2);
    records[1].interest_rate = "Exempt";
    CHECK(build_cohort(records).report.rate_imputed == 1);
}

TEST_CASE("Welch t-test p-values") {
    CHECK(welch_p_value({1, 2, 3, 4}, {2, 4, 6, 8, 10}) == doctest::Approx(0.06913359319239236).epsilon(1e-9));
    CHECK(welch_p_value({0.5, 1.5, 0.2, 0.9, 1.1, 1.3}, {2.0, 1.7, 2.4, 1.1}) ==
          doctest::Approx(0.040313411389245414).epsilon(1e-9));
    CHECK(welch_p_value({1, 1, 1}, {1, 1}) == 1.0);
}

TEST_CASE("cohort config JSON round trip") {
    CohortConfig c;
    c.state = "CA";
    c.year = "2021";
    c.credit_score.credit_history_codes = {"3", "6"};
    c.comparison_race = "Asian";
    const auto back = cohort_config_from_json(to_json(c));
    CHECK(to_json(back) == to_json(c));
    CHECK_THROWS_AS(cohort_config_from_json(Json{{"credit_score", {{"credit_history_quintile", 9}}}}), Error);
}
