#pragma once

#include "medaudit/dataset.hpp"
#include "medaudit/json.hpp"

#include <array>
#include <istream>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace medaudit {

// One LAR row, fields kept exactly as they appear in the file.
struct LarRecord {
    std::string activity_year;
    std::string state_code;
    std::string county_code;
    std::string census_tract;
    std::string action_taken;
    std::string loan_type;
    std::string loan_purpose;
    std::string lien_status;
    std::string derived_race;
    std::string derived_ethnicity;
    std::string loan_amount;
    std::string property_value;
    std::string income;
    std::string debt_to_income_ratio;
    std::string interest_rate;
    std::array<std::string, 4> denial_reasons;
    std::string tract_minority_population_percent;
    std::string tract_to_msa_income_percentage;
};

struct LarParseResult {
    std::vector<LarRecord> records;
    std::size_t skipped = 0;  // rows whose field count does not match the header
};

// Throws SchemaMismatch when a required column is absent. activity_year and
// denial_reason-2..4 are optional.
LarParseResult parse_lar(std::istream& csv);

// Writes the columns parse_lar reads, in a fixed order.
void write_lar(std::ostream& out, const std::vector<LarRecord>& records);

struct CreditScoreMapping {
    std::vector<std::string> credit_history_codes{"3"};
    int credit_history_quintile = 1;
    int other_denial_quintile = 2;
};

struct CohortConfig {
    std::string state = "NY";
    std::string year;  // empty accepts any activity_year
    std::string loan_type = "1";
    std::string loan_purpose = "1";
    std::string lien_status = "1";
    std::string originated_code = "1";
    std::string denied_code = "3";
    std::string reference_race = "White";
    std::string reference_ethnicity = "Not Hispanic or Latino";
    std::string comparison_race = "Black or African American";
    std::string comparison_ethnicity;  // empty accepts any ethnicity
    int tract_min_members = 25;        // smaller tracts use the county cell
    CreditScoreMapping credit_score;
};

Json to_json(const CohortConfig& config);
CohortConfig cohort_config_from_json(const Json& j, const CohortConfig& defaults = {});

// Rank-based quintiles within each cell. Ties share their mid-rank, so a cell
// of equal values is all quintile 3. Cells with fewer than `min_cell` members
// are pooled into one residual cell.
std::vector<int> derive_quintiles(const std::vector<double>& values, const std::vector<std::string>& cell_keys,
                                  std::size_t min_cell = 5);

// Numeric DTI codes pass through; bins map to midpoints. nullopt for
// "Exempt", "NA", empty, or anything unrecognised.
std::optional<double> dti_value(const std::string& raw);
Json dti_coding_table();

struct RateQuintiles {
    std::array<double, 4> cuts{};  // 20/40/60/80 percentiles of originated rates
    int median_quintile = 3;       // used when an originated loan has no rate
};

RateQuintiles rate_quintiles(const std::vector<double>& originated_rates);

// Originated: 6 - rate quintile, so the lowest rates give 5. Denied: the
// configured reason mapping. `rate_missing` is set when the median fallback
// was used.
int impute_credit_score_quintile(const LarRecord& record, bool denied, const RateQuintiles& rates,
                                 const CreditScoreMapping& mapping, bool* rate_missing = nullptr);

struct GroupDescriptives {
    std::size_t n = 0;
    double denial_rate = 0.0;
    double dti = 0.0;
    double ltv = 0.0;
    double income = 0.0;
    double credit_score_quintile = 0.0;
    double tract_minority = 0.0;
};

struct DescriptiveRow {
    std::string variable;
    double reference = 0.0;
    double comparison = 0.0;
    double difference = 0.0;
    double p_value = 1.0;  // Welch two-sample t-test
};

// Two-sided Welch two-sample t-test p-value.
double welch_p_value(const std::vector<double>& x0, const std::vector<double>& x1);

struct CohortReport {
    CohortConfig config;
    std::size_t n_input = 0;
    std::size_t skipped_rows = 0;
    std::vector<std::pair<std::string, std::size_t>> attrition;  // reason -> excluded, in filter order
    std::size_t n_reference = 0;
    std::size_t n_comparison = 0;
    std::size_t rate_imputed = 0;
    std::size_t tracts_merged_to_county = 0;
    RateQuintiles rates;
    std::array<GroupDescriptives, 2> groups;
    std::vector<DescriptiveRow> descriptives;

    std::size_t excluded() const;
};

struct Cohort {
    AuditDataset dataset;
    CohortReport report;
};

// Throws EmptyCohort when no record survives the filters.
Cohort build_cohort(const std::vector<LarRecord>& records, const CohortConfig& config = {});

Json to_json(const CohortReport& report);

}  // namespace medaudit
