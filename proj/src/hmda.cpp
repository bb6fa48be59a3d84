#include "medaudit/hmda.hpp"

#include "medaudit/csv.hpp"
#include "medaudit/error.hpp"

#include <boost/math/distributions/students_t.hpp>

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>

namespace medaudit {

namespace {

struct Column {
    const char* name;
    std::string LarRecord::*field;
    bool required;
};

const std::vector<Column>& lar_columns() {
    static const std::vector<Column> columns = {
        {"activity_year", &LarRecord::activity_year, false},
        {"state_code", &LarRecord::state_code, true},
        {"county_code", &LarRecord::county_code, true},
        {"census_tract", &LarRecord::census_tract, true},
        {"action_taken", &LarRecord::action_taken, true},
        {"loan_type", &LarRecord::loan_type, true},
        {"loan_purpose", &LarRecord::loan_purpose, true},
        {"lien_status", &LarRecord::lien_status, true},
        {"derived_race", &LarRecord::derived_race, true},
        {"derived_ethnicity", &LarRecord::derived_ethnicity, true},
        {"loan_amount", &LarRecord::loan_amount, true},
        {"property_value", &LarRecord::property_value, true},
        {"income", &LarRecord::income, true},
        {"debt_to_income_ratio", &LarRecord::debt_to_income_ratio, true},
        {"interest_rate", &LarRecord::interest_rate, true},
        {"tract_minority_population_percent", &LarRecord::tract_minority_population_percent, true},
        {"tract_to_msa_income_percentage", &LarRecord::tract_to_msa_income_percentage, true},
    };
    return columns;
}

const char* const kDenialColumns[4] = {"denial_reason-1", "denial_reason-2", "denial_reason-3", "denial_reason-4"};

std::optional<double> number(const std::string& s) { return csv::parse_double(s); }

}  // namespace

LarParseResult parse_lar(std::istream& in) {
    csv::Reader reader(in);
    std::vector<std::string> header;
    LarParseResult out;
    if (!reader.next(header)) throw Error(ErrorKind::SchemaMismatch, "LAR file has no header");
    std::map<std::string, std::size_t> index;
    for (std::size_t i = 0; i < header.size(); ++i) index.emplace(std::string(csv::trim(header[i])), i);

    std::vector<std::pair<std::string LarRecord::*, std::size_t>> plan;
    std::vector<std::string> missing;
    for (const auto& c : lar_columns()) {
        const auto it = index.find(c.name);
        if (it != index.end()) plan.emplace_back(c.field, it->second);
        else if (c.required) missing.push_back(c.name);
    }
    std::array<std::optional<std::size_t>, 4> denial{};
    for (int k = 0; k < 4; ++k) {
        const auto it = index.find(kDenialColumns[k]);
        if (it != index.end()) denial[static_cast<std::size_t>(k)] = it->second;
        else if (k == 0) missing.push_back(kDenialColumns[k]);
    }
    if (!missing.empty()) {
        std::string list;
        for (const auto& m : missing) list += (list.empty() ? "" : ", ") + m;
        throw Error(ErrorKind::SchemaMismatch, "LAR file lacks required columns: " + list);
    }

    std::vector<std::string> fields;
    while (reader.next(fields)) {
        if (fields.size() == 1 && fields[0].empty()) continue;
        if (fields.size() != header.size()) {
            ++out.skipped;
            continue;
        }
        LarRecord r;
        for (const auto& [field, col] : plan) r.*field = fields[col];
        for (std::size_t k = 0; k < 4; ++k)
            if (denial[k]) r.denial_reasons[k] = fields[*denial[k]];
        out.records.push_back(std::move(r));
    }
    return out;
}

void write_lar(std::ostream& out, const std::vector<LarRecord>& records) {
    std::vector<std::string> header;
    for (const auto& c : lar_columns()) header.push_back(c.name);
    for (const char* d : kDenialColumns) header.push_back(d);
    csv::write_record(out, header);
    for (const auto& r : records) {
        std::vector<std::string> row;
        for (const auto& c : lar_columns()) row.push_back(r.*(c.field));
        for (const auto& d : r.denial_reasons) row.push_back(d);
        csv::write_record(out, row);
    }
}

Json to_json(const CohortConfig& c) {
    Json j;
    j["state"] = c.state;
    j["year"] = c.year;
    j["loan_type"] = c.loan_type;
    j["loan_purpose"] = c.loan_purpose;
    j["lien_status"] = c.lien_status;
    j["originated_code"] = c.originated_code;
    j["denied_code"] = c.denied_code;
    j["reference_race"] = c.reference_race;
    j["reference_ethnicity"] = c.reference_ethnicity;
    j["comparison_race"] = c.comparison_race;
    j["comparison_ethnicity"] = c.comparison_ethnicity;
    j["tract_min_members"] = c.tract_min_members;
    j["credit_score"] = {{"credit_history_codes", c.credit_score.credit_history_codes},
                         {"credit_history_quintile", c.credit_score.credit_history_quintile},
                         {"other_denial_quintile", c.credit_score.other_denial_quintile},
                         {"originated", "6 - interest rate quintile"}};
    return j;
}

CohortConfig cohort_config_from_json(const Json& j, const CohortConfig& defaults) {
    CohortConfig c = defaults;
    try {
        auto str = [&](const char* key, std::string& target) {
            if (j.contains(key)) target = j.at(key).get<std::string>();
        };
        str("state", c.state);
        str("year", c.year);
        str("loan_type", c.loan_type);
        str("loan_purpose", c.loan_purpose);
        str("lien_status", c.lien_status);
        str("originated_code", c.originated_code);
        str("denied_code", c.denied_code);
        str("reference_race", c.reference_race);
        str("reference_ethnicity", c.reference_ethnicity);
        str("comparison_race", c.comparison_race);
        str("comparison_ethnicity", c.comparison_ethnicity);
        if (j.contains("tract_min_members")) c.tract_min_members = j.at("tract_min_members").get<int>();
        if (j.contains("credit_score")) {
            const auto& s = j.at("credit_score");
            if (s.contains("credit_history_codes"))
                c.credit_score.credit_history_codes = s.at("credit_history_codes").get<std::vector<std::string>>();
            if (s.contains("credit_history_quintile"))
                c.credit_score.credit_history_quintile = s.at("credit_history_quintile").get<int>();
            if (s.contains("other_denial_quintile"))
                c.credit_score.other_denial_quintile = s.at("other_denial_quintile").get<int>();
        }
    } catch (const nlohmann::json::exception& e) {
        throw Error(ErrorKind::InvalidArgument, std::string("malformed cohort config: ") + e.what());
    }
    for (int q : {c.credit_score.credit_history_quintile, c.credit_score.other_denial_quintile})
        if (q < 1 || q > 5) throw Error(ErrorKind::InvalidArgument, "credit score quintiles must lie in 1..5");
    return c;
}

std::vector<int> derive_quintiles(const std::vector<double>& values, const std::vector<std::string>& cell_keys,
                                  std::size_t min_cell) {
    if (values.size() != cell_keys.size())
        throw Error(ErrorKind::InvalidArgument, "values and cell keys are not aligned");
    std::map<std::string, std::vector<std::size_t>> cells;
    for (std::size_t i = 0; i < values.size(); ++i) cells[cell_keys[i]].push_back(i);
    std::vector<std::vector<std::size_t>> groups;
    std::vector<std::size_t> pooled;
    for (auto& [key, members] : cells) {
        if (members.size() < min_cell) pooled.insert(pooled.end(), members.begin(), members.end());
        else groups.push_back(std::move(members));
    }
    if (!pooled.empty()) {
        std::sort(pooled.begin(), pooled.end());
        groups.push_back(std::move(pooled));
    }

    std::vector<int> out(values.size(), 3);
    for (auto& g : groups) {
        std::stable_sort(g.begin(), g.end(), [&](std::size_t x, std::size_t y) { return values[x] < values[y]; });
        const double n = static_cast<double>(g.size());
        for (std::size_t lo = 0; lo < g.size();) {
            std::size_t hi = lo;
            while (hi + 1 < g.size() && values[g[hi + 1]] == values[g[lo]]) ++hi;
            const double mid_rank = 0.5 * static_cast<double>(lo + hi) + 1.0;
            const int q = std::min(5, static_cast<int>(std::floor(5.0 * (mid_rank - 0.5) / n)) + 1);
            for (std::size_t t = lo; t <= hi; ++t) out[g[t]] = q;
            lo = hi + 1;
        }
    }
    return out;
}

namespace {

const std::vector<std::pair<std::string, double>>& dti_bins() {
    static const std::vector<std::pair<std::string, double>> bins = {
        {"<20%", 10.0}, {"20%-<30%", 25.0}, {"30%-<36%", 33.0}, {"50%-60%", 55.0}, {">60%", 65.0},
    };
    return bins;
}

}  // namespace

std::optional<double> dti_value(const std::string& raw) {
    const std::string s(csv::trim(raw));
    for (const auto& [label, mid] : dti_bins())
        if (s == label) return mid;
    const auto v = number(s);
    if (v && std::isfinite(*v) && *v >= 0) return v;
    return std::nullopt;
}

Json dti_coding_table() {
    Json j;
    for (const auto& [label, mid] : dti_bins()) j[label] = mid;
    j["numeric"] = "as reported";
    j["Exempt"] = "excluded";
    j["NA"] = "excluded";
    return j;
}

RateQuintiles rate_quintiles(const std::vector<double>& originated_rates) {
    RateQuintiles out;
    if (originated_rates.empty()) return out;
    std::vector<double> s = originated_rates;
    std::sort(s.begin(), s.end());
    auto quantile = [&](double p) {
        const double h = p * static_cast<double>(s.size() - 1);
        const auto lo = static_cast<std::size_t>(std::floor(h));
        const std::size_t hi = std::min(lo + 1, s.size() - 1);
        return s[lo] + (h - static_cast<double>(lo)) * (s[hi] - s[lo]);
    };
    for (int k = 0; k < 4; ++k) out.cuts[static_cast<std::size_t>(k)] = quantile(0.2 * (k + 1));
    std::vector<int> q;
    q.reserve(s.size());
    for (double r : s) q.push_back(1 + static_cast<int>(std::count_if(out.cuts.begin(), out.cuts.end(),
                                                                       [&](double c) { return r > c; })));
    out.median_quintile = q[(q.size() - 1) / 2];
    return out;
}

int impute_credit_score_quintile(const LarRecord& record, bool denied, const RateQuintiles& rates,
                                 const CreditScoreMapping& mapping, bool* rate_missing) {
    if (rate_missing) *rate_missing = false;
    if (denied) {
        for (const auto& code : record.denial_reasons) {
            const std::string c(csv::trim(code));
            if (std::find(mapping.credit_history_codes.begin(), mapping.credit_history_codes.end(), c) !=
                mapping.credit_history_codes.end())
                return mapping.credit_history_quintile;
        }
        return mapping.other_denial_quintile;
    }
    const auto rate = number(record.interest_rate);
    if (!rate || !std::isfinite(*rate)) {
        if (rate_missing) *rate_missing = true;
        return 6 - rates.median_quintile;
    }
    const int q = 1 + static_cast<int>(
                          std::count_if(rates.cuts.begin(), rates.cuts.end(), [&](double c) { return *rate > c; }));
    return 6 - q;
}

std::size_t CohortReport::excluded() const {
    std::size_t s = 0;
    for (const auto& [reason, count] : attrition) s += count;
    return s;
}

namespace {

struct Derived {
    int a = 0;
    int y = 0;
    double dti = 0, ltv = 0, income = 0, tract_income = 0, tract_minority = 0;
    std::string tract, county;
    const LarRecord* record = nullptr;
};

}  // namespace

double welch_p_value(const std::vector<double>& x0, const std::vector<double>& x1) {
    auto moments = [](const std::vector<double>& x) {
        const double n = static_cast<double>(x.size());
        const double mean = std::accumulate(x.begin(), x.end(), 0.0) / n;
        double ss = 0;
        for (double v : x) ss += (v - mean) * (v - mean);
        return std::pair{mean, n > 1 ? ss / (n - 1) : 0.0};
    };
    if (x0.size() < 2 || x1.size() < 2) return 1.0;
    const auto [m0, v0] = moments(x0);
    const auto [m1, v1] = moments(x1);
    const double s0 = v0 / static_cast<double>(x0.size());
    const double s1 = v1 / static_cast<double>(x1.size());
    const double se = std::sqrt(s0 + s1);
    if (se == 0) return m0 == m1 ? 1.0 : 0.0;
    const double t = (m1 - m0) / se;
    const double df = (s0 + s1) * (s0 + s1) /
                      (s0 * s0 / static_cast<double>(x0.size() - 1) + s1 * s1 / static_cast<double>(x1.size() - 1));
    const boost::math::students_t dist(df);
    return 2 * boost::math::cdf(boost::math::complement(dist, std::abs(t)));
}

Cohort build_cohort(const std::vector<LarRecord>& records, const CohortConfig& config) {
    const std::vector<std::string> reasons = {
        "state", "activity year", "loan type", "loan purpose", "lien status", "action taken", "race/ethnicity",
        "cannot derive LTV", "DTI missing or exempt", "income missing", "tract covariates missing",
    };
    std::vector<std::size_t> excluded(reasons.size(), 0);
    auto trimmed = [](const std::string& s) { return std::string(csv::trim(s)); };

    std::vector<Derived> kept;
    for (const auto& r : records) {
        auto drop = [&](std::size_t reason) {
            ++excluded[reason];
            return true;
        };
        if (trimmed(r.state_code) != config.state && drop(0)) continue;
        if (!config.year.empty() && trimmed(r.activity_year) != config.year && drop(1)) continue;
        if (trimmed(r.loan_type) != config.loan_type && drop(2)) continue;
        if (trimmed(r.loan_purpose) != config.loan_purpose && drop(3)) continue;
        if (trimmed(r.lien_status) != config.lien_status && drop(4)) continue;
        const std::string action = trimmed(r.action_taken);
        if (action != config.originated_code && action != config.denied_code && drop(5)) continue;

        const std::string race = trimmed(r.derived_race);
        const std::string eth = trimmed(r.derived_ethnicity);
        const bool reference = race == config.reference_race &&
                               (config.reference_ethnicity.empty() || eth == config.reference_ethnicity);
        const bool comparison = race == config.comparison_race &&
                                (config.comparison_ethnicity.empty() || eth == config.comparison_ethnicity);
        if (!reference && !comparison && drop(6)) continue;

        const auto amount = number(r.loan_amount);
        const auto value = number(r.property_value);
        if ((!amount || !value || !(*value > 0) || !std::isfinite(*amount / *value)) && drop(7)) continue;
        const auto dti = dti_value(r.debt_to_income_ratio);
        if (!dti && drop(8)) continue;
        const auto income = number(r.income);
        if ((!income || !std::isfinite(*income)) && drop(9)) continue;
        const auto tract_income = number(r.tract_to_msa_income_percentage);
        const auto tract_minority = number(r.tract_minority_population_percent);
        if ((!tract_income || !tract_minority || !std::isfinite(*tract_income) || !std::isfinite(*tract_minority)) &&
            drop(10))
            continue;

        Derived d;
        d.a = comparison ? 1 : 0;
        d.y = action == config.denied_code ? 1 : 0;
        d.dti = *dti;
        d.ltv = 100.0 * *amount / *value;
        d.income = *income;
        d.tract_income = *tract_income;
        d.tract_minority = *tract_minority;
        d.tract = trimmed(r.census_tract);
        d.county = trimmed(r.county_code);
        d.record = &r;
        kept.push_back(d);
    }

    CohortReport report;
    report.config = config;
    report.n_input = records.size();
    for (std::size_t k = 0; k < reasons.size(); ++k) report.attrition.emplace_back(reasons[k], excluded[k]);
    if (kept.empty()) throw Error(ErrorKind::EmptyCohort, "no LAR record survives the cohort filters");

    std::map<std::string, std::size_t> tract_count;
    for (const auto& d : kept) ++tract_count[d.tract];
    std::vector<std::string> cells;
    std::vector<double> incomes;
    for (const auto& d : kept) {
        const bool own = !d.tract.empty() && d.tract != "NA" &&
                         tract_count[d.tract] >= static_cast<std::size_t>(std::max(config.tract_min_members, 0));
        cells.push_back(own ? "tract:" + d.tract : "county:" + d.county);
        incomes.push_back(d.income);
    }
    for (const auto& [tract, count] : tract_count)
        if (count < static_cast<std::size_t>(std::max(config.tract_min_members, 0))) ++report.tracts_merged_to_county;
    const auto income_q = derive_quintiles(incomes, cells);

    std::vector<double> rates;
    for (const auto& d : kept)
        if (d.y == 0)
            if (const auto rate = number(d.record->interest_rate); rate && std::isfinite(*rate)) rates.push_back(*rate);
    report.rates = rate_quintiles(rates);

    const auto n = static_cast<Eigen::Index>(kept.size());
    Eigen::MatrixXd w(n, 2), m(n, 4);
    std::vector<int> a(kept.size()), y(kept.size());
    std::array<std::array<std::vector<double>, 6>, 2> by_group;
    for (Eigen::Index i = 0; i < n; ++i) {
        const auto& d = kept[static_cast<std::size_t>(i)];
        bool missing_rate = false;
        const int score =
            impute_credit_score_quintile(*d.record, d.y == 1, report.rates, config.credit_score, &missing_rate);
        report.rate_imputed += missing_rate;
        w(i, 0) = d.tract_income;
        w(i, 1) = d.tract_minority;
        m(i, 0) = d.dti;
        m(i, 1) = d.ltv;
        m(i, 2) = income_q[static_cast<std::size_t>(i)];
        m(i, 3) = score;
        a[static_cast<std::size_t>(i)] = d.a;
        y[static_cast<std::size_t>(i)] = d.y;
        auto& g = by_group[static_cast<std::size_t>(d.a)];
        g[0].push_back(100.0 * d.y);
        g[1].push_back(d.dti);
        g[2].push_back(d.ltv);
        g[3].push_back(d.income);
        g[4].push_back(score);
        g[5].push_back(d.tract_minority);
    }
    const char* const labels[6] = {"Denial rate (%)",   "Debt-to-income ratio (%)",    "Loan-to-value ratio (%)",
                                   "Income ($K)",       "Credit score quintile (1-5)", "Tract minority pop. (%)"};
    auto mean = [](const std::vector<double>& x) {
        return x.empty() ? 0.0 : std::accumulate(x.begin(), x.end(), 0.0) / static_cast<double>(x.size());
    };
    for (std::size_t g = 0; g < 2; ++g) {
        auto& s = report.groups[g];
        s.n = by_group[g][0].size();
        s.denial_rate = mean(by_group[g][0]) / 100.0;
        s.dti = mean(by_group[g][1]);
        s.ltv = mean(by_group[g][2]);
        s.income = mean(by_group[g][3]);
        s.credit_score_quintile = mean(by_group[g][4]);
        s.tract_minority = mean(by_group[g][5]);
    }
    for (std::size_t v = 0; v < 6; ++v) {
        DescriptiveRow row;
        row.variable = labels[v];
        row.reference = mean(by_group[0][v]);
        row.comparison = mean(by_group[1][v]);
        row.difference = row.comparison - row.reference;
        row.p_value = welch_p_value(by_group[0][v], by_group[1][v]);
        report.descriptives.push_back(row);
    }
    report.n_reference = report.groups[0].n;
    report.n_comparison = report.groups[1].n;

    const std::string ref_label =
        config.reference_race + (config.reference_ethnicity.empty() ? "" : " (" + config.reference_ethnicity + ")");
    const std::string cmp_label =
        config.comparison_race + (config.comparison_ethnicity.empty() ? "" : " (" + config.comparison_ethnicity + ")");
    AuditDataset dataset(std::move(w), std::move(a), std::move(m), std::move(y),
                         {"tract_to_msa_income_percentage", "tract_minority_population_percent"},
                         {"dti", "ltv", "income_quintile", "credit_score_quintile"}, {ref_label, cmp_label}, "race",
                         "denied");
    return {std::move(dataset), std::move(report)};
}

Json to_json(const CohortReport& r) {
    Json j;
    j["config"] = to_json(r.config);
    j["n_input"] = r.n_input;
    j["skipped_rows"] = r.skipped_rows;
    Json attrition = Json::array();
    for (const auto& [reason, count] : r.attrition) attrition.push_back({{"reason", reason}, {"excluded", count}});
    j["attrition"] = attrition;
    j["n_cohort"] = r.n_reference + r.n_comparison;
    j["n_reference"] = r.n_reference;
    j["n_comparison"] = r.n_comparison;
    j["dti_coding"] = dti_coding_table();
    j["ltv"] = "100 * loan_amount / property_value";
    j["income_quintile_cells"] = {{"tract_min_members", r.config.tract_min_members},
                                  {"tracts_merged_to_county", r.tracts_merged_to_county}};
    j["interest_rate_cuts"] = r.rates.cuts;
    j["interest_rate_median_quintile"] = r.rates.median_quintile;
    j["rate_imputed"] = r.rate_imputed;
    Json rows = Json::array();
    for (const auto& row : r.descriptives)
        rows.push_back({{"variable", row.variable},
                        {"reference", row.reference},
                        {"comparison", row.comparison},
                        {"difference", row.difference},
                        {"p_value", row.p_value}});
    j["descriptives"] = rows;
    return j;
}

}  // namespace medaudit
