#pragma once

#include "medaudit/json.hpp"

#include <ostream>
#include <string>
#include <utility>
#include <vector>

namespace medaudit {

// (baseline + rd) / baseline. Throws DomainError unless baseline and
// baseline + rd lie in (0, 1).
double rr_from_risk_difference(double risk_difference, double baseline_risk);

// RR + sqrt(RR (RR - 1)) after orienting RR >= 1. Throws DomainError for rr <= 0.
double e_value(double rr);

// Explain-away frontier y = rr (x - 1) / (x - rr). rr_obs is oriented first;
// every grid point must exceed the oriented value.
std::vector<std::pair<double, double>> sensitivity_curve(double rr_obs, const std::vector<double>& grid);

// Log-spaced grid from just above rr_obs out to max(4 * E-value, rr_obs + 4).
std::vector<double> default_curve_grid(double rr_obs, std::size_t points = 40);

struct SensitivityResult {
    double baseline_risk = 0.0;
    double rr_point = 1.0;
    double rr_ci_lo = 1.0;  // RR at the CI bound nearer the null
    double evalue_point = 1.0;
    double evalue_ci = 1.0;  // 1 when the interval covers the null
    std::vector<std::pair<double, double>> curve;
};

// E-values for a risk difference and its CI, converting with `baseline_risk`.
SensitivityResult sensitivity_analysis(double ide, double ci_lo, double ci_hi, double baseline_risk,
                                       std::size_t curve_points = 40);

// Percentage points with one decimal, zero written as "0".
std::string format_pp(double risk_difference);

std::string bounds_statement(double ide, double iie, bool monotone_asserted);

Json to_json(const SensitivityResult& result);
void write_curve_csv(std::ostream& out, const std::vector<std::pair<double, double>>& curve);

}  // namespace medaudit
