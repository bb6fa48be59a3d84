#include "medaudit/sensitivity.hpp"

#include "medaudit/csv.hpp"
#include "medaudit/error.hpp"

#include <cmath>
#include <cstdio>

namespace medaudit {

double rr_from_risk_difference(double risk_difference, double baseline_risk) {
    if (!(baseline_risk > 0 && baseline_risk < 1))
        throw Error(ErrorKind::DomainError, "baseline risk must lie in (0, 1)");
    const double treated = baseline_risk + risk_difference;
    if (!(treated > 0 && treated < 1))
        throw Error(ErrorKind::DomainError, "baseline + risk difference must lie in (0, 1)");
    return treated / baseline_risk;
}

double e_value(double rr) {
    if (!(rr > 0) || !std::isfinite(rr)) throw Error(ErrorKind::DomainError, "risk ratio must be positive and finite");
    const double oriented = rr < 1 ? 1 / rr : rr;
    if (oriented == 1.0) return 1.0;
    return oriented + std::sqrt(oriented * (oriented - 1));
}

std::vector<std::pair<double, double>> sensitivity_curve(double rr_obs, const std::vector<double>& grid) {
    if (!(rr_obs > 0)) throw Error(ErrorKind::DomainError, "risk ratio must be positive");
    const double rr = rr_obs < 1 ? 1 / rr_obs : rr_obs;
    std::vector<std::pair<double, double>> out;
    out.reserve(grid.size());
    for (double x : grid) {
        if (!(x > rr)) throw Error(ErrorKind::DomainError, "curve grid points must exceed the observed risk ratio");
        out.emplace_back(x, rr * (x - 1) / (x - rr));
    }
    return out;
}

std::vector<double> default_curve_grid(double rr_obs, std::size_t points) {
    const double rr = rr_obs < 1 ? 1 / rr_obs : rr_obs;
    std::vector<double> grid;
    if (rr <= 1.0 || points == 0) return grid;
    const double lo = rr * 1.005;
    const double hi = std::max(4 * e_value(rr), rr + 4);
    for (std::size_t i = 0; i < points; ++i) {
        const double t = points == 1 ? 0.0 : static_cast<double>(i) / static_cast<double>(points - 1);
        grid.push_back(lo * std::pow(hi / lo, t));
    }
    return grid;
}

SensitivityResult sensitivity_analysis(double ide, double ci_lo, double ci_hi, double baseline_risk,
                                       std::size_t curve_points) {
    SensitivityResult r;
    r.baseline_risk = baseline_risk;
    r.rr_point = rr_from_risk_difference(ide, baseline_risk);
    r.evalue_point = e_value(r.rr_point);
    const bool covers_null = ci_lo <= 0 && ci_hi >= 0;
    const double near = ide >= 0 ? ci_lo : ci_hi;
    if (covers_null) {
        r.rr_ci_lo = 1.0;
        r.evalue_ci = 1.0;
    } else {
        r.rr_ci_lo = rr_from_risk_difference(near, baseline_risk);
        r.evalue_ci = e_value(r.rr_ci_lo);
    }
    r.curve = sensitivity_curve(r.rr_point, default_curve_grid(r.rr_point, curve_points));
    return r;
}

std::string format_pp(double risk_difference) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.1f", risk_difference * 100);
    std::string s = buf;
    if (s == "0.0" || s == "-0.0") return "0";
    return s;
}

std::string bounds_statement(double ide, double iie, bool monotone_asserted) {
    const std::string ide_pp = format_pp(ide);
    const std::string iie_pp = format_pp(iie);
    std::string text = "Interventional effects: IDE = " + ide_pp + " pp (direct path with mediators drawn from the "
                       "reference-group distribution); IIE = " + iie_pp + " pp (shift of the mediator distribution "
                       "from the reference to the comparison group).";
    if (monotone_asserted) {
        text += " Under the asserted monotone indirect treatment response (Y(a, m) >= Y(a, m') whenever m >= m' "
                "component-wise, for every unit; an assumption, not verified from data): NDE ≥ IDE = " +
                ide_pp + " pp; NIE ≤ IIE = " + iie_pp + " pp. Hence NDE ≥ " + ide_pp +
                (ide_pp == "0" ? "" : " pp") + " and NIE ≤ " + iie_pp + (iie_pp == "0" ? "" : " pp") + ".";
    }
    return text;
}

Json to_json(const SensitivityResult& result) {
    Json j;
    j["baseline_risk"] = result.baseline_risk;
    j["rr_point"] = result.rr_point;
    j["rr_ci_bound"] = result.rr_ci_lo;
    j["evalue_point"] = result.evalue_point;
    j["evalue_ci"] = result.evalue_ci;
    Json curve = Json::array();
    for (const auto& [x, y] : result.curve) curve.push_back({x, y});
    j["curve"] = curve;
    return j;
}

void write_curve_csv(std::ostream& out, const std::vector<std::pair<double, double>>& curve) {
    out << "rr_with_treatment,rr_with_outcome_needed\n";
    for (const auto& [x, y] : curve) out << csv::format_double(x) << ',' << csv::format_double(y) << '\n';
}

}  // namespace medaudit
