#include "medaudit/cli.hpp"

#include "medaudit/csv.hpp"
#include "medaudit/dag.hpp"
#include "medaudit/dataset.hpp"
#include "medaudit/estimator.hpp"
#include "medaudit/hmda.hpp"
#include "medaudit/oracle.hpp"
#include "medaudit/parallel.hpp"
#include "medaudit/paths.hpp"
#include "medaudit/sensitivity.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

namespace medaudit {

int exit_code_for(ErrorKind kind) {
    switch (kind) {
        case ErrorKind::EmptyGroup:
        case ErrorKind::DegenerateOutcome:
        case ErrorKind::TooFewUnits:
        case ErrorKind::EmptyPool:
        case ErrorKind::EmptyCohort:
        case ErrorKind::DegenerateAllocation: return 3;
        case ErrorKind::InvalidArgument:
        case ErrorKind::CyclicGraph:
        case ErrorKind::RoleViolation:
        case ErrorKind::MissingRequiredEdge:
        case ErrorKind::NonFiniteInput:
        case ErrorKind::DomainError:
        case ErrorKind::SchemaMismatch:
        case ErrorKind::Io: return 2;
    }
    return 1;
}

namespace {

Json tool_json() { return {{"name", kToolName}, {"version", kToolVersion}}; }

Json read_json_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw Error(ErrorKind::Io, "cannot open " + path);
    try {
        return Json::parse(in);
    } catch (const nlohmann::json::exception& e) {
        throw Error(ErrorKind::SchemaMismatch, path + " is not valid JSON: " + e.what());
    }
}

void write_file(const std::string& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error(ErrorKind::Io, "cannot write " + path);
    out << text;
    if (!out) throw Error(ErrorKind::Io, "write failed for " + path);
}

void write_json(const std::string& path, const Json& j) { write_file(path, j.dump(2) + "\n"); }

std::string required_string(const Json& config, const char* key) {
    if (!config.contains(key) || !config.at(key).is_string() || config.at(key).get<std::string>().empty())
        throw Error(ErrorKind::InvalidArgument, std::string("missing required setting '") + key + "'");
    return config.at(key).get<std::string>();
}

std::string optional_string(const Json& config, const char* key) {
    if (!config.contains(key) || config.at(key).is_null()) return {};
    if (!config.at(key).is_string()) throw Error(ErrorKind::InvalidArgument, std::string("'") + key + "' must be a string");
    return config.at(key).get<std::string>();
}

Json null_if_empty(const std::string& s) { return s.empty() ? Json(nullptr) : Json(s); }

std::string schema_path_for(const std::string& csv_path) {
    const std::string ext = ".csv";
    if (csv_path.size() > ext.size() && csv_path.compare(csv_path.size() - ext.size(), ext.size(), ext) == 0)
        return csv_path.substr(0, csv_path.size() - ext.size()) + ".schema.json";
    return csv_path + ".schema.json";
}

std::string csv_number(double v) { return std::isfinite(v) ? csv::format_double(v) : std::string(); }

Json number_or_null(double v) { return std::isfinite(v) ? Json(v) : Json(nullptr); }

std::string comment_line(const Json& run_config) {
    return std::string("# ") + kToolName + " " + kToolVersion + " run_config=" + run_config.dump() + "\n";
}

unsigned thread_count(const Json& config) {
    if (config.contains("threads")) {
        const int t = config.at("threads").get<int>();
        if (t < 1) throw Error(ErrorKind::InvalidArgument, "threads must be >= 1");
        return static_cast<unsigned>(t);
    }
    return default_thread_count();
}

void save_with_provenance(const AuditDataset& dataset, const std::string& prefix, const std::string& command,
                          const Json& run_config) {
    std::ofstream csv_out(prefix + ".csv", std::ios::binary);
    if (!csv_out) throw Error(ErrorKind::Io, "cannot write " + prefix + ".csv");
    write_csv(csv_out, dataset);
    Json schema = to_json(schema_of(dataset));
    schema["provenance"] = {{"tool", tool_json()}, {"command", command}, {"run_config", run_config}};
    write_json(prefix + ".schema.json", schema);
}

CreditDag dag_for(const AuditDataset& d) {
    const CreditDag standard = default_credit_dag();
    if (d.w_names() == standard.names_with_role(NodeRole::covariate) &&
        d.m_names() == standard.names_with_role(NodeRole::mediator) && d.treatment_name() == "race" &&
        d.outcome_name() == "denied")
        return standard;
    return standard_dag(d.w_names(), d.treatment_name(), d.m_names(), d.outcome_name(), true);
}

template <class F>
auto json_guard(const char* what, F&& f) {
    try {
        return f();
    } catch (const nlohmann::json::exception& e) {
        throw Error(ErrorKind::InvalidArgument, std::string("malformed ") + what + " settings: " + e.what());
    }
}

}  // namespace

Json extract_run_config(const Json& document) {
    if (document.is_object() && document.contains("run_config")) return document.at("run_config");
    if (document.is_object() && document.contains("provenance") && document.at("provenance").contains("run_config"))
        return document.at("provenance").at("run_config");
    if (!document.is_object()) throw Error(ErrorKind::InvalidArgument, "config must be a JSON object");
    return document;
}

Json cmd_ingest(const Json& config) {
    const std::string lar = required_string(config, "lar");
    const std::string out = required_string(config, "out");
    CohortConfig cohort;
    if (config.contains("cohort")) {
        const Json& c = config.at("cohort");
        cohort = cohort_config_from_json(c.is_string() ? read_json_file(c.get<std::string>()) : c);
    }
    Json run_config;
    run_config["lar"] = lar;
    run_config["cohort"] = to_json(cohort);
    run_config["out"] = out;

    std::ifstream in(lar);
    if (!in) throw Error(ErrorKind::Io, "cannot open " + lar);
    const auto parsed = parse_lar(in);
    auto result = build_cohort(parsed.records, cohort);
    result.report.skipped_rows = parsed.skipped;

    save_with_provenance(result.dataset, out, "ingest", run_config);
    Json report;
    report["tool"] = tool_json();
    report["command"] = "ingest";
    report["run_config"] = run_config;
    report["cohort"] = to_json(result.report);
    write_json(out + ".attrition.json", report);

    return {{"command", "ingest"},
            {"n_cohort", result.dataset.n()},
            {"n_reference", result.report.n_reference},
            {"n_comparison", result.report.n_comparison},
            {"files", {out + ".csv", out + ".schema.json", out + ".attrition.json"}}};
}

Json cmd_simulate(const Json& config) {
    const std::string out = required_string(config, "out");
    const bool has_preset = config.contains("preset") && !config.at("preset").is_null();
    const bool has_scm = config.contains("scm") && !config.at("scm").is_null();
    if (has_preset == has_scm) throw Error(ErrorKind::InvalidArgument, "give exactly one of 'preset' or 'scm'");
    const auto n = json_guard("simulate", [&] { return config.at("n").get<long long>(); });
    const auto seed = json_guard("simulate", [&] { return config.value("seed", std::uint64_t{20240101}); });
    if (n < 1) throw Error(ErrorKind::InvalidArgument, "n must be >= 1");

    ScmSpec scm;
    Json run_config;
    if (has_preset) {
        const std::string name = config.at("preset").get<std::string>();
        scm = scm_preset(name);
        run_config["preset"] = name;
    } else {
        const Json& s = config.at("scm");
        scm = scm_from_json(s.is_string() ? read_json_file(s.get<std::string>()) : s);
        run_config["scm"] = s;
    }
    run_config["n"] = n;
    run_config["seed"] = seed;
    run_config["out"] = out;

    const auto dataset = generate_dataset(scm, static_cast<std::size_t>(n), seed);
    save_with_provenance(dataset, out, "simulate", run_config);

    const auto truth = oracle_effects(scm);
    const auto identified = identified_effects(observable_law(scm));
    Json t;
    t["tool"] = tool_json();
    t["command"] = "simulate";
    t["run_config"] = run_config;
    t["scm_hash"] = table_hash(scm);
    t["monotone_in_m"] = monotone_in_m_holds(scm);
    t["stochastic_dominance"] = stochastic_dominance_holds(scm);
    t["oracle"] = to_json(truth);
    t["identified"] = {{"ide", identified.ide}, {"iie", identified.iie}};
    t["scm"] = to_json(scm);
    write_json(out + ".truth.json", t);

    const CreditDag dag = standard_dag(dataset.w_names(), dataset.treatment_name(), dataset.m_names(),
                                       dataset.outcome_name(), true);
    write_json(out + ".dag.json", to_json(dag));

    return {{"command", "simulate"},
            {"n", n},
            {"oracle", {{"ide", truth.ide}, {"iie", truth.iie}, {"nde", truth.nde}, {"nie", truth.nie}}},
            {"files", {out + ".csv", out + ".schema.json", out + ".truth.json", out + ".dag.json"}}};
}

Json cmd_estimate(const Json& config) {
    const std::string data = required_string(config, "data");
    std::string schema = optional_string(config, "schema");
    if (schema.empty()) schema = schema_path_for(data);
    const std::string dag_path = optional_string(config, "dag");
    const std::string truth_path = optional_string(config, "truth");
    const std::string out = required_string(config, "out");
    const bool with_paths = json_guard("estimate", [&] { return config.value("paths", true); });
    EstimatorConfig est_config =
        estimator_config_from_json(config.contains("estimator") ? config.at("estimator") : Json::object());
    est_config.threads = thread_count(config);

    Json run_config;
    run_config["data"] = data;
    run_config["schema"] = schema;
    run_config["dag"] = null_if_empty(dag_path);
    run_config["truth"] = null_if_empty(truth_path);
    run_config["out"] = out;
    run_config["paths"] = with_paths;
    run_config["estimator"] = to_json(est_config);

    const auto loaded = load_dataset(data, schema);
    const AuditDataset& d = loaded.dataset;
    const CreditDag dag = dag_path.empty() ? dag_for(d) : dag_from_json(read_json_file(dag_path));
    const auto est = cross_fit_estimate(d, dag, est_config);

    Json audit;
    audit["tool"] = tool_json();
    audit["command"] = "estimate";
    audit["run_config"] = run_config;
    audit["dataset"] = {{"n", d.n()},
                        {"n_reference", d.n() - d.n_treated()},
                        {"n_comparison", d.n_treated()},
                        {"group_labels", d.group_labels()},
                        {"treatment", d.treatment_name()},
                        {"outcome", d.outcome_name()},
                        {"covariates", d.w_names()},
                        {"mediators", d.m_names()},
                        {"validation", to_json(loaded.report)}};
    audit["estimate"] = to_json(est);

    const double total = est.total_contrast;
    auto pct = [&](double v) { return total != 0 ? 100.0 * v / total : std::nan(""); };
    Json table = Json::array();
    auto row = [&](const std::string& name, double value, double lo, double hi, double ev, double p) {
        table.push_back({{"estimand", name},
                         {"estimate", value},
                         {"ci_lo", number_or_null(lo)},
                         {"ci_hi", number_or_null(hi)},
                         {"pct_of_total", number_or_null(pct(value))},
                         {"e_value", number_or_null(ev)},
                         {"p_value", number_or_null(p)}});
    };
    const double nan = std::nan("");
    row("Raw gap", est.raw_gap, nan, nan, nan, nan);
    row("Total (IDE + IIE)", total, est.total.lo, est.total.hi, nan, est.total.p_value);
    row("IDE", est.ide.estimate, est.ide.lo, est.ide.hi, est.sensitivity ? est.sensitivity->evalue_point : nan,
        est.ide.p_value);
    row("IIE", est.iie.estimate, est.iie.lo, est.iie.hi, nan, est.iie.p_value);

    std::ostringstream bars;
    bars << comment_line(run_config);
    csv::write_record(bars, {"component", "estimate", "ci_lo", "ci_hi", "pct_of_total"});
    bars << "TE," << csv_number(total) << "," << csv_number(est.total.lo) << "," << csv_number(est.total.hi) << ","
         << csv_number(100.0) << "\n";
    bars << "IDE," << csv_number(est.ide.estimate) << "," << csv_number(est.ide.lo) << ","
         << csv_number(est.ide.hi) << "," << csv_number(pct(est.ide.estimate)) << "\n";
    bars << "IIE," << csv_number(est.iie.estimate) << "," << csv_number(est.iie.lo) << ","
         << csv_number(est.iie.hi) << "," << csv_number(pct(est.iie.estimate)) << "\n";

    if (with_paths) {
        const auto paths = path_specific_effects(d, est.iie.estimate);
        audit["paths"] = to_json(paths);
        for (const auto& e : paths.paths) {
            row("via " + e.mediator, e.allocated, nan, nan, nan, nan);
            csv::write_record(bars, {"via_" + e.mediator, csv_number(e.allocated), "", "", csv_number(pct(e.allocated))});
        }
    }
    audit["table"] = table;

    if (!truth_path.empty()) {
        const Json truth = read_json_file(truth_path);
        const double ide = truth.at("oracle").at("ide").get<double>();
        const double iie = truth.at("oracle").at("iie").get<double>();
        audit["oracle"] = {{"ide", ide},
                           {"iie", iie},
                           {"ide_error", est.ide.estimate - ide},
                           {"iie_error", est.iie.estimate - iie},
                           {"ide_in_ci", est.ide.lo <= ide && ide <= est.ide.hi},
                           {"iie_in_ci", est.iie.lo <= iie && iie <= est.iie.hi}};
    }

    write_json(out + ".audit.json", audit);
    write_file(out + ".decomposition.csv", bars.str());

    Json summary = {{"command", "estimate"},
                    {"n", d.n()},
                    {"ide", est.ide.estimate},
                    {"ide_ci", {est.ide.lo, est.ide.hi}},
                    {"iie", est.iie.estimate},
                    {"iie_ci", {est.iie.lo, est.iie.hi}},
                    {"total_contrast", total},
                    {"raw_gap", est.raw_gap},
                    {"positivity_warning", est.means.clips.positivity_warning()},
                    {"files", {out + ".audit.json", out + ".decomposition.csv"}}};
    if (audit.contains("oracle")) summary["oracle"] = audit["oracle"];
    return summary;
}

Json cmd_sensitivity(const Json& config) {
    const std::string audit_path = required_string(config, "audit");
    const std::string out = required_string(config, "out");
    const Json grid = config.contains("grid") ? config.at("grid") : Json{{"points", 40}};
    std::vector<double> values;
    std::size_t points = 40;
    json_guard("grid", [&] {
        if (grid.is_array()) values = grid.get<std::vector<double>>();
        else if (grid.contains("values")) values = grid.at("values").get<std::vector<double>>();
        else points = grid.value("points", std::size_t{40});
        return 0;
    });
    if (values.empty() && points < 2) throw Error(ErrorKind::InvalidArgument, "grid needs at least two points");

    Json run_config;
    run_config["audit"] = audit_path;
    run_config["out"] = out;
    run_config["grid"] = values.empty() ? Json{{"points", points}} : Json{{"values", values}};

    const Json audit = read_json_file(audit_path);
    const Json& est = audit.at("estimate");
    const double ide = est.at("ide").at("estimate").get<double>();
    const double lo = est.at("ide").at("ci").at(0).get<double>();
    const double hi = est.at("ide").at("ci").at(1).get<double>();
    const double baseline = est.contains("sensitivity") && est.at("sensitivity").contains("baseline_risk")
                                ? est.at("sensitivity").at("baseline_risk").get<double>()
                                : est.at("potential_outcome_means").at("psi_0_g0").get<double>();

    const double rr_point = rr_from_risk_difference(ide, baseline);
    Json summary = {{"command", "sensitivity"}, {"baseline_risk", baseline}, {"rr_point", rr_point}};
    if (rr_point == 1.0) {
        summary["status"] = "degenerate";
        summary["message"] = "IDE is null (risk ratio 1); there is nothing to explain away and no curve is written";
        return summary;
    }
    const double bound = ide > 0 ? lo : hi;
    const bool ci_excludes_null = ide > 0 ? lo > 0 : hi < 0;

    std::vector<std::pair<std::string, double>> series = {{"point", rr_point}};
    if (ci_excludes_null) series.emplace_back("ci_bound", rr_from_risk_difference(bound, baseline));

    std::ostringstream csv_out;
    csv_out << comment_line(run_config);
    csv::write_record(csv_out, {"series", "rr_with_treatment", "rr_with_outcome_needed"});
    Json series_json = Json::array();
    for (const auto& [name, rr] : series) {
        const auto curve = sensitivity_curve(rr, values.empty() ? default_curve_grid(rr, points) : values);
        for (const auto& [x, y] : curve) csv::write_record(csv_out, {name, csv_number(x), csv_number(y)});
        series_json.push_back({{"series", name}, {"rr", rr}, {"e_value", e_value(rr)}, {"points", curve.size()}});
    }
    write_file(out, csv_out.str());
    summary["status"] = "ok";
    summary["series"] = series_json;
    summary["evalue_ci"] = ci_excludes_null ? e_value(series.back().second) : 1.0;
    summary["files"] = {out};
    return summary;
}

Json cmd_paths(const Json& config) {
    const std::string data = required_string(config, "data");
    std::string schema = optional_string(config, "schema");
    if (schema.empty()) schema = schema_path_for(data);
    const std::string out = required_string(config, "out");
    const std::string audit_path = optional_string(config, "audit");
    const bool has_iie = config.contains("iie") && config.at("iie").is_number();
    if (has_iie == !audit_path.empty()) throw Error(ErrorKind::InvalidArgument, "give exactly one of 'iie' or 'audit'");
    const double iie = has_iie ? config.at("iie").get<double>()
                               : read_json_file(audit_path).at("estimate").at("iie").at("estimate").get<double>();

    Json run_config;
    run_config["data"] = data;
    run_config["schema"] = schema;
    if (has_iie) run_config["iie"] = iie;
    else run_config["audit"] = audit_path;
    run_config["out"] = out;

    const auto loaded = load_dataset(data, schema);
    const auto paths = path_specific_effects(loaded.dataset, iie);
    Json j;
    j["tool"] = tool_json();
    j["command"] = "paths";
    j["run_config"] = run_config;
    j["paths"] = to_json(paths);
    write_json(out, j);
    if (paths.status == AllocationStatus::degenerate)
        throw Error(ErrorKind::DegenerateAllocation,
                    "products of coefficients sum to ~0; raw products written to " + out + " without allocation");
    return {{"command", "paths"}, {"status", to_string(paths.status)}, {"paths", j["paths"]}, {"files", {out}}};
}

int run_command(const std::string& command, const Json& config, std::ostream& out, std::ostream& err) {
    try {
        Json summary;
        if (command == "ingest") summary = cmd_ingest(config);
        else if (command == "estimate") summary = cmd_estimate(config);
        else if (command == "sensitivity") summary = cmd_sensitivity(config);
        else if (command == "paths") summary = cmd_paths(config);
        else if (command == "simulate") summary = cmd_simulate(config);
        else throw Error(ErrorKind::InvalidArgument, "unknown command '" + command + "'");
        out << summary.dump(2) << '\n';
        return 0;
    } catch (const Error& e) {
        err << "error: " << e.what() << '\n';
        return exit_code_for(e.kind());
    } catch (const nlohmann::json::exception& e) {
        err << "error: malformed input: " << e.what() << '\n';
        return 2;
    } catch (const std::exception& e) {
        err << "internal error: " << e.what() << '\n';
        return 1;
    }
}

}  // namespace medaudit
