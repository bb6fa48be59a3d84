#include "medaudit/cli.hpp"

#include <CLI11.hpp>

#include <fstream>
#include <map>
#include <iostream>
#include <optional>

using medaudit::Json;

namespace {

// Nested key such as "estimator.k" addresses config["estimator"]["k"].
void set_path(Json& j, const std::string& key, const Json& value) {
    Json* node = &j;
    std::size_t start = 0;
    for (std::size_t dot; (dot = key.find('.', start)) != std::string::npos; start = dot + 1) {
        node = &(*node)[key.substr(start, dot - start)];
        if (!node->is_object()) *node = Json::object();
    }
    (*node)[key.substr(start)] = value;
}

Json load_config(const std::string& path) {
    if (path.empty()) return Json::object();
    std::ifstream in(path);
    if (!in) throw medaudit::Error(medaudit::ErrorKind::Io, "cannot open config " + path);
    try {
        return medaudit::extract_run_config(Json::parse(in));
    } catch (const nlohmann::json::exception& e) {
        throw medaudit::Error(medaudit::ErrorKind::SchemaMismatch, "config is not valid JSON: " + std::string(e.what()));
    }
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Decompose group disparities in binary decisions into interventional direct and indirect effects"};
    app.set_version_flag("--version", std::string(medaudit::kToolVersion));
    app.require_subcommand(1);

    std::string config_path;
    std::map<std::string, std::string> text;
    std::map<std::string, double> reals;
    std::map<std::string, long long> ints;
    std::map<std::string, bool> flags;
    std::vector<double> grid_values;
    std::optional<int> threads;

    auto add_config = [&](CLI::App* sub) {
        sub->add_option("--config", config_path, "JSON config, or any artifact with an embedded run_config");
    };
    auto text_opt = [&](CLI::App* sub, const std::string& flag, const std::string& key, const std::string& help) {
        sub->add_option_function<std::string>(flag, [&text, key](const std::string& v) { text[key] = v; }, help);
    };
    auto int_opt = [&](CLI::App* sub, const std::string& flag, const std::string& key, const std::string& help) {
        sub->add_option_function<long long>(flag, [&ints, key](long long v) { ints[key] = v; }, help);
    };
    auto real_opt = [&](CLI::App* sub, const std::string& flag, const std::string& key, const std::string& help) {
        sub->add_option_function<double>(flag, [&reals, key](double v) { reals[key] = v; }, help);
    };

    auto* ingest = app.add_subcommand("ingest", "Build an audit dataset from an HMDA LAR extract");
    add_config(ingest);
    text_opt(ingest, "--lar", "lar", "LAR CSV file");
    text_opt(ingest, "--cohort", "cohort", "cohort config JSON file");
    text_opt(ingest, "--out", "out", "output prefix");

    auto* estimate = app.add_subcommand("estimate", "Cross-fitted IDE/IIE decomposition with audit record");
    add_config(estimate);
    text_opt(estimate, "--data", "data", "dataset CSV");
    text_opt(estimate, "--schema", "schema", "schema JSON (default: <data>.schema.json)");
    text_opt(estimate, "--dag", "dag", "DAG JSON");
    text_opt(estimate, "--truth", "truth", "truth JSON written by simulate");
    text_opt(estimate, "--out", "out", "output prefix");
    int_opt(estimate, "--k", "estimator.k", "folds");
    int_opt(estimate, "--draws", "estimator.draws", "mediator draws per unit");
    int_opt(estimate, "--seed", "estimator.seed", "seed");
    real_opt(estimate, "--level", "estimator.level", "confidence level");
    text_opt(estimate, "--learner", "estimator.nuisance.learner", "logistic, boosted_trees, or intercept_only");
    estimate->add_flag_function("--monotone", [&](std::int64_t) { flags["estimator.monotone_asserted"] = true; },
                                "assert monotonicity and report natural-effect bounds");
    estimate->add_flag_function("--no-paths", [&](std::int64_t) { flags["paths"] = false; }, "skip path effects");
    estimate->add_option("--threads", threads, "worker threads (default MEDAUDIT_THREADS or all cores)");

    auto* sensitivity = app.add_subcommand("sensitivity", "E-value curves from an audit record");
    add_config(sensitivity);
    text_opt(sensitivity, "--audit", "audit", "audit JSON");
    text_opt(sensitivity, "--out", "out", "curve CSV");
    int_opt(sensitivity, "--grid-points", "grid.points", "log-spaced grid size");
    sensitivity->add_option("--grid", grid_values, "explicit grid of treatment associations");

    auto* paths = app.add_subcommand("paths", "Product-of-coefficients path effects");
    add_config(paths);
    text_opt(paths, "--data", "data", "dataset CSV");
    text_opt(paths, "--schema", "schema", "schema JSON");
    text_opt(paths, "--audit", "audit", "audit JSON supplying the IIE");
    real_opt(paths, "--iie", "iie", "IIE to allocate");
    text_opt(paths, "--out", "out", "output JSON");

    auto* simulate = app.add_subcommand("simulate", "Draw a dataset from a discrete SCM with oracle truth");
    add_config(simulate);
    text_opt(simulate, "--preset", "preset", "named SCM preset");
    text_opt(simulate, "--scm", "scm", "SCM JSON file");
    int_opt(simulate, "--n", "n", "rows");
    int_opt(simulate, "--seed", "seed", "seed");
    text_opt(simulate, "--out", "out", "output prefix");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }

    const std::string command = app.get_subcommands().front()->get_name();
    Json config;
    try {
        config = load_config(config_path);
    } catch (const medaudit::Error& e) {
        std::cerr << "error: " << e.what() << '\n';
        return medaudit::exit_code_for(e.kind());
    }
    for (const auto& [k, v] : text) set_path(config, k, v);
    for (const auto& [k, v] : ints) set_path(config, k, v);
    for (const auto& [k, v] : reals) set_path(config, k, v);
    for (const auto& [k, v] : flags) set_path(config, k, v);
    if (!grid_values.empty()) config["grid"] = Json{{"values", grid_values}};
    if (config.contains("grid") && config["grid"].contains("points") && config["grid"].contains("values"))
        config["grid"].erase(ints.count("grid.points") ? "values" : "points");
    if (text.count("estimator.nuisance.learner"))
        for (const char* part : {"outcome", "propensity", "ratio"}) config["estimator"]["nuisance"].erase(part);
    if (threads) config["threads"] = *threads;
    if (command == "simulate" && text.count("preset")) config.erase("scm");
    if (command == "simulate" && text.count("scm")) config.erase("preset");
    if (command == "paths" && reals.count("iie")) config.erase("audit");
    if (command == "paths" && text.count("audit")) config.erase("iie");

    return medaudit::run_command(command, config, std::cout, std::cerr);
}
