#include "medaudit/dag.hpp"

#include "medaudit/error.hpp"

#include <algorithm>
#include <map>
#include <set>

namespace medaudit {

const char* to_string(NodeRole role) {
    switch (role) {
        case NodeRole::covariate: return "covariate";
        case NodeRole::treatment: return "treatment";
        case NodeRole::mediator: return "mediator";
        case NodeRole::outcome: return "outcome";
        case NodeRole::unmeasured: return "unmeasured";
    }
    return "unknown";
}

NodeRole node_role_from_string(const std::string& s) {
    if (s == "covariate") return NodeRole::covariate;
    if (s == "treatment") return NodeRole::treatment;
    if (s == "mediator") return NodeRole::mediator;
    if (s == "outcome") return NodeRole::outcome;
    if (s == "unmeasured") return NodeRole::unmeasured;
    throw Error(ErrorKind::RoleViolation, "unknown node role '" + s + "'");
}

const DagNode* CreditDag::find(const std::string& name) const {
    for (const auto& node : nodes)
        if (node.name == name) return &node;
    return nullptr;
}

std::vector<std::string> CreditDag::names_with_role(NodeRole role) const {
    std::vector<std::string> out;
    for (const auto& node : nodes)
        if (node.role == role) out.push_back(node.name);
    return out;
}

bool CreditDag::has_edge(const std::string& from, const std::string& to) const {
    return std::find(edges.begin(), edges.end(), DagEdge{from, to}) != edges.end();
}

bool is_acyclic(const CreditDag& dag) {
    std::map<std::string, std::size_t> index;
    for (const auto& node : dag.nodes) index.emplace(node.name, index.size());
    std::vector<std::vector<std::size_t>> out(index.size());
    std::vector<std::size_t> indegree(index.size(), 0);
    for (const auto& [from, to] : dag.edges) {
        const auto f = index.find(from);
        const auto t = index.find(to);
        if (f == index.end() || t == index.end()) continue;
        out[f->second].push_back(t->second);
        ++indegree[t->second];
    }
    std::vector<std::size_t> ready;
    for (std::size_t v = 0; v < indegree.size(); ++v)
        if (indegree[v] == 0) ready.push_back(v);
    std::size_t visited = 0;
    while (!ready.empty()) {
        const std::size_t v = ready.back();
        ready.pop_back();
        ++visited;
        for (const std::size_t t : out[v])
            if (--indegree[t] == 0) ready.push_back(t);
    }
    return visited == index.size();
}

AssumptionReport validate_dag(const CreditDag& dag) {
    std::set<std::string> seen;
    for (const auto& node : dag.nodes) {
        if (node.name.empty()) throw Error(ErrorKind::RoleViolation, "node with empty name");
        if (!seen.insert(node.name).second)
            throw Error(ErrorKind::RoleViolation, "duplicate node '" + node.name + "'");
    }
    const auto treatments = dag.names_with_role(NodeRole::treatment);
    const auto outcomes = dag.names_with_role(NodeRole::outcome);
    if (treatments.size() != 1) throw Error(ErrorKind::RoleViolation, "graph needs exactly one treatment node");
    if (outcomes.size() != 1) throw Error(ErrorKind::RoleViolation, "graph needs exactly one outcome node");

    auto check_known = [&](const DagEdge& e, const char* what) {
        if (!dag.find(e.first) || !dag.find(e.second))
            throw Error(ErrorKind::RoleViolation,
                        std::string(what) + " " + e.first + "->" + e.second + " names an undeclared node");
        if (e.first == e.second) throw Error(ErrorKind::CyclicGraph, "self-loop on '" + e.first + "'");
    };
    for (const auto& e : dag.edges) check_known(e, "edge");
    for (const auto& e : dag.required_edges) check_known(e, "required edge");
    for (const auto& e : dag.forbidden_edges) check_known(e, "forbidden edge");

    for (const auto& [from, to] : dag.edges) {
        const NodeRole src = dag.find(from)->role;
        const NodeRole dst = dag.find(to)->role;
        if (src == NodeRole::outcome)
            throw Error(ErrorKind::RoleViolation, "edge " + from + "->" + to + " leaves the outcome");
        if (dst == NodeRole::unmeasured && src != NodeRole::unmeasured)
            throw Error(ErrorKind::RoleViolation, "measured node " + from + " points into unmeasured " + to);
    }
    if (!is_acyclic(dag)) throw Error(ErrorKind::CyclicGraph, "graph contains a directed cycle");

    for (const auto& e : dag.forbidden_edges)
        if (dag.has_edge(e.first, e.second))
            throw Error(ErrorKind::RoleViolation, "forbidden edge " + e.first + "->" + e.second + " is present");
    for (const auto& e : dag.required_edges)
        if (!dag.has_edge(e.first, e.second))
            throw Error(ErrorKind::MissingRequiredEdge, "required edge " + e.first + "->" + e.second + " is absent");

    AssumptionReport report;
    const std::string& treatment = treatments.front();
    const std::string& outcome = outcomes.front();
    for (const auto& u : dag.names_with_role(NodeRole::unmeasured)) {
        if (dag.has_edge(u, treatment)) {
            report.msi1_plausible = false;
            report.msi2_plausible = false;
            report.msi_status = "implausible: unmeasured '" + u + "' points into the treatment";
        }
        if (!report.si2_violated && dag.has_edge(u, outcome)) {
            for (const auto& m : dag.names_with_role(NodeRole::mediator)) {
                if (dag.has_edge(u, m)) {
                    report.si2_violated = true;
                    report.si2_witness_unmeasured = u;
                    report.si2_witness_mediator = m;
                    break;
                }
            }
        }
    }
    if (report.msi1_plausible) report.msi_status = "asserted given the declared DAG";
    return report;
}

CreditDag standard_dag(const std::vector<std::string>& covariates, const std::string& treatment,
                       const std::vector<std::string>& mediators, const std::string& outcome,
                       bool with_unmeasured) {
    CreditDag dag;
    for (const auto& w : covariates) dag.nodes.push_back({w, NodeRole::covariate});
    dag.nodes.push_back({treatment, NodeRole::treatment});
    for (const auto& m : mediators) dag.nodes.push_back({m, NodeRole::mediator});
    const std::string u = "unmeasured_structural";
    if (with_unmeasured) dag.nodes.push_back({u, NodeRole::unmeasured});
    dag.nodes.push_back({outcome, NodeRole::outcome});

    for (const auto& w : covariates) {
        dag.edges.emplace_back(w, treatment);
        for (const auto& m : mediators) dag.edges.emplace_back(w, m);
        dag.edges.emplace_back(w, outcome);
    }
    for (const auto& m : mediators) dag.edges.emplace_back(treatment, m);
    dag.edges.emplace_back(treatment, outcome);
    for (const auto& m : mediators) dag.edges.emplace_back(m, outcome);
    if (with_unmeasured) {
        for (const auto& m : mediators) dag.edges.emplace_back(u, m);
        dag.edges.emplace_back(u, outcome);
    }
    for (const auto& node : dag.nodes)
        if (node.name != outcome) dag.forbidden_edges.emplace_back(outcome, node.name);
    return dag;
}

CreditDag default_credit_dag() {
    CreditDag dag = standard_dag({"tract_to_msa_income_percentage", "tract_minority_population_percent"}, "race",
                                  {"dti", "ltv", "income_quintile", "credit_score_quintile"}, "denied");
    dag.required_edges = {{"dti", "denied"}, {"credit_score_quintile", "denied"}};
    return dag;
}

namespace {

Json edges_to_json(const std::vector<DagEdge>& edges) {
    Json out = Json::array();
    for (const auto& [from, to] : edges) out.push_back({from, to});
    return out;
}

std::vector<DagEdge> edges_from_json(const Json& j, const char* key) {
    std::vector<DagEdge> out;
    if (!j.contains(key)) return out;
    for (const auto& e : j.at(key)) {
        if (!e.is_array() || e.size() != 2)
            throw Error(ErrorKind::RoleViolation, std::string(key) + " entries must be [from, to]");
        out.emplace_back(e[0].get<std::string>(), e[1].get<std::string>());
    }
    return out;
}

}  // namespace

Json to_json(const CreditDag& dag) {
    Json nodes = Json::array();
    for (const auto& node : dag.nodes) nodes.push_back({{"name", node.name}, {"role", to_string(node.role)}});
    Json j;
    j["nodes"] = nodes;
    j["edges"] = edges_to_json(dag.edges);
    j["required_edges"] = edges_to_json(dag.required_edges);
    j["forbidden_edges"] = edges_to_json(dag.forbidden_edges);
    return j;
}

CreditDag dag_from_json(const Json& j) {
    CreditDag dag;
    try {
        for (const auto& node : j.at("nodes"))
            dag.nodes.push_back({node.at("name").get<std::string>(),
                                 node_role_from_string(node.at("role").get<std::string>())});
        dag.edges = edges_from_json(j, "edges");
        dag.required_edges = edges_from_json(j, "required_edges");
        dag.forbidden_edges = edges_from_json(j, "forbidden_edges");
    } catch (const nlohmann::json::exception& e) {
        throw Error(ErrorKind::RoleViolation, std::string("malformed DAG JSON: ") + e.what());
    }
    return dag;
}

Json to_json(const AssumptionReport& report) {
    Json j;
    j["si2_violated"] = report.si2_violated;
    if (report.si2_violated)
        j["si2_witness"] = {{"unmeasured", report.si2_witness_unmeasured},
                            {"mediator", report.si2_witness_mediator}};
    j["msi1_plausible"] = report.msi1_plausible;
    j["msi2_plausible"] = report.msi2_plausible;
    j["msi_status"] = report.msi_status;
    j["positivity_checked"] = report.positivity_checked;
    return j;
}

}  // namespace medaudit
