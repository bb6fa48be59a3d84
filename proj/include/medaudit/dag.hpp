#pragma once

#include "medaudit/json.hpp"

#include <string>
#include <utility>
#include <vector>

namespace medaudit {

enum class NodeRole { covariate, treatment, mediator, outcome, unmeasured };

const char* to_string(NodeRole role);
NodeRole node_role_from_string(const std::string& s);

struct DagNode {
    std::string name;
    NodeRole role;

    bool operator==(const DagNode&) const = default;
};

using DagEdge = std::pair<std::string, std::string>;

// Declared credit-decision graph. The graph is configuration: nothing here is
// learned from data.
struct CreditDag {
    std::vector<DagNode> nodes;
    std::vector<DagEdge> edges;
    std::vector<DagEdge> required_edges;
    std::vector<DagEdge> forbidden_edges;

    bool operator==(const CreditDag&) const = default;

    const DagNode* find(const std::string& name) const;
    std::vector<std::string> names_with_role(NodeRole role) const;
    bool has_edge(const std::string& from, const std::string& to) const;
};

struct AssumptionReport {
    // An unmeasured node with edges into both a mediator and the outcome.
    bool si2_violated = false;
    std::string si2_witness_unmeasured;
    std::string si2_witness_mediator;
    // Structural plausibility only: no unmeasured parent of the treatment.
    // These can never be verified from data.
    bool msi1_plausible = true;
    bool msi2_plausible = true;
    bool positivity_checked = false;  // positivity is screened by dataset validation
    std::string msi_status;           // "asserted given the declared DAG" or reason it is implausible
};

// Throws CyclicGraph, RoleViolation, or MissingRequiredEdge.
AssumptionReport validate_dag(const CreditDag& dag);

// True when some ordering of the nodes puts every edge forward.
bool is_acyclic(const CreditDag& dag);

// The default lending graph: two tract covariates, race as treatment, four
// financial mediators, one unmeasured structural node, and denial as outcome.
CreditDag default_credit_dag();

// Graph for a dataset with the given covariate/mediator names, shaped like the
// default graph (full W->A, W->M, W->Y, A->M, A->Y, M->Y, and U->M, U->Y).
CreditDag standard_dag(const std::vector<std::string>& covariates, const std::string& treatment,
                       const std::vector<std::string>& mediators, const std::string& outcome,
                       bool with_unmeasured = true);

Json to_json(const CreditDag& dag);
CreditDag dag_from_json(const Json& j);

Json to_json(const AssumptionReport& report);

}  // namespace medaudit
