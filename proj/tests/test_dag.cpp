#include <doctest.h>

#include "medaudit/dag.hpp"
#include "medaudit/error.hpp"
#include "medaudit/rng.hpp"

#include <algorithm>
#include <functional>
#include <numeric>

using namespace medaudit;

namespace {

ErrorKind kind_of(const CreditDag& dag) {
    try {
        validate_dag(dag);
    } catch (const Error& e) {
        return e.kind();
    }
    return ErrorKind::Io;  // sentinel for "no error"
}

CreditDag plain_graph(int nodes, const std::vector<DagEdge>& edges) {
    CreditDag dag;
    for (int v = 0; v < nodes; ++v) dag.nodes.push_back({"n" + std::to_string(v), NodeRole::covariate});
    dag.edges = edges;
    return dag;
}

// Independent oracle: a graph is acyclic iff some vertex order puts every edge forward.
bool acyclic_by_permutation(int nodes, const std::vector<std::pair<int, int>>& edges) {
    std::vector<int> order(nodes);
    std::iota(order.begin(), order.end(), 0);
    do {
        std::vector<int> pos(nodes);
        for (int i = 0; i < nodes; ++i) pos[order[i]] = i;
        bool ok = true;
        for (auto [f, t] : edges)
            if (pos[f] >= pos[t]) ok = false;
        if (ok) return true;
    } while (std::next_permutation(order.begin(), order.end()));
    return false;
}

// Independent oracle: three-colour DFS.
bool acyclic_by_dfs(int nodes, const std::vector<std::pair<int, int>>& edges) {
    std::vector<std::vector<int>> adj(nodes);
    for (auto [f, t] : edges) adj[f].push_back(t);
    std::vector<int> colour(nodes, 0);
    std::function<bool(int)> visit = [&](int v) {
        colour[v] = 1;
        for (int t : adj[v]) {
            if (colour[t] == 1) return false;
            if (colour[t] == 0 && !visit(t)) return false;
        }
        colour[v] = 2;
        return true;
    };
    for (int v = 0; v < nodes; ++v)
        if (colour[v] == 0 && !visit(v)) return false;
    return true;
}

std::vector<DagEdge> named(const std::vector<std::pair<int, int>>& edges) {
    std::vector<DagEdge> out;
    for (auto [f, t] : edges) out.emplace_back("n" + std::to_string(f), "n" + std::to_string(t));
    return out;
}

}  // namespace

TEST_CASE("full lending graph with an unmeasured node violates SI2") {
    const auto dag = standard_dag({"w"}, "a", {"m"}, "y", true);
    const auto report = validate_dag(dag);
    CHECK(report.si2_violated);
    CHECK(report.si2_witness_mediator == "m");
    CHECK(report.msi1_plausible);
    CHECK(report.msi2_plausible);
    CHECK(report.msi_status == "asserted given the declared DAG");
    CHECK_FALSE(report.positivity_checked);
}

TEST_CASE("without the unmeasured node SI2 holds") {
    const auto report = validate_dag(standard_dag({"w"}, "a", {"m"}, "y", false));
    CHECK_FALSE(report.si2_violated);
}

TEST_CASE("edge out of the outcome is a role violation") {
    auto dag = standard_dag({"w"}, "a", {"m"}, "y", false);
    dag.forbidden_edges.clear();
    dag.edges.emplace_back("y", "m");
    CHECK(kind_of(dag) == ErrorKind::RoleViolation);
}

TEST_CASE("structural errors") {
    auto base = standard_dag({"w"}, "a", {"m1", "m2"}, "y", true);
    base.forbidden_edges.clear();

    auto cyc = base;
    cyc.edges.emplace_back("m2", "m1");
    cyc.edges.emplace_back("m1", "m2");
    CHECK(kind_of(cyc) == ErrorKind::CyclicGraph);

    auto into_u = base;
    into_u.edges.emplace_back("w", "unmeasured_structural");
    CHECK(kind_of(into_u) == ErrorKind::RoleViolation);

    auto two_treat = base;
    two_treat.nodes.push_back({"a2", NodeRole::treatment});
    CHECK(kind_of(two_treat) == ErrorKind::RoleViolation);

    auto req = base;
    req.required_edges = {{"m1", "y"}};
    CHECK(kind_of(req) == ErrorKind::Io);
    req.edges.erase(std::find(req.edges.begin(), req.edges.end(), DagEdge{"m1", "y"}));
    CHECK(kind_of(req) == ErrorKind::MissingRequiredEdge);

    auto forb = base;
    forb.forbidden_edges = {{"w", "y"}};
    CHECK(kind_of(forb) == ErrorKind::RoleViolation);
}

TEST_CASE("unmeasured parent of the treatment makes MSI implausible") {
    auto dag = standard_dag({"w"}, "a", {"m"}, "y", true);
    dag.edges.emplace_back("unmeasured_structural", "a");
    const auto report = validate_dag(dag);
    CHECK_FALSE(report.msi1_plausible);
    CHECK_FALSE(report.msi2_plausible);
}

TEST_CASE("default credit graph") {
    const auto dag = default_credit_dag();
    CHECK(dag.names_with_role(NodeRole::mediator).size() == 4);
    CHECK(dag.names_with_role(NodeRole::covariate).size() == 2);
    const auto report = validate_dag(dag);
    CHECK(report.si2_violated);
    CHECK(dag.has_edge("dti", "denied"));
    CHECK(dag.has_edge("credit_score_quintile", "denied"));
    CHECK(dag_from_json(to_json(dag)) == dag);
    CHECK(dag_from_json(Json::parse(to_json(dag).dump())) == dag);
}

TEST_CASE("acyclicity agrees with permutation oracle on every graph up to 4 nodes") {
    for (int nodes = 1; nodes <= 4; ++nodes) {
        std::vector<std::pair<int, int>> slots;
        for (int f = 0; f < nodes; ++f)
            for (int t = 0; t < nodes; ++t)
                if (f != t) slots.emplace_back(f, t);
        const std::uint64_t total = 1ull << slots.size();
        for (std::uint64_t mask = 0; mask < total; ++mask) {
            std::vector<std::pair<int, int>> edges;
            for (std::size_t s = 0; s < slots.size(); ++s)
                if (mask >> s & 1) edges.push_back(slots[s]);
            const bool expected = acyclic_by_permutation(nodes, edges);
            REQUIRE(is_acyclic(plain_graph(nodes, named(edges))) == expected);
        }
    }
}

TEST_CASE("acyclicity agrees with oracles on random graphs up to 8 nodes") {
    Rng rng(2024);
    for (int trial = 0; trial < 3000; ++trial) {
        const int nodes = 5 + static_cast<int>(rng.index(4));
        const double density = rng.uniform(0.05, 0.4);
        std::vector<std::pair<int, int>> edges;
        for (int f = 0; f < nodes; ++f)
            for (int t = 0; t < nodes; ++t)
                if (f != t && rng.bernoulli(density)) edges.emplace_back(f, t);
        const bool got = is_acyclic(plain_graph(nodes, named(edges)));
        REQUIRE(got == acyclic_by_dfs(nodes, edges));
        if (nodes <= 6) REQUIRE(got == acyclic_by_permutation(nodes, edges));
    }
}

TEST_CASE("SI2 flag equals brute-force edge-pair condition") {
    Rng rng(77);
    for (int trial = 0; trial < 500; ++trial) {
        CreditDag dag;
        dag.nodes = {{"w", NodeRole::covariate}, {"a", NodeRole::treatment}, {"m1", NodeRole::mediator},
                     {"m2", NodeRole::mediator},  {"u1", NodeRole::unmeasured}, {"u2", NodeRole::unmeasured},
                     {"y", NodeRole::outcome}};
        const std::vector<DagEdge> candidates = {{"w", "a"},   {"w", "m1"},  {"a", "m1"},  {"a", "m2"},
                                                 {"m1", "y"},  {"m2", "y"},  {"a", "y"},   {"u1", "m1"},
                                                 {"u1", "m2"}, {"u1", "y"},  {"u2", "m2"}, {"u2", "y"},
                                                 {"u1", "u2"}, {"m1", "m2"}, {"u2", "w"}};
        for (const auto& e : candidates)
            if (rng.bernoulli(0.5)) dag.edges.push_back(e);
        bool expected = false;
        for (const auto& u : {"u1", "u2"})
            for (const auto& m : {"m1", "m2"})
                if (dag.has_edge(u, m) && dag.has_edge(u, "y")) expected = true;
        CHECK(validate_dag(dag).si2_violated == expected);
    }
}
