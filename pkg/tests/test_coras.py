from __future__ import annotations

import itertools
import random
from dataclasses import replace

import pytest
from support import oracle_propagate, random_risk_graph, tiny_model

from riskweaver import (
    ActorClass,
    CorasBlock,
    CorasEdge,
    CorasEdgeKind,
    CorasKind,
    CorasNode,
    QualitativeLevel,
    RiskGraph,
    RiskItem,
    Treatment,
    attach_treatments,
    build_graph,
    check_graph,
    consequences,
    evaluate_risks,
    propagate_likelihood,
    untreated_vulnerabilities,
)
from riskweaver.coras import DEFAULT_INITIATED_LIKELIHOOD

L, M, H = QualitativeLevel.LOW, QualitativeLevel.MEDIUM, QualitativeLevel.HIGH

ACTOR = CorasKind.THREAT_ACTOR
VULN = CorasKind.VULNERABILITY
SCEN = CorasKind.THREAT_SCENARIO
INC = CorasKind.UNWANTED_INCIDENT
TREAT = CorasKind.TREATMENT

INITIATES = CorasEdgeKind.INITIATES
EXPLOITS = CorasEdgeKind.EXPLOITS
LEADS_TO = CorasEdgeKind.LEADS_TO
IMPACTS = CorasEdgeKind.IMPACTS
TREATS = CorasEdgeKind.TREATS


def graph(nodes, edges):
    return RiskGraph(tuple(nodes), tuple(edges), "test")


def messages(diags):
    return [d.message for d in diags]


# -- building from a model --------------------------------------------------------


def test_corpus_graph_builds_clean(corpus_model):
    result = build_graph(corpus_model)
    assert result.diagnostics == ()
    g = result.graph
    assert len(g.nodes) == 25
    assert len(g.edges) == 31
    counts = {kind: len(g.nodes_of_kind(kind)) for kind in CorasKind}
    assert counts == {ACTOR: 3, VULN: 4, SCEN: 7, INC: 5, CorasKind.ASSET_REF: 2, TREAT: 4}
    # asset refs are derived in first-reference order and carry asset names
    refs = g.nodes_of_kind(CorasKind.ASSET_REF)
    assert [(n.id, n.label) for n in refs] == [
        ("AV", "Ship availability"),
        ("BTA", "Ballast tank"),
    ]
    assert g.model_ref == corpus_model.name
    assert g.node("ADV").actor_class is ActorClass.DELIBERATE
    with pytest.raises(ValueError, match="unknown graph node"):
        g.node("nope")


def test_build_requires_a_block():
    with pytest.raises(ValueError, match="no risk-scenario block"):
        build_graph(tiny_model())


def build_with(nodes, edges):
    model = replace(tiny_model(), coras=CorasBlock(tuple(nodes), tuple(edges)))
    return build_graph(model)


def test_build_rejects_bad_declarations():
    result = build_with(
        [
            CorasNode("S1", SCEN, "s"),
            CorasNode("S1", SCEN, "again"),
            CorasNode("X", CorasKind.ASSET_REF, "declared by hand"),
            CorasNode("AS1", SCEN, "shadows an asset"),
            CorasNode("A1", ACTOR, "rated actor", likelihood=L, actor_class=ActorClass.DELIBERATE),
        ],
        [],
    )
    assert result.graph is None
    assert messages(result.diagnostics) == [
        "duplicate node id",
        "asset-ref nodes are derived, not declared",
        "node id collides with an asset id",
        "likelihood is only allowed on scenarios and incidents",
    ]
    assert result.diagnostics[0].location == "coras S1"


def test_build_rejects_bad_edges():
    nodes = [
        CorasNode("A1", ACTOR, "a", actor_class=ActorClass.DELIBERATE),
        CorasNode("S1", SCEN, "s", likelihood=M),
        CorasNode("U1", INC, "u"),
    ]
    result = build_with(
        nodes,
        [
            CorasEdge("A1", "U1", INITIATES),
            CorasEdge("GHOST", "S1", LEADS_TO),
            CorasEdge("S1", "GHOST", LEADS_TO),
            CorasEdge("U1", "AS1", IMPACTS, conditional_likelihood=L),
            CorasEdge("S1", "U1", LEADS_TO, consequence=H),
        ],
    )
    assert result.graph is None
    assert messages(result.diagnostics) == [
        "initiates edge not allowed from threat-actor to unwanted-incident",
        "unknown source node 'GHOST'",
        "unknown target node 'GHOST'",
        "conditional likelihood requires leads_to",
        "consequence requires impacts",
        # the annotated impacts edge was dropped, so U1 ends up dangling too
        "incident does not impact any asset",
    ]
    assert result.diagnostics[0].location == "coras-edge 1"


def test_build_rejects_cycles_and_dangling_incidents():
    nodes = [
        CorasNode("S1", SCEN, "s", likelihood=M),
        CorasNode("S2", SCEN, "t"),
        CorasNode("U1", INC, "u"),
    ]
    result = build_with(
        nodes,
        [
            CorasEdge("S1", "S2", LEADS_TO),
            CorasEdge("S2", "S1", LEADS_TO),
            CorasEdge("S2", "U1", LEADS_TO),
        ],
    )
    assert result.graph is None
    msgs = messages(result.diagnostics)
    assert any(m.startswith("cycle detected: ") for m in msgs)
    assert "incident does not impact any asset" in msgs
    # treats edges sit outside the DAG requirement
    ok = build_with(
        [
            CorasNode("S1", SCEN, "s", likelihood=M),
            CorasNode("U1", INC, "u"),
            CorasNode("T9", TREAT, "fix"),
        ],
        [
            CorasEdge("S1", "U1", LEADS_TO),
            CorasEdge("U1", "AS1", IMPACTS, consequence=L),
            CorasEdge("T9", "S1", TREATS),
        ],
    )
    assert ok.diagnostics == ()


# -- propagation -------------------------------------------------------------------


def test_corpus_propagation(corpus_model):
    g = build_graph(corpus_model).graph
    result = propagate_likelihood(g)
    assert result.diagnostics == ()
    values = {n.id: n.likelihood for n in result.graph.nodes if n.kind in (SCEN, INC)}
    assert values == {
        "WParams": M,
        "MalCode": M,
        "WDisplay": M,
        "DoS": M,
        "CmdLoss": M,
        "FbLoss": M,
        "Malf": M,
        "Reroute": L,
        "Collide": L,
        "Speed": M,
        "BallastWL": M,
        "PropStop": M,
    }


def test_propagation_is_idempotent(corpus_model):
    once = propagate_likelihood(build_graph(corpus_model).graph)
    twice = propagate_likelihood(once.graph)
    assert twice.graph == once.graph
    assert twice.diagnostics == ()


def test_explicit_assignment_is_never_overwritten():
    g = graph(
        [CorasNode("S1", SCEN, "s", likelihood=H), CorasNode("S2", SCEN, "t", likelihood=L)],
        [CorasEdge("S1", "S2", LEADS_TO)],
    )
    result = propagate_likelihood(g)
    assert result.graph.node("S2").likelihood is L


def test_initiated_scenarios_default_to_medium():
    g = graph(
        [
            CorasNode("A1", ACTOR, "a", actor_class=ActorClass.ACCIDENTAL),
            CorasNode("V1", VULN, "v"),
            CorasNode("S1", SCEN, "initiated"),
            CorasNode("S2", SCEN, "exploited"),
            CorasNode("S3", SCEN, "orphan"),
        ],
        [
            CorasEdge("A1", "S1", INITIATES),
            CorasEdge("A1", "V1", EXPLOITS),
            CorasEdge("V1", "S2", EXPLOITS),
        ],
    )
    result = propagate_likelihood(g)
    assert result.graph.node("S1").likelihood is DEFAULT_INITIATED_LIKELIHOOD
    assert result.graph.node("S2").likelihood is DEFAULT_INITIATED_LIKELIHOOD
    assert result.graph.node("S3").likelihood is None
    assert [(d.location, d.message) for d in result.diagnostics] == [
        (
            "coras S3",
            "likelihood cannot be resolved: no assignment, no incoming "
            "leads_to, and not initiated by any actor",
        )
    ]


def test_conditional_likelihood_gates_the_flow():
    g = graph(
        [
            CorasNode("S1", SCEN, "s", likelihood=H),
            CorasNode("U1", INC, "gated"),
            CorasNode("U2", INC, "open"),
        ],
        [
            CorasEdge("S1", "U1", LEADS_TO, conditional_likelihood=L),
            CorasEdge("S1", "U2", LEADS_TO),
        ],
    )
    result = propagate_likelihood(g)
    assert result.graph.node("U1").likelihood is L
    assert result.graph.node("U2").likelihood is H


def test_incident_takes_max_over_incoming_paths():
    g = graph(
        [
            CorasNode("S1", SCEN, "weak", likelihood=L),
            CorasNode("S2", SCEN, "strong", likelihood=H),
            CorasNode("U1", INC, "joined"),
        ],
        [CorasEdge("S1", "U1", LEADS_TO), CorasEdge("S2", "U1", LEADS_TO)],
    )
    assert propagate_likelihood(g).graph.node("U1").likelihood is H


def test_propagation_matches_path_enumeration_oracle():
    for seed in range(5000, 5060):
        rng = random.Random(seed)
        g = random_risk_graph(rng)
        expected = oracle_propagate(g)
        result = propagate_likelihood(g)
        got = {
            n.id: n.likelihood
            for n in result.graph.nodes
            if n.kind in (SCEN, INC)
        }
        assert got == expected, f"seed {seed}"
        unresolved = {n_id for n_id, value in expected.items() if value is None}
        assert {d.location.removeprefix("coras ") for d in result.diagnostics} == unresolved


# -- evaluation --------------------------------------------------------------------


def test_corpus_risk_items(corpus_model):
    g = propagate_likelihood(build_graph(corpus_model).graph).graph
    result = evaluate_risks(g, consequences(g))
    assert result.diagnostics == ()
    assert result.items == (
        RiskItem("BallastWL", "AV", M, H, H),
        RiskItem("BallastWL", "BTA", M, H, H),
        RiskItem("PropStop", "AV", M, H, H),
        RiskItem("Collide", "AV", L, H, M),
        RiskItem("Reroute", "AV", L, M, M),
        RiskItem("Speed", "AV", M, M, M),
    )


def test_evaluation_reports_gaps():
    g = graph(
        [
            CorasNode("U1", INC, "unresolved"),
            CorasNode("U2", INC, "unrated", likelihood=M),
        ],
        [
            CorasEdge("U1", "AV", IMPACTS, consequence=H),
            CorasEdge("U2", "AV", IMPACTS),
        ],
    )
    result = evaluate_risks(g, consequences(g))
    assert result.items == ()
    assert messages(result.diagnostics) == [
        "incident likelihood unresolved; run propagation first",
        "no consequence rating for impact of 'U2' on 'AV'",
    ]
    assert result.diagnostics[1].location == "coras-impacts U2->AV"


def test_evaluation_order_is_risk_then_ids():
    nodes = [
        CorasNode("U1", INC, "a", likelihood=H),
        CorasNode("U2", INC, "b", likelihood=L),
        CorasNode("U3", INC, "c", likelihood=H),
    ]
    edges = [
        CorasEdge("U2", "X", IMPACTS, consequence=L),
        CorasEdge("U3", "X", IMPACTS, consequence=H),
        CorasEdge("U1", "X", IMPACTS, consequence=H),
    ]
    items = evaluate_risks(graph(nodes, edges), consequences(graph(nodes, edges))).items
    assert [(i.incident, i.risk) for i in items] == [("U1", H), ("U3", H), ("U2", L)]


# -- treatments --------------------------------------------------------------------


def test_corpus_untreated_vulnerabilities(corpus_model):
    g = build_graph(corpus_model).graph
    assert untreated_vulnerabilities(g) == ("VWL", "VFW")


def test_attach_treatments_generates_fresh_ids():
    g = graph(
        [
            CorasNode("V1", VULN, "hole"),
            CorasNode("V2", VULN, "gap"),
            CorasNode("S1", SCEN, "s", likelihood=M),
            CorasNode("A1", ACTOR, "a", actor_class=ActorClass.DELIBERATE),
            CorasNode("T1", TREAT, "existing"),
        ],
        [CorasEdge("T1", "S1", TREATS)],
    )
    result = attach_treatments(
        g,
        [
            Treatment("patch", ("V1",)),
            Treatment("mixed", ("V2", "GHOST", "A1")),
        ],
    )
    added = [n for n in result.graph.nodes if n.kind is TREAT and n.id != "T1"]
    assert [(n.id, n.label) for n in added] == [("T2", "patch"), ("T3", "mixed")]
    assert CorasEdge("T2", "V1", TREATS) in result.graph.edges
    assert CorasEdge("T3", "V2", TREATS) in result.graph.edges
    assert messages(result.diagnostics) == [
        "unknown target 'GHOST'",
        "cannot treat a threat-actor node",
    ]
    assert result.untreated_vulnerabilities == ()
    assert check_graph(result.graph) == ()


# -- re-checking stitched graphs ----------------------------------------------------


def test_check_graph_accepts_the_corpus(corpus_model):
    assert check_graph(build_graph(corpus_model).graph) == ()


def test_check_graph_flags_stitching_mistakes():
    g = graph(
        [
            CorasNode("S1", SCEN, "s", likelihood=M),
            CorasNode("S1", SCEN, "dup", likelihood=M),
            CorasNode("A1", ACTOR, "classless"),
            CorasNode("U1", INC, "dangling", likelihood=M),
        ],
        [CorasEdge("S1", "GHOST", LEADS_TO)],
    )
    assert messages(check_graph(g)) == [
        "duplicate node id",
        "actor class goes with threat-actor nodes, nothing else",
        "unknown node 'GHOST'",
        "incident does not impact any asset",
    ]


def test_check_graph_finds_cycles_through_any_dag_kind():
    g = graph(
        [
            CorasNode("A1", ACTOR, "a", actor_class=ActorClass.NON_HUMAN),
            CorasNode("V1", VULN, "v"),
            CorasNode("S1", SCEN, "s", likelihood=M),
        ],
        [
            CorasEdge("A1", "V1", EXPLOITS),
            CorasEdge("V1", "S1", EXPLOITS),
            CorasEdge("S1", "V1", EXPLOITS),
        ],
    )
    msgs = messages(check_graph(g))
    assert any(m.startswith("cycle detected: ") for m in msgs)


def test_kind_filters():
    g = graph(
        [CorasNode("S1", SCEN, "s", likelihood=M), CorasNode("U1", INC, "u")],
        [CorasEdge("S1", "U1", LEADS_TO)],
    )
    assert [n.id for n in g.nodes_of_kind(SCEN)] == ["S1"]
    assert g.edges_of_kind(TREATS) == ()
    assert len(list(itertools.chain(g.edges_of_kind(LEADS_TO)))) == 1
