"""Shared test helpers: a reference oracle and seeded input generators.

The propagation oracle is written against the documented semantics, not
against the implementation: it enumerates paths outright instead of
running a fixpoint, so the two can only agree by computing the same
function.
"""

from __future__ import annotations

import random

from riskweaver import (
    ActorClass,
    Asset,
    AssetKind,
    ChannelFailureMode,
    Component,
    ComponentKind,
    CompromiseMode,
    ControlAction,
    CorasBlock,
    CorasEdge,
    CorasEdgeKind,
    CorasKind,
    CorasNode,
    FeedbackLink,
    Hazard,
    Loss,
    QualitativeLevel,
    RiskGraph,
    ScoreOverride,
    StrideCategory,
    SystemModel,
)

LEVELS = tuple(QualitativeLevel)

_PROPAGATED = (CorasKind.THREAT_SCENARIO, CorasKind.UNWANTED_INCIDENT)


def oracle_propagate(graph: RiskGraph) -> dict[str, QualitativeLevel | None]:
    """Likelihood per scenario/incident id by brute-force path enumeration.

    value(X) = max over admissible chains B -> ... -> X of
    min(base value of B, every gate on the way), where a gate is the edge's
    conditional likelihood or High. Bases are explicitly assigned nodes and
    unassigned initiated scenarios with no incoming leads-to (worth Medium).
    Chains never pass through an explicitly assigned node: its fixed value
    feeds forward regardless of what flows into it. Unreachable nodes map
    to None.
    """
    targets = {n.id: n for n in graph.nodes if n.kind in _PROPAGATED}
    leads = [e for e in graph.edges if e.kind is CorasEdgeKind.LEADS_TO]
    fed = {e.target for e in leads}

    def initiated(node_id: str) -> bool:
        for edge in graph.edges:
            if edge.target != node_id:
                continue
            if edge.kind is CorasEdgeKind.INITIATES:
                return True
            if edge.kind is CorasEdgeKind.EXPLOITS:
                source = next(
                    (n for n in graph.nodes if n.id == edge.source), None
                )
                if source is not None and source.kind is CorasKind.VULNERABILITY:
                    return True
        return False

    bases: dict[str, QualitativeLevel] = {}
    for node_id, node in targets.items():
        if node.likelihood is not None:
            bases[node_id] = node.likelihood
        elif node_id not in fed and initiated(node_id):
            bases[node_id] = QualitativeLevel.MEDIUM

    outgoing: dict[str, list[CorasEdge]] = {}
    for edge in leads:
        outgoing.setdefault(edge.source, []).append(edge)

    best: dict[str, QualitativeLevel] = dict(bases)

    def walk(node_id: str, value: QualitativeLevel, seen: frozenset[str]) -> None:
        for edge in outgoing.get(node_id, ()):
            nxt = edge.target
            if nxt in seen or nxt not in targets:
                continue
            if targets[nxt].likelihood is not None:
                continue  # chains stop at explicit assignments
            gate = edge.conditional_likelihood or QualitativeLevel.HIGH
            reached = min(value, gate)
            prev = best.get(nxt)
            if prev is None or reached > prev:
                best[nxt] = reached
            walk(nxt, reached, seen | {nxt})

    for node_id, value in bases.items():
        walk(node_id, value, frozenset({node_id}))
    return {node_id: best.get(node_id) for node_id in targets}


def random_risk_graph(rng: random.Random) -> RiskGraph:
    """A structurally valid risk graph of at most 12 nodes.

    Node order [actors, vulns, scenarios, incidents, asset] doubles as a
    topological order; every edge points forward, so the graph is a DAG by
    construction. Likelihood coverage is deliberately spotty: some nodes
    explicit, some derivable, some unresolvable.
    """
    n_actors = rng.randint(0, 2)
    n_vulns = rng.randint(0, 2)
    n_incidents = rng.randint(0, 2)
    budget = 12 - n_actors - n_vulns - n_incidents - (1 if n_incidents else 0)
    n_scenarios = rng.randint(1, budget)

    nodes: list[CorasNode] = []
    edges: list[CorasEdge] = []
    actors = [f"A{i}" for i in range(1, n_actors + 1)]
    vulns = [f"V{i}" for i in range(1, n_vulns + 1)]
    scenarios = [f"S{i}" for i in range(1, n_scenarios + 1)]
    incidents = [f"U{i}" for i in range(1, n_incidents + 1)]

    for actor in actors:
        nodes.append(
            CorasNode(
                actor,
                CorasKind.THREAT_ACTOR,
                f"actor {actor}",
                actor_class=rng.choice(tuple(ActorClass)),
            )
        )
    for vuln in vulns:
        nodes.append(CorasNode(vuln, CorasKind.VULNERABILITY, f"weakness {vuln}"))
    for index, scenario in enumerate(scenarios):
        likelihood = rng.choice(LEVELS) if rng.random() < 0.35 else None
        nodes.append(
            CorasNode(
                scenario,
                CorasKind.THREAT_SCENARIO,
                f"scenario {scenario}",
                likelihood=likelihood,
            )
        )
        for earlier in scenarios[:index]:
            if rng.random() < 0.35:
                edges.append(_leads_to(rng, earlier, scenario))
    for incident in incidents:
        likelihood = rng.choice(LEVELS) if rng.random() < 0.15 else None
        nodes.append(
            CorasNode(
                incident,
                CorasKind.UNWANTED_INCIDENT,
                f"incident {incident}",
                likelihood=likelihood,
            )
        )
        for scenario in scenarios:
            if rng.random() < 0.4:
                edges.append(_leads_to(rng, scenario, incident))

    for actor in actors:
        if vulns and rng.random() < 0.6:
            edges.append(CorasEdge(actor, rng.choice(vulns), CorasEdgeKind.EXPLOITS))
        if rng.random() < 0.6:
            edges.append(
                CorasEdge(actor, rng.choice(scenarios), CorasEdgeKind.INITIATES)
            )
    for vuln in vulns:
        if rng.random() < 0.8:
            edges.append(
                CorasEdge(vuln, rng.choice(scenarios), CorasEdgeKind.EXPLOITS)
            )

    if incidents:
        nodes.append(CorasNode("AST", CorasKind.ASSET_REF, "the asset"))
        for incident in incidents:
            edges.append(
                CorasEdge(
                    incident,
                    "AST",
                    CorasEdgeKind.IMPACTS,
                    consequence=rng.choice(LEVELS),
                )
            )
    return RiskGraph(tuple(nodes), tuple(edges), model_ref="generated")


def _leads_to(rng: random.Random, source: str, target: str) -> CorasEdge:
    cond = rng.choice(LEVELS) if rng.random() < 0.5 else None
    return CorasEdge(source, target, CorasEdgeKind.LEADS_TO, conditional_likelihood=cond)


# Label fragments for generated names; the specials exercise escaping.
_WORDS = (
    "pump", "valve", "relay", "bus", "gateway", "uplink", "tank",
    "monitor", "beacon", "ledger", "рrocess", "naïve", "Δ-phase",
)
_SPECIALS = ('"', "\\", "\n", "\t", "  ", "#", "''")


def random_text(rng: random.Random, allow_empty: bool = True) -> str:
    if allow_empty and rng.random() < 0.05:
        return ""
    parts = [rng.choice(_WORDS) for _ in range(rng.randint(1, 3))]
    if rng.random() < 0.3:
        parts.insert(rng.randrange(len(parts) + 1), rng.choice(_SPECIALS))
    return " ".join(parts)


def _ident(rng: random.Random, prefix: str, number: int) -> str:
    suffix = rng.choice(("", "_", "x")) if rng.random() < 0.2 else ""
    return f"{prefix}{number}{suffix}"


def random_model(rng: random.Random) -> SystemModel:
    """A random model that passes validate(), coras block and all.

    Ids come from disjoint prefixes per namespace, so uniqueness and
    non-collision with asset ids hold by construction. Connectivity is
    guaranteed by a feedback spine over the components.
    """
    n_comp = rng.randint(1, 6)
    components = tuple(
        Component(
            _ident(rng, "C", i),
            random_text(rng),
            rng.choice(tuple(ComponentKind)),
            internet_exposure=rng.choice(LEVELS),
            compromise_modes=tuple(
                rng.sample(tuple(CompromiseMode), rng.randint(0, 3))
            ),
        )
        for i in range(1, n_comp + 1)
    )
    comp_ids = [c.id for c in components]
    commanding = [
        c.id
        for c in components
        if c.kind in (ComponentKind.CONTROLLER, ComponentKind.HUMAN_OPERATOR)
    ]

    feedback = []
    for i in range(1, n_comp):
        feedback.append(
            FeedbackLink(
                f"F{i}",
                random_text(rng),
                comp_ids[i],
                comp_ids[rng.randrange(i)],
                subject_to_delay=rng.random() < 0.4,
            )
        )

    losses = tuple(
        Loss(f"L{i}", random_text(rng, allow_empty=False))
        for i in range(1, rng.randint(0, 4) + 1)
    )
    hazards = tuple(
        Hazard(
            f"H{i}",
            random_text(rng),
            tuple(rng.sample([l.id for l in losses], rng.randint(1, len(losses)))),
        )
        for i in range(1, rng.randint(0, 3) + 1)
        if losses
    )

    actions = []
    upstream = []
    if commanding and n_comp >= 2:
        for i in range(1, rng.randint(0, 3) + 1):
            source = rng.choice(commanding)
            target = rng.choice([c for c in comp_ids if c != source])
            actions.append(
                ControlAction(
                    f"CA{i}",
                    random_text(rng),
                    source,
                    target,
                    parameters=tuple(
                        f"p{j}" for j in range(1, rng.randint(0, 3) + 1)
                    ),
                    channel_failure_modes=tuple(
                        rng.sample(tuple(ChannelFailureMode), rng.randint(0, 2))
                    ),
                    hazards=tuple(
                        rng.sample([h.id for h in hazards], rng.randint(0, len(hazards)))
                    ),
                )
            )
            others = [c for c in commanding if c != source]
            if others and rng.random() < 0.4:
                upstream.append(
                    (
                        f"CA{i}",
                        tuple(rng.sample(others, rng.randint(1, len(others)))),
                    )
                )

    assets = []
    for i in range(1, rng.randint(0, 4) + 1):
        if rng.random() < 0.5:
            assets.append(
                Asset(f"AS{i}", random_text(rng), AssetKind.DIRECT, rng.choice(comp_ids))
            )
        else:
            assets.append(Asset(f"AS{i}", random_text(rng), AssetKind.INDIRECT))

    overrides = []
    for comp in rng.sample(comp_ids, min(len(comp_ids), rng.randint(0, 2))):
        impact = rng.choice(LEVELS) if rng.random() < 0.7 else None
        likelihood = rng.choice(LEVELS) if impact is None or rng.random() < 0.3 else None
        overrides.append(
            ScoreOverride(comp, rng.choice(tuple(StrideCategory)), impact, likelihood)
        )

    coras = _random_block(rng, [a.id for a in assets]) if rng.random() < 0.6 else None

    return SystemModel(
        name=random_text(rng, allow_empty=False),
        components=components,
        control_actions=tuple(actions),
        feedback_links=tuple(feedback),
        losses=losses,
        hazards=hazards,
        assets=tuple(assets),
        upstream=tuple(upstream),
        overrides=tuple(overrides),
        coras=coras,
    )


def tiny_model() -> SystemModel:
    """Two components, one action, one hazard; the smallest useful model."""
    return SystemModel(
        name="Tiny",
        components=(
            Component(
                "CTRL",
                "Main controller",
                ComponentKind.CONTROLLER,
                internet_exposure=QualitativeLevel.MEDIUM,
                compromise_modes=(CompromiseMode.EXTERNAL_ATTACKER,),
            ),
            Component("ACT", "Drive actuator", ComponentKind.ACTUATOR),
        ),
        control_actions=(
            ControlAction(
                "CA1", "actuate", "CTRL", "ACT", parameters=("rate",), hazards=("H1",)
            ),
        ),
        feedback_links=(
            FeedbackLink("F1", "drive state", "ACT", "CTRL", subject_to_delay=True),
        ),
        losses=(Loss("L1", "Loss of service"),),
        hazards=(Hazard("H1", "Process out of range", ("L1",)),),
        assets=(Asset("AS1", "Plant", AssetKind.DIRECT, "ACT"),),
    )


def _random_block(rng: random.Random, asset_ids: list[str]) -> CorasBlock:
    """Declared nodes only (no asset refs); treatments and treats last."""
    actors = [f"RA{i}" for i in range(1, rng.randint(0, 2) + 1)]
    vulns = [f"RV{i}" for i in range(1, rng.randint(0, 2) + 1)]
    scenarios = [f"RS{i}" for i in range(1, rng.randint(1, 4) + 1)]
    incidents = [f"RI{i}" for i in range(1, rng.randint(0, 2) + 1)]
    treatments = [f"RT{i}" for i in range(1, rng.randint(0, 2) + 1)]

    nodes: list[CorasNode] = []
    edges: list[CorasEdge] = []
    for actor in actors:
        nodes.append(
            CorasNode(
                actor,
                CorasKind.THREAT_ACTOR,
                random_text(rng),
                actor_class=rng.choice(tuple(ActorClass)),
            )
        )
    for vuln in vulns:
        nodes.append(CorasNode(vuln, CorasKind.VULNERABILITY, random_text(rng)))
    for index, scenario in enumerate(scenarios):
        nodes.append(
            CorasNode(
                scenario,
                CorasKind.THREAT_SCENARIO,
                random_text(rng),
                likelihood=rng.choice(LEVELS) if rng.random() < 0.4 else None,
            )
        )
        for earlier in scenarios[:index]:
            if rng.random() < 0.3:
                edges.append(_leads_to(rng, earlier, scenario))
    for incident in incidents:
        nodes.append(
            CorasNode(incident, CorasKind.UNWANTED_INCIDENT, random_text(rng))
        )
        for scenario in scenarios:
            if rng.random() < 0.4:
                edges.append(_leads_to(rng, scenario, incident))
        for asset_id in asset_ids:
            if rng.random() < 0.5:
                edges.append(
                    CorasEdge(
                        incident,
                        asset_id,
                        CorasEdgeKind.IMPACTS,
                        consequence=rng.choice(LEVELS) if rng.random() < 0.8 else None,
                    )
                )
    for actor in actors:
        if vulns and rng.random() < 0.6:
            edges.append(CorasEdge(actor, rng.choice(vulns), CorasEdgeKind.EXPLOITS))
        if rng.random() < 0.5:
            edges.append(
                CorasEdge(actor, rng.choice(scenarios), CorasEdgeKind.INITIATES)
            )
    for vuln in vulns:
        if rng.random() < 0.7:
            edges.append(
                CorasEdge(vuln, rng.choice(scenarios), CorasEdgeKind.EXPLOITS)
            )

    treatable = vulns + scenarios + incidents
    for treatment in treatments:
        nodes.append(CorasNode(treatment, CorasKind.TREATMENT, random_text(rng)))
        for target in rng.sample(treatable, rng.randint(0, min(2, len(treatable)))):
            edges.append(CorasEdge(treatment, target, CorasEdgeKind.TREATS))
    return CorasBlock(tuple(nodes), tuple(edges))
